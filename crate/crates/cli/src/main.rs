//! `randinv`: invert randomization tests analytically instead of by grid
//! search. Subcommands emit plot-ready, line-delimited files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use randinv::design::{enumerate_group, q_spans, DesignData, PermGroup, PermMode, SpanKind};
use randinv::invert::{confidence_set, pvalue_curve, Side, StepFunction};
use randinv::oracle::{bench_curve, bench_grid, simulate_size, DgpConfig, TestKind};
use randinv::region::{fast_grid, project_pvalues, region_extract};
use randinv::stats::{
    build_conic, build_dhault, build_diciccio, build_linear, build_rational, ResidualWaldData,
};
use randinv::{Tolerances, Tolerances64};
use randinv_cli::format::{
    render_bench, render_confidence_set, render_curve, render_region, render_simulate, Header,
};
use randinv_cli::ingest::{ingest_csv, ColumnRoles};
use randinv_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "randinv",
    version,
    about = "Exact confidence sets for randomization tests via analytic test inversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the exact p-value curve as a step-function table
    Curve(CurveCmd),
    /// Emit the exact confidence set at level alpha
    Interval(IntervalCmd),
    /// Fast grid search: joint p-value surface, projections, and an
    /// approximate (conservative) confidence region
    Region(RegionCmd),
    /// Compare stored-coefficient evaluation against naive recomputation
    Bench(BenchCmd),
    /// Monte Carlo size simulation under a homoskedastic normal DGP
    Simulate(SimulateCmd),
}

#[derive(Args)]
struct DataOpts {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Outcome column
    #[arg(long)]
    y: String,
    /// Regressor-of-interest column(s), comma separated (one for scalar
    /// tests, two for 2d tests)
    #[arg(long, value_delimiter = ',')]
    x1: Vec<String>,
    /// Nuisance regressor columns
    #[arg(long, value_delimiter = ',')]
    x2: Vec<String>,
    /// Instrument columns
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    /// Split rows into this many contiguous equal blocks
    #[arg(long)]
    blocks: Option<usize>,
    /// Column whose labels define the blocks
    #[arg(long)]
    block_col: Option<String>,
}

#[derive(Args)]
struct PermOpts {
    #[arg(long, value_enum, default_value_t = PermModeArg::BlockSwap)]
    perm_mode: PermModeArg,
    /// Permutation budget; larger groups are sampled (identity always kept)
    #[arg(long, default_value_t = 1000)]
    perm_cap: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TolOpts {
    /// Real-root acceptance tolerance (relative)
    #[arg(long)]
    tol_root: Option<f64>,
    /// Numerical rank cutoff for annihilator construction (relative)
    #[arg(long)]
    tol_rank: Option<f64>,
}

impl TolOpts {
    fn tolerances(&self) -> Tolerances64 {
        let mut t = Tolerances::default();
        if let Some(r) = self.tol_root {
            t.root_accept = r;
        }
        if let Some(r) = self.tol_rank {
            t.rank = r;
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PermModeArg {
    BlockSwap,
    WithinBlock,
    Full,
}

impl From<PermModeArg> for PermMode {
    fn from(m: PermModeArg) -> Self {
        match m {
            PermModeArg::BlockSwap => PermMode::BlockSwap,
            PermModeArg::WithinBlock => PermMode::WithinBlock,
            PermModeArg::Full => PermMode::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestArg {
    /// Exact t-test: statistics are lines in beta
    Linear,
    /// Instrumental-variable Wald test, null-dependent variance
    Wald,
    /// Residual-permutation Wald test (derives its weight matrices from
    /// the design: Q1 Z as the bread, Q3 as the residual weights)
    Dhault,
    /// Two-coefficient Wald test, constant variance
    Wald2d,
    /// Two-coefficient partial-correlation test
    Diciccio,
}

impl TestArg {
    fn label(&self) -> &'static str {
        match self {
            TestArg::Linear => "linear",
            TestArg::Wald => "wald",
            TestArg::Dhault => "dhault",
            TestArg::Wald2d => "wald2d",
            TestArg::Diciccio => "diciccio",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Right,
    Left,
    TwoSided,
}

#[derive(Args)]
struct CurveCmd {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    perm: PermOpts,
    #[command(flatten)]
    tol: TolOpts,
    #[arg(long, value_enum)]
    test: TestArg,
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    side: SideArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IntervalCmd {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    perm: PermOpts,
    #[command(flatten)]
    tol: TolOpts,
    #[arg(long, value_enum)]
    test: TestArg,
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    side: SideArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RegionCmd {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    perm: PermOpts,
    #[command(flatten)]
    tol: TolOpts,
    #[arg(long, value_enum)]
    test: TestArg,
    #[arg(long)]
    alpha: f64,
    /// First axis as min:max:steps
    #[arg(long)]
    grid1: String,
    /// Second axis as min:max:steps
    #[arg(long)]
    grid2: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchCmd {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    perm: PermOpts,
    #[command(flatten)]
    tol: TolOpts,
    #[arg(long, value_enum)]
    test: TestArg,
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    side: SideArg,
    /// Evaluation points (1d tests) or first axis (2d tests), min:max:steps
    #[arg(long)]
    grid1: String,
    /// Second axis for 2d tests
    #[arg(long)]
    grid2: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long, default_value_t = 24)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// Nuisance regressors in the DGP
    #[arg(long, default_value_t = 1)]
    p_nuisance: usize,
    #[command(flatten)]
    perm: PermOpts,
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    side: SideArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "grid spec '{spec}' must be min:max:steps"
        )));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid min '{}'", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid max '{}'", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid steps '{}'", parts[2])))?;
    if steps < 2 {
        return Err(CliError::Config("grid needs at least 2 steps".into()));
    }
    if !(max > min) {
        return Err(CliError::Config("grid max must exceed min".into()));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| min + h * i as f64).collect())
}

fn load(data: &DataOpts, perm: &PermOpts) -> CliResult<(DesignData<f64>, PermGroup)> {
    let roles = ColumnRoles {
        y: data.y.clone(),
        x1: data.x1.clone(),
        x2: data.x2.clone(),
        z: data.z.clone(),
        block_col: data.block_col.clone(),
        n_blocks: data.blocks,
    };
    let design = ingest_csv(&data.data, &roles)?;
    if perm.perm_cap < 2 {
        return Err(CliError::Config("--perm-cap must be at least 2".into()));
    }
    let group = enumerate_group(
        design.blocks(),
        perm.perm_mode.into(),
        perm.perm_cap,
        perm.seed,
    )?;
    Ok((design, group))
}

/// Maps the CLI side onto the inversion side for a given test.
fn resolve_side(test: TestArg, side: SideArg) -> CliResult<Side> {
    match (test, side) {
        (TestArg::Linear, SideArg::Right) => Ok(Side::Right),
        (TestArg::Linear, SideArg::Left) => Ok(Side::Left),
        (TestArg::Linear, SideArg::TwoSided) => Ok(Side::TwoSided),
        (_, SideArg::Right) => Ok(Side::Wald),
        (_, SideArg::Left) => Ok(Side::Left),
        (_, SideArg::TwoSided) => Err(CliError::Config(
            "two-sided inversion is only defined for the linear test".into(),
        )),
    }
}

fn scalar_curve(
    test: TestArg,
    side: Side,
    data: &DesignData<f64>,
    group: &PermGroup,
    tol: &Tolerances64,
) -> CliResult<StepFunction<f64>> {
    let curve = match test {
        TestArg::Linear => pvalue_curve(&build_linear(data, group, tol)?, side, tol)?,
        TestArg::Wald => pvalue_curve(&build_rational(data, group, tol)?, side, tol)?,
        TestArg::Dhault => {
            let q1 = q_spans(data, group, SpanKind::Q1, tol);
            let q3 = q_spans(data, group, SpanKind::Q3, tol);
            let wdata = ResidualWaldData {
                x_tilde: q1.apply_mat(data.z()),
                d_mat: q3.matrix().clone(),
                x: data.x1().clone(),
                y: data.y().clone(),
            };
            pvalue_curve(&build_dhault(&wdata, group, tol)?, side, tol)?
        }
        TestArg::Wald2d | TestArg::Diciccio => {
            return Err(CliError::Config(format!(
                "--test {} is two-dimensional; use the region subcommand",
                test.label()
            )))
        }
    };
    Ok(curve)
}

fn seed_label(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Curve(cmd) => {
            let (data, group) = load(&cmd.data, &cmd.perm)?;
            let tol = cmd.tol.tolerances();
            let side = resolve_side(cmd.test, cmd.side)?;
            let curve = scalar_curve(cmd.test, side, &data, &group, &tol)?;
            let header = Header::new("curve")
                .field("test", cmd.test.label())
                .field("side", side.label())
                .field("n", data.n())
                .field("M", group.m())
                .field("seed", seed_label(cmd.perm.seed));
            std::fs::write(&cmd.out, render_curve(&header, &curve))?;
            Ok(format!(
                "curve: {} breakpoints, M={} -> {}",
                curve.breakpoints().len(),
                group.m(),
                cmd.out.display()
            ))
        }
        Command::Interval(cmd) => {
            if !(cmd.alpha > 0.0 && cmd.alpha < 1.0) {
                return Err(CliError::Config("--alpha must be in (0, 1)".into()));
            }
            let (data, group) = load(&cmd.data, &cmd.perm)?;
            let tol = cmd.tol.tolerances();
            let side = resolve_side(cmd.test, cmd.side)?;
            let curve = scalar_curve(cmd.test, side, &data, &group, &tol)?;
            let set = confidence_set(&curve, cmd.alpha);
            let header = Header::new("interval")
                .field("test", cmd.test.label())
                .field("side", side.label())
                .field("n", data.n())
                .field("M", group.m())
                .field("seed", seed_label(cmd.perm.seed))
                .field("alpha", cmd.alpha);
            std::fs::write(&cmd.out, render_confidence_set(&header, &set))?;
            Ok(format!(
                "interval: {} component(s) at alpha={} -> {}",
                set.intervals.len(),
                cmd.alpha,
                cmd.out.display()
            ))
        }
        Command::Region(cmd) => {
            if !(cmd.alpha > 0.0 && cmd.alpha < 1.0) {
                return Err(CliError::Config("--alpha must be in (0, 1)".into()));
            }
            let (data, group) = load(&cmd.data, &cmd.perm)?;
            let tol = cmd.tol.tolerances();
            let axis1 = parse_grid(&cmd.grid1)?;
            let axis2 = parse_grid(&cmd.grid2)?;
            let grid = match cmd.test {
                TestArg::Wald2d => fast_grid(&build_conic(&data, &group, &tol)?, &axis1, &axis2),
                TestArg::Diciccio => {
                    fast_grid(&build_diciccio(&data, &group, &tol)?, &axis1, &axis2)
                }
                _ => {
                    return Err(CliError::Config(format!(
                        "--test {} is one-dimensional; use curve or interval",
                        cmd.test.label()
                    )))
                }
            };
            let region = region_extract(&grid, cmd.alpha);
            let proj1 = project_pvalues(&grid, 1);
            let proj2 = project_pvalues(&grid, 2);
            let header = Header::new("region")
                .field("test", cmd.test.label())
                .field("n", data.n())
                .field("M", group.m())
                .field("seed", seed_label(cmd.perm.seed))
                .field("alpha", cmd.alpha)
                .field("grid1", axis1.len())
                .field("grid2", axis2.len());
            std::fs::write(&cmd.out, render_region(&header, &grid, &region, &proj1, &proj2))?;
            Ok(format!(
                "region: {} cells in {} component(s) -> {}",
                region.cells.len(),
                region.components.len(),
                cmd.out.display()
            ))
        }
        Command::Bench(cmd) => {
            let (data, group) = load(&cmd.data, &cmd.perm)?;
            let tol = cmd.tol.tolerances();
            let report = match cmd.test {
                TestArg::Wald2d | TestArg::Diciccio => {
                    let axis1 = parse_grid(&cmd.grid1)?;
                    let axis2 = parse_grid(cmd.grid2.as_deref().ok_or_else(|| {
                        CliError::Config("--grid2 is required for 2d tests".into())
                    })?)?;
                    let kind = if cmd.test == TestArg::Wald2d {
                        TestKind::Wald2d
                    } else {
                        TestKind::Diciccio
                    };
                    bench_grid(&data, &group, kind, &axis1, &axis2, &tol)?
                }
                TestArg::Linear => {
                    let betas = parse_grid(&cmd.grid1)?;
                    let kind = match cmd.side {
                        SideArg::Right => TestKind::LinearRight,
                        SideArg::Left => TestKind::LinearLeft,
                        SideArg::TwoSided => TestKind::TwoSided,
                    };
                    bench_curve(&data, &group, kind, &betas, &tol)?
                }
                TestArg::Wald => {
                    let betas = parse_grid(&cmd.grid1)?;
                    bench_curve(&data, &group, TestKind::WaldScalar, &betas, &tol)?
                }
                TestArg::Dhault => {
                    return Err(CliError::Config(
                        "bench supports linear, wald, wald2d, and diciccio".into(),
                    ))
                }
            };
            let header = Header::new("bench")
                .field("test", cmd.test.label())
                .field("n", data.n())
                .field("M", group.m())
                .field("seed", seed_label(cmd.perm.seed));
            std::fs::write(&cmd.out, render_bench(&header, &report))?;
            Ok(format!(
                "bench: speedup {:.1}x, match={} -> {}",
                report.speedup,
                report.matches,
                cmd.out.display()
            ))
        }
        Command::Simulate(cmd) => {
            if !(cmd.alpha > 0.0 && cmd.alpha < 1.0) {
                return Err(CliError::Config("--alpha must be in (0, 1)".into()));
            }
            if cmd.reps < 100 {
                return Err(CliError::Config("--reps must be at least 100".into()));
            }
            let side = resolve_side(TestArg::Linear, cmd.side)?;
            if cmd.n == 0 || cmd.blocks == 0 || cmd.n % cmd.blocks != 0 {
                return Err(CliError::Config(format!(
                    "--n {} must split into --blocks {} equal blocks",
                    cmd.n, cmd.blocks
                )));
            }
            let dgp = DgpConfig::<f64>::standard(cmd.n, cmd.blocks, 1, cmd.p_nuisance, 0);
            let seed = cmd.perm.seed.unwrap_or(0);
            let size = cmd.n / cmd.blocks;
            let blocks: Vec<Vec<usize>> = (0..cmd.blocks)
                .map(|b| (b * size..(b + 1) * size).collect())
                .collect();
            let group = enumerate_group(
                &blocks,
                cmd.perm.perm_mode.into(),
                cmd.perm.perm_cap,
                Some(seed),
            )?;
            let rate = simulate_size(
                &dgp,
                cmd.perm.perm_mode.into(),
                cmd.perm.perm_cap,
                side,
                cmd.alpha,
                cmd.reps,
                seed,
                &Tolerances::default(),
            )?;
            let header = Header::new("simulate")
                .field("test", "linear")
                .field("side", side.label())
                .field("n", cmd.n)
                .field("M", group.m())
                .field("blocks", cmd.blocks)
                .field("seed", seed);
            std::fs::write(&cmd.out, render_simulate(&header, cmd.alpha, cmd.reps, rate))?;
            Ok(format!(
                "simulate: rejection rate {rate} at alpha={} -> {}",
                cmd.alpha,
                cmd.out.display()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("randinv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
