//! Line-delimited output formats and the matching parsers.
//!
//! Every file starts with one `#` header line carrying the run context
//! (test kind, n, M, seed, ...). Rows are comma-separated with a leading
//! record type; infinite endpoints are empty fields. Floats are written
//! with Rust's shortest round-trip formatting, so parsing a file back
//! yields bit-identical values.

use randinv::invert::{
    BreakpointRecord, ConfidenceSet, CurveRecord, Interval, StepFunction,
};
use randinv::oracle::BenchReport;
use randinv::region::{ProjectedCurve, Region};
use randinv::PValueGrid64;

use crate::{CliError, CliResult};

/// Key-value pairs for the header line, in insertion order.
pub struct Header {
    pub kind: &'static str,
    pub fields: Vec<(String, String)>,
}

impl Header {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            fields: Vec::new(),
        }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    fn render(&self) -> String {
        let rest: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("# randinv {} {}", self.kind, rest.join(" "))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> CliResult<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("bad number '{s}' in file")))
    }
}

/// Curve file: interval rows in step order, then breakpoint rows with their
/// exact point p-values (empty p marks a singular point).
pub fn render_curve(header: &Header, curve: &StepFunction<f64>) -> String {
    let mut out = String::new();
    out.push_str(&header.render());
    out.push('\n');
    for r in curve.to_records() {
        out.push_str(&format!(
            "interval,{},{},{}\n",
            fmt_opt(r.start),
            fmt_opt(r.end),
            r.p
        ));
    }
    for r in curve.point_records() {
        out.push_str(&format!("point,{},{}\n", r.beta, fmt_opt(r.p)));
    }
    out
}

/// Parses a curve file back into `(m, interval rows, point rows)`. `m` is
/// taken from the header's `M=` field.
pub fn parse_curve(text: &str) -> CliResult<(usize, Vec<CurveRecord<f64>>, Vec<BreakpointRecord<f64>>)> {
    let mut m = None;
    let mut intervals = Vec::new();
    let mut points = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') {
            for token in line.split_whitespace() {
                if let Some(v) = token.strip_prefix("M=") {
                    m = v.parse::<usize>().ok();
                }
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match cells.first() {
            Some(&"interval") if cells.len() == 4 => intervals.push(CurveRecord {
                start: parse_opt(cells[1])?,
                end: parse_opt(cells[2])?,
                p: cells[3]
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("bad p '{}'", cells[3])))?,
            }),
            Some(&"point") if cells.len() == 3 => points.push(BreakpointRecord {
                beta: cells[1]
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("bad beta '{}'", cells[1])))?,
                p: parse_opt(cells[2])?,
            }),
            _ => return Err(CliError::Config(format!("unrecognized row '{line}'"))),
        }
    }
    let m = m.ok_or_else(|| CliError::Config("curve file header lacks M=".into()))?;
    Ok((m, intervals, points))
}

/// Rebuilds the step function a curve file describes.
pub fn curve_from_file(text: &str) -> CliResult<StepFunction<f64>> {
    let (m, intervals, points) = parse_curve(text)?;
    Ok(StepFunction::from_records(m, &intervals, &points))
}

fn closure_label(closed: bool) -> &'static str {
    if closed {
        "closed"
    } else {
        "open"
    }
}

fn render_interval_row(iv: &Interval<f64>) -> String {
    format!(
        "interval,{},{},{},{}\n",
        fmt_opt(iv.lower),
        closure_label(iv.lower_closed),
        fmt_opt(iv.upper),
        closure_label(iv.upper_closed),
    )
}

/// Interval file: one row per maximal interval of the confidence set.
pub fn render_confidence_set(header: &Header, set: &ConfidenceSet<f64>) -> String {
    let mut out = String::new();
    out.push_str(&header.render());
    out.push('\n');
    for iv in &set.intervals {
        out.push_str(&render_interval_row(iv));
    }
    out
}

/// Region file: both axes, the p matrix row-major, projected curves for
/// both axes, then components and their cells.
pub fn render_region(
    header: &Header,
    grid: &PValueGrid64,
    region: &Region<f64>,
    proj1: &ProjectedCurve<f64>,
    proj2: &ProjectedCurve<f64>,
) -> String {
    let mut out = String::new();
    out.push_str(&header.render());
    out.push('\n');
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&format!("axis1,{}\n", join(grid.axis1())));
    out.push_str(&format!("axis2,{}\n", join(grid.axis2())));
    for i in 0..grid.axis1().len() {
        let row: Vec<String> = (0..grid.axis2().len())
            .map(|j| grid.value(i, j).to_string())
            .collect();
        out.push_str(&format!("p,{},{}\n", i, row.join(",")));
    }
    for (label, proj) in [("projected1", proj1), ("projected2", proj2)] {
        for (beta, p) in proj.axis.iter().zip(&proj.p) {
            out.push_str(&format!("{label},{beta},{p}\n"));
        }
    }
    for (idx, comp) in region.components.iter().enumerate() {
        let (min1, max1, min2, max2) = comp.bounds;
        out.push_str(&format!(
            "component,{},{},{},{},{},{}\n",
            idx,
            comp.cells.len(),
            min1,
            max1,
            min2,
            max2
        ));
    }
    for (idx, comp) in region.components.iter().enumerate() {
        for &(i, j) in &comp.cells {
            out.push_str(&format!("cell,{idx},{i},{j}\n"));
        }
    }
    out
}

/// Bench file: a single flat record.
pub fn render_bench(header: &Header, report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&header.render());
    out.push('\n');
    out.push_str("method,n,M,points,fast_seconds,naive_seconds,speedup,match\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        report.method,
        report.n,
        report.m,
        report.points,
        report.fast_seconds,
        report.naive_seconds,
        report.speedup,
        report.matches
    ));
    out
}

/// Simulate file: the rejection rate with its context.
pub fn render_simulate(header: &Header, alpha: f64, reps: usize, rate: f64) -> String {
    let mut out = String::new();
    out.push_str(&header.render());
    out.push('\n');
    out.push_str("alpha,reps,rejection_rate\n");
    out.push_str(&format!("{alpha},{reps},{rate}\n"));
    out
}
