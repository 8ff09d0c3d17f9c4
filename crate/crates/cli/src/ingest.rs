//! CSV ingestion: map named columns onto the design roles and derive the
//! block structure.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use randinv::design::DesignData;

use crate::{CliError, CliResult};

/// Which CSV columns play which role. Blocks come either from a labeled
/// column or from a contiguous equal split into `n_blocks`.
#[derive(Debug, Clone, Default)]
pub struct ColumnRoles {
    pub y: String,
    pub x1: Vec<String>,
    pub x2: Vec<String>,
    pub z: Vec<String>,
    pub block_col: Option<String>,
    pub n_blocks: Option<usize>,
}

impl ColumnRoles {
    fn validate(&self) -> CliResult<()> {
        let mut seen = HashSet::new();
        let mut all = vec![self.y.clone()];
        all.extend(self.x1.iter().cloned());
        all.extend(self.x2.iter().cloned());
        all.extend(self.z.iter().cloned());
        if let Some(b) = &self.block_col {
            all.push(b.clone());
        }
        for name in &all {
            if !seen.insert(name.clone()) {
                return Err(CliError::Config(format!(
                    "column '{name}' is assigned to more than one role"
                )));
            }
        }
        if self.x1.is_empty() {
            return Err(CliError::Config("at least one --x1 column is required".into()));
        }
        if self.block_col.is_none() && self.n_blocks.is_none() {
            return Err(CliError::Config(
                "either --blocks or --block-col is required".into(),
            ));
        }
        Ok(())
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn column_index(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("missing column '{name}'")))
    }

    fn numeric_column(&self, name: &str) -> CliResult<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, cells)| {
                cells[idx].trim().parse::<f64>().map_err(|_| {
                    CliError::Config(format!(
                        "non-numeric cell at row {}, column '{}': '{}'",
                        row + 2, // 1-based, plus the header line
                        name,
                        cells[idx]
                    ))
                })
            })
            .collect()
    }
}

fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Io(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Io(e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(CliError::Config("the data file has no rows".into()));
    }
    Ok(Table { headers, rows })
}

fn matrix_from(table: &Table, names: &[String]) -> CliResult<DMatrix<f64>> {
    let n = table.rows.len();
    let mut m = DMatrix::zeros(n, names.len());
    for (j, name) in names.iter().enumerate() {
        let col = table.numeric_column(name)?;
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn blocks_from(table: &Table, roles: &ColumnRoles) -> CliResult<Vec<Vec<usize>>> {
    let n = table.rows.len();
    if let Some(col) = &roles.block_col {
        // Labels define the groups, in order of first appearance.
        let idx = table.column_index(col)?;
        let mut labels: Vec<String> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (row, cells) in table.rows.iter().enumerate() {
            let label = &cells[idx];
            match labels.iter().position(|l| l == label) {
                Some(b) => blocks[b].push(row),
                None => {
                    labels.push(label.clone());
                    blocks.push(vec![row]);
                }
            }
        }
        Ok(blocks)
    } else {
        let b = roles.n_blocks.expect("validated");
        if b == 0 || n % b != 0 {
            return Err(CliError::Config(format!(
                "{n} rows cannot be split into {b} equal blocks"
            )));
        }
        let size = n / b;
        Ok((0..b).map(|i| (i * size..(i + 1) * size).collect()).collect())
    }
}

/// Reads a CSV file into a [`DesignData`] according to the column roles.
pub fn ingest_csv(path: &Path, roles: &ColumnRoles) -> CliResult<DesignData<f64>> {
    roles.validate()?;
    let table = read_table(path)?;

    let y = DVector::from_vec(table.numeric_column(&roles.y)?);
    let x1 = matrix_from(&table, &roles.x1)?;
    let x2 = matrix_from(&table, &roles.x2)?;
    let z = matrix_from(&table, &roles.z)?;
    let blocks = blocks_from(&table, roles)?;

    DesignData::new(y, x1, x2, z, blocks).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn base_roles() -> ColumnRoles {
        ColumnRoles {
            y: "y".into(),
            x1: vec!["x".into()],
            n_blocks: Some(2),
            ..Default::default()
        }
    }

    #[test]
    fn contiguous_split() {
        let f = write_csv("y,x\n1,2\n3,4\n5,6\n7,8\n");
        let data = ingest_csv(f.path(), &base_roles()).unwrap();
        assert_eq!(data.n(), 4);
        assert_eq!(data.blocks(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(data.y()[2], 5.0);
        assert_eq!(data.x1()[(3, 0)], 8.0);
    }

    #[test]
    fn missing_column_is_config_error() {
        let f = write_csv("a,x\n1,2\n3,4\n");
        let err = ingest_csv(f.path(), &base_roles()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("missing column 'y'"));
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let f = write_csv("y,x\n1,2\nfoo,4\n");
        let err = ingest_csv(f.path(), &base_roles()).unwrap_err();
        assert!(err.to_string().contains("row 3"));
        assert!(err.to_string().contains("'y'"));
    }

    #[test]
    fn block_column_groups_by_label() {
        let f = write_csv("y,x,blk\n1,2,a\n3,4,a\n5,6,b\n7,8,b\n");
        let mut roles = base_roles();
        roles.n_blocks = None;
        roles.block_col = Some("blk".into());
        let data = ingest_csv(f.path(), &roles).unwrap();
        assert_eq!(data.blocks(), &[vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn remainder_split_rejected() {
        let f = write_csv("y,x\n1,2\n3,4\n5,6\n");
        let err = ingest_csv(f.path(), &base_roles()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overlapping_roles_rejected() {
        let f = write_csv("y,x\n1,2\n3,4\n");
        let mut roles = base_roles();
        roles.x2 = vec!["x".into()];
        let err = ingest_csv(f.path(), &roles).unwrap_err();
        assert!(err.to_string().contains("more than one role"));
    }
}
