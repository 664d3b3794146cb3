use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::drives::SchemeFamily;
use crate::error::Result;
use crate::experiments::config::{RunConfig, SchemeSpec};
use crate::experiments::study::{gap_scaling, scaling_study, StudyResult};
use crate::spectrum::SpectrumOptions;

/// Label of the `1 / delta_min^2` column.
pub const GAP_COLUMN: &str = "1/Delta^2";

/// Method columns in table order.
pub const TABLE_SCHEMES: [&str; 10] = ["S", "I", "C_F", "C_A", "C_M", "M", "CM", "SyncM", "SyncMC", "D"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub gamma: Option<f64>,
    pub residual: Option<f64>,
    pub draws: usize,
    /// Why the cell is empty, if it is.
    pub reason: Option<String>,
}

/// Fitted exponents, one row per problem set and one column per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub sets: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<TableCell>>,
}

impl ExponentTable {
    pub fn get(&self, set: &str, column: &str) -> Option<&TableCell> {
        let r = self.sets.iter().position(|s| s == set)?;
        let c = self.columns.iter().position(|s| s == column)?;
        Some(&self.cells[r][c])
    }

    pub fn gamma(&self, set: &str, column: &str) -> Option<f64> {
        self.get(set, column).and_then(|c| c.gamma)
    }

    /// Wide CSV: one row per set, one gamma column per method.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["set".to_string()];
        header.extend(self.columns.iter().cloned());
        wtr.write_record(&header)?;
        for (set, row) in self.sets.iter().zip(&self.cells) {
            let mut rec = vec![set.clone()];
            rec.extend(row.iter().map(|c| c.gamma.map(|g| format!("{g:.4}")).unwrap_or_default()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Long CSV with residuals, draw counts and reasons for empty cells.
    pub fn write_cells_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["set", "column", "gamma", "residual", "draws", "reason"])?;
        for (set, row) in self.sets.iter().zip(&self.cells) {
            for (col, c) in self.columns.iter().zip(row) {
                wtr.write_record(&[
                    set.clone(),
                    col.clone(),
                    c.gamma.map(|g| g.to_string()).unwrap_or_default(),
                    c.residual.map(|g| g.to_string()).unwrap_or_default(),
                    c.draws.to_string(),
                    c.reason.clone().unwrap_or_default(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Aligned plain-text rendering; empty cells show as `-`.
    pub fn to_text(&self) -> String {
        let mut grid = vec![std::iter::once("set".to_string()).chain(self.columns.iter().cloned()).collect::<Vec<_>>()];
        for (set, row) in self.sets.iter().zip(&self.cells) {
            let mut line = vec![set.clone()];
            line.extend(row.iter().map(|c| c.gamma.map(|g| format!("{g:.2}")).unwrap_or_else(|| "-".into())));
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len()).map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &grid {
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Run the exponent table: the gap column plus every configured method
/// (all ten when the config lists none).
pub fn table_one(cfg: &RunConfig) -> Result<(ExponentTable, StudyResult)> {
    let mut cfg = cfg.clone();
    if cfg.schemes.is_empty() {
        cfg.schemes = TABLE_SCHEMES.iter().map(|c| SchemeSpec::Name(c.to_string())).collect();
    }
    cfg.validate()?;
    let families = cfg.families()?;
    let sets = cfg.selected_sets()?;
    let study = scaling_study(&cfg)?;

    let mut columns = vec![GAP_COLUMN.to_string()];
    columns.extend(families.iter().map(|f| f.column().to_string()));
    let sizes = cfg.sizes();
    let cells = sets
        .iter()
        .map(|set| {
            let gap = match gap_scaling(set, &sizes, &SpectrumOptions::default()) {
                Ok((_, fit)) => TableCell { gamma: Some(fit.gamma), residual: Some(fit.residual), draws: 0, reason: None },
                Err(e) => TableCell { gamma: None, residual: None, draws: 0, reason: Some(e.to_string()) },
            };
            std::iter::once(gap)
                .chain(families.iter().map(|f| method_cell(&study, &set.name, f)))
                .collect()
        })
        .collect();
    let table = ExponentTable { sets: sets.iter().map(|s| s.name.clone()).collect(), columns, cells };
    Ok((table, study))
}

fn method_cell(study: &StudyResult, set: &str, fam: &SchemeFamily) -> TableCell {
    match study.fits.iter().find(|f| f.set == set && f.scheme == fam.name()) {
        Some(entry) => TableCell {
            gamma: entry.fit.as_ref().map(|f| f.gamma),
            residual: entry.fit.as_ref().map(|f| f.residual),
            draws: entry.draws,
            reason: entry.reason.clone(),
        },
        None => TableCell { gamma: None, residual: None, draws: 0, reason: Some("not run".into()) },
    }
}
