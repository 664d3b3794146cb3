//! Result files. CSV files open with a block of `#` lines holding the
//! schema version, timestamp and seed; everything below it is a
//! deterministic function of the config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::experiments::config::RunConfig;
use crate::experiments::study::{FitEntry, StudyResult};
use crate::experiments::table::ExponentTable;

pub const SCHEMA_VERSION: u32 = 1;

pub const TTS_FILE: &str = "tts.csv";
pub const DRAWS_FILE: &str = "draws.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLE_FILE: &str = "table1.csv";
pub const TABLE_CELLS_FILE: &str = "table1_cells.csv";
pub const TABLE_TEXT_FILE: &str = "table1.txt";

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Write the `#` header block.
pub fn write_header<W: Write>(w: &mut W, title: &str, seed: u64) -> Result<()> {
    writeln!(w, "# {title}")?;
    writeln!(w, "# schema_version: {SCHEMA_VERSION}")?;
    writeln!(w, "# generated: {}", timestamp())?;
    writeln!(w, "# seed: {seed}")?;
    Ok(())
}

/// Per-cell rows.
pub fn write_tts_csv<W: Write>(mut w: W, result: &StudyResult, seed: u64) -> Result<()> {
    write_header(&mut w, "scaling study: draw-averaged time to solution", seed)?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "set", "scheme", "N", "t_f", "p_success", "p_std_err", "tts", "seed", "draws", "scheme_params", "error",
    ])?;
    for r in &result.rows {
        wtr.write_record(&[
            r.set.clone(),
            r.scheme.clone(),
            r.n.to_string(),
            r.t_f.to_string(),
            r.p_success.to_string(),
            r.p_std_err.to_string(),
            r.tts.to_string(),
            r.seed.to_string(),
            r.draws.to_string(),
            serde_json::to_string(&r.family)?,
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per draw, with the drawn scheme serialized in full.
pub fn write_draws_csv<W: Write>(mut w: W, result: &StudyResult, seed: u64) -> Result<()> {
    write_header(&mut w, "scaling study: individual draws", seed)?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["set", "scheme", "N", "draw", "seed", "p_success", "duration", "scheme_params"])?;
    for r in &result.rows {
        for (d, o) in r.outcomes.iter().enumerate() {
            wtr.write_record(&[
                r.set.clone(),
                r.scheme.clone(),
                r.n.to_string(),
                d.to_string(),
                o.seed.to_string(),
                o.p_success.to_string(),
                o.duration.to_string(),
                serde_json::to_string(&o.scheme)?,
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    generated: String,
    config: &'a RunConfig,
    fits: &'a [FitEntry],
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<&'a ExponentTable>,
}

pub fn write_summary<W: Write>(w: W, cfg: &RunConfig, result: &StudyResult, table: Option<&ExponentTable>) -> Result<()> {
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        generated: timestamp(),
        config: cfg,
        fits: &result.fits,
        warnings: &result.warnings,
        table,
    };
    serde_json::to_writer_pretty(w, &summary)?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Write `tts.csv`, `draws.csv` and `summary.json` into `dir`; returns the
/// paths written.
pub fn write_study(dir: &Path, cfg: &RunConfig, result: &StudyResult, table: Option<&ExponentTable>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    write_tts_csv(create(dir, TTS_FILE)?, result, cfg.seed)?;
    write_draws_csv(create(dir, DRAWS_FILE)?, result, cfg.seed)?;
    let mut summary = create(dir, SUMMARY_FILE)?;
    write_summary(&mut summary, cfg, result, table)?;
    summary.flush()?;
    let mut paths: Vec<PathBuf> = [TTS_FILE, DRAWS_FILE, SUMMARY_FILE].iter().map(|f| dir.join(f)).collect();
    if let Some(t) = table {
        t.write_csv(create(dir, TABLE_FILE)?)?;
        t.write_cells_csv(create(dir, TABLE_CELLS_FILE)?)?;
        fs::write(dir.join(TABLE_TEXT_FILE), t.to_text())?;
        paths.extend([TABLE_FILE, TABLE_CELLS_FILE, TABLE_TEXT_FILE].iter().map(|f| dir.join(f)));
    }
    Ok(paths)
}

/// Drop the `#` header block.
pub fn strip_header(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}
