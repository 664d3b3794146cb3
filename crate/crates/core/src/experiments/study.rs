use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drives::{DriveScheme, SchemeFamily};
use crate::error::Result;
use crate::evolve::{averaged_tts, DrawOutcome, EvolutionConfig};
use crate::experiments::config::RunConfig;
use crate::experiments::fit::{fit_exponential, ScalingFit, MIN_FIT_POINTS};
use crate::problem::ProblemSet;
use crate::spectrum::{gap_profile, SpectrumOptions};

/// One `(set, scheme, N)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub set: String,
    pub scheme: String,
    pub n: usize,
    pub t_f: f64,
    pub p_success: f64,
    pub p_std_err: f64,
    pub tts: f64,
    pub seed: u64,
    pub draws: usize,
    pub family: SchemeFamily,
    /// Set when the cell failed; the numeric fields are then NaN.
    pub error: Option<String>,
    #[serde(skip)]
    pub outcomes: Vec<DrawOutcome>,
}

/// Exponent fit of one `(set, scheme)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub set: String,
    pub scheme: String,
    pub fit: Option<ScalingFit>,
    /// Cells left out: infinite TTS or failed runs.
    pub excluded: usize,
    pub total: usize,
    pub draws: usize,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    pub fits: Vec<FitEntry>,
    pub warnings: Vec<String>,
}

impl StudyResult {
    pub fn fit(&self, set: &str, scheme: &str) -> Option<&ScalingFit> {
        self.fits
            .iter()
            .find(|f| f.set == set && f.scheme == scheme)
            .and_then(|f| f.fit.as_ref())
    }
}

/// Run every `(set, scheme, N)` cell and fit `TTS(N)` per `(set, scheme)`.
///
/// A failing cell is recorded with its error and left out of the fit; the
/// study itself only fails on an invalid config.
pub fn scaling_study(cfg: &RunConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let sets = cfg.selected_sets()?;
    let families = cfg.families()?;
    let sizes = cfg.sizes();
    let mut cells: Vec<(&ProblemSet, &SchemeFamily, usize)> = Vec::new();
    for set in &sets {
        for fam in &families {
            cells.extend(sizes.iter().map(|&n| (set, fam, n)));
        }
    }

    let rows: Vec<StudyRow> = cells
        .par_iter()
        .map(|&(set, fam, n)| run_cell(set, fam, n, &cfg.evolution, cfg.draws, cfg.seed))
        .collect();

    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for set in &sets {
        for fam in &families {
            let series: Vec<&StudyRow> = rows.iter().filter(|r| r.set == set.name && r.scheme == fam.name()).collect();
            let entry = fit_series(&set.name, fam.name(), &series);
            if entry.excluded * 10 > entry.total {
                warnings.push(format!(
                    "{}/{}: {} of {} cells excluded from the fit",
                    set.name, entry.scheme, entry.excluded, entry.total
                ));
            }
            fits.push(entry);
        }
    }
    Ok(StudyResult { rows, fits, warnings })
}

fn run_cell(set: &ProblemSet, fam: &SchemeFamily, n: usize, evo: &EvolutionConfig, draws: usize, seed: u64) -> StudyRow {
    let base = StudyRow {
        set: set.name.clone(),
        scheme: fam.name().to_string(),
        n,
        t_f: f64::NAN,
        p_success: f64::NAN,
        p_std_err: f64::NAN,
        tts: f64::NAN,
        seed,
        draws: 0,
        family: fam.clone(),
        error: None,
        outcomes: Vec::new(),
    };
    let result = set.params(n).and_then(|p| averaged_tts(fam, &p, evo, draws, seed));
    match result {
        Ok(rec) => StudyRow {
            t_f: rec.t_f,
            p_success: rec.p_success,
            p_std_err: rec.p_std_err,
            tts: rec.tts,
            draws: rec.draws.len(),
            outcomes: rec.draws,
            ..base
        },
        Err(e) => StudyRow { error: Some(e.to_string()), ..base },
    }
}

fn fit_series(set: &str, scheme: &str, series: &[&StudyRow]) -> FitEntry {
    let points: Vec<(usize, f64)> = series
        .iter()
        .filter(|r| r.error.is_none() && r.tts.is_finite() && r.tts > 0.0)
        .map(|r| (r.n, r.tts))
        .collect();
    let excluded = series.len() - points.len();
    let draws = series.iter().map(|r| r.draws).max().unwrap_or(0);
    let (fit, reason) = if points.len() < MIN_FIT_POINTS {
        (None, Some(format!("only {} usable sizes", points.len())))
    } else {
        match fit_exponential(&points) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    FitEntry { set: set.to_string(), scheme: scheme.to_string(), fit, excluded, total: series.len(), draws, reason }
}

/// Minimum gap of the uniform sweep at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub n: usize,
    pub s_min: f64,
    pub delta_min: f64,
}

/// Minimum gaps over `sizes` and the exponential fit of `1 / delta_min^2`.
pub fn gap_scaling(set: &ProblemSet, sizes: &[usize], opts: &SpectrumOptions) -> Result<(Vec<GapPoint>, ScalingFit)> {
    let points = sizes
        .par_iter()
        .map(|&n| {
            let p = set.params(n)?;
            let prof = gap_profile(&DriveScheme::Uniform, &p, opts)?;
            Ok(GapPoint { n, s_min: prof.s_min, delta_min: prof.delta_min })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_exponential(&points.iter().map(|g| (g.n, g.delta_min.powi(-2))).collect::<Vec<_>>())?;
    Ok((points, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::SchemeSpec;

    fn quick() -> RunConfig {
        RunConfig {
            sets: vec!["easiest".into()],
            schemes: vec![SchemeSpec::Name("uniform".into()), SchemeSpec::Name("rfqa-m".into())],
            n_range: (4, 7),
            draws: 3,
            seed: 9,
            evolution: EvolutionConfig { dt_max: 1.0, ..EvolutionConfig::with_t_f(20.0) },
            ..RunConfig::default()
        }
    }

    #[test]
    fn empty_scheme_list() {
        let cfg = RunConfig { schemes: vec![], ..quick() };
        let res = scaling_study(&cfg).unwrap();
        assert!(res.rows.is_empty() && res.fits.is_empty());
    }

    #[test]
    fn deterministic_and_ordered() {
        let a = scaling_study(&quick()).unwrap();
        let b = scaling_study(&quick()).unwrap();
        assert_eq!(a, b);
        let ns: Vec<usize> = a.rows.iter().filter(|r| r.scheme == "uniform").map(|r| r.n).collect();
        assert_eq!(ns, vec![4, 5, 6, 7]);
        assert_eq!(a.rows.iter().find(|r| r.scheme == "rfqa-m").unwrap().draws, 3);
        assert!(a.fit("easiest", "uniform").is_some());
    }

    #[test]
    fn failures_are_recorded() {
        let mut cfg = quick();
        cfg.evolution.full_space_cap = 5;
        let res = scaling_study(&cfg).unwrap();
        let failed: Vec<_> = res.rows.iter().filter(|r| r.error.is_some()).collect();
        assert_eq!(failed.len(), 2);
        assert!(failed.iter().all(|r| r.scheme == "rfqa-m"));
        assert!(res.warnings.iter().any(|w| w.contains("rfqa-m")));
        let entry = res.fits.iter().find(|f| f.scheme == "rfqa-m").unwrap();
        assert!(entry.fit.is_none());
    }
}
