//! Time-dependent Schrödinger integration, success probability and
//! time-to-solution.
//!
//! The propagator is the fourth-order commutator-free Magnus scheme with two
//! exponentials per step. Each exponential is applied with a truncated
//! Taylor series on short substeps. Nothing renormalizes the state; the
//! final norm drift is checked against [`EvolutionConfig::norm_tol`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drives::{reverse_s, terms_unchecked, DriveScheme, SchemeFamily};
use crate::error::{invalid, AmpError, Result};
use crate::hilbert::{norm, embed, HamiltonianTerms, Kernel, StateVector, SymmetricState};
use crate::problem::AmpParams;
use crate::rng::{derive_seed, label_key};
use crate::C64;

/// Largest `tau * ||H||` handled by one Taylor expansion.
const TAYLOR_REACH: f64 = 1.5;
const TAYLOR_MAX_TERMS: usize = 60;

/// `t_f = c * N^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimePoly {
    pub c: f64,
    pub p: f64,
}

impl RuntimePoly {
    pub fn at(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(self.p)
    }
}

impl Default for RuntimePoly {
    fn default() -> Self {
        Self { c: 4.0, p: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Fixed forward-sweep time; overrides `runtime_poly` when set.
    pub t_f: Option<f64>,
    pub runtime_poly: RuntimePoly,
    /// Largest Magnus step.
    pub dt_max: f64,
    /// Minimum number of steps per period of the fastest oscillating term.
    pub steps_per_period: usize,
    pub norm_tol: f64,
    /// Largest N run in the full `2^N` space.
    pub full_space_cap: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            t_f: None,
            runtime_poly: RuntimePoly::default(),
            dt_max: 0.5,
            steps_per_period: 40,
            norm_tol: 1e-9,
            full_space_cap: 14,
        }
    }
}

impl EvolutionConfig {
    pub fn with_t_f(t_f: f64) -> Self {
        Self { t_f: Some(t_f), ..Self::default() }
    }

    /// Forward-sweep duration at size `n`.
    pub fn sweep_time(&self, n: usize) -> f64 {
        self.t_f.unwrap_or_else(|| self.runtime_poly.at(n))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.t_f {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid(format!("t_f must be finite and >= 0, got {t}")));
            }
        }
        if !(self.runtime_poly.c > 0.0 && self.runtime_poly.p.is_finite()) {
            return Err(invalid("runtime polynomial needs c > 0 and finite p"));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(invalid(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        if self.steps_per_period == 0 {
            return Err(invalid("steps_per_period must be >= 1"));
        }
        if !(self.norm_tol > 0.0) {
            return Err(invalid("norm_tol must be > 0"));
        }
        Ok(())
    }
}

/// Which representation to integrate in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    /// Dicke subspace for symmetric schemes, full space otherwise.
    #[default]
    Auto,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Full(StateVector),
    Symmetric(SymmetricState),
}

impl FinalState {
    pub fn n(&self) -> usize {
        match self {
            FinalState::Full(s) => s.n,
            FinalState::Symmetric(s) => s.n,
        }
    }

    pub fn amps(&self) -> &[C64] {
        match self {
            FinalState::Full(s) => &s.amps,
            FinalState::Symmetric(s) => &s.amps,
        }
    }

    /// `|<all up|psi>|^2`.
    pub fn success_probability(&self) -> f64 {
        self.amps().last().map_or(0.0, |a| a.norm_sqr())
    }

    pub fn to_full(&self) -> StateVector {
        match self {
            FinalState::Full(s) => s.clone(),
            FinalState::Symmetric(s) => embed(s),
        }
    }
}

/// Result of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: FinalState,
    /// Physical duration of the run.
    pub duration: f64,
    pub steps: usize,
    pub norm_drift: f64,
}

impl Evolution {
    pub fn success_probability(&self) -> f64 {
        self.state.success_probability()
    }
}

/// `|<all up|psi>|^2` of a normalized full-space state.
pub fn success_probability(psi: &StateVector) -> f64 {
    psi.amps.last().map_or(0.0, |a| a.norm_sqr())
}

/// Time-to-solution at 99 % confidence. `p = 1` gives `t_f`; `p <= 0`
/// gives `f64::INFINITY`.
pub fn tts(t_f: f64, p_success: f64) -> f64 {
    if !(p_success > 0.0) {
        f64::INFINITY
    } else if p_success >= 1.0 {
        t_f
    } else {
        t_f * 0.01f64.ln() / (-p_success).ln_1p()
    }
}

/// Piecewise-smooth `s(t)` with breakpoints where the integrator must land.
struct Schedule {
    breakpoints: Vec<f64>,
    kind: ScheduleKind,
}

enum ScheduleKind {
    Linear { t_f: f64 },
    Reverse { s_pause: f64, dwell: f64, ramp: f64 },
}

impl Schedule {
    fn for_scheme(scheme: &DriveScheme, sweep_time: f64) -> Self {
        match *scheme {
            DriveScheme::ReverseAnneal { s_pause, dwell, ramp } => Schedule {
                breakpoints: vec![0.0, ramp, ramp + dwell, 2.0 * ramp + dwell],
                kind: ScheduleKind::Reverse { s_pause, dwell, ramp },
            },
            _ => Schedule {
                breakpoints: vec![0.0, sweep_time],
                kind: ScheduleKind::Linear { t_f: sweep_time },
            },
        }
    }

    fn duration(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty")
    }

    fn s(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Linear { t_f } => (t / t_f).clamp(0.0, 1.0),
            ScheduleKind::Reverse { s_pause, dwell, ramp } => reverse_s(s_pause, dwell, ramp, t).clamp(0.0, 1.0),
        }
    }
}

/// Integrate from the scheme's start state to the end of its schedule.
pub fn integrate(scheme: &DriveScheme, params: &AmpParams, config: &EvolutionConfig) -> Result<Evolution> {
    integrate_in(scheme, params, config, Representation::Auto)
}

pub fn integrate_in(
    scheme: &DriveScheme,
    params: &AmpParams,
    config: &EvolutionConfig,
    repr: Representation,
) -> Result<Evolution> {
    params.validate()?;
    config.validate()?;
    scheme.validate(params.n)?;
    let n = params.n;
    let symmetric = scheme.is_symmetric() && repr == Representation::Auto;
    if !symmetric && n > config.full_space_cap {
        return Err(invalid(format!(
            "scheme '{}' needs the full 2^N space; N = {n} exceeds the cap of {}",
            scheme.label(),
            config.full_space_cap
        )));
    }
    let kernel = if symmetric { Kernel::symmetric(params) } else { Kernel::full(params) };
    let reverse = matches!(scheme, DriveScheme::ReverseAnneal { .. });
    let mut psi: Vec<C64> = match (symmetric, reverse) {
        (true, false) => SymmetricState::uniform(n).amps,
        (false, false) => StateVector::uniform(n).amps,
        (_, true) => {
            let mut v = vec![C64::new(0.0, 0.0); kernel.dim()];
            v[kernel.all_down_index()] = C64::new(1.0, 0.0);
            v
        }
    };

    let schedule = Schedule::for_scheme(scheme, config.sweep_time(n));
    let fmax = scheme.max_frequency();
    let dt_cap = if fmax > 0.0 {
        config.dt_max.min(1.0 / (fmax * config.steps_per_period as f64))
    } else {
        config.dt_max
    };

    let mut prop = Propagator::new(&kernel);
    let mut steps = 0;
    for seg in schedule.breakpoints.windows(2) {
        let (t0, t1) = (seg[0], seg[1]);
        let len = t1 - t0;
        if len <= 0.0 {
            continue;
        }
        let count = (len / dt_cap).ceil().max(1.0) as usize;
        let h = len / count as f64;
        for j in 0..count {
            let t = t0 + j as f64 * h;
            cf4_step(&mut prop, scheme, &schedule, n, t, h, &mut psi);
            steps += 1;
        }
    }

    let drift = (norm(&psi) - 1.0).abs();
    if !(drift <= config.norm_tol) {
        return Err(AmpError::NormDrift { drift, tol: config.norm_tol, steps });
    }
    let state = if symmetric {
        FinalState::Symmetric(SymmetricState { n, amps: psi })
    } else {
        FinalState::Full(StateVector { n, amps: psi })
    };
    Ok(Evolution { state, duration: schedule.duration(), steps, norm_drift: drift })
}

// Gauss nodes and commutator-free Magnus weights.
const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const CF4_A: f64 = 0.25 + SQRT3_6;
const CF4_B: f64 = 0.25 - SQRT3_6;

fn cf4_step(prop: &mut Propagator, scheme: &DriveScheme, sched: &Schedule, n: usize, t: f64, h: f64, psi: &mut [C64]) {
    let t1 = t + (0.5 - SQRT3_6) * h;
    let t2 = t + (0.5 + SQRT3_6) * h;
    let h1 = terms_unchecked(scheme, n, sched.s(t1), t1);
    let h2 = terms_unchecked(scheme, n, sched.s(t2), t2);
    let first = HamiltonianTerms::combine(CF4_A, &h1, CF4_B, &h2);
    let second = HamiltonianTerms::combine(CF4_B, &h1, CF4_A, &h2);
    prop.expm(&first, h, psi);
    prop.expm(&second, h, psi);
}

/// Scratch buffers for `exp(-i tau H) psi`.
struct Propagator<'k> {
    kernel: &'k Kernel,
    term: Vec<C64>,
    next: Vec<C64>,
}

impl<'k> Propagator<'k> {
    fn new(kernel: &'k Kernel) -> Self {
        let dim = kernel.dim();
        Self { kernel, term: vec![C64::default(); dim], next: vec![C64::default(); dim] }
    }

    fn expm(&mut self, terms: &HamiltonianTerms, tau: f64, psi: &mut [C64]) {
        let bound = self.kernel.norm_bound(terms) * tau;
        if bound == 0.0 {
            return;
        }
        let subs = (bound / TAYLOR_REACH).ceil().max(1.0) as usize;
        let h = tau / subs as f64;
        for _ in 0..subs {
            self.term.copy_from_slice(psi);
            for k in 1..=TAYLOR_MAX_TERMS {
                self.kernel.apply(terms, &self.term, &mut self.next);
                let c = C64::new(0.0, -h / k as f64);
                let mut size = 0.0;
                for ((t, nx), p) in self.term.iter_mut().zip(&self.next).zip(psi.iter_mut()) {
                    *t = nx * c;
                    *p += *t;
                    size += t.norm_sqr();
                }
                if size < 1e-34 {
                    break;
                }
            }
        }
    }
}

/// Outcome of one draw of a scheme family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub seed: u64,
    pub p_success: f64,
    pub duration: f64,
    pub scheme: DriveScheme,
}

/// Draw-averaged success probability and time-to-solution at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsRecord {
    pub n: usize,
    pub scheme: String,
    pub family: SchemeFamily,
    /// Mean run duration over draws.
    pub t_f: f64,
    pub p_success: f64,
    /// Standard error of the mean success probability.
    pub p_std_err: f64,
    pub tts: f64,
    pub seed: u64,
    pub draws: Vec<DrawOutcome>,
}

impl TtsRecord {
    pub fn is_finite(&self) -> bool {
        self.tts.is_finite()
    }
}

/// Seed of draw `draw` for `family` at size `n`.
pub fn draw_seed(seed: u64, family: &SchemeFamily, n: usize, draw: usize) -> u64 {
    derive_seed(seed, &[label_key(family.name()), n as u64, draw as u64])
}

/// Average the success probability over `draws` independent instances of
/// `family`, then convert to TTS. Deterministic families run once.
pub fn averaged_tts(
    family: &SchemeFamily,
    params: &AmpParams,
    config: &EvolutionConfig,
    draws: usize,
    seed: u64,
) -> Result<TtsRecord> {
    if draws == 0 {
        return Err(invalid("draws must be >= 1"));
    }
    let n = params.n;
    let count = if family.is_deterministic() { 1 } else { draws };
    let sweep = config.sweep_time(n);
    let outcomes = (0..count)
        .into_par_iter()
        .map(|d| {
            let ds = draw_seed(seed, family, n, d);
            let run = || -> Result<DrawOutcome> {
                let scheme = family.instantiate(n, ds, sweep)?;
                let ev = integrate(&scheme, params, config)?;
                Ok(DrawOutcome { seed: ds, p_success: ev.success_probability(), duration: ev.duration, scheme })
            };
            run().map_err(|e| AmpError::Draw { draw: d, seed: ds, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = outcomes.len() as f64;
    let p = outcomes.iter().map(|o| o.p_success).sum::<f64>() / m;
    let t_f = outcomes.iter().map(|o| o.duration).sum::<f64>() / m;
    let p_std_err = if outcomes.len() > 1 {
        let var = outcomes.iter().map(|o| (o.p_success - p).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(TtsRecord {
        n,
        scheme: family.name().to_string(),
        family: family.clone(),
        t_f,
        p_success: p,
        p_std_err,
        tts: tts(t_f, p),
        seed,
        draws: outcomes,
    })
}
