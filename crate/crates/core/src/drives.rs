//! Drive schemes: how each annealing method turns `(s, t)` into Hamiltonian
//! coefficients.
//!
//! A [`DriveScheme`] is a fully instantiated method (all random frequencies,
//! signs and pause points already drawn). A [`SchemeFamily`] is the recipe
//! that draws a scheme for a given spin count and seed.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hilbert::{num_pairs, pairs, HamiltonianTerms};
use crate::problem::AmpParams;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplerKind {
    Ferro,
    Antiferro,
    Mixed,
}

impl CouplerKind {
    fn sign(self) -> Option<f64> {
        match self {
            CouplerKind::Ferro => Some(-1.0),
            CouplerKind::Antiferro => Some(1.0),
            CouplerKind::Mixed => None,
        }
    }
}

/// One concrete annealing method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum DriveScheme {
    /// `-(1-s)/N sum X_i + s H_p`.
    Uniform,
    /// Per-site fields switched off one after another.
    Inhomogeneous { r: f64 },
    /// Uniform field plus `s(1-s)/N sum r_ij X_i X_j` couplers.
    Couplers { kind: CouplerKind, signs: Vec<f64> },
    /// Field magnitudes oscillate: `kappa (1 + alpha sin 2 pi f_i t)`.
    RfqaM { alpha_bar: f64, kappa: f64, freqs: Vec<f64> },
    /// Field directions tip in the x-y plane by `alpha sin 2 pi f_i t`.
    RfqaD { alpha_bar: f64, kappa: f64, freqs: Vec<f64> },
    /// RFQA-M with one frequency per group of sites.
    SyncM {
        alpha_bar: f64,
        kappa: f64,
        /// Group id of every site.
        groups: Vec<usize>,
        group_freqs: Vec<f64>,
    },
    /// RFQA-M or SyncM plus oscillating couplers
    /// `(1-s) kappa_r sin(2 pi r_ij t) X_i X_j`.
    RfqaMCouplers {
        base: Box<DriveScheme>,
        kappa_r: f64,
        coupler_freqs: Vec<f64>,
    },
    /// Start classical in the false minimum, ramp `s` from 1 down to
    /// `s_pause`, hold for `dwell`, ramp back up. Each ramp lasts `ramp`.
    ReverseAnneal { s_pause: f64, dwell: f64, ramp: f64 },
}

impl DriveScheme {
    pub fn label(&self) -> &'static str {
        match self {
            DriveScheme::Uniform => "uniform",
            DriveScheme::Inhomogeneous { .. } => "inhomogeneous",
            DriveScheme::Couplers { kind: CouplerKind::Ferro, .. } => "ferro",
            DriveScheme::Couplers { kind: CouplerKind::Antiferro, .. } => "antiferro",
            DriveScheme::Couplers { kind: CouplerKind::Mixed, .. } => "mixed",
            DriveScheme::RfqaM { .. } => "rfqa-m",
            DriveScheme::RfqaD { .. } => "rfqa-d",
            DriveScheme::SyncM { .. } => "sync-m",
            DriveScheme::RfqaMCouplers { base, .. } => match **base {
                DriveScheme::SyncM { .. } => "sync-mc",
                _ => "rfqa-cm",
            },
            DriveScheme::ReverseAnneal { .. } => "reverse",
        }
    }

    /// Whether every term set this scheme produces is permutation symmetric,
    /// so evolution can run in the Dicke subspace.
    pub fn is_symmetric(&self) -> bool {
        match self {
            DriveScheme::Uniform | DriveScheme::ReverseAnneal { .. } => true,
            DriveScheme::Couplers { signs, .. } => signs.windows(2).all(|w| w[0] == w[1]),
            DriveScheme::SyncM { group_freqs, groups, .. } => {
                let first = groups.first().map(|&g| group_freqs[g]);
                groups.iter().all(|&g| Some(group_freqs[g]) == first)
            }
            _ => false,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.max_frequency() > 0.0
    }

    /// Largest `|f|` of any oscillating term; 0 for static schemes.
    pub fn max_frequency(&self) -> f64 {
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        match self {
            DriveScheme::RfqaM { alpha_bar, freqs, .. } | DriveScheme::RfqaD { alpha_bar, freqs, .. } => {
                if *alpha_bar == 0.0 {
                    0.0
                } else {
                    max_abs(freqs)
                }
            }
            DriveScheme::SyncM { alpha_bar, group_freqs, .. } => {
                if *alpha_bar == 0.0 {
                    0.0
                } else {
                    max_abs(group_freqs)
                }
            }
            DriveScheme::RfqaMCouplers { base, coupler_freqs, .. } => base.max_frequency().max(max_abs(coupler_freqs)),
            _ => 0.0,
        }
    }

    /// Check the scheme's arrays against a spin count.
    pub fn validate(&self, n: usize) -> Result<()> {
        let len = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(invalid(format!("{what}: expected {want} entries, got {got}")))
            }
        };
        match self {
            DriveScheme::Uniform => Ok(()),
            DriveScheme::Inhomogeneous { r } => {
                if *r > 0.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("ramp exponent must be > 0, got {r}")))
                }
            }
            DriveScheme::Couplers { signs, .. } => len("coupler signs", signs.len(), num_pairs(n)),
            DriveScheme::RfqaM { freqs, .. } | DriveScheme::RfqaD { freqs, .. } => len("frequencies", freqs.len(), n),
            DriveScheme::SyncM { groups, group_freqs, .. } => {
                len("group assignment", groups.len(), n)?;
                if groups.iter().any(|&g| g >= group_freqs.len()) {
                    return Err(invalid("group id without a frequency"));
                }
                Ok(())
            }
            DriveScheme::RfqaMCouplers { base, coupler_freqs, .. } => {
                if !matches!(**base, DriveScheme::RfqaM { .. } | DriveScheme::SyncM { .. }) {
                    return Err(invalid("coupler RFQA base must be RFQA-M or SyncM"));
                }
                base.validate(n)?;
                len("coupler frequencies", coupler_freqs.len(), num_pairs(n))
            }
            DriveScheme::ReverseAnneal { s_pause, dwell, ramp } => {
                if !(*s_pause > 0.0 && *s_pause < 1.0) {
                    return Err(invalid(format!("pause point must lie in (0, 1), got {s_pause}")));
                }
                if !(*dwell >= 0.0 && *ramp >= 0.0) {
                    return Err(invalid("dwell and ramp durations must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

/// Multiplier of site `i`'s field (sites numbered `1..=n`) under
/// inhomogeneous driving with ramp exponent `r`.
///
/// Site `i` ramps from 1 to 0 on `[s_i, s_{i-1}]` with
/// `s_i = ((n - i) / n)^(1/r)`, so site `n` switches off first.
pub fn gamma_i(r: f64, n: usize, i: usize, s: f64) -> f64 {
    debug_assert!((1..=n).contains(&i));
    let nf = n as f64;
    let s_i = ((nf - i as f64) / nf).powf(1.0 / r);
    let s_prev = ((nf - i as f64 + 1.0) / nf).powf(1.0 / r);
    if s < s_i {
        1.0
    } else if s > s_prev {
        0.0
    } else {
        (nf * (1.0 - s.powf(r)) + (1.0 - i as f64)).clamp(0.0, 1.0)
    }
}

/// Instantaneous Hamiltonian coefficients of `scheme` at `(s, t)`.
pub fn terms_at(scheme: &DriveScheme, params: &AmpParams, s: f64, t: f64) -> Result<HamiltonianTerms> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("annealing parameter s = {s} outside [0, 1]")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("time t = {t} must be finite and >= 0")));
    }
    scheme.validate(params.n)?;
    Ok(terms_unchecked(scheme, params.n, s, t))
}

/// [`terms_at`] without range checks, for the integrator's inner loop.
pub(crate) fn terms_unchecked(scheme: &DriveScheme, n: usize, s: f64, t: f64) -> HamiltonianTerms {
    let nf = n as f64;
    let w = 1.0 - s;
    let phase = |f: f64| (2.0 * PI * f * t).sin();
    match scheme {
        DriveScheme::Uniform | DriveScheme::ReverseAnneal { .. } => HamiltonianTerms::uniform_field(n, s, -w / nf),
        DriveScheme::Inhomogeneous { r } => HamiltonianTerms {
            n,
            diag_scale: s,
            x: (1..=n).map(|i| -gamma_i(*r, n, i, s) / nf).collect(),
            y: Vec::new(),
            xx: Vec::new(),
        },
        DriveScheme::Couplers { signs, .. } => HamiltonianTerms {
            n,
            diag_scale: s,
            x: vec![-w / nf; n],
            y: Vec::new(),
            xx: signs.iter().map(|r| s * w * r / nf).collect(),
        },
        DriveScheme::RfqaM { alpha_bar, kappa, freqs } => HamiltonianTerms {
            n,
            diag_scale: s,
            x: freqs.iter().map(|&f| -w * kappa * (1.0 + alpha_bar * phase(f))).collect(),
            y: Vec::new(),
            xx: Vec::new(),
        },
        DriveScheme::SyncM { alpha_bar, kappa, groups, group_freqs } => HamiltonianTerms {
            n,
            diag_scale: s,
            x: groups.iter().map(|&g| -w * kappa * (1.0 + alpha_bar * phase(group_freqs[g]))).collect(),
            y: Vec::new(),
            xx: Vec::new(),
        },
        DriveScheme::RfqaD { alpha_bar, kappa, freqs } => {
            let angles: Vec<f64> = freqs.iter().map(|&f| alpha_bar * phase(f)).collect();
            HamiltonianTerms {
                n,
                diag_scale: s,
                x: angles.iter().map(|a| -w * kappa * a.cos()).collect(),
                y: angles.iter().map(|a| -w * kappa * a.sin()).collect(),
                xx: Vec::new(),
            }
        }
        DriveScheme::RfqaMCouplers { base, kappa_r, coupler_freqs } => {
            let mut terms = terms_unchecked(base, n, s, t);
            terms.xx = coupler_freqs.iter().map(|&r| w * kappa_r * phase(r)).collect();
            terms
        }
    }
}

/// Closed interval of allowed `|f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub lo: f64,
    pub hi: f64,
}

impl FrequencyBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid(format!("frequency band must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

/// Band whose edges scale as `coeff / N^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub lo_coeff: f64,
    pub hi_coeff: f64,
    pub exponent: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self { lo_coeff: 0.01, hi_coeff: 0.02, exponent: 1.5 }
    }
}

impl BandSpec {
    pub fn band(&self, n: usize) -> Result<FrequencyBand> {
        let scale = (n as f64).powf(self.exponent);
        FrequencyBand::new(self.lo_coeff / scale, self.hi_coeff / scale)
    }
}

/// `n` signed frequencies with `|f|` uniform in the band and a fair sign.
pub fn sample_frequencies(n: usize, seed: u64, band: FrequencyBand) -> Result<Vec<f64>> {
    let band = FrequencyBand::new(band.lo, band.hi)?;
    let mut rng = rng_from_seed(seed);
    Ok(draw_frequencies(&mut rng, n, band))
}

fn draw_frequencies(rng: &mut impl Rng, count: usize, band: FrequencyBand) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let mag = rng.random_range(band.lo..=band.hi);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Annealing parameter of a reverse anneal at time `t`: down-ramp from 1 to
/// `s_pause`, hold for `dwell`, up-ramp back to 1. The two ramps share the
/// remaining `total_time - dwell` equally.
pub fn reverse_profile(s_pause: f64, dwell: f64, t: f64, total_time: f64) -> Result<f64> {
    if !(s_pause > 0.0 && s_pause < 1.0) {
        return Err(invalid(format!("pause point must lie in (0, 1), got {s_pause}")));
    }
    if !(dwell >= 0.0 && total_time >= dwell) {
        return Err(invalid(format!("dwell {dwell} does not fit in total time {total_time}")));
    }
    if !(0.0..=total_time).contains(&t) {
        return Err(invalid(format!("t = {t} outside [0, {total_time}]")));
    }
    let ramp = 0.5 * (total_time - dwell);
    Ok(reverse_s(s_pause, dwell, ramp, t))
}

pub(crate) fn reverse_s(s_pause: f64, dwell: f64, ramp: f64, t: f64) -> f64 {
    let drop = 1.0 - s_pause;
    if t < ramp {
        1.0 - drop * t / ramp
    } else if t <= ramp + dwell {
        s_pause
    } else {
        let u = ((t - ramp - dwell) / ramp).min(1.0);
        s_pause + drop * u
    }
}

/// Site groups for synchronized RFQA: `k` contiguous, near-equal blocks.
pub fn contiguous_groups(n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    (0..n).map(|i| i * k / n).collect()
}

fn default_kappa(n: usize) -> f64 {
    1.0 / n as f64
}

/// Recipe for drawing a [`DriveScheme`] at a given size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SchemeFamily {
    Uniform,
    Inhomogeneous {
        #[serde(default = "one")]
        r: f64,
    },
    Couplers { kind: CouplerKind },
    RfqaM {
        #[serde(default = "default_alpha")]
        alpha_bar: f64,
        /// Field magnitude is `kappa_coeff / N`.
        #[serde(default = "one")]
        kappa_coeff: f64,
        #[serde(default)]
        band: BandSpec,
    },
    RfqaD {
        #[serde(default = "default_alpha")]
        alpha_bar: f64,
        #[serde(default = "one")]
        kappa_coeff: f64,
        #[serde(default)]
        band: BandSpec,
    },
    SyncM {
        #[serde(default = "default_alpha")]
        alpha_bar: f64,
        #[serde(default = "one")]
        kappa_coeff: f64,
        #[serde(default = "two")]
        groups: usize,
        #[serde(default)]
        band: BandSpec,
    },
    RfqaMCouplers {
        /// Use SyncM as the base, with one coupler frequency per group pair.
        #[serde(default)]
        synchronized: bool,
        #[serde(default = "default_alpha")]
        alpha_bar: f64,
        #[serde(default = "one")]
        kappa_coeff: f64,
        #[serde(default = "two")]
        groups: usize,
        /// Coupler magnitude is `kappa_r_coeff / N^2`.
        #[serde(default = "one")]
        kappa_r_coeff: f64,
        #[serde(default)]
        band: BandSpec,
    },
    ReverseAnneal {
        #[serde(default = "default_pause_window")]
        pause_window: (f64, f64),
        /// Dwell is `dwell_coeff * N^2`.
        #[serde(default = "default_dwell")]
        dwell_coeff: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.9
}
fn default_pause_window() -> (f64, f64) {
    (0.3, 0.7)
}
fn default_dwell() -> f64 {
    4.0
}

impl SchemeFamily {
    /// All method names accepted by [`SchemeFamily::from_name`].
    pub const NAMES: [&'static str; 11] = [
        "uniform",
        "inhomogeneous",
        "ferro",
        "antiferro",
        "mixed",
        "rfqa-m",
        "rfqa-cm",
        "sync-m",
        "sync-mc",
        "rfqa-d",
        "reverse",
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        let band = BandSpec::default();
        Ok(match name {
            "uniform" | "S" => SchemeFamily::Uniform,
            "inhomogeneous" | "I" => SchemeFamily::Inhomogeneous { r: 1.0 },
            "ferro" | "C_F" => SchemeFamily::Couplers { kind: CouplerKind::Ferro },
            "antiferro" | "C_A" => SchemeFamily::Couplers { kind: CouplerKind::Antiferro },
            "mixed" | "C_M" => SchemeFamily::Couplers { kind: CouplerKind::Mixed },
            "rfqa-m" | "M" => SchemeFamily::RfqaM { alpha_bar: 0.9, kappa_coeff: 1.0, band },
            "rfqa-d" | "D" => SchemeFamily::RfqaD { alpha_bar: 0.9, kappa_coeff: 1.0, band },
            "sync-m" | "SyncM" => SchemeFamily::SyncM { alpha_bar: 0.9, kappa_coeff: 1.0, groups: 2, band },
            "rfqa-cm" | "CM" | "sync-mc" | "SyncMC" => SchemeFamily::RfqaMCouplers {
                synchronized: matches!(name, "sync-mc" | "SyncMC"),
                alpha_bar: 0.9,
                kappa_coeff: 1.0,
                groups: 2,
                kappa_r_coeff: 1.0,
                band,
            },
            "reverse" | "R" => SchemeFamily::ReverseAnneal {
                pause_window: default_pause_window(),
                dwell_coeff: default_dwell(),
            },
            other => {
                return Err(invalid(format!(
                    "unknown scheme '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeFamily::Uniform => "uniform",
            SchemeFamily::Inhomogeneous { .. } => "inhomogeneous",
            SchemeFamily::Couplers { kind: CouplerKind::Ferro } => "ferro",
            SchemeFamily::Couplers { kind: CouplerKind::Antiferro } => "antiferro",
            SchemeFamily::Couplers { kind: CouplerKind::Mixed } => "mixed",
            SchemeFamily::RfqaM { .. } => "rfqa-m",
            SchemeFamily::RfqaD { .. } => "rfqa-d",
            SchemeFamily::SyncM { .. } => "sync-m",
            SchemeFamily::RfqaMCouplers { synchronized: false, .. } => "rfqa-cm",
            SchemeFamily::RfqaMCouplers { synchronized: true, .. } => "sync-mc",
            SchemeFamily::ReverseAnneal { .. } => "reverse",
        }
    }

    /// Column label in the exponent table.
    pub fn column(&self) -> &'static str {
        match self.name() {
            "uniform" => "S",
            "inhomogeneous" => "I",
            "ferro" => "C_F",
            "antiferro" => "C_A",
            "mixed" => "C_M",
            "rfqa-m" => "M",
            "rfqa-cm" => "CM",
            "sync-m" => "SyncM",
            "sync-mc" => "SyncMC",
            "rfqa-d" => "D",
            _ => "R",
        }
    }

    /// No random ingredients: every draw yields the same scheme.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            SchemeFamily::Uniform
                | SchemeFamily::Inhomogeneous { .. }
                | SchemeFamily::Couplers { kind: CouplerKind::Ferro | CouplerKind::Antiferro }
        )
    }

    /// Draw a concrete scheme. `sweep_time` is the nominal forward-sweep
    /// duration at this size; reverse anneals ramp at the same rate.
    pub fn instantiate(&self, n: usize, seed: u64, sweep_time: f64) -> Result<DriveScheme> {
        let mut rng = rng_from_seed(seed);
        let scheme = match self {
            SchemeFamily::Uniform => DriveScheme::Uniform,
            SchemeFamily::Inhomogeneous { r } => DriveScheme::Inhomogeneous { r: *r },
            SchemeFamily::Couplers { kind } => {
                let signs = match kind.sign() {
                    Some(s) => vec![s; num_pairs(n)],
                    None => (0..num_pairs(n)).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect(),
                };
                DriveScheme::Couplers { kind: *kind, signs }
            }
            SchemeFamily::RfqaM { alpha_bar, kappa_coeff, band } => DriveScheme::RfqaM {
                alpha_bar: *alpha_bar,
                kappa: kappa_coeff * default_kappa(n),
                freqs: draw_frequencies(&mut rng, n, band.band(n)?),
            },
            SchemeFamily::RfqaD { alpha_bar, kappa_coeff, band } => DriveScheme::RfqaD {
                alpha_bar: *alpha_bar,
                kappa: kappa_coeff * default_kappa(n),
                freqs: draw_frequencies(&mut rng, n, band.band(n)?),
            },
            SchemeFamily::SyncM { alpha_bar, kappa_coeff, groups, band } => {
                let assignment = contiguous_groups(n, *groups);
                let k = assignment.iter().max().map_or(0, |m| m + 1);
                DriveScheme::SyncM {
                    alpha_bar: *alpha_bar,
                    kappa: kappa_coeff * default_kappa(n),
                    groups: assignment,
                    group_freqs: draw_frequencies(&mut rng, k, band.band(n)?),
                }
            }
            SchemeFamily::RfqaMCouplers { synchronized, alpha_bar, kappa_coeff, groups, kappa_r_coeff, band } => {
                let fb = band.band(n)?;
                let kappa = kappa_coeff * default_kappa(n);
                let (base, coupler_freqs) = if *synchronized {
                    let assignment = contiguous_groups(n, *groups);
                    let k = assignment.iter().max().map_or(0, |m| m + 1);
                    let group_freqs = draw_frequencies(&mut rng, k, fb);
                    // One frequency per unordered group pair (including a group with itself).
                    let pair_freqs = draw_frequencies(&mut rng, k * (k + 1) / 2, fb);
                    let gp = |a: usize, b: usize| {
                        let (a, b) = if a <= b { (a, b) } else { (b, a) };
                        a * (2 * k - a + 1) / 2 + (b - a)
                    };
                    let cf = pairs(n).map(|(i, j)| pair_freqs[gp(assignment[i], assignment[j])]).collect();
                    (
                        DriveScheme::SyncM { alpha_bar: *alpha_bar, kappa, groups: assignment, group_freqs },
                        cf,
                    )
                } else {
                    let freqs = draw_frequencies(&mut rng, n, fb);
                    let cf = draw_frequencies(&mut rng, num_pairs(n), fb);
                    (DriveScheme::RfqaM { alpha_bar: *alpha_bar, kappa, freqs }, cf)
                };
                DriveScheme::RfqaMCouplers {
                    base: Box::new(base),
                    kappa_r: kappa_r_coeff / (n * n) as f64,
                    coupler_freqs,
                }
            }
            SchemeFamily::ReverseAnneal { pause_window: (lo, hi), dwell_coeff } => {
                if !(0.0 < *lo && lo <= hi && *hi < 1.0) {
                    return Err(invalid(format!("pause window [{lo}, {hi}] must lie inside (0, 1)")));
                }
                let s_pause = if lo == hi { *lo } else { rng.random_range(*lo..*hi) };
                DriveScheme::ReverseAnneal {
                    s_pause,
                    dwell: dwell_coeff * (n * n) as f64,
                    ramp: (1.0 - s_pause) * sweep_time,
                }
            }
        };
        scheme.validate(n)?;
        Ok(scheme)
    }
}
