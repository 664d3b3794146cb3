//! The asymmetric magnetization problem.
//!
//! The classical energy is a piecewise-linear function of the total
//! magnetization `m = (number of up spins) / N`:
//!
//! ```text
//! f(m) = m / x_p                               m <  x_p
//! f(m) = 1 - (1 + A) (m - x_p) / (1 - x_p)     m >= x_p
//! ```
//!
//! At `m == x_p` (possible when `x_p * N` is an integer) the second branch is
//! used. Energies are dimensionless; the problem Hamiltonian carries unit
//! coefficient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance used to decide whether a magnetization lies on the `k / N` grid.
const GRID_TOL: f64 = 1e-9;

/// One AMP instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpParams {
    pub n: usize,
    pub a: f64,
    pub xp: f64,
}

impl AmpParams {
    pub fn new(n: usize, a: f64, xp: f64) -> Result<Self> {
        let p = Self { n, a, xp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("spin count must be >= 2, got {}", self.n)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid(format!("asymmetry A must be > 0, got {}", self.a)));
        }
        if !(self.xp > 0.5 && self.xp < 1.0) {
            return Err(invalid(format!("peak x_p must lie in (0.5, 1), got {}", self.xp)));
        }
        Ok(())
    }

    /// Same landscape, different spin count.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    /// `f(x)` on the continuum, no grid check.
    pub fn f(&self, x: f64) -> f64 {
        if x < self.xp {
            x / self.xp
        } else {
            1.0 - (1.0 + self.a) * (x - self.xp) / (1.0 - self.xp)
        }
    }

    /// Energy of the sector with `k` up spins.
    pub fn energy_of_count(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n);
        // k == n is special-cased so f(0) - f(1) == A holds without rounding.
        if k == self.n {
            return -self.a;
        }
        let x = k as f64 / self.n as f64;
        // Keep the x >= x_p convention exact when x_p * N is an integer.
        if (k as f64 - self.xp * self.n as f64).abs() < GRID_TOL {
            return 1.0;
        }
        self.f(x)
    }

    /// `f(k / N)` for `k = 0..=N`.
    pub fn energy_table(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.energy_of_count(k)).collect()
    }
}

/// Classical energy at magnetization `m`, which must lie on the `k / N` grid.
pub fn classical_energy(params: &AmpParams, m: f64) -> Result<f64> {
    params.validate()?;
    let k = grid_index(params.n, m)?;
    Ok(params.energy_of_count(k))
}

fn grid_index(n: usize, m: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&m) {
        return Err(invalid(format!("magnetization {m} outside [0, 1]")));
    }
    let kf = m * n as f64;
    let k = kf.round();
    if (kf - k).abs() > GRID_TOL * n as f64 {
        return Err(invalid(format!("magnetization {m} is not a multiple of 1/{n}")));
    }
    Ok(k as usize)
}

/// Magnetization of a bitstring; `true` is spin up (`sigma^z = +1`).
pub fn magnetization(bits: &[bool]) -> f64 {
    if bits.is_empty() {
        return 0.0;
    }
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

/// Magnetization of basis index `index` for `n` spins (bit `b` is spin `b`).
pub fn magnetization_of_index(index: usize, n: usize) -> Result<f64> {
    if n >= usize::BITS as usize || index >> n != 0 {
        return Err(invalid(format!("basis index {index} out of range for {n} spins")));
    }
    Ok(index.count_ones() as f64 / n as f64)
}

/// Binomial coefficient as `f64`; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c.round()
}

/// Fraction of the `2^N` bitstrings in each magnetization sector.
///
/// Keys are the sector index `k`; the magnetization is `k / n`. Returned as
/// an ordered map so iteration runs from `m = 0` to `m = 1`.
pub fn density_of_states(n: usize) -> Result<BTreeMap<usize, f64>> {
    if n == 0 {
        return Err(invalid("density of states needs n >= 1"));
    }
    let total = 2f64.powi(n as i32);
    Ok((0..=n).map(|k| (k, binomial(n, k) / total)).collect())
}

/// `(m, weight)` pairs of [`density_of_states`].
pub fn density_of_states_pairs(n: usize) -> Result<Vec<(f64, f64)>> {
    Ok(density_of_states(n)?
        .into_iter()
        .map(|(k, w)| (k as f64 / n as f64, w))
        .collect())
}

/// Named `(A, x_p)` pair of a difficulty ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSet {
    pub name: String,
    pub a: f64,
    pub xp: f64,
}

impl ProblemSet {
    pub fn params(&self, n: usize) -> Result<AmpParams> {
        AmpParams::new(n, self.a, self.xp)
    }

    /// Label in the `A=..,xp=..` form used in tables.
    pub fn label(&self) -> String {
        format!("A={},xp={}", self.a, self.xp)
    }
}

/// Ordered list of problem sets, hardest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyEnsemble {
    pub sets: Vec<ProblemSet>,
}

impl Default for DifficultyEnsemble {
    fn default() -> Self {
        let mk = |name: &str, a, xp| ProblemSet {
            name: name.to_string(),
            a,
            xp,
        };
        Self {
            sets: vec![
                mk("hardest", 0.2, 0.8),
                mk("hard", 0.28, 0.7),
                mk("easy", 0.3, 0.64),
                mk("easiest", 0.34, 0.59),
            ],
        }
    }
}

impl DifficultyEnsemble {
    /// Look a set up by name, index (`0..`), or an explicit `A,xp` pair.
    pub fn resolve(&self, key: &str) -> Result<ProblemSet> {
        if let Some(s) = self.sets.iter().find(|s| s.name == key) {
            return Ok(s.clone());
        }
        if let Ok(i) = key.parse::<usize>() {
            return self
                .sets
                .get(i)
                .cloned()
                .ok_or_else(|| invalid(format!("set index {i} out of range")));
        }
        if let Some((a, xp)) = key.split_once(',') {
            let a: f64 = a.trim().trim_start_matches("A=").parse().map_err(|_| invalid(format!("bad set '{key}'")))?;
            let xp: f64 = xp.trim().trim_start_matches("xp=").parse().map_err(|_| invalid(format!("bad set '{key}'")))?;
            AmpParams::new(2, a, xp)?;
            return Ok(ProblemSet {
                name: format!("A={a},xp={xp}"),
                a,
                xp,
            });
        }
        Err(invalid(format!(
            "unknown problem set '{key}' (expected one of {} or 'A,xp')",
            self.sets.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ")
        )))
    }
}
