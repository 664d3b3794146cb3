//! Instantaneous spectra, minimum gaps, and analytic gap estimates.
//!
//! Symmetric schemes are diagonalized densely in the `N + 1` dimensional
//! Dicke subspace. Other schemes use the full `2^N` space: dense for small
//! dimensions, Lanczos on the matrix-free kernel otherwise.
//!
//! The analytic estimates ([`critical_kappa`], [`forward_gap`]) work in
//! "field units": the Hamiltonian `-kappa sum_i X_i + N f(m)`, in which one
//! spin flip out of the false well costs `1 / x_p`. The sweep Hamiltonian
//! `-(1-s)/N sum_i X_i + s f(m)` equals `s / N` times the field-unit one with
//! `kappa = (1 - s) / s`.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drives::{terms_unchecked, DriveScheme};
use crate::error::{invalid, AmpError, Result};
use crate::hilbert::{HamiltonianTerms, Kernel};
use crate::lanczos::{self, LanczosOptions};
use crate::problem::{binomial, AmpParams};
use crate::C64;

/// Largest full-space dimension diagonalized densely.
const DENSE_MAX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Number of coarse grid points over `[0, 1]`.
    pub grid: usize,
    /// Physical time at which time-dependent schemes are frozen.
    pub t: f64,
    /// Relative tolerance in `s` of the refined minimum.
    pub s_tol: f64,
    /// Refuse full-space work above this many spins.
    pub full_space_cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { grid: 200, t: 0.0, s_tol: 1e-6, full_space_cap: 14 }
    }
}

/// Sampled `E_1 - E_0` along the anneal with a refined minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub s_grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub s_min: f64,
    pub delta_min: f64,
}

impl GapProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["s", "gap"])?;
        for (s, g) in self.s_grid.iter().zip(&self.gaps) {
            wtr.write_record(&[format!("{s}"), format!("{g:.12e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Strict interior local minima of the sampled gaps.
    pub fn local_minima(&self) -> Vec<usize> {
        local_minima(&self.gaps)
    }
}

/// `E_k - E_0` for `k = 1..=K` along the anneal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagram {
    pub s_grid: Vec<f64>,
    /// `diffs[j][k-1]` is `E_k - E_0` at `s_grid[j]`.
    pub diffs: Vec<Vec<f64>>,
}

impl LevelDiagram {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let levels = self.diffs.iter().map(Vec::len).max().unwrap_or(0);
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["s".to_string()];
        header.extend((1..=levels).map(|k| format!("e{k}")));
        wtr.write_record(&header)?;
        for (s, row) in self.s_grid.iter().zip(&self.diffs) {
            let mut rec = vec![format!("{s}")];
            rec.extend((0..levels).map(|k| row.get(k).map(|v| format!("{v:.12e}")).unwrap_or_default()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// The `E_1 - E_0` column.
    pub fn first_gap(&self) -> Vec<f64> {
        self.diffs.iter().map(|r| r.first().copied().unwrap_or(f64::NAN)).collect()
    }
}

/// Squared overlaps of the instantaneous ground and first excited states
/// with the two classical minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapTrace {
    pub s_grid: Vec<f64>,
    pub ground_up: Vec<f64>,
    pub ground_down: Vec<f64>,
    pub excited_up: Vec<f64>,
    pub excited_down: Vec<f64>,
}

impl OverlapTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["s", "ground_up", "ground_down", "excited_up", "excited_down"])?;
        for j in 0..self.s_grid.len() {
            wtr.write_record(&[
                format!("{}", self.s_grid[j]),
                format!("{:.12e}", self.ground_up[j]),
                format!("{:.12e}", self.ground_down[j]),
                format!("{:.12e}", self.excited_up[j]),
                format!("{:.12e}", self.excited_down[j]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn local_minima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1]).collect()
}

/// Kernel matching the scheme: Dicke subspace when the scheme is symmetric.
pub fn kernel_for(scheme: &DriveScheme, params: &AmpParams, full_space_cap: usize) -> Result<Kernel> {
    params.validate()?;
    scheme.validate(params.n)?;
    if scheme.is_symmetric() {
        Ok(Kernel::symmetric(params))
    } else if params.n > full_space_cap {
        Err(invalid(format!(
            "scheme '{}' needs the full 2^N space; N = {} exceeds the cap of {}",
            scheme.label(),
            params.n,
            full_space_cap
        )))
    } else {
        Ok(Kernel::full(params))
    }
}

fn dense_matrix(kernel: &Kernel, terms: &HamiltonianTerms) -> DMatrix<C64> {
    let dim = kernel.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut e = vec![C64::default(); dim];
    let mut col = vec![C64::default(); dim];
    for j in 0..dim {
        e[j] = C64::new(1.0, 0.0);
        kernel.apply(terms, &e, &mut col);
        e[j] = C64::default();
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// Lowest `k` eigenvalues (ascending) and, if requested, eigenvectors.
pub fn lowest_levels(
    kernel: &Kernel,
    terms: &HamiltonianTerms,
    k: usize,
    want_vectors: bool,
    s: f64,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let dim = kernel.dim();
    if kernel.is_symmetric() || dim <= DENSE_MAX_DIM {
        let h = dense_matrix(kernel, terms);
        if terms.has_y() {
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let take = k.min(dim);
            let vals = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = if want_vectors {
                order[..take].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect()
            } else {
                Vec::new()
            };
            Ok((vals, vecs))
        } else {
            let real = h.map(|c| c.re);
            let eig = SymmetricEigen::new(real);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let take = k.min(dim);
            let vals = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = if want_vectors {
                order[..take]
                    .iter()
                    .map(|&i| eig.eigenvectors.column(i).iter().map(|&x| C64::new(x, 0.0)).collect())
                    .collect()
            } else {
                Vec::new()
            };
            Ok((vals, vecs))
        }
    } else {
        let opts = LanczosOptions { max_iter: 600.min(dim), ..LanczosOptions::default() };
        let res = lanczos::lowest(dim, k, want_vectors, opts, |x, y| kernel.apply(terms, x, y))
            .map_err(|detail| AmpError::EigenNotConverged { s, detail })?;
        Ok((res.values, res.vectors))
    }
}

fn gap_at(kernel: &Kernel, scheme: &DriveScheme, n: usize, s: f64, t: f64) -> Result<f64> {
    let terms = terms_unchecked(scheme, n, s, t);
    let (vals, _) = lowest_levels(kernel, &terms, 2, false, s)?;
    if vals.len() < 2 {
        return Err(AmpError::EigenNotConverged { s, detail: "fewer than two distinct levels".into() });
    }
    Ok(vals[1] - vals[0])
}

fn uniform_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|j| j as f64 / (points - 1) as f64).collect()
}

/// Gap `E_1 - E_0` on a coarse grid, with the minimum refined by
/// golden-section search on the bracket around the coarse minimizer.
pub fn gap_profile(scheme: &DriveScheme, params: &AmpParams, opts: &SpectrumOptions) -> Result<GapProfile> {
    let kernel = kernel_for(scheme, params, opts.full_space_cap)?;
    let n = params.n;
    let s_grid = uniform_grid(opts.grid);
    let gaps = s_grid
        .par_iter()
        .map(|&s| gap_at(&kernel, scheme, n, s, opts.t))
        .collect::<Result<Vec<f64>>>()?;
    let (imin, &coarse_min) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let lo = s_grid[imin.saturating_sub(1)];
    let hi = s_grid[(imin + 1).min(s_grid.len() - 1)];
    let (s_ref, g_ref) = golden_section(lo, hi, opts.s_tol, |s| gap_at(&kernel, scheme, n, s, opts.t))?;
    let (s_min, delta_min) = if g_ref <= coarse_min { (s_ref, g_ref) } else { (s_grid[imin], coarse_min) };
    Ok(GapProfile { s_grid, gaps, s_min, delta_min })
}

fn golden_section<F>(mut a: f64, mut b: f64, rel_tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * mid.abs().max(1e-3) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Lowest `levels + 1` eigenvalues on a grid, reported as differences to
/// the ground energy.
pub fn level_diagram(scheme: &DriveScheme, params: &AmpParams, levels: usize, opts: &SpectrumOptions) -> Result<LevelDiagram> {
    let kernel = kernel_for(scheme, params, opts.full_space_cap)?;
    let s_grid = uniform_grid(opts.grid);
    let diffs = s_grid
        .par_iter()
        .map(|&s| {
            let terms = terms_unchecked(scheme, params.n, s, opts.t);
            let (vals, _) = lowest_levels(&kernel, &terms, levels + 1, false, s)?;
            Ok(vals.iter().skip(1).map(|e| e - vals[0]).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(LevelDiagram { s_grid, diffs })
}

/// Overlaps of the two lowest instantaneous eigenstates with `|all up>`
/// and `|all down>` at each `s`.
pub fn overlap_trace(scheme: &DriveScheme, params: &AmpParams, s_grid: &[f64], opts: &SpectrumOptions) -> Result<OverlapTrace> {
    let kernel = kernel_for(scheme, params, opts.full_space_cap)?;
    for &s in s_grid {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid(format!("s = {s} outside [0, 1]")));
        }
    }
    let up = kernel.all_up_index();
    let down = kernel.all_down_index();
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let terms = terms_unchecked(scheme, params.n, s, opts.t);
            let (_, vecs) = lowest_levels(&kernel, &terms, 2, true, s)?;
            let ov = |v: &Vec<C64>, i: usize| v[i].norm_sqr();
            let g = &vecs[0];
            let e = vecs.get(1).unwrap_or(g);
            Ok([ov(g, up), ov(g, down), ov(e, up), ov(e, down)])
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    Ok(OverlapTrace {
        s_grid: s_grid.to_vec(),
        ground_up: rows.iter().map(|r| r[0]).collect(),
        ground_down: rows.iter().map(|r| r[1]).collect(),
        excited_up: rows.iter().map(|r| r[2]).collect(),
        excited_down: rows.iter().map(|r| r[3]).collect(),
    })
}

/// Field strength `(1 - s) / s` of the sweep at annealing parameter `s`.
pub fn s_to_field(s: f64) -> f64 {
    (1.0 - s) / s
}

/// Inverse of [`s_to_field`].
pub fn field_to_s(kappa: f64) -> f64 {
    1.0 / (1.0 + kappa)
}

/// Per-spin energies `(false well, true well)` in field units at field
/// `kappa`, each well relaxed by the transverse field.
///
/// A spin-coherent state at magnetization `m` has per-spin energy
/// `f(m) - 2 kappa sqrt(m (1 - m))`; each well is minimized on its own side
/// of the peak. To second order in `kappa` this reproduces the shifts
/// `-kappa^2 x_p` and `-kappa^2 (1 - x_p) / (1 + A)`.
pub fn well_energies(params: &AmpParams, kappa: f64) -> (f64, f64) {
    let (a, xp) = (params.a, params.xp);
    // With m = (1 - cos th)/2, the energy on a linear branch of slope `g`
    // through (m0, f0) is f0 + g ((1 - cos th)/2 - m0) - kappa sin th.
    let branch_min = |slope: f64, m0: f64, f0: f64, lo: f64, hi: f64| {
        let th = (2.0 * kappa).atan2(slope);
        let m = ((1.0 - th.cos()) / 2.0).clamp(lo, hi);
        f0 + slope * (m - m0) - 2.0 * kappa * (m * (1.0 - m)).sqrt()
    };
    let e_false = branch_min(1.0 / xp, 0.0, 0.0, 0.0, xp);
    let e_true = branch_min(-(1.0 + a) / (1.0 - xp), 1.0, -a, xp, 1.0);
    (e_false, e_true)
}

/// Field strength at which the relaxed false-well and true-well energies
/// cross, in field units.
pub fn critical_kappa(params: &AmpParams) -> Result<f64> {
    let (lo, hi) = (1e-9, 50.0);
    let diff = |k: f64| {
        let (f, t) = well_energies(params, k);
        f - t
    };
    let (mut a, mut b) = (lo, hi);
    let (da, db) = (diff(a), diff(b));
    if da.signum() == db.signum() {
        return Err(AmpError::NoCrossing { lo, hi, diff_lo: da, diff_hi: db });
    }
    let mut fa = da;
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        let fm = diff(m);
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Resummed flip-energy denominators `U_n`, `n = 1..N-1`, in field units.
pub fn flip_denominators(params: &AmpParams, kappa_c: f64) -> Vec<f64> {
    let (n, a, xp) = (params.n, params.a, params.xp);
    let k2 = kappa_c * kappa_c;
    let left = 1.0 / xp + 2.0 * k2 * xp;
    let right = (1.0 + a) / (1.0 - xp) + 2.0 * k2 * (1.0 - xp) / (1.0 + a);
    (1..n)
        .map(|j| {
            if j as f64 <= xp * n as f64 + 1e-9 {
                j as f64 * left
            } else {
                (n - j) as f64 * right
            }
        })
        .collect()
}

/// Forward-approximation minimum gap `N! kappa^N / prod U_n` in field units,
/// optionally multiplied by the empirical `2 pi / N` correction.
pub fn forward_gap(params: &AmpParams, kappa_c: f64, corrected: bool) -> Result<f64> {
    params.validate()?;
    if !(kappa_c > 0.0 && kappa_c.is_finite()) {
        return Err(invalid(format!("critical field must be > 0, got {kappa_c}")));
    }
    let n = params.n;
    let denominators = flip_denominators(params, kappa_c);
    if let Some(j) = denominators.iter().position(|&u| u == 0.0) {
        return Err(AmpError::DegenerateDenominator { n: j + 1 });
    }
    // Accumulate in logs; N! and kappa^N overflow long before the ratio does.
    let log_num: f64 = (1..=n).map(|j| (j as f64).ln()).sum::<f64>() + n as f64 * kappa_c.ln();
    let log_den: f64 = denominators.iter().map(|u| u.ln()).sum();
    let mut gap = (log_num - log_den).exp();
    if corrected {
        gap *= 2.0 * std::f64::consts::PI / n as f64;
    }
    Ok(gap)
}

/// [`forward_gap`] rescaled by `s_c = 1 / (1 + kappa_c)` for comparison
/// with minimum gaps of the uniform sweep.
///
/// The field-unit Hamiltonian is `N / s` times the sweep Hamiltonian; only
/// the factor `s_c` is applied here. Together with the `2 pi / N`
/// correction this is the normalization under which the prediction tracks
/// the numerical gaps.
pub fn forward_gap_sweep_units(params: &AmpParams, kappa_c: f64, corrected: bool) -> Result<f64> {
    Ok(forward_gap(params, kappa_c, corrected)? * field_to_s(kappa_c))
}

/// Multi-photon enhanced transition rate `(Omega_0^2 / W)(1 + 2 Lambda^2)^N`.
pub fn multiphoton_rate(omega0: f64, w: f64, lambda: f64, n: usize) -> Result<f64> {
    check_rate_inputs(w, lambda)?;
    Ok(omega0 * omega0 / w * (1.0 + 2.0 * lambda * lambda).powi(n as i32))
}

/// The same rate as an explicit sum over photon order `l = 0..=N` of
/// `Lambda^(2l) C(N, l) 2^l`.
pub fn multiphoton_rate_sum(omega0: f64, w: f64, lambda: f64, n: usize) -> Result<f64> {
    check_rate_inputs(w, lambda)?;
    let sum: f64 = (0..=n)
        .map(|l| lambda.powi(2 * l as i32) * binomial(n, l) * 2f64.powi(l as i32))
        .sum();
    Ok(omega0 * omega0 / w * sum)
}

fn check_rate_inputs(w: f64, lambda: f64) -> Result<()> {
    if !(w > 0.0) {
        return Err(invalid(format!("sweep energy scale W must be > 0, got {w}")));
    }
    if !(lambda >= 0.0) {
        return Err(invalid(format!("suppression factor must be >= 0, got {lambda}")));
    }
    Ok(())
}
