//! State vectors and matrix-free Hamiltonian kernels.
//!
//! Basis convention for the full space: index `i` in `0..2^N` is a
//! `sigma^z` product state, and bit `b` of `i` is spin `b` (little-endian),
//! with bit value 1 meaning spin up. `sigma^y` follows
//! `sigma^y |0> = i |1>`, `sigma^y |1> = -i |0>` on each bit.
//!
//! The symmetric (Dicke) subspace has one basis vector per number of up
//! spins `k = 0..=N`, the normalized uniform superposition over the `C(N, k)`
//! bitstrings in that sector.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, AmpError, Result};
use crate::problem::{binomial, AmpParams};
use crate::C64;

const SYM_TOL: f64 = 1e-13;

/// Index of pair `(i, j)`, `i < j`, in the row-major upper triangle.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j`, in [`pair_index`] order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Coefficients of one instantaneous Hamiltonian
/// `H = diag_scale f(m) + sum_i x_i X_i + sum_i y_i Y_i + sum_{i<j} xx_ij X_i X_j`.
///
/// `y` and `xx` are either empty (all zero) or of length `n` and
/// `n (n - 1) / 2` respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerms {
    pub n: usize,
    pub diag_scale: f64,
    pub x: Vec<f64>,
    #[serde(default)]
    pub y: Vec<f64>,
    #[serde(default)]
    pub xx: Vec<f64>,
}

impl HamiltonianTerms {
    pub fn diagonal(n: usize, diag_scale: f64) -> Self {
        Self {
            n,
            diag_scale,
            x: vec![0.0; n],
            y: Vec::new(),
            xx: Vec::new(),
        }
    }

    pub fn uniform_field(n: usize, diag_scale: f64, x: f64) -> Self {
        Self {
            n,
            diag_scale,
            x: vec![x; n],
            y: Vec::new(),
            xx: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.n {
            return Err(AmpError::DimensionMismatch { expected: self.n, got: self.x.len() });
        }
        if !self.y.is_empty() && self.y.len() != self.n {
            return Err(AmpError::DimensionMismatch { expected: self.n, got: self.y.len() });
        }
        if !self.xx.is_empty() && self.xx.len() != num_pairs(self.n) {
            return Err(AmpError::DimensionMismatch { expected: num_pairs(self.n), got: self.xx.len() });
        }
        let all = std::iter::once(&self.diag_scale).chain(&self.x).chain(&self.y).chain(&self.xx);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite Hamiltonian coefficient"));
        }
        Ok(())
    }

    pub fn xx_at(&self, i: usize, j: usize) -> f64 {
        if self.xx.is_empty() {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.xx[pair_index(self.n, a, b)]
    }

    pub fn has_y(&self) -> bool {
        self.y.iter().any(|&c| c != 0.0)
    }

    /// Site-uniform fields and pair-uniform couplers.
    pub fn is_symmetric(&self) -> bool {
        fn uniform(v: &[f64]) -> bool {
            match v.first() {
                None => true,
                Some(&first) => {
                    let scale = v.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
                    v.iter().all(|&c| (c - first).abs() <= SYM_TOL * scale)
                }
            }
        }
        uniform(&self.x) && uniform(&self.y) && uniform(&self.xx)
    }

    /// `a * self + b * other`, used by the Magnus integrator.
    pub fn combine(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Self {
        debug_assert_eq!(lhs.n, rhs.n);
        let lin = |u: &[f64], v: &[f64]| -> Vec<f64> {
            match (u.is_empty(), v.is_empty()) {
                (true, true) => Vec::new(),
                (false, true) => u.iter().map(|p| a * p).collect(),
                (true, false) => v.iter().map(|q| b * q).collect(),
                (false, false) => u.iter().zip(v).map(|(p, q)| a * p + b * q).collect(),
            }
        };
        Self {
            n: lhs.n,
            diag_scale: a * lhs.diag_scale + b * rhs.diag_scale,
            x: lin(&lhs.x, &rhs.x),
            y: lin(&lhs.y, &rhs.y),
            xx: lin(&lhs.xx, &rhs.xx),
        }
    }

    /// Upper bound on the operator norm, given `max |f|`.
    pub fn norm_bound(&self, max_abs_energy: f64) -> f64 {
        let x: f64 = self.x.iter().map(|c| c.abs()).sum();
        let y: f64 = self.y.iter().map(|c| c.abs()).sum();
        let xx: f64 = self.xx.iter().map(|c| c.abs()).sum();
        self.diag_scale.abs() * max_abs_energy + x + y + xx
    }
}

/// Amplitudes over the `2^N` product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, amps: vec![C64::new(0.0, 0.0); 1 << n] }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut s = Self::zeros(n);
        s.amps[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn all_up(n: usize) -> Self {
        Self::basis(n, (1 << n) - 1)
    }

    pub fn all_down(n: usize) -> Self {
        Self::basis(n, 0)
    }

    /// Ground state of `-sum_i X_i`.
    pub fn uniform(n: usize) -> Self {
        let a = (1.0 / (1u64 << n) as f64).sqrt();
        Self { n, amps: vec![C64::new(a, 0.0); 1 << n] }
    }

    pub fn from_amps(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(AmpError::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// CSV dump of `(index, re, im)` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "re", "im"])?;
        for (i, a) in self.amps.iter().enumerate() {
            wtr.write_record(&[i.to_string(), format!("{:.17e}", a.re), format!("{:.17e}", a.im)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Amplitudes over the `N + 1` Dicke sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl SymmetricState {
    pub fn zeros(n: usize) -> Self {
        Self { n, amps: vec![C64::new(0.0, 0.0); n + 1] }
    }

    pub fn sector(n: usize, k: usize) -> Self {
        let mut s = Self::zeros(n);
        s.amps[k] = C64::new(1.0, 0.0);
        s
    }

    /// The full-space uniform superposition, expressed in sectors.
    pub fn uniform(n: usize) -> Self {
        let total = 2f64.powi(n as i32);
        Self {
            n,
            amps: (0..=n).map(|k| C64::new((binomial(n, k) / total).sqrt(), 0.0)).collect(),
        }
    }

    pub fn from_amps(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != n + 1 {
            return Err(AmpError::DimensionMismatch { expected: n + 1, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Spread each sector amplitude evenly over its bitstrings.
pub fn embed(phi: &SymmetricState) -> StateVector {
    let n = phi.n;
    let weights: Vec<f64> = (0..=n).map(|k| binomial(n, k).sqrt().recip()).collect();
    let amps = (0..1usize << n)
        .map(|i| {
            let k = i.count_ones() as usize;
            phi.amps[k] * weights[k]
        })
        .collect();
    StateVector { n, amps }
}

/// Component of `psi` along each Dicke basis vector.
pub fn project(psi: &StateVector) -> SymmetricState {
    let n = psi.n;
    let mut amps = vec![C64::new(0.0, 0.0); n + 1];
    for (i, a) in psi.amps.iter().enumerate() {
        amps[i.count_ones() as usize] += a;
    }
    for (k, a) in amps.iter_mut().enumerate() {
        *a /= binomial(n, k).sqrt();
    }
    SymmetricState { n, amps }
}

/// Matrix-free `H` action in the full `2^N` space.
#[derive(Debug, Clone)]
pub struct FullKernel {
    n: usize,
    energies: Vec<f64>,
    max_abs_energy: f64,
}

impl FullKernel {
    pub fn new(params: &AmpParams) -> Self {
        let table = params.energy_table();
        let energies = (0..1usize << params.n).map(|i| table[i.count_ones() as usize]).collect();
        let max_abs_energy = table.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Self { n: params.n, energies, max_abs_energy }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `out = H input`. Terms are assumed validated.
    pub fn apply(&self, terms: &HamiltonianTerms, input: &[C64], out: &mut [C64]) {
        let dim = self.dim();
        debug_assert!(input.len() == dim && out.len() == dim);
        let d = terms.diag_scale;
        for ((o, &e), &a) in out.iter_mut().zip(&self.energies).zip(input) {
            *o = a * (d * e);
        }
        for (site, &c) in terms.x.iter().enumerate() {
            if c != 0.0 {
                flip_accumulate(input, out, 1 << site, c);
            }
        }
        for (site, &c) in terms.y.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mask = 1usize << site;
            let up = C64::new(0.0, c);
            let mut base = 0;
            while base < dim {
                for lo in base..base + mask {
                    let hi = lo + mask;
                    // |lo> has the bit clear, |hi> has it set.
                    out[hi] += up * input[lo];
                    out[lo] -= up * input[hi];
                }
                base += 2 * mask;
            }
        }
        if !terms.xx.is_empty() {
            for ((i, j), &c) in pairs(self.n).zip(&terms.xx) {
                if c != 0.0 {
                    let mask = (1usize << i) | (1usize << j);
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += input[k ^ mask] * c;
                    }
                }
            }
        }
    }

    pub fn norm_bound(&self, terms: &HamiltonianTerms) -> f64 {
        terms.norm_bound(self.max_abs_energy)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.energies
    }
}

#[inline]
fn flip_accumulate(input: &[C64], out: &mut [C64], mask: usize, c: f64) {
    let dim = input.len();
    let mut base = 0;
    while base < dim {
        let (lo_in, hi_in) = input[base..base + 2 * mask].split_at(mask);
        let (lo_out, hi_out) = out[base..base + 2 * mask].split_at_mut(mask);
        for (o, a) in lo_out.iter_mut().zip(hi_in) {
            *o += a * c;
        }
        for (o, a) in hi_out.iter_mut().zip(lo_in) {
            *o += a * c;
        }
        base += 2 * mask;
    }
}

/// `H` action restricted to the Dicke subspace. Only valid for symmetric
/// term sets.
#[derive(Debug, Clone)]
pub struct SymmetricKernel {
    n: usize,
    energies: Vec<f64>,
    /// `<k+1| sum_i sigma^+_i |k> = sqrt((N - k)(k + 1))`.
    ladder: Vec<f64>,
    max_abs_energy: f64,
}

impl SymmetricKernel {
    pub fn new(params: &AmpParams) -> Self {
        let n = params.n;
        let energies = params.energy_table();
        let max_abs_energy = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let ladder = (0..n).map(|k| (((n - k) * (k + 1)) as f64).sqrt()).collect();
        Self { n, energies, ladder, max_abs_energy }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn check(&self, terms: &HamiltonianTerms) -> Result<()> {
        if terms.n != self.n {
            return Err(AmpError::DimensionMismatch { expected: self.n, got: terms.n });
        }
        if !terms.is_symmetric() {
            return Err(AmpError::NotSymmetric(
                "fields must be site-uniform and couplers pair-uniform".into(),
            ));
        }
        Ok(())
    }

    /// `out += c * S_x input` with `S_x = sum_i X_i`.
    fn add_sx(&self, input: &[C64], out: &mut [C64], c: f64) {
        for (k, &l) in self.ladder.iter().enumerate() {
            out[k + 1] += input[k] * (c * l);
            out[k] += input[k + 1] * (c * l);
        }
    }

    /// `out = H input`; terms are assumed symmetric.
    pub fn apply(&self, terms: &HamiltonianTerms, input: &[C64], out: &mut [C64]) {
        let d = terms.diag_scale;
        for ((o, &e), &a) in out.iter_mut().zip(&self.energies).zip(input) {
            *o = a * (d * e);
        }
        if let Some(&cx) = terms.x.first() {
            if cx != 0.0 {
                self.add_sx(input, out, cx);
            }
        }
        if let Some(&cy) = terms.y.first() {
            if cy != 0.0 {
                // sum_i Y_i = i S^+ - i S^- under the bit convention above.
                let up = C64::new(0.0, cy);
                for (k, &l) in self.ladder.iter().enumerate() {
                    out[k + 1] += up * input[k] * l;
                    out[k] -= up * input[k + 1] * l;
                }
            }
        }
        if let Some(&cxx) = terms.xx.first() {
            if cxx != 0.0 {
                // sum_{i<j} X_i X_j = (S_x^2 - N) / 2
                let mut tmp = vec![C64::new(0.0, 0.0); self.dim()];
                self.add_sx(input, &mut tmp, 1.0);
                let mut tmp2 = vec![C64::new(0.0, 0.0); self.dim()];
                self.add_sx(&tmp, &mut tmp2, 1.0);
                let nf = self.n as f64;
                for ((o, t), a) in out.iter_mut().zip(&tmp2).zip(input) {
                    *o += (t - a * nf) * (0.5 * cxx);
                }
            }
        }
    }

    pub fn norm_bound(&self, terms: &HamiltonianTerms) -> f64 {
        terms.norm_bound(self.max_abs_energy)
    }
}

/// Either representation behind one interface.
#[derive(Debug, Clone)]
pub enum Kernel {
    Full(FullKernel),
    Symmetric(SymmetricKernel),
}

impl Kernel {
    pub fn full(params: &AmpParams) -> Self {
        Kernel::Full(FullKernel::new(params))
    }

    pub fn symmetric(params: &AmpParams) -> Self {
        Kernel::Symmetric(SymmetricKernel::new(params))
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Full(k) => k.dim(),
            Kernel::Symmetric(k) => k.dim(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Kernel::Full(k) => k.n(),
            Kernel::Symmetric(k) => k.n(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Kernel::Symmetric(_))
    }

    pub fn apply(&self, terms: &HamiltonianTerms, input: &[C64], out: &mut [C64]) {
        match self {
            Kernel::Full(k) => k.apply(terms, input, out),
            Kernel::Symmetric(k) => k.apply(terms, input, out),
        }
    }

    pub fn norm_bound(&self, terms: &HamiltonianTerms) -> f64 {
        match self {
            Kernel::Full(k) => k.norm_bound(terms),
            Kernel::Symmetric(k) => k.norm_bound(terms),
        }
    }

    /// Validate `terms` against this kernel.
    pub fn check(&self, terms: &HamiltonianTerms) -> Result<()> {
        terms.validate()?;
        match self {
            Kernel::Full(k) if terms.n != k.n() => {
                Err(AmpError::DimensionMismatch { expected: k.n(), got: terms.n })
            }
            Kernel::Full(_) => Ok(()),
            Kernel::Symmetric(k) => k.check(terms),
        }
    }

    /// Index of `|all up>` and `|all down>` in this representation.
    pub fn all_up_index(&self) -> usize {
        self.dim() - 1
    }

    pub fn all_down_index(&self) -> usize {
        0
    }
}

/// `H |psi>` in the full space.
pub fn apply_hamiltonian(terms: &HamiltonianTerms, psi: &StateVector, params: &AmpParams) -> Result<StateVector> {
    if psi.n != params.n || psi.dim() != 1 << params.n {
        return Err(AmpError::DimensionMismatch { expected: 1 << params.n, got: psi.dim() });
    }
    let kernel = Kernel::full(params);
    kernel.check(terms)?;
    let mut out = StateVector::zeros(params.n);
    kernel.apply(terms, &psi.amps, &mut out.amps);
    Ok(out)
}

/// `H |phi>` in the Dicke subspace.
pub fn apply_symmetric(terms: &HamiltonianTerms, phi: &SymmetricState, params: &AmpParams) -> Result<SymmetricState> {
    if phi.n != params.n || phi.amps.len() != params.n + 1 {
        return Err(AmpError::DimensionMismatch { expected: params.n + 1, got: phi.amps.len() });
    }
    let kernel = Kernel::symmetric(params);
    kernel.check(terms)?;
    let mut out = SymmetricState::zeros(params.n);
    kernel.apply(terms, &phi.amps, &mut out.amps);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize) -> AmpParams {
        AmpParams::new(n, 0.2, 0.8).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Dense `H` built from Kronecker products of 2x2 Paulis; independent of
    /// the bit-flip kernels.
    fn dense_oracle(terms: &HamiltonianTerms, p: &AmpParams) -> DMatrix<C64> {
        let n = p.n;
        let id = DMatrix::<C64>::identity(2, 2);
        // Local basis (bit 0, bit 1) = (down, up).
        let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        // Y|0> = i|1>, Y|1> = -i|0>  =>  column 0 = (0, i), column 1 = (-i, 0).
        let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        // Site b is bit b, so site 0 is the least significant (rightmost) factor.
        let op_on = |ops: &[(usize, &DMatrix<C64>)]| {
            let mut m = DMatrix::<C64>::identity(1, 1);
            for site in (0..n).rev() {
                let f = ops.iter().find(|(s, _)| *s == site).map(|(_, o)| *o).unwrap_or(&id);
                m = m.kronecker(f);
            }
            m
        };
        let dim = 1 << n;
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        let table = p.energy_table();
        for i in 0..dim {
            h[(i, i)] = c(terms.diag_scale * table[i.count_ones() as usize], 0.0);
        }
        for s in 0..n {
            h += op_on(&[(s, &sx)]) * c(terms.x[s], 0.0);
            if !terms.y.is_empty() {
                h += op_on(&[(s, &sy)]) * c(terms.y[s], 0.0);
            }
        }
        if !terms.xx.is_empty() {
            for (i, j) in pairs(n) {
                h += op_on(&[(i, &sx), (j, &sx)]) * c(terms.xx_at(i, j), 0.0);
            }
        }
        h
    }

    fn random_terms(n: usize, rng: &mut impl Rng) -> HamiltonianTerms {
        HamiltonianTerms {
            n,
            diag_scale: rng.random_range(-1.0..1.0),
            x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            xx: (0..num_pairs(n)).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    fn random_symmetric_terms(n: usize, rng: &mut impl Rng) -> HamiltonianTerms {
        HamiltonianTerms {
            n,
            diag_scale: rng.random_range(-1.0..1.0),
            x: vec![rng.random_range(-1.0..1.0); n],
            y: vec![rng.random_range(-1.0..1.0); n],
            xx: vec![rng.random_range(-1.0..1.0); num_pairs(n)],
        }
    }

    fn random_state(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
        let v: Vec<C64> = (0..dim).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let nv = norm(&v);
        v.into_iter().map(|a| a / nv).collect()
    }

    #[test]
    fn pair_index_is_dense() {
        for n in 2..9 {
            let idx: Vec<_> = pairs(n).map(|(i, j)| pair_index(n, i, j)).collect();
            assert_eq!(idx, (0..num_pairs(n)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn diagonal_on_all_up() {
        let p = params(6);
        let terms = HamiltonianTerms::diagonal(6, 1.0);
        let out = apply_hamiltonian(&terms, &StateVector::all_up(6), &p).unwrap();
        let expect = StateVector::all_up(6);
        for (o, e) in out.amps.iter().zip(&expect.amps) {
            assert!((o - e * -0.2).norm() < 1e-15);
        }
    }

    #[test]
    fn single_flip() {
        let p = params(4);
        let mut terms = HamiltonianTerms::diagonal(4, 0.0);
        terms.x[0] = 0.7;
        let out = apply_hamiltonian(&terms, &StateVector::basis(4, 0), &p).unwrap();
        assert_eq!(out.amps[1], c(0.7, 0.0));
        assert!(out.amps.iter().enumerate().all(|(i, a)| i == 1 || a.norm() == 0.0));
    }

    #[test]
    fn y_convention() {
        let p = params(3);
        let mut terms = HamiltonianTerms::diagonal(3, 0.0);
        terms.y = vec![0.0, 1.0, 0.0];
        let out = apply_hamiltonian(&terms, &StateVector::basis(3, 0), &p).unwrap();
        assert_eq!(out.amps[0b010], c(0.0, 1.0));
        let out = apply_hamiltonian(&terms, &StateVector::basis(3, 0b010), &p).unwrap();
        assert_eq!(out.amps[0], c(0.0, -1.0));
    }

    #[test]
    fn matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 6, 8] {
            let p = params(n);
            let terms = random_terms(n, &mut rng);
            let h = dense_oracle(&terms, &p);
            let psi = StateVector::from_amps(n, random_state(1 << n, &mut rng)).unwrap();
            let out = apply_hamiltonian(&terms, &psi, &p).unwrap();
            let dense = &h * nalgebra::DVector::from_vec(psi.amps.clone());
            for (a, b) in out.amps.iter().zip(dense.iter()) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = params(4);
        let terms = HamiltonianTerms::diagonal(4, 1.0);
        assert!(matches!(
            apply_hamiltonian(&terms, &StateVector::zeros(5), &p),
            Err(AmpError::DimensionMismatch { .. })
        ));
        let bad = HamiltonianTerms::diagonal(5, 1.0);
        assert!(apply_hamiltonian(&bad, &StateVector::zeros(4), &p).is_err());
    }

    #[test]
    fn transverse_field_on_uniform() {
        let n = 7;
        let p = params(n);
        let x: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let terms = HamiltonianTerms { n, diag_scale: 0.0, x: x.clone(), y: vec![], xx: vec![] };
        let u = StateVector::uniform(n);
        let out = apply_hamiltonian(&terms, &u, &p).unwrap();
        let sum: f64 = x.iter().sum();
        // X_i |+> = |+>, so the uniform state is an eigenvector with eigenvalue sum x_i.
        for (o, a) in out.amps.iter().zip(&u.amps) {
            assert!((o - a * sum).norm() < 1e-14);
        }
        let neg = HamiltonianTerms { x: x.iter().map(|v| -v).collect(), ..terms };
        let out = apply_hamiltonian(&neg, &u, &p).unwrap();
        for (o, a) in out.amps.iter().zip(&u.amps) {
            assert!((o + a * sum).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=10 {
            let p = params(n);
            let k = Kernel::full(&p);
            let terms = random_terms(n, &mut rng);
            let phi = random_state(1 << n, &mut rng);
            let psi = random_state(1 << n, &mut rng);
            let mut hpsi = vec![C64::default(); 1 << n];
            let mut hphi = vec![C64::default(); 1 << n];
            k.apply(&terms, &psi, &mut hpsi);
            k.apply(&terms, &phi, &mut hphi);
            let lhs = inner(&phi, &hpsi);
            let rhs = inner(&psi, &hphi).conj();
            assert!((lhs - rhs).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn dicke_two_spin_field() {
        let p = params(2);
        let kappa = 0.37;
        let terms = HamiltonianTerms::uniform_field(2, 0.0, kappa);
        let out = apply_symmetric(&terms, &SymmetricState::sector(2, 0), &p).unwrap();
        assert!((out.amps[1] - c(kappa * 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(out.amps[0], c(0.0, 0.0));
        assert_eq!(out.amps[2], c(0.0, 0.0));
    }

    #[test]
    fn dicke_diagonal_only() {
        let p = params(6);
        let terms = HamiltonianTerms::diagonal(6, 0.5);
        let phi = SymmetricState::from_amps(6, (0..7).map(|k| c(k as f64, 1.0)).collect()).unwrap();
        let out = apply_symmetric(&terms, &phi, &p).unwrap();
        for k in 0..=6 {
            assert!((out.amps[k] - phi.amps[k] * (0.5 * p.energy_of_count(k))).norm() < 1e-15);
        }
    }

    #[test]
    fn dicke_rejects_non_symmetric() {
        let p = params(4);
        let mut terms = HamiltonianTerms::uniform_field(4, 1.0, -0.25);
        terms.x[2] = 0.1;
        assert!(matches!(
            apply_symmetric(&terms, &SymmetricState::zeros(4), &p),
            Err(AmpError::NotSymmetric(_))
        ));
    }

    #[test]
    fn dicke_matches_full_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=10 {
            let p = params(n);
            let terms = random_symmetric_terms(n, &mut rng);
            let phi = SymmetricState::from_amps(n, random_state(n + 1, &mut rng)).unwrap();
            let via_full = project(&apply_hamiltonian(&terms, &embed(&phi), &p).unwrap());
            let direct = apply_symmetric(&terms, &phi, &p).unwrap();
            for (a, b) in via_full.amps.iter().zip(&direct.amps) {
                assert!((a - b).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn project_uniform() {
        for n in 1..=10 {
            let phi = project(&StateVector::uniform(n));
            for k in 0..=n {
                // Direct sum of C(N,k) equal amplitudes 2^{-N/2}, weighted 1/sqrt(C(N,k)).
                let direct = binomial(n, k) * 2f64.powf(-(n as f64) / 2.0) / binomial(n, k).sqrt();
                assert!((phi.amps[k].re - direct).abs() < 1e-14);
                assert!((phi.amps[k].re - (binomial(n, k) / 2f64.powi(n as i32)).sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_sector_zero() {
        assert_eq!(embed(&SymmetricState::sector(5, 0)), StateVector::all_down(5));
        assert_eq!(embed(&SymmetricState::sector(5, 5)), StateVector::all_up(5));
    }

    proptest! {
        #[test]
        fn embed_project_identity(n in 1usize..9, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = SymmetricState::from_amps(n, random_state(n + 1, &mut rng)).unwrap();
            let psi = embed(&phi);
            prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
            let back = project(&psi);
            for (a, b) in back.amps.iter().zip(&phi.amps) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        StateVector::basis(2, 3).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,re,im");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("3,1.0"));
    }
}
