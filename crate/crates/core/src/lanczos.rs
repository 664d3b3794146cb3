//! Lanczos iteration with full reorthogonalization for the lowest
//! eigenpairs of a Hermitian operator given only its action on vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::hilbert::{inner, norm};
use crate::rng::rng_from_seed;
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Residual tolerance relative to `max(1, |theta|)`.
    pub tol: f64,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 600, tol: 1e-10, check_every: 10, seed: 0x1a2c_05e7 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`; empty unless requested.
    pub vectors: Vec<Vec<C64>>,
}

/// Lowest `k` eigenvalues (and optionally eigenvectors) of the Hermitian
/// operator `apply` on a space of dimension `dim`.
///
/// Exactly degenerate eigenvalues show up once: the Krylov space of a
/// single start vector only sees one copy of each distinct level. Returns
/// fewer than `k` values when the Krylov space closes early.
pub fn lowest<F>(dim: usize, k: usize, want_vectors: bool, opts: LanczosOptions, mut apply: F) -> Result<Eigenpairs, String>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if dim == 0 || k == 0 {
        return Ok(Eigenpairs { values: vec![], vectors: vec![] });
    }
    let max_iter = opts.max_iter.min(dim).max(1);
    let mut rng = rng_from_seed(opts.seed);
    let mut q: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nq = norm(&q);
    q.iter_mut().for_each(|a| *a /= nq);

    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C64::default(); dim];
    let mut last: Option<(Vec<f64>, DMatrix<f64>)> = None;

    loop {
        let j = alphas.len();
        apply(&basis[j], &mut w);
        let alpha = inner(&basis[j], &w).re;
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi -= qi * alpha;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= qi * b;
            }
        }
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for qb in &basis {
                let c = inner(qb, &w);
                for (wi, qi) in w.iter_mut().zip(qb) {
                    *wi -= qi * c;
                }
            }
        }
        alphas.push(alpha);
        let beta = norm(&w);
        let m = alphas.len();
        let scale = alphas.iter().chain(&betas).fold(1.0f64, |acc, v| acc.max(v.abs()));
        let closed = beta <= 1e-13 * scale;
        let exhausted = m >= max_iter;

        if closed || exhausted || m.is_multiple_of(opts.check_every) || m >= dim {
            let (vals, vecs) = tridiag_eigen(&alphas, &betas);
            let want = k.min(m);
            let converged = closed
                || (0..want).all(|i| {
                    let resid = beta * vecs[(m - 1, i)].abs();
                    resid <= opts.tol * vals[i].abs().max(1.0)
                });
            if converged || exhausted {
                if !converged {
                    let worst = (0..want)
                        .map(|i| beta * vecs[(m - 1, i)].abs())
                        .fold(0.0f64, f64::max);
                    return Err(format!("{m} iterations, worst residual {worst:.3e}"));
                }
                last = Some((vals, vecs));
            }
        }
        if let Some((vals, vecs)) = last {
            let want = k.min(vals.len());
            let values = vals[..want].to_vec();
            let vectors = if want_vectors {
                (0..want)
                    .map(|i| {
                        let mut v = vec![C64::default(); dim];
                        for (r, qb) in basis.iter().enumerate().take(m) {
                            let c = vecs[(r, i)];
                            for (vi, qi) in v.iter_mut().zip(qb) {
                                *vi += qi * c;
                            }
                        }
                        let nv = norm(&v);
                        v.iter_mut().for_each(|a| *a /= nv);
                        v
                    })
                    .collect()
            } else {
                Vec::new()
            };
            return Ok(Eigenpairs { values, vectors });
        }
        betas.push(beta);
        let next: Vec<C64> = w.iter().map(|a| a / beta).collect();
        basis.push(next);
    }
}

/// Ascending eigenvalues and matching eigenvector columns of the real
/// symmetric tridiagonal matrix `(alphas, betas)`.
fn tridiag_eigen(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand::SeedableRng;

    #[test]
    fn diagonal_operator() {
        let diag: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.01).collect();
        let mut sorted = diag.clone();
        sorted.sort_by(f64::total_cmp);
        let res = lowest(200, 5, true, LanczosOptions::default(), |x, y| {
            for i in 0..200 {
                y[i] = x[i] * diag[i];
            }
        })
        .unwrap();
        for i in 0..5 {
            assert!((res.values[i] - sorted[i]).abs() < 1e-10);
        }
        // Ritz vector is the matching unit vector.
        let idx = diag.iter().position(|&d| d == sorted[0]).unwrap();
        assert!((res.vectors[0][idx].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn random_hermitian_matches_dense() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = &a + a.adjoint();
        let mut dense: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let res = lowest(n, 4, false, LanczosOptions::default(), |x, y| {
            let v = &h * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        })
        .unwrap();
        for i in 0..4 {
            assert!((res.values[i] - dense[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_levels_appear_once() {
        let diag = [1.0, 1.0, 1.0, 2.0, 3.0, 3.0];
        let res = lowest(6, 6, false, LanczosOptions::default(), |x, y| {
            for i in 0..6 {
                y[i] = x[i] * diag[i];
            }
        })
        .unwrap();
        assert_eq!(res.values.len(), 3);
        assert!((res.values[1] - 2.0).abs() < 1e-12);
    }
}
