//! Lanczos iteration with full reorthogonalization for the lowest
//! eigenpairs of a large sparse symmetric matrix.

use super::jacobi::SymEigen;
use super::sparse::CsrMatrix;
use super::tridiag::tridiagonal_eigen;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Relative residual required of each wanted Ritz pair.
    pub tol: f64,
    /// Krylov basis size before an explicit restart.
    pub max_basis: usize,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, max_basis: 400, max_restarts: 30 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn pseudo_random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Lowest `k` eigenpairs of `a`, values ascending.
///
/// A single Krylov space holds one vector per eigenvalue, so degenerate
/// partners are found only when the space becomes invariant and is reseeded.
pub fn lanczos_lowest(a: &CsrMatrix, k: usize, opts: LanczosOptions) -> Result<SymEigen> {
    let n = a.n;
    let k = k.min(n);
    if k == 0 {
        return Ok(SymEigen { values: vec![], vectors: vec![] });
    }
    let anorm = a.norm_bound().max(f64::MIN_POSITIVE);
    let max_basis = opts.max_basis.max(k + 2).min(n);
    let mut start = pseudo_random_vector(n, 1);
    let mut seed = 2u64;
    let mut last_residual = f64::INFINITY;

    for _restart in 0..=opts.max_restarts {
        let nrm = dot(&start, &start).sqrt();
        let mut q: Vec<Vec<f64>> = vec![start.iter().map(|x| x / nrm).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        loop {
            let j = q.len() - 1;
            a.apply(&q[j], &mut w);
            let aj = dot(&q[j], &w);
            alpha.push(aj);
            axpy(-aj, &q[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &q[j - 1], &mut w);
            }
            orthogonalize(&mut w, &q);
            let b = dot(&w, &w).sqrt();
            let m = alpha.len();
            let invariant = b <= 1e-8 * anorm;
            // An invariant subspace short of the full space may still miss
            // degenerate partners, so it is never accepted on its own.
            let check = m >= k
                && (m % 5 == 0 || m >= max_basis || m == n)
                && !(invariant && m < n);
            if check {
                let (vals, ys) = tridiagonal_eigen(&alpha, &beta)?;
                let res_scale = if invariant { 0.0 } else { b };
                let worst = (0..k)
                    .map(|i| res_scale * ys[i][m - 1].abs() / vals[i].abs().max(1.0))
                    .fold(0.0, f64::max);
                last_residual = worst;
                let exhausted = m == n;
                if worst <= opts.tol || exhausted {
                    let vectors = (0..k)
                        .map(|i| {
                            let mut x = vec![0.0; n];
                            for (t, qt) in q.iter().enumerate() {
                                axpy(ys[i][t], qt, &mut x);
                            }
                            let nx = dot(&x, &x).sqrt();
                            x.iter_mut().for_each(|v| *v /= nx);
                            x
                        })
                        .collect();
                    return Ok(SymEigen { values: vals[..k].to_vec(), vectors });
                }
                if m >= max_basis {
                    // Explicit restart from the sum of the wanted Ritz vectors.
                    let mut x = vec![0.0; n];
                    for y in ys.iter().take(k) {
                        for (t, qt) in q.iter().enumerate() {
                            axpy(y[t], qt, &mut x);
                        }
                    }
                    start = x;
                    break;
                }
            }
            if invariant {
                let mut fresh = pseudo_random_vector(n, seed);
                seed += 1;
                orthogonalize(&mut fresh, &q);
                let f = dot(&fresh, &fresh).sqrt();
                if f < 1e-8 {
                    return Err(Error::Convergence {
                        iterations: m,
                        residual: last_residual,
                        best: None,
                    });
                }
                beta.push(0.0);
                q.push(fresh.iter().map(|x| x / f).collect());
            } else {
                beta.push(b);
                q.push(w.iter().map(|x| x / b).collect());
            }
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_restarts * max_basis,
        residual: last_residual,
        best: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;

    fn chain(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, (i % 7) as f64 * 0.1));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn agrees_with_jacobi() {
        let a = chain(60);
        let d = symmetric_eigen(&a.to_dense(), 60);
        let l = lanczos_lowest(&a, 4, LanczosOptions::default()).unwrap();
        for i in 0..4 {
            assert!((l.values[i] - d.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn finds_degenerate_copies() {
        // Two identical decoupled blocks: the first Krylov space is
        // invariant after 3 steps and the partners need a reseed.
        let b = chain(3);
        let mut t = Vec::new();
        for i in 0..3 {
            for k in b.indptr[i]..b.indptr[i + 1] {
                t.push((i, b.indices[k], b.data[k]));
                t.push((i + 3, b.indices[k] + 3, b.data[k]));
            }
        }
        let a = CsrMatrix::from_triplets(6, t);
        let l = lanczos_lowest(&a, 4, LanczosOptions::default()).unwrap();
        assert!((l.values[0] - l.values[1]).abs() < 1e-10);
        assert!((l.values[2] - l.values[3]).abs() < 1e-10);
    }

    #[test]
    fn restarts_with_small_basis() {
        let a = chain(300);
        let opts = LanczosOptions { max_basis: 40, max_restarts: 200, ..Default::default() };
        let l = lanczos_lowest(&a, 1, opts).unwrap();
        let full = lanczos_lowest(&a, 1, LanczosOptions::default()).unwrap();
        assert!((l.values[0] - full.values[0]).abs() < 1e-9);
    }
}
