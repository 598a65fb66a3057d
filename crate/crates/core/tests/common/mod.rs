//! Independent dense Kronecker-product oracles shared by integration tests.
#![allow(dead_code)]

use meanfield_core::linalg::symmetric_eigen;
use meanfield_core::{CatalystConfig, ModelSpec};

pub type Dense = Vec<Vec<f64>>;

pub fn eye(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    (0..n * m)
        .map(|i| (0..n * m).map(|j| a[i / m][j / m] * b[i % m][j % m]).collect())
        .collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn axpy(acc: &mut Dense, c: f64, x: &Dense) {
    for (r, xr) in acc.iter_mut().zip(x) {
        for (v, xv) in r.iter_mut().zip(xr) {
            *v += c * xv;
        }
    }
}

/// Pauli operator `p` on site `k` of `n` sites; site k is bit k of the index.
pub fn site_op(p: &Dense, k: usize, n: usize) -> Dense {
    let id = eye(2);
    (0..n).fold(vec![vec![1.0]], |acc, i| kron(&acc, if n - 1 - i == k { p } else { &id }))
}

pub fn paulis() -> (Dense, Dense) {
    (vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![1.0, 0.0], vec![0.0, -1.0]])
}

/// Dense model on all 2^N states, built from operator products of the
/// cluster magnetizations m̂_a = (2/N) Σ σ.
pub fn dense_full(spec: &ModelSpec, s: f64, n: usize) -> Dense {
    let (sx, sz) = paulis();
    let l = n / 2;
    let dim = 1 << n;
    let mag = |p: &Dense, a: usize| {
        let mut m = vec![vec![0.0; dim]; dim];
        for r in 0..l {
            axpy(&mut m, 2.0 / n as f64, &site_op(p, a * l + r, n));
        }
        m
    };
    let (x1, x2, z1, z2) = (mag(&sx, 0), mag(&sx, 1), mag(&sz, 0), mag(&sz, 1));
    let (h1, h2) = (spec.fields.h1, spec.fields.h2);
    let c = spec.catalyst;
    let t1 = (1.0 - spec.schedule.gamma1.eval(s)) / 2.0;
    let t2 = (1.0 - spec.schedule.gamma2.eval(s)) / 2.0;
    let q = s * (1.0 - s) / 4.0;
    let mut h = vec![vec![0.0; dim]; dim];
    let nf = n as f64;
    axpy(&mut h, -nf * s / 2.0 * h1, &z1);
    axpy(&mut h, -nf * s / 2.0 * h2, &z2);
    axpy(&mut h, -nf * s / 4.0, &matmul(&z1, &z1));
    axpy(&mut h, -nf * s / 4.0, &matmul(&z2, &z2));
    axpy(&mut h, -nf * s / 4.0, &matmul(&z1, &z2));
    axpy(&mut h, -nf * t1, &x1);
    axpy(&mut h, -nf * t2, &x2);
    axpy(&mut h, -nf * q * c.xi11, &matmul(&x1, &x1));
    axpy(&mut h, -nf * q * c.xi22, &matmul(&x2, &x2));
    axpy(&mut h, -nf * q * c.xi12, &matmul(&x1, &x2));
    h
}

/// Sparse model on 2^N states with r-matched pair terms.
pub fn sparse_full(spec: &ModelSpec, s: f64, n: usize) -> Dense {
    let (sx, sz) = paulis();
    let l = n / 2;
    let dim = 1 << n;
    let mut h = dense_full(&ModelSpec::dense(CatalystConfig::new(spec.catalyst.xi11, spec.catalyst.xi22, 0.0)), s, n);
    // Replace the dense z1·z2 coupling with the pair terms.
    let mag = |p: &Dense, a: usize| {
        let mut m = vec![vec![0.0; dim]; dim];
        for r in 0..l {
            axpy(&mut m, 2.0 / n as f64, &site_op(p, a * l + r, n));
        }
        m
    };
    axpy(&mut h, n as f64 * s / 4.0, &matmul(&mag(&sz, 0), &mag(&sz, 1)));
    for r in 0..l {
        axpy(&mut h, -s / 2.0, &matmul(&site_op(&sz, r, n), &site_op(&sz, l + r, n)));
        axpy(
            &mut h,
            -s * (1.0 - s) * spec.catalyst.xi12 / 2.0,
            &matmul(&site_op(&sx, r, n), &site_op(&sx, l + r, n)),
        );
    }
    h
}

pub fn spectrum(h: &Dense) -> Vec<f64> {
    let n = h.len();
    symmetric_eigen(&h.concat(), n).values
}
