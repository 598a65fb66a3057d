//! Eigenvalues and eigenvectors of small general complex matrices:
//! Householder reduction to Hessenberg form, then single-shift QR with
//! Wilkinson shifts. Eigenvectors come from block inverse iteration.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| self[(i, j)] * x[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.n;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- P H P with P = I - 2 v v^H acting on indices k+1..n.
        for j in 0..n {
            let dotv: C64 = (0..v.len()).map(|t| v[t].conj() * h[(k + 1 + t, j)]).sum();
            for t in 0..v.len() {
                h[(k + 1 + t, j)] -= 2.0 * v[t] * dotv;
            }
        }
        for i in 0..n {
            let dotv: C64 = (0..v.len()).map(|t| h[(i, k + 1 + t)] * v[t]).sum();
            for t in 0..v.len() {
                h[(i, k + 1 + t)] -= 2.0 * dotv * v[t].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// All eigenvalues of `a`, in deflation order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut h = hessenberg(a);
    let mut eig = vec![ZERO; n];
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let tiny = f64::EPSILON * (h[(l, l)].norm() + h[(l - 1, l - 1)].norm()).max(scale * 1e-3);
            if h[(l, l - 1)].norm() <= tiny {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > 100 * n {
            return Err(Error::Convergence {
                iterations: total,
                residual: h[(hi, hi - 1)].norm(),
                best: None,
            });
        }
        let (p, q, r, s) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
        let mu = if its % 11 == 10 {
            // Exceptional shift to break cycles.
            s + C64::new(r.norm(), 0.0)
        } else {
            let half = (p - s) * 0.5;
            let disc = (half * half + q * r).sqrt();
            let m1 = (p + s) * 0.5 + disc;
            let m2 = (p + s) * 0.5 - disc;
            if (m1 - s).norm() < (m2 - s).norm() {
                m1
            } else {
                m2
            }
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (x, y) = (h[(k, k)], h[(k + 1, k)]);
            let rn = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, sn) = if rn == 0.0 { (ONE, ZERO) } else { (x / rn, y / rn) };
            for j in k..=hi {
                let (a0, a1) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c.conj() * a0 + sn.conj() * a1;
                h[(k + 1, j)] = -sn * a0 + c * a1;
            }
            rots.push((c, sn));
        }
        for (t, &(c, sn)) in rots.iter().enumerate() {
            let k = l + t;
            for i in l..=(k + 1).min(hi) {
                let (a0, a1) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = a0 * c + a1 * sn;
                h[(i, k + 1)] = -a0 * sn.conj() + a1 * c.conj();
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

/// Solve `a x = b` by LU with partial pivoting; tiny pivots are clamped.
fn solve(a: &CMatrix, b: &[C64]) -> Vec<C64> {
    let n = a.n;
    let mut m = a.clone();
    let mut x = b.to_vec();
    let floor = f64::EPSILON * m.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm())).unwrap();
        if piv != k {
            for j in 0..n {
                m.data.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        if m[(k, k)].norm() < floor {
            m[(k, k)] = C64::new(floor, 0.0);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let s: C64 = (k + 1..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    x
}

/// Orthonormalize in place under the standard inner product, dropping
/// vectors that become linearly dependent.
fn orthonormalize(vs: &mut Vec<Vec<C64>>) {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vs.len());
    for v in vs.drain(..) {
        let mut w = v;
        for _ in 0..2 {
            for u in &out {
                let d: C64 = u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= d * ui;
                }
            }
        }
        let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-300 {
            out.push(w.into_iter().map(|z| z / nrm).collect());
        }
    }
    *vs = out;
}

/// Orthonormal basis of the `k`-dimensional invariant subspace of `a`
/// belonging to the eigenvalue cluster at `lambda`.
pub fn eigenspace(a: &CMatrix, lambda: C64, k: usize) -> Vec<Vec<C64>> {
    let n = a.n;
    let scale = a.max_abs().max(1.0);
    let shift = lambda + C64::new(1e-11 * scale, 1e-11 * scale);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let mut basis: Vec<Vec<C64>> = (0..k)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let t = (1 + i + 3 * j) as f64;
                    C64::new((0.7 * t).sin() + if i == j { 1.0 } else { 0.0 }, (1.3 * t).cos() * 0.5)
                })
                .collect()
        })
        .collect();
    orthonormalize(&mut basis);
    for _ in 0..6 {
        let mut next: Vec<Vec<C64>> = basis.iter().map(|b| solve(&shifted, b)).collect();
        orthonormalize(&mut next);
        if next.len() < basis.len() {
            break;
        }
        basis = next;
    }
    basis
}
