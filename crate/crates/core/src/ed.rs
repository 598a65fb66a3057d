//! Finite-size exact diagonalization used as an independent oracle.
//!
//! The dense model conserves each cluster's total spin, and its ground state
//! lives in the maximal-spin sector: two spins of length S = N/4 coupled
//! through m̂_a = Ŝ_a/S. The sparse model has no such reduction and is
//! diagonalized in the full 2^N space.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{lanczos_lowest, symmetric_eigen, CsrMatrix, LanczosOptions, SymEigen};
use crate::model::{Coupling, ModelSpec};

pub const MAX_DENSE_N: usize = 2000;
pub const MAX_SPARSE_N: usize = 14;
/// Largest dimension handed to the dense Jacobi solver.
pub const JACOBI_MAX_DIM: usize = 200;
/// Largest dimension for the dense fallback after a Lanczos failure.
const FALLBACK_MAX_DIM: usize = 800;
/// Byte budget for the stored Lanczos basis.
const LANCZOS_BASIS_BYTES: usize = 1 << 29;
/// |⟨m̂₂ᶻ⟩| above which a level is assigned to a well.
pub const WELL_THRESHOLD: f64 = 0.5;
pub const GROUND_DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub n: usize,
    /// Spin length per cluster, N/4.
    pub spin: f64,
    /// (N/2 + 1)².
    pub dim: usize,
}

impl SectorSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "dense-sector ED needs N divisible by 4, got {n}"
            )));
        }
        if n > MAX_DENSE_N {
            return Err(Error::Size(format!("N = {n} exceeds the dense-sector limit {MAX_DENSE_N}")));
        }
        let per = n / 2 + 1;
        Ok(SectorSpec { n, spin: n as f64 / 4.0, dim: per * per })
    }
}

/// A Hamiltonian together with the diagonal observables m̂₁ᶻ and m̂₂ᶻ.
#[derive(Debug, Clone)]
pub struct EdProblem {
    pub n: usize,
    pub h: CsrMatrix,
    pub m1z: Vec<f64>,
    pub m2z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    /// Lowest levels of Ĥ (extensive), ascending.
    pub energies: Vec<f64>,
    /// Ground expectations, averaged over a degenerate ground level.
    pub m1z: f64,
    pub m2z: f64,
    pub gap: f64,
    pub ground_degeneracy: usize,
    /// ⟨m̂₂ᶻ⟩ of each returned level.
    pub level_m2z: Vec<f64>,
}

impl EdResult {
    /// Excitation energy of the lowest level not sitting in the opposite
    /// well. A level counts as opposite when both it and the ground state
    /// have |⟨m̂₂ᶻ⟩| ≥ `WELL_THRESHOLD` with different signs. This separates
    /// in-well excitations from a state of the other well that happens to
    /// lie lower at finite N; with no separated wells it equals `gap`.
    pub fn basin_gap(&self) -> Option<f64> {
        let g = self.ground_degeneracy;
        let m0 = self.m2z;
        let opposite = |m: f64| m0.abs() >= WELL_THRESHOLD && m.abs() >= WELL_THRESHOLD && m.signum() != m0.signum();
        (g..self.energies.len())
            .find(|&j| !opposite(self.level_m2z[j]))
            .map(|j| self.energies[j] - self.energies[0])
    }
}

fn check_s(spec: &ModelSpec, s: f64) -> Result<()> {
    ensure_finite("s", s)?;
    spec.validate()
}

/// Ŝᶻ diagonal and ⟨m+1|Ŝˣ|m⟩ for spin `spin`, basis index i ↔ m = S − i.
fn spin_ladder(spin: f64, len: usize) -> (Vec<f64>, Vec<f64>) {
    let sz: Vec<f64> = (0..len).map(|i| spin - i as f64).collect();
    let sx_off: Vec<f64> = (0..len - 1)
        .map(|i| {
            let m = sz[i + 1];
            0.5 * (spin * (spin + 1.0) - m * (m + 1.0)).sqrt()
        })
        .collect();
    (sz, sx_off)
}

/// Ĥ(s) = N·h(Ŝ₁/S, Ŝ₂/S) restricted to the maximal-spin sector.
pub fn build_dense_sector_hamiltonian(spec: &ModelSpec, s: f64, n: usize) -> Result<EdProblem> {
    if spec.coupling != Coupling::DenseIntercluster {
        return Err(Error::InvalidArgument("sector ED requires a dense-intercluster model".into()));
    }
    check_s(spec, s)?;
    let sector = SectorSpec::new(n)?;
    let len = n / 2 + 1;
    let spin = sector.spin;
    let (sz, off) = spin_ladder(spin, len);
    let zz: Vec<f64> = sz.iter().map(|z| z / spin).collect();
    let xo: Vec<f64> = off.iter().map(|x| x / spin).collect();
    // X² in the single-cluster basis: diagonal and second off-diagonal.
    let x2_d: Vec<f64> = (0..len)
        .map(|i| {
            let a = if i > 0 { xo[i - 1] } else { 0.0 };
            let b = if i + 1 < len { xo[i] } else { 0.0 };
            a * a + b * b
        })
        .collect();
    let x2_o: Vec<f64> = (0..len.saturating_sub(2)).map(|i| xo[i] * xo[i + 1]).collect();

    let nf = n as f64;
    let (h1, h2) = (spec.fields.h1, spec.fields.h2);
    let x = spec.catalyst;
    let t1 = (1.0 - spec.schedule.gamma1.eval(s)) / 2.0;
    let t2 = (1.0 - spec.schedule.gamma2.eval(s)) / 2.0;
    let c = s * (1.0 - s) / 4.0;
    let idx = |i: usize, j: usize| i * len + j;

    let mut t = Vec::with_capacity(sector.dim * 13);
    for i in 0..len {
        for j in 0..len {
            let (a, b) = (zz[i], zz[j]);
            let diag = -(s / 2.0) * (h1 * a + h2 * b)
                - (s / 4.0) * (a * a + b * b + a * b)
                - c * (x.xi11 * x2_d[i] + x.xi22 * x2_d[j]);
            t.push((idx(i, j), idx(i, j), nf * diag));
            // Single-spin flips from the transverse fields.
            if i + 1 < len {
                let v = -nf * t1 * xo[i];
                t.push((idx(i, j), idx(i + 1, j), v));
                t.push((idx(i + 1, j), idx(i, j), v));
            }
            if j + 1 < len {
                let v = -nf * t2 * xo[j];
                t.push((idx(i, j), idx(i, j + 1), v));
                t.push((idx(i, j + 1), idx(i, j), v));
            }
            // Double flips within one cluster from X².
            if i + 2 < len {
                let v = -nf * c * x.xi11 * x2_o[i];
                t.push((idx(i, j), idx(i + 2, j), v));
                t.push((idx(i + 2, j), idx(i, j), v));
            }
            if j + 2 < len {
                let v = -nf * c * x.xi22 * x2_o[j];
                t.push((idx(i, j), idx(i, j + 2), v));
                t.push((idx(i, j + 2), idx(i, j), v));
            }
            // X₁X₂ flips one spin in each cluster.
            if i + 1 < len && j + 1 < len {
                let v = -nf * c * x.xi12 * xo[i] * xo[j];
                t.push((idx(i, j), idx(i + 1, j + 1), v));
                t.push((idx(i + 1, j + 1), idx(i, j), v));
            }
            if i + 1 < len && j > 0 {
                let v = -nf * c * x.xi12 * xo[i] * xo[j - 1];
                t.push((idx(i, j), idx(i + 1, j - 1), v));
                t.push((idx(i + 1, j - 1), idx(i, j), v));
            }
        }
    }
    let m1z = (0..sector.dim).map(|k| zz[k / len]).collect();
    let m2z = (0..sector.dim).map(|k| zz[k % len]).collect();
    Ok(EdProblem { n, h: CsrMatrix::from_triplets(sector.dim, t), m1z, m2z })
}

/// Full 2^N Hamiltonian of the sparse model. Site (a, r) is bit a·L + r
/// with L = N/2; a clear bit is spin up. Pair terms couple r to r only.
pub fn build_sparse_full_hamiltonian(spec: &ModelSpec, s: f64, n: usize) -> Result<EdProblem> {
    if spec.coupling != Coupling::SparseIntercluster {
        return Err(Error::InvalidArgument("full-space ED requires a sparse-intercluster model".into()));
    }
    check_s(spec, s)?;
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("N must be even and positive, got {n}")));
    }
    if n > MAX_SPARSE_N {
        return Err(Error::Size(format!("N = {n} exceeds the full-space limit {MAX_SPARSE_N}")));
    }
    let l = n / 2;
    let dim = 1usize << n;
    let nf = n as f64;
    let (h1, h2) = (spec.fields.h1, spec.fields.h2);
    let x = spec.catalyst;
    let g1 = 1.0 - spec.schedule.gamma1.eval(s);
    let g2 = 1.0 - spec.schedule.gamma2.eval(s);
    let c = s * (1.0 - s);
    let kzz = s / 2.0;
    let kxx = c * x.xi12 / 2.0;
    let z = |state: usize, bit: usize| if state >> bit & 1 == 0 { 1.0 } else { -1.0 };

    let mut t = Vec::with_capacity(dim * (n + n * l + l + 1));
    let mut m1z = Vec::with_capacity(dim);
    let mut m2z = Vec::with_capacity(dim);
    for st in 0..dim {
        let big1: f64 = (0..l).map(|r| z(st, r)).sum();
        let big2: f64 = (0..l).map(|r| z(st, l + r)).sum();
        let pair: f64 = (0..l).map(|r| z(st, r) * z(st, l + r)).sum();
        // (Σσˣ)² contributes L on the diagonal from σˣσˣ = 1.
        let diag = -s * (h1 * big1 + h2 * big2) - s * (big1 * big1 + big2 * big2) / nf - kzz * pair
            - c * (x.xi11 + x.xi22) * l as f64 / nf;
        t.push((st, st, diag));
        m1z.push(2.0 * big1 / nf);
        m2z.push(2.0 * big2 / nf);
        for r in 0..l {
            t.push((st, st ^ (1 << r), -g1));
            t.push((st, st ^ (1 << (l + r)), -g2));
            t.push((st, st ^ (1 << r) ^ (1 << (l + r)), -kxx));
            for q in 0..l {
                if q != r {
                    t.push((st, st ^ (1 << r) ^ (1 << q), -c * x.xi11 / nf));
                    t.push((st, st ^ (1 << (l + r)) ^ (1 << (l + q)), -c * x.xi22 / nf));
                }
            }
        }
    }
    Ok(EdProblem { n, h: CsrMatrix::from_triplets(dim, t), m1z, m2z })
}

fn lowest(h: &CsrMatrix, k: usize) -> Result<SymEigen> {
    let dim = h.n;
    if dim <= JACOBI_MAX_DIM {
        let e = symmetric_eigen(&h.to_dense(), dim);
        return Ok(SymEigen { values: e.values[..k].to_vec(), vectors: e.vectors[..k].to_vec() });
    }
    let budget = (LANCZOS_BASIS_BYTES / (8 * dim)).max(4 * k + 10);
    let opts = LanczosOptions { max_basis: budget.min(400), ..Default::default() };
    match lanczos_lowest(h, k, opts) {
        Ok(e) => Ok(e),
        Err(err) if dim <= FALLBACK_MAX_DIM => {
            log::warn!("Lanczos failed ({err}); using the dense solver for dim {dim}");
            let e = symmetric_eigen(&h.to_dense(), dim);
            Ok(SymEigen { values: e.values[..k].to_vec(), vectors: e.vectors[..k].to_vec() })
        }
        Err(err) => Err(Error::Size(format!("Lanczos failed at dim {dim} with no dense fallback: {err}"))),
    }
}

/// Lowest `k` levels with ground-state magnetizations.
pub fn ed_solve(p: &EdProblem, k: usize) -> Result<EdResult> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("ed_solve needs k >= 2, got {k}")));
    }
    let k = k.min(p.h.n);
    let e = lowest(&p.h, k)?;
    let expect = |obs: &[f64], v: &[f64]| -> f64 { v.iter().zip(obs).map(|(a, o)| a * a * o).sum() };
    let level_m2z: Vec<f64> = e.vectors.iter().map(|v| expect(&p.m2z, v)).collect();
    let g = e.values.iter().filter(|&&x| x - e.values[0] <= GROUND_DEGENERACY_TOL).count();
    let avg = |obs: &[f64]| e.vectors[..g].iter().map(|v| expect(obs, v)).sum::<f64>() / g as f64;
    Ok(EdResult {
        gap: e.values[1] - e.values[0],
        m1z: avg(&p.m1z),
        m2z: avg(&p.m2z),
        ground_degeneracy: g,
        level_m2z,
        energies: e.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CatalystConfig;

    #[test]
    fn sector_dimension_and_symmetry() {
        let spec = ModelSpec::dense(CatalystConfig::new(1.0, -2.0, -3.0));
        let p = build_dense_sector_hamiltonian(&spec, 0.4, 8).unwrap();
        assert_eq!(p.h.n, 25);
        assert!(p.h.is_symmetric());
        assert!(SectorSpec::new(6).is_err());
        assert!(matches!(SectorSpec::new(2004), Err(Error::Size(_))));
    }

    #[test]
    fn all_up_diagonal_at_s1() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let p = build_dense_sector_hamiltonian(&spec, 1.0, 4).unwrap();
        let min = p.h.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        assert!((min + 4.02).abs() < 1e-12);
        assert!((p.h.get(0, 0) + 4.02).abs() < 1e-12);
    }

    #[test]
    fn transverse_only_ground_energy() {
        let dense = ModelSpec::dense(CatalystConfig::new(0.0, 0.0, -5.0));
        let r = ed_solve(&build_dense_sector_hamiltonian(&dense, 0.0, 4).unwrap(), 2).unwrap();
        assert!((r.energies[0] + 4.0).abs() < 1e-10);
        let sparse = ModelSpec::sparse(CatalystConfig::new(0.0, 0.0, -5.0));
        let r = ed_solve(&build_sparse_full_hamiltonian(&sparse, 0.0, 6).unwrap(), 2).unwrap();
        assert!((r.energies[0] + 6.0).abs() < 1e-10);
    }

    #[test]
    fn sparse_two_site_all_up() {
        let spec = ModelSpec::sparse(CatalystConfig::default());
        let p = build_sparse_full_hamiltonian(&spec, 1.0, 2).unwrap();
        assert!((p.h.get(0, 0) + 2.01).abs() < 1e-12);
        assert!(matches!(build_sparse_full_hamiltonian(&spec, 0.5, 16), Err(Error::Size(_))));
    }

    #[test]
    fn k_must_be_at_least_two() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let p = build_dense_sector_hamiltonian(&spec, 0.5, 4).unwrap();
        assert!(ed_solve(&p, 1).is_err());
    }

    #[test]
    fn basin_gap_skips_only_the_opposite_well() {
        let r = |m: Vec<f64>| EdResult {
            energies: vec![0.0, 0.5, 1.5, 2.0],
            m1z: 1.0,
            m2z: m[0],
            gap: 0.5,
            ground_degeneracy: 1,
            level_m2z: m,
        };
        assert_eq!(r(vec![0.9, -0.9, 0.8, -0.8]).basin_gap(), Some(1.5));
        assert_eq!(r(vec![0.1, -0.2, 0.1, 0.0]).basin_gap(), Some(0.5));
        assert_eq!(r(vec![0.9, -0.9, -0.8, -0.7]).basin_gap(), None);
    }
}
