//! Zero-temperature saddle point of the sparse-intercluster model.
//!
//! Under the static ansatz the model reduces to a two-spin problem,
//! ĥ_eff = −m̃₁·σ₁ − m̃₂·σ₂ − σ₁·K12·σ₂, whose ground expectations must
//! reproduce the magnetizations that generated the conjugate fields
//! m̃_a = −2 ∂h_m/∂m_a. The static ansatz is an assumption of the reduction
//! and is not checked here.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::continuation::{self, BranchSolver, BranchState, Direction, SweepResult, TransitionReport};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::hermitian_eigen;
use crate::model::{
    coupling_matrix, sparse_mean_field_density, sparse_mean_field_gradient, CouplingMatrix,
    MagPair, ModelSpec,
};
use crate::vec3::{dot, norm, Vec3};

pub const DEGENERACY_TOL: f64 = 1e-9;
/// Upper edge of the band in which a near-degeneracy is reported.
pub const NEAR_DEGENERACY: f64 = 1e-6;
/// Consecutive sign-alternating updates that trigger a damping halving.
pub const OSCILLATION_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConjugateFields {
    pub mt1: Vec3,
    pub mt2: Vec3,
}

/// Two-spin Hamiltonian on the basis index 2·b₁ + b₂ with b = 0 for spin up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub h: [[C64; 4]; 4],
}

impl EffectiveHamiltonian {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..4).all(|i| (0..4).all(|j| (self.h[i][j] - self.h[j][i].conj()).norm() <= tol))
    }

    pub fn is_real(&self) -> bool {
        self.h.iter().flatten().all(|z| z.im == 0.0)
    }

    fn flat(&self) -> Vec<C64> {
        self.h.iter().flatten().copied().collect()
    }
}

fn pauli(i: usize) -> [[C64; 2]; 2] {
    let (o, one, im) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match i {
        0 => [[o, one], [one, o]],
        1 => [[o, -im], [im, o]],
        _ => [[one, o], [o, -one]],
    }
}

fn identity2() -> [[C64; 2]; 2] {
    let (o, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    [[one, o], [o, one]]
}

fn kron(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 4]; 4] {
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    out
}

/// σ_i acting on spin `a` (0 or 1) of the pair.
fn spin_op(a: usize, i: usize) -> [[C64; 4]; 4] {
    if a == 0 {
        kron(&pauli(i), &identity2())
    } else {
        kron(&identity2(), &pauli(i))
    }
}

pub fn build_effective_hamiltonian(
    mt: &ConjugateFields,
    k: &CouplingMatrix,
) -> Result<EffectiveHamiltonian> {
    for (a, v) in [mt.mt1, mt.mt2].iter().enumerate() {
        for (i, &x) in v.iter().enumerate() {
            ensure_finite(&format!("mt{}[{i}]", a + 1), x)?;
        }
    }
    for (i, row) in k.k12.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            ensure_finite(&format!("k12[{i}][{j}]"), x)?;
        }
    }
    let mut h = [[C64::new(0.0, 0.0); 4]; 4];
    let mut add = |op: &[[C64; 4]; 4], c: f64| {
        if c != 0.0 {
            for r in 0..4 {
                for q in 0..4 {
                    h[r][q] += op[r][q] * c;
                }
            }
        }
    };
    for i in 0..3 {
        add(&spin_op(0, i), -mt.mt1[i]);
        add(&spin_op(1, i), -mt.mt2[i]);
    }
    for i in 0..3 {
        for j in 0..3 {
            let c = k.k12[i][j];
            if c != 0.0 {
                let (p, q) = (pauli(i), pauli(j));
                add(&kron(&p, &q), -c);
            }
        }
    }
    Ok(EffectiveHamiltonian { h })
}

/// Degeneracy-averaged ground data of ĥ_eff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundBlock {
    pub lambda0: f64,
    pub g: usize,
    pub m1: Vec3,
    pub m2: Vec3,
    /// Full spectrum, ascending.
    pub spectrum: [f64; 4],
    /// Gap to the first level outside the ground block lies in
    /// (degeneracy_tol, NEAR_DEGENERACY].
    pub near_degenerate: bool,
}

fn expectation(op: &[[C64; 4]; 4], v: &[C64]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..4 {
        for q in 0..4 {
            acc += v[r].conj() * op[r][q] * v[q];
        }
    }
    acc.re
}

/// Spectrum and the weighted spin expectations Σ_n w_n ⟨n|σ_a|n⟩.
fn weighted_expectations(h: &EffectiveHamiltonian, weights: impl FnOnce(&[f64]) -> Vec<f64>) -> ([f64; 4], Vec3, Vec3) {
    let eig = hermitian_eigen(&h.flat(), 4);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]));
    let spectrum = [0, 1, 2, 3].map(|i| eig.values[order[i]]);
    let w = weights(&spectrum);
    let (mut m1, mut m2) = ([0.0; 3], [0.0; 3]);
    for (n, &wn) in w.iter().enumerate() {
        if wn == 0.0 {
            continue;
        }
        let v = &eig.vectors[order[n]];
        for i in 0..3 {
            m1[i] += wn * expectation(&spin_op(0, i), v);
            m2[i] += wn * expectation(&spin_op(1, i), v);
        }
    }
    (spectrum, m1, m2)
}

pub fn ground_block(h: &EffectiveHamiltonian, degeneracy_tol: f64) -> GroundBlock {
    let mut g = 0;
    let (spectrum, m1, m2) = weighted_expectations(h, |sp| {
        g = sp.iter().filter(|&&l| l - sp[0] <= degeneracy_tol).count();
        (0..4).map(|n| if n < g { 1.0 / g as f64 } else { 0.0 }).collect()
    });
    let near_degenerate = g < 4 && spectrum[g] - spectrum[0] <= NEAR_DEGENERACY;
    if near_degenerate {
        log::debug!("near-degenerate ground block: gap {:.3e}", spectrum[g] - spectrum[0]);
    }
    GroundBlock { lambda0: spectrum[0], g, m1, m2, spectrum, near_degenerate }
}

/// Boltzmann-weighted expectations at inverse temperature `beta`.
fn thermal_block(h: &EffectiveHamiltonian, beta: f64) -> ([f64; 4], Vec3, Vec3) {
    weighted_expectations(h, |sp| {
        let b: Vec<f64> = sp.iter().map(|l| (-beta * (l - sp[0])).exp()).collect();
        let z: f64 = b.iter().sum();
        b.iter().map(|x| x / z).collect()
    })
}

pub fn conjugate_fields(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<ConjugateFields> {
    let (g1, g2) = sparse_mean_field_gradient(spec, s, m)?;
    Ok(ConjugateFields { mt1: g1.map(|x| -2.0 * x), mt2: g2.map(|x| -2.0 * x) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleOptions {
    pub damping: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions { damping: 0.5, max_iter: 10_000, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub s: f64,
    pub m: MagPair,
    pub mt: ConjugateFields,
    pub lambda0: f64,
    pub g: usize,
    pub u: f64,
    pub converged: bool,
    /// Max-norm of ⟨σ⟩(m̃(m)) − m at the returned m.
    pub residual: f64,
    pub iterations: usize,
}

impl BranchState for SaddleSolution {
    fn s(&self) -> f64 {
        self.s
    }
    fn energy(&self) -> f64 {
        self.u
    }
    fn mags(&self) -> MagPair {
        self.m
    }
}

fn max_diff(a: &MagPair, b1: Vec3, b2: Vec3) -> f64 {
    (0..3)
        .map(|i| (a.m1[i] - b1[i]).abs().max((a.m2[i] - b2[i]).abs()))
        .fold(0.0, f64::max)
}

fn check_init(init: &MagPair) -> Result<()> {
    init.check_finite()?;
    for (a, v) in [init.m1, init.m2].iter().enumerate() {
        if norm(*v) > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "initial magnetization of cluster {} has norm {} > 1",
                a + 1,
                norm(*v)
            )));
        }
    }
    Ok(())
}

/// Damped fixed-point iteration m ← (1−d)m + d⟨σ⟩ shared by the zero- and
/// finite-temperature solvers. `expect` maps (m̃, K) to the spin expectations.
fn iterate(
    spec: &ModelSpec,
    s: f64,
    init: &MagPair,
    opts: &SaddleOptions,
    expect: impl Fn(&EffectiveHamiltonian) -> (Vec3, Vec3),
) -> Result<(MagPair, f64, usize, bool)> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping {} outside (0, 1]", opts.damping)));
    }
    check_init(init)?;
    let k = coupling_matrix(spec, s)?;
    let mut m = *init;
    let mut damping = opts.damping;
    let mut prev_update: Option<[f64; 6]> = None;
    let mut alternating = 0;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        let mt = conjugate_fields(spec, s, &m)?;
        let (n1, n2) = expect(&build_effective_hamiltonian(&mt, &k)?);
        residual = max_diff(&m, n1, n2);
        if residual < opts.tol {
            return Ok((m, residual, it, true));
        }
        let update = {
            let (a, b) = (MagPair::new(n1, n2).as_array(), m.as_array());
            std::array::from_fn::<f64, 6, _>(|i| a[i] - b[i])
        };
        if let Some(p) = prev_update {
            let d: f64 = p.iter().zip(&update).map(|(x, y)| x * y).sum();
            alternating = if d < 0.0 { alternating + 1 } else { 0 };
            if alternating >= OSCILLATION_RUN {
                damping *= 0.5;
                alternating = 0;
                log::debug!("saddle iteration oscillates at s = {s}; damping -> {damping}");
            }
        }
        prev_update = Some(update);
        let cur = m.as_array();
        m = MagPair::from_array(std::array::from_fn(|i| cur[i] + damping * update[i]));
    }
    Ok((m, residual, opts.max_iter, false))
}

fn finish(
    spec: &ModelSpec,
    s: f64,
    m: MagPair,
    residual: f64,
    iterations: usize,
    converged: bool,
) -> Result<SaddleSolution> {
    let k = coupling_matrix(spec, s)?;
    let mt = conjugate_fields(spec, s, &m)?;
    let gb = ground_block(&build_effective_hamiltonian(&mt, &k)?, DEGENERACY_TOL);
    if gb.near_degenerate {
        log::warn!(
            "s = {s}: ground level of the effective Hamiltonian is nearly degenerate (gap {:.3e})",
            gb.spectrum[gb.g] - gb.spectrum[0]
        );
    }
    let u = 0.5 * (dot(mt.mt1, m.m1) + dot(mt.mt2, m.m2))
        + sparse_mean_field_density(spec, s, &m)?
        + 0.5 * gb.lambda0;
    Ok(SaddleSolution { s, m, mt, lambda0: gb.lambda0, g: gb.g, u, converged, residual, iterations })
}

/// Zero-temperature self-consistent solution reached from `init`.
/// Non-convergence is reported through `converged = false`, not an error.
pub fn solve_saddle(
    spec: &ModelSpec,
    s: f64,
    init: &MagPair,
    opts: &SaddleOptions,
) -> Result<SaddleSolution> {
    ensure_finite("s", s)?;
    let (m, residual, it, converged) = iterate(spec, s, init, opts, |h| {
        let gb = ground_block(h, DEGENERACY_TOL);
        (gb.m1, gb.m2)
    })?;
    finish(spec, s, m, residual, it, converged)
}

/// f = ½Σ m̃·m + h_m + λ₀/2 − (1/2β) ln Σ_n e^{−β(λ_n−λ₀)}.
pub fn free_energy_density(
    spec: &ModelSpec,
    s: f64,
    mt: &ConjugateFields,
    m: &MagPair,
    beta: f64,
) -> Result<f64> {
    ensure_finite("beta", beta)?;
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let k = coupling_matrix(spec, s)?;
    let h = build_effective_hamiltonian(mt, &k)?;
    let eig = hermitian_eigen(&h.flat(), 4);
    let l0 = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = eig.values.iter().map(|l| (-beta * (l - l0)).exp()).sum();
    Ok(0.5 * (dot(mt.mt1, m.m1) + dot(mt.mt2, m.m2))
        + sparse_mean_field_density(spec, s, m)?
        + 0.5 * l0
        - z.ln() / (2.0 * beta))
}

/// Finite-β self-consistency, m = Tr(ρ σ) with ρ ∝ e^{−β ĥ_eff}. The
/// returned `u` is the zero-temperature functional at the thermal m.
pub fn solve_saddle_thermal(
    spec: &ModelSpec,
    s: f64,
    init: &MagPair,
    beta: f64,
    opts: &SaddleOptions,
) -> Result<SaddleSolution> {
    ensure_finite("s", s)?;
    ensure_finite("beta", beta)?;
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let (m, residual, it, converged) = iterate(spec, s, init, opts, |h| {
        let (_, m1, m2) = thermal_block(h, beta);
        (m1, m2)
    })?;
    finish(spec, s, m, residual, it, converged)
}

/// Branch-search initializations: (±ẑ, ±ẑ) and (x̂, x̂).
pub fn standard_inits() -> Vec<MagPair> {
    let (up, dn, x) = ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]);
    vec![
        MagPair::new(up, up),
        MagPair::new(up, dn),
        MagPair::new(dn, up),
        MagPair::new(dn, dn),
        MagPair::new(x, x),
    ]
}

/// Damping used when the default iteration fails to converge.
pub const RETRY_DAMPING: f64 = 0.1;

/// Solve from `init`, retrying once at a smaller damping.
pub fn solve_with_retry(
    spec: &ModelSpec,
    s: f64,
    init: &MagPair,
    opts: &SaddleOptions,
) -> Result<SaddleSolution> {
    let first = solve_saddle(spec, s, init, opts)?;
    if first.converged || opts.damping <= RETRY_DAMPING {
        return Ok(first);
    }
    let retry = SaddleOptions { damping: RETRY_DAMPING, ..*opts };
    solve_saddle(spec, s, init, &retry)
}

/// Lowest-u converged solution over the standard inits.
pub fn solve_global(spec: &ModelSpec, s: f64, opts: &SaddleOptions) -> Result<SaddleSolution> {
    let mut best: Option<SaddleSolution> = None;
    let mut worst_unconverged: Option<SaddleSolution> = None;
    for init in standard_inits() {
        let sol = solve_with_retry(spec, s, &init, opts)?;
        if !sol.converged {
            worst_unconverged = Some(sol);
            continue;
        }
        best = Some(match best {
            None => sol,
            Some(b) => *continuation::lower(&b, &sol),
        });
    }
    best.ok_or_else(|| {
        let w = worst_unconverged.expect("at least one init");
        Error::Convergence { iterations: w.iterations, residual: w.residual, best: Some(w.m) }
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SaddleSolver {
    pub spec: ModelSpec,
    pub opts: SaddleOptions,
}

impl SaddleSolver {
    pub fn new(spec: ModelSpec) -> Self {
        SaddleSolver { spec, opts: SaddleOptions::default() }
    }
}

impl BranchSolver for SaddleSolver {
    type State = SaddleSolution;

    fn solve_global(&self, s: f64) -> Result<SaddleSolution> {
        solve_global(&self.spec, s, &self.opts)
    }

    fn solve_from(&self, s: f64, warm: &SaddleSolution) -> Result<SaddleSolution> {
        let sol = solve_with_retry(&self.spec, s, &warm.m, &self.opts)?;
        if sol.converged {
            Ok(sol)
        } else {
            Err(Error::Convergence { iterations: sol.iterations, residual: sol.residual, best: Some(sol.m) })
        }
    }
}

pub fn sweep_sparse(
    spec: &ModelSpec,
    s_grid: &[f64],
    direction: Direction,
) -> Result<SweepResult<SaddleSolution>> {
    continuation::sweep_with(&SaddleSolver::new(*spec), s_grid, direction)
}

pub fn detect_transition_sparse(
    spec: &ModelSpec,
    s_grid: &[f64],
    jump_threshold: f64,
) -> Result<TransitionReport> {
    continuation::detect_with(&SaddleSolver::new(*spec), s_grid, jump_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CatalystConfig, ModelSpec};

    fn diag(h: &EffectiveHamiltonian) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| h.h[i][i].re)
    }

    #[test]
    fn independent_spins_in_x() {
        let mt = ConjugateFields { mt1: [1.0, 0.0, 0.0], mt2: [1.0, 0.0, 0.0] };
        let h = build_effective_hamiltonian(&mt, &CouplingMatrix::default()).unwrap();
        assert!(h.is_real() && h.is_hermitian(0.0));
        let gb = ground_block(&h, DEGENERACY_TOL);
        let want = [-2.0, 0.0, 0.0, 2.0];
        assert!((0..4).all(|i| (gb.spectrum[i] - want[i]).abs() < 1e-12));
        assert_eq!(gb.g, 1);
        assert!((gb.m1[0] - 1.0).abs() < 1e-12 && (gb.m2[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_zz_example() {
        let mt = ConjugateFields { mt1: [0.0, 0.0, 2.0], mt2: [0.0, 0.0, 0.51] };
        let mut k = CouplingMatrix::default();
        k.k12[2][2] = 0.5;
        let h = build_effective_hamiltonian(&mt, &k).unwrap();
        let d = diag(&h);
        for (got, want) in d.iter().zip([-3.01, -0.99, 1.99, 2.01]) {
            assert!((got - want).abs() < 1e-12);
        }
        let gb = ground_block(&h, DEGENERACY_TOL);
        assert!((gb.lambda0 + 3.01).abs() < 1e-12);
        assert_eq!(gb.g, 1);
        assert!((gb.m1[2] - 1.0).abs() < 1e-12 && (gb.m2[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_fully_degenerate() {
        let h = build_effective_hamiltonian(&ConjugateFields::default(), &CouplingMatrix::default()).unwrap();
        let gb = ground_block(&h, DEGENERACY_TOL);
        assert_eq!(gb.g, 4);
        assert_eq!(gb.lambda0, 0.0);
        assert!(norm(gb.m1) < 1e-12 && norm(gb.m2) < 1e-12);
    }

    #[test]
    fn free_second_spin_averages_out() {
        let mt = ConjugateFields { mt1: [1.0, 0.0, 0.0], mt2: [0.0; 3] };
        let h = build_effective_hamiltonian(&mt, &CouplingMatrix::default()).unwrap();
        let gb = ground_block(&h, DEGENERACY_TOL);
        assert_eq!(gb.g, 2);
        assert!((gb.m1[0] - 1.0).abs() < 1e-12 && norm(gb.m2) < 1e-12);
    }

    #[test]
    fn conjugate_fields_at_the_endpoints() {
        let spec = ModelSpec::sparse(CatalystConfig::new(0.0, 0.0, 0.0));
        let x = [1.0, 0.0, 0.0];
        let mt = conjugate_fields(&spec, 0.0, &MagPair::new(x, x)).unwrap();
        assert_eq!(mt.mt1, x);
        assert_eq!(mt.mt2, x);
        let up = [0.0, 0.0, 1.0];
        let mt = conjugate_fields(&spec, 1.0, &MagPair::new(up, up)).unwrap();
        assert!((mt.mt1[2] - 2.0).abs() < 1e-15 && (mt.mt2[2] - 0.51).abs() < 1e-15);
        assert_eq!(mt.mt1[0], 0.0);
    }

    #[test]
    fn state_a_energy_at_s1() {
        let spec = ModelSpec::sparse(CatalystConfig::new(0.0, 0.0, 0.0));
        let up = [0.0, 0.0, 1.0];
        let sol = solve_saddle(&spec, 1.0, &MagPair::new(up, up), &SaddleOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.u + 1.005).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_damping_and_init() {
        let spec = ModelSpec::sparse(CatalystConfig::default());
        let m = MagPair::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let bad = SaddleOptions { damping: 0.0, ..Default::default() };
        assert!(solve_saddle(&spec, 0.5, &m, &bad).is_err());
        let long = MagPair::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(solve_saddle(&spec, 0.5, &long, &SaddleOptions::default()).is_err());
        let dense = ModelSpec::dense(CatalystConfig::default());
        assert!(solve_saddle(&dense, 0.5, &m, &SaddleOptions::default()).is_err());
    }
}
