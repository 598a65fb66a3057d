//! Classical limit of the dense model: minimization of the energy density
//! over two unit spheres, branch continuation and transition detection.

use serde::{Deserialize, Serialize};

use crate::continuation::{self, BranchSolver, BranchState, Direction, SweepResult, TransitionReport};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::model::{dense_energy_density, dense_gradient, dense_hessian, MagPair, ModelSpec};
use crate::spinwave::local_frame;
use crate::vec3::{add, dot, normalize, scale, Vec3};

/// Chart pole is moved once |m . pole| exceeds this.
const RECHART_AT: f64 = 0.99;
/// Tangent-Hessian eigenvalues below this mark a saddle to escape from.
const NEGATIVE_CURVATURE: f64 = -1e-9;
const MAX_ESCAPES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub s: f64,
    pub m: MagPair,
    pub energy: f64,
    /// Lagrange multipliers, mu_a = -(dh/dm_a) . m_a.
    pub mu: [f64; 2],
    /// Max-norm of dh/dm_a + mu_a m_a over both clusters.
    pub residual: f64,
    /// Some cluster carries no term at this s; its direction is arbitrary.
    pub indeterminate: bool,
}

impl BranchState for ClassicalState {
    fn s(&self) -> f64 {
        self.s
    }
    fn energy(&self) -> f64 {
        self.energy
    }
    fn mags(&self) -> MagPair {
        self.m
    }
}

/// Stationarity data at a point on the spheres.
pub fn stationarity(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<([f64; 2], f64)> {
    let (g1, g2) = dense_gradient(spec, s, m)?;
    let mu = [-dot(g1, m.m1), -dot(g2, m.m2)];
    let r1 = add(g1, scale(m.m1, mu[0]));
    let r2 = add(g2, scale(m.m2, mu[1]));
    let res = r1.iter().chain(r2.iter()).fold(0.0_f64, |a, x| a.max(x.abs()));
    Ok((mu, res))
}

/// Spherical chart with pole `w` and equator basis (`u`, `v`).
#[derive(Debug, Clone, Copy)]
struct Chart {
    u: Vec3,
    v: Vec3,
    w: Vec3,
}

impl Chart {
    const Z: Chart = Chart { u: [1.0, 0.0, 0.0], v: [0.0, 1.0, 0.0], w: [0.0, 0.0, 1.0] };

    /// Standard chart unless `m` is near its pole; then the coordinate
    /// axis least aligned with `m` becomes the pole.
    fn for_point(m: Vec3) -> Chart {
        if m[2].abs() <= RECHART_AT {
            return Chart::Z;
        }
        if m[0].abs() <= m[1].abs() {
            Chart { u: [0.0, 1.0, 0.0], v: [0.0, 0.0, 1.0], w: [1.0, 0.0, 0.0] }
        } else {
            Chart { u: [0.0, 0.0, 1.0], v: [1.0, 0.0, 0.0], w: [0.0, 1.0, 0.0] }
        }
    }

    fn angles(&self, m: Vec3) -> (f64, f64) {
        let c = dot(m, self.w).clamp(-1.0, 1.0);
        (c.acos(), dot(m, self.v).atan2(dot(m, self.u)))
    }

    fn point(&self, th: f64, ph: f64) -> Vec3 {
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        add(add(scale(self.u, st * cp), scale(self.v, st * sp)), scale(self.w, ct))
    }

    fn d_theta(&self, th: f64, ph: f64) -> Vec3 {
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        add(add(scale(self.u, ct * cp), scale(self.v, ct * sp)), scale(self.w, -st))
    }

    fn d_phi(&self, th: f64, ph: f64) -> Vec3 {
        let st = th.sin();
        let (sp, cp) = ph.sin_cos();
        add(scale(self.u, -st * sp), scale(self.v, st * cp))
    }

    fn needs_recentering(&self, m: Vec3) -> bool {
        dot(m, self.w).abs() > RECHART_AT
    }
}

struct Objective<'a> {
    spec: &'a ModelSpec,
    s: f64,
    charts: [Chart; 2],
}

impl Objective<'_> {
    fn mags(&self, x: &[f64; 4]) -> MagPair {
        MagPair::new(self.charts[0].point(x[0], x[1]), self.charts[1].point(x[2], x[3]))
    }

    fn eval(&self, x: &[f64; 4]) -> Result<(f64, [f64; 4])> {
        let m = self.mags(x);
        let f = dense_energy_density(self.spec, self.s, &m)?;
        let (g1, g2) = dense_gradient(self.spec, self.s, &m)?;
        let c = &self.charts;
        let g = [
            dot(g1, c[0].d_theta(x[0], x[1])),
            dot(g1, c[0].d_phi(x[0], x[1])),
            dot(g2, c[1].d_theta(x[2], x[3])),
            dot(g2, c[1].d_phi(x[2], x[3])),
        ];
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite energy or gradient".into()));
        }
        Ok((f, g))
    }

    fn coords(&self, m: &MagPair) -> [f64; 4] {
        let (a, b) = self.charts[0].angles(m.m1);
        let (c, d) = self.charts[1].angles(m.m2);
        [a, b, c, d]
    }
}

fn unit_or_err(v: Vec3, what: &str) -> Result<Vec3> {
    normalize(v).ok_or_else(|| Error::InvalidArgument(format!("{what} is the zero vector")))
}

/// BFGS on the four chart angles; returns the final point and the number
/// of iterations used. Stops at `target` residual or when the line search
/// can make no progress.
fn bfgs(
    spec: &ModelSpec,
    s: f64,
    start: MagPair,
    max_iter: usize,
    target: f64,
) -> Result<(MagPair, usize)> {
    let mut m = start;
    let mut it = 0usize;
    'outer: while it < max_iter {
        let obj = Objective { spec, s, charts: [Chart::for_point(m.m1), Chart::for_point(m.m2)] };
        let mut x = obj.coords(&m);
        let (mut f, mut g) = obj.eval(&x)?;
        let mut hinv = [[0.0; 4]; 4];
        for (i, row) in hinv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        while it < max_iter {
            m = obj.mags(&x);
            if stationarity(spec, s, &m)?.1 <= target {
                break 'outer;
            }
            if obj.charts[0].needs_recentering(m.m1) || obj.charts[1].needs_recentering(m.m2) {
                continue 'outer;
            }
            it += 1;
            let mut p = [0.0; 4];
            for i in 0..4 {
                p[i] = -(0..4).map(|j| hinv[i][j] * g[j]).sum::<f64>();
            }
            let mut slope: f64 = (0..4).map(|i| p[i] * g[i]).sum();
            if slope >= 0.0 {
                p = g.map(|v| -v);
                slope = -g.iter().map(|v| v * v).sum::<f64>();
                hinv = [[0.0; 4]; 4];
                for (i, row) in hinv.iter_mut().enumerate() {
                    row[i] = 1.0;
                }
            }
            let pmax = p.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let mut t = if pmax > 0.5 { 0.5 / pmax } else { 1.0 };
            let mut accepted = None;
            for _ in 0..60 {
                let xn: [f64; 4] = std::array::from_fn(|i| x[i] + t * p[i]);
                let (fn_, gn) = obj.eval(&xn)?;
                if fn_ <= f + 1e-4 * t * slope {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
                t *= 0.5;
            }
            let Some((xn, fn_, gn)) = accepted else {
                // No descent possible at working precision.
                break 'outer;
            };
            let sv: [f64; 4] = std::array::from_fn(|i| xn[i] - x[i]);
            let yv: [f64; 4] = std::array::from_fn(|i| gn[i] - g[i]);
            let sy: f64 = (0..4).map(|i| sv[i] * yv[i]).sum();
            if sy > 1e-18 {
                let hy: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| hinv[i][j] * yv[j]).sum());
                let yhy: f64 = (0..4).map(|i| yv[i] * hy[i]).sum();
                for i in 0..4 {
                    for j in 0..4 {
                        hinv[i][j] += (sy + yhy) * sv[i] * sv[j] / (sy * sy)
                            - (hy[i] * sv[j] + sv[i] * hy[j]) / sy;
                    }
                }
            }
            x = xn;
            f = fn_;
            g = gn;
        }
    }
    Ok((m, it))
}

/// Tangent-space Hessian of h on the product of spheres, in the basis
/// (ex_1, ey_1, ex_2, ey_2) of the local frames.
pub fn tangent_hessian(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<([[f64; 4]; 4], [[Vec3; 2]; 2])> {
    let h = dense_hessian(spec, s, m)?;
    let (mu, _) = stationarity(spec, s, m)?;
    let f1 = local_frame(m.m1)?;
    let f2 = local_frame(m.m2)?;
    let t = [[f1.ex, f1.ey], [f2.ex, f2.ey]];
    let mut q = [[0.0; 4]; 4];
    for a in 0..2 {
        for i in 0..2 {
            for b in 0..2 {
                for j in 0..2 {
                    let mut v = 0.0;
                    for p in 0..3 {
                        for r in 0..3 {
                            v += t[a][i][p] * h[3 * a + p][3 * b + r] * t[b][j][r];
                        }
                    }
                    if a == b && i == j {
                        v += mu[a];
                    }
                    q[2 * a + i][2 * b + j] = v;
                }
            }
        }
    }
    Ok((q, t))
}

fn finish(spec: &ModelSpec, s: f64, m: MagPair) -> Result<ClassicalState> {
    let m = MagPair::new(unit_or_err(m.m1, "m1")?, unit_or_err(m.m2, "m2")?);
    let energy = dense_energy_density(spec, s, &m)?;
    let (mu, residual) = stationarity(spec, s, &m)?;
    let indeterminate = spec.cluster_is_free(s, 0) || spec.cluster_is_free(s, 1);
    Ok(ClassicalState { s, m, energy, mu, residual, indeterminate })
}

/// Local minimum of the dense energy density reached from `initial`.
///
/// Saddle points found by the descent are escaped along a direction of
/// negative curvature, so the result is a true local minimum.
pub fn minimize(
    spec: &ModelSpec,
    s: f64,
    initial: MagPair,
    max_iter: usize,
    tol: f64,
) -> Result<ClassicalState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let mut m = MagPair::new(unit_or_err(initial.m1, "m1")?, unit_or_err(initial.m2, "m2")?);
    let target = (tol * 1e-2).max(1e-12);
    let mut used = 0usize;
    for _ in 0..=MAX_ESCAPES {
        let (next, it) = bfgs(spec, s, m, max_iter - used.min(max_iter), target)?;
        used += it;
        m = next;
        let state = finish(spec, s, m)?;
        if state.residual >= tol {
            return Err(Error::Convergence { iterations: used, residual: state.residual, best: Some(m) });
        }
        let (q, t) = tangent_hessian(spec, s, &m)?;
        let flat: Vec<f64> = q.iter().flatten().copied().collect();
        let eig = symmetric_eigen(&flat, 4);
        if eig.values[0] >= NEGATIVE_CURVATURE {
            return Ok(state);
        }
        // Escape the saddle along the softest direction, trying both signs.
        let v = &eig.vectors[0];
        let step = 1e-2;
        let mut best: Option<(f64, MagPair)> = None;
        for sign in [1.0, -1.0] {
            let d1 = add(scale(t[0][0], v[0]), scale(t[0][1], v[1]));
            let d2 = add(scale(t[1][0], v[2]), scale(t[1][1], v[3]));
            let trial = MagPair::new(
                unit_or_err(add(m.m1, scale(d1, sign * step)), "m1")?,
                unit_or_err(add(m.m2, scale(d2, sign * step)), "m2")?,
            );
            let e = dense_energy_density(spec, s, &trial)?;
            if best.map_or(true, |(b, _)| e < b) {
                best = Some((e, trial));
            }
        }
        m = best.expect("two trials").1;
        if used >= max_iter {
            break;
        }
    }
    let state = finish(spec, s, m)?;
    Err(Error::Convergence { iterations: used, residual: state.residual, best: Some(m) })
}

/// Deterministic multistart set: the four (+-z, +-z) combinations, (x, x),
/// then low-discrepancy points on the angle torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StartSet {
    pub seed: u64,
}

impl StartSet {
    pub fn points(&self, n: usize) -> Vec<MagPair> {
        let z = [0.0, 0.0, 1.0];
        let nz = [0.0, 0.0, -1.0];
        let x = [1.0, 0.0, 0.0];
        let mut out = vec![
            MagPair::new(z, z),
            MagPair::new(z, nz),
            MagPair::new(nz, z),
            MagPair::new(nz, nz),
            MagPair::new(x, x),
        ];
        // Additive recurrence with the generalized golden ratio in 4 dims.
        let phi: f64 = 1.167_303_978_261_418_7;
        let alpha: [f64; 4] = std::array::from_fn(|i| phi.powi(-(i as i32 + 1)).fract());
        let offset = (0.5 + self.seed as f64 * 0.618_033_988_749_894_9).fract();
        let mut k = 1u64;
        while out.len() < n {
            let u: [f64; 4] = std::array::from_fn(|i| (offset + k as f64 * alpha[i]).fract());
            let sphere = |a: f64, b: f64| -> Vec3 {
                let ct = 1.0 - 2.0 * a;
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                let ph = 2.0 * std::f64::consts::PI * b;
                [st * ph.cos(), st * ph.sin(), ct]
            };
            out.push(MagPair::new(sphere(u[0], u[1]), sphere(u[2], u[3])));
            k += 1;
        }
        out.truncate(n);
        out
    }
}

pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_STARTS: usize = 16;

/// Lowest-energy state over the default start set.
pub fn global_minimize(spec: &ModelSpec, s: f64, n_starts: usize) -> Result<ClassicalState> {
    global_minimize_from(spec, s, &StartSet::default().points(n_starts.max(8)))
}

/// Lowest-energy state over the given starts; ties within 1e-12 go to the
/// larger m2z.
pub fn global_minimize_from(spec: &ModelSpec, s: f64, starts: &[MagPair]) -> Result<ClassicalState> {
    let mut best: Option<ClassicalState> = None;
    let mut last_err = None;
    for &start in starts {
        match minimize(spec, s, start, DEFAULT_MAX_ITER, DEFAULT_TOL) {
            Ok(st) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let d = st.energy - b.energy;
                        d < -1e-12 || (d.abs() <= 1e-12 && st.m.m2[2] > b.m.m2[2] + 1e-12)
                    }
                };
                if better {
                    best = Some(st);
                }
            }
            Err(e @ Error::InvalidArgument(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::InvalidArgument("no start points supplied".into()))
    })
}

/// Dense-model branch solver.
#[derive(Debug, Clone, Copy)]
pub struct DenseSolver {
    pub spec: ModelSpec,
    pub n_starts: usize,
    pub seed: u64,
}

impl DenseSolver {
    pub fn new(spec: ModelSpec) -> Self {
        DenseSolver { spec, n_starts: DEFAULT_STARTS, seed: 0 }
    }
}

impl BranchSolver for DenseSolver {
    type State = ClassicalState;

    fn solve_global(&self, s: f64) -> Result<ClassicalState> {
        let starts = StartSet { seed: self.seed }.points(self.n_starts.max(8));
        global_minimize_from(&self.spec, s, &starts)
    }

    fn solve_from(&self, s: f64, warm: &ClassicalState) -> Result<ClassicalState> {
        minimize(&self.spec, s, warm.m, DEFAULT_MAX_ITER, DEFAULT_TOL)
    }
}

pub fn sweep(spec: &ModelSpec, s_grid: &[f64], direction: Direction) -> Result<SweepResult<ClassicalState>> {
    continuation::sweep_with(&DenseSolver::new(*spec), s_grid, direction)
}

pub fn detect_transition(spec: &ModelSpec, s_grid: &[f64], jump_threshold: f64) -> Result<TransitionReport> {
    continuation::detect_with(&DenseSolver::new(*spec), s_grid, jump_threshold)
}
