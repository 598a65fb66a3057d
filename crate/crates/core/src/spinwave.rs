//! Quasi-particle gaps of the dense model from the quadratic (spin-wave)
//! expansion around a classical minimum.
//!
//! Each cluster is bosonized in its local frame. The quadratic boson
//! Hamiltonian is diagonalized through the non-Hermitian 4x4 matrix
//! `E = [[M + Z+, conj(Z-)], [-Z-, -M - conj(Z+)]]`, whose spectrum is
//! `{+eps_1, +eps_2, -eps_1, -eps_2}`. Gaps are `Delta_a = 4 eps_a`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::classical::{global_minimize, ClassicalState, DEFAULT_STARTS};
use crate::continuation::{check_grid, detect_with};
use crate::error::{Error, Result};
use crate::golden::{golden_section_max, golden_section_min};
use crate::linalg::{eigenspace, eigenvalues, CMatrix};
use crate::model::{dense_hessian, ModelSpec};
use crate::vec3::{add, cross, dot, normalize, norm, scale, Vec3};

/// Imaginary parts of the spectrum above this reject the state as unstable.
pub const IMAG_TOL: f64 = 1e-8;
/// Stationarity residual required before expanding around a state.
pub const STATIONARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub ex: Vec3,
    pub ey: Vec3,
    pub ez: Vec3,
}

impl LocalFrame {
    /// Frame rotated by `angle` about `ez`.
    pub fn rotated(&self, angle: f64) -> LocalFrame {
        let (s, c) = angle.sin_cos();
        LocalFrame {
            ex: add(scale(self.ex, c), scale(self.ey, s)),
            ey: add(scale(self.ex, -s), scale(self.ey, c)),
            ez: self.ez,
        }
    }
}

/// Deterministic right-handed frame with `ez = m`.
pub fn local_frame(m: Vec3) -> Result<LocalFrame> {
    let ez = normalize(m).ok_or_else(|| Error::InvalidArgument("zero magnetization".into()))?;
    let zc = cross([0.0, 0.0, 1.0], ez);
    let ey = if norm(zc) > 1e-6 { normalize(zc).expect("nonzero") } else { [0.0, 1.0, 0.0] };
    let ex = cross(ey, ez);
    Ok(LocalFrame { ex, ey, ez })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationMatrix {
    pub e: CMatrix,
    pub mu: [f64; 2],
    pub z_plus: [[C64; 2]; 2],
    pub z_minus: [[C64; 2]; 2],
}

/// Builds E at a stationary state using the default local frames.
pub fn fluctuation_matrix(spec: &ModelSpec, state: &ClassicalState) -> Result<FluctuationMatrix> {
    let frames = [local_frame(state.m.m1)?, local_frame(state.m.m2)?];
    fluctuation_matrix_in(spec, state, frames)
}

/// Builds E using caller-supplied frames; each `ez` must equal the state's
/// magnetization.
pub fn fluctuation_matrix_in(
    spec: &ModelSpec,
    state: &ClassicalState,
    frames: [LocalFrame; 2],
) -> Result<FluctuationMatrix> {
    if !(state.residual < STATIONARITY_TOL) {
        return Err(Error::Precondition(format!(
            "state at s = {} is not stationary (residual {:.3e})",
            state.s, state.residual
        )));
    }
    let h = dense_hessian(spec, state.s, &state.m)?;
    // hp[a][b][alpha][beta] = e_a^alpha . H_ab . e_b^beta, alpha in {x, y}
    let mut hp = [[[[0.0; 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let ea = [frames[a].ex, frames[a].ey];
            let eb = [frames[b].ex, frames[b].ey];
            for al in 0..2 {
                for be in 0..2 {
                    let mut v = 0.0;
                    for p in 0..3 {
                        for r in 0..3 {
                            v += ea[al][p] * h[3 * a + p][3 * b + r] * eb[be][r];
                        }
                    }
                    hp[a][b][al][be] = v;
                }
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            for al in 0..2 {
                let d = (hp[a][b][al][al] - hp[b][a][al][al]).abs();
                if d > 1e-12 * (1.0 + hp[a][b][al][al].abs()) {
                    return Err(Error::Precondition("frame-projected Hessian not symmetric".into()));
                }
            }
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut zp = [[C64::new(0.0, 0.0); 2]; 2];
    let mut zm = zp;
    for a in 0..2 {
        for b in 0..2 {
            let (xx, yy) = (hp[a][b][0][0], hp[a][b][1][1]);
            let (xy_ab, xy_ba) = (hp[a][b][0][1], hp[b][a][0][1]);
            zp[a][b] = (C64::new(xx + yy, 0.0) - i * (xy_ab - xy_ba)) * 0.5;
            zm[a][b] = (C64::new(xx - yy, 0.0) - i * (xy_ab + xy_ba)) * 0.5;
        }
    }
    let mu = state.mu;
    let mut e = CMatrix::zeros(4);
    for a in 0..2 {
        for b in 0..2 {
            let m_ab = if a == b { mu[a] } else { 0.0 };
            e[(a, b)] = zp[a][b] + m_ab;
            e[(a, b + 2)] = zm[a][b].conj();
            e[(a + 2, b)] = -zm[a][b];
            e[(a + 2, b + 2)] = -zp[a][b].conj() - m_ab;
        }
    }
    Ok(FluctuationMatrix { e, mu, z_plus: zp, z_minus: zm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSpectrum {
    pub delta1: f64,
    pub delta2: f64,
    /// Positive eigenvalues of E, ascending.
    pub eps: [f64; 2],
    /// Left eigenvectors psi = (u_1, u_2, v_1, v_2) with psi^T E = eps psi^T,
    /// normalized to |u|^2 - |v|^2 = 1.
    pub eigvecs: [Vec<C64>; 2],
    /// All four eigenvalues of E.
    pub spectrum: Vec<C64>,
}

/// Indefinite product <a, b> = u_a . conj(u_b) - v_a . conj(v_b).
pub fn eta_product(a: &[C64], b: &[C64]) -> C64 {
    (0..2).map(|k| a[k] * b[k].conj()).sum::<C64>() - (2..4).map(|k| a[k] * b[k].conj()).sum::<C64>()
}

/// Symplectic product u_a^T v_b - v_a^T u_b.
pub fn symplectic_product(a: &[C64], b: &[C64]) -> C64 {
    (0..2).map(|k| a[k] * b[k + 2] - a[k + 2] * b[k]).sum()
}

pub fn excitation_gaps(f: &FluctuationMatrix) -> Result<GapSpectrum> {
    let spectrum = eigenvalues(&f.e)?;
    let scale_e = f.e.max_abs().max(1.0);
    let max_imag = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag >= IMAG_TOL * scale_e {
        return Err(Error::Instability { max_imag });
    }
    let mut re: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    let pair_err = (re[0] + re[3]).abs().max((re[1] + re[2]).abs());
    if pair_err > IMAG_TOL * scale_e {
        return Err(Error::Precondition(format!("spectrum not +- paired (mismatch {pair_err:.3e})")));
    }
    let eps = [re[2], re[3]];
    if eps[0] <= 0.0 {
        return Err(Error::DegenerateMode(format!("non-positive mode energy {:.3e}", eps[0])));
    }
    let et = f.e.transpose();
    let vecs: Vec<Vec<C64>> = if eps[1] - eps[0] <= 1e-8 * scale_e {
        let mut sub = eigenspace(&et, C64::new(0.5 * (eps[0] + eps[1]), 0.0), 2);
        if sub.len() < 2 {
            return Err(Error::DegenerateMode("degenerate eigenspace has deficient rank".into()));
        }
        eta_gram_schmidt(&mut sub)?;
        sub
    } else {
        let mut out = Vec::with_capacity(2);
        for &e in &eps {
            let mut v = eigenspace(&et, C64::new(e, 0.0), 1);
            eta_gram_schmidt(&mut v)?;
            out.push(v.remove(0));
        }
        out
    };
    for (k, v) in vecs.iter().enumerate() {
        let ev = et.mul_vec(v);
        let res = ev.iter().zip(v).map(|(a, b)| (a - b * eps[k]).norm()).fold(0.0, f64::max);
        if res > 1e-7 * scale_e {
            return Err(Error::DegenerateMode(format!("left eigenvector residual {res:.3e}")));
        }
    }
    let mut it = vecs.into_iter();
    Ok(GapSpectrum {
        delta1: 4.0 * eps[0],
        delta2: 4.0 * eps[1],
        eps,
        eigvecs: [it.next().expect("two vectors"), it.next().expect("two vectors")],
        spectrum,
    })
}

/// Gram-Schmidt under the indefinite metric; every vector must end with
/// norm +1.
fn eta_gram_schmidt(vs: &mut [Vec<C64>]) -> Result<()> {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        for u in done.iter() {
            let c = eta_product(v, u);
            for (vk, uk) in v.iter_mut().zip(u) {
                *vk -= c * uk;
            }
        }
        let n = eta_product(v, v).re;
        let scale_v: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if !(n > 1e-12 * scale_v) {
            return Err(Error::DegenerateMode(format!("pseudo-norm {n:.3e} is not positive")));
        }
        let k = 1.0 / n.sqrt();
        v.iter_mut().for_each(|z| *z *= k);
    }
    Ok(())
}

/// Gaps at the equilibrium state, in one call.
pub fn gaps_at(spec: &ModelSpec, state: &ClassicalState) -> Result<GapSpectrum> {
    excitation_gaps(&fluctuation_matrix(spec, state)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapPoint {
    pub s: f64,
    pub state: ClassicalState,
    /// `None` where the fluctuation spectrum is unstable or degenerate.
    pub gaps: Option<(f64, f64)>,
}

fn gap_point(spec: &ModelSpec, s: f64) -> Result<GapPoint> {
    let state = global_minimize(spec, s, DEFAULT_STARTS)?;
    let gaps = match gaps_at(spec, &state) {
        Ok(g) => Some((g.delta1, g.delta2)),
        Err(Error::Instability { .. } | Error::DegenerateMode(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(GapPoint { s, state, gaps })
}

/// Gaps above the equilibrium (global minimum) state at each grid point.
pub fn gap_profile(spec: &ModelSpec, s_grid: &[f64]) -> Result<Vec<GapPoint>> {
    check_grid(s_grid)?;
    s_grid.iter().map(|&s| gap_point(spec, s).map_err(|e| e.at(s))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinGap {
    pub s_min: f64,
    pub delta1_min: f64,
    /// Set when the result may reflect a branch edge or undefined gaps.
    pub warning: Option<String>,
}

/// Minimum of Delta_1 over s: grid scan, then golden-section refinement
/// around the grid argmin.
pub fn min_gap(spec: &ModelSpec, s_grid: &[f64]) -> Result<MinGap> {
    let profile = gap_profile(spec, s_grid)?;
    let mut warnings = Vec::new();
    let undefined = profile.iter().filter(|p| p.gaps.is_none()).count();
    if undefined > 0 {
        warnings.push(format!("gaps undefined at {undefined} grid points"));
    }
    let max_step = profile
        .windows(2)
        .map(|w| (w[1].state.m.m2[2] - w[0].state.m.m2[2]).abs())
        .fold(0.0, f64::max);
    if max_step > 0.5 {
        warnings.push("equilibrium m2z jumps on the grid; minimum may sit at a branch edge".into());
    }
    let (i, d) = profile
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.gaps.map(|g| (i, g.0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Instability { max_imag: f64::NAN })?;
    let mut best = (s_grid[i], d);
    if s_grid.len() > 1 {
        let lo = s_grid[i.saturating_sub(1)];
        let hi = s_grid[(i + 1).min(s_grid.len() - 1)];
        let delta1 = |s: f64| -> std::result::Result<f64, Error> {
            Ok(gap_point(spec, s)?.gaps.map_or(f64::INFINITY, |g| g.0))
        };
        let (s, v) = golden_section_min(delta1, lo, hi, 1e-5)?;
        if v < best.1 {
            best = (s, v);
        }
    }
    Ok(MinGap {
        s_min: best.0,
        delta1_min: best.1,
        warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalystOptimum {
    pub xi_star: f64,
    pub gap_at_star: f64,
    /// Every (xi, min gap) pair evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Maximizes the minimum gap over the catalyst strength by golden-section
/// search. Each evaluated xi is first checked for a first-order transition.
pub fn optimize_catalyst(
    family: impl Fn(f64) -> ModelSpec,
    xi_range: (f64, f64),
    tol_xi: f64,
    s_grid: &[f64],
) -> Result<CatalystOptimum> {
    let (a, b) = xi_range;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidArgument(format!("bad xi range [{a}, {b}]")));
    }
    if !(tol_xi > 0.0) {
        return Err(Error::InvalidArgument(format!("tol_xi must be positive, got {tol_xi}")));
    }
    check_grid(s_grid)?;
    let mut evaluations = Vec::new();
    let mut objective = |xi: f64| -> Result<f64> {
        let spec = family(xi);
        let solver = crate::classical::DenseSolver::new(spec);
        if detect_with(&solver, s_grid, 0.5)?.found {
            return Err(Error::TransitionInRange { xi });
        }
        let g = min_gap(&spec, s_grid)?.delta1_min;
        evaluations.push((xi, g));
        Ok(g)
    };
    let (xi_star, gap_at_star) = if a == b {
        (a, objective(a)?)
    } else {
        golden_section_max(&mut objective, a, b, tol_xi)?
    };
    Ok(CatalystOptimum { xi_star, gap_at_star, evaluations })
}

/// Orthonormality and right-handedness of a frame to `tol`.
pub fn frame_is_orthonormal(f: &LocalFrame, tol: f64) -> bool {
    let v = [f.ex, f.ey, f.ez];
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot(v[i], v[j]) - want).abs() > tol {
                return false;
            }
        }
    }
    let c = cross(f.ex, f.ey);
    (0..3).all(|k| (c[k] - f.ez[k]).abs() <= tol)
}
