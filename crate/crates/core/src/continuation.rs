//! Branch continuation over an s grid and first-order transition detection
//! by crossing of coexisting branch energies. Shared by the dense and
//! sparse models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MagPair;
use crate::vec3::max_abs_diff;

/// Two branch states closer than this (max-norm on both magnetizations)
/// are the same branch.
pub const SAME_BRANCH_TOL: f64 = 1e-5;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-6;

/// Every k-th sweep point is also solved globally.
pub const GLOBAL_CHECK_EVERY: usize = 10;

pub trait BranchState: Clone {
    fn s(&self) -> f64;
    /// Branch energy used for equilibrium comparison.
    fn energy(&self) -> f64;
    fn mags(&self) -> MagPair;
    fn m2z(&self) -> f64 {
        self.mags().m2[2]
    }
}

/// A solver that can find a state at `s` either globally or by local
/// continuation from a nearby state.
pub trait BranchSolver {
    type State: BranchState;
    fn solve_global(&self, s: f64) -> Result<Self::State>;
    fn solve_from(&self, s: f64, warm: &Self::State) -> Result<Self::State>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Result of comparing a warm-started branch state with a global solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalCheck {
    pub s: f64,
    pub branch_energy: f64,
    pub global_energy: f64,
}

impl GlobalCheck {
    /// The tracked branch is metastable at this point.
    pub fn branch_is_metastable(&self) -> bool {
        self.global_energy < self.branch_energy - 1e-9
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult<S> {
    /// States in traversal order.
    pub states: Vec<S>,
    pub direction: Direction,
    pub global_checks: Vec<GlobalCheck>,
    /// Grid values where continuation failed and a global solve was used.
    pub restarts: Vec<f64>,
}

impl<S: BranchState> SweepResult<S> {
    /// States sorted by ascending s.
    pub fn ascending(&self) -> Vec<S> {
        let mut v = self.states.clone();
        if self.direction == Direction::Backward {
            v.reverse();
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub found: bool,
    /// Branch-energy crossing; `None` unless `found`.
    pub s_star: Option<f64>,
    /// |m2z| difference of the two branches at the crossing, or the largest
    /// grid step of the equilibrium m2z when no crossing exists.
    pub jump_m2z: f64,
    /// s extent of the coexistence window holding the crossing (or the
    /// widest window when there is no crossing).
    pub hysteresis_width: f64,
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty s grid".into()));
    }
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("s grid has non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("s grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Continuation along `grid` in the given direction. The first point is
/// solved globally; later points are warm-started from their predecessor.
pub fn sweep_with<B: BranchSolver>(
    solver: &B,
    grid: &[f64],
    direction: Direction,
) -> Result<SweepResult<B::State>> {
    check_grid(grid)?;
    let order: Vec<f64> = match direction {
        Direction::Forward => grid.to_vec(),
        Direction::Backward => grid.iter().rev().copied().collect(),
    };
    let mut states: Vec<B::State> = Vec::with_capacity(order.len());
    let mut global_checks = Vec::new();
    let mut restarts = Vec::new();
    for (i, &s) in order.iter().enumerate() {
        let state = match states.last() {
            None => solver.solve_global(s).map_err(|e| e.at(s))?,
            Some(prev) => match solver.solve_from(s, prev) {
                Ok(st) => st,
                Err(e) => {
                    log::debug!("continuation failed at s = {s}: {e}; solving globally");
                    restarts.push(s);
                    solver.solve_global(s).map_err(|e| e.at(s))?
                }
            },
        };
        if i > 0 && i % GLOBAL_CHECK_EVERY == 0 {
            let g = solver.solve_global(s).map_err(|e| e.at(s))?;
            let check =
                GlobalCheck { s, branch_energy: state.energy(), global_energy: g.energy() };
            if check.branch_is_metastable() {
                log::debug!(
                    "{direction:?} branch at s = {s} lies {:.3e} above the global minimum",
                    check.branch_energy - check.global_energy
                );
            }
            global_checks.push(check);
        }
        states.push(state);
    }
    Ok(SweepResult { states, direction, global_checks, restarts })
}

fn distinct<S: BranchState>(a: &S, b: &S) -> bool {
    let (ma, mb) = (a.mags(), b.mags());
    max_abs_diff(ma.m1, mb.m1).max(max_abs_diff(ma.m2, mb.m2)) > SAME_BRANCH_TOL
}

/// Lower-energy state of a pair; ties go to larger m2z.
pub fn lower<'a, S: BranchState>(a: &'a S, b: &'a S) -> &'a S {
    let d = a.energy() - b.energy();
    if d.abs() < 1e-12 {
        if a.m2z() >= b.m2z() {
            a
        } else {
            b
        }
    } else if d < 0.0 {
        a
    } else {
        b
    }
}

/// Both branches and the energy crossing between two grid points.
#[derive(Debug, Clone)]
pub struct Crossing<S> {
    pub s_star: f64,
    pub forward: S,
    pub backward: S,
}

fn bisect_crossing<B: BranchSolver>(
    solver: &B,
    mut f: B::State,
    mut b: B::State,
    mut lo: f64,
    mut hi: f64,
) -> Crossing<B::State> {
    // Sign of (forward - backward) at the lower end.
    let sign_lo = (f.energy() - b.energy()).signum();
    let mut best = (f.clone(), b.clone());
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let (fm, bm) = match (solver.solve_from(mid, &f), solver.solve_from(mid, &b)) {
            (Ok(x), Ok(y)) if distinct(&x, &y) => (x, y),
            _ => break,
        };
        if (fm.energy() - bm.energy()).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        f = fm;
        b = bm;
        best = (f.clone(), b.clone());
    }
    Crossing { s_star: 0.5 * (lo + hi), forward: best.0, backward: best.1 }
}

/// Forward and backward sweeps plus bisection of every branch-energy
/// crossing inside a coexistence window.
pub struct TransitionScan<S> {
    pub forward: Vec<S>,
    pub backward: Vec<S>,
    pub crossings: Vec<Crossing<S>>,
    pub report: TransitionReport,
}

impl<S: BranchState> TransitionScan<S> {
    /// Equilibrium state at each grid point.
    pub fn equilibrium(&self) -> Vec<S> {
        self.forward.iter().zip(&self.backward).map(|(f, b)| lower(f, b).clone()).collect()
    }

    /// Which sweep supplied the equilibrium state at grid point `i`.
    pub fn branch_tag(&self, i: usize) -> &'static str {
        let (f, b) = (&self.forward[i], &self.backward[i]);
        if !distinct(f, b) {
            "both"
        } else if std::ptr::eq(lower(f, b), f) {
            "forward"
        } else {
            "backward"
        }
    }
}

pub fn scan_transition<B: BranchSolver>(
    solver: &B,
    grid: &[f64],
    jump_threshold: f64,
) -> Result<TransitionScan<B::State>> {
    let forward = sweep_with(solver, grid, Direction::Forward)?.ascending();
    let backward = sweep_with(solver, grid, Direction::Backward)?.ascending();
    let n = grid.len();
    let coexist: Vec<bool> = (0..n).map(|i| distinct(&forward[i], &backward[i])).collect();
    let diff: Vec<f64> = (0..n).map(|i| forward[i].energy() - backward[i].energy()).collect();

    let window_around = |i: usize| -> f64 {
        let (mut a, mut b) = (i, i);
        while a > 0 && coexist[a - 1] {
            a -= 1;
        }
        while b + 1 < n && coexist[b + 1] {
            b += 1;
        }
        grid[b] - grid[a]
    };

    let mut crossings = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if !(coexist[i] && coexist[i + 1]) {
            continue;
        }
        if diff[i] * diff[i + 1] < 0.0 || (diff[i + 1] == 0.0 && diff[i] != 0.0) {
            let c = bisect_crossing(
                solver,
                forward[i].clone(),
                backward[i].clone(),
                grid[i],
                grid[i + 1],
            );
            crossings.push((i, c));
        }
    }

    let report = if let Some((i, c)) = crossings
        .iter()
        .max_by(|a, b| jump(&a.1).total_cmp(&jump(&b.1)))
    {
        let j = jump(c);
        TransitionReport {
            found: j > jump_threshold,
            s_star: (j > jump_threshold).then_some(c.s_star),
            jump_m2z: j,
            hysteresis_width: window_around(*i),
        }
    } else {
        // No crossing: fall back to the largest step of the equilibrium path.
        let eq: Vec<f64> = (0..n).map(|i| lower(&forward[i], &backward[i]).m2z()).collect();
        let (mut step, mut at) = (0.0, None);
        for i in 0..n.saturating_sub(1) {
            let d = (eq[i + 1] - eq[i]).abs();
            if d > step {
                step = d;
                at = Some(0.5 * (grid[i] + grid[i + 1]));
            }
        }
        let widest = (0..n).filter(|&i| coexist[i]).map(window_around).fold(0.0, f64::max);
        TransitionReport {
            found: step > jump_threshold,
            s_star: if step > jump_threshold { at } else { None },
            jump_m2z: step,
            hysteresis_width: widest,
        }
    };
    Ok(TransitionScan {
        forward,
        backward,
        crossings: crossings.into_iter().map(|(_, c)| c).collect(),
        report,
    })
}

fn jump<S: BranchState>(c: &Crossing<S>) -> f64 {
    (c.forward.m2z() - c.backward.m2z()).abs()
}

pub fn detect_with<B: BranchSolver>(
    solver: &B,
    grid: &[f64],
    jump_threshold: f64,
) -> Result<TransitionReport> {
    Ok(scan_transition(solver, grid, jump_threshold)?.report)
}

/// `n` evenly spaced points covering [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
