use meanfield_core::classical::{
    detect_transition, global_minimize, global_minimize_from, minimize, sweep, StartSet,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use meanfield_core::continuation::{linspace, Direction};
use meanfield_core::ed::{build_dense_sector_hamiltonian, ed_solve};
use meanfield_core::vec3::norm;
use meanfield_core::{CatalystConfig, MagPair, ModelSpec, Placement};
use proptest::prelude::*;

fn inter(xi: f64) -> ModelSpec {
    ModelSpec::dense(Placement::Intercluster.catalyst(xi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn global_minima_are_stationary_unit_and_planar(
        s in 0.0..=1.0f64, x11 in -6.0..6.0f64, x22 in -6.0..6.0f64, x12 in -10.0..10.0f64
    ) {
        let spec = ModelSpec::dense(CatalystConfig::new(x11, x22, x12));
        let st = global_minimize(&spec, s, 16).unwrap();
        prop_assert!(st.residual < 1e-8);
        prop_assert!((norm(st.m.m1) - 1.0).abs() < 1e-10);
        prop_assert!((norm(st.m.m2) - 1.0).abs() < 1e-10);
        prop_assert!(st.m.m1[1].abs() < 1e-8 && st.m.m2[1].abs() < 1e-8);
    }

    #[test]
    fn more_starts_never_raise_the_energy(s in 0.0..=1.0f64, x12 in -10.0..10.0f64, seed in 0u64..4) {
        let spec = inter(x12);
        let set = StartSet { seed };
        let few = global_minimize_from(&spec, s, &set.points(8)).unwrap();
        let many = global_minimize_from(&spec, s, &set.points(64)).unwrap();
        prop_assert!(many.energy <= few.energy + 1e-12);
    }
}

#[test]
fn global_minimum_at_s1_is_state_a() {
    let st = global_minimize(&inter(0.0), 1.0, 16).unwrap();
    assert!((st.energy + 1.005).abs() < 1e-12);
    assert!(st.m.m1[2] > 0.0 && st.m.m2[2] > 0.0);
}

#[test]
fn state_b_is_a_local_minimum_at_s1() {
    let up = [0.0, 0.0, 1.0];
    let near_down = meanfield_core::vec3::normalize([0.02, 0.0, -1.0]).unwrap();
    let st = minimize(&inter(0.0), 1.0, MagPair::new(up, near_down), DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert!((st.energy + 0.995).abs() < 1e-12);
    assert!(st.residual < DEFAULT_TOL);
}

#[test]
fn midpoint_matches_sector_ed() {
    let spec = inter(0.0);
    let st = global_minimize(&spec, 0.5, 16).unwrap();
    assert!(st.m.m1[2] > 0.0 && st.m.m2[2] < 0.0, "before the transition the weak cluster points down");
    // N = 200 alone sits about 0.024 away; the residue is a clean 1/N term.
    let m2z = |n: usize| ed_solve(&build_dense_sector_hamiltonian(&spec, 0.5, n).unwrap(), 2).unwrap().m2z;
    let (a, b) = (m2z(200), m2z(400));
    assert!((a - st.m.m2[2]).abs() < 5e-2);
    let extrapolated = 2.0 * b - a;
    assert!((extrapolated - st.m.m2[2]).abs() < 2e-2, "ED {extrapolated} vs classical {}", st.m.m2[2]);
}

#[test]
fn non_stoquastic_midpoint_is_stationary() {
    let st = global_minimize(&inter(-4.0), 0.5, 16).unwrap();
    assert!(st.residual < 1e-8);
}

#[test]
fn no_hysteresis_inside_the_window() {
    let grid = linspace(0.0, 1.0, 201);
    let spec = inter(-4.0);
    let f = sweep(&spec, &grid, Direction::Forward).unwrap().ascending();
    let b = sweep(&spec, &grid, Direction::Backward).unwrap().ascending();
    for (x, y) in f.iter().zip(&b) {
        let d = meanfield_core::vec3::max_abs_diff(x.m.m1, y.m.m1)
            .max(meanfield_core::vec3::max_abs_diff(x.m.m2, y.m.m2));
        assert!(d < 1e-6, "branches differ by {d} at s = {}", x.s);
    }
}

#[test]
fn forward_sweep_overshoots_the_crossing() {
    let grid = linspace(0.0, 1.0, 201);
    let spec = inter(0.0);
    let report = detect_transition(&spec, &grid, 0.5).unwrap();
    let s_star = report.s_star.unwrap();
    let f = sweep(&spec, &grid, Direction::Forward).unwrap();
    let b = sweep(&spec, &grid, Direction::Backward).unwrap().ascending();
    let past = f.states.iter().find(|st| st.s > s_star + 0.02).unwrap();
    assert!(past.m.m2[2] < 0.0, "forward branch keeps m2z < 0 past s*");
    let before = b.iter().rev().find(|st| st.s < s_star - 0.02).unwrap();
    assert!(before.m.m2[2] > 0.0, "backward branch keeps m2z > 0 before s*");
    assert_eq!(f.states.first().unwrap().s, 0.0);
    assert!(f.states.windows(2).all(|w| w[1].s > w[0].s));
}

#[test]
fn single_point_grid() {
    let r = sweep(&inter(0.0), &[0.3], Direction::Backward).unwrap();
    assert_eq!(r.states.len(), 1);
    assert_eq!(r.states[0].s, 0.3);
}

#[test]
fn transition_verdicts() {
    let grid = linspace(0.0, 1.0, 201);
    let r = detect_transition(&inter(0.0), &grid, 0.5).unwrap();
    assert!(r.found && r.jump_m2z > 0.5);
    let s = r.s_star.unwrap();
    assert!((0.0..=1.0).contains(&s));
    assert!(!detect_transition(&inter(-4.0), &grid, 0.5).unwrap().found);
    for xi in [-8.0, -4.0, 4.0, 8.0] {
        let spec = ModelSpec::dense(Placement::Total.catalyst(xi));
        assert!(detect_transition(&spec, &grid, 0.5).unwrap().found, "total catalyst xi = {xi}");
    }
}
