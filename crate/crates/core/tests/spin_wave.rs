use meanfield_core::classical::global_minimize;
use meanfield_core::continuation::linspace;
use meanfield_core::error::Error;
use meanfield_core::spinwave::{
    eta_product, excitation_gaps, fluctuation_matrix, fluctuation_matrix_in, gap_profile, gaps_at,
    local_frame, min_gap, optimize_catalyst, symplectic_product, frame_is_orthonormal,
};
use meanfield_core::{CatalystConfig, ModelSpec, Placement};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inter(xi: f64) -> ModelSpec {
    ModelSpec::dense(Placement::Intercluster.catalyst(xi))
}

/// Random (spec, s) pairs whose global minimum has a real fluctuation
/// spectrum. Points that land on a marginal minimum are skipped and counted.
fn stable_points(n: usize, seed: u64) -> (Vec<(ModelSpec, f64)>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut out, mut skipped) = (Vec::new(), 0);
    while out.len() < n {
        let spec = ModelSpec::dense(CatalystConfig::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-10.0..10.0),
        ));
        let s = rng.gen_range(0.0..1.0);
        let st = global_minimize(&spec, s, 16).unwrap();
        match gaps_at(&spec, &st) {
            Ok(_) => out.push((spec, s)),
            Err(Error::Instability { .. } | Error::DegenerateMode(_)) => skipped += 1,
            Err(e) => panic!("unexpected error at s = {s}: {e}"),
        }
    }
    (out, skipped)
}

#[test]
fn spectrum_is_real_and_paired_at_random_minima() {
    let (points, skipped) = stable_points(200, 7);
    assert!(skipped <= 10, "{skipped} marginal points out of {}", 200 + skipped);
    for (spec, s) in points {
        let st = global_minimize(&spec, s, 16).unwrap();
        let f = fluctuation_matrix(&spec, &st).unwrap();
        let g = excitation_gaps(&f).unwrap();
        let mut re: Vec<f64> = g.spectrum.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!(g.spectrum.iter().all(|z| z.im.abs() < 1e-8));
        assert!((re[0] + re[3]).abs() < 1e-8 && (re[1] + re[2]).abs() < 1e-8);
        assert!(g.delta1 <= g.delta2 && g.delta1 > 0.0);
        for a in 0..2 {
            for b in 0..2 {
                assert!((f.z_plus[a][b] - f.z_plus[b][a].conj()).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn eigenvectors_are_pseudo_orthonormal() {
    let (points, _) = stable_points(60, 11);
    for (spec, s) in points {
        let g = gaps_at(&spec, &global_minimize(&spec, s, 16).unwrap()).unwrap();
        let [p, q] = &g.eigvecs;
        assert!((eta_product(p, p) - C64::new(1.0, 0.0)).norm() < 1e-8);
        assert!((eta_product(q, q) - C64::new(1.0, 0.0)).norm() < 1e-8);
        assert!(eta_product(p, q).norm() < 1e-8);
        for (a, b) in [(p, q), (q, p), (p, p), (q, q)] {
            assert!(symplectic_product(a, b).norm() < 1e-8);
        }
    }
}

#[test]
fn mode_energies_ignore_the_frame_phase() {
    let (points, _) = stable_points(20, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (spec, s) in points {
        let st = global_minimize(&spec, s, 16).unwrap();
        let base = gaps_at(&spec, &st).unwrap();
        let frames = [local_frame(st.m.m1).unwrap(), local_frame(st.m.m2).unwrap()];
        for _ in 0..10 {
            let (a, b) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
            let rotated = [frames[0].rotated(a), frames[1].rotated(b)];
            assert!(rotated.iter().all(|f| frame_is_orthonormal(f, 1e-12)));
            let g = excitation_gaps(&fluctuation_matrix_in(&spec, &st, rotated).unwrap()).unwrap();
            assert!((g.eps[0] - base.eps[0]).abs() < 1e-9 && (g.eps[1] - base.eps[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn endpoint_gaps() {
    for xi in [-10.0, -4.0, 0.0, 3.0] {
        let spec = inter(xi);
        let g = gaps_at(&spec, &global_minimize(&spec, 0.0, 16).unwrap()).unwrap();
        assert!((g.delta1 - 2.0).abs() < 1e-9 && (g.delta2 - 2.0).abs() < 1e-9);
    }
    let spec = inter(0.0);
    let g = gaps_at(&spec, &global_minimize(&spec, 1.0, 16).unwrap()).unwrap();
    assert!((g.delta1 - 2.02).abs() < 1e-9 && (g.delta2 - 5.0).abs() < 1e-9);
}

#[test]
fn gaps_continuous_inside_the_window_and_jump_outside() {
    let grid = linspace(0.0, 1.0, 401);
    let smooth = gap_profile(&inter(-4.0), &grid).unwrap();
    assert!(smooth.iter().all(|p| p.gaps.is_some()));
    let max_step = smooth
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].gaps.unwrap(), w[1].gaps.unwrap());
            (a.0 - b.0).abs().max((a.1 - b.1).abs())
        })
        .fold(0.0, f64::max);
    assert!(max_step < 0.05, "max step {max_step}");

    let rough = gap_profile(&inter(0.0), &grid).unwrap();
    let jump = rough
        .windows(2)
        .filter_map(|w| Some((w[0].gaps?.1 - w[1].gaps?.1).abs()))
        .fold(0.0, f64::max);
    assert!(jump > 0.1, "largest delta2 step {jump}");
}

#[test]
fn minimum_gap_peaks_inside_the_window() {
    let grid = linspace(0.0, 1.0, 201);
    let g = |xi: f64| min_gap(&inter(xi), &grid).unwrap();
    let mid = g(-4.0);
    assert!(mid.delta1_min > 0.0);
    assert!(mid.warning.is_none());
    assert!(g(-3.0).delta1_min < mid.delta1_min);
    assert!(g(-5.0).delta1_min < mid.delta1_min);
}

#[test]
fn degenerate_inputs() {
    let one = min_gap(&inter(-4.0), &[0.4]).unwrap();
    assert_eq!(one.s_min, 0.4);
    let grid = linspace(0.0, 1.0, 101);
    let opt = optimize_catalyst(inter, (-4.0, -4.0), 1e-3, &grid).unwrap();
    assert_eq!(opt.xi_star, -4.0);
    match optimize_catalyst(inter, (-1.0, 0.0), 0.1, &grid) {
        Err(Error::TransitionInRange { xi }) => assert!((-1.0..=0.0).contains(&xi)),
        other => panic!("expected a range error, got {other:?}"),
    }
}
