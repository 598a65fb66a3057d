mod common;

use common::{dense_full, sparse_full, spectrum};
use meanfield_core::classical::global_minimize;
use meanfield_core::ed::{
    build_dense_sector_hamiltonian, build_sparse_full_hamiltonian, ed_solve, JACOBI_MAX_DIM,
};
use meanfield_core::golden::golden_section_min;
use meanfield_core::linalg::symmetric_eigen;
use meanfield_core::spinwave::gaps_at;
use meanfield_core::{CatalystConfig, ModelSpec, Placement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sector_levels_appear_in_the_full_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let s = rng.gen_range(0.0..1.0);
        let spec = ModelSpec::dense(CatalystConfig::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-8.0..8.0),
        ));
        let full = spectrum(&dense_full(&spec, s, 4));
        let sector = build_dense_sector_hamiltonian(&spec, s, 4).unwrap();
        let levels = spectrum(&(0..9).map(|i| (0..9).map(|j| sector.h.get(i, j)).collect()).collect());
        for e in levels {
            let d = full.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-10, "sector level {e} missing from the full spectrum (nearest {d})");
        }
        // The ground state lies in the maximal-spin sector.
        assert!((full[0] - ed_solve(&sector, 2).unwrap().energies[0]).abs() < 1e-10);
    }
}

#[test]
fn sparse_builder_matches_operator_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [2, 4] {
        for _ in 0..3 {
            let s = rng.gen_range(0.0..1.0);
            let spec = ModelSpec::sparse(CatalystConfig::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-8.0..8.0),
            ));
            let want = sparse_full(&spec, s, n);
            let got = build_sparse_full_hamiltonian(&spec, s, n).unwrap();
            for (i, row) in want.iter().enumerate() {
                for (j, &w) in row.iter().enumerate() {
                    assert!((got.h.get(i, j) - w).abs() < 1e-12, "N={n} entry ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn lanczos_path_matches_jacobi() {
    // (N/2+1)² = 225 > JACOBI_MAX_DIM, so ed_solve takes the Lanczos branch.
    let spec = ModelSpec::dense(Placement::Intercluster.catalyst(-3.0));
    let p = build_dense_sector_hamiltonian(&spec, 0.45, 28).unwrap();
    assert!(p.h.n > JACOBI_MAX_DIM);
    let lz = ed_solve(&p, 4).unwrap();
    let dense = symmetric_eigen(&p.h.to_dense(), p.h.n);
    for k in 0..4 {
        assert!((lz.energies[k] - dense.values[k]).abs() < 1e-9);
    }
}

#[test]
fn weak_cluster_magnetization_matches_classical() {
    let spec = ModelSpec::dense(Placement::Intercluster.catalyst(0.0));
    let cl = global_minimize(&spec, 0.2, 16).unwrap();
    let ed = ed_solve(&build_dense_sector_hamiltonian(&spec, 0.2, 100).unwrap(), 2).unwrap();
    assert!((ed.m2z - cl.m.m2[2]).abs() < 5e-2);
    assert!(ed.m1z.abs() <= 1.0 && ed.m2z.abs() <= 1.0);
    assert!(ed.energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ground_energy_offset_is_size_independent() {
    // E0 − N·h_classical tends to a zero-point constant.
    let spec = ModelSpec::dense(Placement::Intercluster.catalyst(-4.0));
    let h = global_minimize(&spec, 0.3, 16).unwrap().energy;
    let c: Vec<f64> = [40, 80, 160, 400]
        .iter()
        .map(|&n| {
            let ed = ed_solve(&build_dense_sector_hamiltonian(&spec, 0.3, n).unwrap(), 2).unwrap();
            assert!(ed.gap > 0.0);
            ed.energies[0] - n as f64 * h
        })
        .collect();
    let spread = c.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - c.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread < 1e-3, "offsets {c:?}");
}

#[test]
fn ed_gap_near_spin_wave_gap() {
    let spec = ModelSpec::dense(Placement::Intercluster.catalyst(-4.0));
    let sw = gaps_at(&spec, &global_minimize(&spec, 0.3, 16).unwrap()).unwrap().delta1;
    let ed = ed_solve(&build_dense_sector_hamiltonian(&spec, 0.3, 400).unwrap(), 2).unwrap();
    assert!((ed.gap - sw).abs() < 5e-2, "ED {} vs spin wave {sw}", ed.gap);
}

#[test]
fn transition_gap_shrinks_with_size() {
    let spec = ModelSpec::dense(Placement::Intercluster.catalyst(0.0));
    let window: Vec<f64> = (0..=40).map(|i| 0.6 + 0.3 * i as f64 / 40.0).collect();
    let min_gap = |n: usize| -> f64 {
        let gap = |s: f64| Ok::<_, meanfield_core::Error>(ed_solve(&build_dense_sector_hamiltonian(&spec, s, n)?, 2)?.gap);
        let (i, _) = window
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, gap(s).unwrap()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        golden_section_min(gap, window[i.saturating_sub(1)], window[(i + 1).min(40)], 1e-6).unwrap().1
    };
    let g: Vec<f64> = [8, 16, 24].iter().map(|&n| min_gap(n)).collect();
    assert!(g[0] > g[1] && g[1] > g[2] && g[2] > 0.0, "{g:?}");
}
