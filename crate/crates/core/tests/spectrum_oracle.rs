mod common;

use common::{dense_eigen, dense_of, dense_symmetric_hamiltonian};
use proptest::prelude::*;
use spikegap::model::{build_hamiltonian, critical_point, AdiabaticPoint, CostModel, SpikeParams, SpikeWidth};
use spikegap::spectrum::{eigenvector, gap, lowest_eigenvalues, sturm_count};

fn spike(n: usize, alpha: f64) -> CostModel {
    CostModel::spike(SpikeParams::width_one(n, alpha).unwrap())
}

#[test]
fn builder_matches_bitstring_projection() {
    for n in [4usize, 8, 12] {
        for s in [0.0, 0.2, critical_point(), 0.8, 1.0] {
            let model = spike(n, 1.0);
            let op = build_hamiltonian(&model, &AdiabaticPoint::new(s).unwrap());
            let p = *model.spike_params().unwrap();
            let dense = dense_symmetric_hamiltonian(n, s, |k| if k == n / 4 { p.height() } else { 0.0 });
            let ours = dense_of(&op.diag, &op.offdiag);
            for i in 0..=n {
                for j in 0..=n {
                    assert!((ours[(i, j)] - dense[(i, j)]).abs() < 1e-12, "n={n} s={s} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn twelve_site_lowest_pair_matches_dense() {
    let op = build_hamiltonian(&spike(12, 1.0), &AdiabaticPoint::new(critical_point()).unwrap());
    let (dense, _) = dense_eigen(&dense_of(&op.diag, &op.offdiag));
    let ours = lowest_eigenvalues(&op, 2, 53).unwrap();
    for i in 0..2 {
        assert!((ours[i] - dense[i]).abs() < 1e-10);
    }
}

#[test]
fn twelve_site_spike_vectors_match_dense() {
    let op = build_hamiltonian(&spike(12, 1.0), &AdiabaticPoint::new(critical_point()).unwrap());
    let (values, vectors) = dense_eigen(&dense_of(&op.diag, &op.offdiag));
    for level in 0..3 {
        let pair = eigenvector(&op, values[level]).unwrap();
        let ours = pair.dense();
        let sign = if ours.iter().zip(&vectors[level]).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in ours.iter().zip(&vectors[level]) {
            assert!((sign * a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn residual_small_at_ten_thousand_sites() {
    let op = build_hamiltonian(&spike(10_000, 1.0), &AdiabaticPoint::new(0.36).unwrap());
    let ev = lowest_eigenvalues(&op, 2, 53).unwrap();
    let norm = op.radius();
    for &lambda in &ev {
        let pair = eigenvector(&op, lambda).unwrap();
        let v = pair.dense();
        let hv = op.apply(&v);
        let res: f64 = hv.iter().zip(&v).map(|(h, x)| (h - lambda * x).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * norm, "residual {res}");
        let total: f64 = pair.vector.iter().map(|a| (2.0 * a.log_mag).exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn unnormalised_gap_scales_by_norm_factor() {
    let s = 0.3;
    let model = spike(64, 0.8);
    let g = gap(&model, s, 53).unwrap().value;
    let point = AdiabaticPoint::new(s).unwrap();
    // Unnormalised operator: (1 - s) (-X) + s (Z-part), i.e. the normalised one times the norm factor.
    let op = build_hamiltonian(&model, &point);
    let scaled = spikegap::model::TridiagonalOperator::new(
        op.diag.iter().map(|d| d * point.norm_factor).collect(),
        op.offdiag.iter().map(|e| e * point.norm_factor).collect(),
    )
    .unwrap();
    let ev = lowest_eigenvalues(&scaled, 2, 53).unwrap();
    assert!(((ev[1] - ev[0]) / g - point.norm_factor).abs() < 1e-12);
}

fn arb_instance() -> impl Strategy<Value = (usize, f64, Option<f64>, f64)> {
    (1usize..=3, 0.0f64..2.0, prop::option::of(0.0f64..0.5), 0.0f64..=1.0).prop_map(|(m, a, b, s)| (4 * m, a, b, s))
}

fn model_of(n: usize, alpha: f64, beta: Option<f64>) -> CostModel {
    let width = beta.map_or(SpikeWidth::WidthOne, SpikeWidth::Exponent);
    CostModel::spike(SpikeParams::new(n, alpha, width).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sturm_count_agrees_with_dense((n, alpha, beta, s) in arb_instance(), probes in prop::collection::vec(-1.0f64..1.0, 20)) {
        let op = build_hamiltonian(&model_of(n, alpha, beta), &AdiabaticPoint::new(s).unwrap());
        let (values, _) = dense_eigen(&dense_of(&op.diag, &op.offdiag));
        let (lo, hi) = op.gershgorin();
        for u in probes {
            let lambda = 0.5 * (lo + hi) + 0.5 * (hi - lo) * u;
            if values.iter().any(|v| (v - lambda).abs() < 1e-9) {
                continue;
            }
            let expect = values.iter().filter(|&&v| v < lambda).count();
            prop_assert_eq!(sturm_count(&op, lambda), expect);
        }
    }

    #[test]
    fn spike_raises_every_level((n, alpha, beta, s) in arb_instance()) {
        let point = AdiabaticPoint::new(s).unwrap();
        let model = model_of(n, alpha, beta);
        let with = lowest_eigenvalues(&build_hamiltonian(&model, &point), n + 1, 53).unwrap();
        let without = lowest_eigenvalues(&build_hamiltonian(&model.spikeless(), &point), n + 1, 53).unwrap();
        for (a, b) in with.iter().zip(&without) {
            prop_assert!(*a >= *b - 1e-12);
        }
    }

    #[test]
    fn spikeless_spectrum_is_equally_spaced(m in 1usize..=50, s in 0.0f64..=1.0) {
        let n = 4 * m;
        let op = build_hamiltonian(&model_of(n, 1.0, None).spikeless(), &AdiabaticPoint::new(s).unwrap());
        let ev = lowest_eigenvalues(&op, n + 1, 53).unwrap();
        for (i, e) in ev.iter().enumerate() {
            prop_assert!((e - (-(n as f64) / 2.0 + i as f64)).abs() <= 1e-10 * n as f64);
        }
    }

    #[test]
    fn offdiagonal_is_stoquastic(m in 1usize..=30, s in 0.001f64..0.999) {
        let op = build_hamiltonian(&model_of(4 * m, 1.0, None), &AdiabaticPoint::new(s).unwrap());
        prop_assert!(op.offdiag.iter().all(|&e| e < 0.0));
    }

    #[test]
    fn angle_is_consistent(s in 0.0f64..=1.0) {
        let p = AdiabaticPoint::new(s).unwrap();
        prop_assert!((p.sin_theta.powi(2) + p.cos_theta.powi(2) - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&p.theta));
    }
}
