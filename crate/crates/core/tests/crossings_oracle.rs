mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use spikegap::crossings::*;
use spikegap::logdomain::ln_choose;
use spikegap::model::{build_hamiltonian, critical_point, AdiabaticPoint, CostModel, SpikeParams};
use spikegap::spectrum::level_gap;

fn binom(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Rational part of the closed-form amplitude: `sum_j (-1/u)^j C(t, j) C(n - t, k - j)`.
fn alternating_sum(n: i64, t: i64, k: i64, u: &BigRational) -> BigRational {
    let c = u.recip();
    let mut acc = BigRational::zero();
    let mut power = BigRational::one();
    for j in 0..=t {
        let term = BigRational::from_integer(binom(t, j) * binom(n - t, k - j)) * &power;
        acc = if j % 2 == 0 { acc + term } else { acc - term };
        power = &power * &c;
    }
    acc
}

/// `u^k` times the rational part: the weighted sequence up to a `k`-independent factor.
fn weighted(n: i64, t: i64, k: i64, u: &BigRational) -> BigRational {
    if k < 0 || k > n {
        return BigRational::zero();
    }
    let mut uk = BigRational::one();
    for _ in 0..k {
        uk = &uk * u;
    }
    uk * alternating_sum(n, t, k, u)
}

fn ln_abs(x: &BigRational) -> f64 {
    let (num, den) = (x.numer().abs(), x.denom().clone());
    let shift = num.bits().max(den.bits()) as i64 - 900;
    let shift = shift.max(0) as usize;
    let (a, b) = (num >> shift, den >> shift);
    a.to_f64().unwrap().ln() - b.to_f64().unwrap().ln()
}

/// `s` at which `tan^2(theta/2) = num/den`.
fn s_for_tan_sq(num: i64, den: i64) -> f64 {
    let u = num as f64 / den as f64;
    let tau = u.sqrt();
    let tan_theta = 2.0 * tau / (1.0 - u);
    1.0 / (1.0 + tan_theta)
}

#[test]
fn exact_recurrence_holds_in_rationals() {
    for (num, den) in [(1, 3), (1, 4), (2, 5)] {
        let u = BigRational::new(BigInt::from(num), BigInt::from(den));
        for n in 1..=40i64 {
            for t in 0..=5.min(n - 1) {
                let lhs: Vec<BigRational> = (0..=n + 1).map(|k| weighted(n + 1, t + 1, k, &u)).collect();
                let rhs: Vec<BigRational> = (0..=n + 1).map(|k| weighted(n, t, k, &u) - weighted(n, t, k - 1, &u)).collect();
                let r = (0..=n as usize + 1).find(|&k| !rhs[k].is_zero()).unwrap();
                let lambda = &lhs[r] / &rhs[r];
                for k in 0..=n as usize + 1 {
                    assert_eq!(lhs[k], &lambda * &rhs[k], "u={num}/{den} n={n} t={t} k={k}");
                }
            }
        }
    }
}

#[test]
fn recurrence_check_is_tight() {
    for s in [critical_point(), 0.2, 0.6] {
        for n in 1..=40usize {
            for t in 0..=5.min(n - 1) {
                for k in 0..=n + 1 {
                    let r = recurrence_check(n, t, k, s).unwrap();
                    assert!(r < 1e-10, "s={s} n={n} t={t} k={k}: {r:e}");
                }
            }
        }
    }
}

#[test]
fn recurrence_base_case_and_boundary() {
    // t = 0: the raised sequence is the first difference of the binomial-weighted ground state.
    let (n, s) = (12, 0.3);
    let ground = weighted_sequence(&spikeless_state(n, 0, s).unwrap()).unwrap();
    let diffs = difference_sequence(&ground);
    assert_eq!(diffs.len(), n + 2);
    assert_eq!(diffs[0], ground[0]);
    assert_eq!(diffs[n + 1], ground[n].neg());
    assert!(recurrence_check(n, 0, 0, s).unwrap() < 1e-12);
}

#[test]
fn eigenvector_matches_exact_closed_form() {
    for (num, den) in [(1i64, 3i64), (1, 4)] {
        let u = BigRational::new(BigInt::from(num), BigInt::from(den));
        let s = s_for_tan_sq(num, den);
        let ln_u = (num as f64 / den as f64).ln();
        let ln_cos_half_sq = (1.0 / (1.0 + num as f64 / den as f64)).ln();
        for n in [8usize, 40, 120, 200] {
            for t in 0..=6usize {
                let state = spikeless_state(n, t, s).unwrap();
                for k in 0..=n {
                    let exact = alternating_sum(n as i64, t as i64, k as i64, &u);
                    if exact.is_zero() {
                        continue;
                    }
                    let ln_mag = 0.5 * (ln_choose(n, t as i64) - ln_choose(n, k as i64))
                        + 0.5 * (t + k) as f64 * ln_u
                        + 0.5 * n as f64 * ln_cos_half_sq
                        + ln_abs(&exact);
                    if ln_mag < -200.0 * 10f64.ln() {
                        continue;
                    }
                    let a = state.amplitudes[k];
                    let sign = if exact.is_positive() { 1 } else { -1 };
                    assert_eq!(a.sign, sign, "n={n} t={t} k={k}");
                    assert!((a.log_mag - ln_mag).abs() < 1e-8 * ln_mag.abs().max(1.0), "n={n} t={t} k={k}: {} vs {ln_mag}", a.log_mag);
                }
            }
        }
    }
}

#[test]
fn float_closed_form_agrees_at_small_size() {
    for t in 0..=4 {
        let state = spikeless_state(30, t, 0.45).unwrap();
        for k in 0..=30 {
            let cf = closed_form_amplitude(30, t, k as i64, 0.45).unwrap().to_f64();
            assert!((cf - state.amplitudes[k].to_f64()).abs() < 1e-10);
        }
    }
    assert!(closed_form_amplitude(30, 2, -1, 0.45).unwrap().is_zero());
    assert!(closed_form_amplitude(30, 2, 31, 0.45).unwrap().is_zero());
}

#[test]
fn ground_level_is_the_product_state() {
    let (n, s) = (64, critical_point());
    let point = AdiabaticPoint::new(s).unwrap();
    let p = (1.0 - point.cos_theta) / 2.0;
    let state = spikeless_state(n, 0, s).unwrap();
    for k in 0..=n {
        let ln_expected = 0.5 * (ln_choose(n, k as i64) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln());
        assert_eq!(state.amplitudes[k].sign, 1);
        assert!((state.amplitudes[k].log_mag - ln_expected).abs() < 1e-10);
    }
}

#[test]
fn first_level_vanishes_at_quarter_filling() {
    let n = 400;
    let state = spikeless_state(n, 1, critical_point()).unwrap();
    let dense: Vec<f64> = state.amplitudes.iter().map(|a| a.to_f64()).collect();
    let scale = dense.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(dense[n / 4].abs() < 1e-12 * scale);
    for k in 0..=n {
        if 4 * k < n {
            assert_eq!(state.amplitudes[k].sign, 1);
        } else if 4 * k > n {
            assert_eq!(state.amplitudes[k].sign, -1);
        }
    }
}

#[test]
fn matches_dense_eigenvector() {
    let (n, t, s) = (10, 3, 0.2);
    let op = build_hamiltonian(&CostModel::custom((0..=n).map(|k| k as f64).collect(), 1.0).unwrap(), &AdiabaticPoint::new(s).unwrap());
    let (values, vectors) = common::dense_eigen(&common::dense_of(&op.diag, &op.offdiag));
    assert!((values[t] - (t as f64 - n as f64 / 2.0)).abs() < 1e-10);
    let state = spikeless_state(n, t, s).unwrap();
    let ours: Vec<f64> = state.amplitudes.iter().map(|a| a.to_f64()).collect();
    let theirs: Vec<f64> = (0..=n).map(|k| vectors[t][k]).collect();
    let sign = if ours[0] * theirs[0] > 0.0 { 1.0 } else { -1.0 };
    for k in 0..=n {
        assert!((ours[k] - sign * theirs[k]).abs() < 1e-9);
    }
}

#[test]
fn node_count_equals_level() {
    for n in [40usize, 400, 2000] {
        for t in 0..=8usize {
            for s in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
                assert_eq!(spikeless_state(n, t, s).unwrap().node_count(), t, "n={n} t={t} s={s}");
            }
        }
    }
}

#[test]
fn crossing_points_are_ordered() {
    for n in [200usize, 1000, 10000] {
        let first: Vec<f64> = (1..=5).map(|t| node_crossing_s(n, t, 1).unwrap()).collect();
        assert!(first.windows(2).all(|w| w[1] < w[0]), "n={n}: {first:?}");
        assert!((first[0] - critical_point()).abs() < 1e-6);
        for t in 2..=5 {
            let by_node: Vec<f64> = (1..=t).map(|i| node_crossing_s(n, t, i).unwrap()).collect();
            assert!(by_node.windows(2).all(|w| w[1] > w[0]), "n={n} t={t}: {by_node:?}");
        }
    }
    assert!(node_crossing_s(10000, 2, 1).unwrap() < critical_point());
}

#[test]
fn ordering_theorem_holds() {
    let check = ordering_theorem_check(1000, 5).unwrap();
    assert!(check.holds(), "{check:?}");
    assert_eq!(check.s_values.len(), 5);
}

#[test]
fn spikeless_spacings_are_flat() {
    let cost = CostModel::Spike(SpikeParams::width_one(400, 1.0).unwrap()).spikeless();
    for t in 1..=5 {
        for i in 0..=20 {
            let s = 0.05 + 0.9 * i as f64 / 20.0;
            let g = level_gap(&cost, s, t, 53).unwrap().value;
            assert!((g - 1.0).abs() < 1e-9, "t={t} s={s}: {g}");
        }
    }
}

#[test]
fn crossing_gaps_shrink_with_size() {
    let gaps: Vec<f64> = [2000usize, 4000, 8000]
        .iter()
        .map(|&n| {
            let p = predict_crossing(n, 2, 1).unwrap();
            let v = verify_crossing(n, 1.0, &p).unwrap();
            assert!((v.verified_s.unwrap() - p.s_t_i).abs() < 1e-3);
            assert!(v.dip_ratio().unwrap() < 0.1);
            v.verified_gap.unwrap()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    let slope = (gaps[2] / gaps[0]).ln() / 4f64.ln();
    assert!(slope < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn states_are_normalised(n in 4usize..300, t in 0usize..6, s in 0.05f64..0.95) {
        let t = t.min(n);
        let st = spikeless_state(n, t, s).unwrap();
        let norm: f64 = st.amplitudes.iter().map(|a| (2.0 * a.log_mag).exp()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert_eq!(st.amplitudes[0].sign, 1);
    }
}
