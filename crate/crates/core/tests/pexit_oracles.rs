mod common;

use pldpch::hadamard::HadamardOrder;
use pldpch::par::Sequential;
use pldpch::pexit::*;
use pldpch::protograph::{validate, Constraints, Protomatrix, PunctureSpec};
use proptest::prelude::*;

/// MI of a consistent Gaussian LLR `N(s^2/2, s^2)` by numerical integration.
fn j_numeric(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let mu = s * s / 2.0;
    let n = 20_000;
    let (lo, hi) = (mu - 12.0 * s, mu + 12.0 * s);
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let x = lo + k as f64 * h;
        let pdf = (-(x - mu) * (x - mu) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let f = pdf * (1.0 + (-x).exp()).log2().min(1e6);
        acc += if k == 0 || k == n { 0.5 * f } else { f };
    }
    1.0 - acc * h
}

fn example() -> Protomatrix {
    Protomatrix::from_rows(&[[2u32, 0, 2, 2], [0, 2, 2, 2], [3, 2, 0, 1]]).unwrap()
}

#[test]
fn j_tracks_the_gaussian_integral() {
    let mut worst = 0.0f64;
    for k in 1..=80 {
        let s = k as f64 * 0.1;
        worst = worst.max((j_fun(s).unwrap() - j_numeric(s)).abs());
    }
    assert!(worst < 5e-3, "worst deviation {worst}");
}

#[test]
fn j_round_trip_on_mid_range() {
    // The published pair drifts apart below sigma ~0.04 (the cubic piece
    // dips negative) and above ~5.5 (the inverse's log piece); the full
    // (0, 8] check lives in the acceptance target.
    let mut worst = 0.0f64;
    for k in 40..=5500 {
        let s = k as f64 * 1e-3;
        let i = j_fun(s).unwrap();
        if i >= 1.0 {
            continue;
        }
        worst = worst.max((j_inv(i).unwrap() - s).abs());
    }
    assert!(worst < 0.02, "worst round trip error {worst}");
}

#[test]
fn j_published_pieces() {
    // Values of the two polynomial pieces at and around their breakpoints.
    let s = 1.6363f64;
    let low = -0.0421061 * s.powi(3) + 0.209252 * s * s - 0.00640081 * s;
    assert!((j_fun(s).unwrap() - low).abs() < 1e-15);
    let s = 5.0f64;
    let high = 1.0 - (0.00181491 * s.powi(3) - 0.142675 * s * s - 0.0822054 * s + 0.0549608).exp();
    assert!((j_fun(s).unwrap() - high).abs() < 1e-15);
    assert_eq!(j_fun(10.0).unwrap(), 1.0);
    let i = 0.2f64;
    assert!((j_inv(i).unwrap() - (1.09542 * i * i + 0.214217 * i + 2.33727 * i.sqrt())).abs() < 1e-15);
    let i = 0.9f64;
    assert!((j_inv(i).unwrap() - (-0.706692 * (0.386013 * (1.0 - i)).ln() + 1.75017 * i)).abs() < 1e-15);
}

#[test]
fn monte_carlo_extremes() {
    let o4 = HadamardOrder::new(4).unwrap();
    let full = hadamard_mi_mc(&[1.0; 6], 0.5, o4, 0, 10_000, 3).unwrap();
    assert!(full.iter().all(|&x| x >= 1.0 - 1e-3), "{full:?}");
    let none = hadamard_mi_mc(&[0.0; 6], 1e-6, o4, 0, 10_000, 3).unwrap();
    assert!(none.iter().all(|&x| x < 1e-3), "{none:?}");
    let o5 = HadamardOrder::new(5).unwrap();
    let full = hadamard_mi_mc(&[1.0; 7], 0.5, o5, 2, 10_000, 3).unwrap();
    assert!(full.iter().all(|&x| x >= 1.0 - 1e-3), "{full:?}");
}

#[test]
fn monte_carlo_is_seed_stable_at_mid_range() {
    let o4 = HadamardOrder::new(4).unwrap();
    let sigma = sigma_lch(4.0 / 81.0, -1.42);
    let runs: Vec<Vec<f64>> = (0..6).map(|s| hadamard_mi_mc(&[0.5; 6], sigma, o4, 0, 10_000, 100 + s).unwrap()).collect();
    for k in 0..6 {
        let mean = runs.iter().map(|r| r[k]).sum::<f64>() / runs.len() as f64;
        for r in &runs {
            assert!((r[k] - mean).abs() < 0.01, "position {k}: {} vs mean {mean}", r[k]);
        }
    }
    assert_eq!(hadamard_mi_mc(&[0.5; 6], sigma, o4, 0, 2500, 7).unwrap(), hadamard_mi_mc(&[0.5; 6], sigma, o4, 0, 2500, 7).unwrap());
}

#[test]
fn monte_carlo_grows_with_a_priori_information() {
    let o4 = HadamardOrder::new(4).unwrap();
    let sigma = sigma_lch(4.0 / 81.0, -1.42);
    let mut last = -1.0;
    for ia in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let v = hadamard_mi_mc(&[ia; 6], sigma, o4, 0, 10_000, 1).unwrap();
        let mean = v.iter().sum::<f64>() / 6.0;
        assert!(mean > last, "I_ah {ia}: {mean} after {last}");
        last = mean;
    }
}

#[test]
fn expansion_follows_the_worked_example() {
    let b = example();
    let mut ev = MiMatrix::zeros(3, 4);
    for i in 0..3 {
        for j in 0..4 {
            if b.get(i, j) > 0 {
                ev.set(i, j, 0.1 * (i as f64 + 1.0) + 0.01 * j as f64);
            }
        }
    }
    let ah = expand_to_ah(&b, &ev).unwrap();
    let e = |i: usize, j: usize| ev.get(i, j);
    assert_eq!(ah.row(0), &[e(0, 0), e(0, 0), e(0, 2), e(0, 2), e(0, 3), e(0, 3)]);
    assert_eq!(ah.row(1), &[e(1, 1), e(1, 1), e(1, 2), e(1, 2), e(1, 3), e(1, 3)]);
    let e = |j: usize| ev.get(2, j);
    assert_eq!(ah.row(2), &[e(0), e(0), e(0), e(1), e(1), e(3)]);
    let mut eh = MiMatrix::zeros(3, 6);
    for i in 0..3 {
        for k in 0..6 {
            eh.set(i, k, (i * 6 + k) as f64 / 20.0);
        }
    }
    let av = contract_to_av(&b, &eh);
    assert!((av.get(2, 0) - (eh.get(2, 0) + eh.get(2, 1) + eh.get(2, 2)) / 3.0).abs() < 1e-15);
    assert!((av.get(2, 1) - (eh.get(2, 3) + eh.get(2, 4)) / 2.0).abs() < 1e-15);
    assert_eq!(av.get(2, 3), eh.get(2, 5));
    assert!((av.get(0, 2) - (eh.get(0, 2) + eh.get(0, 3)) / 2.0).abs() < 1e-15);
    for (i, j) in [(0, 1), (1, 0), (2, 2)] {
        assert_eq!(av.get(i, j), 0.0);
    }
    let zero = vn_update(&b, &MiMatrix::filled(3, 4, 0.3), 0.8, &PunctureSpec::none());
    for i in 0..3 {
        for j in 0..4 {
            assert_eq!(zero.get(i, j) == 0.0, b.get(i, j) == 0);
        }
    }
}

#[test]
fn vn_update_matches_the_formula() {
    let b = example();
    let mut av = MiMatrix::zeros(3, 4);
    for i in 0..3 {
        for j in 0..4 {
            av.set(i, j, 0.05 + 0.07 * (i * 4 + j) as f64);
        }
    }
    let s = 0.9;
    let ev = vn_update(&b, &av, s, &PunctureSpec::none());
    let ji = |x: f64| j_inv(x).unwrap();
    // Column 0: rows 0 (b = 2) and 2 (b = 3).
    let want = j_fun((ji(av.get(2, 0)).powi(2) * 3.0 + ji(av.get(0, 0)).powi(2) + s * s).sqrt()).unwrap();
    assert!((ev.get(0, 0) - want).abs() < 1e-12);
    let want = j_fun((ji(av.get(0, 0)).powi(2) * 2.0 + ji(av.get(2, 0)).powi(2) * 2.0 + s * s).sqrt()).unwrap();
    assert!((ev.get(2, 0) - want).abs() < 1e-12);
    let p = PunctureSpec::new(vec![0], 0);
    let ev = vn_update(&b, &av, s, &p);
    let want = j_fun((ji(av.get(2, 0)).powi(2) * 3.0 + ji(av.get(0, 0)).powi(2)).sqrt()).unwrap();
    assert!((ev.get(0, 0) - want).abs() < 1e-12);
}

#[test]
fn random_protomatrices_meet_constraints() {
    let c = Constraints { m: 7, n: 11, row_weight: 6, min_col_weight: 1, max_col_weight: 9, max_entry: 3 };
    for seed in 0..10_000 {
        let b = random_protomatrix(&c, seed).unwrap();
        assert_eq!(validate(&b, &c), Ok(()), "seed {seed}");
    }
    let c5 = Constraints { m: 6, n: 10, row_weight: 7, min_col_weight: 2, max_col_weight: 10, max_entry: 3 };
    for seed in 0..1000 {
        assert_eq!(validate(&random_protomatrix(&c5, seed).unwrap(), &c5), Ok(()));
    }
    assert_ne!(random_protomatrix(&c, 1).unwrap(), random_protomatrix(&c, 2).unwrap());
}

#[test]
fn trace_is_nondecreasing_and_converges_above_threshold() {
    let b = common::r4();
    let run = pexit_converges(&b, -1.30, &PunctureSpec::none(), &PexitConfig::default(), &Sequential).unwrap();
    assert!(run.converged, "min I_app {:?}", run.trace.last());
    for w in run.trace.windows(2) {
        assert!(w[1] >= w[0] - 0.01, "{} then {}", w[0], w[1]);
    }
}

#[test]
fn no_convergence_at_the_ultimate_limit() {
    let run = pexit_converges(&common::r4(), -1.59, &PunctureSpec::none(), &PexitConfig::default(), &Sequential).unwrap();
    assert!(!run.converged);
    assert_eq!(run.iterations, 300);
}

#[test]
fn threshold_search_walks_the_grid() {
    let cfg = PexitConfig { samples: 500, max_iters: 40, ..PexitConfig::default() };
    let q = ThresholdQuery { start_db: 1.0, step_db: 0.5, ..ThresholdQuery::new(example(), PunctureSpec::none(), cfg) };
    let rep = threshold_search(&q, &Sequential).unwrap();
    let last = rep.steps.last().unwrap();
    assert!(rep.steps[..rep.steps.len() - 1].iter().all(|s| s.converged));
    for (k, s) in rep.steps.iter().enumerate() {
        assert!((s.ebn0_db - (1.0 - 0.5 * k as f64)).abs() < 1e-9);
    }
    match rep.threshold_db {
        Some(t) => assert!(!last.converged || last.ebn0_db - 0.5 <= q.floor_db + 1e-9, "{t}"),
        None => assert!(!rep.steps[0].converged),
    }
    assert_eq!(rep, threshold_search(&q, &Sequential).unwrap());
}

proptest! {
    #[test]
    fn vn_update_is_monotone(entries in proptest::collection::vec(0.0f64..0.999, 12), i in 0usize..3, j in 0usize..4, bump in 0.0f64..0.5, s in 0.0f64..3.0) {
        let b = example();
        let mut av = MiMatrix::zeros(3, 4);
        for (k, &x) in entries.iter().enumerate() {
            av.set(k / 4, k % 4, x);
        }
        let before = vn_update(&b, &av, s, &PunctureSpec::none());
        av.set(i, j, (av.get(i, j) + bump).min(0.999));
        let after = vn_update(&b, &av, s, &PunctureSpec::none());
        for r in 0..3 {
            for c in 0..4 {
                prop_assert!(after.get(r, c) >= before.get(r, c) - 1e-12);
            }
        }
    }

    #[test]
    fn j_inverse_is_monotone(a in 0.0f64..0.999, b in 0.0f64..0.999) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(j_inv(lo).unwrap() <= j_inv(hi).unwrap() + 1e-12);
    }
}
