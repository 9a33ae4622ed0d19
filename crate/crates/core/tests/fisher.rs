use geoflow_core::fisher::{self, Bernoulli, BernoulliSequence, Binomial, Categorical, DiscreteFamily, Estimator, ExponentialFamily, FnFamily};
use geoflow_core::GeoflowError;
use proptest::prelude::*;

fn choose(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn bernoulli_and_binomial_information() {
    let b = fisher::fisher_matrix(&Bernoulli, &[0.3]).unwrap()[(0, 0)];
    assert!((b - 1.0 / (0.3 * 0.7)).abs() < 1e-10);
    assert_eq!(fisher::fisher_matrix(&Bernoulli, &[0.5]).unwrap()[(0, 0)], 4.0);
    let g = fisher::fisher_matrix(&Binomial { n: 4 }, &[0.3]).unwrap()[(0, 0)];
    assert!((g - 19.047619047619047).abs() < 1e-10);
}

#[test]
fn categorical_information_matches_closed_form() {
    // g = diag(1/p_i) + 1/p_k for the first k - 1 probabilities
    let theta = [0.1, 0.2, 0.3];
    let last = 0.4;
    let g = fisher::fisher_matrix(&Categorical { k: 4 }, &theta).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 / theta[i] } else { 0.0 } + 1.0 / last;
            assert!((g[(i, j)] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn finite_difference_fallback_agrees_with_analytic_jacobian() {
    let n = 5u32;
    let fd = FnFamily {
        label: "binomial by formula".into(),
        outcomes: 6,
        bounds: vec![(0.0, 1.0)],
        prob: |t: &[f64]| (0..=n).map(|k| choose(n, k) * t[0].powi(k as i32) * (1.0 - t[0]).powi((n - k) as i32)).collect(),
    };
    for p in [0.2, 0.5, 0.85] {
        let (_, _, analytic) = fisher::derivatives(&fd, &[p]).unwrap();
        assert!(!analytic);
        let a = fisher::fisher_matrix(&Binomial { n }, &[p]).unwrap()[(0, 0)];
        let b = fisher::fisher_matrix(&fd, &[p]).unwrap()[(0, 0)];
        assert!((a / b - 1.0).abs() < 1e-6);
        for m in fisher::score_mean(&fd, &[p]).unwrap() {
            assert!(m.abs() < 1e-6);
        }
    }
}

#[test]
fn single_trial_indicator_attains_the_bound() {
    let est = Estimator::scalar(&[0.0, 1.0]).unwrap();
    for p in [0.1, 0.5, 0.9] {
        let gap = fisher::cramer_rao_gap(&Bernoulli, &est, &[p]).unwrap();
        assert!(gap[(0, 0)].abs() < 1e-12);
    }
}

#[test]
fn first_toss_alone_is_inefficient() {
    // sequence outcomes are bitmasks; bit 0 is the first toss
    let est = Estimator::from_fn(8, |x| vec![(x & 1) as f64]).unwrap();
    let p: f64 = 0.4;
    let gap = fisher::cramer_rao_gap(&BernoulliSequence { n: 3 }, &est, &[p]).unwrap();
    let want = p * (1.0 - p) * (1.0 - 1.0 / 3.0);
    assert!((gap[(0, 0)] - want).abs() < 1e-12);
    // on the binomial sample space the same information is k / 3
    let pooled = Estimator::scalar(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
    let gap = fisher::cramer_rao_gap(&Binomial { n: 3 }, &pooled, &[p]).unwrap();
    assert!(gap[(0, 0)].abs() < 1e-10);
}

#[test]
fn biased_and_flat_estimators_are_rejected() {
    let half = Estimator::scalar(&[0.5, 0.5]).unwrap();
    assert!(matches!(
        fisher::cramer_rao_gap(&Bernoulli, &half, &[0.3]),
        Err(GeoflowError::Bias { .. })
    ));
    assert!(matches!(
        fisher::cramer_rao_gap(&Bernoulli, &half, &[0.5]),
        Err(GeoflowError::NotLocallyUnbiased { .. })
    ));
}

#[test]
fn mle_examples() {
    let binom = Binomial { n: 10 };
    let mut w = vec![0.0; 11];
    w[3] = 1.0;
    let r = fisher::mle(&binom, &w).unwrap();
    assert!((r.theta[0] - 0.3).abs() < 1e-9);
    assert!(!r.boundary);
    assert!(r.stationarity <= 1e-9);

    let r = fisher::mle(&Bernoulli, &[5.0, 0.0]).unwrap();
    assert!(r.boundary);
    assert_eq!(r.theta[0], 0.0);

    let r = fisher::mle(&Bernoulli, &[1.0, 1.0]).unwrap();
    assert!((r.theta[0] - 0.5).abs() < 1e-12);
}

#[test]
fn exponential_family_mle_matches_moments() {
    let fam = ExponentialFamily::new(vec![vec![0.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.5], vec![-1.0, 0.0]]).unwrap();
    let w = [3.0, 1.0, 2.0, 4.0];
    let r = fisher::mle(&fam, &w).unwrap();
    assert!(r.stationarity <= 1e-9);
    let total: f64 = w.iter().sum();
    let p = fam.probabilities(&r.theta);
    for i in 0..2 {
        let model: f64 = p.iter().zip(&fam.stats).map(|(px, s)| px * s[i]).sum();
        let data: f64 = w.iter().zip(&fam.stats).map(|(wx, s)| wx * s[i]).sum::<f64>() / total;
        assert!((model - data).abs() < 1e-9);
    }
}

#[test]
fn record_serializes_with_the_expected_fields() {
    let est = Estimator::scalar(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
    let rec = fisher::fisher_record(&Binomial { n: 4 }, &[0.3], Some(&est)).unwrap();
    let json = serde_json::to_value(&rec).unwrap();
    assert_eq!(json["family"], "binomial-4");
    assert!((json["fisher"][0][0].as_f64().unwrap() - 19.047619047619047).abs() < 1e-10);
    assert!(json["gap_min_eigenvalue"].as_f64().unwrap().abs() < 1e-10);
}

fn random_family(pick: u8, a: f64, b: f64, c: f64) -> (Box<dyn DiscreteFamily>, Vec<f64>) {
    match pick % 5 {
        0 => (Box::new(Bernoulli), vec![a]),
        1 => (Box::new(Binomial { n: 1 + (pick as u32 % 7) }), vec![a]),
        2 => (Box::new(BernoulliSequence { n: 1 + (pick as u32 % 4) }), vec![a]),
        3 => {
            let s = a + b + c;
            (Box::new(Categorical { k: 4 }), vec![a / (s + 0.5), b / (s + 0.5), c / (s + 0.5)])
        }
        _ => (
            Box::new(ExponentialFamily::new(vec![vec![0.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.5]]).unwrap()),
            vec![4.0 * a - 2.0, 4.0 * b - 2.0],
        ),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn score_has_zero_mean(pick in 0u8..40, a in 0.05f64..0.95, b in 0.05f64..0.95, c in 0.05f64..0.95) {
        let (fam, theta) = random_family(pick, a, b, c);
        for m in fisher::score_mean(fam.as_ref(), &theta).unwrap() {
            prop_assert!(m.abs() <= 1e-12);
        }
        let p = fam.probabilities(&theta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fisher_matrix_is_symmetric_psd(pick in 0u8..40, a in 0.05f64..0.95, b in 0.05f64..0.95, c in 0.05f64..0.95) {
        let (fam, theta) = random_family(pick, a, b, c);
        let g = fisher::fisher_matrix(fam.as_ref(), &theta).unwrap();
        prop_assert!((&g - g.transpose()).abs().max() <= 1e-12 * g.abs().max());
        prop_assert!(fisher::min_eigenvalue(&g) >= -1e-12);
    }

    #[test]
    fn entropy_is_additive(
        pa in proptest::collection::vec(0.01f64..1.0, 2..5),
        rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 4),
    ) {
        // H(AB) = H(A) + H_A(B) for a joint table built from p(a) and p(b | a)
        let za: f64 = pa.iter().sum();
        let joint: Vec<Vec<f64>> = pa.iter().zip(&rows).map(|(a, row)| {
            let zr: f64 = row.iter().sum();
            row.iter().map(|b| a / za * b / zr).collect()
        }).collect();
        let flat: Vec<f64> = joint.iter().flatten().copied().collect();
        let marg: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let lhs = fisher::shannon_entropy(&flat);
        let rhs = fisher::shannon_entropy(&marg) + fisher::conditional_entropy(&joint);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}
