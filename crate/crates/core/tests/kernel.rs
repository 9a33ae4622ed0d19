use geoflow_core::kernel::{delta_claim1_lhs, kernel_expected, kernel_remainder};

#[test]
fn delta_integral_has_closed_forms() {
    // Gaussian moments give int 4a^2 x^2 f_a e^{-x^2} = 2 a^{5/2} / (a+1)^{3/2}
    // and int 4a^2 x^4 f_a e^{-x^2} = 3 a^{5/2} / (a+1)^{5/2}.
    for a in [1.0, 10.0, 1e2, 1e3, 1e4] {
        let g = delta_claim1_lhs(|x| (-x * x).exp(), a).unwrap();
        let want = 2.0 * a.powf(2.5) / (a + 1.0).powf(1.5);
        assert!((g / want - 1.0).abs() < 1e-10, "a = {a}");
        let q = delta_claim1_lhs(|x| x * x * (-x * x).exp(), a).unwrap();
        let want = 3.0 * a.powf(2.5) / (a + 1.0).powf(2.5);
        assert!((q / want - 1.0).abs() < 1e-10, "a = {a}");
    }
}

#[test]
fn delta_integral_of_zero_is_zero() {
    assert_eq!(delta_claim1_lhs(|_| 0.0, 1e4).unwrap(), 0.0);
}

#[test]
fn cosine_kernel_values() {
    let k: f64 = 0.1;
    let v = kernel_expected(f64::cos, k).unwrap();
    assert!((v - (-k * k / 4.0).exp()).abs() < 1e-12);
    assert!((v - 0.997503).abs() < 1e-6);
    let rem = kernel_remainder(f64::cos, 1.0, -1.0, k).unwrap();
    assert!((rem / (k.powi(4) / 32.0) - 1.0).abs() < 1e-2);
}

#[test]
fn even_moments_of_the_kernel() {
    // the kernel is a normal density with variance k^2 / 2
    for k in [0.05, 0.4, 2.0] {
        let m2 = kernel_expected(|x| x * x, k).unwrap();
        assert!((m2 / (k * k / 2.0) - 1.0).abs() < 1e-12);
        let rem = kernel_remainder(|x| x.powi(4), 0.0, 0.0, k).unwrap();
        assert!((rem / (0.75 * k.powi(4)) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn remainder_is_fourth_order_for_cosine() {
    let ks = [0.4, 0.2, 0.1, 0.05];
    let r: Vec<f64> = ks.iter().map(|k| kernel_remainder(f64::cos, 1.0, -1.0, *k).unwrap().abs()).collect();
    for w in r.windows(2) {
        assert!(((w[0] / w[1]).log2() - 4.0).abs() < 0.05);
    }
}
