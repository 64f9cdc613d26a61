use proptest::prelude::*;
use rmoment::special_functions::*;

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn matches_integral_definition_on_grid() {
    let mut worst: f64 = 0.0;
    for nu in 0..20u32 {
        for &z in &logspace(1e-2, 1e3, 20) {
            let k = bessel_k(nu, z);
            let q = bessel_k_integral(nu, z);
            match (k, q) {
                (Ok(k), Ok(q)) => {
                    if q > 1e-300 {
                        worst = worst.max((k / q - 1.0).abs());
                    }
                }
                (k, q) => panic!("nu={nu} z={z}: {k:?} vs {q:?}"),
            }
        }
    }
    assert!(worst < 1e-12, "worst relative deviation {worst:e}");
}

#[test]
fn scaled_matches_integral_at_large_argument() {
    // K_2(50) and values whose unscaled form underflows
    let k = bessel_k(2, 50.0).unwrap();
    let q = bessel_k_integral(2, 50.0).unwrap();
    assert!((k / q - 1.0).abs() < 1e-12);
    let s = bessel_k_scaled(3, 1e4).unwrap();
    // e^z K_3(z) ~ sqrt(pi/(2z)) (1 + 35/(8z) + ...)
    let asym = (std::f64::consts::PI / 2e4).sqrt() * (1.0 + 35.0 / 8e4 + 945.0 / 128.0 / 1e8);
    assert!((s / asym - 1.0).abs() < 1e-10);
}

#[test]
fn k0_at_one_from_integral() {
    let q = bessel_k_integral(0, 1.0).unwrap();
    assert!((bessel_k(0, 1.0).unwrap() - q).abs() < 1e-12);
}

#[test]
fn recurrence_example() {
    let r = bessel_k(3, 2.0).unwrap() - bessel_k(1, 2.0).unwrap() - 2.0 * bessel_k(2, 2.0).unwrap();
    assert!(r.abs() / bessel_k(3, 2.0).unwrap() < 1e-13);
}

#[test]
fn recurrence_residual_full_range() {
    for &z in &logspace(1e-2, 1e3, 40) {
        let s = match bessel_k_scaled_seq(NU_MAX, z) {
            Ok(s) => s,
            Err(_) => bessel_k_scaled_seq(60, z).unwrap(),
        };
        for nu in 1..s.len() - 1 {
            let r = (s[nu + 1] - s[nu - 1] - 2.0 * nu as f64 / z * s[nu]).abs() / s[nu + 1];
            assert!(r < 1e-13, "nu={nu} z={z} r={r:e}");
        }
    }
}

#[test]
fn overflow_is_reported() {
    assert!(matches!(bessel_k(128, 1e-2), Err(rmoment::Error::Overflow(_))));
}

#[test]
fn g_bounds_at_unit_temperature() {
    let g = g_ratio(1.0).unwrap();
    assert!(3.5 < g && g < 4.4, "G(1) = {g}");
}

#[test]
fn g_nonrelativistic_limit() {
    let z = 1e4;
    let g = g_ratio(z).unwrap();
    assert!((g - 1.0 - 2.5 / z).abs() < 1e-3);
}

#[test]
fn g_minus_theta_increasing() {
    let thetas = logspace(1e-3, 1e3, 400);
    let vals: Vec<f64> = thetas.iter().map(|&t| g_ratio(1.0 / t).unwrap() - t).collect();
    for w in vals.windows(2) {
        assert!(w[1] > w[0]);
    }
}

#[test]
fn dg_dzeta_matches_differences() {
    for z in [0.1, 1.0, 7.0, 80.0] {
        let h = 1e-5 * z;
        let fd = (g_ratio(z + h).unwrap() - g_ratio(z - h).unwrap()) / (2.0 * h);
        assert!((g_ratio_dzeta(z).unwrap() - fd).abs() < 1e-7 * fd.abs().max(1.0));
        // log-derivative, so the steep e^{-z} decay does not dominate the difference
        let fd = (bessel_k(2, z + h).unwrap().ln() - bessel_k(2, z - h).unwrap().ln()) / (2.0 * h);
        let d = bessel_k_dzeta(2, z).unwrap() / bessel_k(2, z).unwrap();
        assert!((d - fd).abs() < 1e-7 * fd.abs(), "z={z}: {d} vs {fd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_and_decreasing(nu in 0u32..30, lz in -2.0f64..3.0) {
        let z = 10f64.powf(lz);
        // scaled values so large z does not underflow; e^{0.01z} restores the ratio
        let a = bessel_k_scaled(nu, z).unwrap();
        let b = bessel_k_scaled(nu, z * 1.01).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(b.ln() - 0.01 * z < a.ln());
    }

    #[test]
    fn increasing_in_order(nu in 0u32..30, lz in -2.0f64..3.0) {
        let z = 10f64.powf(lz);
        prop_assert!(bessel_k_scaled(nu + 1, z).unwrap() > bessel_k_scaled(nu, z).unwrap());
    }
}
