use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmoment::frame_kinematics::*;
use rmoment::quadrature::{gauss_legendre, integrate};
use rmoment::special_functions::g_ratio;
use rmoment::Error;

fn random_u(rng: &mut ChaCha8Rng, umax: f64) -> [f64; 3] {
    loop {
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < 1.0 {
            return u.map(|v| v * umax);
        }
    }
}

#[test]
fn tetrad_at_rest_is_identity() {
    let t = tetrad(&[0.0; 3]).unwrap();
    for i in 0..3 {
        for a in 0..4 {
            assert_eq!(t.n[i][a], if a == i + 1 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn tetrad_orthonormality() {
    for (u, tol) in [([0.5, 0.0, 0.0], 1e-14), ([0.3, -0.2, 0.4], 1e-14), ([0.999, 0.0, 0.0], 1e-10)] {
        let t = tetrad(&u).unwrap();
        assert!(t.residual(&four_velocity(&u)) < tol, "u = {u:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let u = random_u(&mut rng, 0.95);
        assert!(tetrad(&u).unwrap().residual(&four_velocity(&u)) < 1e-13);
    }
    assert!(matches!(tetrad(&[1.0, 0.0, 0.0]), Err(Error::Domain(_))));
}

#[test]
fn internal_coordinates_at_rest() {
    let p = [0.3, -0.4, 1.2];
    let (e, y, phi) = p_to_internal(&p, &[0.0; 3]).unwrap();
    let r = (0.09f64 + 0.16 + 1.44).sqrt();
    assert!((e - (1.0 + r * r).sqrt()).abs() < 1e-15);
    assert!((y - 1.2 / r).abs() < 1e-15);
    assert!((phi - (-0.4f64).atan2(0.3)).abs() < 1e-15);
    // zero momentum uses the pole convention
    assert_eq!(p_to_internal(&[0.0; 3], &[0.0; 3]).unwrap(), (1.0, 1.0, 0.0));
}

#[test]
fn round_trip_and_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let u = random_u(&mut rng, 0.9);
        let p = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let (e, y, phi) = p_to_internal(&p, &u).unwrap();
        let p4 = [(1.0 + p.iter().map(|v| v * v).sum::<f64>()).sqrt(), p[0], p[1], p[2]];
        assert!((e - dot(&four_velocity(&u), &p4)).abs() < 1e-12 * e);
        let q = internal_to_p(e, y, phi, &u).unwrap();
        for j in 0..3 {
            assert!((q[j] - p[j]).abs() < 1e-12 * (1.0 + p4[0]), "{p:?} vs {q:?}");
        }
    }
}

#[test]
fn measure_factor() {
    // ∫ e^{-2E} d³p/p⁰ over R³ at a moving frame equals 4π ∫ √(E²−1) e^{-2E} dE
    let u = [0.4, 0.1, -0.3];
    let (xs, ws) = gauss_legendre(40);
    // spherical coordinates in the lab: |p| = tan-mapped radius
    let mut lab = 0.0;
    for (ct, wt) in xs.iter().zip(&ws) {
        for j in 0..64 {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
            let st = (1.0 - ct * ct).sqrt();
            let dirv = [st * ph.cos(), st * ph.sin(), *ct];
            let radial = integrate(
                |r: f64| {
                    let p = [r * dirv[0], r * dirv[1], r * dirv[2]];
                    let p0 = (1.0 + r * r).sqrt();
                    let (e, _, _) = p_to_internal(&p, &u).unwrap();
                    r * r / p0 * (-2.0 * e).exp()
                },
                0.0,
                40.0,
                1e-13,
            )
            .unwrap();
            lab += wt * 2.0 * std::f64::consts::PI / 64.0 * radial;
        }
    }
    let internal = 4.0 * std::f64::consts::PI * integrate(|e: f64| (e * e - 1.0).sqrt() * (-2.0 * e).exp(), 1.0, 40.0, 1e-14).unwrap();
    assert!((lab / internal - 1.0).abs() < 1e-8, "{lab} vs {internal}");
}

#[test]
fn recover_equilibrium_at_rest() {
    let g = g_ratio(2.0).unwrap();
    let mut t = [[0.0; 4]; 4];
    t[0][0] = g - 0.5;
    for i in 1..4 {
        t[i][i] = 0.5;
    }
    let r = recover_state(&MomentPair { n: [1.0, 0.0, 0.0, 0.0], t }).unwrap();
    assert!((r.state.n - 1.0).abs() < 1e-10);
    assert!(r.state.u.iter().all(|v| v.abs() < 1e-10));
    assert!((r.state.theta - 0.5).abs() < 1e-10);
    assert!(r.pi.abs() < 1e-10);
}

#[test]
fn recover_boosted_equilibrium() {
    let s = FluidState::new(1.0, [0.0; 3], 0.5).unwrap();
    let mp = MomentPair::equilibrium(&s, 0.0).unwrap();
    let b = Boost::new(-0.3).unwrap(); // the fluid moves with +0.3 in the new frame
    let n = b.apply(&mp.n);
    let mut t = [[0.0; 4]; 4];
    let cols: Vec<Vec4> = (0..4).map(|j| b.apply(&[mp.t[0][j], mp.t[1][j], mp.t[2][j], mp.t[3][j]])).collect();
    for i in 0..4 {
        let row = b.apply(&[cols[0][i], cols[1][i], cols[2][i], cols[3][i]]);
        for j in 0..4 {
            t[i][j] = row[j];
        }
    }
    let r = recover_state(&MomentPair { n, t }).unwrap();
    assert!((r.state.u[2] - 0.3).abs() < 1e-10, "{:?}", r.state.u);
    assert!((r.state.n - 1.0).abs() < 1e-10);
    assert!((r.state.theta - 0.5).abs() < 1e-10);
}

#[test]
fn recovery_rejects_bad_moments() {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        t[i][i] = 1.0;
    }
    t[0][0] = -1.0;
    assert!(matches!(recover_state(&MomentPair { n: [1.0, 0.0, 0.0, 0.0], t }), Err(Error::Inadmissible(_))));
    // ε ≤ n: no temperature
    let mut t = [[0.0; 4]; 4];
    t[0][0] = 1.0;
    for i in 1..4 {
        t[i][i] = 0.01;
    }
    assert!(matches!(recover_state(&MomentPair { n: [2.0, 0.0, 0.0, 0.0], t }), Err(Error::Inadmissible(_))));
}

#[test]
fn boost_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b0 = Boost::new(0.0).unwrap();
    assert_eq!(b0.apply(&[1.0, 2.0, 3.0, 4.0]), [1.0, 2.0, 3.0, 4.0]);
    assert!(matches!(Boost::new(1.0), Err(Error::Domain(_))));
    for _ in 0..200 {
        let u3: f64 = rng.random_range(-0.9..0.9);
        let v: f64 = rng.random_range(-0.9..0.9);
        let b = Boost::new(v).unwrap();
        let p = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let p4 = [(1.0 + p.iter().map(|x| x * x).sum::<f64>()).sqrt(), p[0], p[1], p[2]];
        let q4 = b.apply(&p4);
        let (e, y, _) = p_to_internal(&p, &[0.0, 0.0, u3]).unwrap();
        let (e2, y2, _) = p_to_internal(&[q4[1], q4[2], q4[3]], &[0.0, 0.0, b.velocity(u3)]).unwrap();
        assert!((e - e2).abs() < 1e-13 * e);
        assert!((y - y2).abs() < 1e-13 * e);
    }
}

proptest! {
    #[test]
    fn theta_solver_inverts(th in 1e-3f64..50.0) {
        let r = g_ratio(1.0 / th).unwrap() - th;
        let t = solve_theta(r).unwrap();
        prop_assert!((t / th - 1.0).abs() < 1e-9);
    }
}
