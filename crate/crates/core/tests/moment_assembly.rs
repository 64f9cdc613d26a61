mod common;

use common::{d_by_differences, euler_speeds, random_state, random_w};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmoment::basis::{block_permutation, n_moments, Basis};
use rmoment::moment_assembly::*;

#[test]
fn recurrence_matrices_are_symmetric_and_blocked() {
    let s = random_state(&mut ChaCha8Rng::seed_from_u64(1), 0.5);
    for order in 1..=4 {
        let b = Basis::new(order, &s).unwrap();
        let a = build_a(order, &b.families).unwrap();
        for m in &a {
            assert!((m - m.transpose()).abs().max() < 1e-12);
        }
        // A^0 is block diagonal with Jacobi blocks in (m, ℓ) order
        let perm = block_permutation(order);
        let n = perm.len();
        let blocked = DMatrix::from_fn(n, n, |i, j| a[0][(perm[i], perm[j])]);
        let idx = rmoment::basis::block_order(order);
        for i in 0..n {
            for j in 0..n {
                let same = idx[i].ell == idx[j].ell && idx[i].m == idx[j].m;
                if !same {
                    assert_eq!(blocked[(i, j)], 0.0);
                } else if idx[i].k == idx[j].k {
                    assert_eq!(blocked[(i, j)], b.families.fams[idx[i].ell].b[idx[i].k]);
                }
            }
        }
    }
}

#[test]
fn convection_matrices_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for order in 1..=4 {
        for _ in 0..3 {
            let w = random_w(&mut rng, order, 0.8, 0.1);
            let sys = assemble(order, &w).unwrap();
            for alpha in 0..4 {
                let g = sys.basis.moment_gram(alpha).unwrap();
                let err = (&sys.m[alpha] - g).abs().max();
                assert!(err < 1e-9, "order {order} alpha {alpha}: {err}");
            }
            assert!(sys.m[0].clone().cholesky().is_some());
        }
    }
}

#[test]
fn variable_change_reproduces_macroscopic_fields() {
    // f = D^W W carries n, ε = n(G − θ), Π, the diffusion current and zero energy flux
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for order in 2..=4 {
        let w = random_w(&mut rng, order, 0.6, 0.2);
        let sys = assemble(order, &w).unwrap();
        let s = sys.state;
        let f = &sys.dw * DVector::from_column_slice(&w);
        let b = &sys.basis;
        let tet = b.tetrad;
        // integrals of E f, E² f, (E²−1) f/3 and √(E²−1) ω_a E^j f
        let mom = |j: i32, a: Option<usize>| {
            b.project_reduced(order, |_| 0.0).unwrap();
            let mut acc = 0.0;
            for node in b.rule(order + 1).unwrap() {
                let r = b.reduced_upto(order, node.e, node.y, node.phi);
                let fv: f64 = r.iter().zip(f.iter()).map(|(x, c)| x * c).sum();
                let wgt = match a {
                    None => node.e.powi(j),
                    Some(a) => node.e.powi(j) * (node.e * node.e - 1.0).sqrt() * rmoment::frame_kinematics::direction(node.y, node.phi)[a],
                };
                acc += node.w * wgt * fv;
            }
            acc
        };
        let g = b.g;
        assert!((mom(1, None) - s.n).abs() < 1e-12 * s.n);
        assert!((mom(2, None) - s.n * (g - s.theta)).abs() < 1e-11 * s.n * g);
        let p_total = (mom(2, None) - mom(0, None)) / 3.0;
        assert!((p_total - s.n * s.theta - w[W_PI]).abs() < 1e-11 * s.n * g);
        for a in 0..3 {
            assert!(mom(1, Some(a)).abs() < 1e-12 * s.n, "energy flux {a}");
        }
        // n^α = −n_1 f̃_1 − n_2 f̃_{−1} + n_3 f̃_0
        let j: Vec<f64> = (0..3).map(|a| mom(0, Some(a))).collect();
        for alpha in 0..4 {
            let lhs: f64 = (0..3).map(|a| tet.n[a][alpha] * j[a]).sum();
            let rhs = -tet.n[0][alpha] * w[W_FT + 2] - tet.n[1][alpha] * w[W_FT] + tet.n[2][alpha] * w[W_FT + 1];
            assert!((lhs - rhs).abs() < 1e-12 * s.n, "diffusion {alpha}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn d_matches_chain_rule_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for order in 1..=4 {
        for _ in 0..2 {
            let w = random_w(&mut rng, order, 0.6, 0.2);
            let dir: Vec<f64> = random_w(&mut rng, order, 0.6, 0.2).iter().map(|v| v * 0.3).collect();
            let sys = assemble(order, &w).unwrap();
            let want = &sys.d * DVector::from_column_slice(&dir);
            let got = d_by_differences(order, &w, &dir, 1e-5);
            let scale = want.amax().max(1.0);
            for i in 0..want.len() {
                assert!((want[i] - got[i]).abs() < 1e-6 * scale, "order {order} row {i}: {} vs {}", want[i], got[i]);
            }
        }
    }
}

#[test]
fn source_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for order in 2..=4 {
        let w = random_w(&mut rng, order, 0.6, 0.2);
        let sys = assemble(order, &w).unwrap();
        let s1 = sys.source(&w, 1.0).unwrap();
        let s3 = sys.source(&w, 0.25).unwrap();
        for i in 0..5 {
            assert!(s1[i].abs() < 1e-13 * s1.iter().fold(1f64, |m, v| m.max(v.abs())), "row {i}: {}", s1[i]);
        }
        for (a, b) in s1.iter().zip(&s3) {
            assert!((b - 4.0 * a).abs() <= 1e-15 * b.abs().max(1e-300) * 4.0);
        }
        let weq = equilibrium_w(order, &sys.state);
        let seq = assemble(order, &weq).unwrap().source(&weq, 1.0).unwrap();
        assert!(seq.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn moments_of_projection_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let order = 3;
    let w = random_w(&mut rng, order, 0.7, 0.2);
    let sys = assemble(order, &w).unwrap();
    let mp = moments_of(&sys, &w);
    let f = &sys.dw * DVector::from_column_slice(&w);
    let b = &sys.basis;
    let mut n = [0.0; 4];
    let mut t = [[0.0; 4]; 4];
    for node in b.rule(order + 1).unwrap() {
        let r = b.reduced_upto(order, node.e, node.y, node.phi);
        let fv: f64 = r.iter().zip(f.iter()).map(|(x, c)| x * c).sum();
        let p = b.momentum(&node);
        for a in 0..4 {
            n[a] += node.w * p[a] * fv;
            for c in 0..4 {
                t[a][c] += node.w * p[a] * p[c] * fv;
            }
        }
    }
    for a in 0..4 {
        assert!((mp.n[a] - n[a]).abs() < 1e-12 * sys.state.n * 4.0);
        for c in 0..4 {
            assert!((mp.t[a][c] - t[a][c]).abs() < 1e-11 * t[0][0], "{a}{c}");
        }
    }
    let _ = n_moments(order);
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn printed_first_order_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let s = random_state(&mut rng, 0.9);
        let sys = assemble(1, &equilibrium_w(1, &s)).unwrap();
        let f = &sys.basis.families.fams;
        let (n, z, u0) = (s.n, s.zeta(), s.gamma());
        let t = sys.basis.tetrad;
        let mut want = DMatrix::zeros(5, 5);
        want[(0, 0)] = 1.0 / f[0].c[0];
        want[(0, 4)] = -n * z * z / (f[0].c[1] * f[0].c[1] * f[0].c[0]);
        want[(1, 4)] = n * z * z / f[0].c[1];
        for (row, a, sign) in [(2, 1, -1.0), (3, 2, 1.0), (4, 0, -1.0)] {
            for i in 0..3 {
                want[(row, 1 + i)] = sign * n * u0 * t.n[a][1 + i] * f[1].c[0];
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                assert!(close(sys.d[(i, j)], want[(i, j)], 1e-10), "({i},{j}): {} vs {}", sys.d[(i, j)], want[(i, j)]);
            }
        }
        let det = sys.det_d();
        assert!(close(det, det_d1_closed_form(&s).unwrap(), 1e-10 * det.abs()));
        assert!(det < 0.0);
    }
}

#[test]
fn printed_second_order_blocks_without_heat_flux() {
    // with f̃ = 0 and no ℓ ≥ 2 data the printed D_2 holds up to the two D^W typos
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let s = random_state(&mut rng, 0.9);
        let mut w = equilibrium_w(2, &s);
        w[W_PI] = 0.3 * s.n * s.theta * (rng_unit(&mut rng) - 0.5);
        let pi = w[W_PI];
        let sys = assemble(2, &w).unwrap();
        let d1 = assemble(1, &w[..5]).unwrap().d;
        let f = &sys.basis.families.fams;
        let t = sys.basis.tetrad;
        let u0 = s.gamma();
        for i in 0..5 {
            for j in 0..5 {
                assert!(close(sys.d[(i, j)], d1[(i, j)], 1e-10));
            }
        }
        let p = |l: usize, k: usize| f[l].eval_upto(k, 0.0)[k];
        assert!(close(sys.d[(0, 5)], -3.0 * f[0].c[0], 1e-12));
        assert!(close(sys.d[(1, 5)], -3.0 * p(0, 1), 1e-12));
        assert!(close(-3.0 * p(0, 1), 3.0 * f[0].c[1] * f[0].b[0], 1e-12));
        assert!(close(sys.d[(5, 5)], -3.0 * p(0, 2), 1e-12));
        let zeros = f[0].zeros(2).unwrap();
        assert!(close(p(0, 2), f[0].c[2] * zeros[0] * zeros[1], 1e-11));
        for a in 0..3 {
            assert!(close(sys.d[(2 + a, 6 + a)], f[1].c[0], 1e-12));
            assert!(close(sys.d[(6 + a, 6 + a)], -f[1].c[1] * f[1].b[0], 1e-12));
        }
        for (row, a, sign) in [(6, 1, -1.0), (7, 2, 1.0), (8, 0, -1.0)] {
            for i in 0..3 {
                assert!(close(sys.d[(row, 1 + i)], sign * u0 * t.n[a][1 + i] * f[1].c[1] * pi, 1e-10));
            }
        }
        for j in 0..9 {
            assert!(sys.d[(5, j)].abs() < 1e-12 || j == 5, "row (0,2) col {j}");
        }
        let det = sys.det_d();
        let want = det_d2_closed_form(&s, pi).unwrap();
        assert!((det - want).abs() < 1e-8 * want.abs(), "{det} vs {want}");
        for order in 3..=4 {
            let mut wm = equilibrium_w(order, &s);
            wm[W_PI] = pi;
            let dm = assemble(order, &wm).unwrap().det_d();
            assert!((dm - want).abs() < 1e-8 * want.abs());
        }
    }
}

fn rng_unit(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random_range(0.0..1.0)
}

#[test]
fn mass_matrix_definiteness() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..50 {
        let order = 1 + i % 4;
        let w = random_w(&mut rng, order, 0.95, 0.2);
        let sys = assemble(order, &w).unwrap();
        let nh = {
            let v = [rng_unit(&mut rng) - 0.5, rng_unit(&mut rng) - 0.5, rng_unit(&mut rng) - 0.5];
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.map(|x| x / r)
        };
        let mn = &sys.m[1] * nh[0] + &sys.m[2] * nh[1] + &sys.m[3] * nh[2];
        let lam = 1.0 + 1e-6;
        assert!((&sys.m[0] * lam - &mn).cholesky().is_some());
        assert!((&sys.m[0] * lam + &mn).cholesky().is_some());
    }
}

/// Characteristic speeds of the M = 1 system along ñ from the symmetric pencil (M^0, ñ_iM^i).
fn pencil_speeds(sys: &SystemMatrices, nh: [f64; 3]) -> Vec<f64> {
    let l = sys.m[0].clone().cholesky().unwrap();
    let mn = &sys.m[1] * nh[0] + &sys.m[2] * nh[1] + &sys.m[3] * nh[2];
    let x = l.l().solve_lower_triangular(&mn).unwrap();
    let h = l.l().solve_lower_triangular(&x.transpose()).unwrap();
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn first_order_system_is_relativistic_euler() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let s = random_state(&mut rng, 0.8);
        let sys = assemble(1, &equilibrium_w(1, &s)).unwrap();
        let v = [rng_unit(&mut rng) - 0.5, rng_unit(&mut rng) - 0.5, rng_unit(&mut rng) - 0.5];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let nh = v.map(|x| x / r);
        let mine = pencil_speeds(&sys, nh);
        let want = euler_speeds(&s, nh);
        for (x, y) in mine.iter().zip(&want) {
            assert!((x - y).abs() < 1e-8, "{mine:?} vs {want:?}");
        }
    }
}

#[test]
fn rest_frame_mass_matrix_is_jacobi() {
    let s = rmoment::frame_kinematics::FluidState::new(1.0, [0.0; 3], 0.4).unwrap();
    let sys = assemble(3, &equilibrium_w(3, &s)).unwrap();
    assert!((&sys.m[0] - &sys.a[0]).abs().max() < 1e-13);
}
