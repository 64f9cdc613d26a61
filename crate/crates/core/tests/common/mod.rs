#![allow(dead_code)]
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rmoment::basis::{n_moments, Basis};
use rmoment::moment_assembly::{assemble, build_dw, state_of};
use rmoment::orthopoly::{PolyFamily, Precision};
use rmoment::quadrature::integrate;
use rmoment::quasi1d::Reduced;
use rmoment::frame_kinematics::FluidState;

pub fn random_state(rng: &mut ChaCha8Rng, umax: f64) -> FluidState {
    let u = loop {
        let u: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if u.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            break u.map(|v| v * umax);
        }
    };
    let theta = 10f64.powf(rng.random_range(-1.0..0.7));
    FluidState::new(rng.random_range(0.5..2.0), u, theta).unwrap()
}

/// Random admissible W near equilibrium: non-equilibrium parts scaled by `amp` n θ.
pub fn random_w(rng: &mut ChaCha8Rng, order: usize, umax: f64, amp: f64) -> Vec<f64> {
    let s = random_state(rng, umax);
    let mut w = vec![0.0; n_moments(order)];
    w[0] = s.n;
    w[1..4].copy_from_slice(&s.u);
    w[4] = s.theta;
    for v in w.iter_mut().skip(5) {
        *v = amp * s.n * s.theta * rng.random_range(-1.0..1.0);
    }
    w
}

/// Relativistic Euler speeds for a Jüttner gas: ε = n(G − θ), p = nθ, h = G.
pub fn euler_speeds(s: &FluidState, nh: [f64; 3]) -> Vec<f64> {
    let g = |t: f64| rmoment::special_functions::g_ratio(1.0 / t).unwrap();
    let t = s.theta;
    let dt = 1e-4 * t;
    let dg = (8.0 * (g(t + dt) - g(t - dt)) - (g(t + 2.0 * dt) - g(t - 2.0 * dt))) / (12.0 * dt);
    let cv = dg - 1.0;
    let cs2 = t / g(t) * (cv + 1.0) / cv;
    let vn: f64 = (0..3).map(|i| s.u[i] * nh[i]).sum();
    let v2: f64 = s.u.iter().map(|x| x * x).sum();
    let root = (cs2 * (1.0 - v2) * (1.0 - vn * vn - cs2 * (v2 - vn * vn))).sqrt();
    let mut v = vec![(vn * (1.0 - cs2) - root) / (1.0 - v2 * cs2), vn, vn, vn, (vn * (1.0 - cs2) + root) / (1.0 - v2 * cs2)];
    v.sort_by(f64::total_cmp);
    v
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 0.1 && r < 1.0 {
            return v.map(|x| x / r);
        }
    }
}

/// ∫_1^∞ F(x) ω^(ℓ)(x) dx by adaptive quadrature in t (x = cosh t), independent
/// of the discretization used to build the families.
pub fn weighted_integral(fam: &PolyFamily, f: impl Fn(f64) -> f64) -> f64 {
    let z = fam.zeta;
    let n = (2 * fam.ell + 2) as f64;
    let k2s = rmoment::special_functions::bessel_k_scaled(2, z).unwrap();
    let pref = z / ((2 * fam.ell + 1) as f64 * k2s);
    let dens = |t: f64| pref * t.sinh().powf(n) * (-z * 2.0 * (0.5 * t).sinh().powi(2)).exp();
    let mut t_end = 1.0;
    while dens(t_end) * t_end.cosh().powi(40) > 1e-40 || t_end < 2.0 * (n / z).sqrt().asinh() {
        t_end *= 1.2;
    }
    let mid = (n / z).sqrt().asinh();
    integrate(|t| f(t.cosh()) * dens(t), 0.0, mid, 1e-16).unwrap()
        + integrate(|t| f(t.cosh()) * dens(t), mid, t_end, 1e-16).unwrap()
}

/// D δW from central differences of the projected distribution along W + s δW.
pub fn d_by_differences(order: usize, w: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    let sys = assemble(order, w).unwrap();
    let b0 = &sys.basis;
    let at = |s: f64| {
        let ws: Vec<f64> = w.iter().zip(dir).map(|(a, d)| a + s * d).collect();
        let st = state_of(&ws).unwrap();
        let f = build_dw(order, &st).unwrap() * DVector::from_column_slice(&ws);
        (Basis::new(order, &st).unwrap(), f)
    };
    let (bp, fp) = at(h);
    let (bm, fm) = at(-h);
    b0.project_reduced(order + 1, |node| {
        let gp: f64 = bp.eval_all(&node.p).unwrap().iter().zip(fp.iter()).map(|(a, c)| a * c).sum();
        let gm: f64 = bm.eval_all(&node.p).unwrap().iter().zip(fm.iter()).map(|(a, c)| a * c).sum();
        (gp - gm) / (2.0 * h) / b0.g0(node.e)
    })
    .unwrap()
}

/// Reference for a uniform grid: classical RK4 on B́0 dẂ/dt = Ś with the
/// matrices re-evaluated at every stage.
pub fn rk4_relaxation(order: usize, w0: &[f64], tau: f64, t_end: f64, steps: usize) -> Vec<f64> {
    let rhs = |w: &[f64]| -> DVector<f64> {
        let r = Reduced::new(order, w, Precision::Double).unwrap();
        r.b0.clone().lu().solve(&DVector::from_vec(r.source(tau))).unwrap()
    };
    let h = t_end / steps as f64;
    let mut w = DVector::from_column_slice(w0);
    for _ in 0..steps {
        let k1 = rhs(w.as_slice());
        let k2 = rhs((&w + &k1 * (h / 2.0)).as_slice());
        let k3 = rhs((&w + &k2 * (h / 2.0)).as_slice());
        let k4 = rhs((&w + &k3 * h).as_slice());
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w.as_slice().to_vec()
}
