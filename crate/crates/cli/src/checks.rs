//! The invariant suite behind `rmoment check`: one row per property and ζ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmoment::analysis::{certify_hyperbolic, covariance_residual, k_grid, stability_scan, zero_modes};
use rmoment::basis::n_moments;
use rmoment::frame_kinematics::{recover_state, FluidState};
use rmoment::harmonics::{verify_derivatives, verify_recurrences};
use rmoment::moment_assembly::{assemble, moments_of};
use rmoment::orthopoly::{d_dx_relations, FamilySet};
use rmoment::quasi1d;

#[derive(Clone, Copy, Debug)]
pub enum Bound {
    Below(f64),
    AtLeast(f64),
    Equals(f64),
}

impl Bound {
    pub fn describe(&self) -> String {
        match self {
            Bound::Below(t) => format!("< {t:e}"),
            Bound::AtLeast(t) => format!(">= {t:e}"),
            Bound::Equals(t) => format!("== {t}"),
        }
    }
}

pub struct Check {
    pub zeta: f64,
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Below(t) => self.value < t,
            Bound::AtLeast(t) => self.value >= t,
            Bound::Equals(t) => self.value == t,
        }
    }
}

fn random_w(rng: &mut ChaCha8Rng, order: usize, theta: f64) -> Vec<f64> {
    let n = rng.random_range(0.5..2.0);
    let u = loop {
        let u: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.8..0.8));
        if u.iter().map(|v| v * v).sum::<f64>() < 0.81 {
            break u;
        }
    };
    let mut w = vec![0.0; n_moments(order)];
    w[0] = n;
    w[1..4].copy_from_slice(&u);
    w[4] = theta;
    // the shear coefficient grows like θ^{3/2}, so keep hot states mild
    let amp = 0.05 * n * theta.min(1.0);
    for v in w.iter_mut().skip(5) {
        *v = amp * rng.random_range(-1.0..1.0);
    }
    w
}

pub fn run_suite(order: usize, zetas: &[f64], seed: u64) -> rmoment::Result<Vec<Check>> {
    if !(1..=8).contains(&order) {
        return Err(rmoment::Error::Domain(format!("check supports M in 1..=8, got {order}")));
    }
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &zeta in zetas {
        let theta = 1.0 / zeta;
        let mut push = |name, value, bound| out.push(Check { zeta, name, value, bound });
        let (lmax, kmax) = (order + 1, order + 2);
        let set = FamilySet::new(zeta, lmax, kmax)?;

        let mut gram: f64 = 0.0;
        for f in &set.fams {
            let (x, wt) = f.gauss_rule(kmax + 1)?;
            let p: Vec<Vec<f64>> = x.iter().map(|&xi| f.eval_upto(kmax, xi)).collect();
            for i in 0..=kmax {
                for j in 0..=kmax {
                    let g: f64 = wt.iter().zip(&p).map(|(w, pv)| w * pv[i] * pv[j]).sum();
                    gram = gram.max((g - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
        }
        push("orthonormality", gram, Bound::Below(1e-10));

        let mut rel: f64 = 0.0;
        for l in 1..=lmax {
            for k in 0..=order {
                for x in [1.0 + 0.5 * theta, 1.0 + 2.0 * theta, 1.0 + 6.0 * theta] {
                    let r = d_dx_relations(&set.fams[l], &set.fams[l - 1], &set.cross[l], k, x);
                    for (a, b) in [r.lower, r.upper] {
                        rel = rel.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
                    }
                }
            }
        }
        push("x-derivative relations", rel, Bound::Below(1e-9));

        let mut bad = 0usize;
        for (l, f) in set.fams.iter().enumerate() {
            for k in 1..=kmax {
                let (z, next) = (f.zeros(k)?, f.zeros(k + 1)?);
                bad += usize::from(!(z[0] > 1.0));
                bad += (0..k).filter(|&i| !(next[i] < z[i] && z[i] < next[i + 1])).count();
                if l >= 1 {
                    let lower = set.fams[l - 1].zeros(k + 1)?;
                    bad += (0..k).filter(|&i| !(lower[i] < z[i] && z[i] < lower[i + 1])).count();
                }
            }
        }
        push("zero interlacing violations", bad as f64, Bound::Equals(0.0));

        let mut neg = 0usize;
        for (l, f) in set.fams.iter().enumerate() {
            neg += f.a[..kmax].iter().chain(&f.b[..kmax]).chain(&f.c).filter(|v| !(**v > 0.0)).count();
            if l >= 1 {
                let c = &set.cross[l];
                for v in [&c.p, &c.q, &c.ptilde, &c.qtilde, &c.rtilde] {
                    neg += v.iter().take(kmax - 1).filter(|v| !(**v > 0.0)).count();
                }
            }
        }
        push("coefficient positivity violations", neg as f64, Bound::Equals(0.0));

        let mut harm: f64 = 0.0;
        for l in 0..=(lmax as i64) {
            for m in -l..=l {
                for iy in 0..5 {
                    for ip in 0..5 {
                        let (y, phi) = (-0.9 + 0.45 * iy as f64, 0.3 + 1.2 * ip as f64);
                        let r = verify_recurrences(l, m, y, phi)?;
                        let d = verify_derivatives(l, m, y, phi)?;
                        harm = r.iter().chain(&d).fold(harm, |a, v| a.max(v.abs()));
                    }
                }
            }
        }
        push("harmonic identities", harm, Bound::Below(1e-10));

        let mut max_speed: f64 = 0.0;
        let mut orth: f64 = 0.0;
        let mut asym: f64 = 0.0;
        let mut recov: f64 = 0.0;
        for _ in 0..5 {
            let w = random_w(&mut rng, order, theta);
            let sys = assemble(order, &w)?;
            for m in &sys.m {
                asym = asym.max((m - m.transpose()).amax() / m.amax());
            }
            let nh = {
                let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.map(|x| x / r)
            };
            let rep = certify_hyperbolic(&sys, nh)?;
            max_speed = max_speed.max(rep.max_abs);
            orth = orth.max(rep.orthogonality_residual);
            let mp = moments_of(&sys, &w);
            let r = recover_state(&mp)?;
            let pi = w.get(5).copied().unwrap_or(0.0);
            for (a, b) in [(r.state.n, w[0]), (r.state.theta, w[4]), (r.pi, pi)] {
                recov = recov.max((a - b).abs() / w[0].max(w[0] * w[4]));
            }
            for i in 0..3 {
                recov = recov.max((r.state.u[i] - w[1 + i]).abs());
            }
        }
        push("mass matrix symmetry", asym, Bound::Below(1e-12));
        push("max characteristic speed", max_speed, Bound::Below(1.0 - 1e-10));
        push("eigenvector orthogonality", orth, Bound::Below(1e-10));
        push("state recovery", recov, Bound::Below(1e-9));

        let s = FluidState::new(1.0, [0.2, -0.1, 0.3], theta)?;
        let ks = k_grid(1e-2, 1e2, 12, &[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]);
        push("min Im omega", stability_scan(order, &s, &ks, 1.0)?.min_im, Bound::AtLeast(-1e-9));
        let at0 = stability_scan(order, &s, &[[0.0; 3]], 1.0)?;
        let scale = at0.omegas[0].iter().fold(1.0f64, |a, w| a.max(w.norm()));
        push("zero modes at k = 0", zero_modes(&at0.omegas[0], 1e-9 * scale) as f64, Bound::Equals(5.0));

        let mut wq = quasi1d::equilibrium(order, 1.2, 0.4, theta)?;
        for v in wq.iter_mut().skip(3) {
            *v = 0.05 * 1.2 * theta.min(1.0) * rng.random_range(-1.0..1.0);
        }
        let dt: Vec<f64> = (0..wq.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dx: Vec<f64> = (0..wq.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut cov: f64 = 0.0;
        for v in [0.1, 0.5, 0.9] {
            cov = cov.max(covariance_residual(order, v, &wq, &dt, &dx, 0.5)?);
        }
        push("Lorentz covariance residual", cov, Bound::Below(1e-9));
    }
    Ok(out)
}
