//! Minkowski kinematics in units m = c = 1, metric diag(1, −1, −1, −1).
//!
//! A momentum is described relative to the fluid by E = U_α p^α and the
//! direction (y, φ) of its spatial part in the tetrad:
//! p^α = U^α E + √(E²−1) Σ_a ω_a n_a^α, ω = (√(1−y²) cos φ, √(1−y²) sin φ, y).

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special_functions::g_ratio;

pub type Vec4 = [f64; 4];

pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// Primitive state (n, u, θ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidState {
    pub n: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

fn check_velocity(u: &[f64; 3]) -> Result<f64> {
    let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    if !(u2 < 1.0) {
        return Err(Error::domain(format!("|u| must be below 1, got {}", u2.sqrt())));
    }
    Ok(u2)
}

impl FluidState {
    pub fn new(n: f64, u: [f64; 3], theta: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain(format!("density must be positive, got {n}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::domain(format!("temperature must be positive, got {theta}")));
        }
        check_velocity(&u)?;
        Ok(FluidState { n, u, theta })
    }

    pub fn zeta(&self) -> f64 {
        1.0 / self.theta
    }

    pub fn gamma(&self) -> f64 {
        let u2 = self.u.iter().map(|v| v * v).sum::<f64>();
        1.0 / (1.0 - u2).sqrt()
    }

    pub fn four_velocity(&self) -> Vec4 {
        four_velocity(&self.u)
    }
}

pub fn four_velocity(u: &[f64; 3]) -> Vec4 {
    let g = 1.0 / (1.0 - u.iter().map(|v| v * v).sum::<f64>()).sqrt();
    [g, g * u[0], g * u[1], g * u[2]]
}

/// Spatial triad n_1, n_2, n_3 orthogonal to U: n_i^0 = U^i,
/// n_i^j = U^i U^j / (U^0 + 1) + δ_ij.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tetrad {
    pub n: [Vec4; 3],
}

pub fn tetrad(u: &[f64; 3]) -> Result<Tetrad> {
    check_velocity(u)?;
    let uu = four_velocity(u);
    let mut n = [[0.0; 4]; 3];
    for i in 0..3 {
        n[i][0] = uu[i + 1];
        for j in 0..3 {
            n[i][j + 1] = uu[i + 1] * uu[j + 1] / (uu[0] + 1.0) + if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(Tetrad { n })
}

impl Tetrad {
    /// Largest deviation from U·n_i = 0 and n_i·n_j = −δ_ij.
    pub fn residual(&self, uu: &Vec4) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..3 {
            r = r.max(dot(uu, &self.n[i]).abs());
            for j in 0..3 {
                let want = if i == j { -1.0 } else { 0.0 };
                r = r.max((dot(&self.n[i], &self.n[j]) - want).abs());
            }
        }
        r
    }
}

/// Unit direction (ω_1, ω_2, ω_3) for internal angles (y, φ).
pub fn direction(y: f64, phi: f64) -> [f64; 3] {
    let s = (1.0 - y * y).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), y]
}

/// Momentum 3-vector to (E, y, φ) relative to the fluid moving with `u`.
/// For E = 1 the direction is undefined and (y, φ) = (1, 0) is returned.
pub fn p_to_internal(p3: &[f64; 3], u: &[f64; 3]) -> Result<(f64, f64, f64)> {
    let tet = tetrad(u)?;
    let uu = four_velocity(u);
    let p = [(1.0 + p3.iter().map(|v| v * v).sum::<f64>()).sqrt(), p3[0], p3[1], p3[2]];
    let e = dot(&uu, &p).max(1.0);
    let s = (e * e - 1.0).sqrt();
    if s == 0.0 {
        return Ok((1.0, 1.0, 0.0));
    }
    // ω_a = −n_a·p / √(E²−1); the minus comes from lowering the index of p
    let w: Vec<f64> = tet.n.iter().map(|na| -dot(na, &p) / s).collect();
    let y = w[2].clamp(-1.0, 1.0);
    Ok((e, y, w[1].atan2(w[0])))
}

/// Inverse of [`p_to_internal`]: p^α = U^α E + √(E²−1) Σ_a ω_a n_a^α.
pub fn internal_to_p(e: f64, y: f64, phi: f64, u: &[f64; 3]) -> Result<[f64; 3]> {
    if !(e >= 1.0) {
        return Err(Error::domain(format!("E must be at least 1, got {e}")));
    }
    if !(y.abs() <= 1.0) {
        return Err(Error::domain(format!("|y| must be at most 1, got {y}")));
    }
    let tet = tetrad(u)?;
    let uu = four_velocity(u);
    let s = (e * e - 1.0).sqrt();
    let w = direction(y, phi);
    let mut p = [0.0; 3];
    for j in 0..3 {
        p[j] = uu[j + 1] * e + s * (0..3).map(|a| w[a] * tet.n[a][j + 1]).sum::<f64>();
    }
    Ok(p)
}

/// Particle 4-flow and energy-momentum tensor (contravariant components).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentPair {
    pub n: Vec4,
    pub t: [[f64; 4]; 4],
}

impl MomentPair {
    /// N = nU, T = n G(ζ) U U − nθ g for a Jüttner distribution with bulk
    /// pressure Π added as −Π Δ.
    pub fn equilibrium(state: &FluidState, pi: f64) -> Result<Self> {
        let uu = state.four_velocity();
        let g = g_ratio(state.zeta())?;
        let (n, th) = (state.n, state.theta);
        let eps = n * (g - th);
        let p = n * th + pi;
        let mut t = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let gab = if a == b { METRIC[a] } else { 0.0 };
                t[a][b] = (eps + p) * uu[a] * uu[b] - p * gab;
            }
        }
        Ok(MomentPair { n: [n * uu[0], n * uu[1], n * uu[2], n * uu[3]], t })
    }
}

/// Result of [`recover_state`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Recovered {
    pub state: FluidState,
    pub epsilon: f64,
    pub pi: f64,
}

/// θ solving G(1/θ) − θ = r for r > 1, by bisection on the bracket given by
/// 5θ/2 + 1 < G(1/θ) < 2(6θ² + 4θ + 1)/(3θ + 2).
pub fn solve_theta(r: f64) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::inadmissible(format!("energy per particle must exceed 1, got {r}")));
    }
    let hi0 = 2.0 * (r - 1.0) / 3.0;
    let b = 6.0 - 3.0 * r;
    let disc = b * b - 36.0 * (2.0 - 2.0 * r);
    let lo0 = (-b + disc.sqrt()) / 18.0;
    let f = |th: f64| -> Result<f64> { Ok(g_ratio(1.0 / th)? - th - r) };
    let (mut lo, mut hi) = (lo0 * (1.0 - 1e-10), hi0 * (1.0 + 1e-10));
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::inadmissible(format!("temperature root not bracketed for ratio {r}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Admissible (n, u, θ), ε and Π from (N, T).
///
/// The Landau eigenproblem T U_low = ε g U_low is symmetrized with the Cholesky
/// factor T = L Lᵀ: S = L⁻¹ g L⁻ᵀ has eigenvalues 1/ε and exactly one of them is
/// positive because g has one positive direction.
pub fn recover_state(mp: &MomentPair) -> Result<Recovered> {
    let t = Matrix4::from_fn(|i, j| mp.t[i][j]);
    if t.iter().any(|v| !v.is_finite()) || (t - t.transpose()).abs().max() > 1e-12 * t.abs().max() {
        return Err(Error::inadmissible("energy-momentum tensor is not a finite symmetric matrix"));
    }
    let chol = t.cholesky().ok_or_else(|| Error::inadmissible("energy-momentum tensor is not positive definite"))?;
    let l = chol.l();
    let linv = l.try_inverse().ok_or_else(|| Error::inadmissible("singular energy-momentum tensor"))?;
    let g = Matrix4::from_diagonal(&METRIC.into());
    let s = &linv * g * linv.transpose();
    let eig = SymmetricEigen::new(s);
    let mut best: Option<(f64, usize)> = None;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 && best.map_or(true, |(b, _)| lam > b) {
            best = Some((lam, i));
        }
    }
    let (lam, i) = best.ok_or_else(|| Error::inadmissible("no timelike Landau eigenvector"))?;
    let z = eig.eigenvectors.column(i).into_owned();
    let x = linv.transpose() * z; // U_low up to scale
    let mut uu = [x[0], -x[1], -x[2], -x[3]];
    let norm2 = dot(&uu, &uu);
    let l2: f64 = uu.iter().map(|v| v * v).sum();
    if !(norm2 > 1e-12 * l2) {
        return Err(Error::inadmissible("Landau eigenvector is not timelike"));
    }
    let sc = uu[0].signum() / norm2.sqrt();
    for v in uu.iter_mut() {
        *v *= sc;
    }
    let u = [uu[1] / uu[0], uu[2] / uu[0], uu[3] / uu[0]];
    let eps = 1.0 / lam;
    let n = dot(&uu, &mp.n);
    if !(n > 0.0) {
        return Err(Error::inadmissible(format!("number density U·N = {n} is not positive")));
    }
    let theta = solve_theta(eps / n)?;
    let trace: f64 = (0..4).map(|a| METRIC[a] * mp.t[a][a]).sum();
    let pi = (eps - trace) / 3.0 - n * theta;
    let state = FluidState::new(n, u, theta).map_err(|e| Error::inadmissible(e.to_string()))?;
    if !(pi > -n * theta) {
        return Err(Error::inadmissible(format!("bulk pressure {pi} violates Pi > -n theta")));
    }
    Ok(Recovered { state, epsilon: eps, pi })
}

/// Lorentz boost with velocity v along the third axis: t' = γ(t − v x³).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boost {
    pub v: f64,
    pub gamma: f64,
}

impl Boost {
    pub fn new(v: f64) -> Result<Self> {
        if !(v.abs() < 1.0) {
            return Err(Error::domain(format!("boost speed must be below 1, got {v}")));
        }
        Ok(Boost { v, gamma: 1.0 / (1.0 - v * v).sqrt() })
    }

    /// Components of a contravariant 4-vector in the boosted frame.
    pub fn apply(&self, x: &Vec4) -> Vec4 {
        [self.gamma * (x[0] - self.v * x[3]), x[1], x[2], self.gamma * (x[3] - self.v * x[0])]
    }

    /// Velocity along the boost axis seen in the boosted frame.
    pub fn velocity(&self, u: f64) -> f64 {
        (u - self.v) / (1.0 - u * self.v)
    }

    /// du'/du of [`Boost::velocity`].
    pub fn velocity_jacobian(&self, u: f64) -> f64 {
        (1.0 - self.v * self.v) / (1.0 - u * self.v).powi(2)
    }

    /// (∂_{t'} F, ∂_{x'} F) from (∂_t F, ∂_x F) for a scalar field F.
    pub fn derivatives(&self, dt: f64, dx: f64) -> (f64, f64) {
        (self.gamma * (dt + self.v * dx), self.gamma * (dx + self.v * dt))
    }
}
