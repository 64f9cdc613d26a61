//! Numerical certification of hyperbolicity, linear stability at equilibrium
//! and Lorentz covariance of the quasi-1D system.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::frame_kinematics::{Boost, FluidState};
use crate::moment_assembly::{assemble, equilibrium_w, SystemMatrices, W_PI};
use crate::orthopoly::Precision;
use crate::quasi1d::Reduced;

/// Eigen-decomposition of the symmetric pencil (A, B), A positive definite:
/// eigenvalues of A⁻¹B and the A-orthonormal eigenvectors X (XᵀAX = I).
pub fn pencil_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (lt, h) = congruence(a, b)?;
    let eig = h.symmetric_eigen();
    let x = lt
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::numerical("triangular solve failed"))?;
    Ok((eig.eigenvalues.as_slice().to_vec(), x))
}

/// (Lᵀ, L⁻¹ B L⁻ᵀ) with A = LLᵀ, symmetrized.
fn congruence(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = a.clone().cholesky().ok_or_else(|| Error::numerical("matrix is not positive definite"))?;
    let l = chol.l();
    let x = l.solve_lower_triangular(b).ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let h = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let h = (&h + h.transpose()) * 0.5;
    Ok((l.transpose(), h))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicityReport {
    pub nhat: [f64; 3],
    /// Eigenvalues of B = (B⁰)⁻¹ ñ_i B^i, ascending.
    pub eigenvalues: Vec<f64>,
    pub max_abs: f64,
    /// ‖VᵀV − I‖_max for the eigenvectors of the symmetric form.
    pub orthogonality_residual: f64,
    /// ‖B R − R Λ‖_max / ‖B‖_max for the eigenvectors R = D⁻¹X of B.
    pub eigen_residual: f64,
    /// Smallest gap between consecutive eigenvalues.
    pub min_gap: f64,
}

impl HyperbolicityReport {
    pub fn strictly_hyperbolic(&self, tol: f64) -> bool {
        self.min_gap > tol
    }
}

/// Real diagonalizability of (B⁰)⁻¹ñ_iB^i through the congruent symmetric
/// matrix (M⁰)^{−1/2} ñ_iM^i (M⁰)^{−1/2}.
pub fn certify_hyperbolic(sys: &SystemMatrices, nhat: [f64; 3]) -> Result<HyperbolicityReport> {
    let norm = (nhat[0] * nhat[0] + nhat[1] * nhat[1] + nhat[2] * nhat[2]).sqrt();
    if !((norm - 1.0).abs() < 1e-12) {
        return Err(Error::domain(format!("direction must be a unit vector, |n| = {norm}")));
    }
    let mn = &sys.m[1] * nhat[0] + &sys.m[2] * nhat[1] + &sys.m[3] * nhat[2];
    let (lt, h) = congruence(&sys.m[0], &mn)?;
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let n = v.nrows();
    let orth = (v.transpose() * v - DMatrix::identity(n, n)).amax();
    let x = lt
        .solve_upper_triangular(v)
        .ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let r = sys.d.clone().lu().solve(&x).ok_or_else(|| Error::numerical("D is singular"))?;
    let bn = &sys.b[1] * nhat[0] + &sys.b[2] * nhat[1] + &sys.b[3] * nhat[2];
    let b = sys.b[0].clone().lu().solve(&bn).ok_or_else(|| Error::numerical("B0 is singular"))?;
    let lam = DMatrix::from_diagonal(&eig.eigenvalues);
    let eigen_residual = (&b * &r - &r * lam).amax() / (b.amax() * r.amax()).max(f64::MIN_POSITIVE);
    let mut ev = eig.eigenvalues.as_slice().to_vec();
    ev.sort_by(f64::total_cmp);
    let max_abs = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_gap = ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(HyperbolicityReport { nhat, eigenvalues: ev, max_abs, orthogonality_residual: orth, eigen_residual, min_gap })
}

/// Q = S′D⁻¹ at equilibrium, S′ = −(1/τ)A⁰D̃^W.
pub fn collision_matrix(sys: &SystemMatrices, tau: f64) -> Result<DMatrix<f64>> {
    let sp = sys.source_jacobian_eq(tau);
    let dinv = sys.d.clone().try_inverse().ok_or_else(|| Error::numerical("D is singular"))?;
    Ok(sp * dinv)
}

/// Linearization at one equilibrium, reused across wave vectors.
#[derive(Clone, Debug)]
pub struct Dispersion {
    m: [DMatrix<f64>; 3],
    q: DMatrix<f64>,
}

impl Dispersion {
    /// Requires W to be an equilibrium (Π and all higher entries zero).
    pub fn new(sys: &SystemMatrices, w: &[f64], tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("relaxation time must be positive, got {tau}")));
        }
        if w[W_PI..].iter().any(|v| *v != 0.0) {
            return Err(Error::contract("stability is defined at equilibrium only (Pi and higher entries must vanish)"));
        }
        let chol = sys.m[0].clone().cholesky().ok_or_else(|| Error::numerical("M0 is not positive definite"))?;
        let l = chol.l();
        let conj = |a: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let x = l.solve_lower_triangular(a).ok_or_else(|| Error::numerical("triangular solve failed"))?;
            l.solve_lower_triangular(&x.transpose())
                .ok_or_else(|| Error::numerical("triangular solve failed"))
                .map(|h| h.transpose())
        };
        let m = [conj(&sys.m[1])?, conj(&sys.m[2])?, conj(&sys.m[3])?];
        let q = conj(&collision_matrix(sys, tau)?)?;
        Ok(Dispersion { m, q })
    }

    /// Q̂ = (M⁰)^{−1/2} Q (M⁰)^{−1/2} in the Cholesky frame.
    pub fn collision_frame(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Frequencies ω with (iωB⁰ − ik_jB^j − Q)W̃ = 0, i.e. the eigenvalues of
    /// (M⁰)^{−1/2}(k_jM^j − iQ)(M⁰)^{−1/2}.
    pub fn omegas(&self, k: [f64; 3]) -> Result<Vec<Complex<f64>>> {
        let n = self.q.nrows();
        let h = &self.m[0] * k[0] + &self.m[1] * k[1] + &self.m[2] * k[2];
        let c = DMatrix::from_fn(n, n, |i, j| Complex::new(h[(i, j)], -self.q[(i, j)]));
        complex_eigenvalues(c)
    }

    pub fn dimension(&self) -> usize {
        self.q.nrows()
    }
}

/// Eigenvalues of a general complex matrix by complex Schur.
pub fn complex_eigenvalues(c: DMatrix<Complex<f64>>) -> Result<Vec<Complex<f64>>> {
    let n = c.nrows();
    let schur = Schur::try_new(c, 1e-15, 100 * n.max(10)).ok_or_else(|| Error::numerical("complex Schur did not converge"))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityScan {
    pub ks: Vec<[f64; 3]>,
    pub omegas: Vec<Vec<Complex<f64>>>,
    pub min_im: f64,
}

/// Dispersion relation over a set of wave vectors at the equilibrium of `state`.
pub fn stability_scan(order: usize, state: &FluidState, ks: &[[f64; 3]], tau: f64) -> Result<StabilityScan> {
    let w = equilibrium_w(order, state);
    let sys = assemble(order, &w)?;
    let disp = Dispersion::new(&sys, &w, tau)?;
    let mut omegas = Vec::with_capacity(ks.len());
    let mut min_im = f64::INFINITY;
    for k in ks {
        let om = disp.omegas(*k)?;
        min_im = om.iter().fold(min_im, |a, w| a.min(w.im));
        omegas.push(om);
    }
    Ok(StabilityScan { ks: ks.to_vec(), omegas, min_im })
}

/// Wave vectors |k| log-spaced over [k_min, k_max] along each direction.
pub fn k_grid(k_min: f64, k_max: f64, count: usize, directions: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(count * directions.len());
    for d in directions {
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        for i in 0..count {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let k = k_min * (k_max / k_min).powf(t);
            out.push(d.map(|c| c / r * k));
        }
    }
    out
}

/// Number of |ω| below `tol`.
pub fn zero_modes(omegas: &[Complex<f64>], tol: f64) -> usize {
    omegas.iter().filter(|w| w.norm() < tol).count()
}

/// Residual vector B́⁰∂_tẂ + B́³∂_xẂ − Ś of the quasi-1D system.
pub fn quasi1d_residual(order: usize, wq: &[f64], dt: &[f64], dx: &[f64], tau: f64) -> Result<Vec<f64>> {
    let r = Reduced::new(order, wq, Precision::Extended)?;
    let lhs = &r.b0 * DVector::from_column_slice(dt) + &r.b3 * DVector::from_column_slice(dx);
    Ok(lhs.iter().zip(r.source(tau)).map(|(a, s)| a - s).collect())
}

/// Largest difference between the quasi-1D residual evaluated in the lab
/// frame and in a frame boosted by `v` along x³, relative to the size of the
/// individual terms. Only u changes under the boost; its derivatives pick up
/// du′/du, and (∂_t, ∂_x) mix as γ(∂_t + v∂_x), γ(∂_x + v∂_t).
pub fn covariance_residual(order: usize, v: f64, wq: &[f64], dt: &[f64], dx: &[f64], tau: f64) -> Result<f64> {
    let boost = Boost::new(v)?;
    let u = wq[1];
    let jac = boost.velocity_jacobian(u);
    let mut wp = wq.to_vec();
    wp[1] = boost.velocity(u);
    let (mut dtp, mut dxp) = (vec![0.0; wq.len()], vec![0.0; wq.len()]);
    for j in 0..wq.len() {
        let (a, b) = boost.derivatives(dt[j], dx[j]);
        let scale = if j == 1 { jac } else { 1.0 };
        dtp[j] = a * scale;
        dxp[j] = b * scale;
    }
    let r = quasi1d_residual(order, wq, dt, dx, tau)?;
    let rp = quasi1d_residual(order, &wp, &dtp, &dxp, tau)?;
    let red = Reduced::new(order, wq, Precision::Extended)?;
    let terms = (&red.b0 * DVector::from_column_slice(dt)).amax()
        + (&red.b3 * DVector::from_column_slice(dx)).amax()
        + red.source(tau).iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let diff = r.iter().zip(&rp).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(diff / terms.max(f64::MIN_POSITIVE))
}
