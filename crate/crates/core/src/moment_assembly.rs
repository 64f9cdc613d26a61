//! The moment system B^α ∂W/∂x^α = S(W) for the Anderson–Witting model.
//!
//! Layout of W (length N_M): (n, u₁, u₂, u₃, θ, Π, f̃_{0,−1}^(1), f̃_{0,0}^(1),
//! f̃_{0,1}^(1), then the coefficients f_{k,m}^(ℓ) of degree ≥ 2 other than
//! f_{2,0}^(0) and f_{1,m}^(1)), so W[j] and f[j] share positions for j ≥ 9.
//! For M = 1, W = (n, u, θ). Coefficient vectors f are degree-major.

use nalgebra::{DMatrix, DVector};

use crate::basis::{degree_major, n_moments, Basis, BasisIndex, Param};
use crate::error::{Error, Result};
use crate::frame_kinematics::{FluidState, MomentPair};
use crate::harmonics;
use crate::orthopoly::{FamilySet, Precision};

pub const W_N: usize = 0;
pub const W_U: usize = 1;
pub const W_THETA: usize = 4;
pub const W_PI: usize = 5;
pub const W_FT: usize = 6;

/// Primitive state carried by W; errors if it is not admissible.
pub fn state_of(w: &[f64]) -> Result<FluidState> {
    if w.len() < 5 {
        return Err(Error::contract("moment vector shorter than 5"));
    }
    let s = FluidState::new(w[W_N], [w[1], w[2], w[3]], w[W_THETA]).map_err(|e| Error::Inadmissible(e.to_string()))?;
    if w.len() > W_PI && !(w[W_PI] > -s.n * s.theta) {
        return Err(Error::inadmissible(format!("bulk pressure {} violates Pi > -n theta = {}", w[W_PI], -s.n * s.theta)));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::inadmissible("moment vector has non-finite entries"));
    }
    Ok(s)
}

/// W of the Jüttner distribution with the given primitives.
pub fn equilibrium_w(order: usize, s: &FluidState) -> Vec<f64> {
    let mut w = vec![0.0; n_moments(order)];
    w[W_N] = s.n;
    w[1..4].copy_from_slice(&s.u);
    w[W_THETA] = s.theta;
    w
}

fn pos(ell: usize, m: i64, k: usize) -> usize {
    BasisIndex::new(ell, m, k).position()
}

/// The θ-dependent constants of D^W and their θ-derivatives. Every one is a
/// value P_k^(ℓ)(0), so the derivative follows from ∂P_k/∂ζ.
#[derive(Clone, Copy, Debug)]
struct DwConsts {
    // 1/c_0^(0)
    inv_c0: (f64, f64),
    // −3 c_0^(0)
    f000_pi: (f64, f64),
    // −3 P_1^(0)(0) = 3 c_1^(0) x_{1,1}^(0)
    f010_pi: (f64, f64),
    // c_0^(1)
    f1_ft: (f64, f64),
    // −3 P_2^(0)(0) = −3 c_2^(0) x_{1,2}^(0) x_{2,2}^(0)
    f020_pi: (f64, f64),
    // P_1^(1)(0) = −c_1^(1) x_{1,1}^(1)
    f11_ft: (f64, f64),
}

fn dw_consts(fams: &FamilySet, g: f64) -> DwConsts {
    let z = fams.zeta;
    let dth = -z * z; // d/dθ = −ζ² d/dζ
    let (p0, d0) = (fams.fams[0].eval_upto(2, 0.0), fams.fams[0].d_dzeta_upto(2, 0.0, g));
    let (p1, d1) = (fams.fams[1].eval_upto(1, 0.0), fams.fams[1].d_dzeta_upto(1, 0.0, g));
    DwConsts {
        inv_c0: (1.0 / p0[0], -dth * d0[0] / (p0[0] * p0[0])),
        f000_pi: (-3.0 * p0[0], -3.0 * dth * d0[0]),
        f010_pi: (-3.0 * p0[1], -3.0 * dth * d0[1]),
        f1_ft: (p1[0], dth * d1[0]),
        f020_pi: (-3.0 * p0[2], -3.0 * dth * d0[2]),
        f11_ft: (p1[1], dth * d1[1]),
    }
}

/// (D^W, ∂D^W/∂θ) with rows in f order and columns in W order.
fn dw_pair(order: usize, fams: &FamilySet, g: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = n_moments(order);
    let c = dw_consts(fams, g);
    let mut dw = DMatrix::zeros(n, n);
    let mut dd = DMatrix::zeros(n, n);
    let mut set = |r: usize, col: usize, v: (f64, f64)| {
        dw[(r, col)] = v.0;
        dd[(r, col)] = v.1;
    };
    set(0, W_N, c.inv_c0);
    if order >= 2 {
        set(0, W_PI, c.f000_pi);
        set(1, W_PI, c.f010_pi);
        set(pos(0, 0, 2), W_PI, c.f020_pi);
        for m in -1i64..=1 {
            let col = W_FT + (m + 1) as usize;
            set(pos(1, m, 0), col, c.f1_ft);
            set(pos(1, m, 1), col, c.f11_ft);
        }
        for j in n_moments(1) + 4..n {
            dw[(j, j)] = 1.0;
        }
    }
    (dw, dd)
}

/// D^W(θ): f = D^W W.
pub fn build_dw(order: usize, s: &FluidState) -> Result<DMatrix<f64>> {
    let b = Basis::new(order, s)?;
    Ok(dw_pair(order, &b.families, b.g).0)
}

/// Recurrence matrices in degree-major order: index 0 multiplies by E, index
/// 1 + a by √(E²−1) ω_a, so that p^α = U^α E + Σ_a n_a^α √(E²−1) ω_a gives
/// M^α = U^α A^0 + Σ_a n_a^α A^{1+a}.
pub fn build_a(order: usize, fams: &FamilySet) -> Result<[DMatrix<f64>; 4]> {
    if fams.fams.len() < order + 2 || fams.fams[0].degree() < order + 1 {
        return Err(Error::contract(format!("families do not cover order {order}")));
    }
    let n = n_moments(order);
    let mut a: [DMatrix<f64>; 4] = std::array::from_fn(|_| DMatrix::zeros(n, n));
    let idxs = degree_major(order);
    let put = |mat: &mut DMatrix<f64>, src: usize, ell: i64, k: i64, m: i64, v: f64| {
        if ell < 0 || k < 0 || (ell + k) as usize > order {
            return;
        }
        mat[(pos(ell as usize, m, k as usize), src)] += v;
    };
    for (src, idx) in idxs.iter().enumerate() {
        let (l, m, k) = (idx.ell as i64, idx.m, idx.k as i64);
        let ku = idx.k;
        let f = &fams.fams[idx.ell];
        if ku > 0 {
            put(&mut a[0], src, l, k - 1, m, f.a[ku - 1]);
        }
        put(&mut a[0], src, l, k, m, f.b[ku]);
        put(&mut a[0], src, l, k + 1, m, f.a[ku]);
        for dir in 0..3 {
            for (big_l, big_m, c) in harmonics::direction_times(dir, l, m) {
                let mat = &mut a[1 + dir];
                if big_l == l + 1 {
                    // P_k^(ℓ) = r_{k−1} P_{k−2}^(ℓ+1) + q_{k−1} P_{k−1}^(ℓ+1) + p_k P_k^(ℓ+1)
                    let x = &fams.cross[idx.ell + 1];
                    if ku >= 2 {
                        put(mat, src, big_l, k - 2, big_m, c * x.r[ku - 1]);
                    }
                    if ku >= 1 {
                        put(mat, src, big_l, k - 1, big_m, c * x.q[ku - 1]);
                    }
                    put(mat, src, big_l, k, big_m, c * x.p[ku]);
                } else {
                    // (x²−1) P_k^(ℓ) = (p_k P_k^(ℓ−1) + q_k P_{k+1}^(ℓ−1) + r_{k+1} P_{k+2}^(ℓ−1)) / f
                    let x = &fams.cross[idx.ell];
                    let fi = (2.0 * l as f64 + 1.0) / (2.0 * l as f64 - 1.0);
                    put(mat, src, big_l, k, big_m, c * fi * x.p[ku]);
                    put(mat, src, big_l, k + 1, big_m, c * fi * x.q[ku]);
                    put(mat, src, big_l, k + 2, big_m, c * fi * x.r[ku + 1]);
                }
            }
        }
    }
    Ok(a)
}

/// Convection matrices M^α = <p^α P̃, P̃ᵀ> from the recurrence matrices.
pub fn build_m(basis: &Basis, a: &[DMatrix<f64>; 4]) -> [DMatrix<f64>; 4] {
    std::array::from_fn(|alpha| {
        let mut m = &a[0] * basis.uu[alpha];
        for dir in 0..3 {
            m += &a[1 + dir] * basis.tetrad.n[dir][alpha];
        }
        m
    })
}

/// Projection onto degree ≤ M of Σ_i f_i ∂P̃_i/∂param.
fn gamma(basis: &Basis, f: &[f64], param: Param) -> DVector<f64> {
    let n = basis.len();
    let mut out = DVector::zeros(n);
    for (i, idx) in degree_major(basis.order).iter().enumerate() {
        if f[i] == 0.0 {
            continue;
        }
        for (j, c) in basis.derivative_terms(*idx, param) {
            if j.degree() <= basis.order {
                out[j.position()] += c * f[i];
            }
        }
    }
    out
}

/// D with ∂f/∂s = D ∂W/∂s for the projected distribution Σ f_i P̃_i[u, θ]:
/// the D^W part plus the change of the basis with (u, θ).
fn build_d_with(basis: &Basis, w: &[f64], dw: &DMatrix<f64>, dwdth: &DMatrix<f64>) -> DMatrix<f64> {
    let wv = DVector::from_column_slice(w);
    let f = dw * &wv;
    let mut d = dw.clone();
    let dth = dwdth * &wv;
    let mut add_col = |j: usize, v: DVector<f64>| {
        for r in 0..v.len() {
            d[(r, j)] += v[r];
        }
    };
    for i in 0..3 {
        add_col(W_U + i, gamma(basis, f.as_slice(), Param::U(i)));
    }
    add_col(W_THETA, gamma(basis, f.as_slice(), Param::Theta) + dth);
    d
}

/// All matrices of the order-M system at W.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub order: usize,
    pub state: FluidState,
    /// Recurrence matrices (E, √(E²−1) ω_1..3) in degree-major order.
    pub a: [DMatrix<f64>; 4],
    pub m: [DMatrix<f64>; 4],
    pub dw: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub b: [DMatrix<f64>; 4],
    pub basis: Basis,
}

/// Assemble everything at W.
pub fn assemble(order: usize, w: &[f64]) -> Result<SystemMatrices> {
    assemble_with(order, w, Precision::Extended)
}

pub fn assemble_with(order: usize, w: &[f64], prec: Precision) -> Result<SystemMatrices> {
    if w.len() != n_moments(order) {
        return Err(Error::contract(format!("W has length {}, expected {}", w.len(), n_moments(order))));
    }
    let s = state_of(w)?;
    let basis = Basis::with_precision(order, &s, prec)?;
    let a = build_a(order, &basis.families)?;
    let m = build_m(&basis, &a);
    let (dw, dwdth) = dw_pair(order, &basis.families, basis.g);
    let d = build_d_with(&basis, w, &dw, &dwdth);
    let sv = d.clone().singular_values();
    let (smin, smax) = (sv.min(), sv.max());
    if !(smin > 1e-13 * smax) {
        return Err(Error::inadmissible(format!("variable-change matrix D is singular (sigma ratio {:e})", smin / smax)));
    }
    let b = std::array::from_fn(|alpha| &m[alpha] * &d);
    Ok(SystemMatrices { order, state: s, a, m, dw, d, b, basis })
}

impl SystemMatrices {
    /// D̃^W: D^W with its upper-left entry zeroed, so D̃^W W = f − f^(0).
    pub fn dw_tilde(&self) -> DMatrix<f64> {
        let mut t = self.dw.clone();
        t[(0, 0)] = 0.0;
        t
    }

    /// S = −(1/τ) A^0 D̃^W W.
    pub fn source(&self, w: &[f64], tau: f64) -> Result<Vec<f64>> {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("relaxation time must be positive, got {tau}")));
        }
        let s = &self.a[0] * (self.dw_tilde() * DVector::from_column_slice(w)) * (-1.0 / tau);
        Ok(s.as_slice().to_vec())
    }

    /// ∂S/∂W at an equilibrium W: −(1/τ) A^0 D̃^W.
    pub fn source_jacobian_eq(&self, tau: f64) -> DMatrix<f64> {
        &self.a[0] * self.dw_tilde() * (-1.0 / tau)
    }

    /// det D.
    pub fn det_d(&self) -> f64 {
        self.d.determinant()
    }
}

/// det D_1 = −n⁴ζ² (c_0^(1))³ (U⁰)⁴ / (c_0^(0) c_1^(0)).
pub fn det_d1_closed_form(s: &FluidState) -> Result<f64> {
    let fams = FamilySet::new(s.zeta(), 1, 1)?;
    let (f0, f1) = (&fams.fams[0], &fams.fams[1]);
    let z = s.zeta();
    Ok(-s.n.powi(4) * z * z * f1.c[0].powi(3) * s.gamma().powi(4) / (f0.c[0] * f0.c[1]))
}

/// det D_M for W whose entries past Π vanish:
/// −3 P_2^(0)(0) nζ²/(c_0^(0) c_1^(0)) (U⁰ c_0^(1) c_1^(1))³ (nG + Π)³ U⁰.
/// Uses x_{1,1}^(1) = G.
pub fn det_d2_closed_form(s: &FluidState, pi: f64) -> Result<f64> {
    let fams = FamilySet::new(s.zeta(), 1, 3)?;
    let (f0, f1) = (&fams.fams[0], &fams.fams[1]);
    let z = s.zeta();
    let g = crate::special_functions::g_ratio(z)?;
    let u0 = s.gamma();
    let p20 = f0.eval_upto(2, 0.0)[2];
    Ok(-3.0 * p20 * s.n * z * z / (f0.c[0] * f0.c[1]) * (u0 * f1.c[0] * f1.c[1] * (s.n * g + pi)).powi(3) * u0)
}

/// N^α and T^{αβ} of the projected distribution with coefficients f = D^W W.
/// Uses g⁰ = P̃_0/c_0 and p^β g⁰ ∈ span of degree ≤ 1, so the result is exact.
pub fn moments_of(sys: &SystemMatrices, w: &[f64]) -> MomentPair {
    let f = &sys.dw * DVector::from_column_slice(w);
    let c0 = sys.basis.families.fams[0].c[0];
    let mf: Vec<DVector<f64>> = sys.m.iter().map(|m| m * &f).collect();
    let mut out = MomentPair { n: [0.0; 4], t: [[0.0; 4]; 4] };
    for alpha in 0..4 {
        out.n[alpha] = mf[alpha][0] / c0;
        for beta in 0..4 {
            out.t[alpha][beta] = (0..n_moments(1)).map(|j| sys.m[beta][(j, 0)] * mf[alpha][j]).sum::<f64>() / c0;
        }
    }
    out
}
