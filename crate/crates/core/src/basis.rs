//! The weighted basis P̃_{k,m}^(ℓ)[u, θ](p) = g⁰ P_k^(ℓ)(E; ζ) (E²−1)^{ℓ/2} Y_{ℓ,m}(y, φ)
//! with g⁰ = ζ e^{−ζE} / (4π K_2(ζ)), its index layouts, exact quadrature for
//! the inner product <f, g> = ∫ f g / g⁰ d³p/p⁰, projection, and the expansion
//! of ∂P̃/∂u_i and ∂P̃/∂θ in the basis.
//!
//! Canonical storage is degree-major: groups of equal ℓ + k ascending, inside a
//! group ℓ ascending, then m ascending.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame_kinematics::{direction, four_velocity, internal_to_p, p_to_internal, tetrad, FluidState, Tetrad, Vec4};
use crate::harmonics;
use crate::orthopoly::{FamilySet, PolyFamily, Precision};
use crate::quadrature::gauss_legendre;
use crate::special_functions::{bessel_k_scaled, g_ratio};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub ell: usize,
    pub m: i64,
    pub k: usize,
}

impl BasisIndex {
    pub fn new(ell: usize, m: i64, k: usize) -> Self {
        debug_assert!(m.unsigned_abs() as usize <= ell);
        BasisIndex { ell, m, k }
    }

    pub fn degree(&self) -> usize {
        self.ell + self.k
    }

    /// Position in degree-major order (independent of the truncation order).
    pub fn position(&self) -> usize {
        let d = self.degree();
        let within = (self.ell * self.ell + self.ell) as i64 + self.m;
        d * (d + 1) * (2 * d + 1) / 6 + within as usize
    }
}

/// N_M = Σ_{ℓ≤M} (2ℓ+1)(M+1−ℓ) = (M+1)(M+2)(2M+3)/6.
pub fn n_moments(order: usize) -> usize {
    (order + 1) * (order + 2) * (2 * order + 3) / 6
}

/// All indices with ℓ + k ≤ M in degree-major order.
pub fn degree_major(order: usize) -> Vec<BasisIndex> {
    let mut out = Vec::with_capacity(n_moments(order));
    for d in 0..=order {
        for ell in 0..=d {
            for m in -(ell as i64)..=ell as i64 {
                out.push(BasisIndex::new(ell, m, d - ell));
            }
        }
    }
    out
}

/// All indices with ℓ + k ≤ M grouped by (m, ℓ), k ascending inside a group.
pub fn block_order(order: usize) -> Vec<BasisIndex> {
    let mo = order as i64;
    let mut out = Vec::with_capacity(n_moments(order));
    for m in -mo..=mo {
        for ell in m.unsigned_abs() as usize..=order {
            for k in 0..=order - ell {
                out.push(BasisIndex::new(ell, m, k));
            }
        }
    }
    out
}

/// perm[i] = degree-major position of the i-th block-order index.
pub fn block_permutation(order: usize) -> Vec<usize> {
    block_order(order).iter().map(|i| i.position()).collect()
}

/// One node of the tensor rule, weight normalized so that Σ w F = ∫ F ω^(0) dE dΩ / 4π.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub e: f64,
    pub y: f64,
    pub phi: f64,
    pub w: f64,
    pub p: [f64; 3],
}

/// Which primitive a basis derivative is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    U(usize),
    Theta,
}

/// Basis of order M attached to a state (u, θ).
#[derive(Clone, Debug)]
pub struct Basis {
    pub order: usize,
    pub state: FluidState,
    pub zeta: f64,
    /// G(ζ) = K_3/K_2.
    pub g: f64,
    pub families: FamilySet,
    pub tetrad: Tetrad,
    pub uu: Vec4,
}

impl Basis {
    pub fn new(order: usize, state: &FluidState) -> Result<Self> {
        Self::with_precision(order, state, Precision::Extended)
    }

    pub fn with_precision(order: usize, state: &FluidState, prec: Precision) -> Result<Self> {
        if order < 1 {
            return Err(Error::contract("basis order must be at least 1"));
        }
        let zeta = state.zeta();
        let families = FamilySet::with_precision(zeta, order + 1, order + 3, prec)?;
        Ok(Basis {
            order,
            state: *state,
            zeta,
            g: g_ratio(zeta)?,
            families,
            tetrad: tetrad(&state.u)?,
            uu: four_velocity(&state.u),
        })
    }

    pub fn len(&self) -> usize {
        n_moments(self.order)
    }

    /// g⁰(E).
    pub fn g0(&self, e: f64) -> f64 {
        let k2s = bessel_k_scaled(2, self.zeta).unwrap_or(f64::NAN);
        self.zeta / (4.0 * PI * k2s) * (-self.zeta * (e - 1.0)).exp()
    }

    /// P_k^(ℓ)(E)(E²−1)^{ℓ/2} Y_{ℓ,m}(y, φ) for every index of degree ≤ d, in
    /// degree-major order. d may reach M+1.
    pub fn reduced_upto(&self, d: usize, e: f64, y: f64, phi: f64) -> Vec<f64> {
        assert!(d <= self.order + 1, "degree {d} beyond basis data");
        let ys = harmonics::eval_all(d, y.clamp(-1.0, 1.0), phi).expect("y clamped");
        let s = (e * e - 1.0).max(0.0).sqrt();
        let mut out = vec![0.0; n_moments(d)];
        let mut sp = 1.0;
        for ell in 0..=d {
            let p = self.families.fams[ell].eval_upto(d - ell, e);
            for k in 0..=d - ell {
                for m in -(ell as i64)..=ell as i64 {
                    out[BasisIndex::new(ell, m, k).position()] = p[k] * sp * ys[harmonics::lm_index(ell, m)];
                }
            }
            sp *= s;
        }
        out
    }

    /// All basis functions of degree ≤ M at a momentum.
    pub fn eval_all(&self, p3: &[f64; 3]) -> Result<Vec<f64>> {
        let (e, y, phi) = p_to_internal(p3, &self.state.u)?;
        let g0 = self.g0(e);
        Ok(self.reduced_upto(self.order, e, y, phi).into_iter().map(|v| v * g0).collect())
    }

    pub fn eval(&self, idx: BasisIndex, p3: &[f64; 3]) -> Result<f64> {
        if idx.degree() > self.order + 1 {
            return Err(Error::contract(format!("index {idx:?} beyond order {}", self.order)));
        }
        let (e, y, phi) = p_to_internal(p3, &self.state.u)?;
        Ok(self.g0(e) * self.reduced_upto(idx.degree(), e, y, phi)[idx.position()])
    }

    /// Tensor rule exact for ∫ g⁰ × (polynomial of degree ≤ 2d+1 in p) d³p/p⁰:
    /// 2d+2 Gauss nodes of ω^(0) in E, d+2 Gauss–Legendre nodes in y and
    /// 2d+3 trapezoid nodes in φ.
    pub fn rule(&self, d: usize) -> Result<Vec<Node>> {
        let ne = 2 * d + 2;
        let fam = PolyFamily::new(0, self.zeta, ne)?;
        let (es, we) = fam.gauss_rule(ne)?;
        let (ys, wy) = gauss_legendre(d + 2);
        let nphi = 2 * d + 3;
        let mut nodes = Vec::with_capacity(ne * ys.len() * nphi);
        for (e, a) in es.iter().zip(&we) {
            for (y, b) in ys.iter().zip(&wy) {
                for j in 0..nphi {
                    let phi = 2.0 * PI * j as f64 / nphi as f64;
                    let w = a * b * (2.0 * PI / nphi as f64) / (4.0 * PI);
                    nodes.push(Node { e: *e, y: *y, phi, w, p: internal_to_p(*e, *y, phi, &self.state.u)? });
                }
            }
        }
        Ok(nodes)
    }

    /// p^α at a node, contravariant.
    pub fn momentum(&self, node: &Node) -> Vec4 {
        let s = (node.e * node.e - 1.0).max(0.0).sqrt();
        let w = direction(node.y, node.phi);
        let mut p = [0.0; 4];
        for (a, pa) in p.iter_mut().enumerate() {
            *pa = self.uu[a] * node.e + s * (0..3).map(|b| w[b] * self.tetrad.n[b][a]).sum::<f64>();
        }
        p
    }

    /// Gram matrix <P̃_i, P̃_j> by the exact rule.
    pub fn gram(&self) -> Result<DMatrix<f64>> {
        self.weighted_gram(|_| 1.0)
    }

    /// <p^α P̃_i, P̃_j> by the exact rule.
    pub fn moment_gram(&self, alpha: usize) -> Result<DMatrix<f64>> {
        self.weighted_gram(|p| p[alpha])
    }

    fn weighted_gram(&self, wf: impl Fn(&Vec4) -> f64) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut g = DMatrix::zeros(n, n);
        for node in self.rule(self.order)? {
            let r = self.reduced_upto(self.order, node.e, node.y, node.phi);
            let s = node.w * wf(&self.momentum(&node));
            for i in 0..n {
                let ri = s * r[i];
                for j in 0..n {
                    g[(i, j)] += ri * r[j];
                }
            }
        }
        Ok(g)
    }

    /// Coefficients <f, P̃_i> of Π_M f, where `h(node)` returns f/g⁰ at the node's
    /// momentum. Exact when f/g⁰ is a polynomial of degree ≤ `d` + 1 in p.
    pub fn project_reduced(&self, d: usize, h: impl Fn(&Node) -> f64) -> Result<Vec<f64>> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for node in self.rule(d.max(self.order))? {
            let r = self.reduced_upto(self.order, node.e, node.y, node.phi);
            let v = node.w * h(&node);
            for i in 0..n {
                out[i] += v * r[i];
            }
        }
        Ok(out)
    }

    /// Coefficients of Π_M f for a function of the 3-momentum.
    pub fn project(&self, f: impl Fn(&[f64; 3]) -> f64) -> Result<Vec<f64>> {
        self.project_reduced(self.order, |node| f(&node.p) / self.g0(node.e))
    }

    /// Expansion of ∂P̃_idx/∂u_i or ∂P̃_idx/∂θ in basis functions of the same
    /// state. Terms reach degree idx.degree() + 1.
    pub fn derivative_terms(&self, idx: BasisIndex, param: Param) -> Vec<(BasisIndex, f64)> {
        let mut acc: BTreeMap<BasisIndex, f64> = BTreeMap::new();
        let mut add = |ell: i64, k: i64, m: i64, c: f64| {
            if ell >= 0 && k >= 0 && m.abs() <= ell && c != 0.0 {
                *acc.entry(BasisIndex::new(ell as usize, m, k as usize)).or_insert(0.0) += c;
            }
        };
        let (l, m, k) = (idx.ell as i64, idx.m, idx.k as i64);
        let z = self.zeta;
        match param {
            Param::Theta => {
                let f = &self.families.fams[idx.ell];
                add(l, k, m, -z * z * 0.5 * (self.g - 1.0 / z - f.b[idx.k]));
                add(l, k + 1, m, z * z * f.a[idx.k]);
            }
            Param::U(i) => {
                let u0 = self.uu[0];
                let lf = l as f64;
                let kf = k as f64;
                let ku = idx.k;
                // boost of the rest frame: change of E and of the direction
                for a in 0..3 {
                    let w = -u0 * self.tetrad.n[a][i + 1];
                    if w == 0.0 {
                        continue;
                    }
                    for (big_l, big_m, c) in harmonics::direction_times(a, l, m) {
                        if big_l == l + 1 {
                            let x = &self.families.cross[idx.ell + 1];
                            if ku >= 1 {
                                let v = (2.0 * lf + 1.0) / (2.0 * lf + 3.0) * kf / x.ptilde[ku - 1] - z * x.q[ku - 1];
                                add(big_l, k - 1, big_m, w * c * v);
                            }
                            add(big_l, k, big_m, w * c * (-z * x.p[ku]));
                        } else {
                            let x = &self.families.cross[idx.ell];
                            let fi = (2.0 * lf + 1.0) / (2.0 * lf - 1.0);
                            add(big_l, k + 1, big_m, w * c * fi * ((kf + 2.0 * lf + 1.0) * x.ptilde[ku] - z * x.q[ku]));
                            add(big_l, k + 2, big_m, w * c * fi * (-z * x.r[ku + 1]));
                        }
                    }
                }
                // rotation of the triad
                let gq = u0 / (u0 + 1.0);
                for b in 0..3 {
                    for c in b + 1..3 {
                        let be = gq
                            * (if c == i { self.uu[b + 1] } else { 0.0 } - if b == i { self.uu[c + 1] } else { 0.0 });
                        if be == 0.0 {
                            continue;
                        }
                        for (mm, v) in rotation_terms(b, c, l, m) {
                            add(l, k, mm, be * v);
                        }
                    }
                }
            }
        }
        acc.into_iter().filter(|(_, c)| *c != 0.0).collect()
    }
}

/// (ω_c ∂_{ω_b} − ω_b ∂_{ω_c}) Y_{ℓ,m} expanded in degree-ℓ harmonics, built
/// from the direction products: the generator equals (2ℓ+1) times the
/// degree-(ℓ−1) part of ω_b Y followed by multiplication with ω_c, antisymmetrized.
fn rotation_terms(b: usize, c: usize, l: i64, m: i64) -> Vec<(i64, f64)> {
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for (bb, cc, sg) in [(b, c, 1.0), (c, b, -1.0)] {
        for (l1, m1, c1) in harmonics::direction_times(bb, l, m) {
            if l1 != l - 1 {
                continue;
            }
            for (l2, m2, c2) in harmonics::direction_times(cc, l1, m1) {
                if l2 == l {
                    *acc.entry(m2).or_insert(0.0) += sg * (2 * l + 1) as f64 * c1 * c2;
                }
            }
        }
    }
    acc.into_iter().filter(|(_, v)| v.abs() > 1e-15).collect()
}
