//! Orthonormal polynomial families P_k^(ℓ)(x; ζ) on [1, ∞) with weight
//!
//! ω^(ℓ)(x; ζ) = ζ (x² − 1)^{ℓ+1/2} e^{−ζx} / ((2ℓ+1) K_2(ζ)),
//!
//! their recurrence coefficients, zeros, the couplings between families ℓ and
//! ℓ−1, and derivative relations in x and ζ.
//!
//! Recurrence coefficients are produced by a Stieltjes procedure run in
//! double-double on a trapezoid discretization of the weight in t (x = cosh t).
//! The integrand is analytic and decays doubly exponentially in t, so the
//! discretization converges geometrically and is far more accurate than the
//! coefficients we emit. The Chebyshev algorithm on closed-form Bessel moments is
//! available as an independent route and is used for cross-checking.

use nalgebra::DMatrix;

use crate::dd::DD;
use crate::error::{Error, Result};
use crate::quadrature;
use crate::special_functions::{bessel_k_scaled, bessel_k_scaled_seq_dd, g_ratio, NU_MAX};

/// Recurrence data of one family for fixed (ℓ, ζ), degrees 0..=K.
///
/// `a[k]`, `b[k]` for k = 0..=K, so the Jacobi matrix J_K (and the zeros of
/// P_{K+1}) are available; `c[k]` is the leading coefficient of P_k.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFamily {
    pub ell: usize,
    pub zeta: f64,
    pub mu0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Couplings between family ℓ and family ℓ−1, indexed by k.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossCoeffs {
    pub ell: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub ptilde: Vec<f64>,
    pub qtilde: Vec<f64>,
    pub rtilde: Vec<f64>,
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::domain(format!("zeta must be positive and finite, got {zeta}")));
    }
    Ok(())
}

/// Orthonormal Stieltjes procedure on a discrete measure. `x` holds node
/// positions relative to `shift`, which keeps the nodes near x = 1 accurate.
fn discrete_stieltjes(x: &[DD], w: &[DD], shift: f64, k_max: usize) -> Result<(DD, Vec<f64>, Vec<f64>)> {
    let mu0: DD = w.iter().copied().sum();
    let norm0 = mu0.sqrt().recip();
    let mut p = vec![norm0; x.len()];
    let mut prev = vec![DD::ZERO; x.len()];
    let mut a = Vec::with_capacity(k_max + 1);
    let mut b = Vec::with_capacity(k_max + 1);
    let mut a_prev = DD::ZERO;
    for k in 0..=k_max {
        let bk: DD = x.iter().zip(&w[..]).zip(&p).map(|((&xi, &wi), &pi)| wi * xi * pi * pi).sum();
        let mut nrm = DD::ZERO;
        let mut next = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let v = (x[i] - bk) * p[i] - a_prev * prev[i];
            nrm += w[i] * v * v;
            next.push(v);
        }
        if !(nrm.hi > 0.0) {
            return Err(Error::IllConditioned {
                degree: k + 1,
                what: "discretized measure exhausted".into(),
            });
        }
        let ak = nrm.sqrt();
        for v in next.iter_mut() {
            *v = *v / ak;
        }
        b.push((bk + shift).to_f64());
        a.push(ak.to_f64());
        prev = std::mem::replace(&mut p, next);
        a_prev = ak;
    }
    Ok((mu0, a, b))
}

fn dyadic_step(target: f64) -> f64 {
    2f64.powi(target.log2().floor() as i32)
}

/// Trapezoid discretization (in t, x = cosh t) of ω^(ℓ), accurate for
/// polynomials up to degree 2K+2. Nodes are returned as x − 1.
fn grad_measure(ell: usize, zeta: f64, k_max: usize) -> Result<(Vec<DD>, Vec<DD>)> {
    let deg = (2 * k_max + 2) as f64;
    let n_exp = (2 * ell + 2) as f64;
    let h = dyadic_step((std::f64::consts::PI / (60.0 * (zeta + n_exp + deg + 2.0)).sqrt()).min(0.05));
    let k2 = bessel_k_scaled_seq_dd(2, zeta)?[2];
    let scale = DD::from_f64(zeta) / (k2 * (2 * ell + 1) as f64) * h;
    let z = DD::from_f64(zeta);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut last = f64::NEG_INFINITY;
    for j in 1.. {
        let t = DD::from_f64(j as f64 * h);
        let et = t.exp();
        let emt = et.recip();
        let sinh = (et - emt) * 0.5;
        let sh2 = (t * 0.5).exp();
        let sh2 = (sh2 - sh2.recip()) * 0.5;
        let xm1 = sh2 * sh2 * 2.0;
        // log of weight density in t, dropping constants
        let lw = sinh.ln() * n_exp - z * xm1;
        let lwf = lw.to_f64();
        xs.push(xm1);
        ws.push(lw.exp() * scale);
        let probe = lwf + deg * (1.0 + xm1.to_f64()).ln();
        best = best.max(probe);
        if probe < best - 92.0 && probe < last {
            break;
        }
        last = probe;
        if j > 2_000_000 {
            return Err(Error::numerical("weight discretization did not terminate"));
        }
    }
    Ok((xs, ws))
}

/// f64 twin of `grad_measure` + `discrete_stieltjes`, for callers that rebuild
/// families at every grid cell. Agrees with the double-double route to ~1e-13.
fn stieltjes_f64(ell: usize, zeta: f64, k_max: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let deg = (2 * k_max + 2) as f64;
    let n_exp = (2 * ell + 2) as i32;
    let h = dyadic_step((std::f64::consts::PI / (60.0 * (zeta + n_exp as f64 + deg + 2.0)).sqrt()).min(0.05));
    let k2 = bessel_k_scaled(2, zeta)?;
    let scale = zeta / (k2 * (2 * ell + 1) as f64) * h;
    let (mut x, mut w) = (Vec::new(), Vec::new());
    let mut best = f64::NEG_INFINITY;
    let mut last = f64::NEG_INFINITY;
    for j in 1.. {
        let t = j as f64 * h;
        let sinh = t.sinh();
        let xm1 = 2.0 * (0.5 * t).sinh().powi(2);
        let lw = n_exp as f64 * sinh.ln() - zeta * xm1;
        x.push(xm1);
        w.push(lw.exp() * scale);
        let probe = lw + deg * (1.0 + xm1).ln();
        best = best.max(probe);
        if probe < best - 80.0 && probe < last {
            break;
        }
        last = probe;
        if j > 2_000_000 {
            return Err(Error::numerical("weight discretization did not terminate"));
        }
    }
    let mu0: f64 = w.iter().sum();
    let mut p = vec![1.0 / mu0.sqrt(); x.len()];
    let mut prev = vec![0.0; x.len()];
    let (mut a, mut b) = (Vec::with_capacity(k_max + 1), Vec::with_capacity(k_max + 1));
    let mut a_prev = 0.0;
    for k in 0..=k_max {
        let bk: f64 = x.iter().zip(&w).zip(&p).map(|((xi, wi), pi)| wi * xi * pi * pi).sum();
        let mut nrm = 0.0;
        for i in 0..x.len() {
            let v = (x[i] - bk) * p[i] - a_prev * prev[i];
            nrm += w[i] * v * v;
            prev[i] = v;
        }
        if !(nrm > 0.0) {
            return Err(Error::IllConditioned {
                degree: k + 1,
                what: "discretized measure exhausted".into(),
            });
        }
        let ak = nrm.sqrt();
        for v in prev.iter_mut() {
            *v /= ak;
        }
        std::mem::swap(&mut p, &mut prev);
        b.push(bk + 1.0);
        a.push(ak);
        a_prev = ak;
    }
    Ok((mu0, a, b))
}

/// Trapezoid discretization (in t, x = e^t) of the ultra-relativistic weight
/// ζ³ x^{2ℓ+1} e^{−ζx} / (2ℓ+1) on (0, ∞).
fn ultra_measure(ell: usize, zeta: f64, k_max: usize) -> (Vec<DD>, Vec<DD>) {
    let deg = (2 * k_max + 2) as f64;
    let n_exp = (2 * ell + 2) as f64; // includes dx = x dt
    let h = dyadic_step((std::f64::consts::PI / (60.0 * (n_exp + deg + 2.0)).sqrt()).min(0.05));
    let z = DD::from_f64(zeta);
    let scale = z * z * z / (2 * ell + 1) as f64 * h;
    // peak of x^{n} e^{-ζx} sits at x = n/ζ
    let t0 = (n_exp / zeta).ln();
    let j0 = (t0 / h).round() as i64;
    let lw = |j: i64| {
        let t = DD::from_f64(j as f64 * h);
        let x = t.exp();
        (x, t * n_exp - z * x)
    };
    let peak = lw(j0).1.to_f64();
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    // left tail is governed by x^{n}; right tail by x^{n+deg} e^{-ζx}
    let mut j = j0;
    loop {
        let (x, l) = lw(j);
        xs.push(x);
        ws.push(l.exp() * scale);
        if l.to_f64() < peak - 92.0 {
            break;
        }
        j -= 1;
    }
    let mut j = j0 + 1;
    let mut best = f64::NEG_INFINITY;
    loop {
        let (x, l) = lw(j);
        xs.push(x);
        ws.push(l.exp() * scale);
        let probe = l.to_f64() + deg * x.to_f64().ln();
        best = best.max(probe);
        if probe < best - 92.0 && x.to_f64() > (n_exp + deg) / zeta {
            break;
        }
        j += 1;
    }
    (xs, ws)
}

impl PolyFamily {
    /// Production constructor: double-double Stieltjes on the discretized weight.
    pub fn new(ell: usize, zeta: f64, k_max: usize) -> Result<Self> {
        check_zeta(zeta)?;
        let (x, w) = grad_measure(ell, zeta, k_max)?;
        let (mu0, a, b) = discrete_stieltjes(&x, &w, 1.0, k_max)?;
        Ok(Self::from_recurrence(ell, zeta, mu0.to_f64(), a, b))
    }

    /// Same family from the f64 Stieltjes route; roughly fifty times cheaper.
    pub fn new_f64(ell: usize, zeta: f64, k_max: usize) -> Result<Self> {
        check_zeta(zeta)?;
        let (mu0, a, b) = stieltjes_f64(ell, zeta, k_max)?;
        Ok(Self::from_recurrence(ell, zeta, mu0, a, b))
    }

    /// Assemble a family from its recurrence coefficients (`a`, `b` of equal
    /// length K+1) and total mass.
    pub fn from_recurrence(ell: usize, zeta: f64, mu0: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        let mut c = Vec::with_capacity(b.len());
        c.push(1.0 / mu0.sqrt());
        for k in 1..b.len() {
            c.push(c[k - 1] / a[k - 1]);
        }
        PolyFamily { ell, zeta, mu0, a, b, c }
    }

    /// Highest degree K available.
    pub fn degree(&self) -> usize {
        self.b.len() - 1
    }

    /// ω^(ℓ)(x; ζ).
    pub fn weight(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 0.0;
        }
        let k2s = crate::special_functions::bessel_k_scaled(2, self.zeta).unwrap_or(f64::NAN);
        let l = self.ell as f64;
        self.zeta * (x * x - 1.0).powf(l + 0.5) * (-self.zeta * (x - 1.0)).exp() / ((2.0 * l + 1.0) * k2s)
    }

    /// P_0(x) .. P_n(x).
    pub fn eval_upto(&self, n: usize, x: f64) -> Vec<f64> {
        assert!(n <= self.degree() + 1, "degree {n} beyond family data");
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.c[0]);
        for k in 0..n {
            let prev = if k > 0 { self.a[k - 1] * out[k - 1] } else { 0.0 };
            out.push(((x - self.b[k]) * out[k] - prev) / self.a[k]);
        }
        out
    }

    /// P_k(x) by forward recurrence.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        self.eval_upto(k, x)[k]
    }

    /// All P_k(x) for k ≤ K.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        self.eval_upto(self.degree(), x)
    }

    /// P_k(x) and dP_k/dx for k ≤ n.
    pub fn eval_with_derivative(&self, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.eval_upto(n, x);
        let mut d = vec![0.0; n + 1];
        for k in 0..n {
            let prev = if k > 0 { self.a[k - 1] * d[k - 1] } else { 0.0 };
            d[k + 1] = ((x - self.b[k]) * d[k] + p[k] - prev) / self.a[k];
        }
        (p, d)
    }

    /// Jacobi matrix J_k (order k+1).
    pub fn jacobi(&self, k: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(k + 1, k + 1);
        for i in 0..=k {
            j[(i, i)] = self.b[i];
            if i < k {
                j[(i, i + 1)] = self.a[i];
                j[(i + 1, i)] = self.a[i];
            }
        }
        j
    }

    /// Zeros of P_k, ascending, as eigenvalues of J_{k−1}.
    pub fn zeros(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.degree() + 1 {
            return Err(Error::contract(format!("zeros need 1 <= k <= {}, got {k}", self.degree() + 1)));
        }
        Ok(quadrature::golub_welsch(&self.b[..k], &self.a[..k - 1], 1.0)?.0)
    }

    /// Sum of the zeros of P_k (the trace of J_{k−1}).
    pub fn zero_sum(&self, k: usize) -> f64 {
        self.b[..k].iter().sum()
    }

    /// n-point Gauss rule for ω^(ℓ).
    pub fn gauss_rule(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if n == 0 || n > self.degree() + 1 {
            return Err(Error::contract(format!("Gauss rule needs 1 <= n <= {}, got {n}", self.degree() + 1)));
        }
        quadrature::golub_welsch(&self.b[..n], &self.a[..n - 1], self.mu0)
    }

    /// ∂P_k/∂ζ = a_{k−1} P_{k−1} − ½ (G − 1/ζ − b_k) P_k.
    pub fn d_dzeta(&self, k: usize, x: f64) -> Result<f64> {
        let g = g_ratio(self.zeta)?;
        let p = self.eval_upto(k, x);
        let lower = if k > 0 { self.a[k - 1] * p[k - 1] } else { 0.0 };
        Ok(lower - 0.5 * (g - 1.0 / self.zeta - self.b[k]) * p[k])
    }

    /// ∂P_k/∂ζ for all k ≤ n.
    pub fn d_dzeta_upto(&self, n: usize, x: f64, g: f64) -> Vec<f64> {
        let p = self.eval_upto(n, x);
        (0..=n)
            .map(|k| {
                let lower = if k > 0 { self.a[k - 1] * p[k - 1] } else { 0.0 };
                lower - 0.5 * (g - 1.0 / self.zeta - self.b[k]) * p[k]
            })
            .collect()
    }
}

/// Recurrence coefficients of ω^(ℓ)(·; ζ) for degrees 0..=K.
pub fn recurrence_coeffs(ell: usize, zeta: f64, k_max: usize) -> Result<PolyFamily> {
    if k_max < 1 {
        return Err(Error::contract("family needs K >= 1"));
    }
    PolyFamily::new(ell, zeta, k_max)
}

/// Largest moment index supported by [`moments`].
pub const MOMENT_MAX: usize = 60;

/// μ_n = ∫_1^∞ xⁿ ω^(ℓ)(x; ζ) dx for n = 0..=n_max, in double-double.
///
/// Uses ∫ (x²−1)^{ℓ+1/2} e^{−ζx} dx = (2ℓ+1)!! ζ^{−ℓ−1} K_{ℓ+1}(ζ): each power of
/// x is −∂/∂ζ, and −∂/∂ζ [ζ^{−a} K_b] = (a−b) ζ^{−a−1} K_b + ζ^{−a} K_{b+1}, so
/// every moment is an exact integer combination of ζ^{−a} K_b.
pub fn moments(ell: usize, zeta: f64, n_max: usize) -> Result<Vec<DD>> {
    check_zeta(zeta)?;
    if n_max > MOMENT_MAX || ell + 1 + n_max > NU_MAX as usize {
        return Err(Error::domain(format!("moment table supports n <= {MOMENT_MAX}, got {n_max}")));
    }
    let kseq = bessel_k_scaled_seq_dd((ell + 1 + n_max).max(2) as u32, zeta)?;
    let z = DD::from_f64(zeta);
    let zinv = z.recip();
    let mut dfact = DD::ONE;
    for j in (1..=2 * ell + 1).step_by(2) {
        dfact *= j as f64;
    }
    // terms: (a, b, coeff) meaning coeff ζ^{-a} K_b; exact integers while < 2^106
    let mut terms: Vec<(i32, usize, DD)> = vec![(ell as i32 + 1, ell + 1, dfact)];
    let norm = z / (kseq[2] * (2 * ell + 1) as f64);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let val: DD = terms.iter().map(|&(a, b, c)| c * zinv.powi(a) * kseq[b]).sum();
        out.push(val * norm);
        if n == n_max {
            break;
        }
        let mut next: Vec<(i32, usize, DD)> = Vec::with_capacity(terms.len() + 1);
        let mut push = |a: i32, b: usize, c: DD| {
            if c.hi == 0.0 {
                return;
            }
            match next.iter_mut().find(|t| t.0 == a && t.1 == b) {
                Some(t) => t.2 += c,
                None => next.push((a, b, c)),
            }
        };
        for &(a, b, c) in &terms {
            push(a + 1, b, c * (a - b as i32) as f64);
            push(a, b + 1, c);
        }
        terms = next;
    }
    Ok(out)
}

/// Chebyshev algorithm: recurrence coefficients (a_0..a_{K}, b_0..b_K) from the
/// ordinary moments μ_0..μ_{2K+2}.
pub fn chebyshev(mu: &[DD], k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = k_max + 2;
    if mu.len() < 2 * n {
        return Err(Error::contract(format!("Chebyshev needs {} moments, got {}", 2 * n, mu.len())));
    }
    let mut alpha = vec![DD::ZERO; n];
    let mut beta = vec![DD::ZERO; n];
    let mut sig_prev = vec![DD::ZERO; 2 * n];
    let mut sig: Vec<DD> = mu[..2 * n].to_vec();
    alpha[0] = mu[1] / mu[0];
    beta[0] = mu[0];
    for k in 1..n {
        let mut next = vec![DD::ZERO; 2 * n];
        for l in k..(2 * n - k) {
            next[l] = sig[l + 1] - alpha[k - 1] * sig[l] - beta[k - 1] * sig_prev[l];
        }
        if !(next[k].hi > 0.0) {
            return Err(Error::IllConditioned { degree: k, what: "Chebyshev norm lost positivity".into() });
        }
        alpha[k] = next[k + 1] / next[k] - sig[k] / sig[k - 1];
        beta[k] = next[k] / sig[k - 1];
        sig_prev = std::mem::replace(&mut sig, next);
    }
    let a = (1..=k_max + 1).map(|k| beta[k].sqrt().to_f64()).collect();
    let b = (0..=k_max).map(|k| alpha[k].to_f64()).collect();
    Ok((a, b))
}

/// The same family built by the Chebyshev algorithm on closed-form moments.
/// Ill-conditioned for large K; reports the failing degree.
pub fn recurrence_coeffs_chebyshev(ell: usize, zeta: f64, k_max: usize) -> Result<PolyFamily> {
    let mu = moments(ell, zeta, 2 * k_max + 3)?;
    let (a, b) = chebyshev(&mu, k_max)?;
    Ok(PolyFamily::from_recurrence(ell, zeta, mu[0].to_f64(), a, b))
}

/// Stieltjes procedure with every inner product by adaptive quadrature in f64.
/// Slow; an oracle independent of the double-double discretization.
pub fn recurrence_coeffs_adaptive(ell: usize, zeta: f64, k_max: usize) -> Result<PolyFamily> {
    check_zeta(zeta)?;
    let l2 = (2 * ell + 2) as f64;
    let k2s = crate::special_functions::bessel_k_scaled(2, zeta)?;
    let pref = zeta / ((2 * ell + 1) as f64 * k2s);
    // log-density in t with x = cosh t
    let ldens = move |t: f64| pref.ln() + l2 * t.sinh().ln() - zeta * 2.0 * (0.5 * t).sinh().powi(2);
    let dens = move |t: f64| ldens(t).exp();
    let deg = (2 * k_max + 2) as f64;
    let probe = |t: f64| ldens(t) + deg * t.cosh().ln();
    let mut t_end = 1.0;
    while probe(t_end) > -80.0 || probe(1.01 * t_end) > probe(t_end) {
        t_end *= 1.25;
    }
    let split = (l2 / zeta).sqrt().asinh().min(t_end * 0.5);
    let integ = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut s = 0.0;
        for (a, b) in [(0.0, split), (split, t_end)] {
            s += quadrature::integrate(|t| f(t) * dens(t), a, b, 1e-15)?;
        }
        Ok(s)
    };
    let mu0 = integ(&|_| 1.0)?;
    let mut a: Vec<f64> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for k in 0..=k_max {
        let pk = |t: f64| eval_partial(mu0, &a, &b, k, t.cosh());
        let bk = integ(&|t| (t.cosh() - 1.0) * pk(t).powi(2))? + 1.0;
        let prev = |t: f64| if k > 0 { a[k - 1] * eval_partial(mu0, &a, &b, k - 1, t.cosh()) } else { 0.0 };
        let ak = integ(&|t| ((t.cosh() - bk) * pk(t) - prev(t)).powi(2))?.sqrt();
        b.push(bk);
        a.push(ak);
    }
    Ok(PolyFamily::from_recurrence(ell, zeta, mu0, a, b))
}

fn eval_partial(mu0: f64, a: &[f64], b: &[f64], k: usize, x: f64) -> f64 {
    let mut p0 = 1.0 / mu0.sqrt();
    let mut pm = 0.0;
    for j in 0..k {
        let pn = ((x - b[j]) * p0 - if j > 0 { a[j - 1] * pm } else { 0.0 }) / a[j];
        pm = p0;
        p0 = pn;
    }
    p0
}

/// Ultra-relativistic limit family: weight ζ³ x^{2ℓ+1} e^{−ζx}/(2ℓ+1) on (0, ∞),
/// computed by the same double-double Stieltjes procedure. Its coefficients are
/// those of generalized Laguerre polynomials (α = 2ℓ+1) in ζx.
pub fn ultra_limit_family(ell: usize, zeta: f64, k_max: usize) -> Result<PolyFamily> {
    check_zeta(zeta)?;
    let (x, w) = ultra_measure(ell, zeta, k_max);
    let (mu0, a, b) = discrete_stieltjes(&x, &w, 0.0, k_max)?;
    Ok(PolyFamily::from_recurrence(ell, zeta, mu0.to_f64(), a, b))
}

/// p, q, r, p̃, q̃, r̃ coupling `fam` (index ℓ ≥ 1) to `fam_m1` (index ℓ−1), for
/// k = 0..min(K_ℓ+1, K_{ℓ−1}).
pub fn cross_coeffs(fam: &PolyFamily, fam_m1: &PolyFamily) -> Result<CrossCoeffs> {
    if fam.zeta != fam_m1.zeta {
        return Err(Error::contract(format!("families at different zeta: {} vs {}", fam.zeta, fam_m1.zeta)));
    }
    if fam.ell == 0 || fam_m1.ell + 1 != fam.ell {
        return Err(Error::contract("cross coefficients need families ell and ell-1"));
    }
    let l = fam.ell as f64;
    let f = (2.0 * l - 1.0) / (2.0 * l + 1.0);
    let n = (fam.degree() + 1).min(fam_m1.degree());
    let (cl, cm) = (&fam.c, &fam_m1.c);
    let mut out = CrossCoeffs {
        ell: fam.ell,
        p: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        ptilde: Vec::with_capacity(n),
        qtilde: Vec::with_capacity(n),
        rtilde: Vec::with_capacity(n),
    };
    for k in 0..n {
        let p = cm[k] / cl[k];
        let r = if k == 0 { 0.0 } else { f * cl[k - 1] / cm[k + 1] };
        let pt = f * cl[k] / cm[k + 1];
        let qt = fam_m1.zero_sum(k + 1) - fam.zero_sum(k);
        out.p.push(p);
        out.r.push(r);
        out.ptilde.push(pt);
        out.qtilde.push(qt);
        out.q.push(pt * (fam_m1.b[k + 1] + qt));
        out.rtilde.push(p * (1.0 - pt * pt / f));
    }
    Ok(out)
}

/// Both sides of the two x-derivative relations between families ℓ and ℓ−1:
///
/// ∂P_{k+1}^{(ℓ−1)}/∂x = f (k+1)/p̃_k P_k^{(ℓ)} + ζ r_k P_{k−1}^{(ℓ)}
///
/// f (x²−1) ∂P_k^{(ℓ)}/∂x + (2ℓ−1) x P_k^{(ℓ)} = (k+2ℓ+1) p̃_k P_{k+1}^{(ℓ−1)} + ζ p_k P_k^{(ℓ−1)}
///
/// with f = (2ℓ−1)/(2ℓ+1).
#[derive(Clone, Copy, Debug)]
pub struct DxRelations {
    pub lower: (f64, f64),
    pub upper: (f64, f64),
}

pub fn d_dx_relations(fam: &PolyFamily, fam_m1: &PolyFamily, cross: &CrossCoeffs, k: usize, x: f64) -> DxRelations {
    let l = fam.ell as f64;
    let f = (2.0 * l - 1.0) / (2.0 * l + 1.0);
    let z = fam.zeta;
    let (pl, dpl) = fam.eval_with_derivative(k + 1, x);
    let (pm, dpm) = fam_m1.eval_with_derivative(k + 1, x);
    let lower_rhs = f * (k as f64 + 1.0) / cross.ptilde[k] * pl[k] + if k > 0 { z * cross.r[k] * pl[k - 1] } else { 0.0 };
    let upper_lhs = f * (x * x - 1.0) * dpl[k] + (2.0 * l - 1.0) * x * pl[k];
    let upper_rhs = (k as f64 + 2.0 * l + 1.0) * cross.ptilde[k] * pm[k + 1] + z * cross.p[k] * pm[k];
    DxRelations { lower: (dpm[k + 1], lower_rhs), upper: (upper_lhs, upper_rhs) }
}

/// Families ℓ = 0..=L at a common ζ with their couplings.
#[derive(Clone, Debug)]
pub struct FamilySet {
    pub zeta: f64,
    pub fams: Vec<PolyFamily>,
    /// `cross[ℓ]` couples ℓ to ℓ−1; `cross[0]` is empty.
    pub cross: Vec<CrossCoeffs>,
}

/// Which Stieltjes route builds the families.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    /// Double-double accumulation.
    #[default]
    Extended,
    /// Plain f64, for per-cell rebuilding in the solver.
    Double,
}

impl FamilySet {
    pub fn new(zeta: f64, ell_max: usize, k_max: usize) -> Result<Self> {
        Self::with_precision(zeta, ell_max, k_max, Precision::Extended)
    }

    pub fn with_precision(zeta: f64, ell_max: usize, k_max: usize, prec: Precision) -> Result<Self> {
        let build = |l| match prec {
            Precision::Extended => PolyFamily::new(l, zeta, k_max),
            Precision::Double => PolyFamily::new_f64(l, zeta, k_max),
        };
        let fams = (0..=ell_max).map(build).collect::<Result<Vec<_>>>()?;
        let mut cross = vec![CrossCoeffs {
            ell: 0,
            p: vec![],
            q: vec![],
            r: vec![],
            ptilde: vec![],
            qtilde: vec![],
            rtilde: vec![],
        }];
        for l in 1..=ell_max {
            cross.push(cross_coeffs(&fams[l], &fams[l - 1])?);
        }
        Ok(FamilySet { zeta, fams, cross })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_moments_closed_forms() {
        let z = 1.7;
        let g = g_ratio(z).unwrap();
        let m0 = moments(0, z, 1).unwrap();
        assert!((m0[0].to_f64() / (g - 4.0 / z) - 1.0).abs() < 1e-14);
        assert!((m0[1].to_f64() - 1.0).abs() < 1e-14);
        assert!((moments(1, z, 0).unwrap()[0].to_f64() * z - 1.0).abs() < 1e-14);
        assert!((moments(2, z, 0).unwrap()[0].to_f64() * z * z / (3.0 * g) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretized_mass_matches_moments() {
        for &z in &[0.1, 1.0, 10.0, 100.0] {
            for ell in 0..4 {
                let (_, w) = grad_measure(ell, z, 8).unwrap();
                let m: DD = w.iter().copied().sum();
                let exact = moments(ell, z, 0).unwrap()[0];
                let rel = ((m - exact) / exact).to_f64().abs();
                assert!(rel < 1e-25, "z={z} ell={ell} rel={rel:e}");
            }
        }
    }

    #[test]
    fn degree_one_family_one() {
        let z = 2.5;
        let f = PolyFamily::new(1, z, 3).unwrap();
        let g = g_ratio(z).unwrap();
        assert!((f.b[0] - g).abs() < 1e-13);
        assert!((f.a[0] - (-g * g + 5.0 * g / z + 1.0).sqrt()).abs() < 1e-13);
    }
}
