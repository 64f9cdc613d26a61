//! Modified Bessel functions of the second kind K_ν(ζ) for integer ν, and the
//! ratio G(ζ) = K_3(ζ)/K_2(ζ).
//!
//! K_0 and K_1 come from the ascending series for ζ < 2 and from Steed's
//! continued fraction (CF2) for ζ ≥ 2; higher orders from the upward recurrence
//! K_{ν+1} = K_{ν-1} + (2ν/ζ) K_ν, which is forward stable for K.

use crate::dd::{Real, DD};
use crate::error::{Error, Result};
use crate::quadrature;

/// Largest supported order.
pub const NU_MAX: u32 = 128;

fn check_args(nu: u32, zeta: f64) -> Result<()> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::domain(format!("Bessel K needs zeta > 0, got {zeta}")));
    }
    if nu > NU_MAX {
        return Err(Error::domain(format!("Bessel K order {nu} exceeds cap {NU_MAX}")));
    }
    Ok(())
}

/// Ascending series for (K_0, K_1), unscaled. Accurate for 0 < x < 2.
fn k01_series<T: Real>(x: T) -> (T, T) {
    let q = x * x / 4.0;
    let l = (x / 2.0).ln();
    let g = T::euler_gamma();
    let tiny = if std::mem::size_of::<T>() > 8 { 1e-34 } else { 1e-18 };

    // K_0 = -(ln(x/2)+γ) I_0 + Σ_{k≥1} (x²/4)^k/(k!)² H_k
    let mut t = T::of(1.0);
    let mut h = T::of(0.0);
    let mut i0 = T::of(1.0);
    let mut s = T::of(0.0);
    let mut k = 1.0;
    loop {
        t = t * q / (k * k);
        h = h + T::of(1.0) / k;
        i0 = i0 + t;
        s = s + t * h;
        if t.f64() < tiny * i0.f64() {
            break;
        }
        k += 1.0;
    }
    let k0 = s - (l + g) * i0;

    // K_1 = 1/x + ln(x/2) I_1 - (x/4) Σ_{k≥0} (ψ(k+1)+ψ(k+2)) (x²/4)^k / (k!(k+1)!)
    let mut t = T::of(1.0);
    let mut hk = T::of(0.0);
    let mut hk1 = T::of(1.0);
    let mut i1 = T::of(1.0);
    let mut s = hk + hk1 - g * 2.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        t = t * q / (k * (k + 1.0));
        hk = hk + T::of(1.0) / k;
        hk1 = hk1 + T::of(1.0) / (k + 1.0);
        i1 = i1 + t;
        s = s + (hk + hk1 - g * 2.0) * t;
        if t.f64() < tiny * i1.f64() {
            break;
        }
    }
    let k1 = T::of(1.0) / x + l * (x / 2.0) * i1 - x / 4.0 * s;
    (k0, k1)
}

/// Steed's CF2 for the scaled pair (e^x K_0, e^x K_1). Accurate for x ≥ 2 in
/// f64 and for x ≥ 8 in DD.
fn k01_cf2_scaled<T: Real>(x: T) -> Result<(T, T)> {
    let eps = if std::mem::size_of::<T>() > 8 { 1e-33 } else { 1e-17 };
    let mut b = (x + 1.0) * 2.0;
    let mut d = T::of(1.0) / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = T::of(0.0);
    let mut q2 = T::of(1.0);
    let a1 = 0.25;
    let mut q = T::of(a1);
    let mut c = T::of(a1);
    let mut a = T::of(-a1);
    let mut s = q * delh + 1.0;
    for i in 1..100_000 {
        let fi = i as f64;
        a = a - 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + 2.0;
        d = T::of(1.0) / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).f64().abs() < eps {
            let h = h * a1;
            let k0 = (T::pi() / (x * 2.0)).sqrt() / s;
            let k1 = k0 * (x + 0.5 - h) / x;
            return Ok((k0, k1));
        }
    }
    Err(Error::numerical(format!("CF2 for K_0, K_1 did not converge at x = {}", x.f64())))
}

/// Scaled values e^ζ K_ν(ζ) for ν = 0..=nu_max.
fn scaled_seq<T: Real>(nu_max: u32, zeta: T) -> Result<Vec<T>> {
    // In DD the series stays accurate further out (cancellation ~e^{2x} is
    // absorbed), while CF2's auxiliary sums overflow before converging to DD
    // width at small x.
    let switch = if std::mem::size_of::<T>() > 8 { 8.0 } else { 2.0 };
    let (k0, k1) = if zeta.f64() < switch {
        let (k0, k1) = k01_series(zeta);
        let e = zeta.exp();
        (k0 * e, k1 * e)
    } else {
        k01_cf2_scaled(zeta)?
    };
    let mut out = Vec::with_capacity(nu_max as usize + 1);
    out.push(k0);
    if nu_max >= 1 {
        out.push(k1);
    }
    for nu in 1..nu_max {
        let next = out[nu as usize - 1] + out[nu as usize] * (2.0 * nu as f64) / zeta;
        if !next.is_finite() {
            return Err(Error::Overflow(format!(
                "K_{}({}) exceeds the floating-point range",
                nu + 1,
                zeta.f64()
            )));
        }
        out.push(next);
    }
    Ok(out)
}

/// e^ζ K_ν(ζ) for ν = 0..=nu_max.
pub fn bessel_k_scaled_seq(nu_max: u32, zeta: f64) -> Result<Vec<f64>> {
    check_args(nu_max, zeta)?;
    scaled_seq(nu_max, zeta)
}

/// e^ζ K_ν(ζ) for ν = 0..=nu_max in double-double.
pub fn bessel_k_scaled_seq_dd(nu_max: u32, zeta: f64) -> Result<Vec<DD>> {
    check_args(nu_max, zeta)?;
    scaled_seq(nu_max, DD::from_f64(zeta))
}

/// e^ζ K_ν(ζ).
pub fn bessel_k_scaled(nu: u32, zeta: f64) -> Result<f64> {
    Ok(*bessel_k_scaled_seq(nu, zeta)?.last().unwrap())
}

/// K_ν(ζ).
pub fn bessel_k(nu: u32, zeta: f64) -> Result<f64> {
    let s = bessel_k_scaled(nu, zeta)?;
    let v = s * (-zeta).exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("K_{nu}({zeta}) exceeds the floating-point range")));
    }
    Ok(v)
}

/// ∂K_ν/∂ζ = -K_{ν+1} + (ν/ζ) K_ν.
pub fn bessel_k_dzeta(nu: u32, zeta: f64) -> Result<f64> {
    let s = bessel_k_scaled_seq(nu + 1, zeta)?;
    let e = (-zeta).exp();
    Ok((-s[nu as usize + 1] + nu as f64 / zeta * s[nu as usize]) * e)
}

/// G(ζ) = K_3(ζ)/K_2(ζ).
pub fn g_ratio(zeta: f64) -> Result<f64> {
    let s = bessel_k_scaled_seq(3, zeta)?;
    Ok(s[3] / s[2])
}

/// dG/dζ = G² - 5G/ζ - 1.
pub fn g_ratio_dzeta(zeta: f64) -> Result<f64> {
    let g = g_ratio(zeta)?;
    Ok(g * g - 5.0 * g / zeta - 1.0)
}

/// K_ν(ζ) straight from the integral definition ∫_0^∞ cosh(νt) e^{-ζ cosh t} dt by
/// adaptive quadrature, truncated once the integrand drops below 1e-20 of its
/// peak. Slow; independent of the production path.
pub fn bessel_k_integral(nu: u32, zeta: f64) -> Result<f64> {
    check_args(nu, zeta)?;
    let nuf = nu as f64;
    // log of the scaled integrand e^{-ζ(cosh t - 1)} cosh(νt)
    let lf = |t: f64| -zeta * (t.cosh() - 1.0) + (nuf * t).cosh().ln();
    let t_peak = if nu == 0 { 0.0 } else { (nuf / zeta).asinh() };
    let peak = lf(t_peak);
    let mut t_end = t_peak + 1.0;
    while lf(t_end) > peak - 20.0 * std::f64::consts::LN_10 {
        t_end += 0.25 * (1.0 + t_end);
    }
    let scale = peak.exp();
    let f = |t: f64| (lf(t) - peak).exp();
    let mut total = 0.0;
    // split at the peak so the adaptive rule sees a smooth one-sided decay
    for (a, b) in [(0.0, t_peak), (t_peak, t_end)] {
        if b > a {
            total += quadrature::integrate(f, a, b, 1e-16 * (b - a).max(1.0))?;
        }
    }
    let v = total * scale * (-zeta).exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("K_{nu}({zeta}) exceeds the floating-point range")));
    }
    Ok(v)
}
