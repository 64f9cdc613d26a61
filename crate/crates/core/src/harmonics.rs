//! Real spherical harmonics Y_{ℓ,m}(y, φ) normalized so that
//! ∫∫ Y_{ℓ,m} Y_{ℓ',m'} dφ dy = 4π/(2ℓ+1) δ δ, the coefficient functions of
//! their recurrences, and pointwise residuals of those recurrences.
//!
//! Ylm = √2 Č_ℓ^{|m|}(y) sin(|m|φ) for m < 0, Č_ℓ^0(y) for m = 0 and
//! √2 Č_ℓ^m(y) cos(mφ) for m > 0, with Č_ℓ^m = √((ℓ−m)!/(ℓ+m)!) P̂_ℓ^m and P̂
//! carrying the Condon–Shortley phase.

use crate::error::{Error, Result};

/// Linear index of (ℓ, m) in a table covering ℓ = 0..=L.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    (l * l) as usize + (l as i64 + m) as usize
}

/// Č_ℓ^m(y) for 0 ≤ m ≤ ℓ ≤ L, stored at `[l][m]`. Diagonal seed, then upward
/// in ℓ; no factorials are formed.
pub fn legendre_normalized(l_max: usize, y: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - y * y).max(0.0).sqrt();
    let mut out: Vec<Vec<f64>> = (0..=l_max).map(|l| vec![0.0; l + 1]).collect();
    out[0][0] = 1.0;
    for m in 1..=l_max {
        let mf = m as f64;
        out[m][m] = -((2.0 * mf - 1.0) / (2.0 * mf)).sqrt() * s * out[m - 1][m - 1];
    }
    for m in 0..=l_max {
        let mf = m as f64;
        for l in m + 1..=l_max {
            let lf = l as f64;
            let prev2 = if l >= m + 2 { ((lf - 1.0).powi(2) - mf * mf).sqrt() * out[l - 2][m] } else { 0.0 };
            out[l][m] = ((2.0 * lf - 1.0) * y * out[l - 1][m] - prev2) / (lf * lf - mf * mf).sqrt();
        }
    }
    out
}

fn check_y(y: f64) -> Result<()> {
    if !(y.abs() <= 1.0) {
        return Err(Error::domain(format!("|y| must be at most 1, got {y}")));
    }
    Ok(())
}

/// Y_{ℓ,m} for all ℓ ≤ L, indexed by [`lm_index`].
pub fn eval_all(l_max: usize, y: f64, phi: f64) -> Result<Vec<f64>> {
    check_y(y)?;
    let c = legendre_normalized(l_max, y);
    let mut out = vec![0.0; (l_max + 1) * (l_max + 1)];
    let r2 = std::f64::consts::SQRT_2;
    for l in 0..=l_max {
        out[lm_index(l, 0)] = c[l][0];
        for m in 1..=l {
            let (sn, cs) = (m as f64 * phi).sin_cos();
            out[lm_index(l, m as i64)] = r2 * c[l][m] * cs;
            out[lm_index(l, -(m as i64))] = r2 * c[l][m] * sn;
        }
    }
    Ok(out)
}

/// ∂Y_{ℓ,m}/∂y for all ℓ ≤ L, from (1−y²) dČ_ℓ^m/dy = h_{ℓ,m} Č_{ℓ−1}^m − ℓ y Č_ℓ^m.
/// Requires |y| < 1.
pub fn eval_all_dy(l_max: usize, y: f64, phi: f64) -> Result<Vec<f64>> {
    if !(y.abs() < 1.0) {
        return Err(Error::domain(format!("d/dy needs |y| < 1, got {y}")));
    }
    let c = legendre_normalized(l_max, y);
    let w = 1.0 - y * y;
    let dc = |l: usize, m: usize| {
        let lower = if l > m { h(l as i64, m as i64) * c[l - 1][m] } else { 0.0 };
        (lower - l as f64 * y * c[l][m]) / w
    };
    let mut out = vec![0.0; (l_max + 1) * (l_max + 1)];
    let r2 = std::f64::consts::SQRT_2;
    for l in 0..=l_max {
        out[lm_index(l, 0)] = dc(l, 0);
        for m in 1..=l {
            let (sn, cs) = (m as f64 * phi).sin_cos();
            let d = dc(l, m);
            out[lm_index(l, m as i64)] = r2 * d * cs;
            out[lm_index(l, -(m as i64))] = r2 * d * sn;
        }
    }
    Ok(out)
}

/// Y_{ℓ,m}(y, φ); zero for ℓ < 0 or |m| > ℓ.
pub fn eval_y(l: i64, m: i64, y: f64, phi: f64) -> Result<f64> {
    check_y(y)?;
    if l < 0 || m.abs() > l {
        return Ok(0.0);
    }
    let t = eval_all(l as usize, y, phi)?;
    Ok(t[lm_index(l as usize, m)])
}

fn sqrt_pos(v: i64) -> f64 {
    if v > 0 {
        (v as f64).sqrt()
    } else {
        0.0
    }
}

/// h_{ℓ,m} = √((ℓ+m)(ℓ−m)).
pub fn h(l: i64, m: i64) -> f64 {
    sqrt_pos((l + m) * (l - m))
}

/// h̃_{j,m} = √((j+m)(j+m+1)), i.e. h̃_{ℓ−1,m} = √((ℓ+m−1)(ℓ+m)).
pub fn htilde(j: i64, m: i64) -> f64 {
    sqrt_pos((j + m) * (j + m + 1))
}

/// ĥ_{ℓ,m} = √((ℓ+m)(ℓ−m+1)).
pub fn hhat(l: i64, m: i64) -> f64 {
    sqrt_pos((l + m) * (l - m + 1))
}

fn sign(m: i64) -> f64 {
    if m >= 0 {
        1.0
    } else {
        -1.0
    }
}

fn delta(a: i64, b: i64) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// s_m = sign(m) √(δ_{m,−1} + δ_{m,0} + 1).
pub fn s_plain(m: i64) -> f64 {
    sign(m) * (delta(m, -1) + delta(m, 0) + 1.0).sqrt()
}

/// s̃_m = sign(m) (1 − δ_{m,0})(1 − δ_{m,1}).
pub fn s_tilde(m: i64) -> f64 {
    sign(m) * (1.0 - delta(m, 0)) * (1.0 - delta(m, 1))
}

/// ŝ_m = sign(m) (1 − δ_{m,−1}) √(δ_{m,0} + 1).
pub fn s_hat(m: i64) -> f64 {
    sign(m) * (1.0 - delta(m, -1)) * (delta(m, 0) + 1.0).sqrt()
}

/// š_m = sign(m) (1 − δ_{m,0}) √(δ_{m,1} + 1).
pub fn s_check(m: i64) -> f64 {
    sign(m) * (1.0 - delta(m, 0)) * (delta(m, 1) + 1.0).sqrt()
}

/// Expansion of ω_a Y_{ℓ,m} in harmonics of degree ℓ ± 1, where the unit
/// direction is ω = (I_1, I_2, I_0) = (√(1−y²) cos φ, √(1−y²) sin φ, y).
/// Returns (L, M, coefficient) with out-of-range terms dropped.
pub fn direction_times(a: usize, l: i64, m: i64) -> Vec<(i64, i64, f64)> {
    let d1 = (2 * l + 1) as f64;
    let d2 = 2.0 * d1;
    let t: Vec<(i64, i64, f64)> = match a {
        2 => vec![(l + 1, m, h(l + 1, m) / d1), (l - 1, m, h(l, m) / d1)],
        0 => vec![
            (l + 1, m - 1, s_check(m) * htilde(l + 1, -m) / d2),
            (l - 1, m - 1, -s_check(m) * htilde(l - 1, m) / d2),
            (l + 1, m + 1, -s_hat(m) * htilde(l + 1, m) / d2),
            (l - 1, m + 1, s_hat(m) * htilde(l - 1, -m) / d2),
        ],
        1 => vec![
            (l - 1, -m - 1, s_plain(m) * htilde(l - 1, -m) / d2),
            (l + 1, -m - 1, -s_plain(m) * htilde(l + 1, m) / d2),
            (l - 1, -m + 1, s_tilde(m) * htilde(l - 1, m) / d2),
            (l + 1, -m + 1, -s_tilde(m) * htilde(l + 1, -m) / d2),
        ],
        _ => panic!("direction component {a} out of range"),
    };
    t.into_iter().filter(|&(ll, mm, c)| ll >= 0 && mm.abs() <= ll && c != 0.0).collect()
}

/// Residuals of the three multiplication recurrences (by I_0, I_1, I_2).
pub fn verify_recurrences(l: i64, m: i64, y: f64, phi: f64) -> Result<[f64; 3]> {
    if !(y.abs() < 1.0) {
        return Err(Error::domain("recurrence check needs |y| < 1"));
    }
    let lmax = (l + 1) as usize;
    let t = eval_all(lmax, y, phi)?;
    let yv = |ll: i64, mm: i64| if ll < 0 || mm.abs() > ll { 0.0 } else { t[lm_index(ll as usize, mm)] };
    let s = (1.0 - y * y).sqrt();
    let dir = [s * phi.cos(), s * phi.sin(), y];
    let mut out = [0.0; 3];
    // report in the order I_0, I_1, I_2
    for (slot, a) in [(0usize, 2usize), (1, 0), (2, 1)] {
        let rhs: f64 = direction_times(a, l, m).iter().map(|&(ll, mm, c)| c * yv(ll, mm)).sum();
        out[slot] = dir[a] * yv(l, m) - rhs;
    }
    Ok(out)
}

/// Residuals of the eight derivative identities, in the order
/// (0), (0'), (1), (2), (1'), (2'), (3), (4): the unprimed forms couple to ℓ−1,
/// the primed ones to ℓ+1, and (3), (4) stay at degree ℓ.
pub fn verify_derivatives(l: i64, m: i64, y: f64, phi: f64) -> Result<[f64; 8]> {
    if !(y.abs() < 1.0) {
        return Err(Error::domain("derivative check needs |y| < 1"));
    }
    let lmax = (l + 1) as usize;
    let t = eval_all(lmax, y, phi)?;
    let dt = eval_all_dy(lmax, y, phi)?;
    let yv = |ll: i64, mm: i64| if ll < 0 || mm.abs() > ll { 0.0 } else { t[lm_index(ll as usize, mm)] };
    let dy = dt[lm_index(l as usize, m)];
    let s = (1.0 - y * y).sqrt();
    let (sn, cs) = phi.sin_cos();
    let (i1, i2) = (s * cs, s * sn);
    let (it0, it1, it2) = (y * y - 1.0, y * s * cs, y * s * sn);
    let (ih1, ih2, ih3, ih4) = (sn / s, -cs / s, y * sn / s, -y * cs / s);
    let lf = l as f64;
    let mf = m as f64;
    let y0 = yv(l, m);
    let ym = yv(l, -m);
    let (sc, sh, st, sp) = (s_check(m), s_hat(m), s_tilde(m), s_plain(m));
    Ok([
        it0 * dy - lf * y * y0 + h(l, m) * yv(l - 1, m),
        it0 * dy + (lf + 1.0) * y * y0 - h(l + 1, m) * yv(l + 1, m),
        it1 * dy - lf * i1 * y0 - mf * ih1 * ym
            - 0.5 * (sc * htilde(l - 1, m) * yv(l - 1, m - 1) - sh * htilde(l - 1, -m) * yv(l - 1, m + 1)),
        it2 * dy - lf * i2 * y0 - mf * ih2 * ym
            + 0.5 * (st * htilde(l - 1, m) * yv(l - 1, -m + 1) + sp * htilde(l - 1, -m) * yv(l - 1, -m - 1)),
        it1 * dy + (lf + 1.0) * i1 * y0 - mf * ih1 * ym
            - 0.5 * (sc * htilde(l + 1, -m) * yv(l + 1, m - 1) - sh * htilde(l + 1, m) * yv(l + 1, m + 1)),
        it2 * dy + (lf + 1.0) * i2 * y0 - mf * ih2 * ym
            + 0.5 * (st * htilde(l + 1, -m) * yv(l + 1, -m + 1) + sp * htilde(l + 1, m) * yv(l + 1, -m - 1)),
        i1 * dy - mf * ih3 * ym - 0.5 * (sc * hhat(l, m) * yv(l, m - 1) - sh * hhat(l, -m) * yv(l, m + 1)),
        i2 * dy - mf * ih4 * ym + 0.5 * (st * hhat(l, m) * yv(l, -m + 1) + sp * hhat(l, -m) * yv(l, -m - 1)),
    ])
}
