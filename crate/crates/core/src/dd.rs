//! Double-double arithmetic: an unevaluated sum `hi + lo` with |lo| ≤ ulp(hi)/2,
//! giving roughly 32 significant digits on top of the native f64 exponent range.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: DD = DD { hi: 6.931471805599453e-1, lo: 2.3190468138462996e-17 };
pub const PI: DD = DD { hi: 3.141592653589793, lo: 1.2246467991473532e-16 };
pub const EULER_GAMMA: DD = DD { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn recip(self) -> DD {
        DD::ONE / self
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::from_f64(self.hi.sqrt());
        }
        // one Newton step on the f64 estimate doubles the digits
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self.hi - p - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        DD { hi, lo }
    }

    pub fn powi(self, n: i32) -> DD {
        if n == 0 {
            return DD::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = DD::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn exp(self) -> DD {
        if self.hi > 709.0 {
            return DD::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * k;
        // scale down by 2^-10 so a short Taylor series converges to full width
        let s = r * (1.0 / 1024.0);
        let mut term = s;
        let mut sum = s;
        for i in 2..=14 {
            term = term * s / i as f64;
            sum += term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        // (1+sum)^1024 via expm1 doubling: e^{2a}-1 = (e^a-1)(e^a-1+2)
        for _ in 0..10 {
            sum = sum * (sum + 2.0);
        }
        let e = sum + 1.0;
        let scale = 2f64.powi(k as i32);
        DD { hi: e.hi * scale, lo: e.lo * scale }
    }

    pub fn ln(self) -> DD {
        if self.hi <= 0.0 {
            return DD::from_f64(f64::NAN);
        }
        // Newton on exp: y <- y + x e^{-y} - 1
        let y = DD::from_f64(self.hi.ln());
        y + self * (-y).exp() - 1.0
    }
}

/// The arithmetic shared by f64 and [`DD`], so numerically delicate kernels can
/// be written once and run in either width.
pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn of(x: f64) -> Self;
    fn pi() -> Self;
    fn euler_gamma() -> Self;
    fn f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    fn of(x: f64) -> f64 {
        x
    }
    fn pi() -> f64 {
        std::f64::consts::PI
    }
    fn euler_gamma() -> f64 {
        EULER_GAMMA.hi
    }
    fn f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for DD {
    fn of(x: f64) -> DD {
        DD::from_f64(x)
    }
    fn pi() -> DD {
        PI
    }
    fn euler_gamma() -> DD {
        EULER_GAMMA
    }
    fn f64(self) -> f64 {
        self.to_f64()
    }
    fn sqrt(self) -> DD {
        DD::sqrt(self)
    }
    fn ln(self) -> DD {
        DD::ln(self)
    }
    fn exp(self) -> DD {
        DD::exp(self)
    }
    fn abs(self) -> DD {
        DD::abs(self)
    }
    fn is_finite(self) -> bool {
        DD::is_finite(self)
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> DD {
        DD::from_f64(x)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Add<f64> for DD {
    type Output = DD;
    fn add(self, b: f64) -> DD {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Sub<f64> for DD {
    type Output = DD;
    fn sub(self, b: f64) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Mul<f64> for DD {
    type Output = DD;
    fn mul(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + q3
    }
}

impl Div<f64> for DD {
    type Output = DD;
    fn div(self, b: f64) -> DD {
        self / DD::from_f64(b)
    }
}

impl AddAssign for DD {
    fn add_assign(&mut self, b: DD) {
        *self = *self + b;
    }
}

impl AddAssign<f64> for DD {
    fn add_assign(&mut self, b: f64) {
        *self = *self + b;
    }
}

impl SubAssign for DD {
    fn sub_assign(&mut self, b: DD) {
        *self = *self - b;
    }
}

impl MulAssign for DD {
    fn mul_assign(&mut self, b: DD) {
        *self = *self * b;
    }
}

impl MulAssign<f64> for DD {
    fn mul_assign(&mut self, b: f64) {
        *self = *self * b;
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, other: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl std::iter::Sum for DD {
    fn sum<I: Iterator<Item = DD>>(iter: I) -> DD {
        iter.fold(DD::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_times_three() {
        let t = DD::ONE / 3.0;
        let r = t * 3.0 - 1.0;
        assert!(r.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_two_squared() {
        let s = DD::from_f64(2.0).sqrt();
        assert!((s * s - 2.0).to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_matches_products() {
        // e^1 * e^-1 = 1 and e^{0.5}^2 = e
        let e = DD::ONE.exp();
        assert!((e * (-DD::ONE).exp() - 1.0).to_f64().abs() < 1e-30);
        let h = DD::from_f64(0.5).exp();
        assert!((h * h - e).to_f64().abs() < 1e-30);
        assert!((e.hi - std::f64::consts::E).abs() < 1e-15);
        // reference digits of e beyond f64
        let e_lo = 1.4456468917292502e-16;
        assert!((e.lo - e_lo).abs() < 1e-31);
    }

    #[test]
    fn ln_inverts_exp() {
        for x in [0.01, 0.7, 2.0, 123.456] {
            let d = DD::from_f64(x);
            let r = d.ln().exp() / d - 1.0;
            assert!(r.to_f64().abs() < 1e-30, "{x}");
        }
        let l2 = DD::from_f64(2.0).ln();
        assert!((l2 - LN2).to_f64().abs() < 1e-32);
    }

    #[test]
    fn exp_large_arguments() {
        let a = DD::from_f64(40.25).exp();
        let b = DD::from_f64(-40.25).exp();
        assert!((a * b - 1.0).to_f64().abs() < 1e-29);
    }
}
