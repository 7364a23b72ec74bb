//! Double-double arithmetic (an unevaluated sum `hi + lo` of two `f64`s).
//!
//! Used where a second difference of `ln f` has to be resolved far below
//! `f64` rounding: the log-convexity defect divides by `λ(1−λ)(x−y)²`, which
//! on fine grids is 1e−8 or smaller. Roughly 31 significant digits for the
//! arithmetic operations and the elementary functions below, degrading for
//! magnitudes beyond about 1e±290 where the low word goes subnormal.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const LN2: Dd = Dd::new(std::f64::consts::LN_2, 2.3190468138462996e-17);
pub const PI: Dd = Dd::new(std::f64::consts::PI, 1.2246467991473532e-16);
pub const FRAC_PI_2: Dd = Dd::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
pub const E: Dd = Dd::new(std::f64::consts::E, 1.4456468917292502e-16);

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
const EPS: f64 = 4.93038065763132e-32; // 2^-104

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
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const ZERO: Dd = Dd::new(0.0, 0.0);
    pub const ONE: Dd = Dd::new(1.0, 0.0);

    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Multiplication by an exact power of two.
    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd::new(self.hi * s, self.lo * s)
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (p, e) = quick_two_sum(p, e + self.lo * b);
        Dd::new(p, e)
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn powi(self, n: i64) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = self;
        let mut m = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while m > 0 {
            if m & 1 == 1 {
                acc = acc * base;
            }
            m >>= 1;
            if m > 0 {
                base = base.sqr();
            }
        }
        if n < 0 {
            Dd::ONE / acc
        } else {
            acc
        }
    }

    /// Square root; `None` for negative input.
    pub fn sqrt(self) -> Option<Dd> {
        if self.hi < 0.0 {
            return None;
        }
        if self.hi == 0.0 {
            return Some(Dd::ZERO);
        }
        let x = self.hi.sqrt();
        let y = Dd::from_f64(x);
        Some(y + (self - y.sqr()).mul_f64(0.5 / x))
    }

    /// `e^self − 1` for |self| ≤ ln2/2, by Taylor series on an argument
    /// scaled down by 2^10 and the doubling identity `em1(2r) = em1(r)(em1(r) + 2)`.
    fn expm1_reduced(self) -> Dd {
        const HALVINGS: i32 = 10;
        let r = self.ldexp(-HALVINGS);
        let mut term = r;
        let mut sum = r;
        let mut n = 1.0;
        loop {
            n += 1.0;
            term = (term * r) / Dd::from_f64(n);
            sum = sum + term;
            if term.hi.abs() <= EPS * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..HALVINGS {
            sum = sum * (sum + Dd::from_f64(2.0));
        }
        sum
    }

    /// `e^self`; overflows to infinity above ~709.78 and underflows to zero.
    pub fn exp(self) -> Dd {
        if self.hi > 709.8 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        let e = r.expm1_reduced() + Dd::ONE;
        // split the scale so that 2^k never overflows on its own
        let k = k as i32;
        let half = k / 2;
        e.ldexp(half).ldexp(k - half)
    }

    /// Natural logarithm; `None` for non-positive input.
    pub fn ln(self) -> Option<Dd> {
        if self.hi <= 0.0 {
            return None;
        }
        // one Newton step on y ↦ y + x·e^{−y} − 1 doubles the f64 seed's precision
        let y = Dd::from_f64(self.hi.ln());
        Some(y + self * (-y).exp() - Dd::ONE)
    }

    /// sin and cos of a reduced argument |r| ≤ π/4.
    fn sin_cos_reduced(r: Dd) -> (Dd, Dd) {
        let r2 = r.sqr();
        let mut term = r;
        let mut sin = r;
        let mut n = 1.0;
        while term.hi.abs() > EPS * sin.hi.abs().max(EPS) {
            term = -(term * r2) / Dd::from_f64((n + 1.0) * (n + 2.0));
            sin = sin + term;
            n += 2.0;
        }
        let mut term = Dd::ONE;
        let mut cos = Dd::ONE;
        let mut n = 0.0;
        while term.hi.abs() > EPS {
            term = -(term * r2) / Dd::from_f64((n + 1.0) * (n + 2.0));
            cos = cos + term;
            n += 2.0;
        }
        (sin, cos)
    }

    fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2.mul_f64(k);
        let (s, c) = Dd::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }

    pub fn sinh(self) -> Dd {
        if self.hi.abs() < 0.5 {
            // avoid cancellation in (e^x − e^{−x})/2
            let x2 = self.sqr();
            let mut term = self;
            let mut sum = self;
            let mut n = 1.0;
            while term.hi.abs() > EPS * sum.hi.abs().max(EPS) {
                term = (term * x2) / Dd::from_f64((n + 1.0) * (n + 2.0));
                sum = sum + term;
                n += 2.0;
            }
            sum
        } else {
            let e = self.exp();
            (e - Dd::ONE / e).ldexp(-1)
        }
    }

    pub fn cosh(self) -> Dd {
        let e = self.exp();
        (e + Dd::ONE / e).ldexp(-1)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd::new(-self.hi, -self.lo)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (s, e) = quick_two_sum(s, e + f);
        Dd::new(s, e)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let (p, e) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Dd::new(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd::new(q1, q2) + Dd::from_f64(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from 50-digit arithmetic
    fn close(got: Dd, want_hi: f64, want_lo: f64, rel: f64) {
        let err = ((got - Dd::new(want_hi, want_lo)).to_f64()).abs();
        assert!(
            err <= rel * want_hi.abs(),
            "got {:?}, want {want_hi:e} + {want_lo:e}, err {err:e}",
            got
        );
    }

    #[test]
    fn elementary_functions_match_high_precision() {
        let x = Dd::from_f64(0.7);
        // 60-digit references at the exact binary value of the argument, as (hi, lo)
        let cases = [
            (x.exp(), 2.0137527074704766, -2.0058243549764793e-16),
            (x.ln().unwrap(), -0.35667494393873245, 4.82556379937662e-18),
            (x.sin(), 0.644217687237691, 2.8740567927338755e-18),
            (x.cos(), 0.7648421872844885, -4.013780434022238e-17),
            (x.sinh(), 0.7585837018395335, -4.9693841630321686e-17),
            (x.cosh(), 1.255169005630943, -3.986629140481058e-17),
            (Dd::from_f64(-20.5).exp(), 1.2501528663867426e-09, 6.448235878237776e-26),
            (
                Dd::from_f64(12345.678).ln().unwrap(),
                9.421061321291832,
                -1.9085650743481053e-16,
            ),
            (Dd::from_f64(100.25).sin(), -0.2772828564548513, -1.361336774720287e-17),
        ];
        for (got, hi, lo) in cases {
            close(got, hi, lo, 1e-30);
        }
    }

    #[test]
    fn exp_ln_round_trip_to_double_double_precision() {
        // relative error of exp grows with |argument|, so the extremes get a looser bound
        for (v, bound) in [
            (1e-200, 1e-27),
            (1e-5, 1e-30),
            (0.3, 1e-30),
            (1.0, 1e-31),
            (2.5, 1e-30),
            (1e10, 1e-29),
            (1e200, 1e-27),
        ] {
            let x = Dd::from_f64(v);
            let back = x.ln().unwrap().exp();
            let rel = ((back - x) / x).to_f64().abs();
            assert!(rel < bound, "{v}: {rel:e}");
        }
    }

    #[test]
    fn sqrt_and_powi() {
        let two = Dd::from_f64(2.0);
        let r = two.sqrt().unwrap();
        assert!((r.sqr() - two).to_f64().abs() < 1e-31);
        assert!(Dd::from_f64(-1.0).sqrt().is_none());
        assert_eq!(two.powi(10).to_f64(), 1024.0);
        assert_eq!(two.powi(-2).to_f64(), 0.25);
        assert_eq!(Dd::from_f64(7.0).powi(0), Dd::ONE);
    }

    #[test]
    fn sinh_small_argument_keeps_relative_precision() {
        let x = Dd::from_f64(1e-12);
        let s = x.sinh();
        // sinh(x) = x + x³/6 + …
        assert!(((s - x).to_f64() - 1e-36 / 6.0).abs() < 1e-45);
    }
}
