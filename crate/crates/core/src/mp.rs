//! Configurable-precision complex scalars on top of MPFR.
//!
//! Every [`Cx`] carries its own precision; binary operations round to the
//! larger of the two operand precisions.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Real value at an explicit binary precision.
pub type Real = Float;

pub fn real(prec: u32, value: f64) -> Real {
    Float::with_val(prec, value)
}

pub fn real_int(prec: u32, value: i64) -> Real {
    Float::with_val(prec, value)
}

pub fn pi(prec: u32) -> Real {
    Float::with_val(prec, Constant::Pi)
}

/// `num / den` as a real at `prec` bits.
pub fn ratio(prec: u32, num: i64, den: i64) -> Real {
    Float::with_val(prec, num) / Float::with_val(prec, den)
}

/// Complex number with MPFR real and imaginary parts.
#[derive(Clone, PartialEq)]
pub struct Cx {
    pub re: Real,
    pub im: Real,
}

impl Cx {
    pub fn zero(prec: u32) -> Self {
        Cx {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Cx::from_f64(prec, 1.0, 0.0)
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Cx {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Cx::from_f64(prec, z.re, z.im)
    }

    pub fn from_real(re: Real) -> Self {
        let im = Float::new(re.prec());
        Cx { re, im }
    }

    pub fn new(re: Real, im: Real) -> Self {
        Cx { re, im }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    /// Same value rounded (or widened) to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        Cx {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    pub fn conj(&self) -> Self {
        Cx {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }

    pub fn norm_sqr(&self) -> Real {
        let p = self.prec();
        let a = Float::with_val(p, self.re.square_ref());
        a + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, factor: &Real) -> Self {
        let p = self.prec().max(factor.prec());
        Cx {
            re: Float::with_val(p, &self.re * factor),
            im: Float::with_val(p, &self.im * factor),
        }
    }

    /// `self * conj(other)`.
    pub fn mul_conj(&self, other: &Cx) -> Self {
        let p = self.prec().max(other.prec());
        let rr = Float::with_val(p, &self.re * &other.re);
        let ii = Float::with_val(p, &self.im * &other.im);
        let ir = Float::with_val(p, &self.im * &other.re);
        let ri = Float::with_val(p, &self.re * &other.im);
        Cx {
            re: rr + ii,
            im: ir - ri,
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        let re = Float::with_val(self.prec(), &self.re / &n);
        let im = Float::with_val(self.prec(), &self.im / &n);
        Cx { re, im: -im }
    }

    pub fn div(&self, other: &Cx) -> Self {
        self * &other.recip()
    }

    pub fn powu(&self, n: u32) -> Self {
        let mut acc = Cx::one(self.prec());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        let m = Float::with_val(p, self.re.exp_ref());
        let (s, c) = Float::with_val(p, &self.im).sin_cos(Float::new(p));
        Cx {
            re: Float::with_val(p, &m * &c),
            im: m * s,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)", self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

impl<'a> Add<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn add(self, rhs: &'a Cx) -> Cx {
        let p = self.prec().max(rhs.prec());
        Cx {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}

impl<'a> Sub<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn sub(self, rhs: &'a Cx) -> Cx {
        let p = self.prec().max(rhs.prec());
        Cx {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}

impl<'a> Mul<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn mul(self, rhs: &'a Cx) -> Cx {
        let p = self.prec().max(rhs.prec());
        let rr = Float::with_val(p, &self.re * &rhs.re);
        let ii = Float::with_val(p, &self.im * &rhs.im);
        let ri = Float::with_val(p, &self.re * &rhs.im);
        let ir = Float::with_val(p, &self.im * &rhs.re);
        Cx {
            re: rr - ii,
            im: ri + ir,
        }
    }
}

impl Neg for &Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx {
            re: Float::with_val(self.re.prec(), -&self.re),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }
}

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl AddAssign<&Cx> for Cx {
    fn add_assign(&mut self, rhs: &Cx) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&Cx> for Cx {
    fn sub_assign(&mut self, rhs: &Cx) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&Cx> for Cx {
    fn mul_assign(&mut self, rhs: &Cx) {
        *self = &*self * rhs;
    }
}

/// Accumulates `sum += a * b` without intermediate `Cx` allocations for the
/// product.
pub fn fma_into(acc: &mut Cx, a: &Cx, b: &Cx) {
    let p = acc.prec();
    let mut t = Float::with_val(p, &a.re * &b.re);
    acc.re += &t;
    t.assign_mul(&a.im, &b.im);
    acc.re -= &t;
    t.assign_mul(&a.re, &b.im);
    acc.im += &t;
    t.assign_mul(&a.im, &b.re);
    acc.im += &t;
}

trait AssignMul {
    fn assign_mul(&mut self, a: &Float, b: &Float);
}

impl AssignMul for Float {
    fn assign_mul(&mut self, a: &Float, b: &Float) {
        use rug::Assign;
        self.assign(a * b);
    }
}

/// `2^exp` at `prec` bits.
pub fn pow2(prec: u32, exp: i32) -> Real {
    Float::with_val(prec, 2).pow(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    #[test]
    fn arithmetic_matches_f64() {
        let a = Cx::from_f64(P, 1.5, -2.0);
        let b = Cx::from_f64(P, 0.25, 3.0);
        let prod = (&a * &b).to_c64();
        let expect = Complex64::new(1.5, -2.0) * Complex64::new(0.25, 3.0);
        assert!((prod - expect).norm() < 1e-14);
        let q = a.div(&b).to_c64();
        let expect = Complex64::new(1.5, -2.0) / Complex64::new(0.25, 3.0);
        assert!((q - expect).norm() < 1e-14);
        assert_eq!(a.mul_conj(&b), &a * &b.conj());
    }

    #[test]
    fn powu_and_exp() {
        let z = Cx::from_f64(P, 0.5, 0.5);
        let z5 = z.powu(5).to_c64();
        let e = Complex64::new(0.5, 0.5).powu(5);
        assert!((z5 - e).norm() < 1e-15);
        let ez = z.exp().to_c64();
        assert!((ez - Complex64::new(0.5, 0.5).exp()).norm() < 1e-15);
        assert_eq!(z.powu(0), Cx::one(P));
    }

    #[test]
    fn fma_accumulates() {
        let mut acc = Cx::from_f64(P, 1.0, 1.0);
        fma_into(&mut acc, &Cx::from_f64(P, 2.0, 1.0), &Cx::from_f64(P, 0.0, 1.0));
        assert_eq!(acc.to_c64(), Complex64::new(0.0, 3.0));
    }

    #[test]
    fn precision_is_carried() {
        let third = ratio(P, 1, 3);
        let back = Float::with_val(P, &third * 3u32);
        let err = Float::with_val(P, back - 1u32).abs();
        assert!(err < pow2(P, -250));
        assert_eq!(Cx::zero(128).prec(), 128);
    }
}
