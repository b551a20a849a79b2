//! Complex double-double arithmetic for the few places where plain doubles
//! run out of bits (parameters within 1e-10 of -2 iterated ~20 times).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: TwoFloat::from_f64(0.0),
        im: TwoFloat::from_f64(0.0),
    };

    pub fn new(re: TwoFloat, im: TwoFloat) -> Self {
        Self { re, im }
    }

    pub fn from_c64(z: Complex64) -> Self {
        Self::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.hi() + self.re.lo(), self.im.hi() + self.im.lo())
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn scale(self, k: TwoFloat) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    pub fn norm_sqr(self) -> f64 {
        self.to_c64().norm_sqr()
    }

    /// One step of `conj(z)^2 + c`.
    #[inline]
    pub fn step(self, c: Cdd) -> Self {
        let x = self.re;
        let y = self.im;
        Self::new(x * x - y * y + c.re, -(x * y * 2.0) + c.im)
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd::new(-self.re, -self.im)
    }
}

/// Real double-double from a (hi, lo) pair.
pub fn dd(hi: f64, lo: f64) -> TwoFloat {
    TwoFloat::from(hi) + TwoFloat::from(lo)
}

pub fn dd_to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}
