//! The anti-holomorphic quadratic family `f_c(z) = conj(z)^2 + c`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default iteration budget for membership tests.
pub const MEMBERSHIP_MAX_ITER: u32 = 10_000;
/// Default iteration budget for potential estimates.
pub const POTENTIAL_MAX_ITER: u32 = 100;

pub(crate) fn ensure_finite(z: Complex64, what: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// One member `f_c` of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiQuadratic {
    pub c: Complex64,
}

impl AntiQuadratic {
    pub fn new(c: Complex64) -> Result<Self> {
        ensure_finite(c, "parameter c")?;
        Ok(Self { c })
    }

    /// `conj(z)^2 + c`.
    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        ensure_finite(z, "point z")?;
        Ok(step(self.c, z))
    }

    /// The second iterate, a holomorphic quartic in `z`.
    pub fn apply_second(&self, z: Complex64) -> Complex64 {
        apply_second(self.c, z)
    }

    pub fn orbit(&self, z0: Complex64, len: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(len + 1);
        let mut z = z0;
        out.push(z);
        for _ in 0..len {
            z = step(self.c, z);
            out.push(z);
        }
        out
    }
}

/// Unchecked single step used by every hot loop.
#[inline(always)]
pub fn step(c: Complex64, z: Complex64) -> Complex64 {
    // conj(z)^2 = (x^2 - y^2) - 2xy i
    Complex64::new(z.re * z.re - z.im * z.im + c.re, -2.0 * z.re * z.im + c.im)
}

/// `f_c^2(z) = (z^2 + conj(c))^2 + c`.
#[inline]
pub fn apply_second(c: Complex64, z: Complex64) -> Complex64 {
    let w = z * z + c.conj();
    w * w + c
}

/// `f_c^k(z)` by direct iteration.
pub fn iterate(c: Complex64, z: Complex64, k: usize) -> Complex64 {
    (0..k).fold(z, |z, _| step(c, z))
}

/// `f_c^k(z)` together with the derivative of the iterate.
///
/// For even `k` the returned derivative is the holomorphic derivative
/// `d f^k / dz`; for odd `k` it is `d f^k / d conj(z)`.
pub fn iterate_with_derivative(c: Complex64, z: Complex64, k: usize) -> (Complex64, Complex64) {
    let mut z = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        d = 2.0 * z.conj() * d.conj();
        z = step(c, z);
    }
    (z, d)
}

/// Outcome of an escape-time run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub escaped: bool,
    /// Number of applications of `f_c` performed.
    pub iterations: u32,
    pub final_modulus: f64,
    /// `2^-iterations * ln(final_modulus)` when escaped, otherwise 0.
    pub potential: f64,
}

/// Smallest escape radius for which escape is monotone.
pub fn default_radius(c: Complex64) -> f64 {
    2.0 + c.norm()
}

/// Iterate from `z0` until `|z| > radius` or `max_iter` steps have been taken.
pub fn escape_time(c: Complex64, z0: Complex64, max_iter: u32, radius: f64) -> Result<EscapeResult> {
    ensure_finite(c, "parameter c")?;
    ensure_finite(z0, "start point")?;
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(radius >= default_radius(c)) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "escape radius {radius} is below 2 + |c| = {}",
            default_radius(c)
        )));
    }
    Ok(escape_unchecked(c, z0, max_iter, radius))
}

/// [`escape_time`] without argument validation.
#[inline]
pub fn escape_unchecked(c: Complex64, z0: Complex64, max_iter: u32, radius: f64) -> EscapeResult {
    let r2 = radius * radius;
    let mut z = z0;
    let mut k = 0u32;
    loop {
        let m2 = z.norm_sqr();
        if m2 > r2 {
            let modulus = m2.sqrt();
            return EscapeResult {
                escaped: true,
                iterations: k,
                final_modulus: modulus,
                potential: modulus.ln() * (-(k as f64)).exp2(),
            };
        }
        if k == max_iter {
            return EscapeResult {
                escaped: false,
                iterations: max_iter,
                final_modulus: m2.sqrt(),
                potential: 0.0,
            };
        }
        z = step(c, z);
        k += 1;
    }
}

/// Escape-time approximation of tricorn membership via the critical orbit.
pub fn tricorn_member(c: Complex64, max_iter: u32) -> Result<bool> {
    Ok(!escape_time(c, Complex64::new(0.0, 0.0), max_iter, default_radius(c))?.escaped)
}

/// Primitive cube root of unity `e^{2 pi i / 3}`.
pub fn omega() -> Complex64 {
    Complex64::new(-0.5, 3f64.sqrt() / 2.0)
}
