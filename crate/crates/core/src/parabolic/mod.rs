//! Parabolic parameters of odd period, Fatou coordinates for the
//! anti-holomorphic Abel equation `Phi(g(z)) = conj(Phi(z)) + 1/2` with
//! `g = f^p`, Ecalle heights, and the strip-escape accessibility test.
//!
//! For `p = 1` the first-return map `g` is `f_c` itself.

mod access;
mod arc;
mod fatou;
pub(crate) mod series;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ensure_finite, iterate, iterate_with_derivative, step};
use crate::orbits::multiplier;

pub use access::{accessibility_test, psi_escapes, AccessReport, StripGrid};
pub use arc::{find_parabolic_on_arc, find_parabolic_on_arc_toward, solve_on_ray};
pub use fatou::{
    attracting_fatou, build_chart, critical_ecalle_height, lifted_phase, lifted_phase_complex,
    repelling_fatou, repelling_fatou_inverse, FatouChart, FatouKind, LiftedPhase, DEFAULT_DEPTH,
};

/// Cusp guard: `|petal_coeff| < CUSP_TOL * max(1, |x|)` is rejected.
pub const CUSP_TOL: f64 = 1e-6;

/// A parabolic parameter with its marked periodic point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPoint {
    pub c: Complex64,
    pub period: usize,
    /// Point of the parabolic cycle whose immediate basin contains `c`.
    pub x: Complex64,
    /// `a` in `f^{2p}(x + h) = x + h + a h^2 + ...`.
    pub petal_coeff: Complex64,
}

impl ParabolicPoint {
    /// Build the datum from a parameter and any point of its parabolic `p`-cycle.
    ///
    /// The marked point is the cycle point that attracts the critical value.
    pub fn from_cycle_point(c: Complex64, p: usize, z: Complex64) -> Result<Self> {
        check_period(p)?;
        ensure_finite(c, "c")?;
        ensure_finite(z, "z")?;
        let cycle: Vec<Complex64> = (0..p).map(|j| iterate(c, z, j)).collect();
        let mut y = c;
        let radius = 2.0 + c.norm();
        for _ in 0..4000 {
            y = iterate(c, y, 2 * p);
            if !(y.norm() <= radius) {
                return Err(Error::OrbitEscaped);
            }
        }
        let x = cycle
            .iter()
            .copied()
            .min_by(|a, b| (a - y).norm().total_cmp(&(b - y).norm()))
            .expect("p >= 1");
        let petal_coeff = series::return_map_series(c, x, p, 2)[2];
        Ok(Self { c, period: p, x, petal_coeff })
    }

    /// Locate the parabolic cycle of period `p` at `c` from the critical orbit.
    pub fn locate(c: Complex64, p: usize) -> Result<Self> {
        check_period(p)?;
        ensure_finite(c, "c")?;
        let radius = 2.0 + c.norm();
        let mut y = c;
        for _ in 0..4000 {
            y = iterate(c, y, 2 * p);
            if !(y.norm() <= radius) {
                return Err(Error::OrbitEscaped);
            }
        }
        // x is a simple zero of F' - 1 where F = f^{2p}.
        let g = |z: Complex64| iterate_with_derivative(c, z, 2 * p).1 - 1.0;
        let mut z = y;
        let mut ok = false;
        for _ in 0..60 {
            let h = 1e-6 * z.norm().max(1.0);
            let dg = (g(z + h) - g(z - h)) / (2.0 * h);
            let dz = g(z) / dg;
            if !dz.is_finite() {
                break;
            }
            z -= dz;
            if dz.norm() <= 1e-15 * z.norm().max(1.0) {
                ok = true;
                break;
            }
        }
        let fixed = (iterate(c, z, p) - z).norm();
        if !ok || fixed > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "no parabolic cycle of period {p} at c = {c}"
            )));
        }
        Self::from_cycle_point(c, p, z)
    }

    /// Points of the cycle, starting at `x`.
    pub fn cycle(&self) -> Vec<Complex64> {
        (0..self.period).map(|j| iterate(self.c, self.x, j)).collect()
    }

    /// Multiplier of the cycle (`|d/dz̄ f^p|^2` for odd `p`).
    pub fn multiplier(&self) -> Complex64 {
        multiplier(self.c, &self.cycle())
    }

    /// `|f^p(x) - x|`.
    pub fn fixed_residual(&self) -> f64 {
        (iterate(self.c, self.x, self.period) - self.x).norm()
    }

    pub fn is_cusp(&self) -> bool {
        self.petal_coeff.norm() < CUSP_TOL * self.x.norm().max(1.0)
    }
}

pub(crate) fn check_period(p: usize) -> Result<()> {
    if p == 0 || p.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("period must be odd, got {p}")));
    }
    Ok(())
}

/// Period-one parabolic parameter on the deltoid: `z0 = e^{i phi} / 2`,
/// `c = z0 - conj(z0)^2`.
///
/// At the cusps (`phi = pi/3, pi, 5pi/3`) the returned petal coefficient vanishes.
pub fn deltoid_parabolic(phi: f64) -> ParabolicPoint {
    let z0 = Complex64::from_polar(0.5, phi);
    let c = z0 - z0.conj() * z0.conj();
    debug_assert!((step(c, z0) - z0).norm() < 1e-14);
    let petal_coeff = series::return_map_series(c, z0, 1, 2)[2];
    ParabolicPoint { c, period: 1, x: z0, petal_coeff }
}
