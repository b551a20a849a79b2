use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fatou::{build_chart, FatouChart, FatouKind, DEFAULT_DEPTH};
use super::ParabolicPoint;
use crate::error::{Error, Result};
use crate::family::{escape_unchecked, step};
use crate::par;

/// Sampling of the strip `{0 <= Re w < 1, |Im w - E| < epsilon}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripGrid {
    pub re: usize,
    pub im: usize,
    pub budget: u32,
}

impl Default for StripGrid {
    fn default() -> Self {
        Self { re: 32, im: 17, budget: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessReport {
    pub c: Complex64,
    pub period: usize,
    #[serde(rename = "E_crit")]
    pub e_crit: f64,
    pub epsilon: f64,
    pub grid: StripGrid,
    pub escape_fraction: f64,
    /// True iff every sample escaped.
    pub verdict: bool,
    pub undetermined_count: usize,
}

impl AccessReport {
    pub fn accessible_evidence(&self) -> bool {
        self.verdict
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sample {
    Escaped,
    Bounded,
    Undetermined,
}

fn classify(chart: &FatouChart, w: Complex64, budget: u32) -> Sample {
    let (mut z, m) = match chart.inverse_start(w) {
        Ok(v) => v,
        Err(_) => return Sample::Undetermined,
    };
    let c = chart.base.c;
    let radius = 2.0 + c.norm();
    // Psi(w) = g^m(Psi(w_m)); an escape on the way counts as an escape of Psi(w).
    for _ in 0..m * chart.period() {
        z = step(c, z);
        if !z.is_finite() {
            return Sample::Undetermined;
        }
        if z.norm() > radius {
            return Sample::Escaped;
        }
    }
    if escape_unchecked(c, z, budget, radius).escaped {
        Sample::Escaped
    } else {
        Sample::Bounded
    }
}

/// Strip-escape test at a parabolic parameter: every sample of the strip of
/// half-width `epsilon` around the critical Ecalle height in one fundamental
/// domain of the repelling cylinder must be mapped by `Psi` into the basin of
/// infinity.
pub fn accessibility_test(pp: &ParabolicPoint, epsilon: f64, grid: StripGrid) -> Result<AccessReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if grid.re == 0 || grid.im == 0 || grid.budget == 0 {
        return Err(Error::InvalidArgument("empty strip grid".into()));
    }
    let attr = build_chart(pp, FatouKind::Attracting, None, DEFAULT_DEPTH)?;
    let e_crit = attr.height(pp.c)?;
    let rep = build_chart(pp, FatouKind::Repelling, None, DEFAULT_DEPTH)?;
    let total = grid.re * grid.im;
    let samples = par::map_range(total, |k| {
        let (i, j) = (k / grid.im, k % grid.im);
        let re = i as f64 / grid.re as f64;
        // open interval: endpoints excluded
        let t = -1.0 + 2.0 * (j as f64 + 1.0) / (grid.im as f64 + 1.0);
        classify(&rep, Complex64::new(re, e_crit + epsilon * t), grid.budget)
    });
    let escaped = samples.iter().filter(|s| **s == Sample::Escaped).count();
    let undetermined = samples.iter().filter(|s| **s == Sample::Undetermined).count();
    Ok(AccessReport {
        c: pp.c,
        period: pp.period,
        e_crit,
        epsilon,
        grid,
        escape_fraction: escaped as f64 / total as f64,
        verdict: escaped == total,
        undetermined_count: undetermined,
    })
}

/// Escape status of `Psi(w)` (for diagnostics and tests).
pub fn psi_escapes(chart: &FatouChart, w: Complex64, budget: u32) -> Option<bool> {
    match classify(chart, w, budget) {
        Sample::Escaped => Some(true),
        Sample::Bounded => Some(false),
        Sample::Undetermined => None,
    }
}
