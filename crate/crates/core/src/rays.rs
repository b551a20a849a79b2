//! Green potential, Böttcher coordinate and external rays.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{self, ensure_finite, iterate_with_derivative, step};

/// Potential a target must reach before `Phi^{-1}(w) ~ w - conj(c)/(2w)` is exact to double precision.
const TARGET_POTENTIAL: f64 = 23.0;
/// Radius beyond which the Böttcher product is seeded.
const SEED_RADIUS: f64 = 1e8;
/// Cauchy window and tolerance for landing detection.
const LANDING_WINDOW: usize = 20;
const LANDING_TOL: f64 = 1e-8;
/// Landing is only attempted when the trace reaches this potential.
const LANDING_POTENTIAL: f64 = 1e-6;
/// Largest allowed jump between consecutive samples, relative to `max(1, |p|)`,
/// on top of the `|p| dg` drift expected far out where `Phi` is the identity.
const STEP_CEILING: f64 = 0.25;

fn step_ceiling(p: Complex64, dg: f64) -> f64 {
    p.norm().max(1.0) * (STEP_CEILING + 2.0 * dg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub value: f64,
    pub depth: u32,
    /// Last change of the estimate; infinite when the orbit did not escape.
    pub resid: f64,
}

/// `G_c(z) = lim 2^-k log|f^k(z)|`, truncated at `depth`.
pub fn green_potential(c: Complex64, z: Complex64, depth: u32) -> Result<GreenEstimate> {
    ensure_finite(c, "parameter c")?;
    ensure_finite(z, "point z")?;
    let r = family::default_radius(c);
    let mut w = z;
    let mut prev: Option<f64> = None;
    let mut scale = 1.0;
    for k in 0..=depth {
        let m = w.norm();
        if m > r {
            let g = scale * m.ln();
            let resid = prev.map_or(f64::INFINITY, |p: f64| (g - p).abs());
            if m > 1e100 || k == depth {
                return Ok(GreenEstimate { value: g, depth: k, resid });
            }
            prev = Some(g);
        }
        if k == depth {
            break;
        }
        w = step(c, w);
        scale *= 0.5;
    }
    Ok(GreenEstimate { value: 0.0, depth, resid: f64::INFINITY })
}

/// Böttcher coordinate `Phi_c(z)`, tangent to the identity at infinity.
///
/// Uses the product `Phi(z_k) = z_k r_k` with
/// `r_k = conj(sqrt((1 + c / conj(z_k)^2) r_{k+1}))`, seeded by
/// `r = 1 + conj(c) / (2 z^2)` once `|z| > 1e8`.
pub fn boettcher(c: Complex64, z: Complex64, depth: u32) -> Result<Complex64> {
    ensure_finite(c, "parameter c")?;
    ensure_finite(z, "point z")?;
    let mut orbit = vec![z];
    let mut w = z;
    while w.norm() <= SEED_RADIUS {
        if orbit.len() > depth as usize {
            return Err(Error::DepthExceeded(format!("orbit of {z} did not escape within {depth} steps")));
        }
        w = step(c, w);
        orbit.push(w);
    }
    let last = *orbit.last().unwrap_or(&z);
    let mut r = 1.0 + c.conj() / (2.0 * last * last);
    for k in (0..orbit.len() - 1).rev() {
        let zk = orbit[k];
        let zb = zk.conj();
        let q = (1.0 + c / (zb * zb)) * r;
        // The principal root is the continuous one only away from the negative axis.
        if q.re < 0.0 && q.im.abs() < 0.5 * q.norm() {
            return Err(Error::BranchAmbiguity { step: k });
        }
        r = q.sqrt().conj();
    }
    Ok(z * r)
}

/// A rational angle `num / den` in `Q/Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Angle {
    pub num: i64,
    pub den: i64,
}

impl Angle {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::InvalidArgument(format!("angle denominator {den} must be positive")));
        }
        Ok(Self { num: num.rem_euclid(den), den })
    }

    pub fn turns(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The angle under one anti-holomorphic step: `theta -> -2 theta`.
    pub fn step(&self) -> Self {
        let num = (-2i128 * self.num as i128).rem_euclid(self.den as i128) as i64;
        Self { num, den: self.den }
    }

    pub fn iterate(&self, k: usize) -> Self {
        (0..k).fold(*self, |a, _| a.step())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RayKind {
    Dynamical { c: Complex64 },
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub potential: f64,
    pub point: Complex64,
}

/// Polyline approximation of a ray, ordered by decreasing potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub kind: RayKind,
    pub angle: Angle,
    pub samples: Vec<RaySample>,
    pub landing_estimate: Option<Complex64>,
    /// Set when continuation stopped before `g_lo`.
    pub truncated: bool,
}

impl RayTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("potential,re,im\n");
        for p in &self.samples {
            let _ = writeln!(s, "{:e},{:e},{:e}", p.potential, p.point.re, p.point.im);
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self.kind {
            RayKind::Dynamical { .. } => "dynamical",
            RayKind::Parameter => "parameter",
        };
        let c = match self.kind {
            RayKind::Dynamical { c } => serde_json::json!([c.re, c.im]),
            RayKind::Parameter => serde_json::Value::Null,
        };
        let samples: Vec<[f64; 3]> = self
            .samples
            .iter()
            .map(|s| [s.potential, s.point.re, s.point.im])
            .collect();
        serde_json::json!({
            "kind": kind,
            "c": c,
            "angle": { "num": self.angle.num, "den": self.angle.den },
            "samples": samples,
            "landing": self.landing_estimate.map(|z| [z.re, z.im]),
            "truncated": self.truncated,
        })
    }
}

/// Smallest `k` with `2^k g >= TARGET_POTENTIAL`.
fn lift_depth(g: f64) -> usize {
    let mut k = 0;
    let mut h = g;
    while h < TARGET_POTENTIAL {
        h *= 2.0;
        k += 1;
    }
    k
}

/// `Phi_c^{-1}(w)` for `|w|` so large that two terms are exact.
fn inverse_near_infinity(c: Complex64, w: Complex64) -> Complex64 {
    w - c.conj() / (2.0 * w)
}

/// The point on the Böttcher circle of potential `g` at angle `theta`, pushed `k` steps.
fn lifted_target(c: Complex64, angle: Angle, g: f64, k: usize) -> Complex64 {
    let a = angle.iterate(k);
    let w = Complex64::from_polar((g * 2f64.powi(k as i32)).exp(), TAU * a.turns());
    inverse_near_infinity(c, w)
}

/// Potential schedule from `g_start` down to `g_lo`, passing through `g_hi` exactly.
fn schedule(g_start: f64, g_hi: f64, g_lo: f64, per_halving: usize) -> (Vec<f64>, usize) {
    let ratio = 2f64.powf(-1.0 / per_halving as f64);
    let mut gs = Vec::new();
    let mut g = g_start;
    while g > g_hi * (1.0 + 1e-12) {
        gs.push(g);
        g *= ratio;
    }
    let first_recorded = gs.len();
    let mut g = g_hi;
    while g > g_lo {
        gs.push(g);
        g *= ratio;
    }
    gs.push(g_lo);
    (gs, first_recorded)
}

fn landing_of(samples: &[RaySample], g_lo: f64) -> Option<Complex64> {
    if g_lo > LANDING_POTENTIAL || samples.len() < LANDING_WINDOW {
        return None;
    }
    let tail = &samples[samples.len() - LANDING_WINDOW..];
    let last = tail[LANDING_WINDOW - 1].point;
    tail.iter()
        .all(|s| (s.point - last).norm() < LANDING_TOL)
        .then_some(last)
}

fn check_ray_args(g_hi: f64, g_lo: f64, per_halving: usize) -> Result<()> {
    if !(g_hi.is_finite() && g_lo.is_finite() && g_hi > g_lo && g_lo > 0.0) {
        return Err(Error::InvalidArgument(format!("need g_hi > g_lo > 0, got {g_hi}, {g_lo}")));
    }
    if per_halving == 0 {
        return Err(Error::InvalidArgument("steps per halving must be positive".into()));
    }
    Ok(())
}

/// Newton for `f^k(z) = target` from `z`.
fn newton_lift(c: Complex64, z0: Complex64, k: usize, target: Complex64) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..60 {
        let (w, d) = iterate_with_derivative(c, z, k);
        let r = w - target;
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let q = r / d;
        let dz = if k.is_multiple_of(2) { -q } else { -q.conj() };
        z += dz;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let (w, _) = iterate_with_derivative(c, z, k);
    ((w - target).norm() <= 1e-9 * target.norm()).then_some(z)
}

/// Trace `R_c(theta)` from potential `g_hi` down to `g_lo`.
pub fn trace_dynamical_ray(
    c: Complex64,
    angle: Angle,
    g_hi: f64,
    g_lo: f64,
    steps_per_halving: usize,
) -> Result<RayTrace> {
    ensure_finite(c, "parameter c")?;
    check_ray_args(g_hi, g_lo, steps_per_halving)?;
    let g_start = g_hi.max(12.0);
    let (gs, first) = schedule(g_start, g_hi, g_lo, steps_per_halving);
    let mut z = inverse_near_infinity(c, Complex64::from_polar(g_start.exp(), TAU * angle.turns()));
    let mut samples = Vec::new();
    let mut truncated = false;
    for (j, &g) in gs.iter().enumerate() {
        let k = lift_depth(g);
        let target = lifted_target(c, angle, g, k);
        let Some(next) = newton_lift(c, z, k, target) else {
            truncated = true;
            break;
        };
        if j > 0 && (next - z).norm() > step_ceiling(z, gs[j - 1] - g) {
            truncated = true;
            break;
        }
        z = next;
        if j >= first {
            samples.push(RaySample { potential: g, point: z });
        }
    }
    let landing_estimate = if truncated { None } else { landing_of(&samples, g_lo) };
    Ok(RayTrace { kind: RayKind::Dynamical { c }, angle, samples, landing_estimate, truncated })
}

/// `log(f_c^k(c) / target(c))` as a real pair; zero on the parameter ray.
fn parameter_residual(c: Complex64, angle: Angle, g: f64, k: usize) -> Option<[f64; 2]> {
    let w = crate::family::iterate(c, c, k);
    let t = lifted_target(c, angle, g, k);
    let q = (w / t).ln();
    (q.re.is_finite() && q.im.is_finite()).then_some([q.re, q.im])
}

fn newton_parameter(c0: Complex64, angle: Angle, g: f64, k: usize) -> Option<Complex64> {
    let mut c = c0;
    let mut r = parameter_residual(c, angle, g, k)?;
    for _ in 0..60 {
        let h = 1e-7 * c.norm().max(1.0);
        let col = |dc: Complex64| -> Option<[f64; 2]> {
            let p = parameter_residual(c + dc, angle, g, k)?;
            let m = parameter_residual(c - dc, angle, g, k)?;
            Some([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
        };
        let jx = col(Complex64::new(h, 0.0))?;
        let jy = col(Complex64::new(0.0, h))?;
        let det = jx[0] * jy[1] - jy[0] * jx[1];
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let dx = -(jy[1] * r[0] - jy[0] * r[1]) / det;
        let dy = -(-jx[1] * r[0] + jx[0] * r[1]) / det;
        let full = Complex64::new(dx, dy);
        let norm0 = r[0].hypot(r[1]);
        // Step halving until the residual decreases.
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = c + lam * full;
            if let Some(rc) = parameter_residual(cand, angle, g, k) {
                if rc[0].hypot(rc[1]) < norm0 || norm0 < 1e-14 {
                    accepted = Some((cand, rc));
                    break;
                }
            }
            lam *= 0.5;
        }
        let Some((cand, rc)) = accepted else {
            // at the round-off floor no step can decrease the residual
            return (norm0 < 1e-9).then_some(c);
        };
        let moved = (cand - c).norm();
        c = cand;
        r = rc;
        if r[0].hypot(r[1]) < 1e-13 || moved < 1e-15 * c.norm().max(1.0) {
            return Some(c);
        }
    }
    (r[0].hypot(r[1]) < 1e-9).then_some(c)
}

/// Trace the parameter ray of angle `theta` from `g_hi` down to `g_lo`.
pub fn trace_parameter_ray(angle: Angle, g_hi: f64, g_lo: f64, steps: usize) -> Result<RayTrace> {
    check_ray_args(g_hi, g_lo, steps)?;
    let g_start = g_hi.max(12.0);
    let (gs, first) = schedule(g_start, g_hi, g_lo, steps);
    let mut c = Complex64::from_polar(g_start.exp(), TAU * angle.turns());
    let mut samples = Vec::new();
    let mut truncated = false;
    for (j, &g) in gs.iter().enumerate() {
        let k = lift_depth(g);
        let Some(next) = newton_parameter(c, angle, g, k) else {
            truncated = true;
            break;
        };
        if j > 0 && (next - c).norm() > step_ceiling(c, gs[j - 1] - g) {
            truncated = true;
            break;
        }
        c = next;
        if j >= first {
            samples.push(RaySample { potential: g, point: c });
        }
    }
    let landing_estimate = if truncated { None } else { landing_of(&samples, g_lo) };
    Ok(RayTrace { kind: RayKind::Parameter, angle, samples, landing_estimate, truncated })
}
