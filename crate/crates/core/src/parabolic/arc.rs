use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::fatou::{build_chart, FatouKind, DEFAULT_DEPTH};
use super::{check_period, ParabolicPoint};
use crate::error::{Error, Result};
use crate::family::{ensure_finite, iterate, iterate_with_derivative};
use crate::orbits::refine_periodic_point;

type C = Complex64;

/// Directions scanned when looking for the nearest boundary point.
const SCAN_DIRECTIONS: usize = 64;
/// Arc-slide step in the ray angle.
const SLIDE_STEP: f64 = 0.02;

fn residual(p: usize, seed: C, theta: f64, u: &Vector4<f64>) -> Vector4<f64> {
    let z = C::new(u[0], u[1]);
    let c = C::new(u[2], u[3]);
    let (w, d) = iterate_with_derivative(c, z, p);
    let line = ((c - seed) * C::from_polar(1.0, -theta)).im;
    Vector4::new(w.re - z.re, w.im - z.im, d.norm_sqr() - 1.0, line)
}

/// Parabolic point on the ray `seed + t e^{i theta}`, by Newton on
/// `f^p(z) = z`, `|d f^p / d conj(z)|^2 = 1` and the ray constraint.
///
/// Returns `(z, c)` with `z` a point of the parabolic cycle.
pub fn solve_on_ray(p: usize, seed: C, theta: f64, z_guess: C, c_guess: C) -> Result<(C, C)> {
    check_period(p)?;
    ensure_finite(seed, "seed")?;
    let mut u = Vector4::new(z_guess.re, z_guess.im, c_guess.re, c_guess.im);
    for _ in 0..60 {
        let r = residual(p, seed, theta, &u);
        let scale = u.amax().max(1.0);
        if r.amax() < 1e-15 * scale {
            break;
        }
        let mut jac = Matrix4::zeros();
        for k in 0..4 {
            let h = 1e-7 * u[k].abs().max(1e-2);
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let col = (residual(p, seed, theta, &up) - residual(p, seed, theta, &um)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| Error::NoConvergence("singular arc Jacobian".into()))?;
        if !step.iter().all(|x| x.is_finite()) {
            return Err(Error::NoConvergence("arc corrector diverged".into()));
        }
        u += step;
        if step.amax() < 1e-15 * scale {
            break;
        }
    }
    let r = residual(p, seed, theta, &u);
    if r.amax() > 1e-11 {
        return Err(Error::NoConvergence(format!("arc corrector residual {:e}", r.amax())));
    }
    Ok((C::new(u[0], u[1]), C::new(u[2], u[3])))
}

/// Attracting `p`-cycle point at `c`, if the critical orbit finds one.
fn attracting_point(c: C, p: usize) -> Option<C> {
    let radius = 2.0 + c.norm();
    let mut z = C::new(0.0, 0.0);
    for _ in 0..4000 {
        z = iterate(c, z, 2 * p);
        if !(z.norm() <= radius) {
            return None;
        }
    }
    let z = refine_periodic_point(c, z, p)?;
    let (_, d) = iterate_with_derivative(c, z, p);
    (d.norm_sqr() < 1.0).then_some(z)
}

/// Boundary crossing along a ray, bracketed by bisection and then polished.
fn boundary_on_ray(p: usize, seed: C, theta: f64) -> Result<(C, C, f64)> {
    let dir = C::from_polar(1.0, theta);
    let mut z_in = attracting_point(seed, p).ok_or_else(|| {
        Error::InvalidArgument(format!("seed {seed} has no attracting cycle of period {p}"))
    })?;
    let (mut t_in, mut t_out) = (0.0, 1e-4);
    while let Some(z) = attracting_point(seed + t_out * dir, p) {
        t_in = t_out;
        z_in = z;
        t_out *= 2.0;
        if t_out > 4.0 {
            return Err(Error::NoConvergence("component boundary not found".into()));
        }
    }
    while t_out - t_in > 1e-9 * t_out {
        let t = 0.5 * (t_in + t_out);
        match attracting_point(seed + t * dir, p) {
            Some(z) => {
                t_in = t;
                z_in = z;
            }
            None => t_out = t,
        }
    }
    let (z, c) = solve_on_ray(p, seed, theta, z_in, seed + t_in * dir)?;
    Ok((z, c, t_in))
}

struct ArcSample {
    theta: f64,
    z: C,
    c: C,
    pp: ParabolicPoint,
    excess: f64,
}

fn sample(p: usize, seed: C, theta: f64, z: C, c: C, target: f64) -> Result<ArcSample> {
    let (z, c) = solve_on_ray(p, seed, theta, z, c)?;
    let pp = ParabolicPoint::from_cycle_point(c, p, z)?;
    if pp.is_cusp() {
        return Err(Error::Cusp(pp.petal_coeff.norm()));
    }
    let chart = build_chart(&pp, FatouKind::Attracting, None, DEFAULT_DEPTH)?;
    let excess = chart.height(c)? - target;
    Ok(ArcSample { theta, z, c, pp, excess })
}

/// Parabolic point of period `p` with critical Ecalle height `target`, on the
/// arc met by the ray from `c_seed` in direction `theta`.
pub fn find_parabolic_on_arc_toward(p: usize, c_seed: C, theta: f64, target: f64) -> Result<ParabolicPoint> {
    check_period(p)?;
    if !target.is_finite() || !theta.is_finite() {
        return Err(Error::NonFinite("target height or direction"));
    }
    let (z, c, _) = boundary_on_ray(p, c_seed, theta)?;
    let mut a = sample(p, c_seed, theta, z, c, target)?;
    if a.excess.abs() < 1e-9 {
        return Ok(a.pp);
    }
    let b = sample(p, c_seed, theta + SLIDE_STEP, a.z, a.c, target)?;
    let dir = if b.excess.abs() < a.excess.abs() || b.excess.signum() != a.excess.signum() {
        1.0
    } else {
        -1.0
    };
    let mut b = if dir > 0.0 { b } else { sample(p, c_seed, theta - SLIDE_STEP, a.z, a.c, target)? };
    let mut steps = 1;
    while b.excess.signum() == a.excess.signum() {
        if b.excess.abs() >= a.excess.abs() && steps > 1 {
            return Err(Error::NoConvergence("critical height moves away from the target".into()));
        }
        steps += 1;
        if steps as f64 * SLIDE_STEP > std::f64::consts::TAU {
            return Err(Error::NoConvergence("no sign change along the arc".into()));
        }
        let next = sample(p, c_seed, b.theta + dir * SLIDE_STEP, b.z, b.c, target)?;
        a = b;
        b = next;
    }
    for _ in 0..80 {
        let theta = 0.5 * (a.theta + b.theta);
        let m = sample(p, c_seed, theta, a.z, a.c, target)?;
        if m.excess.abs() < 1e-9 || (b.theta - a.theta).abs() < 1e-15 {
            return Ok(m.pp);
        }
        if m.excess.signum() == a.excess.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let best = if a.excess.abs() < b.excess.abs() { a } else { b };
    if best.excess.abs() < 1e-6 {
        Ok(best.pp)
    } else {
        Err(Error::NoConvergence("arc bisection stalled".into()))
    }
}

/// As [`find_parabolic_on_arc_toward`], starting from the boundary point
/// nearest to `c_seed` among 64 ray directions.
pub fn find_parabolic_on_arc(p: usize, c_seed: C, target: f64) -> Result<ParabolicPoint> {
    check_period(p)?;
    ensure_finite(c_seed, "c_seed")?;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..SCAN_DIRECTIONS {
        let theta = std::f64::consts::TAU * k as f64 / SCAN_DIRECTIONS as f64;
        if let Ok(t) = boundary_distance(p, c_seed, theta) {
            if best.is_none_or(|(_, bt)| t < bt * (1.0 - 1e-9)) {
                best = Some((theta, t));
            }
        }
    }
    let (theta, _) = best.ok_or_else(|| Error::NoConvergence("no boundary point found".into()))?;
    find_parabolic_on_arc_toward(p, c_seed, theta, target)
}

/// Distance from `seed` to the component boundary along a ray (coarse).
fn boundary_distance(p: usize, seed: C, theta: f64) -> Result<f64> {
    let dir = C::from_polar(1.0, theta);
    attracting_point(seed, p).ok_or_else(|| Error::InvalidArgument("seed is not hyperbolic".into()))?;
    let (mut t_in, mut t_out) = (0.0, 1e-4);
    while attracting_point(seed + t_out * dir, p).is_some() {
        t_in = t_out;
        t_out *= 2.0;
        if t_out > 4.0 {
            return Err(Error::NoConvergence("component boundary not found".into()));
        }
    }
    for _ in 0..24 {
        let t = 0.5 * (t_in + t_out);
        if attracting_point(seed + t * dir, p).is_some() {
            t_in = t;
        } else {
            t_out = t;
        }
    }
    Ok(t_in)
}
