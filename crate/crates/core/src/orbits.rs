//! Periodic points, multipliers and the real centres `c_n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::dd::dd_to_f64;
use crate::error::{Error, Result};
use crate::family::{self, ensure_finite, iterate_with_derivative, step};
use crate::par;

const NEWTON_MAX: usize = 100;

/// A cycle of `f_c` together with its multiplier.
///
/// For odd periods the multiplier is `|d f^p / d conj(z)|^2`, stored with a
/// zero imaginary part; for even periods it is the holomorphic derivative of
/// `f^p` along the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub c: Complex64,
    pub period: usize,
    pub points: Vec<Complex64>,
    pub multiplier: Complex64,
}

impl PeriodicOrbit {
    /// Largest `|f_c(z_i) - z_{i+1}|` around the cycle.
    pub fn residual(&self) -> f64 {
        let p = self.points.len();
        (0..p)
            .map(|i| (step(self.c, self.points[i]) - self.points[(i + 1) % p]).norm())
            .fold(0.0, f64::max)
    }
}

/// Result of [`periodic_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub orbits: Vec<PeriodicOrbit>,
    /// Distinct solutions of `f^p(z) = z` found (all periods dividing `p`).
    pub solutions: usize,
    /// False when fewer solutions were found than the degree count allows.
    pub complete: bool,
}

/// One row of the `c_n` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnRecord {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub c_n: f64,
    pub lambda_n: f64,
    pub orbit_check: bool,
    /// Low word of the double-double value of `c_n`.
    #[serde(skip)]
    pub c_n_lo: f64,
}

impl CnRecord {
    pub fn c_n_dd(&self) -> TwoFloat {
        TwoFloat::from(self.c_n) + TwoFloat::from(self.c_n_lo)
    }

    /// `c_n + 2` without cancellation.
    pub fn delta(&self) -> f64 {
        dd_to_f64(self.c_n_dd() + 2.0)
    }
}

/// The fixed point that lands the ray of angle 0.
///
/// Real Newton on `conj(z)^2 + c = z` from the seed `2 + |c|`. When `c` lies
/// outside the tricorn this may have no solution near the real axis; rotated
/// seeds then supply some repelling fixed point.
pub fn beta_fixed_point(c: Complex64) -> Result<Complex64> {
    ensure_finite(c, "parameter c")?;
    let r = family::default_radius(c);
    (0..6)
        .find_map(|k| fixed_point_newton(c, Complex64::from_polar(r, k as f64 * std::f64::consts::PI / 3.0)))
        .ok_or_else(|| Error::NoConvergence(format!("beta fixed point for c = {c}")))
}

fn fixed_point_newton(c: Complex64, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..NEWTON_MAX {
        let r = step(c, z) - z;
        if r.norm() < 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
        let (x, y) = (z.re, z.im);
        // Jacobian of (x^2 - y^2 + cr - x, -2xy + ci - y).
        let (a, b, cc, d) = (2.0 * x - 1.0, -2.0 * y, -2.0 * y, -2.0 * x - 1.0);
        let det = a * d - b * cc;
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = (d * r.re - b * r.im) / det;
        let dy = (-cc * r.re + a * r.im) / det;
        z -= Complex64::new(dx, dy);
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
    }
    // Parabolic fixed points converge only linearly; accept a small residual.
    ((step(c, z) - z).norm() < 1e-12).then_some(z)
}

/// Multiplier of the cycle through `points`, using the parity rule.
pub fn multiplier(c: Complex64, points: &[Complex64]) -> Complex64 {
    let p = points.len();
    if p == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (_, d) = iterate_with_derivative(c, points[0], p);
    if p % 2 == 1 {
        Complex64::new(d.norm_sqr(), 0.0)
    } else {
        d
    }
}

/// One Newton step towards a solution of `f^p(z) = z`.
fn periodic_newton_step(c: Complex64, z: Complex64, p: usize) -> Option<Complex64> {
    let (w, d) = iterate_with_derivative(c, z, p);
    let g = w - z;
    let dz = if p.is_multiple_of(2) {
        // holomorphic: g' = d - 1
        let den = d - 1.0;
        if den.norm() < 1e-300 {
            return None;
        }
        -g / den
    } else {
        // g(z + e) = g + d conj(e) - e
        let den = 1.0 - d.norm_sqr();
        if den.abs() < 1e-300 {
            return None;
        }
        (g + d * g.conj()) / den
    };
    let z = z + dz;
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

/// Polish a guess for a point of period dividing `p`.
pub fn refine_periodic_point(c: Complex64, z0: Complex64, p: usize) -> Option<Complex64> {
    let bound = 4.0 * family::default_radius(c);
    let mut z = z0;
    for _ in 0..NEWTON_MAX {
        let next = periodic_newton_step(c, z, p)?;
        if next.norm() > bound {
            return None;
        }
        let moved = (next - z).norm();
        z = next;
        if moved < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let (w, _) = iterate_with_derivative(c, z, p);
    ((w - z).norm() < 1e-11 * (1.0 + z.norm())).then_some(z)
}

fn minimal_period(c: Complex64, z: Complex64, p: usize, tol: f64) -> usize {
    let mut w = z;
    for k in 1..=p {
        w = step(c, w);
        if (w - z).norm() < tol && p.is_multiple_of(k) {
            return k;
        }
    }
    p
}

fn lex_less(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All cycles of exact period `p`, found by Newton from a 64 x 64 grid.
pub fn periodic_points(c: Complex64, p: usize) -> Result<PeriodicSet> {
    ensure_finite(c, "parameter c")?;
    if p == 0 || p > 12 {
        return Err(Error::InvalidArgument(format!("period {p} outside 1..=12")));
    }
    const GRID: usize = 64;
    const DEDUP: f64 = 1e-8;
    let half = family::default_radius(c);
    let seeds: Vec<Complex64> = (0..GRID * GRID)
        .map(|k| {
            let (i, j) = (k % GRID, k / GRID);
            let s = |t: usize| -half + 2.0 * half * (t as f64 + 0.5) / GRID as f64;
            Complex64::new(s(i), s(j))
        })
        .collect();
    let found: Vec<Option<Complex64>> = par::map(&seeds, |&z| refine_periodic_point(c, z, p));

    let mut roots: Vec<Complex64> = Vec::new();
    for z in found.into_iter().flatten() {
        if roots.iter().all(|r| (r - z).norm() > DEDUP) {
            roots.push(z);
        }
    }
    roots.sort_by(lex_less);
    let solutions = roots.len();

    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let z = roots[i];
        let q = minimal_period(c, z, p, 1e-7);
        let mut pts = Vec::with_capacity(q);
        let mut w = z;
        for _ in 0..q {
            pts.push(w);
            if let Some(j) = roots.iter().position(|r| (r - w).norm() < 1e-7) {
                used[j] = true;
            }
            w = step(c, w);
        }
        if q != p {
            continue;
        }
        // Start the cycle at its lexicographically smallest point.
        let start = (0..q).min_by(|&a, &b| lex_less(&pts[a], &pts[b])).unwrap_or(0);
        pts.rotate_left(start);
        let multiplier = multiplier(c, &pts);
        orbits.push(PeriodicOrbit { c, period: p, points: pts, multiplier });
    }
    orbits.sort_by(|a, b| lex_less(&a.points[0], &b.points[0]));

    // f^p is a polynomial of degree 2^p in z (p even) or in conj(z) (p odd).
    // The even count is exact; for odd p at least two solutions always exist.
    let complete = if p.is_multiple_of(2) { solutions >= 1 << p } else { solutions >= 2 };
    Ok(PeriodicSet { orbits, solutions, complete })
}

/// `Q_c^k(0)` for the real map `Q_c(x) = x^2 + c`.
pub fn critical_orbit_real(c: f64, k: usize) -> f64 {
    (0..k).fold(0.0, |x, _| x * x + c)
}

fn critical_orbit_dd(c: TwoFloat, k: usize) -> (TwoFloat, TwoFloat) {
    // value and d/dc
    let mut x = TwoFloat::from(0.0);
    let mut d = TwoFloat::from(0.0);
    for _ in 0..k {
        d = x * d * 2.0 + 1.0;
        x = x * x + c;
    }
    (x, d)
}

/// Left endpoint and right endpoint (as offsets from -2) bracketing the
/// leftmost root of `Q_c^N(0)` in `(-2, -1.7]`.
fn bracket_leftmost(big_n: usize) -> Option<(f64, f64)> {
    let mut d = 1e-13_f64;
    let mut prev = critical_orbit_real(-2.0 + d, big_n);
    while d < 0.3 {
        let next = (d * 1.001).min(0.3);
        let v = critical_orbit_real(-2.0 + next, big_n);
        if (v > 0.0) != (prev > 0.0) || v == 0.0 {
            return Some((d, next));
        }
        prev = v;
        d = next;
        if next >= 0.3 {
            break;
        }
    }
    None
}

/// Leftmost real root of `c -> Q_c^N(0)`, `N = 2n + 3`, in `[-2, -1.7]`.
pub fn solve_c_n(n: usize) -> Result<CnRecord> {
    if n > 8 {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds 8")));
    }
    let big_n = 2 * n + 3;
    let (dl, dr) = bracket_leftmost(big_n).ok_or(Error::NoBracket { n })?;
    let mut lo = TwoFloat::from(-2.0) + TwoFloat::from(dl);
    let mut hi = TwoFloat::from(-2.0) + TwoFloat::from(dr);
    let sign_lo = critical_orbit_dd(lo, big_n).0 > 0.0;
    // Bisection down to double resolution, then Newton in double-double.
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if dd_to_f64(hi - lo) < 1e-17 * (dr.max(1e-300)) {
            break;
        }
        if (critical_orbit_dd(mid, big_n).0 > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = (lo + hi) / 2.0;
    for _ in 0..8 {
        let (v, d) = critical_orbit_dd(c, big_n);
        if d == 0.0 {
            break;
        }
        let next = c - v / d;
        if next < lo || next > hi {
            break;
        }
        c = next;
    }
    let c_f = dd_to_f64(c);
    let c_n_lo = dd_to_f64(c - TwoFloat::from(c_f));
    if !(c_f > -2.0 && c_f < -1.7) {
        return Err(Error::NoBracket { n });
    }

    // Ordering c_n = Q(0) < 0 = Q^N(0) < Q^{N-1}(0) < ... < Q^2(0).
    let mut orbit = Vec::with_capacity(big_n + 1);
    let mut x = TwoFloat::from(0.0);
    for _ in 0..=big_n {
        orbit.push(x);
        x = x * x + c;
    }
    let scale = 16f64.powi(n as i32);
    let closes = dd_to_f64(orbit[big_n]).abs() < 1e-12 * scale;
    let ordered = (2..big_n).all(|k| orbit[k + 1] < orbit[k]) && orbit[big_n - 1] > 0.0;
    let orbit_check = closes && ordered && orbit[1] < 0.0;

    let beta = beta_fixed_point(Complex64::new(c_f, 0.0))?;
    let lambda_n = multiplier(Complex64::new(c_f, 0.0), &[beta]).re;
    Ok(CnRecord { n, big_n, c_n: c_f, lambda_n, orbit_check, c_n_lo })
}
