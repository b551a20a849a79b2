//! Koenigs linearisation of `F = f_c^2` at the repelling fixed point `beta`,
//! its inverse (the Poincaré map), and the coefficients derived from it.
//!
//! Both directions are seeded by Taylor series at `beta`. The Poincaré
//! series `psi(u) = beta + u + ...` solves `psi(lambda u) = F(psi(u))`; its
//! reversion gives the local linearizer. Far from `beta` the linearizer is
//! evaluated by pulling the point back with the inverse branch of `F` that
//! fixes `beta`, and the Poincaré map by pushing forward with `F`.
//! Normalization `kappa(0) = 1` divides by the unnormalized value at 0.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{ensure_finite, iterate};
use crate::orbits::{beta_fixed_point, multiplier};

/// Number of Taylor coefficients kept in each series.
const TERMS: usize = 32;
/// Maximum number of pullbacks or pushforwards.
const MAX_DEPTH: usize = 60;

/// Linearization data at `beta_c`.
#[derive(Debug, Clone, Serialize)]
pub struct KoenigsChart {
    pub c: Complex64,
    pub beta: Complex64,
    /// Multiplier of `f_c^2` at `beta` (real and positive, stored as complex).
    pub lambda: Complex64,
    /// `kappa'(0)`, so that `kappa(z) = 1 + a_c z + O(z^2)`.
    pub a_c: Complex64,
    /// Radius around `beta` on which the local series is used directly.
    pub lin_radius: f64,
    /// Coefficients of `psi(u) - beta`, index = power; `psi[1] = 1`.
    #[serde(skip)]
    psi: Vec<Complex64>,
    /// Coefficients of the unnormalized local linearizer in `z - beta`.
    #[serde(skip)]
    kap: Vec<Complex64>,
    /// Unnormalized linearizer at 0.
    #[serde(skip)]
    kappa0: Complex64,
}

/// `b0` and `b0*`, the Wirtinger derivatives of `A_0` at `c = -2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BConstants {
    pub b0: Complex64,
    pub b0_star: Complex64,
}

fn series_mul(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (i, x) in a.iter().enumerate().take(m) {
        if *x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(m - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * w + a)
}

fn horner_derivative(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, a)| acc * w + a * k as f64)
}

/// Taylor coefficients of `psi(u) - beta` for `psi(lambda u) = F(psi(u))`.
fn poincare_series(c: Complex64, beta: Complex64, lambda: Complex64) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let a = beta * beta + c.conj();
    let mut p = vec![zero; TERMS];
    p[1] = Complex64::new(1.0, 0.0);
    let mut lam_k = lambda;
    for k in 2..TERMS {
        lam_k *= lambda;
        let w2 = series_mul(&p, &p, k + 1);
        // delta = 2 beta w + w^2, known up to order k-1
        let delta: Vec<Complex64> = (0..k).map(|j| 2.0 * beta * p[j] + w2[j]).collect();
        let d2 = series_mul(&delta, &delta, k + 1);
        p[k] = (2.0 * a * w2[k] + d2[k]) / (lam_k - lambda);
    }
    p
}

/// Series reversion: coefficients `q` with `sum q_k w(u)^k = u`.
fn revert(p: &[Complex64]) -> Vec<Complex64> {
    let m = p.len();
    let zero = Complex64::new(0.0, 0.0);
    // powers[k] = w^k truncated to m terms
    let mut powers: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut unit = vec![zero; m];
    unit[0] = Complex64::new(1.0, 0.0);
    powers.push(unit);
    for k in 1..m {
        let next = series_mul(&powers[k - 1], p, m);
        powers.push(next);
    }
    let mut q = vec![zero; m];
    for order in 1..m {
        let mut s = if order == 1 { Complex64::new(1.0, 0.0) } else { zero };
        for k in 1..order {
            s -= q[k] * powers[k][order];
        }
        q[order] = s / powers[order][order];
    }
    q
}

/// `F(beta + w) - beta` without cancellation.
#[inline]
fn push_deviation(c: Complex64, beta: Complex64, w: Complex64) -> Complex64 {
    let a = beta * beta + c.conj();
    let d = 2.0 * beta * w + w * w;
    2.0 * a * d + d * d
}

impl KoenigsChart {
    /// Preimage of `z` under `F` closest to `beta`.
    fn inverse_branch(&self, z: Complex64) -> Complex64 {
        let s = (z - self.c).sqrt();
        let cb = self.c.conj();
        let mut best = Complex64::new(f64::INFINITY, 0.0);
        for t in [s, -s] {
            let y = (t - cb).sqrt();
            for cand in [y, -y] {
                if (cand - self.beta).norm() < (best - self.beta).norm() {
                    best = cand;
                }
            }
        }
        best
    }

    /// Unnormalized linearizer and its derivative at `z`.
    fn kappa_raw(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        ensure_finite(z, "point z")?;
        let mut y = z;
        let mut scale = Complex64::new(1.0, 0.0);
        let mut dprod = Complex64::new(1.0, 0.0);
        for _ in 0..=MAX_DEPTH {
            let w = y - self.beta;
            if w.norm() <= self.lin_radius {
                let val = scale * horner(&self.kap, w);
                let der = scale * horner_derivative(&self.kap, w) * dprod;
                return Ok((val, der));
            }
            let next = self.inverse_branch(y);
            // g'(y) = 1 / F'(g(y))
            let fp = 4.0 * next * (next * next + self.c.conj());
            dprod /= fp;
            scale *= self.lambda;
            y = next;
        }
        Err(Error::DepthExceeded(format!(
            "pullback of {z} did not reach the linearization disk"
        )))
    }

    /// Unnormalized Poincaré map (derivative 1 at the origin).
    fn psi_raw(&self, v: Complex64) -> Result<Complex64> {
        ensure_finite(v, "argument u")?;
        let mut k = 0usize;
        let mut u = v;
        while u.norm() > self.lin_radius {
            u /= self.lambda;
            k += 1;
            if k > MAX_DEPTH {
                return Err(Error::Overflow(format!("Poincaré map at {v} needs more than {MAX_DEPTH} iterates")));
            }
        }
        let mut w = horner(&self.psi, u);
        for _ in 0..k {
            w = push_deviation(self.c, self.beta, w);
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Overflow(format!("Poincaré map at {v} overflowed")));
            }
        }
        Ok(self.beta + w)
    }

    /// `kappa'(beta)`.
    pub fn derivative_at_beta(&self) -> Complex64 {
        1.0 / self.kappa0
    }
}

/// Build the chart at `c`.
pub fn build_chart(c: Complex64) -> Result<KoenigsChart> {
    ensure_finite(c, "parameter c")?;
    let beta = beta_fixed_point(c)?;
    let lambda = multiplier(c, &[beta]);
    if lambda.norm() <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "beta is not repelling at c = {c} (multiplier {})",
            lambda.re
        )));
    }
    let psi = poincare_series(c, beta, lambda);
    let kap = revert(&psi);
    let zero = Complex64::new(0.0, 0.0);
    let mut chart = KoenigsChart {
        c,
        beta,
        lambda,
        a_c: zero,
        lin_radius: 0.05 * beta.norm(),
        psi,
        kap,
        kappa0: Complex64::new(1.0, 0.0),
    };

    // Halve the radius until the series agrees with one pullback of itself.
    for _ in 0..20 {
        let r = chart.lin_radius;
        let worst = (0..16)
            .map(|j| {
                let z = chart.beta + Complex64::from_polar(r, j as f64 * std::f64::consts::TAU / 16.0);
                let direct = horner(&chart.kap, z - chart.beta);
                let pulled = chart.lambda * horner(&chart.kap, chart.inverse_branch(z) - chart.beta);
                (direct - pulled).norm() / direct.norm().max(1e-300)
            })
            .fold(0.0, f64::max);
        if worst < 1e-13 {
            break;
        }
        chart.lin_radius *= 0.5;
    }

    let (k0, dk0) = chart.kappa_raw(zero)?;
    if k0.norm() < 1e-300 {
        return Err(Error::InvalidArgument("linearizer vanishes at 0".into()));
    }
    chart.kappa0 = k0;
    chart.a_c = dk0 / k0;
    if chart.a_c.norm() == 0.0 {
        return Err(Error::InvalidArgument("a_c vanishes".into()));
    }
    Ok(chart)
}

/// `kappa_c(z)` normalized by `kappa(beta) = 0`, `kappa(0) = 1`.
pub fn koenigs_eval(chart: &KoenigsChart, z: Complex64) -> Result<Complex64> {
    Ok(chart.kappa_raw(z)?.0 / chart.kappa0)
}

/// Derivative of `kappa_c` at `z`.
pub fn koenigs_derivative(chart: &KoenigsChart, z: Complex64) -> Result<Complex64> {
    Ok(chart.kappa_raw(z)?.1 / chart.kappa0)
}

/// `Psi_c(u)`, the inverse of `kappa_c` with `Psi(0) = beta`, `Psi(1) = 0`.
pub fn poincare_eval(chart: &KoenigsChart, u: Complex64) -> Result<Complex64> {
    chart.psi_raw(u * chart.kappa0)
}

/// Coefficient of `conj(z)^i` in `kappa_c(f_c^3(z))`, for `i` in `0..=4`.
///
/// Fitted from 64 samples on the circle `|z| = 1e-3`; the fit in powers
/// `0..=4` of `conj(z)` reduces to a discrete Fourier projection.
pub fn coefficient_a(c: Complex64, i: usize) -> Result<Complex64> {
    let chart = build_chart(c)?;
    coefficient_a_with(&chart, i)
}

/// [`coefficient_a`] on a prebuilt chart.
pub fn coefficient_a_with(chart: &KoenigsChart, i: usize) -> Result<Complex64> {
    const SAMPLES: usize = 64;
    const R_FIT: f64 = 1e-3;
    if i > 4 {
        return Err(Error::InvalidArgument(format!("coefficient index {i} outside 0..=4")));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..SAMPLES {
        let theta = std::f64::consts::TAU * j as f64 / SAMPLES as f64;
        let z = Complex64::from_polar(R_FIT, theta);
        let v = koenigs_eval(chart, iterate(chart.c, z, 3))?;
        // conj(z)^i = r^i e^{-i i theta}
        acc += v * Complex64::from_polar(1.0, i as f64 * theta);
    }
    let a = acc / (SAMPLES as f64 * R_FIT.powi(i as i32));
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::IllConditioned(format!("coefficient A_{i} is not finite")));
    }
    Ok(a)
}

/// `b0 = dA_0/dc` and `b0* = dA_0/d conj(c)` at `c = -2`.
///
/// Central differences along the real and imaginary axes with `h = 1e-5`,
/// Richardson-combined with `h / 2`.
pub fn estimate_b_constants() -> Result<BConstants> {
    let base = Complex64::new(-2.0, 0.0);
    let a0 = |c: Complex64| coefficient_a(c, 0);
    let partials = |h: f64| -> Result<(Complex64, Complex64)> {
        let dx = (a0(base + h)? - a0(base - h)?) / (2.0 * h);
        let ih = Complex64::new(0.0, h);
        let dy = (a0(base + ih)? - a0(base - ih)?) / (2.0 * h);
        Ok((dx, dy))
    };
    let h = 1e-5;
    let (dx1, dy1) = partials(h)?;
    let (dx2, dy2) = partials(h / 2.0)?;
    let dx = (4.0 * dx2 - dx1) / 3.0;
    let dy = (4.0 * dy2 - dy1) / 3.0;
    let i = Complex64::new(0.0, 1.0);
    Ok(BConstants {
        b0: 0.5 * (dx - i * dy),
        b0_star: 0.5 * (dx + i * dy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::apply_second;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chebyshev_psi(w: f64) -> f64 {
        if w >= 0.0 {
            2.0 * (PI * w.sqrt() / 2.0).cos()
        } else {
            2.0 * (PI * (-w).sqrt() / 2.0).cosh()
        }
    }

    #[test]
    fn chart_at_minus_two() {
        let ch = build_chart(c(-2.0, 0.0)).unwrap();
        assert!((ch.lambda - c(16.0, 0.0)).norm() < 1e-12);
        assert!((ch.beta - c(2.0, 0.0)).norm() < 1e-14);
        assert!((ch.a_c - c(-2.0 / PI, 0.0)).norm() < 1e-12, "{}", ch.a_c);
        assert!((ch.derivative_at_beta() - c(-4.0 / (PI * PI), 0.0)).norm() < 1e-12);
        assert!((koenigs_eval(&ch, c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn koenigs_examples_at_minus_two() {
        let ch = build_chart(c(-2.0, 0.0)).unwrap();
        assert!((koenigs_eval(&ch, c(1.0, 0.0)).unwrap() - 4.0 / 9.0).norm() < 1e-12);
        assert!((koenigs_eval(&ch, c(-1.0, 0.0)).unwrap() - 16.0 / 9.0).norm() < 1e-12);
        assert!(koenigs_eval(&ch, c(2.0, 0.0)).unwrap().norm() < 1e-15);
        // closed form (2/pi arccos(z/2))^2 on the segment
        for k in 0..=40 {
            let x = -1.9 + 3.8 * k as f64 / 40.0;
            let exact = (2.0 / PI * (x / 2.0).acos()).powi(2);
            let got = koenigs_eval(&ch, c(x, 0.0)).unwrap();
            assert!((got - exact).norm() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn poincare_examples_at_minus_two() {
        let ch = build_chart(c(-2.0, 0.0)).unwrap();
        assert!((poincare_eval(&ch, c(4.0, 0.0)).unwrap() - c(-2.0, 0.0)).norm() < 1e-10);
        assert!(poincare_eval(&ch, c(1.0, 0.0)).unwrap().norm() < 1e-12);
        assert!((poincare_eval(&ch, c(0.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        for k in 0..=50 {
            let w = -3.0 + 0.2 * k as f64;
            let got = poincare_eval(&ch, c(w, 0.0)).unwrap();
            assert!((got.re - chebyshev_psi(w)).abs() < 1e-9 && got.im.abs() < 1e-9, "w = {w}");
        }
    }

    #[test]
    fn coefficients_at_minus_two() {
        let ch = build_chart(c(-2.0, 0.0)).unwrap();
        let a0 = coefficient_a_with(&ch, 0).unwrap();
        let a2 = coefficient_a_with(&ch, 2).unwrap();
        assert!(a0.norm() < 1e-12);
        assert!((a2 - c(64.0 / (PI * PI), 0.0)).norm() / (64.0 / (PI * PI)) < 1e-7, "{a2}");
        assert!(coefficient_a_with(&ch, 5).is_err());
    }

    #[test]
    fn a0_at_centres_is_lambda_power() {
        for n in 1..=5 {
            let r = crate::orbits::solve_c_n(n).unwrap();
            let a0 = coefficient_a(c(r.c_n, 0.0), 0).unwrap();
            let expect = r.lambda_n.powi(-(n as i32));
            assert!((a0.re - expect).abs() / expect < 1e-6, "n = {n}: {a0} vs {expect}");
            assert!(a0.im.abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_near_sixteen_at_c1() {
        let r = crate::orbits::solve_c_n(1).unwrap();
        let ch = build_chart(c(r.c_n, 0.0)).unwrap();
        assert!((ch.lambda - 16.0).norm() < 0.5);
    }

    #[test]
    fn b_constants() {
        let b = estimate_b_constants().unwrap();
        let b0 = 896.0 / (15.0 * PI * PI);
        let bs = -256.0 / (15.0 * PI * PI);
        assert!((b.b0.re - b0).abs() / b0 < 1e-4, "{}", b.b0);
        assert!((b.b0_star.re - bs).abs() / bs.abs() < 1e-4, "{}", b.b0_star);
        assert!(b.b0.im.abs() < 1e-4 && b.b0_star.im.abs() < 1e-4);
        let gap = b.b0.norm_sqr() - b.b0_star.norm_sqr();
        assert!((gap - (b0 * b0 - bs * bs)).abs() < 1e-2);
        assert!((b0 * b0 - bs * bs - 33.64).abs() < 0.01);
    }

    #[test]
    fn rejects_attracting_beta() {
        assert!(build_chart(c(0.25, 0.0)).is_err());
    }

    #[test]
    fn summary_json() {
        let ch = build_chart(c(-2.0, 0.0)).unwrap();
        let v = serde_json::to_value(&ch).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        for k in ["c", "beta", "lambda", "a_c", "lin_radius"] {
            assert!(v.get(k).is_some());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn linearization_and_inverse(cr in -2.0f64..-1.75, ci in -0.05f64..0.05,
                                     r in 0.0f64..0.6, th in 0.0f64..std::f64::consts::TAU) {
            let ch = build_chart(c(cr, ci)).unwrap();
            let z = ch.beta + Complex64::from_polar(r, th);
            let k = koenigs_eval(&ch, z).unwrap();
            let kf = koenigs_eval(&ch, apply_second(ch.c, z)).unwrap();
            let lk = ch.lambda * k;
            prop_assert!((kf - lk).norm() / (1.0 + lk.norm()) < 1e-9);
            let back = poincare_eval(&ch, k).unwrap();
            prop_assert!((back - z).norm() < 1e-8);
        }
    }
}
