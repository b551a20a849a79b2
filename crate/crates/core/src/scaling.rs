//! Rescaled return maps around the centres `c_n` and their limit
//! `conj(Z)^2 + (|b0|^2 - |b0*|^2) t`.
//!
//! The return map is iterated in double-double: at `n = 5` the parameter
//! offset `rho_n(t)` is ~1e-12 and the orbit is amplified by `16^n` twice,
//! which leaves too few bits in plain doubles.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::family::ensure_finite;
use crate::koenigs::{build_chart, coefficient_a_with, estimate_b_constants};
use crate::orbits::solve_c_n;
use crate::par;

/// Constants of the limit at `c = -2`, shared by every frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants {
    pub lambda_hat: f64,
    pub a_hat: f64,
    pub a2_hat: f64,
    pub b0: f64,
    pub b0_star: f64,
}

impl LimitConstants {
    pub fn compute() -> Result<Self> {
        let chart = build_chart(Complex64::new(-2.0, 0.0))?;
        let a2 = coefficient_a_with(&chart, 2)?;
        let b = estimate_b_constants()?;
        Ok(Self {
            lambda_hat: chart.lambda.re,
            a_hat: chart.a_c.re,
            a2_hat: a2.re,
            b0: b.b0.re,
            b0_star: b.b0_star.re,
        })
    }

    /// `|b0|^2 - |b0*|^2`, the coefficient of `t` in the limit map.
    pub fn drift(&self) -> f64 {
        self.b0 * self.b0 - self.b0_star * self.b0_star
    }
}

/// Per-`n` data of the scaling limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFrame {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub c_n: f64,
    pub lambda_cn: f64,
    pub alpha_n: f64,
    pub k_n: f64,
    pub b0: f64,
    pub b0_star: f64,
    #[serde(skip)]
    pub c_n_lo: f64,
    #[serde(skip)]
    pub a_hat: f64,
}

/// Frame for `n` with freshly computed constants.
pub fn build_frame(n: usize) -> Result<ScalingFrame> {
    build_frame_with(n, &LimitConstants::compute()?)
}

/// Frame for `n` reusing precomputed constants.
pub fn build_frame_with(n: usize, k: &LimitConstants) -> Result<ScalingFrame> {
    if n > 6 {
        return Err(Error::InvalidArgument(format!("scaling frames need n <= 6, got {n}")));
    }
    let rec = solve_c_n(n)?;
    let alpha_n = k.lambda_hat.powi(n as i32) * k.a2_hat / k.a_hat;
    let mut lam_pow = 1.0;
    for _ in 0..n {
        lam_pow *= rec.lambda_n;
    }
    let k_n = k.a_hat / (alpha_n * lam_pow);
    Ok(ScalingFrame {
        n,
        big_n: rec.big_n,
        c_n: rec.c_n,
        lambda_cn: rec.lambda_n,
        alpha_n,
        k_n,
        b0: k.b0,
        b0_star: k.b0_star,
        c_n_lo: rec.c_n_lo,
        a_hat: k.a_hat,
    })
}

impl ScalingFrame {
    /// `lambda_{c_n}^n` by repeated multiplication.
    pub fn lambda_pow(&self) -> f64 {
        (0..self.n).fold(1.0, |acc, _| acc * self.lambda_cn)
    }

    pub fn drift(&self) -> f64 {
        self.b0 * self.b0 - self.b0_star * self.b0_star
    }

    /// `c_n + rho_n(t)` in double-double.
    pub fn parameter_dd(&self, t: Complex64) -> Result<Cdd> {
        let r = rho_n(self, t)?;
        let base = TwoFloat::from(self.c_n) + TwoFloat::from(self.c_n_lo);
        Ok(Cdd::new(base + TwoFloat::from(r.re), TwoFloat::from(r.im)))
    }

    /// `c_n + rho_n(t)` rounded to double.
    pub fn parameter(&self, t: Complex64) -> Result<Complex64> {
        Ok(self.parameter_dd(t)?.to_c64())
    }
}

/// `rho_n(t) = k_n (b0 t - b0* conj(t))`, real-linear in `t`.
pub fn rho_n(frame: &ScalingFrame, t: Complex64) -> Result<Complex64> {
    ensure_finite(t, "t")?;
    if t.norm() > 10.0 {
        return Err(Error::InvalidArgument(format!("|t| = {} exceeds 10", t.norm())));
    }
    Ok(frame.k_n * (frame.b0 * t - frame.b0_star * t.conj()))
}

/// `alpha_n f_c^N(Z / alpha_n)` at `c = c_n + rho_n(t)`.
pub fn rescaled_return(frame: &ScalingFrame, t: Complex64, z: Complex64) -> Result<Complex64> {
    ensure_finite(z, "Z")?;
    if z.norm() > 4.0 {
        return Err(Error::InvalidArgument(format!("|Z| = {} exceeds 4", z.norm())));
    }
    let c = frame.parameter_dd(t)?;
    let alpha = TwoFloat::from(frame.alpha_n);
    let mut w = Cdd::new(TwoFloat::from(z.re) / alpha, TwoFloat::from(z.im) / alpha);
    for _ in 0..frame.big_n {
        w = w.step(c);
    }
    let g = w.scale(alpha).to_c64();
    if !g.re.is_finite() || !g.im.is_finite() {
        return Err(Error::Overflow(format!("rescaled return at n = {}", frame.n)));
    }
    Ok(g)
}

/// The limit map `conj(Z)^2 + drift * t`.
pub fn limit_map(drift: f64, t: Complex64, z: Complex64) -> Complex64 {
    z.conj() * z.conj() + drift * t
}

/// `|rho_n(i)| / |rho_n(1)|`.
pub fn aspect_ratio(frame: &ScalingFrame) -> f64 {
    let one = frame.k_n * (frame.b0 - frame.b0_star);
    let i = Complex64::new(0.0, 1.0);
    let im = frame.k_n * (frame.b0 * i - frame.b0_star * i.conj());
    im.norm() / one.abs()
}

/// Default `t` samples.
pub fn default_t_grid() -> Vec<Complex64> {
    [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5), (1.0, 0.0), (0.0, 1.0)]
        .iter()
        .map(|&(a, b)| Complex64::new(a, b))
        .collect()
}

/// Default `Z` samples: 9 x 9 lattice over `[-1, 1]^2`.
pub fn default_z_grid() -> Vec<Complex64> {
    let mut out = Vec::with_capacity(81);
    for j in 0..9 {
        for i in 0..9 {
            out.push(Complex64::new(-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub e_n: f64,
    /// `e_n / e_{n-1}`; absent on the first row.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Geometric mean of consecutive ratios.
    pub ratio: f64,
    pub drift: f64,
}

impl ConvergenceReport {
    /// True when every `e_{n+1} <= bound * e_n`.
    pub fn decays_by(&self, bound: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].e_n <= bound * w[0].e_n)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,e_n,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:e},{}", r.n, r.e_n, ratio);
        }
        s
    }
}

/// Largest deviation from the limit map for each `n` in `n_lo..=n_hi`.
pub fn convergence_report(
    n_lo: usize,
    n_hi: usize,
    t_grid: &[Complex64],
    z_grid: &[Complex64],
) -> Result<ConvergenceReport> {
    if n_lo > n_hi || n_hi > 6 {
        return Err(Error::InvalidArgument(format!("bad range {n_lo}..={n_hi}")));
    }
    if t_grid.is_empty() || z_grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let consts = LimitConstants::compute()?;
    let drift = consts.drift();
    let pairs: Vec<(Complex64, Complex64)> = t_grid
        .iter()
        .flat_map(|&t| z_grid.iter().map(move |&z| (t, z)))
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for n in n_lo..=n_hi {
        let frame = build_frame_with(n, &consts)?;
        let errs = par::map(&pairs, |&(t, z)| {
            rescaled_return(&frame, t, z).map(|g| (g - limit_map(drift, t, z)).norm())
        });
        let mut e = 0.0f64;
        for x in errs {
            e = e.max(x?);
        }
        let ratio = rows.last().map(|p| e / p.e_n);
        rows.push(ConvergenceRow { n, e_n: e, ratio });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let ratio = if ratios.is_empty() {
        f64::NAN
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };
    Ok(ConvergenceReport { rows, ratio, drift })
}
