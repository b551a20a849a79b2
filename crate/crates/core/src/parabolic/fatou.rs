use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::series::{return_map_series, FatouSeries};
use super::{check_period, ParabolicPoint};
use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::family::{ensure_finite, iterate, iterate_with_derivative};

type C = Complex64;

/// Default bound on iterations of `f^{2p}` inside a chart evaluation.
pub const DEFAULT_DEPTH: usize = 10_000;
/// Truncation order of the asymptotic series.
const SERIES_DEPTH: usize = 10;
/// Taylor order of `f^{2p}` at `x`.
const TAYLOR_ORDER: usize = SERIES_DEPTH + 4;
/// The series is used only for `|Re w| >= SWITCH * max(1, 2 * reach)` in the
/// `w` chart; `reach` grows without bound towards a cusp.
const SWITCH: f64 = 30.0;
/// Limit on the recursion `Psi(w) = g(Psi(conj(w) - 1/2))`.
const MAX_RECURSION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FatouKind {
    Attracting,
    Repelling,
}

/// Fatou coordinate on one side of a parabolic point, normalised so that
/// `Phi(g(z)) = conj(Phi(z)) + 1/2` and `Re Phi(anchor) = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct FatouChart {
    pub kind: FatouKind,
    pub base: ParabolicPoint,
    pub normalization_anchor: C,
    pub depth: usize,
    #[serde(skip)]
    series: FatouSeries,
    #[serde(skip)]
    shift: C,
    #[serde(skip)]
    switch: f64,
}

/// Build a chart. `anchor = None` uses the critical value for the attracting
/// side and the point at twice the switch radius for the repelling side.
pub fn build_chart(pp: &ParabolicPoint, kind: FatouKind, anchor: Option<C>, depth: usize) -> Result<FatouChart> {
    check_period(pp.period)?;
    ensure_finite(pp.c, "c")?;
    ensure_finite(pp.x, "x")?;
    if pp.is_cusp() {
        return Err(Error::Cusp(pp.petal_coeff.norm()));
    }
    let mut f = return_map_series(pp.c, pp.x, pp.period, TAYLOR_ORDER);
    // The linear coefficient is 1 up to round-off; the conjugation assumes it exactly.
    f[1] = C::new(1.0, 0.0);
    let series = FatouSeries::new(&f, SERIES_DEPTH);
    let switch = SWITCH * (2.0 * series.reach).max(1.0);
    let mut chart = FatouChart {
        kind,
        base: *pp,
        normalization_anchor: C::new(0.0, 0.0),
        depth,
        series,
        shift: C::new(0.0, 0.0),
        switch,
    };
    let side = match kind {
        FatouKind::Attracting => 1.0,
        FatouKind::Repelling => -1.0,
    };
    let anchor = anchor.unwrap_or_else(|| match kind {
        FatouKind::Attracting => pp.c,
        FatouKind::Repelling => chart.z_of(C::new(-2.0 * switch, 0.0)),
    });
    chart.normalization_anchor = anchor;

    // conj(Phi(g z0)) - Phi(z0) is constant with real part 1/2; half its
    // imaginary part is the imaginary shift that makes the Abel equation exact.
    let z0 = chart.z_of(C::new(side * 2.0 * switch, 0.0));
    let raw0 = chart.raw(z0)?;
    let raw1 = chart.raw(chart.g(z0))?;
    let tau = raw1.conj() - raw0;
    if (tau.re - 0.5).abs() > 1e-6 {
        return Err(Error::NoConvergence(format!(
            "Abel constant has real part {} (expected 1/2)",
            tau.re
        )));
    }
    let re = -chart.raw(anchor)?.re;
    chart.shift = C::new(re, tau.im / 2.0);
    Ok(chart)
}

impl FatouChart {
    pub fn period(&self) -> usize {
        self.base.period
    }

    fn w_of(&self, z: C) -> C {
        -1.0 / (self.series.a * (z - self.base.x))
    }

    fn z_of(&self, w: C) -> C {
        self.base.x - 1.0 / (self.series.a * w)
    }

    /// First-return map `g = f^p`.
    pub fn g(&self, z: C) -> C {
        iterate(self.base.c, z, self.base.period)
    }

    fn big_f(&self, z: C) -> C {
        iterate(self.base.c, z, 2 * self.base.period)
    }

    /// Local inverse of `f^{2p}` near `x`.
    fn big_f_inverse(&self, z: C) -> Result<C> {
        let mut y = 2.0 * z - self.big_f(z);
        for _ in 0..50 {
            let (fy, dfy) = iterate_with_derivative(self.base.c, y, 2 * self.base.period);
            let dy = (fy - z) / dfy;
            if !dy.is_finite() {
                break;
            }
            y -= dy;
            if dy.norm() <= 1e-16 * y.norm().max(1e-3) {
                return Ok(y);
            }
        }
        let r = (self.big_f(y) - z).norm();
        if r < 1e-13 * z.norm().max(1.0) {
            Ok(y)
        } else {
            Err(Error::NoConvergence(format!("local inverse residual {r:e}")))
        }
    }

    fn in_base(&self, w: C) -> bool {
        match self.kind {
            FatouKind::Attracting => w.re >= self.switch && w.im.abs() <= w.re,
            FatouKind::Repelling => w.re <= -self.switch && w.im.abs() <= -w.re,
        }
    }

    /// Fatou coordinate of `f^{2p}` before normalisation.
    fn raw(&self, z: C) -> Result<C> {
        ensure_finite(z, "z")?;
        let radius = 2.0 + self.base.c.norm();
        let mut z = z;
        for k in 0..=self.depth {
            let w = self.w_of(z);
            if !w.is_finite() {
                return Err(Error::InvalidArgument("z is the parabolic point".into()));
            }
            if self.in_base(w) {
                return Ok(match self.kind {
                    FatouKind::Attracting => self.series.eval_attracting(w) - k as f64,
                    FatouKind::Repelling => self.series.eval_repelling(w).0 + k as f64,
                });
            }
            if k == self.depth {
                break;
            }
            z = match self.kind {
                FatouKind::Attracting => {
                    let next = self.big_f(z);
                    if !(next.norm() <= radius) {
                        return Err(Error::OrbitEscaped);
                    }
                    next
                }
                FatouKind::Repelling => self.big_f_inverse(z)?,
            };
        }
        Err(Error::DepthExceeded(format!(
            "point not carried into the petal within {} steps",
            self.depth
        )))
    }

    /// Normalised Fatou coordinate `Phi(z)`.
    pub fn eval(&self, z: C) -> Result<C> {
        Ok(self.raw(z)? + self.shift)
    }

    /// Ecalle height `Im Phi(z)`.
    pub fn height(&self, z: C) -> Result<f64> {
        Ok(self.eval(z)?.im)
    }

    /// `|Phi(g(z)) - conj(Phi(z)) - 1/2|`.
    pub fn abel_residual(&self, z: C) -> Result<f64> {
        let lhs = self.eval(self.g(z))?;
        let rhs = self.eval(z)?.conj() + 0.5;
        Ok((lhs - rhs).norm())
    }

    /// Point with coordinate `w` in the `w = -1/(a(z - x))` chart.
    pub fn point_at(&self, w: C) -> C {
        self.z_of(w)
    }

    /// `Psi(v)` for `v` in the base half-plane, by Newton on the series.
    fn psi_base(&self, v: C) -> Result<C> {
        let u = v - self.shift;
        let mut w = u + self.series.big_a * (-u).ln();
        for _ in 0..50 {
            let (phi, dphi) = self.series.eval_repelling(w);
            let dw = (phi - u) / dphi;
            if !dw.is_finite() {
                break;
            }
            w -= dw;
            if dw.norm() <= 1e-15 * w.norm() {
                return Ok(self.z_of(w));
            }
        }
        let r = (self.series.eval_repelling(w).0 - u).norm();
        if r < 1e-12 * u.norm().max(1.0) {
            Ok(self.z_of(w))
        } else {
            Err(Error::NoConvergence(format!("inverse series residual {r:e}")))
        }
    }

    fn v_in_base(&self, v: C) -> bool {
        let u = v - self.shift;
        u.re <= -self.switch && u.im.abs() <= -u.re
    }

    /// Reduce `w` to the base half-plane: returns `(Psi(w_m), m)` with
    /// `Psi(w) = g^m(Psi(w_m))`.
    pub(crate) fn inverse_start(&self, w: C) -> Result<(C, usize)> {
        if self.kind != FatouKind::Repelling {
            return Err(Error::InvalidArgument("chart is not repelling".into()));
        }
        ensure_finite(w, "w")?;
        let mut v = w;
        let mut m = 0;
        while !self.v_in_base(v) {
            if m >= MAX_RECURSION {
                return Err(Error::DepthExceeded(format!(
                    "Psi recursion deeper than {MAX_RECURSION}"
                )));
            }
            v = v.conj() - 0.5;
            m += 1;
        }
        Ok((self.psi_base(v)?, m))
    }
}

fn expect_kind(chart: &FatouChart, kind: FatouKind) -> Result<()> {
    if chart.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("expected a {kind:?} chart")))
    }
}

/// `Phi_attr(z)` for `z` in the basin of the marked parabolic point.
pub fn attracting_fatou(chart: &FatouChart, z: C) -> Result<C> {
    expect_kind(chart, FatouKind::Attracting)?;
    chart.eval(z)
}

/// `Phi_rep(z)` for `z` in a neighbourhood of the repelling petal.
pub fn repelling_fatou(chart: &FatouChart, z: C) -> Result<C> {
    expect_kind(chart, FatouKind::Repelling)?;
    chart.eval(z)
}

/// `Psi = Phi_rep^{-1}`, extended to all `w` by `Psi(w) = g(Psi(conj(w) - 1/2))`.
pub fn repelling_fatou_inverse(chart: &FatouChart, w: C) -> Result<C> {
    let (mut z, m) = chart.inverse_start(w)?;
    for _ in 0..m {
        z = chart.g(z);
        if !z.is_finite() {
            return Err(Error::Overflow(format!("Psi({w}) is not finite")));
        }
    }
    Ok(z)
}

/// `E_attr(c)` at a parabolic parameter of odd period `p`.
pub fn critical_ecalle_height(c: C, p: usize) -> Result<f64> {
    let pp = ParabolicPoint::locate(c, p)?;
    let chart = build_chart(&pp, FatouKind::Attracting, None, DEFAULT_DEPTH)?;
    chart.height(c)
}

/// Outcome of one transit through the gate of a perturbed parabolic point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftedPhase {
    /// `Phi_rep(F^n z) - Phi_attr(z) - n` with `F = f^{2p}`.
    pub phase: C,
    /// Number of `F` steps.
    pub transit: usize,
    /// Exit point `F^n(z)`.
    pub exit: C,
    /// `E_rep` at the exit point.
    pub exit_height: f64,
    /// `E_attr(z)`.
    pub entry_height: f64,
}

/// Exit window in the `w` chart after the gate.
const EXIT_RE: (f64, f64) = (-8.0, -3.0);
const TRANSIT_DEPTH: usize = 5_000_000;

/// Lifted phase with its imaginary part left in.
///
/// The orbit of `z` under `f_{c_pert}^{2p}` is run in double-double precision
/// through the gate until it lands in the exit window; both Fatou coordinates
/// are those of the unperturbed parameter `pp.c`.
pub fn lifted_phase_complex(c_pert: C, z: C, pp: &ParabolicPoint) -> Result<LiftedPhase> {
    ensure_finite(c_pert, "c_pert")?;
    let attr = build_chart(pp, FatouKind::Attracting, None, DEFAULT_DEPTH)?;
    let rep = build_chart(pp, FatouKind::Repelling, None, DEFAULT_DEPTH)?;
    let phi_in = attr.eval(z)?;
    let cd = Cdd::from_c64(c_pert);
    let radius = 2.0 + c_pert.norm();
    let mut y = Cdd::from_c64(z);
    for n in 1..=TRANSIT_DEPTH {
        for _ in 0..2 * pp.period {
            y = y.step(cd);
        }
        let yc = y.to_c64();
        if !(yc.norm() <= radius) {
            return Err(Error::OrbitEscaped);
        }
        let w = rep.w_of(yc);
        if w.re >= EXIT_RE.0 && w.re <= EXIT_RE.1 && w.im.abs() <= -w.re {
            let phi_out = rep.eval(yc)?;
            return Ok(LiftedPhase {
                phase: phi_out - phi_in - n as f64,
                transit: n,
                exit: yc,
                exit_height: phi_out.im,
                entry_height: phi_in.im,
            });
        }
    }
    Err(Error::DepthExceeded(format!("no transit within {TRANSIT_DEPTH} steps")))
}

/// Real lifted phase; fails if the imaginary part exceeds `1e-4`.
pub fn lifted_phase(c_pert: C, z: C, pp: &ParabolicPoint) -> Result<f64> {
    let lp = lifted_phase_complex(c_pert, z, pp)?;
    if lp.phase.im.abs() >= 1e-4 {
        return Err(Error::NoConvergence(format!(
            "lifted phase has imaginary part {:e}",
            lp.phase.im
        )));
    }
    Ok(lp.phase.re)
}
