//! Power-series machinery near a parabolic point.
//!
//! With `F = f^{2p}` and `F(x + h) = x + h + a h^2 + ...`, the coordinate
//! `w = -1 / (a h)` turns `F` into `w -> w + 1 + A / w + O(w^-2)`. A formal
//! Fatou coordinate
//!
//! `Phi(w) = w - A log w + sum_{j >= 1} sum_i d[j][i] (log w)^i w^-j`
//!
//! is found order by order from `Phi(F(w)) = Phi(w) + 1`.

use num_complex::Complex64;

use crate::family::step;

type C = Complex64;

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn one() -> C {
    C::new(1.0, 0.0)
}

pub(crate) fn ps_mul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn ps_pow(a: &[C], e: usize, n: usize) -> Vec<C> {
    let mut out = vec![zero(); n];
    out[0] = one();
    for _ in 0..e {
        out = ps_mul(&out, a, n);
    }
    out
}

/// `log(s)` for a series with `s[0] = 1`.
fn ps_log(s: &[C], n: usize) -> Vec<C> {
    let mut t = s[..n.min(s.len())].to_vec();
    t.resize(n, zero());
    t[0] = zero();
    let mut out = vec![zero(); n];
    let mut pw = t.clone();
    for r in 1..n {
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        for m in 0..n {
            out[m] += pw[m] * (sign / r as f64);
        }
        pw = ps_mul(&pw, &t, n);
    }
    out
}

/// `1 / s` for a series with `s[0] != 0`.
fn ps_inv(s: &[C], n: usize) -> Vec<C> {
    let mut out = vec![zero(); n];
    out[0] = 1.0 / s[0];
    for m in 1..n {
        let mut acc = zero();
        for k in 1..=m.min(s.len() - 1) {
            acc += s[k] * out[m - k];
        }
        out[m] = -acc / s[0];
    }
    out
}

/// Taylor coefficients of `F(x + h) - F(x)` in `h` up to `h^(order)`,
/// where `F = f^{2p}` and `x` is a point of period `p`.
pub(crate) fn return_map_series(c: C, x: C, p: usize, order: usize) -> Vec<C> {
    let n = order + 1;
    let mut dev = vec![zero(); n];
    dev[1] = one();
    let mut y = x;
    for _ in 0..p {
        // f^2(y + s) - f^2(y) = 2 A d + d^2 with A = y^2 + conj(c), d = 2 y s + s^2.
        let a = y * y + c.conj();
        let s2 = ps_mul(&dev, &dev, n);
        let d: Vec<C> = (0..n).map(|m| 2.0 * y * dev[m] + s2[m]).collect();
        let d2 = ps_mul(&d, &d, n);
        dev = (0..n).map(|m| 2.0 * a * d[m] + d2[m]).collect();
        y = step(c, step(c, y));
    }
    dev
}

/// Formal Fatou coordinate in the `w` chart.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FatouSeries {
    /// Coefficient of `h^2`.
    pub a: C,
    /// Coefficient of the `log w` term (`w - A log w`).
    pub big_a: C,
    /// `d[j][i]`, `j = 1..=depth`, `i = 0..=depth`; row 0 unused.
    pub d: Vec<Vec<C>>,
    /// `max |tau_m|^(1/(m-1))` over `m >= 2`: the scale of `|w|` below which
    /// the corrections to `w + 1` are not small.
    pub reach: f64,
}

impl FatouSeries {
    /// Build from the Taylor coefficients `f[m]` of `F(x + h) - x` (`f[1] = 1`).
    pub fn new(f: &[C], depth: usize) -> Self {
        let a = f[2];
        let mu = depth + 2;
        let n = mu + 1;
        // S(u) = 1 + sum tau_m u^m, so that F(w) = w / S(1/w).
        let mut s = vec![zero(); n];
        s[0] = one();
        let ia = -1.0 / a;
        let mut pw = one();
        for m in 1..n {
            pw *= ia;
            if m + 1 < f.len() {
                s[m] = f[m + 1] * pw;
            }
        }
        let reach = (2..n).map(|m| s[m].norm().powf(1.0 / (m - 1) as f64)).fold(0.0, f64::max);
        let inv = ps_inv(&s, n + 1);
        let big_a = inv[2];
        // F(w) - w = sum_{m >= 1} inv[m] u^(m-1)
        let shift: Vec<C> = (0..n).map(|m| inv[m + 1]).collect();
        let ell: Vec<C> = ps_log(&s, n).iter().map(|x| -x).collect();
        let ell_pows: Vec<Vec<C>> = (0..n).map(|r| ps_pow(&ell, r, n)).collect();
        let s_pows: Vec<Vec<C>> = (0..n).map(|j| ps_pow(&s, j, n)).collect();
        let kl = depth + 1;
        let mut d = vec![vec![zero(); kl + 1]; depth + 1];

        let residual = |d: &Vec<Vec<C>>| -> Vec<Vec<C>> {
            // e[m][k]: coefficient of u^m L^k
            let mut e = vec![vec![zero(); kl + 1]; n];
            for m in 0..n {
                e[m][0] += shift[m] - big_a * ell[m];
            }
            e[0][0] -= 1.0;
            for j in 1..=depth {
                for i in 0..=kl {
                    let dji = d[j][i];
                    if dji == zero() {
                        continue;
                    }
                    // d (L + ell)^i u^j S^j - d L^i u^j
                    for r in 0..=i {
                        let binom = binomial(i, r);
                        let series = ps_mul(&ell_pows[r], &s_pows[j], n);
                        for m in 0..n - j {
                            e[m + j][i - r] += dji * binom * series[m];
                        }
                    }
                    e[j][i] -= dji;
                }
            }
            e
        };

        for j in 1..=depth {
            let e = residual(&d);
            let row = &e[j + 1];
            let mut next = zero();
            for k in (0..=kl).rev() {
                let val = (row[k] + (k as f64 + 1.0) * next) / j as f64;
                d[j][k] = val;
                next = val;
            }
        }
        Self { a, big_a, d, reach }
    }

    /// `Phi(w)` and `Phi'(w)` with logarithm `log_w`.
    pub fn eval(&self, w: C, log_w: C) -> (C, C) {
        let mut val = w - self.big_a * log_w;
        let mut der = one() - self.big_a / w;
        let inv = 1.0 / w;
        let mut wp = inv;
        for j in 1..self.d.len() {
            let mut lp = one();
            for i in 0..self.d[j].len() {
                let dji = self.d[j][i];
                if dji != zero() {
                    val += dji * lp * wp;
                    // d/dw L^i w^-j = (i L^(i-1) - j L^i) w^-(j+1)
                    let lprev = if i == 0 { zero() } else { lp / log_w };
                    der += dji * (i as f64 * lprev - j as f64 * lp) * wp * inv;
                }
                lp *= log_w;
            }
            wp *= inv;
        }
        (val, der)
    }

    /// Attracting side: principal `log w`.
    pub fn eval_attracting(&self, w: C) -> C {
        self.eval(w, w.ln()).0
    }

    /// Repelling side: `log(-w)`.
    pub fn eval_repelling(&self, w: C) -> (C, C) {
        self.eval(w, (-w).ln())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
