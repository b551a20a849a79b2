//! Escape-time images of the tricorn, of filled Julia sets, and of rescaled
//! windows around `c_n`.
//!
//! Pixel values are escape counts stored as `iterations + 1`, so 0 marks a
//! pixel that never escaped.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::family::{ensure_finite, escape_unchecked};
use crate::par;
use crate::scaling::{build_frame, ScalingFrame};

pub const TILE: usize = 64;
pub const MAX_PIXELS: usize = 100_000_000;

/// Rectangle of the plane sampled on a pixel grid; row 0 is the top edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
    pub px_w: usize,
    pub px_h: usize,
}

impl Window {
    pub fn new(center: Complex64, width: f64, height: f64, px_w: usize, px_h: usize) -> Result<Self> {
        let w = Self { center, width, height, px_w, px_h };
        w.validate()?;
        Ok(w)
    }

    /// Square pixels: the height follows from the width and pixel counts.
    pub fn square(center: Complex64, width: f64, px_w: usize, px_h: usize) -> Result<Self> {
        Self::new(center, width, width * px_h as f64 / px_w.max(1) as f64, px_w, px_h)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.center, "window center")?;
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return Err(Error::InvalidArgument("window width and height must be positive".into()));
        }
        if self.px_w == 0 || self.px_h == 0 || self.px_w.saturating_mul(self.px_h) > MAX_PIXELS {
            return Err(Error::InvalidArgument(format!(
                "pixel grid {}x{} is empty or exceeds {MAX_PIXELS} pixels",
                self.px_w, self.px_h
            )));
        }
        Ok(())
    }

    /// Centre of pixel `(i, j)`, column `i`, row `j`.
    pub fn pixel(&self, i: usize, j: usize) -> Complex64 {
        let x = self.center.re - 0.5 * self.width + (i as f64 + 0.5) * self.width / self.px_w as f64;
        let y = self.center.im + 0.5 * self.height - (j as f64 + 0.5) * self.height / self.px_h as f64;
        Complex64::new(x, y)
    }

    /// Pixel containing `z`, if inside.
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize)> {
        let u = (z.re - (self.center.re - 0.5 * self.width)) / self.width * self.px_w as f64;
        let v = ((self.center.im + 0.5 * self.height) - z.im) / self.height * self.px_h as f64;
        if u < 0.0 || v < 0.0 || u >= self.px_w as f64 || v >= self.px_h as f64 {
            return None;
        }
        Some((u as usize, v as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    Parameter,
    Dynamical,
    Baby,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub window: Window,
    /// Row-major escape counts (`iterations + 1`; 0 = interior).
    pub values: Vec<u32>,
    pub max_iter: u32,
    pub kind: ImageKind,
    pub c: Option<Complex64>,
    pub n: Option<usize>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    window: &'a Window,
    max_iter: u32,
    kind: ImageKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<Complex64>,
}

impl ImageGrid {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[j * self.window.px_w + i]
    }

    pub fn interior_count(&self) -> usize {
        self.values.iter().filter(|v| **v == 0).count()
    }

    /// 8-bit gray levels: interior black, escape counts on a log ramp.
    pub fn gray(&self) -> Vec<u8> {
        let top = ((self.max_iter as f64) + 1.0).ln().max(1.0);
        self.values
            .iter()
            .map(|&v| if v == 0 { 0 } else { (255.0 * (1.0 - (v as f64).ln() / top)).round().clamp(1.0, 255.0) as u8 })
            .collect()
    }

    /// Binary PPM (P6, 8-bit, gray replicated over RGB).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.window.px_w, self.window.px_h).into_bytes();
        for g in self.gray() {
            out.extend_from_slice(&[g, g, g]);
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        fs::File::create(path)?.write_all(&self.to_ppm())?;
        Ok(())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let img = image::GrayImage::from_raw(self.window.px_w as u32, self.window.px_h as u32, self.gray())
            .ok_or_else(|| Error::Io("image buffer size mismatch".into()))?;
        img.save(path).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn sidecar_json(&self) -> String {
        let side = Sidecar { window: &self.window, max_iter: self.max_iter, kind: self.kind, n: self.n, c: self.c };
        serde_json::to_string_pretty(&side).expect("sidecar serializes")
    }

    /// Write `<stem>.ppm`, `<stem>.png` and `<stem>.json` into `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_ppm(&dir.join(format!("{stem}.ppm")))?;
        self.write_png(&dir.join(format!("{stem}.png")))?;
        fs::write(dir.join(format!("{stem}.json")), self.sidecar_json())?;
        Ok(())
    }
}

/// Evaluate `f` on every pixel, tile by tile; the result does not depend on the tile size.
pub fn render_tiles<F>(window: &Window, tile: usize, f: F) -> Vec<u32>
where
    F: Fn(Complex64) -> u32 + Sync + Send,
{
    let tile = tile.max(1);
    let (w, h) = (window.px_w, window.px_h);
    let tx = w.div_ceil(tile);
    let ty = h.div_ceil(tile);
    let tiles = par::map_range(tx * ty, |k| {
        let (ti, tj) = (k % tx, k / tx);
        let (i0, j0) = (ti * tile, tj * tile);
        let (i1, j1) = ((i0 + tile).min(w), (j0 + tile).min(h));
        let mut buf = Vec::with_capacity((i1 - i0) * (j1 - j0));
        for j in j0..j1 {
            for i in i0..i1 {
                buf.push(f(window.pixel(i, j)));
            }
        }
        buf
    });
    let mut values = vec![0u32; w * h];
    for (k, buf) in tiles.into_iter().enumerate() {
        let (ti, tj) = (k % tx, k / tx);
        let (i0, j0) = (ti * tile, tj * tile);
        let i1 = (i0 + tile).min(w);
        let row = i1 - i0;
        for (r, chunk) in buf.chunks(row).enumerate() {
            let start = (j0 + r) * w + i0;
            values[start..start + row].copy_from_slice(chunk);
        }
    }
    values
}

fn count(c: Complex64, z: Complex64, max_iter: u32) -> u32 {
    let e = escape_unchecked(c, z, max_iter, 2.0 + c.norm());
    if e.escaped {
        e.iterations + 1
    } else {
        0
    }
}

fn check_iter(max_iter: u32) -> Result<()> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    Ok(())
}

/// Parameter plane: critical-orbit escape counts.
pub fn render_parameter(window: &Window, max_iter: u32) -> Result<ImageGrid> {
    render_parameter_tiled(window, max_iter, TILE)
}

pub fn render_parameter_tiled(window: &Window, max_iter: u32, tile: usize) -> Result<ImageGrid> {
    window.validate()?;
    check_iter(max_iter)?;
    let values = render_tiles(window, tile, |c| count(c, Complex64::new(0.0, 0.0), max_iter));
    Ok(ImageGrid { window: *window, values, max_iter, kind: ImageKind::Parameter, c: None, n: None })
}

/// Dynamical plane of `f_c`.
pub fn render_dynamical(c: Complex64, window: &Window, max_iter: u32) -> Result<ImageGrid> {
    ensure_finite(c, "parameter c")?;
    window.validate()?;
    check_iter(max_iter)?;
    let values = render_tiles(window, TILE, |z| count(c, z, max_iter));
    Ok(ImageGrid { window: *window, values, max_iter, kind: ImageKind::Dynamical, c: Some(c), n: None })
}

fn count_dd(c: Cdd, max_iter: u32) -> u32 {
    let r2 = {
        let r = 2.0 + c.to_c64().norm();
        r * r
    };
    let mut z = Cdd::ZERO;
    for k in 0..=max_iter {
        if z.norm_sqr() > r2 {
            return k + 1;
        }
        if k == max_iter {
            break;
        }
        z = z.step(c);
    }
    0
}

/// Parameter image over `c_n + rho_n(t)` with `t` ranging over `t_window`.
///
/// Parameters are formed and iterated in double-double: they sit within
/// `1e-9` of `-2`, where doubles keep only a few digits of `rho_n(t)`.
pub fn render_baby_window(n: usize, t_window: &Window, max_iter: u32) -> Result<ImageGrid> {
    let frame = build_frame(n)?;
    render_baby_window_with(&frame, t_window, max_iter)
}

pub fn render_baby_window_with(frame: &ScalingFrame, t_window: &Window, max_iter: u32) -> Result<ImageGrid> {
    t_window.validate()?;
    check_iter(max_iter)?;
    let corner = t_window.center.norm() + 0.5 * t_window.width.hypot(t_window.height);
    if corner > 10.0 {
        return Err(Error::InvalidArgument("t window reaches |t| > 10".into()));
    }
    let values = render_tiles(t_window, TILE, |t| match frame.parameter_dd(t) {
        Ok(c) => count_dd(c, max_iter),
        Err(_) => 1,
    });
    Ok(ImageGrid {
        window: *t_window,
        values,
        max_iter,
        kind: ImageKind::Baby,
        c: Some(Complex64::new(frame.c_n, 0.0)),
        n: Some(frame.n),
    })
}

/// Pixels whose critical orbit settles on an attracting cycle of the
/// renormalization period `N`: the hyperbolic component centred at `c_n`.
pub fn baby_component_mask(frame: &ScalingFrame, t_window: &Window, returns: u32) -> Result<Vec<bool>> {
    t_window.validate()?;
    let big_n = frame.big_n;
    let values = render_tiles(t_window, TILE, |t| {
        let Ok(c) = frame.parameter_dd(t) else { return 0 };
        let r2 = (2.0 + c.to_c64().norm()).powi(2);
        let mut z = Cdd::ZERO;
        for _ in 0..returns as usize * big_n {
            z = z.step(c);
            if z.norm_sqr() > r2 {
                return 0;
            }
        }
        u32::from(attracting_cycle(c, z, big_n))
    });
    Ok(values.into_iter().map(|v| v == 1).collect())
}

/// Newton on `f^{2N}(z) = z` from `z`, then `|d f^N / d conj(z)| < 1` on the
/// refined cycle. Slow convergence near cusps does not matter here.
fn attracting_cycle(c: Cdd, mut z: Cdd, big_n: usize) -> bool {
    for _ in 0..40 {
        let mut w = z;
        let mut d = Complex64::new(1.0, 0.0);
        for _ in 0..2 * big_n {
            d = 2.0 * w.to_c64().conj() * d.conj();
            w = w.step(c);
        }
        let dz = (w - z).to_c64() / (d - 1.0);
        if !dz.is_finite() {
            return false;
        }
        z = z - Cdd::from_c64(dz);
        if dz.norm() < 1e-26 {
            break;
        }
    }
    let mut w = z;
    let mut gain = 1.0;
    for _ in 0..big_n {
        gain *= 2.0 * w.to_c64().norm();
        w = w.step(c);
    }
    (w - z).to_c64().norm() < 1e-20 && gain < 1.0
}

/// Bounding box `(width, height)`, in window units, of the 4-connected
/// region of `mask` containing the centre pixel.
pub fn central_component_box(mask: &[bool], window: &Window) -> Option<(f64, f64)> {
    let (w, h) = (window.px_w, window.px_h);
    let start = (w / 2, h / 2);
    if !mask[start.1 * w + start.0] {
        return None;
    }
    let mut seen = vec![false; w * h];
    let mut stack = vec![start];
    seen[start.1 * w + start.0] = true;
    let (mut i_lo, mut i_hi, mut j_lo, mut j_hi) = (start.0, start.0, start.1, start.1);
    while let Some((i, j)) = stack.pop() {
        i_lo = i_lo.min(i);
        i_hi = i_hi.max(i);
        j_lo = j_lo.min(j);
        j_hi = j_hi.max(j);
        let mut push = |a: usize, b: usize| {
            if !seen[b * w + a] && mask[b * w + a] {
                seen[b * w + a] = true;
                stack.push((a, b));
            }
        };
        if i > 0 {
            push(i - 1, j);
        }
        if i + 1 < w {
            push(i + 1, j);
        }
        if j > 0 {
            push(i, j - 1);
        }
        if j + 1 < h {
            push(i, j + 1);
        }
    }
    let dx = window.width / w as f64;
    let dy = window.height / h as f64;
    Some(((i_hi - i_lo + 1) as f64 * dx, (j_hi - j_lo + 1) as f64 * dy))
}
