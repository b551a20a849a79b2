//! Point clouds of Julia sets and the estimates run on them: Hausdorff
//! distance, the square-root thinning of `K(f_c)` near `c = -2`, argument
//! quantization around the critical point, and the Koenigs image of `[-1, 1]`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ensure_finite, step};
use crate::koenigs;
use crate::orbits::{beta_fixed_point, solve_c_n};
use crate::par;

/// Steps discarded at the start of every backward walk.
pub const BURN_IN: usize = 50;
/// Points per backward walk; walks are seeded independently.
const WALK_LEN: usize = 4096;
pub const MAX_CLOUD: usize = 10_000_000;
/// Snap distance for shadowed orbits in [`PointCloud::membership_fraction`],
/// about the spacing of a `10^4`-point cloud.
pub const SHADOW_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    InverseIteration,
    BoundaryScan,
}

/// Finite sample of a Julia set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub c: Complex64,
    pub points: Vec<Complex64>,
    pub method: SampleMethod,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    c: Complex64,
    count: usize,
    seed: u64,
    method: SampleMethod,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fraction of every `stride`-th point whose orbit stays bounded for `iters` steps.
    ///
    /// Plain forward iteration leaves a repelling Julia set after about 50
    /// steps of rounding growth, so the orbit is shadowed: an iterate within
    /// `SHADOW_TOL` of the cloud is replaced by its nearest cloud point.
    pub fn membership_fraction(&self, stride: usize, iters: u32) -> f64 {
        let picked: Vec<Complex64> = self.points.iter().step_by(stride.max(1)).copied().collect();
        if picked.is_empty() {
            return 1.0;
        }
        let radius = 2.0 + self.c.norm();
        let grid = Grid::new(&self.points);
        let kept = par::map(&picked, |z0| {
            let mut z = *z0;
            for _ in 0..iters {
                z = step(self.c, z);
                if !(z.norm() <= radius) {
                    return false;
                }
                let (d, near) = grid.nearest_point(z);
                if d <= SHADOW_TOL {
                    z = near;
                }
            }
            true
        });
        kept.iter().filter(|b| **b).count() as f64 / picked.len() as f64
    }

    /// Write little-endian `(re, im)` pairs to `path` and a JSON sidecar to `path.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for z in &self.points {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        out.flush()?;
        let side = Sidecar { c: self.c, count: self.len(), seed: self.seed, method: self.method };
        let json = serde_json::to_string_pretty(&side).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(sidecar_path(path))?;
        let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        let bytes = fs::read(path)?;
        if bytes.len() != 16 * side.count {
            return Err(Error::Io(format!(
                "cloud file holds {} bytes, sidecar promises {} points",
                bytes.len(),
                side.count
            )));
        }
        let points = bytes
            .chunks_exact(16)
            .map(|b| {
                let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { c: side.c, points, method: side.method, seed: side.seed })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Random backward orbits from `beta`: `z <- conj(+-sqrt(z - c))`.
///
/// Walk `k` uses stream `k` of a ChaCha8 generator keyed by `seed`, so the
/// cloud does not depend on the thread count.
pub fn sample_julia(c: Complex64, count: usize, seed: u64) -> Result<PointCloud> {
    ensure_finite(c, "parameter c")?;
    if count > MAX_CLOUD {
        return Err(Error::InvalidArgument(format!("count {count} exceeds {MAX_CLOUD}")));
    }
    let beta = beta_fixed_point(c)?;
    let walks = count.div_ceil(WALK_LEN);
    let chunks = par::map_range(walks, |k| {
        let len = WALK_LEN.min(count - k * WALK_LEN);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut z = beta;
        let mut pts = Vec::with_capacity(len);
        for i in 0..BURN_IN + len {
            let r = (z - c).sqrt().conj();
            z = if rng.random::<bool>() { r } else { -r };
            if i >= BURN_IN {
                pts.push(z);
            }
        }
        pts
    });
    Ok(PointCloud {
        c,
        points: chunks.into_iter().flatten().collect(),
        method: SampleMethod::InverseIteration,
        seed,
    })
}

/// Uniform bucket grid over a point set for nearest-neighbour queries.
struct Grid<'a> {
    pts: &'a [Complex64],
    lo: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> Grid<'a> {
    fn new(pts: &'a [Complex64]) -> Self {
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for z in pts {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let (w, h) = (hi.re - lo.re, hi.im - lo.im);
        let side = (pts.len() as f64).sqrt().ceil().max(1.0);
        let cell = (w.max(h) / side).max(1e-300);
        let nx = ((w / cell) as usize + 1).min(4096);
        let ny = ((h / cell) as usize + 1).min(4096);
        let cell = (w / nx as f64).max(h / ny as f64).max(1e-300);
        let mut grid = Self { pts, lo, cell, nx, ny, start: vec![0; nx * ny + 1], order: Vec::new() };
        let ids: Vec<usize> = pts.iter().map(|z| grid.cell_of(*z)).collect();
        for &id in &ids {
            grid.start[id + 1] += 1;
        }
        for i in 0..nx * ny {
            grid.start[i + 1] += grid.start[i];
        }
        let mut fill = grid.start.clone();
        grid.order = vec![0; pts.len()];
        for (k, &id) in ids.iter().enumerate() {
            grid.order[fill[id]] = k;
            fill[id] += 1;
        }
        grid
    }

    fn coords(&self, z: Complex64) -> (usize, usize) {
        let i = ((z.re - self.lo.re) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((z.im - self.lo.im) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn cell_of(&self, z: Complex64) -> usize {
        let (i, j) = self.coords(z);
        j * self.nx + i
    }

    fn nearest(&self, z: Complex64) -> f64 {
        self.nearest_point(z).0
    }

    fn nearest_point(&self, z: Complex64) -> (f64, Complex64) {
        let (ci, cj) = self.coords(z);
        let mut best = f64::INFINITY;
        let mut at = z;
        let max_ring = self.nx.max(self.ny);
        for r in 0..=max_ring {
            let (i0, i1) = (ci as isize - r as isize, ci as isize + r as isize);
            let (j0, j1) = (cj as isize - r as isize, cj as isize + r as isize);
            for j in j0..=j1 {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let on_edge = j == j0 || j == j1;
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < self.nx as isize {
                        let id = j as usize * self.nx + i as usize;
                        for &k in &self.order[self.start[id]..self.start[id + 1]] {
                            let d = (self.pts[k] - z).norm();
                            if d < best {
                                best = d;
                                at = self.pts[k];
                            }
                        }
                    }
                    i = if on_edge || i == i1 { i + 1 } else { i1 };
                }
            }
            // cells beyond ring r are at least r * cell away from the clamped cell
            if best <= r as f64 * self.cell {
                break;
            }
        }
        (best, at)
    }
}

fn directed(a: &[Complex64], b: &[Complex64]) -> f64 {
    let grid = Grid::new(b);
    par::map(a, |z| grid.nearest(*z)).into_iter().fold(0.0, f64::max)
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_points(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Hausdorff distance of an empty cloud".into()));
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// Hausdorff distance between the clouds (exact for the finite sets).
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    hausdorff_points(&a.points, &b.points)
}

/// Vertical extent of the sampled `K(f_c)` near `c = -2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlPoint {
    pub r: f64,
    /// `max |Im z|` over the clouds at `c = -2 + r` and `c = -2 + i r`.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<RlPoint>,
    pub count: usize,
    pub seed: u64,
}

/// Nine radii, log-spaced over `[1e-6, 1e-2]`.
pub fn default_rl_radii() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-6.0 + 0.5 * k as f64)).collect()
}

/// `max |Im z|` over a sample of `K(f_c)`.
pub fn vertical_extent(c: Complex64, count: usize, seed: u64) -> Result<f64> {
    let cloud = sample_julia(c, count, seed)?;
    // The real trace of K(f_c) (interior fill) has Im = 0 and cannot raise the maximum.
    Ok(cloud.points.iter().fold(0.0, |m, z| m.max(z.im.abs())))
}

/// Least-squares slope of `log h(r)` against `log r` near `c = -2`.
pub fn rl_scaling_fit(radii: &[f64], count: usize, seed: u64) -> Result<RlFit> {
    if radii.len() < 2 {
        return Err(Error::IllConditioned("need at least two radii".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 1e-6 && **r <= 1e-2)) {
        return Err(Error::InvalidArgument(format!("radius {r} outside [1e-6, 1e-2]")));
    }
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let h_real = vertical_extent(Complex64::new(-2.0 + r, 0.0), count, seed)?;
        let h_imag = vertical_extent(Complex64::new(-2.0, r), count, seed)?;
        points.push(RlPoint { r, h: h_real.max(h_imag) });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.r.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.h.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    Ok(RlFit { slope, intercept, r2, points, count, seed })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) || !ys.iter().all(|y| y.is_finite()) {
        return Err(Error::IllConditioned("degenerate regression data".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, my - slope * mx, r2))
}

/// Annulus `r_lo <= |z| <= r_hi` around the critical point standing in for
/// the puzzle-piece difference `D^m \ D^{m+1}` at level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub n: usize,
    pub m: usize,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// Band constants, calibrated once at `n = 4`: `r = K * 16^{-(1 - 2^-m) n}`.
pub const BAND_HI: f64 = 4.0;
pub const BAND_LO: f64 = 0.5;

impl BandSpec {
    pub fn new(n: usize, m: usize) -> Self {
        let scale = 16f64.powf(-(1.0 - 0.5f64.powi(m as i32)) * n as f64);
        Self { n, m, r_lo: BAND_LO * scale, r_hi: BAND_HI * scale }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.r_lo && r <= self.r_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgQuantReport {
    pub c: Complex64,
    pub band: BandSpec,
    pub samples: usize,
    pub in_band: usize,
    /// Largest distance of `arg z` to the nearest multiple of `pi / 2^m`.
    pub max_dev: f64,
    /// Counts over `[0, pi / 2^(m+1)]` in equal bins.
    pub histogram: Vec<usize>,
    pub seed: u64,
}

/// Fewest in-band points accepted as a measurement.
pub const MIN_IN_BAND: usize = 8;
const HIST_BINS: usize = 16;

/// Distance of `arg z` to the nearest multiple of `pi / 2^m`.
pub fn argument_deviation(z: Complex64, m: usize) -> f64 {
    let q = std::f64::consts::PI / 2f64.powi(m as i32);
    let a = z.arg();
    (a - (a / q).round() * q).abs()
}

/// Argument deviation of the points of a `K(f_c)` sample lying in `band`.
pub fn argument_quantization_at(c: Complex64, band: BandSpec, count: usize, seed: u64) -> Result<ArgQuantReport> {
    let cloud = sample_julia(c, count, seed)?;
    let q = std::f64::consts::PI / 2f64.powi(band.m as i32);
    let mut histogram = vec![0; HIST_BINS];
    let mut max_dev: f64 = 0.0;
    let mut in_band = 0;
    for z in cloud.points.iter().filter(|z| band.contains(**z)) {
        let d = argument_deviation(*z, band.m);
        max_dev = max_dev.max(d);
        let bin = ((d / (0.5 * q)) * HIST_BINS as f64) as usize;
        histogram[bin.min(HIST_BINS - 1)] += 1;
        in_band += 1;
    }
    if in_band < MIN_IN_BAND {
        return Err(Error::InvalidArgument(format!(
            "only {in_band} samples fell in the band [{:e}, {:e}]",
            band.r_lo, band.r_hi
        )));
    }
    Ok(ArgQuantReport { c, band, samples: cloud.len(), in_band, max_dev, histogram, seed })
}

/// [`argument_quantization_at`] for `c = c_n` and the band of level `(n, m)`.
pub fn argument_quantization(n: usize, m: usize, count: usize, seed: u64) -> Result<ArgQuantReport> {
    if n > 6 || m > 4 {
        return Err(Error::InvalidArgument(format!("need n <= 6 and m <= 4, got n = {n}, m = {m}")));
    }
    let c = solve_c_n(n)?.c_n;
    argument_quantization_at(Complex64::new(c, 0.0), BandSpec::new(n, m), count, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

/// Image of `[-1, 1]` under the Koenigs coordinate at `c = -2`.
pub fn koenigs_interval_check(grid_step: f64) -> Result<IntervalReport> {
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} outside (0, 1e-3]")));
    }
    let chart = koenigs::build_chart(Complex64::new(-2.0, 0.0))?;
    let n = (2.0 / grid_step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|k| (-1.0 + k as f64 * 2.0 / n as f64).min(1.0)).collect();
    let vals = par::map(&xs, |x| koenigs::koenigs_eval(&chart, Complex64::new(*x, 0.0)).map(|v| v.re));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(IntervalReport { lo, hi, samples: xs.len() })
}

/// Forward image check: fraction of points whose image lies within `tol` of the cloud.
pub fn forward_invariance(cloud: &PointCloud, stride: usize, tol: f64) -> f64 {
    let picked: Vec<Complex64> = cloud.points.iter().step_by(stride.max(1)).map(|z| step(cloud.c, *z)).collect();
    if picked.is_empty() {
        return 1.0;
    }
    let grid = Grid::new(&cloud.points);
    let near = par::map(&picked, |z| grid.nearest(*z) <= tol);
    near.iter().filter(|b| **b).count() as f64 / picked.len() as f64
}
