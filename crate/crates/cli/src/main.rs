//! `tricorn-lab`: renders and numerical checks for the tricorn.

// `!(x < tol)` also treats NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::json;
use tricorn_core::{geometry, koenigs, orbits, par, parabolic, rays, render, scaling};

const THREADS_ENV: &str = "TRICORN_LAB_THREADS";
/// Centre of the airplane component, the default seed for period 3.
const AIRPLANE: C = C::new(-1.754_877_666_246_692_7, 0.0);

#[derive(Parser, Debug)]
#[command(name = "tricorn-lab", version, about = "Renders and numerical checks for the tricorn")]
struct Cli {
    /// Worker threads (default: $TRICORN_LAB_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for sampled reports.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output file (reports) or directory (images); reports go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct View {
    #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
    center_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    center_im: f64,
    #[arg(long, default_value_t = 4.4)]
    width: f64,
    /// Pixels per side.
    #[arg(long, default_value_t = 512)]
    px: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: u32,
}

#[derive(Args, Debug, Clone)]
struct Param {
    #[arg(long, allow_negative_numbers = true)]
    c_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c_im: f64,
}

impl Param {
    fn c(&self) -> C {
        C::new(self.c_re, self.c_im)
    }
}

#[derive(Args, Debug, Clone)]
struct RayArgs {
    #[arg(long)]
    angle_num: i64,
    #[arg(long)]
    angle_den: i64,
    #[arg(long, default_value_t = 4.0)]
    g_hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    g_lo: f64,
    #[arg(long, default_value_t = 8)]
    steps: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parameter-plane image of the tricorn.
    Render(View),
    /// Filled Julia set of f_c.
    Julia {
        #[command(flatten)]
        param: Param,
        #[command(flatten)]
        view: View,
    },
    /// Rescaled window c_n + rho_n(t) around the baby tricorn of level n.
    Baby {
        #[arg(long)]
        n: usize,
        /// Window in t coordinates.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center_re: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center_im: f64,
        #[arg(long, default_value_t = 2.0)]
        width: f64,
        #[arg(long, default_value_t = 256)]
        px: usize,
        #[arg(long, default_value_t = 2000)]
        max_iter: u32,
    },
    /// Dynamical ray of f_c (CSV, or JSON when --out ends in .json).
    Ray {
        #[command(flatten)]
        param: Param,
        #[command(flatten)]
        ray: RayArgs,
    },
    /// Parameter ray of the tricorn (CSV, or JSON when --out ends in .json).
    ParamRay(RayArgs),
    /// Table of the centres c_n.
    Cn {
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
    /// Koenigs chart at the beta fixed point and the coefficients A_0..A_4.
    Koenigs(Param),
    /// b0 and b0* against their closed forms.
    Bconst,
    /// Convergence of the rescaled return maps (CSV); exit 2 unless e_n decays by 0.7 per step.
    Scaling {
        #[arg(long, default_value_t = 2)]
        n_lo: usize,
        #[arg(long, default_value_t = 5)]
        n_hi: usize,
    },
    /// |rho_n(i)| / |rho_n(1)| per frame; exit 2 unless it equals 1.8 to 1e-12.
    Aspect {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
    /// Parabolic parameter of odd period on the arc through a centre, at a given critical height.
    Parabolic(ArcArgs),
    /// Strip-escape accessibility test at a parabolic arc point.
    Access {
        #[command(flatten)]
        arc: ArcArgs,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        budget: u32,
    },
    /// Square-root thinning of K(f_c) near c = -2; exit 2 unless slope in [0.4, 0.6] and r^2 >= 0.95.
    RlFit {
        #[arg(long, default_value_t = 20_000)]
        count: usize,
    },
    /// Argument quantization of K(f_{c_n}) in the level-(n, m) band.
    Argquant {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 4_000_000)]
        count: usize,
    },
    /// Koenigs image of [-1, 1] at c = -2; exit 2 unless it is [4/9, 16/9] to 1e-8.
    Interval {
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct ArcArgs {
    /// Odd period.
    #[arg(long, default_value_t = 1)]
    period: usize,
    /// Critical Ecalle height to reach along the arc.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    target: f64,
    /// Centre of the component (default: 0 for period 1, the airplane for period 3).
    #[arg(long, allow_negative_numbers = true)]
    center_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_im: Option<f64>,
    /// Deltoid angle; for period 1 this picks the arc point directly.
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
}

impl ArcArgs {
    fn point(&self) -> Result<parabolic::ParabolicPoint> {
        if let Some(phi) = self.phi {
            if self.period != 1 {
                bail!("--phi applies to period 1 only");
            }
            return Ok(parabolic::deltoid_parabolic(phi));
        }
        let seed = match (self.center_re, self.center_im, self.period) {
            (Some(re), im, _) => C::new(re, im.unwrap_or(0.0)),
            (None, _, 1) => C::new(0.0, 0.0),
            (None, _, 3) => AIRPLANE,
            (None, _, p) => bail!("period {p} needs --center-re/--center-im"),
        };
        Ok(parabolic::find_parabolic_on_arc(self.period, seed, self.target)?)
    }
}

/// Result of a subcommand that ran to completion.
enum Verdict {
    Ok,
    /// A check did not meet its tolerance.
    Failed(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed(why)) => {
            eprintln!("check failed: {why}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        bail!("thread count must be at least 1");
    }
    Ok(n)
}

/// Write `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn is_json(out: Option<&Path>) -> bool {
    out.and_then(|p| p.extension()).is_some_and(|e| e == "json")
}

fn save_image(img: &render::ImageGrid, out: Option<&Path>, stem: &str) -> Result<()> {
    let dir = out.unwrap_or(Path::new("."));
    img.write_all(dir, stem).with_context(|| format!("cannot write images to {}", dir.display()))?;
    println!("{}", img.sidecar_json());
    Ok(())
}

fn run(cli: Cli) -> Result<Verdict> {
    par::init_threads(threads(cli.threads)?);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Render(v) => {
            let w = render::Window::square(C::new(v.center_re, v.center_im), v.width, v.px, v.px)?;
            save_image(&render::render_parameter(&w, v.max_iter)?, out, "render")?;
        }
        Command::Julia { param, view: v } => {
            let w = render::Window::square(C::new(v.center_re, v.center_im), v.width, v.px, v.px)?;
            save_image(&render::render_dynamical(param.c(), &w, v.max_iter)?, out, "julia")?;
        }
        Command::Baby { n, center_re, center_im, width, px, max_iter } => {
            let w = render::Window::square(C::new(center_re, center_im), width, px, px)?;
            save_image(&render::render_baby_window(n, &w, max_iter)?, out, &format!("baby_{n}"))?;
        }
        Command::Ray { param, ray } => {
            let angle = rays::Angle::new(ray.angle_num, ray.angle_den)?;
            let tr = rays::trace_dynamical_ray(param.c(), angle, ray.g_hi, ray.g_lo, ray.steps)?;
            write_ray(&tr, out)?;
        }
        Command::ParamRay(ray) => {
            let angle = rays::Angle::new(ray.angle_num, ray.angle_den)?;
            let tr = rays::trace_parameter_ray(angle, ray.g_hi, ray.g_lo, ray.steps)?;
            write_ray(&tr, out)?;
        }
        Command::Cn { n_max } => {
            let rows = (0..=n_max).map(orbits::solve_c_n).collect::<tricorn_core::Result<Vec<_>>>()?;
            emit_json(out, &rows)?;
        }
        Command::Koenigs(param) => {
            let chart = koenigs::build_chart(param.c())?;
            let coeffs = (0..=4)
                .map(|i| koenigs::coefficient_a_with(&chart, i))
                .collect::<tricorn_core::Result<Vec<_>>>()?;
            emit_json(out, &json!({ "chart": chart, "coefficients_a": coeffs }))?;
        }
        Command::Bconst => {
            let b = koenigs::estimate_b_constants()?;
            let pi2 = PI * PI;
            let (e0, es) = (896.0 / (15.0 * pi2), -256.0 / (15.0 * pi2));
            let (r0, rs) = ((b.b0 - e0).norm() / e0.abs(), (b.b0_star - es).norm() / es.abs());
            emit_json(
                out,
                &json!({
                    "b0": b.b0, "b0_star": b.b0_star,
                    "b0_exact": e0, "b0_star_exact": es,
                    "b0_rel_err": r0, "b0_star_rel_err": rs,
                }),
            )?;
            if r0 >= 1e-4 || rs >= 1e-4 {
                return Ok(Verdict::Failed(format!("relative errors {r0:e}, {rs:e} exceed 1e-4")));
            }
        }
        Command::Scaling { n_lo, n_hi } => {
            let rep = scaling::convergence_report(n_lo, n_hi, &scaling::default_t_grid(), &scaling::default_z_grid())?;
            if is_json(out) {
                emit_json(out, &rep)?;
            } else {
                emit(out, &rep.to_csv())?;
            }
            if !rep.decays_by(0.7) {
                return Ok(Verdict::Failed("e_n does not decay by a factor 0.7 per step".into()));
            }
        }
        Command::Aspect { n_max } => {
            let mut rows = Vec::new();
            for n in 0..=n_max {
                let frame = scaling::build_frame(n)?;
                rows.push(json!({ "n": n, "aspect_ratio": scaling::aspect_ratio(&frame), "k_n": frame.k_n }));
            }
            emit_json(out, &json!({ "target": 1.8, "frames": rows }))?;
            let worst = rows.iter().map(|r| (r["aspect_ratio"].as_f64().unwrap_or(f64::NAN) - 1.8).abs()).fold(0.0, f64::max);
            if !(worst < 1e-12) {
                return Ok(Verdict::Failed(format!("aspect ratio is off 1.8 by {worst:e}")));
            }
        }
        Command::Parabolic(arc) => {
            let pp = arc.point()?;
            let e_crit = parabolic::critical_ecalle_height(pp.c, pp.period)?;
            let m = pp.multiplier();
            emit_json(
                out,
                &json!({
                    "point": pp,
                    "e_crit": e_crit,
                    "multiplier": m,
                    "multiplier_residual": (m - 1.0).norm(),
                    "fixed_residual": pp.fixed_residual(),
                }),
            )?;
        }
        Command::Access { arc, epsilon, budget } => {
            let pp = arc.point()?;
            let grid = parabolic::StripGrid { budget, ..Default::default() };
            emit_json(out, &parabolic::accessibility_test(&pp, epsilon, grid)?)?;
        }
        Command::RlFit { count } => {
            let fit = geometry::rl_scaling_fit(&geometry::default_rl_radii(), count, cli.seed)?;
            emit_json(out, &fit)?;
            if !((0.4..=0.6).contains(&fit.slope) && fit.r2 >= 0.95) {
                return Ok(Verdict::Failed(format!("slope {} r2 {}", fit.slope, fit.r2)));
            }
        }
        Command::Argquant { n, m, count } => {
            emit_json(out, &geometry::argument_quantization(n, m, count, cli.seed)?)?;
        }
        Command::Interval { grid_step } => {
            let rep = geometry::koenigs_interval_check(grid_step)?;
            emit_json(out, &rep)?;
            let err = (rep.lo - 4.0 / 9.0).abs().max((rep.hi - 16.0 / 9.0).abs());
            if !(err < 1e-8) {
                return Ok(Verdict::Failed(format!("endpoints off by {err:e}")));
            }
        }
    }
    Ok(Verdict::Ok)
}

fn write_ray(tr: &rays::RayTrace, out: Option<&Path>) -> Result<()> {
    if is_json(out) {
        emit_json(out, &tr.to_json())
    } else {
        emit(out, &tr.to_csv())
    }
}
