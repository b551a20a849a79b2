//! End-to-end checks of the headline numbers, one line per check.
//!
//! Runs without the test harness so that every line is printed; the process
//! exits non-zero when any check fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tricorn_core::family::{apply_second, omega, step, tricorn_member};
use tricorn_core::geometry::{argument_quantization, default_rl_radii, koenigs_interval_check, rl_scaling_fit};
use tricorn_core::koenigs::{self, coefficient_a, estimate_b_constants, koenigs_eval, poincare_eval};
use tricorn_core::orbits::{beta_fixed_point, multiplier, solve_c_n};
use tricorn_core::parabolic::*;
use tricorn_core::rays::{boettcher, green_potential};
use tricorn_core::scaling::{aspect_ratio, build_frame, convergence_report, default_t_grid, default_z_grid};
use tricorn_core::{Complex64 as C, Result};

const AIRPLANE_SEED: C = C::new(-1.754_877_666_246_692_7, 0.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn beta_multiplier() -> Result<Outcome> {
    let c = C::new(-2.0, 0.0);
    let m = multiplier(c, &[beta_fixed_point(c)?]);
    let err = (m - 16.0).norm();
    outcome(err < 1e-12, format!("|lambda - 16| = {err:.1e}"))
}

/// Airplane centre by bisection on the real critical orbit `c -> ((c^2 + c)^2 + c)`.
fn airplane_by_bisection() -> f64 {
    let q = |c: f64| {
        let z = c * c + c;
        z * z + c
    };
    let (mut lo, mut hi) = (-1.8, -1.7);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c_n_sequence() -> Result<Outcome> {
    let c0 = solve_c_n(0)?.c_n;
    let err = (c0 - airplane_by_bisection()).abs();
    let deltas: Vec<f64> = (3..=8).map(|n| solve_c_n(n).map(|r| r.delta())).collect::<Result<_>>()?;
    let ratios: Vec<f64> = deltas.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = err < 1e-10 && ratios.iter().all(|r| (14.5..=17.5).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    outcome(ok, format!("|c_0 - bisection| = {err:.1e}, ratios n=3..7 [{}]", shown.join(", ")))
}

fn chebyshev_identity() -> Result<Outcome> {
    let chart = koenigs::build_chart(C::new(-2.0, 0.0))?;
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let w = k as f64 * 1e-2;
        let exact = 2.0 * (PI * w.sqrt() / 2.0).cos();
        worst = worst.max((poincare_eval(&chart, C::new(w, 0.0))? - exact).norm());
    }
    outcome(worst < 1e-8, format!("sup |Psi(w) - 2cos(pi sqrt(w)/2)| = {worst:.1e}"))
}

fn limit_coefficients() -> Result<Outcome> {
    let pi2 = PI * PI;
    let a2 = coefficient_a(C::new(-2.0, 0.0), 2)?;
    let b = estimate_b_constants()?;
    let rel = |x: C, exact: f64| (x - exact).norm() / exact.abs();
    let (ea, eb, es) = (rel(a2, 64.0 / pi2), rel(b.b0, 896.0 / (15.0 * pi2)), rel(b.b0_star, -256.0 / (15.0 * pi2)));
    outcome(
        ea < 1e-6 && eb < 1e-4 && es < 1e-4,
        format!("relative errors A_2 {ea:.1e}, b0 {eb:.1e}, b0* {es:.1e}"),
    )
}

fn scaling_decay() -> Result<Outcome> {
    let rep = convergence_report(2, 5, &default_t_grid(), &default_z_grid())?;
    let e: Vec<String> = rep.rows.iter().map(|r| format!("{:.2e}", r.e_n)).collect();
    outcome(rep.decays_by(0.7), format!("e_n for n=2..5 [{}]", e.join(", ")))
}

fn aspect() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut seen = 0.0;
    for n in 0..=6 {
        seen = aspect_ratio(&build_frame(n)?);
        worst = worst.max((seen - 1.8).abs());
    }
    outcome(worst < 1e-12, format!("|rho_n(i)| / |rho_n(1)| = {seen:.12} (target 1.8)"))
}

fn rl_exponent() -> Result<Outcome> {
    let fit = rl_scaling_fit(&default_rl_radii(), 20_000, 11)?;
    outcome(
        (0.4..=0.6).contains(&fit.slope) && fit.r2 >= 0.95,
        format!("slope {:.4}, r^2 {:.6}", fit.slope, fit.r2),
    )
}

fn koenigs_interval() -> Result<Outcome> {
    let rep = koenigs_interval_check(1e-3)?;
    let (el, eh) = ((rep.lo - 4.0 / 9.0).abs(), (rep.hi - 16.0 / 9.0).abs());
    outcome(el < 1e-8 && eh < 1e-8, format!("lo - 4/9 = {el:.1e}, hi - 16/9 = {eh:.1e}"))
}

fn charts(pp: &ParabolicPoint) -> Result<(FatouChart, FatouChart)> {
    Ok((
        build_chart(pp, FatouKind::Attracting, None, DEFAULT_DEPTH)?,
        build_chart(pp, FatouKind::Repelling, None, DEFAULT_DEPTH)?,
    ))
}

/// Worst Abel residual over `count` random chart points on each side.
fn abel_worst(pp: &ParabolicPoint, count: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, r) = charts(pp)?;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let w = C::new(rng.random_range(5.0..40.0), rng.random_range(-5.0..5.0));
        worst = worst.max(a.abel_residual(a.point_at(w))?);
        worst = worst.max(r.abel_residual(r.point_at(-w))?);
    }
    Ok(worst)
}

fn fatou_machinery() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut heights = Vec::new();
    for pp in [deltoid_parabolic(0.0), deltoid_parabolic(2.0 * PI / 3.0)] {
        worst = worst.max(abel_worst(&pp, 100, &mut rng)?);
        heights.push(critical_ecalle_height(pp.c, 1)?);
    }
    let e = heights.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    outcome(worst < 1e-6 && e < 1e-6, format!("Abel residual {worst:.1e}, |E_crit| {e:.1e}"))
}

fn accessibility() -> Result<Outcome> {
    let w = accessibility_test(&deltoid_parabolic(2.0 * PI / 3.0), 0.05, StripGrid::default())?;
    let pp = find_parabolic_on_arc(3, AIRPLANE_SEED, 0.0)?;
    let e = critical_ecalle_height(pp.c, 3)?;
    let p3 = accessibility_test(&pp, 0.05, StripGrid::default())?;
    outcome(
        w.verdict && p3.verdict && e.abs() < 1e-6,
        format!(
            "omega/4 verdict {} ({:.3}), period 3 at c = {:.9} verdict {} ({:.3})",
            w.verdict, w.escape_fraction, pp.c, p3.verdict, p3.escape_fraction
        ),
    )
}

fn argument_decay() -> Result<Outcome> {
    let d3 = argument_quantization(3, 2, 4_000_000, 17)?.max_dev;
    let d5 = argument_quantization(5, 2, 4_000_000, 17)?.max_dev;
    outcome(d5 < d3, format!("max_dev n=3 {d3:.2e}, n=5 {d5:.2e}"))
}

fn functional_equations() -> Result<Outcome> {
    const SAMPLES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let disk = |rng: &mut ChaCha8Rng, r: f64| loop {
        let z = C::new(rng.random_range(-r..r), rng.random_range(-r..r));
        if z.norm() < r {
            return z;
        }
    };

    // Boettcher: Phi(f(z)) = conj(Phi(z))^2.
    let mut bott: f64 = 0.0;
    for _ in 0..SAMPLES {
        let c = disk(&mut rng, 2.0);
        let z = C::from_polar(rng.random_range(4.0..10.0), rng.random_range(0.0..2.0 * PI));
        let p = boettcher(c, z, 200)?;
        let q = boettcher(c, step(c, z), 200)?;
        bott = bott.max((q - p.conj() * p.conj()).norm() / q.norm());
    }

    // Green: G(f(z)) = 2 G(z) on escaping points.
    let mut green: f64 = 0.0;
    let mut escaped = 0;
    while escaped < SAMPLES {
        let c = disk(&mut rng, 2.0);
        let z = disk(&mut rng, 3.0);
        let g = green_potential(c, z, 1000)?;
        if g.value == 0.0 {
            continue;
        }
        escaped += 1;
        green = green.max((green_potential(c, step(c, z), 1000)?.value - 2.0 * g.value).abs());
    }

    // Koenigs: kappa(f^2(z)) = lambda kappa(z).
    let mut koen: f64 = 0.0;
    for _ in 0..SAMPLES {
        let c = C::new(rng.random_range(-2.0..-1.75), rng.random_range(-0.05..0.05));
        let ch = koenigs::build_chart(c)?;
        let z = ch.beta + C::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..2.0 * PI));
        let lk = ch.lambda * koenigs_eval(&ch, z)?;
        koen = koen.max((koenigs_eval(&ch, apply_second(c, z))? - lk).norm() / lk.norm().max(1.0));
    }

    // Abel: both charts on deltoid points away from the cusps.
    let mut abel: f64 = 0.0;
    for k in 0..10 {
        let phi = rng.random_range(0.0..0.8) + 2.0 * PI / 3.0 * (k % 3) as f64;
        abel = abel.max(abel_worst(&deltoid_parabolic(phi), SAMPLES / 20, &mut rng)?);
    }

    // Threefold symmetry of the tricorn.
    let mut disagree = 0;
    for _ in 0..SAMPLES {
        let c = disk(&mut rng, 2.0);
        if tricorn_member(c, 1000)? != tricorn_member(c * omega(), 1000)? {
            disagree += 1;
        }
    }

    outcome(
        bott < 1e-8 && green < 1e-9 && koen < 1e-9 && abel < 1e-6 && disagree == 0,
        format!(
            "Boettcher {bott:.1e}, Green {green:.1e}, Koenigs {koen:.1e}, Abel {abel:.1e}, symmetry mismatches {disagree}/{SAMPLES}"
        ),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() {
    let checks: [(&str, Duration, Check); 12] = [
        ("beta multiplier at c = -2", Duration::from_millis(1), beta_multiplier),
        ("c_n sequence", Duration::from_secs(1), c_n_sequence),
        ("Chebyshev identity", Duration::from_secs(1), chebyshev_identity),
        ("limit coefficients", Duration::from_secs(10), limit_coefficients),
        ("scaling limit decay", Duration::from_secs(60), scaling_decay),
        ("aspect ratio", Duration::from_millis(1), aspect),
        ("square-root thinning", Duration::from_secs(120), rl_exponent),
        ("Koenigs interval", Duration::from_secs(1), koenigs_interval),
        ("Fatou coordinates", Duration::from_secs(30), fatou_machinery),
        ("accessibility", Duration::from_secs(120), accessibility),
        ("argument quantization", Duration::from_secs(120), argument_decay),
        ("functional equations", Duration::from_secs(60), functional_equations),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && took <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.3} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs_f64()
        );
    }
    println!("{} of 12 checks passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
