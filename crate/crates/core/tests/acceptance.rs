//! Acceptance suite. Run with `cargo test -p deconv-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use deconv_core::kernel::build_kernel;
use deconv_core::numerics::quadrature::legendre;
use deconv_core::numerics::regression::log_log_slope;
use deconv_core::reconstruction::*;
use deconv_core::simulation::output::write_experiment;
use deconv_core::simulation::*;
use deconv_core::zero_set::{build_sequence, build_sequence_with, lattice_series, BuildOptions};
use deconv_core::{ErrorModel, ZeroDatum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    soft: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        soft: false,
        detail,
    }
}

fn timed(limit: Duration, pass: bool, detail: String, elapsed: Duration) -> Outcome {
    let ok = pass && elapsed < limit;
    outcome(ok, format!("{detail}; {:.2?} (limit {limit:?})", elapsed))
}

fn kernel_contract() -> Outcome {
    let t = Instant::now();
    let rule = legendre(200);
    let mut worst = 0.0f64;
    for k0 in [1, 3, 5] {
        let k = build_kernel(k0).unwrap();
        worst = worst.max((rule.integrate(-1.0, 1.0, |t| k.value(t)) - 1.0).abs());
        for j in 1..=k0 as i32 {
            worst = worst.max(rule.integrate(-1.0, 1.0, |t| t.powi(j) * k.value(t)).abs());
        }
    }
    timed(
        Duration::from_secs(1),
        worst < 1e-8,
        format!("worst moment error {worst:.2e}"),
        t.elapsed(),
    )
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn zero_set_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20260517);
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    for cfg in 0..50 {
        let q = rng.random_range(1..=3);
        let n = rng.random_range(0..=6);
        let zeros: Vec<ZeroDatum> = (0..q)
            .map(|_| {
                // half the configurations use commensurate periods
                let a = if cfg % 2 == 0 {
                    0.5 * rng.random_range(1..=6) as f64
                } else {
                    rng.random_range(0.3..3.0)
                };
                let lambda = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
                ZeroDatum::new(a, lambda, rng.random_range(1..=3)).unwrap()
            })
            .collect();
        let seq = build_sequence_with(&zeros, n, BuildOptions::default()).unwrap();
        let oracle = common::brute_force(&zeros, n);
        if oracle.len() != seq.len() {
            mismatched += 1;
            continue;
        }
        for ((ell, cp, cm), e) in oracle.iter().zip(&seq.entries) {
            if (ell - e.ell).abs() > 1e-9 * (1.0 + ell) {
                mismatched += 1;
            }
            let scale = cp.norm().max(cm.norm()).max(1.0);
            worst = worst
                .max((e.c_plus - cp).norm() / scale)
                .max((e.c_minus - cm).norm() / scale);
        }
    }
    timed(
        Duration::from_secs(10),
        mismatched == 0 && worst < 1e-12,
        format!("50 configs, worst coefficient error {worst:.2e} (relative to max(1, |C|)), {mismatched} support mismatches"),
        t.elapsed(),
    )
}

fn specialized_coefficients() -> Outcome {
    let one = Complex64::new(1.0, 0.0);
    let mut failures = Vec::new();
    let u = build_sequence(&ErrorModel::uniform(1.0).unwrap(), 40).unwrap();
    if !u.entries.iter().all(|e| e.c_plus == one && e.c_minus == -one) {
        failures.push("uniform".to_string());
    }
    for m in 1..=4u32 {
        let n = 20;
        let s = build_sequence(&ErrorModel::uniform_convolution(&[1.0], &[m]).unwrap(), n).unwrap();
        for j in 0..=n as u64 {
            let e = s.find(2.0 * j as f64, 1e-12).unwrap();
            if e.c_plus != Complex64::new(binom(j + m as u64 - 1, m as u64 - 1) as f64, 0.0) {
                failures.push(format!("{m}-fold uniform at j={j}"));
            }
        }
    }
    for m in 1..=4u32 {
        let n = 20;
        let s = build_sequence(&ErrorModel::binomial(m).unwrap(), n).unwrap();
        for l in 0..=n as u64 {
            let e = s.find(l as f64, 1e-12).unwrap();
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let c = Complex64::new(sign * binom(l + m as u64 - 1, m as u64 - 1) as f64, 0.0);
            if e.c_plus != c || e.c_minus != c {
                failures.push(format!("binomial({m}) at l={l}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "exact equality for uniform, m-fold uniform (m ≤ 4) and binomial (m ≤ 4)".to_string()
        } else {
            format!("mismatches: {failures:?}")
        },
    )
}

fn sup_diff(a: &BaseFunction, b: &BaseFunction) -> f64 {
    let lo = a.support().0.min(b.support().0) - 0.05;
    let hi = a.support().1.max(b.support().1) + 0.05;
    (0..=20000)
        .map(|i| lo + (hi - lo) * i as f64 / 20000.0)
        .map(|t| (a.eval(t) - b.eval(t)).abs())
        .fold(0.0, f64::max)
}

fn fft_vs_closed_form() -> Outcome {
    let t = Instant::now();
    let k = build_kernel(3).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for model in [ErrorModel::uniform(1.0).unwrap(), ErrorModel::binomial(2).unwrap()] {
        let c = base_closed_form(&model, &k, 0.1).unwrap();
        let f = base_fft(&model, &k, 0.1).unwrap();
        let d = sup_diff(&c, &f);
        pass &= d < 1e-6;
        details.push(format!("{} {d:.2e}", model.tag()));
    }
    timed(
        Duration::from_secs(5),
        pass,
        format!("sup diff {}", details.join(", ")),
        t.elapsed(),
    )
}

/// `(8/(3π))(1 + x²)^{-3}`.
fn f0_r3(x: f64) -> f64 {
    8.0 / (3.0 * PI) * (1.0 + x * x).powi(-3)
}

fn bias_identity() -> Outcome {
    let t = Instant::now();
    let model = ErrorModel::uniform(1.0).unwrap();
    let k = build_kernel(3).unwrap();
    let (h, n_cap) = (0.1, 100);
    let seq = Arc::new(build_sequence(&model, n_cap).unwrap());
    let base = Arc::new(base_function(&model, &k, h).unwrap());
    let l = build_l(seq, base, Side::Plus);
    let fy = |y: f64| observation_density(&model, &f0_r3, y).unwrap();
    let mut worst = 0.0f64;
    for x0 in [0.0, 0.5, 2.0] {
        let lhs = expected_kernel_value(&l, &fy, x0);
        let rhs = smoothed_density(&k, h, &f0_r3, x0)
            + truncation_term(&model, &k, h, n_cap, Side::Plus, &f0_r3, x0).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    timed(
        Duration::from_secs(30),
        worst < 1e-4,
        format!("worst gap {worst:.2e}"),
        t.elapsed(),
    )
}

fn rate_spec(error: ErrorSpec, r: f64, p: f64) -> ExperimentSpec {
    ExperimentSpec {
        error,
        density: DensitySpec::CauchyPower { r },
        risk: RiskSpec::Pointwise { x0: 0.0 },
        n_grid: vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        reps: 100,
        settings: RiskSettings {
            alpha: 2.0,
            p: Some(p),
            a_const: 1.0,
            b_const: 1.0,
            k0: Some(3),
        },
        seed: 1,
        bootstrap: 500,
        threads: Some(1),
    }
}

fn uniform_rate_spec() -> ExperimentSpec {
    rate_spec(ErrorSpec::Uniform { theta: 1.0 }, 3.0, 4.9)
}

fn rate_check(spec: &ExperimentSpec, target: f64) -> (Outcome, RiskReport) {
    let t = Instant::now();
    let rep = rate_experiment(spec).unwrap();
    let (lo, hi) = rep.slope_ci;
    let pass = (rep.slope - target).abs() <= 0.12 && lo <= rep.theoretical_slope && rep.theoretical_slope <= hi;
    let o = timed(
        Duration::from_secs(600),
        pass,
        format!(
            "slope {:.3}, 95% CI ({lo:.3}, {hi:.3}), theory {:.3}, target {target:.3} ± 0.12",
            rep.slope, rep.theoretical_slope
        ),
        t.elapsed(),
    );
    (o, rep)
}

fn schur_asymptotics() -> Outcome {
    let t = Instant::now();
    let model = ErrorModel::uniform_convolution(&[1.0, 2.0, 3.0], &[1, 1, 1]).unwrap();
    let s = lattice_series(model.zeros(), 260).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = s
        .c_plus
        .iter()
        .enumerate()
        .map(|(i, c)| (s.unit * i as f64, c.norm()))
        .filter(|&(l, c)| (50.0..=500.0).contains(&l) && c > 0.0)
        .unzip();
    let slope = log_log_slope(&x, &y).unwrap();
    timed(
        Duration::from_secs(5),
        (1.7..=2.3).contains(&slope),
        format!("slope {slope:.3} over {} points, expected 2", x.len()),
        t.elapsed(),
    )
}

fn moment_necessity() -> Outcome {
    let e = || ErrorSpec::UniformConvolution {
        thetas: vec![1.0],
        mults: vec![2],
    };
    let heavy = rate_experiment(&rate_spec(e(), 1.2, 1.3)).unwrap();
    let light = rate_experiment(&rate_spec(e(), 3.0, 4.9)).unwrap();
    let gap = heavy.slope - light.slope;
    let overlap = heavy.slope_ci.0 <= light.slope_ci.1 && light.slope_ci.0 <= heavy.slope_ci.1;
    let detail = format!(
        "r=1.2 slope {:.3} CI ({:.3}, {:.3}); r=3 slope {:.3} CI ({:.3}, {:.3}); gap {gap:.3}{}",
        heavy.slope,
        heavy.slope_ci.0,
        heavy.slope_ci.1,
        light.slope,
        light.slope_ci.0,
        light.slope_ci.1,
        if overlap { "; CIs overlap" } else { "" }
    );
    Outcome {
        pass: gap >= 0.05 && !overlap,
        soft: true,
        detail,
    }
}

fn determinism(first: &RiskReport) -> Outcome {
    let second = rate_experiment(&uniform_rate_spec()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_experiment(a.path(), first, false).unwrap();
    write_experiment(b.path(), &second, false).unwrap();
    let ra = std::fs::read(a.path().join("rates.csv")).unwrap();
    let rb = std::fs::read(b.path().join("rates.csv")).unwrap();
    outcome(
        ra == rb,
        format!("rates.csv {} bytes, identical: {}", ra.len(), ra == rb),
    )
}

#[test]
fn acceptance_criteria() {
    let mut results: BTreeMap<u32, (&str, Outcome)> = BTreeMap::new();
    results.insert(1, ("kernel contract", kernel_contract()));
    results.insert(2, ("zero-set oracle equivalence", zero_set_oracle()));
    results.insert(3, ("specialized coefficients", specialized_coefficients()));
    results.insert(4, ("closed form vs FFT base function", fft_vs_closed_form()));
    results.insert(5, ("bias identity", bias_identity()));
    let (o6, report6) = rate_check(&uniform_rate_spec(), -2.0 / 7.0);
    results.insert(6, ("rate, uniform error", o6));
    let (o7, _) = rate_check(&rate_spec(ErrorSpec::Binomial { m: 1 }, 3.0, 4.9), -0.4);
    results.insert(7, ("rate, binomial error", o7));
    results.insert(8, ("coefficient growth", schur_asymptotics()));
    results.insert(9, ("moment necessity (soft)", moment_necessity()));
    results.insert(10, ("determinism", determinism(&report6)));

    let mut hard_failures = Vec::new();
    for (id, (name, o)) in &results {
        let tag = match (o.pass, o.soft) {
            (true, _) => "PASS",
            (false, true) => "FLAG",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name}: {}", o.detail);
        if !o.pass && !o.soft {
            hard_failures.push(*id);
        }
    }
    assert!(hard_failures.is_empty(), "failed criteria: {hard_failures:?}");
}
