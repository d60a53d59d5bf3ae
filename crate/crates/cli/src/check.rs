//! Built-in oracle checks run by `deconv check`.

use std::sync::Arc;

use anyhow::Result;
use deconv_core::kernel::build_kernel;
use deconv_core::numerics::quadrature::legendre;
use deconv_core::reconstruction::{
    base_closed_form, base_fft, base_function, build_l, expected_kernel_value, observation_density, smoothed_density,
    truncation_term, BaseFunction, Side,
};
use deconv_core::simulation::density_cauchy_power;
use deconv_core::zero_set::build_sequence;
use deconv_core::ErrorModel;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn moments() -> Result<CheckResult> {
    let rule = legendre(200);
    let mut worst = 0.0f64;
    for k0 in [1, 3, 5] {
        let k = build_kernel(k0)?;
        worst = worst.max((rule.integrate(-1.0, 1.0, |t| k.value(t)) - 1.0).abs());
        for j in 1..=k0 as i32 {
            worst = worst.max(rule.integrate(-1.0, 1.0, |t| t.powi(j) * k.value(t)).abs());
        }
    }
    Ok(CheckResult {
        name: "kernel moment conditions",
        pass: worst < 1e-8,
        detail: format!("worst residual {worst:.2e} for k0 in 1, 3, 5"),
    })
}

fn sup_diff(a: &BaseFunction, b: &BaseFunction) -> f64 {
    let lo = a.support().0.min(b.support().0);
    let hi = a.support().1.max(b.support().1);
    (0..=10_000)
        .map(|i| lo + (hi - lo) * i as f64 / 10_000.0)
        .map(|t| (a.eval(t) - b.eval(t)).abs())
        .fold(0.0, f64::max)
}

fn closed_form_vs_fft() -> Result<CheckResult> {
    let k = build_kernel(3)?;
    let mut worst = 0.0f64;
    for model in [ErrorModel::uniform(1.0)?, ErrorModel::binomial(2)?] {
        let d = sup_diff(&base_closed_form(&model, &k, 0.1)?, &base_fft(&model, &k, 0.1)?);
        worst = worst.max(d);
    }
    Ok(CheckResult {
        name: "closed-form and FFT base functions agree",
        pass: worst < 1e-6,
        detail: format!("sup difference {worst:.2e} (uniform, binomial m=2, h=0.1)"),
    })
}

fn bias_identity() -> Result<CheckResult> {
    let model = ErrorModel::uniform(1.0)?;
    let k = build_kernel(3)?;
    let f = density_cauchy_power(3.0)?;
    let pdf = |x: f64| f.pdf(x);
    let (h, n_cap) = (0.1, 100);
    let l = build_l(
        Arc::new(build_sequence(&model, n_cap)?),
        Arc::new(base_function(&model, &k, h)?),
        Side::Plus,
    );
    let fy = |y: f64| observation_density(&model, &pdf, y).unwrap_or(f64::NAN);
    let mut worst = 0.0f64;
    for x0 in [0.0, 0.5, 2.0] {
        let lhs = expected_kernel_value(&l, &fy, x0);
        let rhs = smoothed_density(&k, h, &pdf, x0) + truncation_term(&model, &k, h, n_cap, Side::Plus, &pdf, x0)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(CheckResult {
        name: "expected kernel equals smoothed density plus truncation term",
        pass: worst < 1e-4,
        detail: format!("worst gap {worst:.2e} (uniform, h=0.1, N=100)"),
    })
}

fn uniform_coefficients() -> Result<CheckResult> {
    let seq = build_sequence(&ErrorModel::uniform(1.0)?, 20)?;
    let pass = seq
        .entries
        .iter()
        .all(|e| e.c_plus.re == 1.0 && e.c_minus.re == -1.0 && e.c_plus.im == 0.0 && e.c_minus.im == 0.0);
    Ok(CheckResult {
        name: "uniform coefficients are +1 and -1",
        pass,
        detail: format!("{} entries", seq.len()),
    })
}

pub fn run_checks() -> Result<Vec<CheckResult>> {
    Ok(vec![
        moments()?,
        uniform_coefficients()?,
        closed_form_vs_fft()?,
        bias_identity()?,
    ])
}
