//! Risk estimation over replications and rate-slope regression.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::density::{density_cauchy_power, density_smooth_compact, TestDensity};
use super::sampling::{draw_observations, replication_rng, ErrorSampler};
use crate::error::{Error, Result};
use crate::error_model::{DiscreteOptions, ErrorLaw, ErrorModel};
use crate::estimator::{default_moment_order, select_tuning, Estimator, EstimatorSpec, RiskType};
use crate::kernel::build_kernel;
use crate::numerics::quadrature::adaptive;
use crate::numerics::regression::{fit_line, log_log_slope};
use crate::numerics::summation::CompensatedSum;

/// Declarative error law.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorSpec {
    Uniform { theta: f64 },
    UniformConvolution { thetas: Vec<f64>, mults: Vec<u32> },
    Discrete { step: f64, offset: i64, probs: Vec<f64> },
    Binomial { m: u32 },
    UniformGamma { theta: f64, shape: f64, rate: f64 },
}

impl ErrorSpec {
    pub fn build(&self) -> Result<ErrorModel> {
        let m = match self {
            ErrorSpec::Uniform { theta } => ErrorModel::uniform(*theta),
            ErrorSpec::UniformConvolution { thetas, mults } => ErrorModel::uniform_convolution(thetas, mults),
            ErrorSpec::Discrete { step, offset, probs } => {
                ErrorModel::discrete(*step, probs, *offset, DiscreteOptions::default())
            }
            ErrorSpec::Binomial { m } => ErrorModel::binomial(*m),
            ErrorSpec::UniformGamma { theta, shape, rate } => ErrorModel::uniform_gamma(*theta, *shape, *rate),
        };
        m.map_err(|e| e.with_field_prefix("error"))
    }
}

/// Declarative test density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    CauchyPower { r: f64 },
    SmoothCompact { center: f64, width: f64 },
}

impl DensitySpec {
    pub fn build(&self) -> Result<TestDensity> {
        let d = match self {
            DensitySpec::CauchyPower { r } => density_cauchy_power(*r),
            DensitySpec::SmoothCompact { center, width } => density_smooth_compact(*center, *width),
        };
        d.map_err(|e| e.with_field_prefix("density"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskSpec {
    Pointwise { x0: f64 },
    L2,
}

impl RiskSpec {
    pub fn risk_type(&self) -> RiskType {
        match self {
            RiskSpec::Pointwise { .. } => RiskType::Pointwise,
            RiskSpec::L2 => RiskType::L2,
        }
    }
}

/// Class and kernel parameters that drive the tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSettings {
    pub alpha: f64,
    /// Moment order; the theorem threshold plus slack when absent.
    pub p: Option<f64>,
    pub a_const: f64,
    pub b_const: f64,
    /// Kernel order; `⌈α + 1⌉` when absent.
    pub k0: Option<u32>,
}

impl Default for RiskSettings {
    fn default() -> Self {
        RiskSettings {
            alpha: 2.0,
            p: None,
            a_const: 1.0,
            b_const: 1.0,
            k0: None,
        }
    }
}

impl RiskSettings {
    pub fn kernel_order(&self) -> u32 {
        self.k0.unwrap_or((self.alpha + 1.0).ceil() as u32)
    }

    pub fn moment_order(&self, model: &ErrorModel, risk: RiskType) -> f64 {
        self.p.unwrap_or_else(|| default_moment_order(model, risk))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub error: ErrorSpec,
    pub density: DensitySpec,
    pub risk: RiskSpec,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub settings: RiskSettings,
    pub seed: u64,
    pub bootstrap: usize,
    /// Worker threads; results do not depend on it.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid", "must not be empty"));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::invalid("n_grid", "all sample sizes must be at least 2"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_grid", "must be strictly increasing"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of every field that affects the results.
    pub fn fingerprint(&self) -> String {
        let canonical = format!(
            "{:?}|{:?}|{:?}|{:?}|{}|{:?}|{}|{}",
            self.error, self.density, self.risk, self.n_grid, self.reps, self.settings, self.seed, self.bootstrap
        );
        super::output::sha256_hex(canonical.as_bytes())
    }
}

/// Monte Carlo risk at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub n: usize,
    pub h: f64,
    pub n_cap: u32,
    /// Squared loss of each replication, in replication order.
    pub losses: Vec<f64>,
    /// Root mean squared loss.
    pub risk: f64,
    /// Delta-method standard error of `risk`.
    pub stderr: f64,
    pub warnings: Vec<String>,
}

fn summarize(losses: &[f64]) -> (f64, f64) {
    let n = losses.len() as f64;
    let mut s = CompensatedSum::new();
    losses.iter().for_each(|&l| s.add(l));
    let mean = s.value() / n;
    let risk = mean.sqrt();
    if losses.len() < 2 || risk == 0.0 {
        return (risk, 0.0);
    }
    let mut v = CompensatedSum::new();
    losses.iter().for_each(|&l| v.add((l - mean) * (l - mean)));
    let se_mean = (v.value() / (n - 1.0) / n).sqrt();
    (risk, se_mean / (2.0 * risk))
}

/// Quadrature grid for the L₂ loss: spacing at most `h/16`, covering the bulk of
/// `f_Y` widened by the reach of the kernels. When the zero set lives on a
/// lattice, the spacing divides its unit and the points sit on multiples of it.
pub fn l2_grid(f: &TestDensity, model: &ErrorModel, est: &Estimator) -> Vec<f64> {
    let (e_lo, e_hi) = match model.law() {
        Some(ErrorLaw::Atoms(a)) => a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        }),
        Some(ErrorLaw::Density { support }) => support,
        None => (0.0, 0.0),
    };
    let h = est.spec().h;
    let seq = est.kernel_for(crate::reconstruction::Side::Plus).sequence();
    let reach = seq.max_ell() + model.shift().abs() + h;
    let lo = f.quantile(0.0005) + e_lo - reach;
    let hi = f.quantile(0.9995) + e_hi + reach;
    // the estimate jumps at 0 where the side switches, so the rule is first order
    let step_max = h / 16.0;
    if let Some(unit) = seq.unit {
        let step = unit / (unit / step_max).ceil();
        let (a, b) = ((lo / step).floor() as i64, (hi / step).ceil() as i64);
        return (a..=b).map(|i| i as f64 * step).collect();
    }
    let cells = ((hi - lo) / step_max).ceil().max(1.0) as usize;
    (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect()
}

/// `∫ f²` outside `[lo, hi]`.
fn outside_energy(f: &TestDensity, lo: f64, hi: f64) -> f64 {
    let (s_lo, s_hi) = f.support();
    let tail = |a: f64, b: f64| -> f64 {
        if a >= b {
            return 0.0;
        }
        if b.is_infinite() {
            // x = a + u/(1-u)
            adaptive(0.0, 1.0, 1e-16, 1e-10, |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let x = a + u / (1.0 - u);
                f.pdf(x).powi(2) / ((1.0 - u) * (1.0 - u))
            })
            .value
        } else {
            adaptive(a, b, 1e-16, 1e-10, |x| f.pdf(x).powi(2)).value
        }
    };
    let right = tail(hi.max(s_lo), s_hi);
    let left = if s_lo.is_infinite() {
        // by reflection x -> -x
        let g = |x: f64| f.pdf(-x);
        adaptive(0.0, 1.0, 1e-16, 1e-10, |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let x = -lo + u / (1.0 - u);
            g(x).powi(2) / ((1.0 - u) * (1.0 - u))
        })
        .value
    } else {
        tail(s_lo, lo.min(s_hi))
    };
    left + right
}

/// One sample size: tune, build the estimator, and run all replications.
#[allow(clippy::too_many_arguments)]
pub fn risk_at(
    f: &TestDensity,
    model: &Arc<ErrorModel>,
    settings: &RiskSettings,
    risk: RiskSpec,
    n: usize,
    reps: usize,
    seed: u64,
    cell: u32,
) -> Result<RiskEstimate> {
    let rt = risk.risk_type();
    let p = settings.moment_order(model, rt);
    let tuning = select_tuning(model, settings.alpha, p, settings.a_const, settings.b_const, n, rt)?;
    let kernel = Arc::new(build_kernel(settings.kernel_order())?);
    let est = Estimator::new(EstimatorSpec {
        model: model.clone(),
        kernel,
        h: tuning.h,
        n_cap: tuning.n_cap,
        alpha: settings.alpha,
        p,
        a_const: settings.a_const,
        b_const: settings.b_const,
    })?;
    let mut warnings: Vec<String> = tuning.warnings.iter().map(|w| w.to_string()).collect();
    let sampler = ErrorSampler::new(model)?;
    let (grid, weights, truth) = match risk {
        RiskSpec::Pointwise { x0 } => (vec![x0], vec![1.0], vec![f.pdf(x0)]),
        RiskSpec::L2 => {
            let g = l2_grid(f, model, &est);
            let dx = g[1] - g[0];
            let mut w = vec![dx; g.len()];
            w[0] *= 0.5;
            *w.last_mut().expect("nonempty grid") *= 0.5;
            let t = g.iter().map(|&x| f.pdf(x)).collect();
            (g, w, t)
        }
    };
    let losses: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = replication_rng(seed, cell, rep as u32);
            let mut ys = draw_observations(f, &sampler, n, &mut rng)?;
            ys.sort_by(f64::total_cmp);
            let step = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
            let values = est
                .estimate_lattice(&ys, grid[0], step, grid.len())
                .unwrap_or_else(|| grid.iter().map(|&x| est.estimate_sorted(&ys, x)).collect());
            let mut acc = CompensatedSum::new();
            for ((&v, &w), &t) in values.iter().zip(&weights).zip(&truth) {
                let d = v - t;
                acc.add(w * d * d);
            }
            Ok(acc.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (r, se) = summarize(&losses);
    if risk == RiskSpec::L2 {
        let outside = outside_energy(f, grid[0], *grid.last().expect("nonempty grid")).sqrt();
        if outside > 0.1 * r {
            warnings.push(format!(
                "L2 grid misses ‖f‖ of {outside:.3e} outside its range, more than 10% of the risk {r:.3e}"
            ));
        }
    }
    Ok(RiskEstimate {
        n,
        h: tuning.h,
        n_cap: tuning.n_cap,
        losses,
        risk: r,
        stderr: se,
        warnings,
    })
}

pub fn pointwise_risk(
    f: &TestDensity,
    model: &ErrorModel,
    settings: &RiskSettings,
    x0: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    risk_at(
        f,
        &Arc::new(model.clone()),
        settings,
        RiskSpec::Pointwise { x0 },
        n,
        reps,
        seed,
        0,
    )
}

pub fn l2_risk(
    f: &TestDensity,
    model: &ErrorModel,
    settings: &RiskSettings,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    risk_at(f, &Arc::new(model.clone()), settings, RiskSpec::L2, n, reps, seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub cells: Vec<RiskEstimate>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: (f64, f64),
    pub theoretical_slope: f64,
    pub warnings: Vec<String>,
    pub fingerprint: String,
}

impl RiskReport {
    pub fn n_values(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.n).collect()
    }

    pub fn risks(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.risk).collect()
    }
}

/// `-α/(2α + 2γ + 1)`.
pub fn theoretical_slope(alpha: f64, gamma: f64) -> f64 {
    -alpha / (2.0 * alpha + 2.0 * gamma + 1.0)
}

/// Percentile bootstrap interval of the log-log slope, resampling replications
/// independently at each sample size.
pub fn bootstrap_slope_ci(cells: &[RiskEstimate], resamples: usize, seed: u64) -> (f64, f64) {
    if resamples == 0 || cells.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let ns: Vec<f64> = cells.iter().map(|c| c.n as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut slopes: Vec<f64> = (0..resamples)
        .filter_map(|_| {
            let risks: Vec<f64> = cells
                .iter()
                .map(|c| {
                    let k = c.losses.len();
                    let mut s = CompensatedSum::new();
                    for _ in 0..k {
                        s.add(c.losses[rng.random_range(0..k)]);
                    }
                    (s.value() / k as f64).sqrt()
                })
                .collect();
            log_log_slope(&ns, &risks)
        })
        .collect();
    if slopes.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    slopes.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let pos = q * (slopes.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let j = (i + 1).min(slopes.len() - 1);
        slopes[i] * (1.0 - frac) + slopes[j] * frac
    };
    (pick(0.025), pick(0.975))
}

pub fn rate_experiment(spec: &ExperimentSpec) -> Result<RiskReport> {
    spec.validate()?;
    let run = || -> Result<RiskReport> {
        let model = Arc::new(spec.error.build()?);
        let f = spec.density.build()?;
        let mut warnings = Vec::new();
        let (first, last) = (spec.n_grid[0] as f64, *spec.n_grid.last().expect("validated") as f64);
        if spec.n_grid.len() < 4 || last / first < 100.0 {
            warnings.push("fewer than 4 sample sizes or less than 2 decades; the slope is fragile".to_string());
        }
        let mut cells = Vec::with_capacity(spec.n_grid.len());
        for (i, &n) in spec.n_grid.iter().enumerate() {
            let c = risk_at(&f, &model, &spec.settings, spec.risk, n, spec.reps, spec.seed, i as u32)?;
            for w in &c.warnings {
                if !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
            cells.push(c);
        }
        let lx: Vec<f64> = cells.iter().map(|c| (c.n as f64).ln()).collect();
        let ly: Vec<f64> = cells.iter().map(|c| c.risk.max(f64::MIN_POSITIVE).ln()).collect();
        let fit = fit_line(&lx, &ly);
        let (slope, intercept) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.intercept));
        Ok(RiskReport {
            slope_ci: bootstrap_slope_ci(&cells, spec.bootstrap, spec.seed),
            slope,
            intercept,
            theoretical_slope: theoretical_slope(spec.settings.alpha, model.gamma()),
            cells,
            warnings,
            fingerprint: spec.fingerprint(),
        })
    };
    match spec.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {t} worker threads: {e}")))?
            .install(run),
        None => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes() {
        assert!((theoretical_slope(2.0, 1.0) + 2.0 / 7.0).abs() < 1e-15);
        assert!((theoretical_slope(2.0, 0.0) + 0.4).abs() < 1e-15);
        assert!((theoretical_slope(2.0, 2.0) + 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn summary_of_constant_losses() {
        let (r, se) = summarize(&[4.0, 4.0, 4.0]);
        assert_eq!(r, 2.0);
        assert_eq!(se, 0.0);
        let (r, _) = summarize(&[0.25]);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn validation() {
        let mut s = ExperimentSpec {
            error: ErrorSpec::Uniform { theta: 1.0 },
            density: DensitySpec::CauchyPower { r: 3.0 },
            risk: RiskSpec::Pointwise { x0: 0.0 },
            n_grid: vec![100, 1000],
            reps: 10,
            settings: RiskSettings::default(),
            seed: 0,
            bootstrap: 0,
            threads: None,
        };
        assert!(s.validate().is_ok());
        s.n_grid = vec![1000, 100];
        assert!(s.validate().is_err());
        s.n_grid = vec![1, 100];
        assert!(s.validate().is_err());
    }
}
