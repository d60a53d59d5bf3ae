//! The deconvolution estimator `f̃(x₀) = (1/n) Σ_j L_{±}(Y_j - x₀)` and its tuning.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::kernel::FlatKernel;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::numerics::summation::CompensatedSum;
use crate::reconstruction::{base_function, build_l, DeconvolutionKernel, Side};
use crate::zero_set::{build_sequence_with, BuildOptions};

/// Above this many multiply-adds the translate sum on a lattice grid uses an FFT.
const DIRECT_CONVOLUTION_LIMIT: usize = 4_000_000;

/// Slack added to strict moment thresholds when choosing default `p`.
pub const MOMENT_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskType {
    Pointwise,
    L2,
}

/// Non-fatal conditions under which the rate guarantees may not apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    MomentHypothesis { p: f64, required: String },
    BandwidthNotBelowPeriod { h: f64, min_period: f64 },
    TruncationCapped { requested: u64, cap: u32 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::MomentHypothesis { p, required } => {
                write!(
                    f,
                    "moment order p = {p} does not meet {required}; the rate is not guaranteed"
                )
            }
            Warning::BandwidthNotBelowPeriod { h, min_period } => {
                write!(
                    f,
                    "h = {h} is not below the smallest period {min_period}; translates overlap"
                )
            }
            Warning::TruncationCapped { requested, cap } => {
                write!(
                    f,
                    "truncation N = {requested} exceeds the enumeration budget; using N = {cap}"
                )
            }
        }
    }
}

/// Moment requirement of the rate theorems, as `(threshold, strict)`.
pub fn moment_requirement(model: &ErrorModel, risk: RiskType) -> (f64, bool) {
    let zeros = model.zeros();
    if zeros.len() == 1 {
        // single lattice of zeros: uniform^m and binomial cases
        let m = zeros[0].m as f64;
        match risk {
            RiskType::Pointwise if zeros[0].m > 1 => (2.0 * m - 2.0, false),
            RiskType::Pointwise => (0.0, true),
            RiskType::L2 => (2.0 * m - 1.0, true),
        }
    } else {
        // coefficient growth order ν must exceed Σ m_k
        let nu: f64 = zeros.iter().map(|z| z.m as f64).sum::<f64>().max(1.0);
        match risk {
            RiskType::Pointwise => (2.0 * nu, true),
            RiskType::L2 => (2.0 * nu + 1.0, true),
        }
    }
}

/// Default `p`: the moment threshold plus `MOMENT_SLACK`.
pub fn default_moment_order(model: &ErrorModel, risk: RiskType) -> f64 {
    let (p, _) = moment_requirement(model, risk);
    p.max(0.0) + MOMENT_SLACK
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub h: f64,
    pub n_cap: u32,
    pub warnings: Vec<Warning>,
}

/// Largest `N` with `(N + 1)^q` within the enumeration budget.
pub fn truncation_cap(model: &ErrorModel, budget: u64) -> u32 {
    let q = model.zeros().len().max(1) as i32;
    let mut cap = (budget as f64).powf(1.0 / q as f64).floor() as u64;
    while cap > 1 && (cap as f64).powi(q) > budget as f64 {
        cap -= 1;
    }
    cap.saturating_sub(1).min(u32::MAX as u64) as u32
}

/// Bandwidth `h_* = [B/(A² n)]^{1/(2α+2γ+1)}` and the smallest admissible `N`.
pub fn select_tuning(
    model: &ErrorModel,
    alpha: f64,
    p: f64,
    a_const: f64,
    b_const: f64,
    n: usize,
    risk: RiskType,
) -> Result<Tuning> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 observations, got {n}")));
    }
    for (name, v) in [("alpha", alpha), ("p", p), ("a_const", a_const), ("b_const", b_const)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    let gamma = model.gamma();
    let nf = n as f64;
    let denom = 2.0 * alpha + 2.0 * gamma + 1.0;
    let h = (b_const / (a_const * a_const * nf)).powf(1.0 / denom);
    let base = a_const.powf(-2.0 * gamma + 1.0) * b_const.powf(2.0 * gamma + alpha) * nf.powf(alpha + 1.0);
    let exponent = match risk {
        RiskType::Pointwise => 1.0 / (p * denom),
        RiskType::L2 => 2.0 / ((2.0 * p - 1.0) * denom),
    };
    let mut warnings = Vec::new();
    let (required, strict) = moment_requirement(model, risk);
    if (strict && p <= required) || (!strict && p < required) || (risk == RiskType::L2 && p <= 0.5) {
        let op = if strict { ">" } else { "≥" };
        warnings.push(Warning::MomentHypothesis {
            p,
            required: format!("p {op} {required}"),
        });
    }
    let raw = if exponent > 0.0 {
        base.powf(exponent).ceil()
    } else {
        f64::INFINITY
    };
    let cap = truncation_cap(model, BuildOptions::default().budget);
    let n_cap = if raw.is_finite() && raw <= cap as f64 {
        (raw as u32).max(1)
    } else {
        warnings.push(Warning::TruncationCapped {
            requested: if raw.is_finite() { raw as u64 } else { u64::MAX },
            cap,
        });
        cap.max(1)
    };
    if h >= model.min_period() {
        warnings.push(Warning::BandwidthNotBelowPeriod {
            h,
            min_period: model.min_period(),
        });
    }
    Ok(Tuning { h, n_cap, warnings })
}

/// Everything that fixes the estimator.
#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub model: Arc<ErrorModel>,
    pub kernel: Arc<FlatKernel>,
    pub h: f64,
    pub n_cap: u32,
    pub alpha: f64,
    pub p: f64,
    pub a_const: f64,
    pub b_const: f64,
}

impl EstimatorSpec {
    /// Checks `k0 ≥ α + 1` and positivity; returns warnings for soft violations.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("h", format!("must be positive, got {}", self.h)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if (self.kernel.k0() as f64) < self.alpha + 1.0 {
            return Err(Error::invalid(
                "k0",
                format!(
                    "kernel order {} is below alpha + 1 = {}",
                    self.kernel.k0(),
                    self.alpha + 1.0
                ),
            ));
        }
        let mut w = Vec::new();
        if self.h >= self.model.min_period() {
            w.push(Warning::BandwidthNotBelowPeriod {
                h: self.h,
                min_period: self.model.min_period(),
            });
        }
        Ok(w)
    }
}

/// Both one-sided kernels, built once and reused across samples.
#[derive(Debug, Clone)]
pub struct Estimator {
    spec: EstimatorSpec,
    plus: DeconvolutionKernel,
    minus: DeconvolutionKernel,
    warnings: Vec<Warning>,
}

impl Estimator {
    pub fn new(spec: EstimatorSpec) -> Result<Self> {
        let warnings = spec.validate()?;
        let seq = Arc::new(build_sequence_with(
            spec.model.zeros(),
            spec.n_cap,
            BuildOptions::default(),
        )?);
        let base = Arc::new(base_function(&spec.model, &spec.kernel, spec.h)?);
        let plus = build_l(seq.clone(), base.clone(), Side::Plus);
        let minus = build_l(seq, base, Side::Minus);
        Ok(Estimator {
            spec,
            plus,
            minus,
            warnings,
        })
    }

    pub fn spec(&self) -> &EstimatorSpec {
        &self.spec
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn kernel_for(&self, side: Side) -> &DeconvolutionKernel {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Estimate at `x0` from an ascending sample.
    ///
    /// Terms are added translate by translate and in sample order, so the
    /// result depends on the sample only as a multiset.
    pub fn estimate_sorted(&self, sorted: &[f64], x0: f64) -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        let l = self.kernel_for(Side::for_point(x0));
        let (lo, hi) = l.base().support();
        let mut acc = CompensatedSum::new();
        for (off, c) in l.translates() {
            let a = x0 + off + lo;
            let b = x0 + off + hi;
            let start = sorted.partition_point(|&y| y < a);
            let end = sorted.partition_point(|&y| y <= b);
            for &y in &sorted[start..end] {
                acc.add(c * l.base().eval(y - x0 - off));
            }
        }
        acc.value() / sorted.len() as f64
    }

    /// `(1/n) Σ_j R_h(Y_j - t)` from an ascending sample.
    fn smooth_sorted(&self, sorted: &[f64], t: f64) -> f64 {
        let base = self.plus.base();
        let (lo, hi) = base.support();
        let start = sorted.partition_point(|&y| y < t + lo);
        let end = sorted.partition_point(|&y| y <= t + hi);
        let mut acc = CompensatedSum::new();
        for &y in &sorted[start..end.max(start)] {
            acc.add(base.eval(y - t));
        }
        acc.value() / sorted.len() as f64
    }

    /// Estimates at `x0 + i·step` for `i < count` from an ascending sample.
    ///
    /// When every translate offset is a multiple of `step`, the sample is smoothed
    /// once on the grid and the translates are combined by index shifts, which
    /// costs far less than evaluating each point when `N` is large. Returns `None`
    /// if the offsets are not on the grid.
    pub fn estimate_lattice(&self, sorted: &[f64], x0: f64, step: f64, count: usize) -> Option<Vec<f64>> {
        if !(step > 0.0) {
            return None;
        }
        let mut out = vec![0.0; count];
        if sorted.is_empty() || count == 0 {
            return Some(out);
        }
        // indices below `split` use the minus side
        let split = (0..count)
            .take_while(|&i| Side::for_point(x0 + i as f64 * step) == Side::Minus)
            .count();
        for (side, range) in [(Side::Minus, 0..split), (Side::Plus, split..count)] {
            if range.is_empty() {
                continue;
            }
            let l = self.kernel_for(side);
            let mut shifts = Vec::new();
            let mut coefs = Vec::new();
            for (off, c) in l.translates() {
                let s = (off / step).round();
                if (off - s * step).abs() > 1e-9 * (1.0 + off.abs()) {
                    return None;
                }
                shifts.push(s as i64);
                coefs.push(c);
            }
            let (s_min, s_max) = (shifts[0], *shifts.last().expect("nonempty"));
            let first = range.start as i64 + s_min;
            let len = (range.len() as i64 + s_max - s_min) as usize;
            let g: Vec<f64> = (0..len)
                .map(|m| self.smooth_sorted(sorted, x0 + (first + m as i64) as f64 * step))
                .collect();
            let span = (s_max - s_min + 1) as usize;
            let mut b = vec![0.0; span];
            for (&s, &c) in shifts.iter().zip(&coefs) {
                b[(s - s_min) as usize] += c;
            }
            let values = if range.len().saturating_mul(shifts.len()) <= DIRECT_CONVOLUTION_LIMIT {
                (0..range.len())
                    .map(|i| {
                        let mut acc = CompensatedSum::new();
                        for (&s, &c) in shifts.iter().zip(&coefs) {
                            acc.add(c * g[i + (s - s_min) as usize]);
                        }
                        acc.value()
                    })
                    .collect()
            } else {
                correlate(&g, &b, range.len())
            };
            out[range].copy_from_slice(&values);
        }
        Some(out)
    }

    pub fn estimate_point(&self, sample: &[f64], x0: f64) -> f64 {
        self.estimate_grid(sample, &[x0])[0]
    }

    pub fn estimate_grid(&self, sample: &[f64], grid: &[f64]) -> Vec<f64> {
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        grid.iter().map(|&x| self.estimate_sorted(&sorted, x)).collect()
    }
}

/// `out[i] = Σ_d b[d] g[i + d]` for `i < count`, by FFT.
fn correlate(g: &[f64], b: &[f64], count: usize) -> Vec<f64> {
    let size = (g.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    x.resize(size, Complex64::new(0.0, 0.0));
    let mut y: Vec<Complex64> = b.iter().rev().map(|&v| Complex64::new(v, 0.0)).collect();
    y.resize(size, Complex64::new(0.0, 0.0));
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (a, c) in x.iter_mut().zip(&y) {
        *a *= c;
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    (0..count).map(|i| x[i + b.len() - 1].re * scale).collect()
}
