//! The base function `R_h(t) = (2π)^{-1} ∫ K̂(iωh) ψ̂(-iω) e^{iωt} dω` and the
//! truncated one-sided kernels
//!
//! ```text
//! L₊(t) = Σ_{ℓ∈ℒ_N} C_ℓ^+ R_h(t - ℓ)
//! L₋(t) = Σ_{ℓ∈ℒ_N} C_ℓ^- R_h(t + a^T m + ℓ)
//! ```
//!
//! plus quadrature oracles for the convolution identity they satisfy.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::error_model::{ErrorLaw, ErrorModel};
use crate::kernel::FlatKernel;
use crate::numerics::interp::HermiteTable;
use crate::numerics::quadrature::{adaptive, adaptive_with_breaks, legendre};
use crate::numerics::summation::CompensatedSum;
use crate::zero_set::{weak_composition_count, ZeroSetSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseMode {
    ClosedForm,
    Fft,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `scale · h^{-(order+1)} K^{(order)}((t - center)/h)`
    Closed {
        kernel: FlatKernel,
        order: usize,
        scale: f64,
        center: f64,
    },
    Table(HermiteTable),
}

#[derive(Debug, Clone)]
pub struct BaseFunction {
    h: f64,
    mode: BaseMode,
    support: (f64, f64),
    repr: Repr,
    /// Largest imaginary part left by the inverse transform (FFT mode).
    pub imag_residual: f64,
}

impl BaseFunction {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> BaseMode {
        self.mode
    }

    /// Interval outside which `R_h` vanishes (or is below the negligibility threshold).
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Closed {
                kernel,
                order,
                scale,
                center,
            } => {
                let u = (t - center) / self.h;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    scale * kernel.eval_unchecked(*order, u)
                }
            }
            Repr::Table(table) => table.eval(t),
        }
    }
}

/// Closed form for `ψ̂(z) = C z^M e^{Sz}`:
/// `R_h(t) = C (-1)^M h^{-(M+1)} K^{(M)}((t - S)/h)`.
pub fn base_closed_form(model: &ErrorModel, kernel: &FlatKernel, h: f64) -> Result<BaseFunction> {
    check_h(h)?;
    let (c, power, shift) = model
        .smooth()
        .monomial_form()
        .ok_or_else(|| Error::NotClosedForm(model.tag().to_string()))?;
    if c.im.abs() > 1e-12 * c.norm() {
        return Err(Error::NotClosedForm(format!(
            "{}: complex leading constant {c}",
            model.tag()
        )));
    }
    let order = power as usize;
    if order > kernel.max_deriv() {
        return Err(Error::UnsupportedOrder {
            order,
            max: kernel.max_deriv(),
        });
    }
    // ψ̂(-iω) = C (-i)^M ω^M e^{-iωS}, and (iω)^M K̂(iωh) ↔ h^{-M-1} K^{(M)}(·/h)
    let sign = if power % 2 == 0 { 1.0 } else { -1.0 };
    let scale = c.re * sign * h.powi(-(power as i32) - 1);
    Ok(BaseFunction {
        h,
        mode: BaseMode::ClosedForm,
        support: (shift - h, shift + h),
        repr: Repr::Closed {
            kernel: kernel.clone(),
            order,
            scale,
            center: shift,
        },
        imag_residual: 0.0,
    })
}

/// Tuning of the discrete Fourier inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftOptions {
    /// Relative level below which `R_h` and the spectrum count as zero.
    pub threshold: f64,
    /// Initial grid density (points per bandwidth).
    pub points_per_h: usize,
    /// Finest grid density tried before giving up on spectral decay.
    pub max_points_per_h: usize,
    /// Largest FFT length tried when enlarging the window.
    pub max_len: usize,
}

impl Default for FftOptions {
    fn default() -> Self {
        FftOptions {
            threshold: 1e-12,
            points_per_h: 2048,
            max_points_per_h: 16384,
            max_len: 1 << 22,
        }
    }
}

pub fn base_fft(model: &ErrorModel, kernel: &FlatKernel, h: f64) -> Result<BaseFunction> {
    base_fft_with(model, kernel, h, FftOptions::default())
}

/// Upper bound on `|K̂(iu)|` from the L¹ norms of the kernel derivatives.
fn transform_bound(norms: &[f64], u: f64) -> f64 {
    norms
        .iter()
        .enumerate()
        .map(|(k, &n)| n / u.abs().powi(k as i32))
        .fold(f64::INFINITY, f64::min)
}

pub fn base_fft_with(model: &ErrorModel, kernel: &FlatKernel, h: f64, opts: FftOptions) -> Result<BaseFunction> {
    check_h(h)?;
    let peak = (0..=160)
        .map(|i| {
            let w = 0.25 * i as f64 / h;
            kernel.laplace(Complex64::new(0.0, w * h)).norm() * model.smooth().eval(-w).norm()
        })
        .fold(0.0f64, f64::max);
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "degenerate spectrum for {}",
            model.tag()
        )));
    }
    let norms = (0..=kernel.max_deriv())
        .map(|k| kernel.l1_norm(k))
        .collect::<Result<Vec<f64>>>()?;
    // grid step: refine until |K̂(iωh)ψ̂(-iω)| is provably negligible beyond Nyquist
    let mut pph = opts.points_per_h;
    loop {
        let nyquist = PI * pph as f64 / h;
        let tail = (0..=16)
            .map(|i| {
                let w = nyquist * (1.0 + i as f64 / 4.0);
                transform_bound(&norms, w * h) * model.smooth().eval(-w).norm()
            })
            .fold(0.0f64, f64::max);
        if tail <= opts.threshold * peak {
            break;
        }
        if pph >= opts.max_points_per_h {
            return Err(Error::NumericalFailure(format!(
                "|K̂(iωh)ψ̂(-iω)| may still be {:.2e} of its peak at ω = {nyquist:.3e}; \
                 the declared growth of ψ̂ may be wrong",
                tail / peak
            )));
        }
        pph *= 2;
    }
    let dt = h / pph as f64;
    // beyond this frequency the true spectrum is negligible and only roundoff remains
    let mut cutoff = 1.0 / h;
    while cutoff < PI / dt
        && (0..8).any(|i| {
            let w = cutoff * (1.0 + i as f64 / 8.0);
            transform_bound(&norms, w * h) * model.smooth().eval(-w).norm() > opts.threshold * peak
        })
    {
        cutoff *= 1.1;
    }

    let center = model.smooth().shift_hint();
    let mut lo = center.min(0.0) - 5.0 * h;
    let mut hi = center.max(0.0) + 5.0 * h;
    let mut planner = FftPlanner::<f64>::new();
    loop {
        let len = ((hi - lo) / dt).ceil() as usize;
        let n = len.next_power_of_two();
        if n > opts.max_len {
            return Err(Error::NumericalFailure(format!(
                "R_h does not decay inside a window of {} points",
                opts.max_len
            )));
        }
        let span = n as f64 * dt;
        let t0 = 0.5 * (lo + hi) - 0.5 * span;

        let mut spec: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(kernel.value((t0 + j as f64 * dt) / h) / h, 0.0))
            .collect();
        let sample_max = spec.iter().map(|v| v.re.abs()).fold(0.0f64, f64::max);
        planner.plan_fft_forward(n).process(&mut spec);
        // past this index the sampled transform is at its roundoff level
        let mass = spec[0].norm();
        let informative = (1..n / 2).rev().find(|&k| spec[k].norm() > 1e-14 * mass).unwrap_or(1);
        let sample_noise = f64::EPSILON * sample_max * (n as f64).sqrt();
        let mut vals = vec![Complex64::new(0.0, 0.0); n];
        let mut ders = vec![Complex64::new(0.0, 0.0); n];
        vals[0] = spec[0] * model.smooth().eval(0.0).re / n as f64;
        // roundoff of the inverse transform plus sample roundoff amplified by |ψ̂|
        let mut floor = vals[0].norm() * f64::EPSILON * (n as f64).log2();
        let mut amplified = sample_noise * model.smooth().eval(0.0).norm();
        for k in 1..n.div_ceil(2) {
            // enforce Hermitian symmetry so the inverse is real to roundoff
            let w = 2.0 * PI * k as f64 / span;
            if w > cutoff || k > informative {
                break;
            }
            let x = 0.5 * (spec[k] + spec[n - k].conj());
            let v = x * model.smooth().eval(-w) / n as f64;
            floor += 2.0 * v.norm() * f64::EPSILON * (n as f64).log2();
            amplified += 2.0 * sample_noise * model.smooth().eval(-w).norm();
            vals[k] = v;
            vals[n - k] = v.conj();
            ders[k] = v * Complex64::new(0.0, w);
            ders[n - k] = ders[k].conj();
        }
        let inverse = planner.plan_fft_inverse(n);
        inverse.process(&mut vals);
        inverse.process(&mut ders);

        let peak_t = vals.iter().map(|v| v.re.abs()).fold(0.0f64, f64::max);
        let imag = vals.iter().map(|v| v.im.abs()).fold(0.0f64, f64::max);
        let band = n / 8;
        let edge = vals[..band]
            .iter()
            .chain(&vals[n - band..])
            .map(|v| v.re.abs())
            .fold(0.0f64, f64::max);
        let floor = 4.0 * (floor + amplified / n as f64);
        let tol = (opts.threshold * peak_t).max(floor);
        if edge > tol {
            let width = hi - lo;
            lo -= width / 2.0;
            hi += width / 2.0;
            continue;
        }
        let cut = tol;
        let first = vals.iter().position(|v| v.re.abs() > cut).unwrap_or(0);
        let last = vals.iter().rposition(|v| v.re.abs() > cut).unwrap_or(n - 1);
        let (i0, i1) = (first.saturating_sub(1), (last + 1).min(n - 1));
        let table = HermiteTable::new(
            t0 + i0 as f64 * dt,
            dt,
            vals[i0..=i1].iter().map(|v| v.re).collect(),
            ders[i0..=i1].iter().map(|v| v.re).collect(),
        );
        return Ok(BaseFunction {
            h,
            mode: BaseMode::Fft,
            support: (table.start(), table.end()),
            repr: Repr::Table(table),
            imag_residual: imag,
        });
    }
}

/// Closed form when available, FFT inversion otherwise.
pub fn base_function(model: &ErrorModel, kernel: &FlatKernel, h: f64) -> Result<BaseFunction> {
    match base_closed_form(model, kernel, h) {
        Err(Error::NotClosedForm(_)) | Err(Error::UnsupportedOrder { .. }) => base_fft(model, kernel, h),
        other => other,
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("h", format!("bandwidth must be positive, got {h}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// Plus for `x₀ ≥ 0`, minus otherwise.
    pub fn for_point(x0: f64) -> Side {
        if x0 >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// `L^{(N)}_{±,h}` as a list of translates of one base function.
#[derive(Debug, Clone)]
pub struct DeconvolutionKernel {
    side: Side,
    seq: Arc<ZeroSetSequence>,
    base: Arc<BaseFunction>,
    /// Translate `k` is `coefs[k] · R_h(t - offsets[k])`; offsets ascend.
    offsets: Vec<f64>,
    coefs: Vec<f64>,
    /// Largest imaginary part of a coefficient (zero for real error laws).
    pub coef_imag: f64,
}

pub fn build_l(seq: Arc<ZeroSetSequence>, base: Arc<BaseFunction>, side: Side) -> DeconvolutionKernel {
    let mut pairs: Vec<(f64, Complex64)> = seq
        .entries
        .iter()
        .map(|e| match side {
            Side::Plus => (e.ell, e.c_plus),
            Side::Minus => (-(seq.shift + e.ell), e.c_minus),
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let coef_imag = pairs.iter().map(|p| p.1.im.abs()).fold(0.0, f64::max);
    DeconvolutionKernel {
        side,
        seq,
        base,
        offsets: pairs.iter().map(|p| p.0).collect(),
        coefs: pairs.iter().map(|p| p.1.re).collect(),
        coef_imag,
    }
}

impl DeconvolutionKernel {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn h(&self) -> f64 {
        self.base.h()
    }

    pub fn n_cap(&self) -> u32 {
        self.seq.n_cap
    }

    pub fn sequence(&self) -> &ZeroSetSequence {
        &self.seq
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    /// `(offset, coefficient)` for every translate, offsets ascending.
    pub fn translates(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.coefs.iter().copied())
    }

    /// Interval outside which the kernel vanishes.
    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.base.support();
        match (self.offsets.first(), self.offsets.last()) {
            (Some(&a), Some(&b)) => (lo + a, hi + b),
            _ => (0.0, 0.0),
        }
    }

    /// Indices of translates whose support contains `t`.
    fn active(&self, t: f64) -> std::ops::Range<usize> {
        let (lo, hi) = self.base.support();
        // offset ∈ [t - hi, t - lo]
        let start = self.offsets.partition_point(|&o| o < t - hi);
        let end = self.offsets.partition_point(|&o| o <= t - lo);
        start..end.max(start)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for k in self.active(t) {
            acc.add(self.coefs[k] * self.base.eval(t - self.offsets[k]));
        }
        acc.value()
    }
}

/// Result of the vertical-line inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntegral {
    pub value: f64,
    /// Quadrature error plus an estimate of the truncated tail.
    pub error: f64,
    /// Set when the integrand is not negligible at the truncation frequency.
    pub truncation_warning: bool,
}

/// Cut-off of the line integral in units of `ωh`.
const LINE_CUTOFF: f64 = 600.0;

/// `L_{s,h}(t) = (2π)^{-1} ∫ K̂((s+iω)h) / ĝ(-s-iω) · e^{(s+iω)t} dω`.
pub fn l_via_line_integral(model: &ErrorModel, kernel: &FlatKernel, h: f64, s: f64, t: f64) -> Result<LineIntegral> {
    check_h(h)?;
    let (kmin, kmax) = model.zero_free_strip();
    if s == 0.0 || !(s > kmin && s < kmax) || !s.is_finite() {
        return Err(Error::invalid(
            "s",
            format!("must be nonzero inside the zero-free strip ({kmin}, {kmax}), got {s}"),
        ));
    }
    let integrand = |w: f64| -> Complex64 {
        let z = Complex64::new(s, w);
        kernel.laplace(z * h) / model.g_hat_z(-z) * (z * t).exp()
    };
    let cutoff = LINE_CUTOFF / h;
    // panels short against the e^{iωt} oscillation and the distance to the poles of 1/ĝ(-z)
    let pole_gap = model
        .zeros()
        .iter()
        .map(|z| (s + z.lambda.norm().ln() / z.a).abs())
        .chain([s - kmin, kmax - s])
        .fold(f64::INFINITY, f64::min);
    let width = (8.0 / t.abs().max(h)).min(2.0 * pole_gap).min(cutoff / 50.0);
    let (fine, coarse) = (legendre(24), legendre(16));
    let (mut value, mut quad_err) = (CompensatedSum::new(), 0.0);
    let (mut peak, mut tail) = (0.0f64, f64::INFINITY);
    let mut a = 0.0;
    while a < cutoff {
        let b = (a + width).min(cutoff);
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        let mut level = 0.0f64;
        // conjugate symmetry of the integrand: ∫_ℝ = 2 Re ∫_0^∞
        let mut v = 0.0;
        for (&x, &w) in fine.nodes.iter().zip(&fine.weights) {
            let f = integrand(mid + half * x);
            level = level.max(f.norm());
            v += w * f.re;
        }
        let v = v * half;
        quad_err += (v - coarse.integrate(a, b, |w| integrand(w).re)).abs();
        value.add(v);
        peak = peak.max(level);
        a = b;
        // the integrand decays faster than any power once K̂ has taken over
        if level < 1e-15 * peak && a * h > 50.0 {
            tail = level * width;
            break;
        }
    }
    if tail.is_infinite() {
        tail = (0..16)
            .map(|i| integrand(cutoff * (1.0 + i as f64 / 16.0)).norm())
            .fold(0.0f64, f64::max)
            * cutoff;
    }
    let value = value.value() / PI;
    let error = (quad_err + tail) / PI;
    Ok(LineIntegral {
        value,
        error,
        truncation_warning: tail / PI > 1e-6 * value.abs().max(1e-10),
    })
}

/// `(1/h)∫K((x - x₀)/h) f(x) dx`.
pub fn smoothed_density(kernel: &FlatKernel, h: f64, f: &dyn Fn(f64) -> f64, x0: f64) -> f64 {
    adaptive(-1.0, 1.0, 1e-14, 1e-13, |y| kernel.value(y) * f(x0 + y * h)).value
}

/// Coefficients `t_r` of `(1 - x)^m Σ_{j≤N} C_{j,m} x^j = 1 + Σ_{r=N+1}^{N+m} t_r x^r`.
pub fn truncation_remainder(m: u32, n_cap: u32) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(m as usize);
    for r in (n_cap + 1)..=(n_cap + m) {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=m {
            if i > 0 {
                binom = binom * (m - i + 1) as f64 / i as f64;
            }
            if i <= r && r - i <= n_cap {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * weak_composition_count((r - i) as u64, m)? as f64;
            }
        }
        out.push((r, acc));
    }
    Ok(out)
}

/// The truncation term `T_N(f; x₀)` of the bias identity
/// `E f̃(x₀) = (1/h)∫K((x-x₀)/h) f(x) dx + T_N(f; x₀)`.
pub fn truncation_term(
    model: &ErrorModel,
    kernel: &FlatKernel,
    h: f64,
    n_cap: u32,
    side: Side,
    f: &dyn Fn(f64) -> f64,
    x0: f64,
) -> Result<f64> {
    let zeros = model.zeros();
    let mut per_factor: Vec<Vec<(f64, Complex64)>> = Vec::with_capacity(zeros.len());
    for z in zeros {
        let mut options = vec![(0.0, Complex64::new(1.0, 0.0))];
        for (r, t) in truncation_remainder(z.m, n_cap)? {
            let lam = match side {
                Side::Plus => z.lambda.inv(),
                Side::Minus => z.lambda,
            };
            let disp = match side {
                Side::Plus => r as f64 * z.a,
                Side::Minus => -(r as f64) * z.a,
            };
            options.push((disp, lam.powu(r) * t));
        }
        per_factor.push(options);
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; per_factor.len()];
    loop {
        if idx.iter().any(|&i| i > 0) {
            let (disp, coef) = idx
                .iter()
                .zip(&per_factor)
                .fold((0.0, Complex64::new(1.0, 0.0)), |(d, c), (&i, opts)| {
                    (d + opts[i].0, c * opts[i].1)
                });
            total += coef * smoothed_density(kernel, h, f, x0 + disp);
        }
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < per_factor[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    Ok(total.re)
}

/// Density of `Y = X + ε` at `y`, by quadrature against the error law.
pub fn observation_density(model: &ErrorModel, f: &dyn Fn(f64) -> f64, y: f64) -> Result<f64> {
    match model.law() {
        Some(ErrorLaw::Atoms(atoms)) => Ok(atoms.iter().map(|&(x, p)| p * f(y - x)).sum()),
        Some(ErrorLaw::Density { support }) => {
            let g = |u: f64| model.error_density(u).unwrap_or(0.0) * f(y - u);
            // kinks of uniform-sum densities sit on a lattice; split there
            let breaks = density_breaks(model, support);
            Ok(adaptive_with_breaks(&breaks, 1e-13, 1e-12, g).value)
        }
        None => Err(Error::NotClosedForm(format!("{}: no error law available", model.tag()))),
    }
}

fn density_breaks(model: &ErrorModel, support: (f64, f64)) -> Vec<f64> {
    let mut b = vec![support.0, support.1];
    if let crate::error_model::Family::UniformConvolution { thetas, .. } = model.family() {
        let step = thetas.iter().copied().fold(f64::INFINITY, f64::min);
        let mut x = support.0 + step;
        while x < support.1 - 1e-12 {
            b.push(x);
            x += step;
        }
    }
    if let crate::error_model::Family::UniformGamma { theta, .. } = model.family() {
        b.push(-theta);
        b.push(*theta);
        b.push(theta + 1.0);
        b.push(theta + 10.0);
    }
    b.retain(|x| *x >= support.0 && *x <= support.1);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫ L(y - x₀) f_Y(y) dy`, translate by translate.
pub fn expected_kernel_value(l: &DeconvolutionKernel, fy: &dyn Fn(f64) -> f64, x0: f64) -> f64 {
    let (lo, hi) = l.base().support();
    let mut acc = CompensatedSum::new();
    for (off, c) in l.translates() {
        let a = x0 + off + lo;
        let b = x0 + off + hi;
        let r = adaptive(a, b, 1e-14, 1e-13, |y| l.base().eval(y - x0 - off) * fy(y));
        acc.add(c * r.value);
    }
    acc.value()
}
