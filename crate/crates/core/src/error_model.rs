//! Measurement-error laws in factorized form.
//!
//! The Laplace transform `ĝ(z) = E e^{-zε}` is written as
//!
//! ```text
//! ĝ(z) = ∏_k (1 - e^{a_k z}/λ_k)^{m_k} / ψ̂(z)
//! ψ̂(z) = ψ̂₀(z) · ∏_{λ_k = 1} (-a_k z)^{m_k} · ∏_{λ_k ≠ 1} (1 - 1/λ_k)^{m_k}
//! ```
//!
//! with `ψ̂₀(0) = 1` and `ψ̂₀` zero-free on a vertical strip around the
//! imaginary axis. The first product carries every zero of the
//! characteristic function on the real line; `ψ̂` grows like `|ω|^γ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use crate::numerics::roots::roots_with_multiplicity;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default highest derivative order of `ψ̂` served by [`ErrorModel::psi_derivative`].
pub const DEFAULT_MAX_PSI_ORDER: usize = 6;

/// One factor `(1 - e^{a z}/λ)^m` of the zero-carrying product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDatum {
    pub a: f64,
    pub lambda: Complex64,
    pub m: u32,
}

impl ZeroDatum {
    pub fn new(a: f64, lambda: Complex64, m: u32) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(
                "a",
                format!("translation period must be positive, got {a}"),
            ));
        }
        if (lambda.norm() - 1.0).abs() >= 1e-12 {
            return Err(Error::invalid(
                "lambda",
                format!("must have unit modulus, |lambda| = {}", lambda.norm()),
            ));
        }
        if m == 0 {
            return Err(Error::invalid("m", "multiplicity must be at least 1"));
        }
        Ok(ZeroDatum { a, lambda, m })
    }

    pub fn is_unit_root(&self) -> bool {
        self.lambda == ONE
    }

    /// Real frequencies `(arg λ + 2πj)/a` in `[lo, hi]`, excluding zero.
    pub fn zeros_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let arg = self.lambda.arg();
        let j_lo = ((lo * self.a - arg) / (2.0 * PI)).ceil() as i64;
        let j_hi = ((hi * self.a - arg) / (2.0 * PI)).floor() as i64;
        (j_lo..=j_hi)
            .map(|j| (arg + 2.0 * PI * j as f64) / self.a)
            .filter(|&w| w != 0.0 && w.abs() > 1e-15)
            .collect()
    }
}

/// Analytic building blocks of `ψ̂₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiFactor {
    /// `e^{rate·z}`
    Exp { rate: f64 },
    /// `(z + shift)^power`, principal branch
    ShiftedPower { shift: f64, power: f64 },
    /// constant multiplier
    Scale(Complex64),
    /// `(1 - e^{step·z}/λ)^{-1}`
    InverseExpBinomial { step: f64, lambda: Complex64 },
}

impl PsiFactor {
    fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            PsiFactor::Exp { rate } => (z * rate).exp(),
            PsiFactor::ShiftedPower { shift, power } => (z + shift).powf(power),
            PsiFactor::Scale(c) => c,
            PsiFactor::InverseExpBinomial { step, lambda } => (ONE - (z * step).exp() / lambda).inv(),
        }
    }

    fn jet(&self, z0: Complex64, order: usize) -> Jet<Complex64> {
        let z = Jet::variable(z0, order);
        match *self {
            PsiFactor::Exp { rate } => z.scale(Complex64::from(rate)).exp(),
            PsiFactor::ShiftedPower { shift, power } => z.add_const(Complex64::from(shift)).powf(power),
            PsiFactor::Scale(c) => Jet::constant(c, order),
            PsiFactor::InverseExpBinomial { step, lambda } => z
                .scale(Complex64::from(step))
                .exp()
                .scale(-lambda.inv())
                .add_const(ONE)
                .recip(),
        }
    }
}

/// The zero-free part `ψ̂₀`.
#[derive(Clone)]
pub enum Psi0 {
    Factors(Vec<PsiFactor>),
    /// User-supplied analytic function of `z`; derivatives are numerical.
    Custom(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for Psi0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psi0::Factors(v) => f.debug_tuple("Factors").field(v).finish(),
            Psi0::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Psi0 {
    fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Psi0::Factors(v) => v.iter().fold(ONE, |acc, f| acc * f.eval(z)),
            Psi0::Custom(f) => f(z),
        }
    }
}

/// `ψ̂` together with the constants of its polynomial growth bound
/// `d1·|ω|^γ ≤ |ψ̂(iω)| ≤ d2·|ω|^γ` for `|ω| ≥ ω₀`.
#[derive(Debug, Clone)]
pub struct SmoothPart {
    psi0: Psi0,
    /// `(a_k, m_k)` of the factors with `λ_k = 1`
    linear: Vec<(f64, u32)>,
    /// `∏_{λ_k ≠ 1} (1 - 1/λ_k)^{m_k}`
    constant: Complex64,
    pub gamma: f64,
    pub omega0: f64,
    pub d1: f64,
    pub d2: f64,
    pub max_order: usize,
}

impl SmoothPart {
    /// `ψ̂(z)` at a complex argument.
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        let lin = self.linear.iter().fold(ONE, |acc, &(a, m)| acc * (z * -a).powu(m));
        self.psi0.eval(z) * lin * self.constant
    }

    /// `ψ̂(iω)`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.eval_z(I * omega)
    }

    pub fn psi0_z(&self, z: Complex64) -> Complex64 {
        self.psi0.eval(z)
    }

    /// `ψ̂^{(order)}(iω)`, derivative taken in the complex variable `z`.
    pub fn deriv(&self, order: usize, omega: f64) -> Result<Complex64> {
        if order > self.max_order {
            return Err(Error::UnsupportedOrder {
                order,
                max: self.max_order,
            });
        }
        let z0 = I * omega;
        match &self.psi0 {
            Psi0::Factors(factors) => {
                let mut jet = Jet::constant(self.constant, order);
                for &(a, m) in &self.linear {
                    jet = jet.mul(&Jet::variable(z0, order).scale(Complex64::from(-a)).powi(m));
                }
                for f in factors {
                    jet = jet.mul(&f.jet(z0, order));
                }
                Ok(jet.derivative(order))
            }
            Psi0::Custom(_) => Ok(self.numerical_deriv(order, omega)),
        }
    }

    /// `(C, M, S)` when `ψ̂(z) = C·z^M·e^{Sz}`, which gives `R_h` in closed form.
    pub fn monomial_form(&self) -> Option<(Complex64, u32, f64)> {
        let Psi0::Factors(factors) = &self.psi0 else {
            return None;
        };
        let mut c = self.constant;
        let mut shift = 0.0;
        for f in factors {
            match *f {
                PsiFactor::Exp { rate } => shift += rate,
                PsiFactor::Scale(k) => c *= k,
                _ => return None,
            }
        }
        let mut power = 0;
        for &(a, m) in &self.linear {
            c *= (-a).powi(m as i32);
            power += m;
        }
        Some((c, power, shift))
    }

    /// Total rate of the exponential factors of `ψ̂₀`; `R_h` is centred there.
    pub fn shift_hint(&self) -> f64 {
        match &self.psi0 {
            Psi0::Factors(v) => v
                .iter()
                .map(|f| match *f {
                    PsiFactor::Exp { rate } => rate,
                    _ => 0.0,
                })
                .sum(),
            Psi0::Custom(_) => 0.0,
        }
    }

    fn numerical_deriv(&self, order: usize, omega: f64) -> Complex64 {
        let z0 = I * omega;
        match order {
            0 => self.eval_z(z0),
            1 => {
                // central difference along the imaginary axis: d/dz = -i d/dω
                let h = 1e-5 * (1.0 + omega.abs());
                (self.eval(omega + h) - self.eval(omega - h)) / (2.0 * h) * -I
            }
            _ => {
                // Cauchy integral on a small circle, trapezoid rule
                let r = 0.05;
                let n = 64;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                    acc += self.eval_z(z0 + phase * r) * phase.powi(-(order as i32));
                }
                let fact: f64 = (1..=order).map(|v| v as f64).product();
                acc * fact / (n as f64 * r.powi(order as i32))
            }
        }
    }
}

/// Named distribution behind a model; drives closed forms and sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Sum of independent `U(-θ_k, θ_k)`, each repeated `m_k` times.
    UniformConvolution {
        thetas: Vec<f64>,
        mults: Vec<u32>,
    },
    /// Atoms at `step·(offset + k)` with probabilities `probs[k]`.
    Discrete {
        step: f64,
        offset: i64,
        probs: Vec<f64>,
    },
    /// `U(-θ, θ)` plus an independent `Gamma(shape, rate)`.
    UniformGamma {
        theta: f64,
        shape: f64,
        rate: f64,
    },
    Custom,
}

/// Distribution of a single error draw, for quadrature oracles.
#[derive(Debug, Clone)]
pub enum ErrorLaw {
    Atoms(Vec<(f64, f64)>),
    Density { support: (f64, f64) },
}

/// Tolerances used when factorizing discrete laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteOptions {
    /// `||λ| - 1|` at or below this counts as a zero on the real line.
    pub unit_circle_tol: f64,
    /// Raw roots closer than this are grouped into one multiple root.
    pub cluster_tol: f64,
}

impl Default for DiscreteOptions {
    fn default() -> Self {
        DiscreteOptions {
            unit_circle_tol: 1e-8,
            cluster_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorModel {
    zeros: Vec<ZeroDatum>,
    smooth: SmoothPart,
    /// Convergence strip `(σ⁻, σ⁺)` of `ψ̂`; infinite bounds mean entire.
    strip: (f64, f64),
    tag: String,
    family: Family,
}

fn phi1(x: Complex64) -> Complex64 {
    // (e^x - 1)/x with its removable singularity
    if x.norm() < 1e-6 {
        ONE + x / 2.0 + x * x / 6.0
    } else {
        (x.exp() - 1.0) / x
    }
}

impl ErrorModel {
    /// General constructor: zero data plus a user-supplied `ψ̂₀`.
    pub fn custom(
        zeros: Vec<ZeroDatum>,
        psi0: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
        growth: (f64, f64, f64, f64),
        strip: (f64, f64),
        tag: impl Into<String>,
    ) -> Result<Self> {
        let (gamma, omega0, d1, d2) = growth;
        Self::assemble(
            zeros,
            Psi0::Custom(psi0),
            (gamma, omega0, d1, d2),
            strip,
            tag.into(),
            Family::Custom,
        )
    }

    fn assemble(
        zeros: Vec<ZeroDatum>,
        psi0: Psi0,
        growth: (f64, f64, f64, f64),
        strip: (f64, f64),
        tag: String,
        family: Family,
    ) -> Result<Self> {
        for (i, z) in zeros.iter().enumerate() {
            ZeroDatum::new(z.a, z.lambda, z.m).map_err(|e| e.with_field_prefix(&format!("zeros[{i}]")))?;
            for w in &zeros[..i] {
                if w.a == z.a && (w.lambda - z.lambda).norm() < 1e-12 {
                    return Err(Error::invalid("zeros", "pairs (a, lambda) must be distinct"));
                }
            }
        }
        let (gamma, omega0, d1, d2) = growth;
        if !(gamma >= 0.0 && omega0 > 0.0 && d1 > 0.0 && d2 >= d1) {
            return Err(Error::invalid(
                "smooth",
                "growth constants must satisfy gamma >= 0, omega0 > 0, 0 < d1 <= d2",
            ));
        }
        if !(strip.0 < 0.0 && strip.1 > 0.0) {
            return Err(Error::invalid("strip", "strip must contain the imaginary axis"));
        }
        let linear = zeros.iter().filter(|z| z.is_unit_root()).map(|z| (z.a, z.m)).collect();
        let constant = zeros
            .iter()
            .filter(|z| !z.is_unit_root())
            .fold(ONE, |acc, z| acc * (ONE - z.lambda.inv()).powu(z.m));
        Ok(ErrorModel {
            zeros,
            smooth: SmoothPart {
                psi0,
                linear,
                constant,
                gamma,
                omega0,
                d1,
                d2,
                max_order: DEFAULT_MAX_PSI_ORDER,
            },
            strip,
            tag,
            family,
        })
    }

    /// `U(-θ, θ)`: `ĝ(z) = sinh(θz)/(θz)`, one simple zero factor with `a = 2θ`.
    pub fn uniform(theta: f64) -> Result<Self> {
        let mut m = Self::uniform_convolution(&[theta], &[1]).map_err(|e| match e {
            Error::InvalidParameter { reason, .. } => Error::invalid("theta", reason),
            other => other,
        })?;
        m.tag = format!("uniform(theta={theta})");
        Ok(m)
    }

    /// Convolution of `U(-θ_k, θ_k)` with multiplicities `m_k` (distinct θ).
    pub fn uniform_convolution(thetas: &[f64], mults: &[u32]) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != mults.len() {
            return Err(Error::invalid(
                "thetas",
                "thetas and mults must be nonempty and of equal length",
            ));
        }
        for (k, &t) in thetas.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(
                    format!("thetas[{k}]"),
                    format!("must be positive, got {t}"),
                ));
            }
            if thetas[..k].contains(&t) {
                return Err(Error::invalid(
                    "thetas",
                    format!("duplicate theta {t}; merge it into mults"),
                ));
            }
        }
        if let Some(k) = mults.iter().position(|&m| m == 0) {
            return Err(Error::invalid(format!("mults[{k}]"), "must be at least 1"));
        }
        let zeros = thetas
            .iter()
            .zip(mults)
            .map(|(&t, &m)| ZeroDatum::new(2.0 * t, ONE, m))
            .collect::<Result<Vec<_>>>()?;
        let shift: f64 = thetas.iter().zip(mults).map(|(&t, &m)| t * m as f64).sum();
        let gamma: f64 = mults.iter().map(|&m| m as f64).sum();
        let d: f64 = thetas
            .iter()
            .zip(mults)
            .map(|(&t, &m)| (2.0 * t).powi(m as i32))
            .product();
        let tag = if thetas.len() == 1 && mults[0] == 1 {
            format!("uniform(theta={})", thetas[0])
        } else {
            format!("uniform_convolution(thetas={thetas:?}, mults={mults:?})")
        };
        Self::assemble(
            zeros,
            Psi0::Factors(vec![PsiFactor::Exp { rate: shift }]),
            (gamma, 1.0, d, d),
            (f64::NEG_INFINITY, f64::INFINITY),
            tag,
            Family::UniformConvolution {
                thetas: thetas.to_vec(),
                mults: mults.to_vec(),
            },
        )
    }

    /// Lattice law with atoms `step·(offset + k)` and probabilities `probs[k]`.
    ///
    /// Zeros of the characteristic function come from the unit-modulus roots
    /// of `Q(x) = Σ_i (p_{K-i}/p_K) x^i`; the remaining roots fold into `ψ̂`.
    pub fn discrete(step: f64, probs: &[f64], offset: i64, opts: DiscreteOptions) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("step", format!("must be positive, got {step}")));
        }
        if probs.is_empty() {
            return Err(Error::invalid("probs", "must be nonempty"));
        }
        if let Some(k) = probs.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid(
                format!("probs[{k}]"),
                "probabilities must be nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("probs", format!("must sum to 1, got {total}")));
        }
        let top = *probs.last().expect("nonempty");
        if top == 0.0 {
            return Err(Error::invalid(
                "probs",
                "probability of the largest atom must be nonzero",
            ));
        }
        let lead_zeros = probs.iter().take_while(|&&p| p == 0.0).count();
        let probs = probs[lead_zeros..].to_vec();
        let offset = offset + lead_zeros as i64;
        let deg = probs.len() - 1;

        // Q(x) = Σ_i (p_{deg-i}/p_top) x^i, Q(0) = 1
        let q: Vec<f64> = (0..=deg).map(|i| probs[deg - i] / top).collect();
        let roots = roots_with_multiplicity(&q, opts.cluster_tol)?;

        let mut zeros = Vec::new();
        let mut factors = vec![
            PsiFactor::Exp {
                rate: step * (offset + deg as i64) as f64,
            },
            PsiFactor::Scale(Complex64::from(1.0 / top)),
        ];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut on_circle_const = ONE;
        let (mut inner_max, mut outer_min) = (0.0f64, f64::INFINITY);
        let mut d1_prod = 1.0;
        let mut d2_prod = 1.0;
        for r in roots {
            let mut lam = r.value;
            if lam.im.abs() < 1e-12 {
                lam.im = 0.0;
            }
            if (lam.norm() - 1.0).abs() <= opts.unit_circle_tol {
                lam /= lam.norm();
                if lam.im.abs() < 1e-12 {
                    lam = Complex64::new(lam.re.signum(), 0.0);
                }
                let m = r.multiplicity as u32;
                zeros.push(ZeroDatum::new(step, lam, m)?);
                on_circle_const *= (ONE - lam.inv()).powu(m);
            } else {
                let modulus = lam.norm();
                let bound = modulus.ln() / step;
                if modulus < 1.0 {
                    lo = lo.max(bound);
                    inner_max = inner_max.max(modulus);
                } else {
                    hi = hi.min(bound);
                    outer_min = outer_min.min(modulus);
                }
                for _ in 0..r.multiplicity {
                    factors.push(PsiFactor::InverseExpBinomial { step, lambda: lam });
                    d1_prod *= 1.0 + 1.0 / modulus;
                    d2_prod *= (1.0 - 1.0 / modulus).abs();
                }
            }
        }
        let _ = (inner_max, outer_min);
        // ψ̂₀ = ψ̂ / ∏_{on circle}(1 - 1/λ)^m
        factors.push(PsiFactor::Scale(on_circle_const.inv()));
        let d1 = 1.0 / (top * d1_prod);
        let d2 = 1.0 / (top * d2_prod);
        let tag = format!("discrete(step={step}, offset={offset}, probs={probs:?})");
        Self::assemble(
            zeros,
            Psi0::Factors(factors),
            (0.0, 1.0, d1, d2),
            (lo, hi),
            tag,
            Family::Discrete { step, offset, probs },
        )
    }

    /// Binomial law with `ĝ(z) = 2^{-m}(1 + e^z)^m`, i.e. atoms on `{-m, …, 0}`,
    /// with its exact zero structure `(a, λ, m) = (1, -1, m)` and `ψ̂ = 2^m`.
    pub fn binomial(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "number of trials must be at least 1"));
        }
        let mut probs = vec![0.0; m as usize + 1];
        let scale = 0.5f64.powi(m as i32);
        let mut c = 1.0;
        for (k, p) in probs.iter_mut().enumerate() {
            *p = c * scale;
            c = c * (m as f64 - k as f64) / (k as f64 + 1.0);
        }
        let zeros = vec![ZeroDatum::new(1.0, -ONE, m)?];
        // ψ̂ = 2^m = (1 - 1/λ)^m, so ψ̂₀ = 1
        let d = 2f64.powi(m as i32);
        Self::assemble(
            zeros,
            Psi0::Factors(Vec::new()),
            (0.0, 1.0, d, d),
            (f64::NEG_INFINITY, f64::INFINITY),
            format!("binomial(m={m})"),
            Family::Discrete {
                step: 1.0,
                offset: -(m as i64),
                probs,
            },
        )
    }

    /// `U(-θ, θ) ⊛ Gamma(shape, rate)`.
    pub fn uniform_gamma(theta: f64, shape: f64, rate: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("gamma", shape), ("lambda", rate)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        let zeros = vec![ZeroDatum::new(2.0 * theta, ONE, 1)?];
        // ψ̂(z) = -2θ λ^{-γ} z e^{θz} (z+λ)^γ; the -2θz factor comes from the zero datum.
        let factors = vec![
            PsiFactor::Exp { rate: theta },
            PsiFactor::ShiftedPower {
                shift: rate,
                power: shape,
            },
            PsiFactor::Scale(Complex64::from(rate.powf(-shape))),
        ];
        let d1 = 2.0 * theta * rate.powf(-shape);
        let d2 = d1 * (1.0 + rate * rate).powf(shape / 2.0);
        Self::assemble(
            zeros,
            Psi0::Factors(factors),
            (1.0 + shape, 1.0, d1, d2),
            (-rate, f64::INFINITY),
            format!("uniform_gamma(theta={theta}, gamma={shape}, lambda={rate})"),
            Family::UniformGamma { theta, shape, rate },
        )
    }

    pub fn zeros(&self) -> &[ZeroDatum] {
        &self.zeros
    }

    pub fn smooth(&self) -> &SmoothPart {
        &self.smooth
    }

    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn gamma(&self) -> f64 {
        self.smooth.gamma
    }

    pub fn with_max_psi_order(mut self, max_order: usize) -> Self {
        self.smooth.max_order = max_order;
        self
    }

    /// `a^T m = Σ a_k m_k`, the translation of the minus-side series.
    pub fn shift(&self) -> f64 {
        self.zeros.iter().map(|z| z.a * z.m as f64).sum()
    }

    pub fn min_period(&self) -> f64 {
        self.zeros.iter().map(|z| z.a).fold(f64::INFINITY, f64::min)
    }

    /// Zero-free strips `(κ⁻, 0) ∪ (0, κ⁺)` of `ĝ(-z)`.
    pub fn zero_free_strip(&self) -> (f64, f64) {
        (-self.strip.1, -self.strip.0)
    }

    /// `ĝ(z)` at a complex argument inside the strip.
    pub fn g_hat_z(&self, z: Complex64) -> Complex64 {
        let mut num = ONE;
        for zd in &self.zeros {
            let f = if zd.is_unit_root() {
                phi1(z * zd.a)
            } else {
                (ONE - (z * zd.a).exp() / zd.lambda) / (ONE - zd.lambda.inv())
            };
            num *= f.powu(zd.m);
        }
        num / self.smooth.psi0_z(z)
    }

    /// Characteristic function `ĝ(iω) = E e^{-iωε}`.
    pub fn g_hat(&self, omega: f64) -> Complex64 {
        self.g_hat_z(I * omega)
    }

    /// `ψ̂^{(order)}(iω)`.
    pub fn psi_derivative(&self, order: usize, omega: f64) -> Result<Complex64> {
        self.smooth.deriv(order, omega)
    }

    /// Zeros of `ĝ(iω)` in `[lo, hi]`, sorted.
    pub fn zeros_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.zeros.iter().flat_map(|z| z.zeros_in(lo, hi)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v
    }

    /// Distribution of one error draw, if the family is known.
    pub fn law(&self) -> Option<ErrorLaw> {
        match &self.family {
            Family::Discrete { step, offset, probs } => Some(ErrorLaw::Atoms(
                probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(k, &p)| (step * (offset + k as i64) as f64, p))
                    .collect(),
            )),
            Family::UniformConvolution { thetas, mults } => {
                let half: f64 = thetas.iter().zip(mults).map(|(&t, &m)| t * m as f64).sum();
                Some(ErrorLaw::Density { support: (-half, half) })
            }
            Family::UniformGamma { theta, shape, rate } => {
                let g = Gamma::new(*shape, *rate).ok()?;
                Some(ErrorLaw::Density {
                    support: (-theta, theta + g.inverse_cdf(1.0 - 1e-15)),
                })
            }
            Family::Custom => None,
        }
    }

    /// Density of a continuous error law at `u`.
    pub fn error_density(&self, u: f64) -> Option<f64> {
        match &self.family {
            Family::UniformConvolution { thetas, mults } => {
                let widths: Vec<f64> = thetas
                    .iter()
                    .zip(mults)
                    .flat_map(|(&t, &m)| std::iter::repeat_n(2.0 * t, m as usize))
                    .collect();
                let half: f64 = widths.iter().sum::<f64>() / 2.0;
                Some(uniform_sum_density(&widths, u + half))
            }
            Family::UniformGamma { theta, shape, rate } => {
                let g = Gamma::new(*shape, *rate).ok()?;
                let cdf = |x: f64| if x <= 0.0 { 0.0 } else { g.cdf(x) };
                Some((cdf(u + theta) - cdf(u - theta)) / (2.0 * theta))
            }
            _ => None,
        }
    }

    /// Largest violation ratio of the growth sandwich on a grid of `|ω| ≥ ω₀`;
    /// returns `(min |ψ̂|/(d1|ω|^γ), max |ψ̂|/(d2|ω|^γ))`.
    pub fn growth_sandwich(&self, omegas: &[f64]) -> (f64, f64) {
        let s = &self.smooth;
        omegas
            .iter()
            .filter(|w| w.abs() >= s.omega0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| {
                let base = w.abs().powf(s.gamma);
                let v = s.eval(w).norm();
                (lo.min(v / (s.d1 * base)), hi.max(v / (s.d2 * base)))
            })
    }

    /// Empirical constants `sup_ω |ψ̂^{(j)}(iω)| / (1 + |ω|^γ)` for `j = 1..=max_order`.
    pub fn derivative_constants(&self, omegas: &[f64]) -> Result<Vec<f64>> {
        let s = &self.smooth;
        (1..=s.max_order)
            .map(|j| {
                omegas.iter().try_fold(0.0f64, |acc, &w| {
                    let d = s.deriv(j, w)?.norm() / (1.0 + w.abs().powf(s.gamma));
                    Ok(acc.max(d))
                })
            })
            .collect()
    }
}

/// Density at `x` of a sum of independent `U(0, w_i)` variables.
fn uniform_sum_density(widths: &[f64], x: f64) -> f64 {
    let n = widths.len();
    let total: f64 = widths.iter().sum();
    if x <= 0.0 || x >= total {
        return 0.0;
    }
    if n == 1 {
        return 1.0 / widths[0];
    }
    let mut acc = 0.0;
    for mask in 0u32..(1 << n) {
        let shift: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| widths[i]).sum();
        let y = x - shift;
        if y > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * y.powi(n as i32 - 1);
        }
    }
    let fact: f64 = (1..n).map(|v| v as f64).product();
    let prod: f64 = widths.iter().product();
    (acc / (fact * prod)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sinc(x: f64) -> f64 {
        if x == 0.0 {
            1.0
        } else {
            x.sin() / x
        }
    }

    fn grid() -> Vec<f64> {
        (0..=2000).map(|k| -50.0 + 0.05 * k as f64 + 0.0123).collect()
    }

    #[test]
    fn uniform_basic_values() {
        let m = ErrorModel::uniform(1.0).unwrap();
        assert_abs_diff_eq!(m.g_hat(0.0).re, 1.0, epsilon = 1e-15);
        assert!(m.g_hat(PI).norm() < 1e-15);
        assert_abs_diff_eq!(m.g_hat(PI / 2.0).re, 2.0 / PI, epsilon = 1e-15);
        assert_eq!(
            m.zeros(),
            &[ZeroDatum {
                a: 2.0,
                lambda: ONE,
                m: 1
            }]
        );
        assert_eq!(m.gamma(), 1.0);
        for w in [1.0, 3.0, -7.5, 40.0] {
            assert_abs_diff_eq!(m.smooth().eval(w).norm(), 2.0 * w.abs(), epsilon = 1e-12);
        }
        assert!(ErrorModel::uniform(0.0).is_err());
        assert!(ErrorModel::uniform(-1.0).is_err());
    }

    #[test]
    fn reconstruction_matches_direct_characteristic_functions() {
        let u = ErrorModel::uniform_convolution(&[1.0, 2.0], &[1, 1]).unwrap();
        let u3 = ErrorModel::uniform_convolution(&[0.7], &[3]).unwrap();
        let b = ErrorModel::binomial(3).unwrap();
        let probs = [0.2, 0.5, 0.3];
        let d = ErrorModel::discrete(1.0, &probs, 0, DiscreteOptions::default()).unwrap();
        let ug = ErrorModel::uniform_gamma(1.0, 1.5, 2.0).unwrap();
        for w in grid() {
            let direct = Complex64::from(sinc(w) * sinc(2.0 * w));
            assert!((u.g_hat(w) - direct).norm() < 1e-9);
            assert!((u3.g_hat(w) - sinc(0.7 * w).powi(3)).norm() < 1e-9);
            // ĝ(iω) = ((1 + e^{iω})/2)^3
            let bin = (ONE + (I * w).exp()).powu(3) / 8.0;
            assert!((b.g_hat(w) - bin).norm() < 1e-9);
            let disc: Complex64 = probs
                .iter()
                .enumerate()
                .map(|(k, &p)| (-I * w * k as f64).exp() * p)
                .sum();
            assert!((d.g_hat(w) - disc).norm() < 1e-9, "w={w}");
            let gam = (ONE + I * w / 2.0).powf(-1.5) * sinc(w);
            assert!((ug.g_hat(w) - gam).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_placement_and_conjugate_symmetry() {
        let models = vec![
            ErrorModel::uniform(1.0).unwrap(),
            ErrorModel::uniform_convolution(&[1.0, 2.0], &[1, 2]).unwrap(),
            ErrorModel::binomial(2).unwrap(),
            ErrorModel::discrete(1.0, &[0.2, 0.5, 0.3], 0, DiscreteOptions::default()).unwrap(),
            ErrorModel::uniform_gamma(1.0, 1.0, 1.0).unwrap(),
        ];
        for m in &models {
            let zs = m.zeros_in(-50.0, 50.0);
            assert!(!zs.is_empty());
            for &z in &zs {
                assert!(
                    m.g_hat(z).norm() < 1e-8,
                    "{}: |g({z})| = {}",
                    m.tag(),
                    m.g_hat(z).norm()
                );
            }
            for w in grid() {
                if zs.iter().all(|&z| (z - w).abs() >= 0.1) {
                    // beyond γ = 1 the polynomial decay itself pushes |ĝ| under 1e-4
                    let floor = if m.gamma() <= 1.0 {
                        1e-4
                    } else {
                        1e-4 * (1.0 + w.abs()).powf(-m.gamma())
                    };
                    assert!(m.g_hat(w).norm() > floor, "{} at {w}", m.tag());
                }
                assert!((m.g_hat(-w) - m.g_hat(w).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn growth_sandwich_holds() {
        let models = vec![
            ErrorModel::uniform(1.5).unwrap(),
            ErrorModel::uniform_convolution(&[1.0, 3.0], &[2, 1]).unwrap(),
            ErrorModel::binomial(4).unwrap(),
            ErrorModel::discrete(0.5, &[0.1, 0.2, 0.3, 0.4], -1, DiscreteOptions::default()).unwrap(),
            ErrorModel::uniform_gamma(1.0, 0.5, 3.0).unwrap(),
        ];
        let ws: Vec<f64> = (0..4000).map(|k| -100.0 + 0.05 * k as f64).collect();
        for m in &models {
            let (lo, hi) = m.growth_sandwich(&ws);
            assert!(lo >= 1.0 - 1e-12 && hi <= 1.0 + 1e-12, "{}: {lo} {hi}", m.tag());
        }
    }

    #[test]
    fn discrete_bernoulli_factorization() {
        // atoms {-1, 0}: ĝ(z) = (1 + e^z)/2, ψ̂ = 2
        let m = ErrorModel::discrete(1.0, &[0.5, 0.5], -1, DiscreteOptions::default()).unwrap();
        assert_eq!(
            m.zeros(),
            &[ZeroDatum {
                a: 1.0,
                lambda: -ONE,
                m: 1
            }]
        );
        for w in [0.0, 0.3, 2.0, -4.0] {
            assert!((m.smooth().eval(w) - 2.0).norm() < 1e-14);
            let z = Complex64::new(0.2, w);
            assert!((m.g_hat_z(z) - (ONE + z.exp()) / 2.0).norm() < 1e-14);
        }
        assert!(m.g_hat(PI).norm() < 1e-15);
        // atoms {0, 1}: ψ̂ = 2 e^z
        let m = ErrorModel::discrete(1.0, &[0.5, 0.5], 0, DiscreteOptions::default()).unwrap();
        assert!((m.smooth().eval(1.3) - (I * 1.3).exp() * 2.0).norm() < 1e-14);
    }

    #[test]
    fn discrete_binomial_matches_exact_constructor() {
        let probs = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let d = ErrorModel::discrete(1.0, &probs, -4, DiscreteOptions::default()).unwrap();
        assert_eq!(
            d.zeros(),
            &[ZeroDatum {
                a: 1.0,
                lambda: -ONE,
                m: 4
            }]
        );
        let b = ErrorModel::binomial(4).unwrap();
        for w in grid() {
            assert!((d.smooth().eval(w) - b.smooth().eval(w)).norm() < 1e-9);
            assert!((b.smooth().eval(w) - 16.0).norm() < 1e-12);
        }
    }

    #[test]
    fn discrete_mixed_roots_fold_into_psi() {
        // 0.2x² + 0.5x + 0.3 → roots -1 (on circle) and -1.5
        let m = ErrorModel::discrete(1.0, &[0.2, 0.5, 0.3], 0, DiscreteOptions::default()).unwrap();
        assert_eq!(m.zeros().len(), 1);
        assert_eq!(m.zeros()[0].lambda, -ONE);
        assert_abs_diff_eq!(m.g_hat(0.0).re, 1.0, epsilon = 1e-12);
        assert_eq!(m.gamma(), 0.0);
        let (lo, hi) = m.strip();
        assert_eq!(lo, f64::NEG_INFINITY);
        assert_abs_diff_eq!(hi, 1.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn discrete_rejects_bad_input() {
        let o = DiscreteOptions::default();
        assert!(matches!(
            ErrorModel::discrete(1.0, &[0.5, 0.5, 0.0], 0, o),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(ErrorModel::discrete(1.0, &[0.5, 0.4], 0, o).is_err());
        assert!(ErrorModel::discrete(0.0, &[0.5, 0.5], 0, o).is_err());
    }

    #[test]
    fn uniform_convolution_validation_and_degenerate_case() {
        assert!(ErrorModel::uniform_convolution(&[1.0, 1.0], &[1, 1]).is_err());
        assert!(ErrorModel::uniform_convolution(&[1.0], &[1, 2]).is_err());
        assert_eq!(ErrorModel::uniform_convolution(&[1.0], &[3]).unwrap().gamma(), 3.0);
        let a = ErrorModel::uniform_convolution(&[1.0], &[1]).unwrap();
        let b = ErrorModel::uniform(1.0).unwrap();
        for w in grid() {
            assert_eq!(a.g_hat(w), b.g_hat(w));
        }
    }

    #[test]
    fn uniform_gamma_psi_and_growth() {
        assert!(ErrorModel::uniform_gamma(1.0, 0.0, 1.0).is_err());
        let m = ErrorModel::uniform_gamma(1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(m.g_hat(0.0).re, 1.0, epsilon = 1e-15);
        assert_eq!(m.gamma(), 2.0);
        for w in [0.5, 2.0, 10.0, -30.0] {
            // ψ̂(iω) = -2iω e^{iω} (iω + 1)
            let expect = -2.0 * I * w * (I * w).exp() * (I * w + 1.0);
            assert!((m.smooth().eval(w) - expect).norm() < 1e-12);
        }
        let big = 1e4;
        assert_abs_diff_eq!(m.smooth().eval(big).norm() / (2.0 * big * big), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn psi_derivatives_match_symbolic_forms() {
        let m = ErrorModel::uniform(1.0).unwrap();
        let w = 2.0;
        let z = I * w;
        // ψ̂(z) = -2z e^{z}: ψ̂' = -2e^z(1+z), ψ̂'' = -2e^z(2+z)
        assert!((m.psi_derivative(0, w).unwrap() - (-2.0 * z * z.exp())).norm() < 1e-13);
        assert!((m.psi_derivative(1, w).unwrap() - (-2.0 * z.exp() * (1.0 + z))).norm() < 1e-13);
        assert!((m.psi_derivative(2, w).unwrap() - (-2.0 * z.exp() * (2.0 + z))).norm() < 1e-12);
        assert!(matches!(
            m.psi_derivative(7, w),
            Err(Error::UnsupportedOrder { order: 7, max: 6 })
        ));
        for k in 0..200 {
            let w = -20.0 + 0.2 * k as f64;
            assert_eq!(m.psi_derivative(0, w).unwrap(), m.smooth().eval(w));
            // |ψ̂'(iω)| = 2|1 + iω| ≤ D3 (1 + |ω|) with D3 = 2
            assert!(m.psi_derivative(1, w).unwrap().norm() <= 2.0 * (1.0 + w.abs()) + 1e-12);
        }
        let consts = m.derivative_constants(&grid()).unwrap();
        assert_eq!(consts.len(), 6);
        assert!(consts.iter().all(|c| c.is_finite() && *c > 0.0));
    }

    #[test]
    fn numerical_derivatives_of_custom_model() {
        // custom copy of the uniform model
        let custom = ErrorModel::custom(
            vec![ZeroDatum::new(2.0, ONE, 1).unwrap()],
            Arc::new(|z: Complex64| z.exp()),
            (1.0, 1.0, 2.0, 2.0),
            (f64::NEG_INFINITY, f64::INFINITY),
            "custom-uniform",
        )
        .unwrap();
        let reference = ErrorModel::uniform(1.0).unwrap();
        for w in [-3.0, 0.0, 0.7, 5.0] {
            assert!((custom.g_hat(w) - reference.g_hat(w)).norm() < 1e-14);
            for order in 0..=4 {
                let a = custom.psi_derivative(order, w).unwrap();
                let b = reference.psi_derivative(order, w).unwrap();
                assert!(
                    (a - b).norm() < 1e-6 * (1.0 + b.norm()),
                    "order {order} at {w}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn error_densities_integrate_to_one() {
        use crate::numerics::quadrature::adaptive;
        for m in [
            ErrorModel::uniform(1.0).unwrap(),
            ErrorModel::uniform_convolution(&[1.0, 2.0], &[2, 1]).unwrap(),
            ErrorModel::uniform_gamma(1.0, 2.0, 1.5).unwrap(),
        ] {
            let Some(ErrorLaw::Density { support }) = m.law() else {
                panic!()
            };
            let r = adaptive(support.0, support.1, 1e-12, 1e-12, |u| m.error_density(u).unwrap());
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
        }
    }
}
