//! Test densities for the Monte Carlo experiments.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{adaptive, adaptive_real_line};

/// Moment orders within this of the divergence boundary are reported as finite.
pub const MOMENT_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// `C_r (1 + x²)^{-r}`.
    CauchyPower { r: f64 },
    /// Normalized `exp(-1/(1-u²))` with `u = (x - center)/width`.
    SmoothCompact { center: f64, width: f64 },
}

#[derive(Debug, Clone)]
pub struct TestDensity {
    name: String,
    kind: DensityKind,
    norm: f64,
    /// Hölder smoothness; infinite for C∞ densities.
    pub alpha_doc: f64,
    /// Largest documented finite absolute moment.
    pub p_doc: f64,
}

fn bump(u: f64) -> f64 {
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

pub fn density_cauchy_power(r: f64) -> Result<TestDensity> {
    if !(r > 0.5 && r.is_finite()) {
        return Err(Error::invalid(
            "r",
            format!("must exceed 1/2 for integrability, got {r}"),
        ));
    }
    let mass = adaptive_real_line(0.0, 1.0, 1e-14, 1e-13, |x| (1.0 + x * x).powf(-r)).value;
    Ok(TestDensity {
        name: format!("cauchy_power(r={r})"),
        kind: DensityKind::CauchyPower { r },
        norm: 1.0 / mass,
        alpha_doc: f64::INFINITY,
        p_doc: 2.0 * r - 1.0 - MOMENT_EPS,
    })
}

pub fn density_smooth_compact(center: f64, width: f64) -> Result<TestDensity> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    if !center.is_finite() {
        return Err(Error::invalid("center", "must be finite"));
    }
    let mass = adaptive(-1.0, 1.0, 1e-15, 1e-14, bump).value * width;
    Ok(TestDensity {
        name: format!("smooth_compact(center={center}, width={width})"),
        kind: DensityKind::SmoothCompact { center, width },
        norm: 1.0 / mass,
        alpha_doc: f64::INFINITY,
        p_doc: f64::INFINITY,
    })
}

impl TestDensity {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Normalizing constant.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            DensityKind::CauchyPower { r } => self.norm * (1.0 + x * x).powf(-r),
            DensityKind::SmoothCompact { center, width } => self.norm * bump((x - center) / width),
        }
    }

    /// Support, infinite for the power family.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            DensityKind::CauchyPower { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DensityKind::SmoothCompact { center, width } => (center - width, center + width),
        }
    }

    /// Student-t view of the power family: `X = T_ν / √ν` with `ν = 2r - 1`.
    fn student(r: f64) -> (f64, f64) {
        let nu = 2.0 * r - 1.0;
        (nu, nu.sqrt())
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match self.kind {
            DensityKind::CauchyPower { r } => {
                let (nu, s) = Self::student(r);
                let t = StudentsT::new(0.0, 1.0, nu).expect("positive degrees of freedom");
                t.inverse_cdf(q) / s
            }
            DensityKind::SmoothCompact { center, width } => {
                // bisection on the quadrature CDF; used only for grid bounds
                let cdf = |x: f64| adaptive(center - width, x.min(center + width), 1e-13, 1e-12, |y| self.pdf(y)).value;
                let (mut lo, mut hi) = (center - width, center + width);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DensityKind::CauchyPower { r } => {
                let (nu, s) = Self::student(r);
                let t = StudentT::new(nu).expect("positive degrees of freedom");
                t.sample(rng) / s
            }
            DensityKind::SmoothCompact { center, width } => loop {
                // uniform envelope; bump ≤ e^{-1}
                let u: f64 = rng.random_range(-1.0..1.0);
                let v: f64 = rng.random::<f64>() * (-1.0f64).exp();
                if v < bump(u) {
                    return center + width * u;
                }
            },
        }
    }

    /// Acceptance probability of the rejection sampler (1 for exact samplers).
    pub fn acceptance_rate(&self) -> f64 {
        match self.kind {
            DensityKind::CauchyPower { .. } => 1.0,
            DensityKind::SmoothCompact { width, .. } => 1.0 / (self.norm * width * 2.0 * (-1.0f64).exp()),
        }
    }
}
