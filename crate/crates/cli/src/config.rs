//! TOML experiment configuration.
//!
//! ```toml
//! n_grid = [1024, 4096, 16384, 65536]
//! reps = 100
//! seed = 1
//!
//! [error]
//! kind = "uniform"
//! theta = 1.0
//!
//! [density]
//! kind = "cauchy_power"
//! r = 3.0
//!
//! [risk]
//! kind = "pointwise"
//! x0 = 0.0
//! ```

use std::path::PathBuf;

use anyhow::{Context, Result};
use deconv_core::simulation::{DensitySpec, ErrorSpec, ExperimentSpec, RiskSettings, RiskSpec};
use serde::{Deserialize, Serialize};

pub const DEFAULT_REPS: usize = 100;
pub const DEFAULT_BOOTSTRAP: usize = 500;
pub const DEFAULT_OUTPUT_DIR: &str = "deconv-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorDecl {
    Uniform {
        theta: f64,
    },
    UniformConvolution {
        thetas: Vec<f64>,
        mults: Vec<u32>,
    },
    Discrete {
        step: f64,
        #[serde(default)]
        offset: i64,
        probs: Vec<f64>,
    },
    Binomial {
        m: u32,
    },
    UniformGamma {
        theta: f64,
        shape: f64,
        rate: f64,
    },
}

impl ErrorDecl {
    pub fn to_spec(&self) -> ErrorSpec {
        match self.clone() {
            ErrorDecl::Uniform { theta } => ErrorSpec::Uniform { theta },
            ErrorDecl::UniformConvolution { thetas, mults } => ErrorSpec::UniformConvolution { thetas, mults },
            ErrorDecl::Discrete { step, offset, probs } => ErrorSpec::Discrete { step, offset, probs },
            ErrorDecl::Binomial { m } => ErrorSpec::Binomial { m },
            ErrorDecl::UniformGamma { theta, shape, rate } => ErrorSpec::UniformGamma { theta, shape, rate },
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityDecl {
    CauchyPower {
        r: f64,
    },
    SmoothCompact {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
}

impl DensityDecl {
    pub fn to_spec(&self) -> DensitySpec {
        match *self {
            DensityDecl::CauchyPower { r } => DensitySpec::CauchyPower { r },
            DensityDecl::SmoothCompact { center, width } => DensitySpec::SmoothCompact { center, width },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiskDecl {
    Pointwise {
        #[serde(default)]
        x0: f64,
    },
    L2,
}

impl Default for RiskDecl {
    fn default() -> Self {
        RiskDecl::Pointwise { x0: 0.0 }
    }
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

fn default_alpha() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Moment order; defaults to the weakest order the theory allows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default = "one")]
    pub a_const: f64,
    #[serde(default = "one")]
    pub b_const: f64,
    /// Kernel vanishing moments; defaults to `⌈α + 1⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<u32>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub error: ErrorDecl,
    pub density: DensityDecl,
    #[serde(default)]
    pub risk: RiskDecl,
}

impl ExperimentConfig {
    pub fn settings(&self) -> RiskSettings {
        RiskSettings {
            alpha: self.alpha,
            p: self.p,
            a_const: self.a_const,
            b_const: self.b_const,
            k0: self.k0,
        }
    }

    pub fn to_spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            error: self.error.to_spec(),
            density: self.density.to_spec(),
            risk: match self.risk {
                RiskDecl::Pointwise { x0 } => RiskSpec::Pointwise { x0 },
                RiskDecl::L2 => RiskSpec::L2,
            },
            n_grid: self.n_grid.clone(),
            reps: self.reps,
            settings: self.settings(),
            seed: self.seed,
            bootstrap: self.bootstrap,
            threads: self.threads,
        }
    }

    /// Checks everything that can be checked without running the experiment.
    pub fn validate(&self) -> Result<()> {
        let spec = self.to_spec();
        spec.validate()?;
        spec.error.build()?;
        spec.density.build()?;
        for (name, v) in [
            ("alpha", self.alpha),
            ("a_const", self.a_const),
            ("b_const", self.b_const),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                anyhow::bail!("invalid parameter `{name}`: must be positive, got {v}");
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p.is_finite()) {
                anyhow::bail!("invalid parameter `p`: must be positive, got {p}");
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize configuration")
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).context("malformed configuration")?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            anyhow::anyhow!("{}", inner.message())
        } else {
            anyhow::anyhow!("at `{path}`: {}", inner.message())
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}
