//! Draws from the error laws and from `Y = X + ε`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::density::TestDensity;
use crate::error::{Error, Result};
use crate::error_model::{ErrorModel, Family};

/// Generator for replication `rep` of sample-size index `cell`, independent of scheduling.
pub fn replication_rng(seed: u64, cell: u32, rep: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng
}

/// A prepared sampler for one error law.
#[derive(Debug, Clone)]
pub enum ErrorSampler {
    UniformSum(Vec<f64>),
    Atoms { values: Vec<f64>, cumulative: Vec<f64> },
    UniformGamma { theta: f64, gamma: Gamma<f64> },
}

impl ErrorSampler {
    pub fn new(model: &ErrorModel) -> Result<Self> {
        match model.family() {
            Family::UniformConvolution { thetas, mults } => Ok(ErrorSampler::UniformSum(
                thetas
                    .iter()
                    .zip(mults)
                    .flat_map(|(&t, &m)| std::iter::repeat_n(t, m as usize))
                    .collect(),
            )),
            Family::Discrete { step, offset, probs } => {
                let total: f64 = probs.iter().sum();
                let mut acc = 0.0;
                let mut values = Vec::new();
                let mut cumulative = Vec::new();
                for (k, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        acc += p / total;
                        values.push(step * (offset + k as i64) as f64);
                        cumulative.push(acc);
                    }
                }
                if let Some(last) = cumulative.last_mut() {
                    *last = 1.0;
                }
                Ok(ErrorSampler::Atoms { values, cumulative })
            }
            Family::UniformGamma { theta, shape, rate } => Ok(ErrorSampler::UniformGamma {
                theta: *theta,
                gamma: Gamma::new(*shape, 1.0 / rate).map_err(|e| Error::invalid("error.shape", e.to_string()))?,
            }),
            Family::Custom => Err(Error::NotClosedForm(format!(
                "{}: no sampler for a custom error law",
                model.tag()
            ))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorSampler::UniformSum(thetas) => thetas.iter().map(|&t| rng.random_range(-t..=t)).sum(),
            ErrorSampler::Atoms { values, cumulative } => {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
                values[k]
            }
            ErrorSampler::UniformGamma { theta, gamma } => rng.random_range(-theta..=*theta) + gamma.sample(rng),
        }
    }
}

pub fn sample_errors<R: Rng + ?Sized>(model: &ErrorModel, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let s = ErrorSampler::new(model)?;
    Ok((0..n).map(|_| s.sample(rng)).collect())
}

/// `n` draws of `Y = X + ε` from a seeded generator.
pub fn sample_observations(f: &TestDensity, model: &ErrorModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one observation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_observations(f, &ErrorSampler::new(model)?, n, &mut rng)
}

pub(crate) fn draw_observations<R: Rng + ?Sized>(
    f: &TestDensity,
    errors: &ErrorSampler,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok((0..n).map(|_| f.sample(rng) + errors.sample(rng)).collect())
}
