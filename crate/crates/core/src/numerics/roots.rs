//! Polynomial roots by the Aberth–Ehrlich simultaneous iteration, with
//! multiplicity recovery for clustered roots.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A root together with its detected multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // (p(z), p'(z)) for p(x) = Σ coeffs[k] x^k
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Coefficients of the j-th derivative of `Σ coeffs[k] x^k`.
fn derivative_coeffs(coeffs: &[f64], j: usize) -> Vec<f64> {
    (j..coeffs.len())
        .map(|k| {
            let falling: f64 = ((k - j + 1)..=k).map(|v| v as f64).product();
            coeffs[k] * falling
        })
        .collect()
}

fn eval_with_scale(coeffs: &[f64], z: Complex64) -> (Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut s = 0.0;
    let r = z.norm();
    for &c in coeffs.iter().rev() {
        p = p * z + c;
        s = s * r + c.abs();
    }
    (p, s)
}

/// Raw Aberth–Ehrlich roots of `Σ coeffs[k] x^k` (coefficients low to high,
/// leading coefficient nonzero).
pub fn aberth(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if lead == 0.0 {
        return Err(Error::NumericalFailure("leading coefficient is zero".into()));
    }
    // Fujiwara-type bound for the initial circle radius.
    let radius = (0..deg)
        .map(|k| (coeffs[k] / lead).abs().powf(1.0 / (deg - k) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(radius, ang)
        })
        .collect();

    const MAX_ITER: usize = 1000;
    for _ in 0..MAX_ITER {
        let mut converged = true;
        for k in 0..deg {
            let (p, dp) = horner(coeffs, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[k] -= step;
            if step.norm() > 1e-14 * (1.0 + z[k].norm()) {
                converged = false;
            }
        }
        if converged {
            return Ok(z);
        }
    }
    // Multiple roots converge linearly; accept if residuals are small.
    let worst = z
        .iter()
        .map(|&r| {
            let (p, s) = eval_with_scale(coeffs, r);
            p.norm() / s
        })
        .fold(0.0f64, f64::max);
    if worst < 1e-8 {
        Ok(z)
    } else {
        Err(Error::NumericalFailure(format!(
            "Aberth iteration did not converge (relative residual {worst:.3e})"
        )))
    }
}

/// Newton refinement of a simple root of the given polynomial.
fn newton(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..50 {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Whether `c` is a root of multiplicity at least `mult` (all derivatives
/// below order `mult` vanish to relative precision `tol`).
fn is_multiple_root(coeffs: &[f64], c: Complex64, mult: usize, tol: f64) -> bool {
    (0..mult).all(|j| {
        let d = derivative_coeffs(coeffs, j);
        let (p, s) = eval_with_scale(&d, c);
        p.norm() <= tol * s
    })
}

/// Roots with multiplicities.
///
/// Raw roots closer than `cluster_tol` are grouped first. Nearby groups are
/// then tentatively merged; a merge is accepted when the refined centroid
/// annihilates all derivatives below the combined multiplicity. This recovers
/// multiple roots whose floating-point images scatter by `ε^{1/m}`.
pub fn roots_with_multiplicity(coeffs: &[f64], cluster_tol: f64) -> Result<Vec<Root>> {
    let raw = aberth(coeffs)?;
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    for r in raw {
        match groups
            .iter_mut()
            .find(|(c, _)| (*c - r).norm() <= cluster_tol * (1.0 + c.norm()))
        {
            Some((c, m)) => {
                *c = (*c * *m as f64 + r) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => groups.push((r, 1)),
        }
    }

    const MERGE_RADIUS: f64 = 0.25;
    const DERIV_TOL: f64 = 1e-9;
    let mut rejected: Vec<(Complex64, Complex64)> = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                let d = (groups[i].0 - groups[j].0).norm();
                let tried = rejected
                    .iter()
                    .any(|&(a, b)| (a == groups[i].0 && b == groups[j].0) || (a == groups[j].0 && b == groups[i].0));
                if d < MERGE_RADIUS && !tried && best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        let (ci, mi) = groups[i];
        let (cj, mj) = groups[j];
        let m = mi + mj;
        let centroid = (ci * mi as f64 + cj * mj as f64) / m as f64;
        let refined = newton(&derivative_coeffs(coeffs, m - 1), centroid);
        if is_multiple_root(coeffs, refined, m, DERIV_TOL) {
            groups[i] = (refined, m);
            groups.swap_remove(j);
        } else {
            rejected.push((ci, cj));
        }
    }

    Ok(groups
        .into_iter()
        .map(|(c, m)| {
            let value = if m == 1 {
                newton(coeffs, c)
            } else {
                newton(&derivative_coeffs(coeffs, m - 1), c)
            };
            Root { value, multiplicity: m }
        })
        .collect())
}
