//! Compactly supported C∞ kernels with vanishing moments.
//!
//! `K(t) = exp(-1/(1-t²)) · Σ_{i=0}^{d} c_i P_{2i}(t)` on `(-1, 1)` and zero
//! elsewhere, with `P_n` the Legendre polynomials and `d = ⌊k0/2⌋`. The
//! coefficients are fixed by `∫K = 1` and `∫t^{2j}K = 0` for `1 ≤ j ≤ d`; odd
//! moments vanish by symmetry.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::jet::{poly_taylor, Jet};
use crate::numerics::quadrature::{adaptive, legendre};

pub const MAX_K0: u32 = 12;
pub const DEFAULT_MAX_DERIV: usize = 8;

/// Above this value of `1/(1-t²)` the bump is treated as zero.
const EXP_CUTOFF: f64 = 700.0;
/// Nodes used to solve the moment system.
const BUILD_NODES: usize = 400;
/// Trapezoid intervals on `[-1, 1]` for transforms at complex arguments; `K` is flat at
/// `±1`, so the rule is spectrally accurate while `|Im z|` stays well below `π·2048/2`.
const TRANSFORM_INTERVALS: usize = 2048;
/// Recompute `e^{-zt}` directly every this many recurrence steps.
const REANCHOR: usize = 32;

#[derive(Debug, Clone)]
pub struct FlatKernel {
    k0: u32,
    /// Coefficients of `P_0, P_2, …, P_{2d}`.
    coeffs: Vec<f64>,
    /// The same polynomial in monomial form, low to high degree.
    mono: Vec<f64>,
    max_deriv: usize,
    /// First node and `Δ·K(t_j)` at equispaced nodes where `K` is nonzero.
    samples: Arc<(f64, Vec<f64>)>,
}

/// Monomial coefficients of `P_0..=P_n`.
fn legendre_monomials(n: usize) -> Vec<Vec<f64>> {
    let mut p: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, &c) in p[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c;
        }
        for (i, &c) in p[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        for c in &mut next {
            *c /= (k + 1) as f64;
        }
        p.push(next);
    }
    p.truncate(n + 1);
    p
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `p^{(k)}(t)` for `k ≤ 2` without allocating.
fn poly_derivative_at(coeffs: &[f64], k: usize, t: f64) -> f64 {
    coeffs.iter().enumerate().skip(k).rev().fold(0.0, |acc, (i, &c)| {
        let f = if k == 1 { i } else { i * (i - 1) } as f64;
        acc * t + f * c
    })
}

fn bump(t: f64) -> f64 {
    let u = 1.0 - t * t;
    if u <= 0.0 || 1.0 / u > EXP_CUTOFF {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

pub fn build_kernel(k0: u32) -> Result<FlatKernel> {
    if k0 == 0 {
        return Err(Error::invalid("k0", "at least one vanishing moment is required"));
    }
    if k0 > MAX_K0 {
        return Err(Error::UnsupportedOrder {
            order: k0 as usize,
            max: MAX_K0 as usize,
        });
    }
    let d = (k0 / 2) as usize;
    let legs = legendre_monomials(2 * d);
    let even: Vec<&Vec<f64>> = (0..=d).map(|i| &legs[2 * i]).collect();

    // Gram system ∫ bump P_{2i} P_{2j} c_i = P_{2j}(0)
    let rule = legendre(BUILD_NODES);
    let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
    for i in 0..=d {
        for j in i..=d {
            let v = rule.integrate(-1.0, 1.0, |t| bump(t) * horner(even[i], t) * horner(even[j], t));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let b = DVector::from_iterator(d + 1, even.iter().map(|p| p[0]));
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NumericalFailure(format!("singular moment system for k0 = {k0}")))?;
    let coeffs: Vec<f64> = c.iter().copied().collect();

    let mut mono = vec![0.0; 2 * d + 1];
    for (ci, p) in coeffs.iter().zip(&even) {
        for (k, &pk) in p.iter().enumerate() {
            mono[k] += ci * pk;
        }
    }
    let samples = transform_samples(&mono);
    Ok(FlatKernel {
        k0,
        coeffs,
        mono,
        max_deriv: DEFAULT_MAX_DERIV,
        samples: Arc::new(samples),
    })
}

fn transform_samples(mono: &[f64]) -> (f64, Vec<f64>) {
    let dt = 2.0 / TRANSFORM_INTERVALS as f64;
    let nodes: Vec<f64> = (0..=TRANSFORM_INTERVALS).map(|j| -1.0 + j as f64 * dt).collect();
    let first = nodes.iter().position(|&t| bump(t) > 0.0).unwrap_or(0);
    let last = nodes.iter().rposition(|&t| bump(t) > 0.0).unwrap_or(0);
    let weighted = nodes[first..=last]
        .iter()
        .map(|&t| dt * bump(t) * horner(mono, t))
        .collect();
    (nodes[first], weighted)
}

impl FlatKernel {
    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Polynomial factor in monomial form.
    pub fn polynomial(&self) -> &[f64] {
        &self.mono
    }

    pub fn max_deriv(&self) -> usize {
        self.max_deriv
    }

    /// `K(t)`.
    pub fn value(&self, t: f64) -> f64 {
        let b = bump(t);
        if b == 0.0 {
            0.0
        } else {
            b * horner(&self.mono, t)
        }
    }

    /// `K^{(order)}(t)`.
    pub fn eval(&self, order: usize, t: f64) -> Result<f64> {
        if order > self.max_deriv {
            return Err(Error::UnsupportedOrder {
                order,
                max: self.max_deriv,
            });
        }
        Ok(self.eval_unchecked(order, t))
    }

    pub(crate) fn eval_unchecked(&self, order: usize, t: f64) -> f64 {
        if order == 0 {
            return self.value(t);
        }
        let u = 1.0 - t * t;
        if u <= 0.0 || 1.0 / u > EXP_CUTOFF {
            return 0.0;
        }
        if order <= 2 {
            // K = e^g P with g = -1/(1-t²)
            let b = (-1.0 / u).exp();
            let g1 = -2.0 * t / (u * u);
            let p0 = horner(&self.mono, t);
            let p1 = poly_derivative_at(&self.mono, 1, t);
            if order == 1 {
                return b * (g1 * p0 + p1);
            }
            let g2 = -(2.0 + 6.0 * t * t) / (u * u * u);
            let p2 = poly_derivative_at(&self.mono, 2, t);
            return b * ((g2 + g1 * g1) * p0 + 2.0 * g1 * p1 + p2);
        }
        self.eval_jet(order, t)
    }

    fn eval_jet(&self, order: usize, t: f64) -> f64 {
        let x = Jet::variable(t, order);
        let one_minus_t2 = x.mul(&x).scale(-1.0).add_const(1.0);
        let e = one_minus_t2.recip().scale(-1.0).exp();
        e.mul(&poly_taylor(&self.mono, t, order)).derivative(order)
    }

    /// `K̂(iω) = ∫ K(t) e^{-iωt} dt`; real because `K` is even.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        let r = adaptive(0.0, 1.0, 1e-15, 1e-13, |t| 2.0 * self.value(t) * (omega * t).cos());
        Complex64::new(r.value, 0.0)
    }

    /// `K̂(z) = ∫ K(t) e^{-zt} dt` at a complex argument.
    pub fn laplace(&self, z: Complex64) -> Complex64 {
        let (t0, weighted) = &*self.samples;
        let dt = 2.0 / TRANSFORM_INTERVALS as f64;
        let step = (-z * dt).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut e = Complex64::new(0.0, 0.0);
        for (j, &w) in weighted.iter().enumerate() {
            if j % REANCHOR == 0 {
                e = (-z * (t0 + j as f64 * dt)).exp();
            }
            acc += e * w;
            e *= step;
        }
        acc
    }

    /// `‖K^{(order)}‖₂`.
    pub fn l2_norm(&self, order: usize) -> Result<f64> {
        if order > self.max_deriv {
            return Err(Error::UnsupportedOrder {
                order,
                max: self.max_deriv,
            });
        }
        let r = adaptive(-1.0, 1.0, 1e-14, 1e-12, |t| self.eval_unchecked(order, t).powi(2));
        Ok(r.value.sqrt())
    }

    /// `‖K^{(order)}‖₁`; bounds the transform via `|K̂(iu)| ≤ ‖K^{(k)}‖₁ / |u|^k`.
    pub fn l1_norm(&self, order: usize) -> Result<f64> {
        if order > self.max_deriv {
            return Err(Error::UnsupportedOrder {
                order,
                max: self.max_deriv,
            });
        }
        let r = adaptive(-1.0, 1.0, 1e-14, 1e-12, |t| self.eval_unchecked(order, t).abs());
        Ok(r.value)
    }

    /// Largest `|K^{(order)}|` on a uniform grid of `[-1, 1]`.
    pub fn sup_norm(&self, order: usize, points: usize) -> Result<f64> {
        let mut m = 0.0f64;
        for i in 0..=points {
            let t = -1.0 + 2.0 * i as f64 / points as f64;
            m = m.max(self.eval(order, t)?.abs());
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_polynomials() {
        let p = legendre_monomials(4);
        assert_eq!(p[2], vec![-0.5, 0.0, 1.5]);
        assert_eq!(p[4], vec![0.375, 0.0, -3.75, 0.0, 4.375]);
    }

    #[test]
    fn k0_one_needs_only_normalization() {
        let k = build_kernel(1).unwrap();
        assert_eq!(k.coeffs().len(), 1);
        let total = legendre(200).integrate(-1.0, 1.0, |t| k.value(t));
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(matches!(
            build_kernel(13),
            Err(Error::UnsupportedOrder { order: 13, max: 12 })
        ));
        assert!(build_kernel(0).is_err());
        let k = build_kernel(2).unwrap();
        assert!(matches!(k.eval(9, 0.1), Err(Error::UnsupportedOrder { .. })));
    }

    #[test]
    fn outside_support_and_symmetry() {
        let k = build_kernel(4).unwrap();
        for order in 0..=8 {
            assert_eq!(k.eval(order, 1.5).unwrap(), 0.0);
            assert_eq!(k.eval(order, -1.0).unwrap(), 0.0);
        }
        assert!(k.eval(1, 0.0).unwrap().abs() < 1e-15);
        for t in [0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(k.value(t), k.value(-t), epsilon = 1e-15);
        }
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let k = build_kernel(3).unwrap();
        let h = 1e-4;
        let t = 0.3;
        let fd = (k.value(t + h) - 2.0 * k.value(t) + k.value(t - h)) / (h * h);
        let exact = k.eval(2, t).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-5, "{fd} vs {exact}");
    }

    #[test]
    fn low_orders_match_jet_arithmetic() {
        let k = build_kernel(5).unwrap();
        for t in [-0.95, -0.4, 0.0, 0.3, 0.77] {
            for order in 1..=2 {
                let a = k.eval_unchecked(order, t);
                let b = k.eval_jet(order, t);
                assert!(
                    (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                    "order {order} at {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn fourier_basics() {
        let k = build_kernel(3).unwrap();
        assert_abs_diff_eq!(k.fourier(0.0).re, 1.0, epsilon = 1e-12);
        for w in [0.5, 3.0, 17.0] {
            assert_abs_diff_eq!(k.fourier(w).re, k.laplace(Complex64::new(0.0, w)).re, epsilon = 1e-12);
            assert!(k.laplace(Complex64::new(0.0, w)).im.abs() < 1e-14);
        }
    }
}
