//! Truncated Taylor series ("jets") for exact derivatives of analytic
//! expressions up to a fixed order.
//!
//! A `Jet` stores the normalized coefficients `f^{(j)}(x0) / j!` for
//! `j = 0..=order`. Arithmetic follows the usual power-series recurrences.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Scalar field the jets are built over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + PartialEq
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn exp(self) -> Self;
    fn powf(self, e: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn powf(self, e: f64) -> Self {
        Complex64::powf(self, e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(c: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    /// The identity map `x0 + δ`.
    pub fn variable(x0: T, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.coeffs[1] = T::one();
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least one coefficient");
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// `f^{(k)}(x0)`, i.e. the k-th coefficient times `k!`.
    pub fn derivative(&self, k: usize) -> T {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.coeffs[k] * T::from_f64(fact)
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn add_const(&self, c: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + c;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![T::zero(); n];
        for (i, &a) in self.coeffs.iter().enumerate().take(n) {
            for (j, &b) in other.coeffs.iter().enumerate().take(n - i) {
                coeffs[i + j] = coeffs[i + j] + a * b;
            }
        }
        Jet { coeffs }
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn recip(&self) -> Self {
        let a = &self.coeffs;
        let inv0 = T::one() / a[0];
        let mut b = vec![T::zero(); a.len()];
        b[0] = inv0;
        for n in 1..a.len() {
            let mut s = T::zero();
            for k in 1..=n {
                s = s + a[k] * b[n - k];
            }
            b[n] = -(s * inv0);
        }
        Jet { coeffs: b }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    pub fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![T::zero(); a.len()];
        b[0] = a[0].exp();
        for n in 1..a.len() {
            let mut s = T::zero();
            for k in 1..=n {
                s = s + T::from_f64(k as f64) * a[k] * b[n - k];
            }
            b[n] = s / T::from_f64(n as f64);
        }
        Jet { coeffs: b }
    }

    /// Real power with a nonzero constant term (principal branch).
    pub fn powf(&self, e: f64) -> Self {
        let a = &self.coeffs;
        let mut b = vec![T::zero(); a.len()];
        b[0] = a[0].powf(e);
        for n in 1..a.len() {
            let mut s = T::zero();
            for k in 1..=n {
                let w = e * k as f64 - (n - k) as f64;
                s = s + T::from_f64(w) * a[k] * b[n - k];
            }
            b[n] = s / (T::from_f64(n as f64) * a[0]);
        }
        Jet { coeffs: b }
    }

    /// Nonnegative integer power by repeated multiplication.
    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(T::one(), self.order());
        for _ in 0..p {
            out = out.mul(self);
        }
        out
    }
}

/// Taylor coefficients of the polynomial `Σ c_k x^k` around `x0`
/// (repeated synthetic division).
pub fn poly_taylor(coeffs: &[f64], x0: f64, order: usize) -> Jet<f64> {
    let mut work = coeffs.to_vec();
    let mut out = vec![0.0; order + 1];
    for slot in out.iter_mut() {
        if work.is_empty() {
            break;
        }
        let mut acc = 0.0;
        let n = work.len();
        let mut quotient = vec![0.0; n.saturating_sub(1)];
        for i in (0..n).rev() {
            acc = acc * x0 + work[i];
            if i > 0 {
                quotient[i - 1] = acc;
            }
        }
        *slot = acc;
        work = quotient;
    }
    Jet::from_coeffs(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_of_linear_matches_closed_form() {
        // d^k/dx^k e^{2x} at x=0.3 = 2^k e^{0.6}
        let j = Jet::variable(0.3, 6).scale(2.0).exp();
        for k in 0..=6 {
            assert_relative_eq!(
                j.derivative(k),
                2f64.powi(k as i32) * 0.6f64.exp(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn recip_and_pow() {
        let x = Jet::variable(2.0, 5);
        let r = x.recip();
        // d^k (1/x) = (-1)^k k! / x^{k+1}
        let mut fact = 1.0;
        for k in 0..=5 {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = (-1f64).powi(k as i32) * fact / 2f64.powi(k as i32 + 1);
            assert_relative_eq!(r.derivative(k), expect, max_relative = 1e-13);
        }
        let p = x.powf(2.5);
        assert_relative_eq!(p.derivative(1), 2.5 * 2f64.powf(1.5), max_relative = 1e-13);
        assert_relative_eq!(p.derivative(3), 2.5 * 1.5 * 0.5 * 2f64.powf(-0.5), max_relative = 1e-13);
    }

    #[test]
    fn polynomial_taylor_shift() {
        // p(x) = 1 + 2x + 3x^2 around 1: p=6, p'=8, p''/2=3
        let j = poly_taylor(&[1.0, 2.0, 3.0], 1.0, 4);
        assert_eq!(j.coeffs(), &[6.0, 8.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn complex_power_matches_direct() {
        let z0 = Complex64::new(1.0, 3.0);
        let j = Jet::variable(z0, 2).powf(0.7);
        let d1 = 0.7 * z0.powf(-0.3);
        assert!((j.derivative(1) - d1).norm() < 1e-13);
    }
}
