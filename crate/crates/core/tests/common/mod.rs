//! Oracles shared by several integration test files.
#![allow(dead_code)]

use deconv_core::ZeroDatum;
use num_complex::Complex64;

/// Coefficients of one factor, expanded as `m` nested geometric series in
/// `x` with total degree at most `n`.
pub fn nested_factor(lambda: Complex64, m: u32, n: u32, minus: bool) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n as usize + 1];
    let mut idx = vec![0u32; m as usize];
    loop {
        let j: u32 = idx.iter().sum();
        if j <= n {
            out[j as usize] += if minus {
                (-lambda).powu(m) * lambda.powu(j)
            } else {
                lambda.inv().powu(j)
            };
        }
        let mut k = 0;
        while k < idx.len() {
            if idx[k] < n {
                idx[k] += 1;
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return out;
        }
    }
}

/// Brute-force product of the truncated factors, keyed by `ℓ`.
pub fn brute_force(zeros: &[ZeroDatum], n: u32) -> Vec<(f64, Complex64, Complex64)> {
    let plus: Vec<_> = zeros.iter().map(|z| nested_factor(z.lambda, z.m, n, false)).collect();
    let minus: Vec<_> = zeros.iter().map(|z| nested_factor(z.lambda, z.m, n, true)).collect();
    let mut terms = Vec::new();
    let mut j = vec![0usize; zeros.len()];
    loop {
        let ell: f64 = zeros.iter().zip(&j).map(|(z, &jk)| z.a * jk as f64).sum();
        let cp = (0..zeros.len()).fold(Complex64::new(1.0, 0.0), |acc, k| acc * plus[k][j[k]]);
        let cm = (0..zeros.len()).fold(Complex64::new(1.0, 0.0), |acc, k| acc * minus[k][j[k]]);
        terms.push((ell, cp, cm));
        let mut k = 0;
        while k < j.len() {
            if j[k] < n as usize {
                j[k] += 1;
                break;
            }
            j[k] = 0;
            k += 1;
        }
        if k == j.len() {
            break;
        }
    }
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, Complex64, Complex64)> = Vec::new();
    for (ell, cp, cm) in terms {
        match merged.last_mut() {
            Some(last) if ell - last.0 <= 1e-9 * (1.0 + ell) => {
                last.1 += cp;
                last.2 += cm;
            }
            _ => merged.push((ell, cp, cm)),
        }
    }
    merged
}
