//! Translation lattice `ℒ_N = {a^T j : j ∈ {0..N}^q}` and the coefficient
//! sequences `C_ℓ^±` obtained by expanding `∏_k (1 - e^{a_k z}/λ_k)^{-m_k}`
//! as one-sided series of exponentials.
//!
//! For a multi-index `j`:
//!
//! ```text
//! C^+(j) = ∏_k C_{j_k, m_k} λ_k^{-j_k}
//! C^-(j) = ∏_k (-1)^{m_k} C_{j_k, m_k} λ_k^{j_k + m_k}
//! ```
//!
//! and `C_ℓ^±` sums these over all `j` with `a^T j = ℓ`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::error_model::{ErrorModel, ZeroDatum};
use crate::numerics::regression::log_log_slope;

/// Default cap on `q·(N+1)^q` enumerated terms.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Relative tolerance for grouping `ℓ` values when the periods are not
/// commensurate.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

const MAX_DENOMINATOR: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSetEntry {
    pub ell: f64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSetSequence {
    pub entries: Vec<ZeroSetEntry>,
    /// `a^T m`, the constant translation of the minus-side series.
    pub shift: f64,
    pub n_cap: u32,
    /// Lattice unit when all periods are commensurate (`ℓ` is then an
    /// integer multiple of it).
    pub unit: Option<f64>,
    /// Distinct multi-index keys merged only by the floating-point tolerance.
    pub near_coincidences: usize,
    /// Every `ℓ` below this value has its complete (untruncated) coefficient.
    pub complete_below: f64,
}

impl ZeroSetSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ells(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.ell)
    }

    pub fn max_ell(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.ell)
    }

    /// Entry whose `ℓ` matches within `tol`.
    pub fn find(&self, ell: f64, tol: f64) -> Option<&ZeroSetEntry> {
        let i = self.entries.partition_point(|e| e.ell < ell - tol);
        self.entries.get(i).filter(|e| (e.ell - ell).abs() <= tol)
    }
}

/// Number of weak compositions of `j` into `m` parts, `binom(j+m-1, m-1)`.
pub fn weak_composition_count(j: u64, m: u32) -> Result<u64> {
    if m == 0 {
        return Err(Error::invalid("m", "number of parts must be at least 1"));
    }
    let n = j as u128 + m as u128 - 1;
    let k = (m as u128 - 1).min(j as u128);
    let mut r: u128 = 1;
    for i in 1..=k {
        // r·(n-k+i) is divisible by i after the multiplication
        r = r
            .checked_mul(n - k + i)
            .ok_or_else(|| Error::ArithmeticOverflow(format!("C({j}, {m}) intermediate exceeds 128 bits")))?
            / i;
    }
    u64::try_from(r).map_err(|_| Error::ArithmeticOverflow(format!("C({j}, {m}) = {r} exceeds 64 bits")))
}

/// Best rational approximation `p/q` with `q ≤ max_den` via continued fractions.
fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a > u32::MAX as f64 {
            return None;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            return None;
        }
        if ((p2 as f64 / q2 as f64) - x).abs() <= tol * x.abs().max(1.0) {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a as f64;
        if frac == 0.0 {
            return None;
        }
        v = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Integer weights `w_k` and unit `u` with `a_k = u·w_k`, if the periods
/// are commensurate with small denominators.
pub fn commensurate_weights(periods: &[f64]) -> Option<(f64, Vec<u64>)> {
    let first = *periods.first()?;
    let ratios: Vec<(u64, u64)> = periods
        .iter()
        .map(|&a| rational_approx(a / first, MAX_DENOMINATOR, 1e-12))
        .collect::<Option<_>>()?;
    let lcm = ratios
        .iter()
        .try_fold(1u64, |l, &(_, q)| l.checked_mul(q / gcd(l, q)))?;
    let mut w: Vec<u64> = ratios.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let g = w.iter().fold(0, |g, &x| gcd(g, x));
    for x in &mut w {
        *x /= g;
    }
    Some((first * g as f64 / lcm as f64, w))
}

/// Options for [`build_sequence_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub budget: u64,
    pub group_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            budget: DEFAULT_BUDGET,
            group_tol: DEFAULT_GROUP_TOL,
        }
    }
}

pub fn build_sequence(model: &ErrorModel, n_cap: u32) -> Result<ZeroSetSequence> {
    build_sequence_with(model.zeros(), n_cap, BuildOptions::default())
}

struct Factors {
    plus: Vec<Vec<Complex64>>,
    minus: Vec<Vec<Complex64>>,
}

/// Per-coordinate tables of `C_{j,m} λ^{-j}` and `(-1)^m C_{j,m} λ^{j+m}`.
fn factor_tables(zeros: &[ZeroDatum], n_cap: u32) -> Result<Factors> {
    let mut plus = Vec::with_capacity(zeros.len());
    let mut minus = Vec::with_capacity(zeros.len());
    for z in zeros {
        let inv = z.lambda.inv();
        let sign = if z.m % 2 == 0 { 1.0 } else { -1.0 };
        let lam_m = z.lambda.powu(z.m) * sign;
        let mut p = Vec::with_capacity(n_cap as usize + 1);
        let mut q = Vec::with_capacity(n_cap as usize + 1);
        for j in 0..=n_cap {
            let c = weak_composition_count(j as u64, z.m)? as f64;
            p.push(inv.powu(j) * c);
            q.push(z.lambda.powu(j) * lam_m * c);
        }
        plus.push(p);
        minus.push(q);
    }
    Ok(Factors { plus, minus })
}

pub fn build_sequence_with(zeros: &[ZeroDatum], n_cap: u32, opts: BuildOptions) -> Result<ZeroSetSequence> {
    let q = zeros.len();
    let shift: f64 = zeros.iter().map(|z| z.a * z.m as f64).sum();
    let min_a = zeros.iter().map(|z| z.a).fold(f64::INFINITY, f64::min);
    if q == 0 {
        let one = Complex64::new(1.0, 0.0);
        return Ok(ZeroSetSequence {
            entries: vec![ZeroSetEntry {
                ell: 0.0,
                c_plus: one,
                c_minus: one,
            }],
            shift,
            n_cap,
            unit: None,
            near_coincidences: 0,
            complete_below: f64::INFINITY,
        });
    }
    let terms = (q as u128).saturating_mul((n_cap as u128 + 1).saturating_pow(q as u32));
    if terms > opts.budget as u128 {
        return Err(Error::BudgetExceeded {
            terms,
            budget: opts.budget,
        });
    }
    let tables = factor_tables(zeros, n_cap)?;
    let periods: Vec<f64> = zeros.iter().map(|z| z.a).collect();
    let lattice = commensurate_weights(&periods);

    let mut exact: BTreeMap<u64, (Complex64, Complex64)> = BTreeMap::new();
    let mut loose: Vec<(f64, Complex64, Complex64)> = Vec::new();
    let mut j = vec![0u32; q];
    loop {
        let mut cp = Complex64::new(1.0, 0.0);
        let mut cm = Complex64::new(1.0, 0.0);
        #[allow(clippy::needless_range_loop)]
        for k in 0..q {
            cp *= tables.plus[k][j[k] as usize];
            cm *= tables.minus[k][j[k] as usize];
        }
        match &lattice {
            Some((_, w)) => {
                let key: u64 = w.iter().zip(&j).map(|(&wk, &jk)| wk * jk as u64).sum();
                let slot = exact.entry(key).or_default();
                slot.0 += cp;
                slot.1 += cm;
            }
            None => {
                let ell: f64 = periods.iter().zip(&j).map(|(&a, &jk)| a * jk as f64).sum();
                loose.push((ell, cp, cm));
            }
        }
        // odometer increment
        let mut k = 0;
        while k < q {
            if j[k] < n_cap {
                j[k] += 1;
                break;
            }
            j[k] = 0;
            k += 1;
        }
        if k == q {
            break;
        }
    }

    let (entries, near) = match lattice {
        Some((unit, _)) => (
            exact
                .into_iter()
                .map(|(key, (c_plus, c_minus))| ZeroSetEntry {
                    ell: key as f64 * unit,
                    c_plus,
                    c_minus,
                })
                .collect(),
            0,
        ),
        None => group_by_tolerance(loose, opts.group_tol),
    };
    Ok(ZeroSetSequence {
        entries,
        shift,
        n_cap,
        unit: lattice.map(|(u, _)| u),
        near_coincidences: near,
        complete_below: (n_cap as f64 + 1.0) * min_a,
    })
}

fn group_by_tolerance(mut items: Vec<(f64, Complex64, Complex64)>, tol: f64) -> (Vec<ZeroSetEntry>, usize) {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<ZeroSetEntry> = Vec::new();
    let mut near = 0;
    for (ell, cp, cm) in items {
        match out.last_mut() {
            Some(last) if ell - last.ell <= tol * (1.0 + ell) => {
                last.c_plus += cp;
                last.c_minus += cm;
                near += 1;
            }
            _ => out.push(ZeroSetEntry {
                ell,
                c_plus: cp,
                c_minus: cm,
            }),
        }
    }
    (out, near)
}

/// Untruncated coefficients on an integer lattice, `ℓ = unit·n` for
/// `n = 0..=n_max`, from the generating-function recurrence
/// `U[n] += U[n - w]/λ` applied `m` times per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSeries {
    pub unit: f64,
    pub c_plus: Vec<Complex64>,
    pub c_minus: Vec<Complex64>,
}

pub fn lattice_series(zeros: &[ZeroDatum], n_max: usize) -> Result<LatticeSeries> {
    let periods: Vec<f64> = zeros.iter().map(|z| z.a).collect();
    let (unit, weights) = commensurate_weights(&periods)
        .ok_or_else(|| Error::invalid("zeros", "periods are not commensurate; no integer lattice"))?;
    let mut plus = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut minus = plus.clone();
    plus[0] = Complex64::new(1.0, 0.0);
    minus[0] = zeros
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, z| acc * (-z.lambda).powu(z.m));
    for (z, &w) in zeros.iter().zip(&weights) {
        let w = w as usize;
        let inv = z.lambda.inv();
        for _ in 0..z.m {
            for n in w..=n_max {
                let (p, m) = (plus[n - w], minus[n - w]);
                plus[n] += p * inv;
                minus[n] += m * z.lambda;
            }
        }
    }
    Ok(LatticeSeries {
        unit,
        c_plus: plus,
        c_minus: minus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// `Σ_{ℓ>0} max(|C_ℓ^+|, |C_ℓ^-|) ℓ^{-ν}` over the computed range.
    pub partial_sum: f64,
    /// Log-log slope of `max |C_ℓ|` against `ℓ` over the upper half of the
    /// complete range.
    pub slope: f64,
    /// `slope + 1`: the tail is summable for `ν` above this.
    pub min_nu: f64,
    pub fit_points: usize,
}

pub fn growth_check(seq: &ZeroSetSequence, nu: f64) -> GrowthReport {
    let mags: Vec<(f64, f64)> = seq
        .entries
        .iter()
        .filter(|e| e.ell > 0.0)
        .map(|e| (e.ell, e.c_plus.norm().max(e.c_minus.norm())))
        .collect();
    let partial_sum = mags.iter().map(|&(l, c)| c * l.powf(-nu)).sum();
    let hi = seq.complete_below.min(seq.max_ell() + 1.0);
    let pts: Vec<(f64, f64)> = mags
        .iter()
        .copied()
        .filter(|&(l, c)| l >= hi / 2.0 && l < hi && c > 1e-300)
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let slope = log_log_slope(&x, &y).unwrap_or(0.0);
    GrowthReport {
        partial_sum,
        slope,
        min_nu: slope + 1.0,
        fit_points: pts.len(),
    }
}
