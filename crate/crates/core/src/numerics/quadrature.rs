//! Fixed Gauss–Legendre rules and adaptive Gauss–Kronrod integration.
#![allow(clippy::excessive_precision)]

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LegendreRule {
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn integrate_complex(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * w;
        }
        acc * half
    }
}

/// Cached n-point Gauss–Legendre rule.
pub fn legendre(n: usize) -> Arc<LegendreRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LegendreRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(n.max(2)).expect("degree >= 2");
            let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
            Arc::new(LegendreRule { nodes, weights })
        })
        .clone()
}

// Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or the subdivision
/// limit is hit.
pub fn adaptive(a: f64, b: f64, abs_tol: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = kronrod15(a, b, &mut f);
    let mut pieces = BinaryHeap::new();
    pieces.push(Piece {
        lo: a,
        hi: b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && pieces.len() < MAX_INTERVALS {
        let p = pieces.pop().expect("nonempty");
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            pieces.push(p);
            break;
        }
        let (v1, e1) = kronrod15(p.lo, mid, &mut f);
        let (v2, e2) = kronrod15(mid, p.hi, &mut f);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        pieces.push(Piece {
            lo: p.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        pieces.push(Piece {
            lo: mid,
            hi: p.hi,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of the running updates
    let value = pieces.iter().map(|p| p.value).sum();
    let error = pieces.iter().map(|p| p.error).sum();
    Integral { value, error }
}

/// Subinterval ordered by its error estimate.
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration split at the given breakpoints (must be sorted).
pub fn adaptive_with_breaks(breaks: &[f64], abs_tol: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> Integral {
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let r = adaptive(w[0], w[1], abs_tol / (breaks.len() as f64), rel_tol, &mut f);
        value += r.value;
        error += r.error;
    }
    Integral { value, error }
}

/// Integral over the whole real line via the map `x = c + s·u/(1-u²)`.
pub fn adaptive_real_line(
    center: f64,
    scale: f64,
    abs_tol: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> Integral {
    let g = |u: f64| {
        let d = 1.0 - u * u;
        if d <= 0.0 {
            return 0.0;
        }
        let x = center + scale * u / d;
        let jac = scale * (1.0 + u * u) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(-1.0, 1.0, abs_tol, rel_tol, g)
}
