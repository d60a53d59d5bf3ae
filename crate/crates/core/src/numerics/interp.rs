//! Cubic Hermite interpolation on a uniform grid.

/// Samples `f(t0 + kΔ)` and `f'(t0 + kΔ)` with piecewise cubic Hermite
/// evaluation in between. Zero outside the tabulated range.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    t0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    pub fn new(t0: f64, step: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        assert!(values.len() >= 2 && step > 0.0);
        HermiteTable {
            t0,
            step,
            values,
            slopes,
        }
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.step * (self.values.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.step;
        if !(0.0..=(self.values.len() - 1) as f64).contains(&u) {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let s = u - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
    }
}
