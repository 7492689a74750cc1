//! Real trigonometric polynomials in one periodic variable.

use std::f64::consts::PI;

/// Finite trigonometric series `c[0] + sum_k c[k] cos(2πkx) + s[k] sin(2πkx)`.
///
/// `sin[0]` is ignored. Used for the kinetic weight `a(x)` and the potential
/// `V(x)`; derivatives are exact.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrigSeries {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(c: f64) -> Self {
        TrigSeries {
            cos: vec![c],
            sin: vec![0.0],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Builds a series from `(k, coefficient)` entries.
    pub fn from_terms(cos_terms: &[(usize, f64)], sin_terms: &[(usize, f64)]) -> Self {
        let deg = cos_terms
            .iter()
            .chain(sin_terms.iter())
            .map(|&(k, _)| k)
            .max()
            .unwrap_or(0);
        let mut s = TrigSeries {
            cos: vec![0.0; deg + 1],
            sin: vec![0.0; deg + 1],
        };
        for &(k, c) in cos_terms {
            s.cos[k] += c;
        }
        for &(k, c) in sin_terms {
            s.sin[k] += c;
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len()) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for k in 0..self.cos.len().max(self.sin.len()) {
            let w = 2.0 * PI * k as f64 * x;
            if k < self.cos.len() {
                v += self.cos[k] * w.cos();
            }
            if k > 0 && k < self.sin.len() {
                v += self.sin[k] * w.sin();
            }
        }
        v
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for k in 1..self.cos.len().max(self.sin.len()) {
            let om = 2.0 * PI * k as f64;
            let w = om * x;
            if k < self.cos.len() {
                v += -self.cos[k] * om * w.sin();
            }
            if k < self.sin.len() {
                v += self.sin[k] * om * w.cos();
            }
        }
        v
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for k in 1..self.cos.len().max(self.sin.len()) {
            let om = 2.0 * PI * k as f64;
            let w = om * x;
            if k < self.cos.len() {
                v += -self.cos[k] * om * om * w.cos();
            }
            if k < self.sin.len() {
                v += -self.sin[k] * om * om * w.sin();
            }
        }
        v
    }

    pub fn add_constant(&mut self, c: f64) {
        self.cos[0] += c;
    }

    /// True when every oscillating coefficient is below `tol`.
    pub fn is_constant(&self, tol: f64) -> bool {
        self.cos[1..].iter().chain(self.sin[1..].iter()).all(|c| c.abs() <= tol)
    }
}
