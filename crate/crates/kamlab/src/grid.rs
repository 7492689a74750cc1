//! Scalar fields on a uniform periodic grid and their discrete calculus.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// A scalar field sampled at the nodes `x_i = i/N` of the unit circle.
///
/// `N` must be a power of two, at least 16. Indexing is modulo `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 16 && n.is_power_of_two(), "grid size must be a power of two >= 16");
        assert!(values.iter().all(|v| v.is_finite()), "grid values must be finite");
        GridField { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(vec![c; n])
    }

    /// Samples a function at the grid nodes.
    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::new((0..n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at index `i` modulo `N`.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.len() as isize;
        self.values[(i.rem_euclid(n)) as usize]
    }

    /// Linear interpolation at an arbitrary (wrapped) position.
    pub fn eval_linear(&self, x: f64) -> f64 {
        let n = self.len() as f64;
        let t = (x - x.floor()) * n;
        let i = t.floor() as isize;
        let frac = t - i as f64;
        (1.0 - frac) * self.at(i) + frac * self.at(i + 1)
    }

    /// Periodic-exact quadrature over the circle (rectangle rule).
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.integrate()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn argmin(&self) -> usize {
        let mut k = 0;
        for i in 1..self.len() {
            if self.values[i] < self.values[k] {
                k = i;
            }
        }
        k
    }

    pub fn argmax(&self) -> usize {
        let mut k = 0;
        for i in 1..self.len() {
            if self.values[i] > self.values[k] {
                k = i;
            }
        }
        k
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        assert_eq!(self.len(), other.len());
        GridField::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add_constant(&self, c: f64) -> GridField {
        self.map(|v| v + c)
    }

    pub fn sup_dist(&self, other: &GridField) -> f64 {
        self.zip(other, |a, b| (a - b).abs()).max()
    }

    /// Second-order central-difference derivative.
    pub fn gradient_central(&self) -> GridField {
        let n = self.len() as isize;
        let inv2dx = 0.5 * n as f64;
        GridField::new(
            (0..n)
                .map(|i| (self.at(i + 1) - self.at(i - 1)) * inv2dx)
                .collect(),
        )
    }

    /// Spectral (Fourier) derivative; exact on resolved trigonometric modes.
    pub fn gradient_spectral(&self) -> GridField {
        let mut coef = self.fft();
        let n = self.len();
        for (k, c) in coef.iter_mut().enumerate() {
            let freq = signed_freq(k, n);
            // Nyquist derivative is set to zero for a real output.
            let om = if 2 * k == n { 0.0 } else { 2.0 * PI * freq as f64 };
            *c *= Complex::new(0.0, om);
        }
        inverse_real(coef)
    }

    /// Periodic antiderivative of a (numerically) mean-zero field, anchored so
    /// the node-0 value is zero.
    pub fn spectral_antiderivative(&self) -> GridField {
        let mut coef = self.fft();
        let n = self.len();
        coef[0] = Complex::new(0.0, 0.0);
        for (k, c) in coef.iter_mut().enumerate().skip(1) {
            let freq = signed_freq(k, n) as f64;
            let om = 2.0 * PI * freq;
            if 2 * k == n {
                *c = Complex::new(0.0, 0.0);
            } else {
                *c /= Complex::new(0.0, om);
            }
        }
        let g = inverse_real(coef);
        let g0 = g.values[0];
        g.map(|v| v - g0)
    }

    /// Mollification by periodic convolution with a compactly supported
    /// `C^inf` bump of the given half-width. Preserves constants exactly.
    pub fn mollify(&self, width: f64) -> GridField {
        assert!(width > 0.0 && width < 0.25, "mollifier width must lie in (0, 1/4)");
        let n = self.len();
        let m = (width * n as f64).floor() as isize;
        if m == 0 {
            return self.clone();
        }
        let mut weights = Vec::with_capacity((2 * m + 1) as usize);
        for j in -m..=m {
            let t = j as f64 / (width * n as f64);
            weights.push(bump(t));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        GridField::new(
            (0..n as isize)
                .map(|i| {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(jj, w)| w * self.at(i + jj as isize - m))
                        .sum()
                })
                .collect(),
        )
    }

    /// Morphological erosion: pointwise minimum over a window of half-width `r`.
    pub fn erode(&self, r: f64) -> GridField {
        let n = self.len();
        let m = (r * n as f64).ceil() as isize;
        GridField::new(
            (0..n as isize)
                .map(|i| {
                    (-m..=m)
                        .map(|j| self.at(i + j))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect(),
        )
    }

    /// Sup-norm of the order-`k` forward finite difference divided by `dx^k`
    /// (a discrete proxy for the k-th derivative).
    pub fn discrete_derivative_sup(&self, order: usize) -> f64 {
        let mut d = self.values.clone();
        let n = self.len();
        let inv_dx = n as f64;
        for _ in 0..order {
            let prev = d.clone();
            for i in 0..n {
                d[i] = (prev[(i + 1) % n] - prev[i]) * inv_dx;
            }
        }
        d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn fft(&self) -> Vec<Complex<f64>> {
        let n = self.len();
        let fft = planner(n, false);
        let mut buf: Vec<Complex<f64>> =
            self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for c in &mut buf {
            *c /= n as f64;
        }
        buf
    }
}

/// Trigonometric interpolant of a grid field, for smooth off-grid evaluation.
pub struct TrigInterp {
    coef: Vec<Complex<f64>>,
}

impl TrigInterp {
    pub fn new(field: &GridField) -> Self {
        TrigInterp { coef: field.fft() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coef.len();
        let mut v = self.coef[0].re;
        // Conjugate symmetry of the real signal: sum positive modes twice.
        for k in 1..n / 2 {
            let w = 2.0 * PI * k as f64 * x;
            let c = self.coef[k];
            v += 2.0 * (c.re * w.cos() - c.im * w.sin());
        }
        let cn = self.coef[n / 2];
        v += cn.re * (PI * n as f64 * x).cos();
        v
    }
}

fn planner(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn inverse_real(mut coef: Vec<Complex<f64>>) -> GridField {
    let n = coef.len();
    let ifft = planner(n, true);
    ifft.process(&mut coef);
    GridField::new(coef.into_iter().map(|c| c.re).collect())
}

fn signed_freq(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// The standard bump profile `exp(-1/(1-t^2))` on `(-1,1)`, zero outside.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Smoothstep built from `exp(-1/t)`: 0 for `t <= 0`, 1 for `t >= 1`, C^inf.
pub fn smoothstep(t: f64) -> f64 {
    fn f(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let a = f(t);
    let b = f(1.0 - t);
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrate_constant_is_exact() {
        let f = GridField::constant(64, 3.0);
        assert_eq!(f.integrate(), 3.0);
    }

    #[test]
    fn integrate_full_period_sine() {
        let f = GridField::sample(2048, |x| (2.0 * PI * x).sin());
        assert!(f.integrate().abs() < 1e-12);
    }

    #[test]
    fn integrate_half_sine_matches_two_over_pi() {
        let f = GridField::sample(2048, |x| (PI * x).sin());
        assert!((f.integrate() - 2.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = GridField::constant(64, 5.0);
        assert_eq!(f.gradient_central().max_abs(), 0.0);
        assert!(f.gradient_spectral().max_abs() < 1e-12);
    }

    #[test]
    fn spectral_gradient_exact_on_sine() {
        let f = GridField::sample(256, |x| (2.0 * PI * x).sin());
        let g = f.gradient_spectral();
        let exact = GridField::sample(256, |x| 2.0 * PI * (2.0 * PI * x).cos());
        assert!(g.sup_dist(&exact) < 1e-10);
    }

    #[test]
    fn gradient_of_sawtooth_is_bounded() {
        let f = GridField::sample(256, |x| if x < 0.5 { x } else { x - 1.0 });
        let g = f.gradient_central();
        assert!(g.max_abs().is_finite());
        // Slope report flags the jump: max slope far exceeds the smooth slope 1.
        assert!(g.max_abs() > 10.0);
    }

    #[test]
    fn gradient_integrates_to_zero() {
        let f = GridField::sample(128, |x| (2.0 * PI * x).cos() + 0.3 * (4.0 * PI * x).sin());
        assert!(f.gradient_central().integrate().abs() < 1e-14);
        assert!(f.gradient_spectral().integrate().abs() < 1e-14);
    }

    #[test]
    fn mollify_preserves_constants_and_commutes_with_shifts() {
        let c = GridField::constant(128, 2.5);
        assert!(c.mollify(0.05).sup_dist(&c) < 1e-15);
        let f = GridField::sample(128, |x| (2.0 * PI * x).cos());
        let a = f.add_constant(4.0).mollify(0.03);
        let b = f.mollify(0.03).add_constant(4.0);
        assert!(a.sup_dist(&b) < 1e-12);
    }

    #[test]
    fn mollify_sup_change_bounded_by_lip_times_width() {
        // Tent field |x - 1/2| has Lipschitz constant 1.
        let f = GridField::sample(1024, |x| (x - 0.5).abs());
        let m = f.mollify(0.01);
        assert!(m.sup_dist(&f) <= 0.01 + 1e-12);
    }

    #[test]
    fn antiderivative_inverts_spectral_gradient() {
        let f = GridField::sample(256, |x| (2.0 * PI * x).sin() + 0.2 * (6.0 * PI * x).cos());
        let g = f.gradient_spectral().spectral_antiderivative();
        let f0 = f.add_constant(-f.values()[0]);
        assert!(g.sup_dist(&f0) < 1e-10);
    }

    #[test]
    fn trig_interp_matches_nodes_and_smooth_values() {
        let f = GridField::sample(64, |x| (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin());
        let t = TrigInterp::new(&f);
        for i in (0..64).step_by(7) {
            assert!((t.eval(i as f64 / 64.0) - f.values()[i]).abs() < 1e-12);
        }
        let x = 0.1234;
        let exact = (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin();
        assert!((t.eval(x) - exact).abs() < 1e-12);
    }
}
