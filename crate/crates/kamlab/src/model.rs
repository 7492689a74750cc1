//! Fiber-quadratic Tonelli Hamiltonians on the cotangent bundle of the circle
//! and the convex-analysis primitives built on them.

use std::fmt;
use std::path::Path;

use crate::grid::GridField;
use crate::series::TrigSeries;
use crate::{wrap, KamError};

/// A cotangent point: base position (reduced mod 1) and momentum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Covector {
    pub x: f64,
    pub p: f64,
}

impl Covector {
    pub fn new(x: f64, p: f64) -> Self {
        Covector { x: wrap(x), p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ModelKind {
    Mechanical,
    PendulumFamily,
    CustomTrig,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Mechanical => "mechanical",
            ModelKind::PendulumFamily => "pendulum",
            ModelKind::CustomTrig => "custom-trig",
        };
        f.write_str(s)
    }
}

/// A grid-sampled potential perturbation, with derivative grids and smooth
/// periodic (local cubic) off-grid evaluation.
///
/// Interpolation is local, so the perturbation and its sampled derivatives are
/// exactly zero wherever the stencil values vanish. This is what transfers the
/// flatness of a sharp potential to the linearized flow at Aubry fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPotential {
    values: GridField,
    d1: GridField,
    d2: GridField,
}

impl GridPotential {
    pub fn new(values: GridField) -> Self {
        let d1 = fd4_derivative(&values);
        let d2 = fd4_second(&values);
        GridPotential { values, d1, d2 }
    }

    pub fn values(&self) -> &GridField {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        cubic_interp(&self.values, x)
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        cubic_interp(&self.d1, x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        cubic_interp(&self.d2, x)
    }
}

/// Fourth-order central first derivative.
fn fd4_derivative(f: &GridField) -> GridField {
    let n = f.len() as isize;
    let inv = n as f64 / 12.0;
    GridField::new(
        (0..n)
            .map(|i| (-f.at(i + 2) + 8.0 * f.at(i + 1) - 8.0 * f.at(i - 1) + f.at(i - 2)) * inv)
            .collect(),
    )
}

/// Fourth-order central second derivative.
fn fd4_second(f: &GridField) -> GridField {
    let n = f.len() as isize;
    let inv = (n as f64) * (n as f64) / 12.0;
    GridField::new(
        (0..n)
            .map(|i| {
                (-f.at(i + 2) + 16.0 * f.at(i + 1) - 30.0 * f.at(i) + 16.0 * f.at(i - 1)
                    - f.at(i - 2))
                    * inv
            })
            .collect(),
    )
}

/// Periodic cubic (4-point Lagrange) interpolation.
fn cubic_interp(f: &GridField, x: f64) -> f64 {
    let n = f.len() as f64;
    let t = (x - x.floor()) * n;
    let i = t.floor() as isize;
    let s = t - i as f64;
    let (f0, f1, f2, f3) = (f.at(i - 1), f.at(i), f.at(i + 1), f.at(i + 2));
    if f0 == 0.0 && f1 == 0.0 && f2 == 0.0 && f3 == 0.0 {
        return 0.0;
    }
    let a = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let b = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let c = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let d = (s + 1.0) * s * (s - 1.0) / 6.0;
    a * f0 + b * f1 + c * f2 + d * f3
}

/// A Tonelli Hamiltonian `H(x,p) = a(x) (p + P)^2 / 2 + V(x)` with
/// trigonometric-polynomial kinetic weight `a > 0` and potential `V`,
/// optionally perturbed by a grid-sampled potential.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianModel {
    pub kind: ModelKind,
    /// Momentum shift `P` (cohomology-like parameter baked into H).
    pub shift: f64,
    kinetic: TrigSeries,
    potential: TrigSeries,
    extra: Option<GridPotential>,
}

impl HamiltonianModel {
    pub fn custom(kinetic: TrigSeries, potential: TrigSeries, shift: f64) -> Self {
        HamiltonianModel {
            kind: ModelKind::CustomTrig,
            shift,
            kinetic,
            potential,
            extra: None,
        }
    }

    /// Mechanical system `H = p^2/2 + V(x)`.
    pub fn mechanical(potential: TrigSeries) -> Self {
        HamiltonianModel {
            kind: ModelKind::Mechanical,
            shift: 0.0,
            kinetic: TrigSeries::constant(1.0),
            potential,
            extra: None,
        }
    }

    /// Pendulum family `H_P(x,p) = (p + P)^2 / 2 - sin^2(pi x) / 2`.
    pub fn pendulum(shift: f64) -> Self {
        // -sin^2(pi x)/2 = -1/4 + cos(2 pi x)/4
        let potential = TrigSeries::from_terms(&[(0, -0.25), (1, 0.25)], &[]);
        HamiltonianModel {
            kind: ModelKind::PendulumFamily,
            shift,
            kinetic: TrigSeries::constant(1.0),
            potential,
            extra: None,
        }
    }

    pub fn kinetic(&self) -> &TrigSeries {
        &self.kinetic
    }

    pub fn potential(&self) -> &TrigSeries {
        &self.potential
    }

    pub fn perturbation(&self) -> Option<&GridPotential> {
        self.extra.as_ref()
    }

    /// Returns the model with a grid potential added to `H`.
    pub fn with_perturbation(&self, v: &GridField) -> HamiltonianModel {
        let combined = match &self.extra {
            None => v.clone(),
            Some(old) => {
                assert_eq!(old.values().len(), v.len(), "perturbation grids must match");
                old.values().zip(v, |a, b| a + b)
            }
        };
        HamiltonianModel {
            extra: Some(GridPotential::new(combined)),
            ..self.clone()
        }
    }

    /// True when the potential (including perturbation) is flat.
    pub fn has_flat_potential(&self, tol: f64) -> bool {
        self.potential.is_constant(tol)
            && self
                .extra
                .as_ref()
                .is_none_or(|e| e.values().sup_dist(&GridField::constant(e.values().len(), e.values().mean())) <= tol)
    }

    pub fn a(&self, x: f64) -> f64 {
        self.kinetic.eval(x)
    }

    /// Effective potential `V(x)` including any grid perturbation.
    pub fn v_eff(&self, x: f64) -> f64 {
        self.potential.eval(x) + self.extra.as_ref().map_or(0.0, |e| e.eval(x))
    }

    fn dv_eff(&self, x: f64) -> f64 {
        self.potential.deriv1(x) + self.extra.as_ref().map_or(0.0, |e| e.deriv1(x))
    }

    fn d2v_eff(&self, x: f64) -> f64 {
        self.potential.deriv2(x) + self.extra.as_ref().map_or(0.0, |e| e.deriv2(x))
    }

    pub fn h(&self, x: f64, p: f64) -> f64 {
        let q = p + self.shift;
        0.5 * self.a(x) * q * q + self.v_eff(x)
    }

    pub fn dh_dp(&self, x: f64, p: f64) -> f64 {
        self.a(x) * (p + self.shift)
    }

    pub fn dh_dx(&self, x: f64, p: f64) -> f64 {
        let q = p + self.shift;
        0.5 * self.kinetic.deriv1(x) * q * q + self.dv_eff(x)
    }

    pub fn d2h_dp2(&self, x: f64) -> f64 {
        self.a(x)
    }

    pub fn d2h_dx2(&self, x: f64, p: f64) -> f64 {
        let q = p + self.shift;
        0.5 * self.kinetic.deriv2(x) * q * q + self.d2v_eff(x)
    }

    pub fn d2h_dxdp(&self, x: f64, p: f64) -> f64 {
        self.kinetic.deriv1(x) * (p + self.shift)
    }

    /// The Lagrangian `L(x,v) = max_p (p v - H(x,p))`, in closed form for the
    /// quadratic fiber: `L = v^2 / (2 a) - P v - V(x)`.
    pub fn legendre(&self, x: f64, v: f64) -> f64 {
        0.5 * v * v / self.a(x) - self.shift * v - self.v_eff(x)
    }

    /// Unique fiber minimizer and minimum value `(p*, c_min)`.
    pub fn fiber_minimum(&self, x: f64) -> (f64, f64) {
        (-self.shift, self.v_eff(x))
    }

    /// The sub-level slice `{p : H(x,p) <= c} = [p-, p+]`.
    pub fn branch_momenta(&self, x: f64, c: f64, tol: f64) -> Result<(f64, f64), KamError> {
        let c_min = self.v_eff(x);
        let s = c - c_min;
        if s < -tol {
            return Err(KamError::EmptySlice { x, c, c_min });
        }
        let r = (2.0 * s.max(0.0) / self.a(x)).sqrt();
        Ok((-self.shift - r, -self.shift + r))
    }

    /// Global maximum of the effective potential, polished below grid
    /// resolution (equals `max_x min_p H`).
    pub fn max_v_eff(&self, n: usize) -> (f64, f64) {
        let mut best_x = 0.0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..n {
            let x = i as f64 / n as f64;
            let v = self.v_eff(x);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        // Golden-section polish around the best node.
        let dx = 1.0 / n as f64;
        let (mut lo, mut hi) = (best_x - dx, best_x + dx);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = self.v_eff(x1);
        let mut f2 = self.v_eff(x2);
        for _ in 0..200 {
            if hi - lo < 1e-14 {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = self.v_eff(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = self.v_eff(x1);
            }
        }
        let x = wrap(0.5 * (lo + hi));
        (x, self.v_eff(x))
    }

    /// Samples the fiber Hessian on a lattice and reports its minimum.
    pub fn convexity_check(&self, floor: f64) -> Result<ConvexityReport, KamError> {
        let samples = 4096;
        let mut min = f64::INFINITY;
        let mut at = 0.0;
        for i in 0..samples {
            let x = i as f64 / samples as f64;
            let a = self.d2h_dp2(x);
            if a < min {
                min = a;
                at = x;
            }
        }
        if min < floor {
            return Err(KamError::NonConvexFiber { min, floor });
        }
        Ok(ConvexityReport {
            min_hessian: min,
            at_x: at,
            floor,
        })
    }

    /// Parses the line-oriented `key=value` model description format.
    pub fn parse(text: &str) -> Result<HamiltonianModel, KamError> {
        let mut kind = None;
        let mut shift = 0.0;
        let mut a_cos: Vec<(usize, f64)> = Vec::new();
        let mut a_sin: Vec<(usize, f64)> = Vec::new();
        let mut v_cos: Vec<(usize, f64)> = Vec::new();
        let mut v_sin: Vec<(usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| KamError::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| KamError::Config(format!("line {}: bad {}", lineno + 1, what));
            match key {
                "kind" => {
                    kind = Some(match value {
                        "mechanical" => ModelKind::Mechanical,
                        "pendulum" => ModelKind::PendulumFamily,
                        "custom-trig" => ModelKind::CustomTrig,
                        other => {
                            return Err(KamError::Config(format!("unknown kind `{other}`")));
                        }
                    });
                }
                "P" => shift = value.parse().map_err(|_| bad("P"))?,
                _ => {
                    let mut parts = key.split('.');
                    let target = parts.next();
                    let trig = parts.next();
                    let k: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("coefficient index"))?;
                    let coeff: f64 = value.parse().map_err(|_| bad("coefficient"))?;
                    match (target, trig) {
                        (Some("a"), Some("cos")) => a_cos.push((k, coeff)),
                        (Some("a"), Some("sin")) => a_sin.push((k, coeff)),
                        (Some("V"), Some("cos")) => v_cos.push((k, coeff)),
                        (Some("V"), Some("sin")) => v_sin.push((k, coeff)),
                        _ => return Err(KamError::Config(format!("unknown key `{key}`"))),
                    }
                }
            }
        }
        let kind = kind.ok_or_else(|| KamError::Config("missing `kind=`".into()))?;
        let model = match kind {
            ModelKind::PendulumFamily => HamiltonianModel::pendulum(shift),
            ModelKind::Mechanical => {
                if v_cos.is_empty() && v_sin.is_empty() {
                    return Err(KamError::Config("mechanical model needs V coefficients".into()));
                }
                let mut m = HamiltonianModel::mechanical(TrigSeries::from_terms(&v_cos, &v_sin));
                if !a_cos.is_empty() || !a_sin.is_empty() {
                    m.kinetic = TrigSeries::from_terms(&a_cos, &a_sin);
                }
                m
            }
            ModelKind::CustomTrig => {
                let a = if a_cos.is_empty() && a_sin.is_empty() {
                    TrigSeries::constant(1.0)
                } else {
                    TrigSeries::from_terms(&a_cos, &a_sin)
                };
                HamiltonianModel::custom(a, TrigSeries::from_terms(&v_cos, &v_sin), shift)
            }
        };
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<HamiltonianModel, KamError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityReport {
    pub min_hessian: f64,
    pub at_x: f64,
    pub floor: f64,
}
