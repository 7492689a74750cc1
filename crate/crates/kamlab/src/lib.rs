//! Numerical weak KAM theory on the circle.
//!
//! The crate computes Mañé critical values, discrete weak KAM (viscosity)
//! solutions of `H(x, du) = c` via the Lax–Oleinik semigroup, projected Aubry
//! sets with hyperbolicity classification, local unstable-manifold one-forms,
//! and certified smooth critical sub-solutions obtained by perturbing with a
//! sharp potential, localizing near the Aubry set, and gluing.
//!
//! All Hamiltonians are fiber-quadratic Tonelli models
//! `H(x,p) = a(x)(p + P)^2 / 2 + V(x)` on the cotangent bundle of the unit
//! circle, with trigonometric-polynomial `a > 0` and `V`, optionally perturbed
//! by a grid-sampled potential.

pub mod aubry;
pub mod critical;
pub mod grid;
pub mod hyper;
pub mod io;
pub mod model;
pub mod series;
pub mod smooth;
pub mod subsol;
pub mod weakkam;

mod error;

pub use error::KamError;
pub use grid::GridField;
pub use model::{Covector, HamiltonianModel, ModelKind};

/// Default tolerances and scheme parameters, overridable per call site.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Tolerances {
    /// Root solves (bisection, Newton).
    pub root: f64,
    /// Derivative / oracle consistency checks.
    pub deriv: f64,
    /// Sub-solution verification: `min delta >= -verify`.
    pub verify: f64,
    /// Degenerate momentum-interval detection.
    pub eps_deg: f64,
    /// Spectral tests (zero real part, unit modulus).
    pub spectral: f64,
    /// Fiber convexity floor.
    pub convexity_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: 1e-12,
            deriv: 1e-6,
            verify: 1e-4,
            eps_deg: 1e-6,
            spectral: 1e-8,
            convexity_floor: 1e-6,
        }
    }
}

/// Reduce `x` to `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Signed minimal-lift displacement from `a` to `b` on the circle, in
/// `[-1/2, 1/2)`.
pub fn min_lift(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - (d + 0.5).floor()
}
