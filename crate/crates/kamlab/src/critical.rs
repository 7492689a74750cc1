//! The Mañé critical value by two independent routes.
//!
//! `alpha_branch` specializes the sub-solution characterization to the circle:
//! a sub-solution at level `c` exists iff the slice `{H <= c}` is non-empty on
//! every fiber and the mean-zero constraint `0 in [int p-, int p+]` is
//! feasible. With `p± = -P ± sqrt(2 (c - V)/a)` this reduces to
//! `G(c) := int sqrt(2 (c - V)/a) dx >= |P|`, and `G` is nondecreasing, so a
//! bisection pins `alpha`. `alpha_lo` instead measures the asymptotic drift of
//! the Lax–Oleinik iteration at level 0.

use crate::model::HamiltonianModel;
use crate::weakkam::{weak_kam_solve, SolveOptions};
use crate::KamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum AlphaMethod {
    BranchBisection,
    LaxOleinikDrift,
}

impl std::fmt::Display for AlphaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlphaMethod::BranchBisection => f.write_str("branch-bisection"),
            AlphaMethod::LaxOleinikDrift => f.write_str("lo-drift"),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AlphaEstimate {
    pub value: f64,
    pub method: AlphaMethod,
    pub error_bound: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Composite 4-point Gauss–Legendre quadrature of
/// `sqrt(2 (c - V_eff)^+ / a)` over the circle.
pub fn slice_width_integral(model: &HamiltonianModel, c: f64, subintervals: usize) -> f64 {
    // Nodes and weights for [-1/2, 1/2].
    const T: [f64; 4] = [
        -0.430_568_155_797_026_3,
        -0.169_990_521_792_428_13,
        0.169_990_521_792_428_13,
        0.430_568_155_797_026_3,
    ];
    const W: [f64; 4] = [
        0.173_927_422_568_726_93,
        0.326_072_577_431_273_07,
        0.326_072_577_431_273_07,
        0.173_927_422_568_726_93,
    ];
    let m = subintervals;
    let dx = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        let xc = (i as f64 + 0.5) * dx;
        for j in 0..4 {
            let x = xc + T[j] * dx;
            let s = 2.0 * (c - model.v_eff(x)).max(0.0) / model.a(x);
            total += W[j] * s.sqrt();
        }
    }
    total * dx
}

const QUAD_SUBINTERVALS: usize = 8192;

/// Critical value by bisection on the branch feasibility test.
pub fn alpha_branch(model: &HamiltonianModel) -> Result<AlphaEstimate, KamError> {
    let (_, maxv) = model.max_v_eff(8192);
    let target = model.shift.abs();
    let g = |c: f64| slice_width_integral(model, c, QUAD_SUBINTERVALS);
    let tol = 1e-10;
    if g(maxv) >= target {
        // Touching case: the slice constraint is already feasible at
        // c = max V, which is the smallest admissible level.
        return Ok(AlphaEstimate {
            value: maxv,
            method: AlphaMethod::BranchBisection,
            error_bound: 1e-9,
            iterations: 0,
            bracket: (maxv, maxv),
        });
    }
    let mut hi = maxv + (1.0 + target) * (1.0 + target) + 1.0;
    let mut doublings = 0;
    while g(hi) < target {
        hi = maxv + 2.0 * (hi - maxv);
        doublings += 1;
        if doublings > 60 {
            return Err(KamError::BracketFailure { c_up: hi });
        }
    }
    let mut lo = maxv;
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations > 200 {
            break;
        }
    }
    Ok(AlphaEstimate {
        value: hi,
        method: AlphaMethod::BranchBisection,
        error_bound: (hi - lo).max(1e-9),
        iterations,
        bracket: (lo, hi),
    })
}

/// Critical value as the negated asymptotic drift of the Lax–Oleinik
/// iteration at level 0.
pub fn alpha_lo(model: &HamiltonianModel, opts: &SolveOptions) -> Result<AlphaEstimate, KamError> {
    let sol = weak_kam_solve(model, 0.0, opts)?;
    Ok(AlphaEstimate {
        value: -sol.drift,
        method: AlphaMethod::LaxOleinikDrift,
        error_bound: (sol.drift_err + 10.0 * opts.h * opts.h).max(1e-4),
        iterations: sol.iterations,
        bracket: (-sol.drift - sol.drift_err, -sol.drift + sol.drift_err),
    })
}

/// Runs both methods and returns the (more accurate) branch value when they
/// agree within combined error bounds.
pub fn alpha(model: &HamiltonianModel, opts: &SolveOptions) -> Result<AlphaEstimate, KamError> {
    let branch = alpha_branch(model)?;
    let lo = alpha_lo(model, opts)?;
    let budget = (branch.error_bound + lo.error_bound).max(5e-3);
    if (branch.value - lo.value).abs() > budget {
        return Err(KamError::MethodDisagreement {
            branch: branch.value,
            lo: lo.value,
        });
    }
    Ok(branch)
}
