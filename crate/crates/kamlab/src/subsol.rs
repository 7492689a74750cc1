//! Construction and verification of (strict) sub-solutions, sharp potentials,
//! mollified certificates, and perturbed models.
//!
//! The max-margin strict sub-solution on the circle blends the two momentum
//! branches: `q = lambda p+ + (1 - lambda) p-` with `lambda` chosen so that
//! `int q = 0`. Fiber convexity makes the blend strictly sub-critical wherever
//! the branches are separated, with margin
//! `delta(x) = (c - V_eff(x)) (1 - (2 lambda - 1)^2)` for quadratic fibers.

use crate::critical::slice_width_integral;
use crate::grid::GridField;
use crate::model::HamiltonianModel;
use crate::{KamError, Tolerances};

/// Which branch integral degenerated in the boundary case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundaryKind {
    /// `int p+ = 0`: the upper branch is forced.
    UpperForced,
    /// `int p- = 0`: the lower branch is forced.
    LowerForced,
}

/// A candidate sub-solution with its pointwise margin and metadata.
#[derive(Debug, Clone)]
pub struct SubsolutionCertificate {
    pub level: f64,
    pub u: GridField,
    /// Slope field used for certification (`du`).
    pub q: GridField,
    /// Margin field `delta(x) = c - H(x, q(x))`.
    pub delta: GridField,
    pub min_margin: f64,
    /// Node indices where the margin is at most `eps_deg`.
    pub degenerate_nodes: Vec<usize>,
    pub boundary: Option<BoundaryKind>,
    /// Branch blending weight, when the certificate came from blending.
    pub lambda: Option<f64>,
    /// Reported margin-loss bound of the last mollification, if any.
    pub margin_drop_bound: Option<f64>,
}

impl SubsolutionCertificate {
    fn assemble(
        model: &HamiltonianModel,
        level: f64,
        u: GridField,
        q: GridField,
        boundary: Option<BoundaryKind>,
        lambda: Option<f64>,
        tol: &Tolerances,
    ) -> Self {
        let n = q.len();
        let delta = GridField::new(
            (0..n)
                .map(|i| level - model.h(q.node(i), q.values()[i]))
                .collect(),
        );
        let min_margin = delta.min();
        let degenerate_nodes = (0..n)
            .filter(|&i| delta.values()[i] <= tol.eps_deg)
            .collect();
        SubsolutionCertificate {
            level,
            u,
            q,
            delta,
            min_margin,
            degenerate_nodes,
            boundary,
            lambda,
            margin_drop_bound: None,
        }
    }
}

/// Builds the max-margin strict sub-solution at level `c` by branch blending.
pub fn strict_subsolution(
    model: &HamiltonianModel,
    c: f64,
    n: usize,
    tol: &Tolerances,
) -> Result<SubsolutionCertificate, KamError> {
    let g = slice_width_integral(model, c, 8192);
    let i_plus = -model.shift + g;
    let i_minus = -model.shift - g;
    let feas_tol = 1e-8;
    if i_plus < -feas_tol || i_minus > feas_tol {
        return Err(KamError::NoSubsolutionAtLevel { c });
    }
    let branch = |x: f64, sign: f64| -> f64 {
        let s = 2.0 * (c - model.v_eff(x)).max(0.0) / model.a(x);
        -model.shift + sign * s.sqrt()
    };
    let boundary = if i_plus.abs() <= feas_tol {
        Some(BoundaryKind::UpperForced)
    } else if i_minus.abs() <= feas_tol {
        Some(BoundaryKind::LowerForced)
    } else {
        None
    };
    let (q, lambda) = match boundary {
        Some(BoundaryKind::UpperForced) => (GridField::sample(n, |x| branch(x, 1.0)), None),
        Some(BoundaryKind::LowerForced) => (GridField::sample(n, |x| branch(x, -1.0)), None),
        None => {
            let lambda = -i_minus / (i_plus - i_minus);
            let w = 2.0 * lambda - 1.0;
            (
                GridField::sample(n, |x| {
                    let s = 2.0 * (c - model.v_eff(x)).max(0.0) / model.a(x);
                    -model.shift + w * s.sqrt()
                }),
                Some(lambda),
            )
        }
    };
    let q0 = q.mean();
    let u = q.add_constant(-q0).spectral_antiderivative();
    Ok(SubsolutionCertificate::assemble(
        model, c, u, q, boundary, lambda, tol,
    ))
}

/// Differentiates `u` and checks the margin `c - H(x, du)` pointwise.
pub fn verify_subsolution(
    model: &HamiltonianModel,
    u: &GridField,
    c: f64,
    tol: &Tolerances,
) -> Result<SubsolutionCertificate, KamError> {
    let q = u.gradient_central();
    let cert = SubsolutionCertificate::assemble(model, c, u.clone(), q, None, None, tol);
    if cert.min_margin < -tol.verify {
        let i = cert.delta.argmin();
        return Err(KamError::VerificationFailed {
            x: cert.delta.node(i),
            margin: cert.min_margin,
        });
    }
    Ok(cert)
}

/// A sharp potential: null on the Aubry estimate, positive away from it,
/// dominated by half the certificate margin.
#[derive(Debug, Clone)]
pub struct SharpPotential {
    pub v: GridField,
    /// Nodes where the potential (and all sampled derivatives) vanish.
    pub flat_nodes: Vec<usize>,
    /// Radius beyond which positivity is guaranteed.
    pub r_flat: f64,
    /// Minimum value over nodes farther than `r_flat` from the Aubry set.
    pub positive_floor: f64,
    pub width: f64,
}

/// `s exp(-eps/s)` for `s > 0`, zero otherwise: C^inf-flat at zero, below `s`.
fn flatten(s: f64, eps: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        s * (-eps / s).exp()
    }
}

const FLATTEN_EPS: f64 = 1e-2;

/// Builds a sharp potential from a strict certificate:
/// `V = flatten(mollify(erode(delta, 2w), w)) / 2`.
pub fn sharp_potential(
    _model: &HamiltonianModel,
    cert: &SubsolutionCertificate,
    aubry_points: &[f64],
    width: f64,
    tol: &Tolerances,
) -> Result<SharpPotential, KamError> {
    if cert.boundary.is_some() || cert.delta.max() <= tol.eps_deg {
        return Err(KamError::BoundaryCase);
    }
    let delta = cert.delta.map(|d| d.max(0.0));
    let eroded = delta.erode(2.0 * width);
    let smooth = eroded.mollify(width);
    let v = smooth.map(|s| 0.5 * flatten(s, FLATTEN_EPS));
    let n = v.len();
    // Domination check: 2 V <= delta pointwise.
    for i in 0..n {
        let excess = 2.0 * v.values()[i] - cert.delta.values()[i];
        if excess > tol.verify {
            return Err(KamError::VerificationFailed {
                x: v.node(i),
                margin: -excess,
            });
        }
    }
    let dist_to_aubry = |x: f64| -> f64 {
        aubry_points
            .iter()
            .map(|&a| crate::min_lift(a, x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let r_flat = 3.0 * width;
    let flat_nodes: Vec<usize> = (0..n).filter(|&i| v.values()[i] == 0.0).collect();
    let mut floor = f64::INFINITY;
    for i in 0..n {
        let x = v.node(i);
        let d = dist_to_aubry(x);
        if d <= 0.5 * width && v.values()[i] != 0.0 {
            return Err(KamError::VerificationFailed {
                x,
                margin: -v.values()[i],
            });
        }
        if d >= r_flat {
            floor = floor.min(v.values()[i]);
        }
    }
    Ok(SharpPotential {
        v,
        flat_nodes,
        r_flat,
        positive_floor: floor,
        width,
    })
}

/// The Hamiltonian `H + V` for a grid potential `V`.
pub fn perturbed_model(model: &HamiltonianModel, v: &GridField) -> HamiltonianModel {
    model.with_perturbation(v)
}

/// Mollifies a certificate; the slope field is mollified with the same kernel
/// so it remains the exact derivative of the mollified primitive.
pub fn mollify_subsolution(
    model: &HamiltonianModel,
    cert: &SubsolutionCertificate,
    eps: f64,
    c: f64,
    tol: &Tolerances,
) -> Result<SubsolutionCertificate, KamError> {
    let u = cert.u.mollify(eps);
    let q = cert.q.mollify(eps);
    // Jensen/modulus bound on the margin loss over the kernel support.
    let n = cert.q.len();
    let mut omega: f64 = 0.0;
    for i in 0..n {
        omega = omega.max(model.dh_dx(cert.q.node(i), cert.q.values()[i]).abs());
    }
    let bound = omega * eps;
    let mut out =
        SubsolutionCertificate::assemble(model, c, u, q, cert.boundary, cert.lambda, tol);
    out.margin_drop_bound = Some(bound);
    if out.min_margin < -tol.verify {
        let i = out.delta.argmin();
        return Err(KamError::VerificationFailed {
            x: out.delta.node(i),
            margin: out.min_margin,
        });
    }
    Ok(out)
}
