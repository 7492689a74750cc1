//! Estimation of the projected Aubry set and classification of its parts.
//!
//! In one dimension the structure is dictated by the branch integrals
//! `I± = ∫ p±(x, α) dx`: strictly interior feasibility (`I- < 0 < I+`) pins
//! the Aubry set to the degenerate slices (isolated points where the two
//! branches collapse), while boundary feasibility (`I+ = 0` or `I- = 0`)
//! forces a unique sub-solution slope and the Aubry set is the whole circle.

use crate::critical::slice_width_integral;
use crate::grid::GridField;
use crate::hyper::{analyze_fixed_point, FixedPointAnalysis};
use crate::model::{Covector, HamiltonianModel};
use crate::subsol::SubsolutionCertificate;
use crate::{min_lift, wrap, KamError, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum AubryMode {
    FinitePoints,
    FullCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PointClass {
    Hyperbolic,
    NotHyperbolic,
    Unclassified,
}

#[derive(Debug, Clone)]
pub struct AubryPoint {
    pub x: f64,
    /// Section momentum X(x) = p- = p+ at the degenerate slice.
    pub p: f64,
    pub class: PointClass,
    pub analysis: Option<FixedPointAnalysis>,
}

#[derive(Debug, Clone)]
pub struct AubryReport {
    pub mode: AubryMode,
    pub level: f64,
    pub points: Vec<AubryPoint>,
    pub boundary_case: bool,
    /// Forced slope field (the section X) in full-circle mode.
    pub section: Option<GridField>,
    /// Filled by `classify_aubry`: does the hyperbolicity hypothesis hold?
    pub hypothesis_satisfied: Option<bool>,
    pub note: Option<String>,
}

/// Locates the projected Aubry set at level `alpha` from fiber data alone.
pub fn aubry_estimate(
    model: &HamiltonianModel,
    alpha: f64,
    n: usize,
    _tol: &Tolerances,
) -> Result<AubryReport, KamError> {
    let g = slice_width_integral(model, alpha, 8192);
    let i_plus = -model.shift + g;
    let i_minus = -model.shift - g;
    let feas = 1e-8;
    if i_plus < -feas || i_minus > feas {
        return Err(KamError::InconsistentLevel { c: alpha });
    }
    if i_plus.abs() <= feas || i_minus.abs() <= feas {
        let sign = if i_plus.abs() <= feas { 1.0 } else { -1.0 };
        let section = GridField::sample(n, |x| {
            let s = 2.0 * (alpha - model.v_eff(x)).max(0.0) / model.a(x);
            -model.shift + sign * s.sqrt()
        });
        return Ok(AubryReport {
            mode: AubryMode::FullCircle,
            level: alpha,
            points: Vec::new(),
            boundary_case: true,
            section: Some(section),
            hypothesis_satisfied: None,
            note: None,
        });
    }
    // Interior case: degenerate slices sit where v_eff touches alpha from
    // below, i.e. at local maxima of v_eff within tolerance of the level.
    let coarse = 1e-4;
    let mut points: Vec<AubryPoint> = Vec::new();
    let dx = 1.0 / n as f64;
    for i in 0..n {
        let x = i as f64 * dx;
        let vm = model.v_eff((i as f64 - 1.0) * dx);
        let v0 = model.v_eff(x);
        let vp = model.v_eff((i as f64 + 1.0) * dx);
        if v0 < vm || v0 < vp || alpha - v0 > coarse {
            continue;
        }
        // Golden-section polish of the local maximum.
        let (mut a, mut b) = (x - dx, x + dx);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
        for _ in 0..80 {
            if model.v_eff(c) > model.v_eff(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        let xs = wrap(0.5 * (a + b));
        if (alpha - model.v_eff(xs)).abs() > 1e-6 {
            return Err(KamError::InconsistentLevel { c: alpha });
        }
        if !points.iter().any(|q| min_lift(q.x, xs).abs() < 2.0 * dx) {
            points.push(AubryPoint {
                x: xs,
                p: -model.shift,
                class: PointClass::Unclassified,
                analysis: None,
            });
        }
    }
    if points.is_empty() {
        return Err(KamError::InconsistentLevel { c: alpha });
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(AubryReport {
        mode: AubryMode::FinitePoints,
        level: alpha,
        points,
        boundary_case: false,
        section: None,
        hypothesis_satisfied: None,
        note: None,
    })
}

/// Zero-margin locus of a certificate: node positions where the margin is at
/// most `eps_deg`.
pub fn aubry_from_margin(cert: &SubsolutionCertificate, _tol: &Tolerances) -> Vec<f64> {
    // The eps_deg threshold is applied when the certificate is assembled.
    let nodes = &cert.degenerate_nodes;
    let n = cert.delta.len();
    if nodes.len() == n {
        return (0..n).map(|i| cert.delta.node(i)).collect();
    }
    if nodes.is_empty() {
        return Vec::new();
    }
    // Cluster circularly contiguous runs; represent each by its min-margin node.
    let member: Vec<bool> = {
        let mut m = vec![false; n];
        for &i in nodes {
            m[i] = true;
        }
        m
    };
    let mut reps = Vec::new();
    let mut i = 0;
    // Start scanning at a non-member so wrap-around runs are not split.
    while i < n && member[i] {
        i += 1;
    }
    let start = i;
    let mut k = start;
    loop {
        if member[k % n] {
            let mut best = k % n;
            let mut j = k;
            while member[j % n] {
                if cert.delta.values()[j % n] < cert.delta.values()[best] {
                    best = j % n;
                }
                j += 1;
            }
            reps.push(cert.delta.node(best));
            k = j;
        } else {
            k += 1;
        }
        if k >= start + n {
            break;
        }
    }
    reps.sort_by(|a, b| a.total_cmp(b));
    reps
}

/// One-sided Hausdorff-style set distance on the circle.
pub fn set_distance(a: &[f64], b: &[f64]) -> f64 {
    let one_sided = |from: &[f64], to: &[f64]| -> f64 {
        from.iter()
            .map(|&x| {
                to.iter()
                    .map(|&y| min_lift(y, x).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Enriches a report with per-point hyperbolicity verdicts and the overall
/// hypothesis flag (finite union of hyperbolic fixed points).
pub fn classify_aubry(
    model: &HamiltonianModel,
    mut report: AubryReport,
    tol: &Tolerances,
) -> AubryReport {
    match report.mode {
        AubryMode::FullCircle => {
            report.hypothesis_satisfied = Some(false);
            let smooth_graph = report
                .section
                .as_ref()
                .map(|s| {
                    (0..s.len()).all(|i| report.level - model.v_eff(s.node(i)) > 1e-10)
                })
                .unwrap_or(false);
            report.note = Some(if smooth_graph {
                "full-circle Aubry set: an invariant periodic orbit, non-hyperbolic in one \
                 degree of freedom (unit eigenvalue fills the phase space); the forced section \
                 is a smooth invariant graph, so a smooth solution exists anyway"
                    .to_string()
            } else {
                "full-circle Aubry set: the forced section has square-root kinks at the \
                 degenerate slices; no smooth strict sub-solution exists"
                    .to_string()
            });
        }
        AubryMode::FinitePoints => {
            let mut all_ok = true;
            for pt in &mut report.points {
                // Golden-section location is only sqrt(eps)-accurate; polish
                // with Newton on dH/dx before the fixed-point residual test.
                for _ in 0..40 {
                    let g = model.dh_dx(pt.x, pt.p);
                    let gg = model.d2h_dx2(pt.x, pt.p);
                    if g.abs() < 1e-13 || gg.abs() < 1e-12 {
                        break;
                    }
                    let step = g / gg;
                    if step.abs() > 1e-3 {
                        break;
                    }
                    pt.x = wrap(pt.x - step);
                }
                let fp = Covector::new(pt.x, pt.p);
                let residual = model.dh_dp(fp.x, fp.p).hypot(model.dh_dx(fp.x, fp.p));
                if residual > 1e-10 {
                    pt.class = PointClass::Unclassified;
                    all_ok = false;
                    continue;
                }
                let a = analyze_fixed_point(model, fp, tol);
                pt.class = if a.hyperbolic {
                    PointClass::Hyperbolic
                } else {
                    all_ok = false;
                    PointClass::NotHyperbolic
                };
                pt.analysis = Some(a);
            }
            report.hypothesis_satisfied = Some(all_ok);
        }
    }
    report
}
