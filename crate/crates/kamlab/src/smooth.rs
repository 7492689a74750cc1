//! End-to-end construction of a certified smooth critical sub-solution that
//! is strict off the Aubry set: perturb by a sharp potential, take the local
//! solution carried by the unstable manifold near each Aubry point, and glue
//! it with a mollified strict sub-solution.
//!
//! The glue blends slope fields rather than primitives: with C^inf bumps
//! `chi_i` the slope `dw = sum chi_i p_u,i + (1 - sum chi_i) q` is a fiberwise
//! convex combination, so the margin of the blend is at least the blend of
//! the margins. The periodicity defect (the blend need not integrate to zero)
//! is removed by a correction spread where the margin budget is largest.

use crate::aubry::{aubry_estimate, classify_aubry, AubryMode};
use crate::critical::alpha_branch;
use crate::grid::{smoothstep, GridField};
use crate::hyper::{analyze_fixed_point, unstable_oneform, UnstableChart};
use crate::model::{Covector, HamiltonianModel};
use crate::subsol::{
    mollify_subsolution, perturbed_model, sharp_potential, strict_subsolution,
    verify_subsolution, SubsolutionCertificate,
};
use crate::{min_lift, wrap, KamError, Tolerances};

/// Knobs for the smoothing pipeline.
#[derive(Debug, Clone)]
pub struct SmoothOptions {
    pub n: usize,
    /// Flat-zone half-width of the sharp potential.
    pub sharp_width: f64,
    /// Mollification width of the global strict certificate.
    pub moll_width: f64,
    /// Blend annulus: chi = 1 inside r_in, 0 outside r_out.
    pub r_in: f64,
    pub r_out: f64,
    pub chart_radius: f64,
    /// Maximum number of 0.8x radius shrinks on a blend margin failure.
    pub max_shrink: u32,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        SmoothOptions {
            n: 2048,
            sharp_width: 0.02,
            moll_width: 0.005,
            r_in: 0.05,
            r_out: 0.12,
            chart_radius: 0.2,
            max_shrink: 4,
        }
    }
}

/// What the pipeline actually did, for auditing.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PipelineTrace {
    pub alpha: f64,
    pub alpha_perturbed: f64,
    pub sharp_width: f64,
    pub moll_width: f64,
    pub chart_radii: Vec<f64>,
    pub blend_radii: (f64, f64),
    pub shrink_count: u32,
    pub mass_correction: f64,
}

#[derive(Debug, Clone)]
pub struct SmoothSubsolutionResult {
    pub level: f64,
    pub w: GridField,
    pub dw: GridField,
    /// Margin against the ORIGINAL Hamiltonian: `eta = alpha - H(x, dw)`.
    pub eta: GridField,
    pub eta_min: f64,
    /// Minimum of eta over nodes at distance >= r_out from the Aubry set.
    pub strictness_floor: f64,
    /// Maximum of eta over the nodes nearest to Aubry points.
    pub eta_at_aubry: f64,
    pub aubry_points: Vec<f64>,
    /// Discrete derivative sup-norms, orders 1 through 4.
    pub smoothness: Vec<f64>,
    pub trace: PipelineTrace,
}

pub struct GlueOutput {
    pub w: GridField,
    pub dw: GridField,
    pub eta: GridField,
    pub mass_correction: f64,
}

/// Blends chart one-forms into the mollified certificate slope and certifies
/// the result against the original model at level `alpha`.
pub fn glue(
    model: &HamiltonianModel,
    charts: &[UnstableChart],
    u_smooth: &SubsolutionCertificate,
    radii: (f64, f64),
    alpha: f64,
    tol: &Tolerances,
) -> Result<GlueOutput, KamError> {
    let (r_in, r_out) = radii;
    if !(r_in > 0.0 && r_in < r_out) {
        return Err(KamError::Config(format!(
            "blend radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})"
        )));
    }
    let n = u_smooth.q.len();
    let dx = 1.0 / n as f64;
    let chi = |d: f64| 1.0 - smoothstep((d - r_in) / (r_out - r_in));
    let r_psi = (2.0 * r_out).min(0.45);
    let psi = |d: f64| 1.0 - smoothstep((d - r_out) / (r_psi - r_out));
    let mut dw: Vec<f64> = u_smooth.q.values().to_vec();
    for chart in charts {
        if chart.radius + 1e-12 < r_out {
            return Err(KamError::Config(format!(
                "chart radius {} smaller than blend radius {r_out}",
                chart.radius
            )));
        }
        let node_x = wrap(chart.center_node as f64 * dx);
        let c_lift = chart.center_node as f64 * dx + min_lift(node_x, chart.center.x);
        let m = chart.m as isize;
        for j in -m..=m {
            let d = (chart.offset_x(j) - c_lift).abs();
            let c = chi(d);
            if c > 0.0 {
                let node = (chart.center_node + j).rem_euclid(n as isize) as usize;
                dw[node] += c * (chart.p(j) - u_smooth.q.values()[node]);
            }
        }
    }
    let dw = GridField::new(dw);
    let mass = dw.mean();
    // Capacity-weighted correction field: supported away from the blend
    // region, proportional to margin per unit of slope change.
    let dist_to_centers = |x: f64| -> f64 {
        charts
            .iter()
            .map(|c| min_lift(c.center.x, x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let rho = GridField::new(
        (0..n)
            .map(|i| {
                let x = i as f64 * dx;
                let margin = (alpha - model.h(x, dw.values()[i])).max(0.0);
                let sensitivity = model.dh_dp(x, dw.values()[i]).abs() + 1e-2;
                (1.0 - psi(dist_to_centers(x)).min(1.0)) * margin / sensitivity
            })
            .collect(),
    );
    let rho_mean = rho.mean();
    let dw = if mass.abs() > 1e-15 {
        if rho_mean < 1e-12 {
            return Err(KamError::BlendMarginFailure { x: 0.0, eta: 0.0 });
        }
        dw.zip(&rho, |v, r| v - mass * r / rho_mean)
    } else {
        dw
    };
    let eta = GridField::new(
        (0..n)
            .map(|i| alpha - model.h(i as f64 * dx, dw.values()[i]))
            .collect(),
    );
    if eta.min() < -1e-9 {
        let i = eta.argmin();
        return Err(KamError::BlendMarginFailure {
            x: eta.node(i),
            eta: eta.min(),
        });
    }
    let _ = tol;
    let w = dw.add_constant(-dw.mean()).spectral_antiderivative();
    Ok(GlueOutput {
        w,
        dw,
        eta,
        mass_correction: mass,
    })
}

/// Runs the full perturb-localize-glue pipeline on one model.
pub fn smooth_subsolution(
    model: &HamiltonianModel,
    opts: &SmoothOptions,
    tol: &Tolerances,
) -> Result<SmoothSubsolutionResult, KamError> {
    let alpha = alpha_branch(model)
        .map_err(|e| e.at_stage("alpha"))?
        .value;
    let cert = strict_subsolution(model, alpha, opts.n, tol).map_err(|e| e.at_stage("subsolution"))?;
    let report = aubry_estimate(model, alpha, opts.n, tol).map_err(|e| e.at_stage("aubry"))?;
    let report = classify_aubry(model, report, tol);
    if report.mode == AubryMode::FullCircle || report.hypothesis_satisfied != Some(true) {
        return Err(KamError::HypothesisNotSatisfied {
            reason: report.note.unwrap_or_else(|| {
                "Aubry set is not a finite union of hyperbolic fixed points".to_string()
            }),
        });
    }
    let pts: Vec<f64> = report.points.iter().map(|p| p.x).collect();
    let sp = sharp_potential(model, &cert, &pts, opts.sharp_width, tol)
        .map_err(|e| e.at_stage("sharp-potential"))?;
    let pert = perturbed_model(model, &sp.v);
    let alpha_p = alpha_branch(&pert)
        .map_err(|e| e.at_stage("alpha-perturbed"))?
        .value;
    if (alpha_p - alpha).abs() > 1e-6 {
        return Err(KamError::InconsistentLevel { c: alpha_p }.at_stage("alpha-preservation"));
    }
    let cert_p = strict_subsolution(&pert, alpha, opts.n, tol)
        .map_err(|e| e.at_stage("subsolution-perturbed"))?;
    let moll = mollify_subsolution(&pert, &cert_p, opts.moll_width, alpha, tol)
        .map_err(|e| e.at_stage("mollify"))?;

    let mut shrink = 0u32;
    loop {
        let factor = 0.8f64.powi(shrink as i32);
        let (r_in, r_out) = (opts.r_in * factor, opts.r_out * factor);
        let mut charts: Vec<UnstableChart> = Vec::new();
        let mut chart_err: Option<KamError> = None;
        for pt in &report.points {
            let analysis = analyze_fixed_point(&pert, Covector::new(pt.x, pt.p), tol);
            let mut r = opts.chart_radius;
            let chart = loop {
                match unstable_oneform(&pert, &analysis, alpha, r, opts.n) {
                    Ok(c) => break Ok(c),
                    Err(KamError::BranchFold { .. }) if r * 0.5 >= r_out => r *= 0.5,
                    Err(e) => break Err(e),
                }
            };
            match chart {
                Ok(c) => charts.push(c),
                Err(e) => {
                    chart_err = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = chart_err {
            return Err(e.at_stage("unstable-chart"));
        }
        match glue(model, &charts, &moll, (r_in, r_out), alpha, tol) {
            Ok(out) => {
                verify_subsolution(model, &out.w, alpha, tol)
                    .map_err(|e| e.at_stage("final-verification"))?;
                let dist = |x: f64| -> f64 {
                    pts.iter()
                        .map(|&p| min_lift(p, x).abs())
                        .fold(f64::INFINITY, f64::min)
                };
                let n = out.eta.len();
                let mut floor = f64::INFINITY;
                for i in 0..n {
                    if dist(out.eta.node(i)) >= r_out {
                        floor = floor.min(out.eta.values()[i]);
                    }
                }
                let eta_at_aubry = pts
                    .iter()
                    .map(|&p| {
                        let i = (p * n as f64).round() as usize % n;
                        out.eta.values()[i]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let smoothness = (1..=4).map(|k| out.w.discrete_derivative_sup(k)).collect();
                return Ok(SmoothSubsolutionResult {
                    level: alpha,
                    eta_min: out.eta.min(),
                    strictness_floor: floor,
                    eta_at_aubry,
                    aubry_points: pts,
                    smoothness,
                    trace: PipelineTrace {
                        alpha,
                        alpha_perturbed: alpha_p,
                        sharp_width: opts.sharp_width,
                        moll_width: opts.moll_width,
                        chart_radii: charts.iter().map(|c| c.radius).collect(),
                        blend_radii: (r_in, r_out),
                        shrink_count: shrink,
                        mass_correction: out.mass_correction,
                    },
                    w: out.w,
                    dw: out.dw,
                    eta: out.eta,
                });
            }
            Err(KamError::BlendMarginFailure { .. }) if shrink < opts.max_shrink => {
                shrink += 1;
            }
            Err(e) => return Err(e.at_stage("glue")),
        }
    }
}

/// Runs the pipeline at two resolutions and reports the order-4 discrete
/// derivative sup-norms (a smoothness proxy: they must be comparable).
pub fn smoothness_proxy(
    model: &HamiltonianModel,
    opts: &SmoothOptions,
    n1: usize,
    n2: usize,
    tol: &Tolerances,
) -> Result<(f64, f64), KamError> {
    let mut o1 = opts.clone();
    o1.n = n1;
    let mut o2 = opts.clone();
    o2.n = n2;
    let r1 = smooth_subsolution(model, &o1, tol)?;
    let r2 = smooth_subsolution(model, &o2, tol)?;
    Ok((r1.smoothness[3], r2.smoothness[3]))
}
