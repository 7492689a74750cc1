//! Discrete Lax–Oleinik semigroup, weak KAM solutions, backward calibrated
//! curves, and the calibration-defect checker.
//!
//! One step of the semigroup is the inf-convolution
//! `(T_h u)(x) = min_y [ u(y) + h L((x+y)/2, (x-y)/h) ] + c h`
//! over a minimal-lift search window, with the Lagrangian evaluated at the
//! segment midpoint. Candidates live on a fixed refined sub-grid and `u` is
//! interpolated linearly, so the step is exactly monotone, commutes with
//! constants, and is non-expansive in the sup norm.

use crate::grid::{GridField, TrigInterp};
use crate::model::HamiltonianModel;
use crate::KamError;

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveOptions {
    /// Grid resolution (power of two).
    pub n: usize,
    /// Time step of the semigroup.
    pub h: f64,
    /// Sub-grid refinement factor for the candidate set.
    pub refine: usize,
    pub max_sweeps: usize,
    /// Stop when the sup-change of normalized iterates falls below this.
    pub residual_tol: f64,
    /// Number of sweeps over which the drift is averaged.
    pub drift_window: usize,
    /// Declare the drift settled when consecutive window means agree to this.
    pub drift_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n: 2048,
            h: 0.01,
            refine: 2,
            max_sweeps: 6000,
            residual_tol: 1e-11,
            drift_window: 100,
            drift_tol: 1e-8,
        }
    }
}

/// A discrete weak KAM solution candidate at level `c`.
#[derive(Debug, Clone)]
pub struct WeakKamSolution {
    pub c: f64,
    pub h: f64,
    pub u: GridField,
    /// Sup-change of the normalized iterates at the last sweep.
    pub residual: f64,
    /// Average per-step shift divided by `h`; estimates `c - alpha(H)`.
    pub drift: f64,
    /// Spread of the windowed drift estimates.
    pub drift_err: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A time-sampled curve on the circle, stored with winding (lifted positions).
#[derive(Debug, Clone)]
pub struct DiscreteCurve {
    pub t0: f64,
    pub h: f64,
    /// Lifted positions; consecutive displacements are minimal lifts.
    pub xs: Vec<f64>,
}

impl DiscreteCurve {
    pub fn duration(&self) -> f64 {
        (self.xs.len().saturating_sub(1)) as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        *self.xs.last().expect("curve is non-empty")
    }
}

/// Precomputed tables for repeated Lax–Oleinik sweeps on one model.
pub struct LaxOleinik {
    n: usize,
    r: usize,
    h: f64,
    c: f64,
    v_max: f64,
    /// Window half-width in refined-grid units.
    w: isize,
    /// `1/(2 a)` and `V_eff` on the midpoint grid of size `2 r n`.
    inv2a_mid: Vec<f64>,
    v_mid: Vec<f64>,
    shift: f64,
}

impl LaxOleinik {
    pub fn new(model: &HamiltonianModel, n: usize, h: f64, c: f64, refine: usize) -> Self {
        assert!(h > 0.0);
        let r = refine.max(1);
        let v_max = a_priori_speed_bound(model, c, n);
        assert!(
            v_max * h < 0.45,
            "time step too large for the a-priori speed bound"
        );
        let m = 2 * r * n;
        let mut inv2a_mid = Vec::with_capacity(m);
        let mut v_mid = Vec::with_capacity(m);
        for i in 0..m {
            let x = i as f64 / m as f64;
            inv2a_mid.push(0.5 / model.a(x));
            v_mid.push(model.v_eff(x));
        }
        let w = (v_max * h * (r * n) as f64).ceil() as isize;
        LaxOleinik {
            n,
            r,
            h,
            c,
            v_max,
            w,
            inv2a_mid,
            v_mid,
            shift: model.shift,
        }
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// One sweep. Returns the stepped field and whether some minimizer sat on
    /// the window boundary.
    fn sweep(&self, u: &GridField) -> (GridField, bool) {
        let (n, r) = (self.n, self.r);
        let rn = r * n;
        let m2 = 2 * rn;
        // u on the refined grid, linear interpolation.
        let mut u_ref = vec![0.0; rn];
        for i in 0..n {
            let a = u.values()[i];
            let b = u.values()[(i + 1) % n];
            for s in 0..r {
                let frac = s as f64 / r as f64;
                u_ref[i * r + s] = (1.0 - frac) * a + frac * b;
            }
        }
        let mut out = vec![0.0; n];
        let mut boundary_hit = false;
        let inv_rnh = 1.0 / (rn as f64 * self.h);
        for (i, o) in out.iter_mut().enumerate() {
            let base_u = (i * r) as isize;
            let base_mid = (2 * i * r) as isize;
            let mut best = f64::INFINITY;
            let mut best_k = 0isize;
            // Candidates ordered by |displacement| so ties resolve toward
            // the smaller one deterministically.
            for a in 0..=(2 * self.w) {
                let k = if a % 2 == 0 { a / 2 } else { -(a / 2 + 1) };
                let v = k as f64 * inv_rnh;
                let ui = u_ref[(base_u - k).rem_euclid(rn as isize) as usize];
                let mid = (base_mid - k).rem_euclid(m2 as isize) as usize;
                let lag = v * v * self.inv2a_mid[mid] - self.shift * v - self.v_mid[mid];
                let f = ui + self.h * lag;
                if f < best {
                    best = f;
                    best_k = k;
                }
            }
            if best_k.unsigned_abs() as isize == self.w {
                boundary_hit = true;
            }
            *o = best + self.c * self.h;
        }
        (GridField::new(out), boundary_hit)
    }
}

/// Speed bound `1 + max |dH/dp|` over the slice at level `max(c, max V) + 1`.
fn a_priori_speed_bound(model: &HamiltonianModel, c: f64, n: usize) -> f64 {
    let (_, maxv) = model.max_v_eff(n);
    let cw = c.max(maxv) + 1.0;
    let mut vm: f64 = 0.0;
    for i in 0..n {
        let x = i as f64 / n as f64;
        // |dH/dp| at p+- equals sqrt(2 a (c_w - V)).
        let s = 2.0 * model.a(x) * (cw - model.v_eff(x)).max(0.0);
        vm = vm.max(s.sqrt());
    }
    1.0 + vm
}

/// Applies one Lax–Oleinik step `T_h u + c h`.
pub fn lax_oleinik_step(
    model: &HamiltonianModel,
    u: &GridField,
    h: f64,
    c: f64,
) -> Result<GridField, KamError> {
    let op = LaxOleinik::new(model, u.len(), h, c, 2);
    let (out, boundary) = op.sweep(u);
    if boundary {
        return Err(KamError::WindowTooSmall { x: f64::NAN });
    }
    Ok(out)
}

/// Iterates the normalized semigroup until the iterates settle.
pub fn weak_kam_solve(
    model: &HamiltonianModel,
    c: f64,
    opts: &SolveOptions,
) -> Result<WeakKamSolution, KamError> {
    let op = LaxOleinik::new(model, opts.n, opts.h, c, opts.refine);
    let mut u = GridField::zeros(opts.n);
    let mut shifts: Vec<f64> = Vec::with_capacity(opts.max_sweeps);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for sweep in 0..opts.max_sweeps {
        let (mut next, boundary) = op.sweep(&u);
        if boundary {
            return Err(KamError::WindowTooSmall { x: f64::NAN });
        }
        let shift = next.values()[0];
        next = next.add_constant(-shift);
        shifts.push(shift);
        residual = next.sup_dist(&u);
        u = next;
        iterations = sweep + 1;
        if residual <= opts.residual_tol && sweep + 1 >= 2 * opts.drift_window {
            converged = true;
            break;
        }
        // For levels above/below critical the normalized iterates may keep
        // cycling; accept once the windowed drift is stable.
        if sweep + 1 >= 4 * opts.drift_window && residual <= 1e-7 {
            let w = opts.drift_window;
            let last: f64 = shifts[sweep + 1 - w..].iter().sum::<f64>() / w as f64;
            let prev: f64 = shifts[sweep + 1 - 2 * w..sweep + 1 - w].iter().sum::<f64>() / w as f64;
            if (last - prev).abs() / opts.h <= opts.drift_tol {
                converged = true;
                break;
            }
        }
    }
    let w = opts.drift_window.min(shifts.len());
    let last_window = &shifts[shifts.len() - w..];
    let drift = last_window.iter().sum::<f64>() / (w as f64 * opts.h);
    let spread = last_window
        .iter()
        .map(|s| (s / opts.h - drift).abs())
        .fold(0.0f64, f64::max);
    if !converged {
        // Far from the critical level the normalized profile can keep
        // wobbling; the windowed drift may nevertheless be settled, which is
        // all the level estimate needs.
        let stable = shifts.len() >= 2 * w && {
            let last: f64 = shifts[shifts.len() - w..].iter().sum::<f64>() / w as f64;
            let prev: f64 =
                shifts[shifts.len() - 2 * w..shifts.len() - w].iter().sum::<f64>() / w as f64;
            (last - prev).abs() / opts.h <= 1e-3
        };
        if residual > 1e-5 && !stable {
            return Err(KamError::DidNotConverge {
                iterations,
                residual,
            });
        }
    }
    Ok(WeakKamSolution {
        c,
        h: opts.h,
        u,
        residual,
        drift,
        drift_err: spread,
        iterations,
        converged,
    })
}

/// Greedy backward chaining of one-step minimizers from `x0` for duration `T`.
///
/// Returned samples are in forward-time order, ending at `x0` at time 0.
pub fn backward_curve(
    model: &HamiltonianModel,
    sol: &WeakKamSolution,
    x0: f64,
    duration: f64,
) -> Result<DiscreteCurve, KamError> {
    let h = sol.h;
    let n = sol.u.len();
    let steps = (duration / h).ceil() as usize;
    let v_max = a_priori_speed_bound(model, sol.c, n);
    let d_max = v_max * h;
    let refine = 4usize;
    let dd = 1.0 / (refine * n) as f64;
    let m = (d_max / dd).ceil() as isize;
    let mut xs_back = Vec::with_capacity(steps + 1);
    let mut x = x0;
    xs_back.push(x);
    for _ in 0..steps {
        let mut best = f64::INFINITY;
        let mut best_d = 0.0;
        for a in 0..=(2 * m) {
            let k = if a % 2 == 0 { a / 2 } else { -(a / 2 + 1) };
            let d = k as f64 * dd;
            let y = x - d;
            let v = d / h;
            let mid = x - 0.5 * d;
            let f = sol.u.eval_linear(y) + h * model.legendre(mid, v);
            if f < best {
                best = f;
                best_d = d;
            }
        }
        if best_d.abs() >= (m as f64) * dd - 0.5 * dd {
            return Err(KamError::WindowTooSmall { x });
        }
        x -= best_d;
        xs_back.push(x);
    }
    xs_back.reverse();
    Ok(DiscreteCurve {
        t0: -(steps as f64) * h,
        h,
        xs: xs_back,
    })
}

/// Action defect `int (c + L) dt - [u(end) - u(start)]` along the curve.
///
/// Segments are straight in the lift; the Lagrangian is integrated with
/// Simpson's rule per segment and `u` is evaluated by trigonometric
/// interpolation. Non-negative (up to tolerance) for sub-solutions, near zero
/// for calibrated curves.
pub fn calibration_defect(
    model: &HamiltonianModel,
    u: &GridField,
    curve: &DiscreteCurve,
    c: f64,
) -> f64 {
    let interp = TrigInterp::new(u);
    let h = curve.h;
    let mut action = 0.0;
    for j in 0..curve.xs.len() - 1 {
        let a = curve.xs[j];
        let b = curve.xs[j + 1];
        let v = (b - a) / h;
        let l0 = model.legendre(a, v);
        let l1 = model.legendre(0.5 * (a + b), v);
        let l2 = model.legendre(b, v);
        action += h * ((l0 + 4.0 * l1 + l2) / 6.0 + c);
    }
    let du = interp.eval(curve.end()) - interp.eval(curve.xs[0]);
    action - du
}
