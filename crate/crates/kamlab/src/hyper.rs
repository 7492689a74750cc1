//! Fixed points of the Hamiltonian flow, hyperbolicity verdicts (both for
//! fixed-point linearizations and user-supplied monodromy matrices), the
//! unstable-manifold one-form, and the local solution it integrates to.
//!
//! Monodromy matrices use coordinates ordered in `(q_i, p_i)` pairs, so the
//! symplectic form is block-diagonal with 2x2 blocks `[[0,1],[-1,0]]`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Vector2};

use crate::model::{Covector, HamiltonianModel};
use crate::{min_lift, wrap, KamError, Tolerances};

/// Linearization data at one fixed point of the Hamiltonian vector field.
#[derive(Debug, Clone)]
pub struct FixedPointAnalysis {
    pub point: Covector,
    /// `J Hess H`: the matrix of the linearized flow.
    pub linearization: Matrix2<f64>,
    pub eigenvalues: [Complex<f64>; 2],
    pub hyperbolic: bool,
    /// Unstable eigendirection `(dx, dp)`, normalized to `dx = 1` (a graph
    /// direction); present only in the hyperbolic case.
    pub unstable: Option<Vector2<f64>>,
    pub stable: Option<Vector2<f64>>,
    /// Norm of the vector field at the point.
    pub field_residual: f64,
}

/// Locates fixed points by Newton iteration on `(dH/dp, -dH/dx)` from a
/// coarse grid of seeds. A flat effective potential has a continuum of
/// equilibria; that degenerate case yields an empty list.
pub fn find_fixed_points(model: &HamiltonianModel) -> Vec<Covector> {
    let probe = 512;
    let (_, vmax) = model.max_v_eff(probe);
    let vmin = (0..probe)
        .map(|i| model.v_eff(i as f64 / probe as f64))
        .fold(f64::INFINITY, f64::min);
    if vmax - vmin < 1e-12 {
        return Vec::new();
    }
    let mut found: Vec<Covector> = Vec::new();
    let seeds = 128;
    for s in 0..seeds {
        let mut x = s as f64 / seeds as f64;
        let mut p = -model.shift;
        let mut ok = false;
        for _ in 0..60 {
            let f0 = model.dh_dp(x, p);
            let f1 = -model.dh_dx(x, p);
            if f0.abs().max(f1.abs()) < 1e-13 {
                ok = true;
                break;
            }
            let a = model.d2h_dxdp(x, p);
            let b = model.d2h_dp2(x);
            let c = -model.d2h_dx2(x, p);
            let d = -a;
            let det = a * d - b * c;
            if det.abs() < 1e-14 {
                break;
            }
            let dx = (f0 * d - f1 * b) / det;
            let dp = (f1 * a - f0 * c) / det;
            x -= dx;
            p -= dp;
            if dx.abs() + dp.abs() > 1.0 {
                break;
            }
        }
        if !ok {
            continue;
        }
        let residual = model.dh_dp(x, p).hypot(model.dh_dx(x, p));
        if residual > 1e-10 {
            continue;
        }
        let x = wrap(x);
        if !found
            .iter()
            .any(|q| min_lift(q.x, x).abs() < 1e-6 && (q.p - p).abs() < 1e-6)
        {
            found.push(Covector::new(x, p));
        }
    }
    found.sort_by(|a, b| a.x.total_cmp(&b.x));
    found
}

/// Builds and classifies the 2x2 linearization at a fixed point.
pub fn analyze_fixed_point(
    model: &HamiltonianModel,
    fp: Covector,
    tol: &Tolerances,
) -> FixedPointAnalysis {
    let (x, p) = (fp.x, fp.p);
    let lin = Matrix2::new(
        model.d2h_dxdp(x, p),
        model.d2h_dp2(x),
        -model.d2h_dx2(x, p),
        -model.d2h_dxdp(x, p),
    );
    let tr = lin.trace();
    let det = lin.determinant();
    let disc = tr * tr - 4.0 * det;
    let eigenvalues = if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex::new(0.5 * (tr - s), 0.0),
            Complex::new(0.5 * (tr + s), 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            Complex::new(0.5 * tr, -0.5 * s),
            Complex::new(0.5 * tr, 0.5 * s),
        ]
    };
    let hyperbolic = eigenvalues.iter().all(|l| l.re.abs() > tol.spectral);
    let eig_dir = |l: f64| -> Vector2<f64> {
        // (A - l I) v = 0 with a12 = d2H/dp2 > 0: v = (a12, l - a11).
        let v = Vector2::new(lin[(0, 1)], l - lin[(0, 0)]);
        v / v[0]
    };
    let (unstable, stable) = if hyperbolic && disc > 0.0 {
        (
            Some(eig_dir(eigenvalues[1].re)),
            Some(eig_dir(eigenvalues[0].re)),
        )
    } else {
        (None, None)
    };
    FixedPointAnalysis {
        point: fp,
        linearization: lin,
        eigenvalues,
        hyperbolic,
        unstable,
        stable,
        field_residual: model.dh_dp(x, p).hypot(model.dh_dx(x, p)),
    }
}

/// Hyperbolicity verdict for a monodromy matrix along a periodic orbit.
#[derive(Debug, Clone)]
pub struct MonodromyAnalysis {
    pub dim: usize,
    pub eigenvalues: Vec<Complex<f64>>,
    /// Multiplicity of the eigenvalue 1 (clustered within 1e-6).
    pub unit_multiplicity: usize,
    pub hyperbolic: bool,
    /// Orthonormal basis of `W+` (columns); includes the flow direction.
    pub w_plus: DMatrix<f64>,
    pub w_minus: DMatrix<f64>,
    pub symplectic_residual: f64,
    /// `|M Y - Y|` (the flow direction must be invariant).
    pub y_residual: f64,
    /// `|M^T dH - dH|` (energy is preserved).
    pub dh_residual: f64,
    /// max |dH . w| over basis vectors of W+- (should vanish: W+- in ker dH).
    pub ker_residual: f64,
    /// Second principal cosine between W+ and W- (intersection must be the
    /// single flow direction, so exactly one cosine may equal 1).
    pub second_principal_cosine: f64,
}

fn pair_symplectic_form(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for b in 0..dim / 2 {
        j[(2 * b, 2 * b + 1)] = 1.0;
        j[(2 * b + 1, 2 * b)] = -1.0;
    }
    j
}

/// Orthonormalizes `[y | columns]` and returns the thin Q factor.
fn orthonormal_with_first(y: &DVector<f64>, cols: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = y.len();
    let k = cols.ncols();
    let mut m = DMatrix::zeros(dim, k + 1);
    m.set_column(0, &(y / y.norm()));
    for c in 0..k {
        m.set_column(c + 1, &cols.column(c).into_owned());
    }
    let qr = m.qr();
    let q = qr.q();
    q.columns(0, k + 1).into_owned()
}

/// Dominant invariant subspace of `m` of dimension `k` by subspace iteration.
fn dominant_subspace(m: &DMatrix<f64>, k: usize, iters: usize) -> DMatrix<f64> {
    let dim = m.nrows();
    let mut z = DMatrix::from_fn(dim, k, |i, j| ((i * 31 + j * 17 + 1) as f64).sin());
    for _ in 0..iters {
        z = m * z;
        let qr = z.qr();
        z = qr.q().columns(0, k).into_owned();
    }
    z
}

/// Classifies a monodromy matrix `m` with invariant flow direction `y` and
/// energy differential `dh` (a covector, given as a vector of coefficients).
pub fn analyze_monodromy(
    m: &DMatrix<f64>,
    y: &DVector<f64>,
    dh: &DVector<f64>,
    tol: &Tolerances,
) -> Result<MonodromyAnalysis, KamError> {
    let dim = m.nrows();
    if m.ncols() != dim || !dim.is_multiple_of(2) || dim == 0 || y.len() != dim || dh.len() != dim {
        return Err(KamError::Config(format!(
            "monodromy input must be an even square matrix with matching vectors, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let j = pair_symplectic_form(dim);
    let residual = (m.transpose() * &j * m - &j).abs().max();
    if residual > 1e-8 {
        return Err(KamError::NotSymplectic { residual });
    }
    let y_residual = (m * y - y).norm() / y.norm();
    let dh_residual = (m.transpose() * dh - dh).norm() / dh.norm();

    let eigenvalues: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().copied().collect();
    let cluster = 1e-6;
    let unit_multiplicity = eigenvalues
        .iter()
        .filter(|l| (*l - Complex::new(1.0, 0.0)).norm() <= cluster)
        .count();
    let others_off_circle = eigenvalues
        .iter()
        .filter(|l| (*l - Complex::new(1.0, 0.0)).norm() > cluster)
        .all(|l| (l.norm() - 1.0).abs() > tol.spectral.max(cluster));
    let hyperbolic = unit_multiplicity == 2 && others_off_circle;

    let mut w_plus = DMatrix::zeros(dim, 0);
    let mut w_minus = DMatrix::zeros(dim, 0);
    let mut ker_residual = 0.0f64;
    let mut second_cos = 0.0f64;
    if hyperbolic {
        let k = eigenvalues.iter().filter(|l| l.norm() > 1.0 + cluster).count();
        // M^{-1} = -J M^T J for symplectic M: exact, no linear solve needed.
        let m_inv = -(&j) * m.transpose() * &j;
        let unstable = dominant_subspace(m, k, 400);
        let stable = dominant_subspace(&m_inv, k, 400);
        w_plus = orthonormal_with_first(y, &unstable);
        w_minus = orthonormal_with_first(y, &stable);
        let dh_unit = dh / dh.norm();
        for c in 0..w_plus.ncols() {
            ker_residual = ker_residual.max(dh_unit.dot(&w_plus.column(c).into_owned()).abs());
            ker_residual = ker_residual.max(dh_unit.dot(&w_minus.column(c).into_owned()).abs());
        }
        let overlap = w_plus.transpose() * &w_minus;
        let mut cosines: Vec<f64> = overlap.svd(false, false).singular_values.iter().copied().collect();
        cosines.sort_by(|a, b| b.total_cmp(a));
        second_cos = cosines.get(1).copied().unwrap_or(0.0);
    }
    Ok(MonodromyAnalysis {
        dim,
        eigenvalues,
        unit_multiplicity,
        hyperbolic,
        w_plus,
        w_minus,
        symplectic_residual: residual,
        y_residual,
        dh_residual,
        ker_residual,
        second_principal_cosine: second_cos,
    })
}

/// A graph chart of the local unstable manifold at the critical energy,
/// sampled on global grid nodes around the fixed point.
#[derive(Debug, Clone)]
pub struct UnstableChart {
    pub center: Covector,
    /// Grid node nearest to the center (`n` nodes on the circle).
    pub center_node: isize,
    pub n: usize,
    pub radius: f64,
    pub level: f64,
    /// Momenta at offsets `-m ..= m` from the center node.
    pub ps: Vec<f64>,
    pub m: usize,
    pub eigen_slope: f64,
    /// Max `|H(x, p_u(x)) - level|` over the chart.
    pub defect: f64,
    /// Mismatch between the sampled slope at the center and the eigendirection.
    pub center_slope_err: f64,
}

impl UnstableChart {
    /// Lifted abscissa of offset `j` in `-m ..= m`.
    pub fn offset_x(&self, j: isize) -> f64 {
        (self.center_node + j) as f64 / self.n as f64
    }

    pub fn p(&self, j: isize) -> f64 {
        self.ps[(j + self.m as isize) as usize]
    }
}

fn newton_momentum(
    model: &HamiltonianModel,
    x: f64,
    seed: f64,
    level: f64,
    radius: f64,
) -> Result<f64, KamError> {
    let mut p = seed;
    for _ in 0..80 {
        let f = model.h(x, p) - level;
        if f.abs() < 1e-13 {
            return Ok(p);
        }
        let fp = model.dh_dp(x, p);
        if fp.abs() < 1e-11 {
            return Err(KamError::BranchFold { radius });
        }
        let step = f / fp;
        p -= step.clamp(-0.25, 0.25);
    }
    Err(KamError::BranchFold { radius })
}

/// Continues the unstable branch of `{H = level}` outward from a hyperbolic
/// fixed point, node by node, seeded from the previous momentum.
pub fn unstable_oneform(
    model: &HamiltonianModel,
    analysis: &FixedPointAnalysis,
    level: f64,
    radius: f64,
    n: usize,
) -> Result<UnstableChart, KamError> {
    let dir = analysis.unstable.ok_or(KamError::HypothesisNotSatisfied {
        reason: format!("fixed point at x={} is not hyperbolic", analysis.point.x),
    })?;
    let (xc, pc) = (analysis.point.x, analysis.point.p);
    if (model.h(xc, pc) - level).abs() > 1e-6 {
        return Err(KamError::InconsistentLevel { c: level });
    }
    let slope = dir[1] / dir[0];
    let dx = 1.0 / n as f64;
    let m = (radius / dx + 1e-9).floor() as usize;
    if m < 4 {
        return Err(KamError::WindowTooSmall { x: xc });
    }
    let center_node = (xc * n as f64).round() as isize;
    let x0 = center_node as f64 * dx;
    let mut ps = vec![0.0f64; 2 * m + 1];
    // Center node: at the exact fixed point H_p vanishes, so seed analytically.
    ps[m] = if (x0 - xc).abs() < 1e-12 {
        pc
    } else {
        newton_momentum(model, x0, pc + slope * (x0 - xc), level, radius)?
    };
    for side in [1isize, -1isize] {
        let mut prev = ps[m];
        let mut est = slope * side as f64;
        for j in 1..=m as isize {
            let x = x0 + (side * j) as f64 * dx;
            let p = newton_momentum(model, x, prev + est * dx, level, (j as f64) * dx)?;
            est = (p - prev) / dx;
            ps[(m as isize + side * j) as usize] = p;
            prev = p;
        }
    }
    let mut defect = 0.0f64;
    for (k, &p) in ps.iter().enumerate() {
        let x = x0 + (k as isize - m as isize) as f64 * dx;
        defect = defect.max((model.h(x, p) - level).abs());
    }
    // Fourth-order one-sided-free slope check at the center.
    let fd = (-ps[m + 2] + 8.0 * ps[m + 1] - 8.0 * ps[m - 1] + ps[m - 2]) / (12.0 * dx);
    let chart = UnstableChart {
        center: analysis.point,
        center_node,
        n,
        radius,
        level,
        ps,
        m,
        eigen_slope: slope,
        defect,
        center_slope_err: (fd - slope).abs(),
    };
    Ok(chart)
}

/// Integrates the chart one-form into the local solution, anchored to zero at
/// the center node (cumulative trapezoid both ways).
pub fn local_solution(chart: &UnstableChart) -> Vec<f64> {
    let m = chart.m;
    let dx = 1.0 / chart.n as f64;
    let mut u = vec![0.0f64; 2 * m + 1];
    for j in 1..=m {
        u[m + j] = u[m + j - 1] + 0.5 * dx * (chart.ps[m + j - 1] + chart.ps[m + j]);
        u[m - j] = u[m - j + 1] - 0.5 * dx * (chart.ps[m - j + 1] + chart.ps[m - j]);
    }
    u
}
