use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum KamError {
    #[error("fiber maximization exceeded its iteration budget at x={x}")]
    MaximizationDiverged { x: f64 },

    #[error("empty sub-level slice: c={c} below fiber minimum {c_min} at x={x}")]
    EmptySlice { x: f64, c: f64, c_min: f64 },

    #[error("fiber Hessian minimum {min} below floor {floor}")]
    NonConvexFiber { min: f64, floor: f64 },

    #[error("Lax-Oleinik minimizer on the search window boundary at x={x}")]
    WindowTooSmall { x: f64 },

    #[error("iteration did not converge after {iterations} sweeps (residual {residual:.3e})")]
    DidNotConverge { iterations: usize, residual: f64 },

    #[error("upper bracket for the critical value never became feasible (c_up={c_up})")]
    BracketFailure { c_up: f64 },

    #[error("critical value methods disagree: branch={branch} lo={lo}")]
    MethodDisagreement { branch: f64, lo: f64 },

    #[error("no sub-solution at level {c}: slice infeasible")]
    NoSubsolutionAtLevel { c: f64 },

    #[error("sub-solution verification failed: margin {margin:.3e} at x={x}")]
    VerificationFailed { x: f64, margin: f64 },

    #[error("boundary case: the sub-solution at the critical level is unique (margin identically zero)")]
    BoundaryCase,

    #[error("Aubry estimate inconsistent with level {c}: neither feasibility case holds")]
    InconsistentLevel { c: f64 },

    #[error("matrix is not symplectic: |M^T J M - J| = {residual:.3e}")]
    NotSymplectic { residual: f64 },

    #[error("unstable branch ceases to be a graph at radius {radius}")]
    BranchFold { radius: f64 },

    #[error("blend margin failure: eta={eta:.3e} at x={x} on the transition annulus")]
    BlendMarginFailure { x: f64, eta: f64 },

    #[error("hypothesis not satisfied: {reason}")]
    HypothesisNotSatisfied { reason: String },

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<KamError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KamError {
    pub fn at_stage(self, stage: &'static str) -> KamError {
        KamError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Unwraps stage tags down to the underlying error.
    pub fn root(&self) -> &KamError {
        match self {
            KamError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
