use thiserror::Error;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Error)]
pub enum DilationError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram mismatch between column maps (residual {residual:.3e})")]
    GramMismatch { residual: f64 },

    #[error("domination T X^2 T* <= X^2 fails (min eigenvalue of X^2 - T X^2 T* is {min_eigenvalue:.3e})")]
    NotDominated { min_eigenvalue: f64 },

    #[error("power iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid phase matrix: {0}")]
    InvalidPhase(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("declared relation violated (residual {residual:.3e}, norm excess {norm_excess:.3e})")]
    RelationViolated { residual: f64, norm_excess: f64 },

    #[error("tuple is not pure")]
    NotPure,

    #[error("tuple fails Szego positivity (min eigenvalue {min_eigenvalue:.3e})")]
    NotSzego { min_eigenvalue: f64 },

    #[error("Brehmer positivity fails on subset {subset:?} (min eigenvalue {min_eigenvalue:.3e})")]
    NotBrehmer {
        subset: Vec<usize>,
        min_eigenvalue: f64,
    },

    #[error("truncation did not converge up to degree {deg_cap} (isometry defect {defect:.3e})")]
    TruncationNotConverged { deg_cap: usize, defect: f64 },

    #[error("dilation map is not isometric (defect {residual:.3e})")]
    IsometryDefect { residual: f64 },

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DilationError {
    /// Stable machine-readable identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            DilationError::NotSquare { .. } => "not_square",
            DilationError::DimensionMismatch(_) => "dimension_mismatch",
            DilationError::NotHermitian { .. } => "not_hermitian",
            DilationError::NotPsd { .. } => "not_psd",
            DilationError::GramMismatch { .. } => "gram_mismatch",
            DilationError::NotDominated { .. } => "not_dominated",
            DilationError::NoConvergence { .. } => "no_convergence",
            DilationError::IndexOutOfRange { .. } => "index_out_of_range",
            DilationError::InvalidPhase(_) => "invalid_phase",
            DilationError::InvalidConfig(_) => "invalid_config",
            DilationError::InvalidInstance(_) => "invalid_instance",
            DilationError::RelationViolated { .. } => "relation_violated",
            DilationError::NotPure => "not_pure",
            DilationError::NotSzego { .. } => "not_szego",
            DilationError::NotBrehmer { .. } => "not_brehmer",
            DilationError::TruncationNotConverged { .. } => "truncation_not_converged",
            DilationError::IsometryDefect { .. } => "isometry_defect",
            DilationError::GenerationFailed(_) => "generation_failed",
            DilationError::Decomposition(_) => "decomposition_failed",
            DilationError::Json(_) => "json",
            DilationError::Io(_) => "io",
        }
    }

    /// True for failures of iterative or truncated numerics rather than bad input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            DilationError::NoConvergence { .. }
                | DilationError::TruncationNotConverged { .. }
                | DilationError::Decomposition(_)
        )
    }
}

pub type Result<T, E = DilationError> = std::result::Result<T, E>;
