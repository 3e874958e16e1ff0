use thiserror::Error;

/// Errors raised by the surface, mesh, discretization and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdgError {
    #[error("OutsideNeighborhood: point {point:?} is outside the tubular neighborhood of the surface")]
    OutsideNeighborhood { point: [f64; 3] },

    #[error("AxisPoint: point {point:?} lies on the torus symmetry axis")]
    AxisPoint { point: [f64; 3] },

    #[error("NonPositiveMeasure: measure ratio {value} is not positive")]
    NonPositiveMeasure { value: f64 },

    #[error("DegenerateFace: face {face} has area {area:e} after perturbation")]
    DegenerateFace { face: usize, area: f64 },

    #[error("DegenerateTriangle: face {face} has area {area:e}")]
    DegenerateTriangle { face: usize, area: f64 },

    #[error("NonManifoldEdge: edge ({a}, {b}) has {count} incident faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("SolverBreakdown: {reason}")]
    SolverBreakdown { reason: String },

    #[error("NonPositive: convergence data contains a non-positive entry at index {index}")]
    NonPositive { index: usize },

    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl CdgError {
    /// Short variant name, used for exit diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            CdgError::OutsideNeighborhood { .. } => "OutsideNeighborhood",
            CdgError::AxisPoint { .. } => "AxisPoint",
            CdgError::NonPositiveMeasure { .. } => "NonPositiveMeasure",
            CdgError::DegenerateFace { .. } => "DegenerateFace",
            CdgError::DegenerateTriangle { .. } => "DegenerateTriangle",
            CdgError::NonManifoldEdge { .. } => "NonManifoldEdge",
            CdgError::SolverBreakdown { .. } => "SolverBreakdown",
            CdgError::NonPositive { .. } => "NonPositive",
            CdgError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, CdgError>;
