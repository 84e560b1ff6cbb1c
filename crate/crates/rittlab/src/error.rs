use thiserror::Error;

/// Crate-wide error type. Variants are named after the failure they signal,
/// not the module that raises them; several layers share the same conditions
/// (quadrature non-convergence shows up in calculus and transfer alike).
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolvent factorization pivot {pivot:.3e} below threshold {threshold:.3e}; z is effectively in the spectrum")]
    SingularResolvent { pivot: f64, threshold: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("spectrum meets the negative real axis at {0}; principal fractional power undefined")]
    BranchViolation(num_complex::Complex64),

    #[error("zero eigenvalue is not semisimple; fractional power undefined")]
    DefectiveZero,

    #[error("tangency arcs overlap (radius {radius} too small for the point separation); hull construction degenerate")]
    DegenerateHull { radius: f64 },

    #[error("constructed vertex cycle is not convex: {0}")]
    NonConvex(String),

    #[error("adjacent sector boundaries meet at {0}, outside the punctured unit disc")]
    MeetOutsideDisc(num_complex::Complex64),

    #[error("spectrum is not contained in the required region: {0}")]
    PreconditionSpectrum(String),

    #[error("operators do not commute: commutator norm {0:.3e} above threshold")]
    NonCommuting(f64),

    #[error("no admissible contour angle: spectral angle {spectral:.4} not below requested {requested:.4}")]
    SpectralAngle { spectral: f64, requested: f64 },

    #[error("evaluation point {0} lies within the exclusion zone of a contour")]
    OnContour(num_complex::Complex64),

    #[error("decay certificate refuted at witness {witness}: |f| = {value:.6e} exceeds claim {claim:.6e}")]
    DecayRefuted {
        witness: String,
        value: f64,
        claim: f64,
    },

    #[error("operator is not power bounded: sup_n ||T^n|| reached {0:.3e}")]
    NotPowerBounded(f64),

    #[error("unimodular eigenvalue at {0} is defective; mean-ergodic decomposition undefined")]
    DefectiveUnimodularEigenvalue(num_complex::Complex64),

    #[error("series truncation did not certify convergence: last increment {0:.3e}")]
    NotConverged(f64),

    #[error("exact Rademacher average needs 2^M patterns; M = {0} exceeds the cap")]
    TooLarge(usize),

    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
