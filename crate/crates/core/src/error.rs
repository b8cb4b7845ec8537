use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong below the CLI layer.
///
/// Construction errors (bad dimensions, malformed specs) are kept separate
/// from numerical failures so callers can map them to different exit codes.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("lattice dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),

    #[error("box side must be odd and >= 1, got {0}")]
    InvalidSide(usize),

    #[error("internal dimension must be >= 1")]
    InvalidInternalDim,

    #[error("site {0:?} lies outside the box")]
    SiteOutOfBox([i64; 2]),

    #[error("invalid switch table: {0}")]
    InvalidSwitch(String),

    #[error("flux {p}/{q} is not reduced: need q >= 1 and gcd(|p|, q) = 1")]
    InvalidFlux { p: i64, q: i64 },

    #[error("disorder width must be >= 0, got {0}")]
    InvalidDisorderWidth(f64),

    #[error("model `{kind}` requires dimension {need}, got {got}")]
    WrongModelDimension {
        kind: String,
        need: usize,
        got: usize,
    },

    #[error("custom hopping offset {offset:?} does not fit inside a box of side {side}")]
    HoppingOutOfRange { offset: [i64; 2], side: usize },

    #[error("custom hopping block needs {expected} entries (N^2 row-major), got {got}")]
    HoppingBlockShape { expected: usize, got: usize },

    #[error("operator shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("operator is not hermitian: defect {0:.3e}")]
    NotHermitian(f64),

    #[error("axis must be 1..=d (d = {d}), got {axis}")]
    InvalidAxis { axis: usize, d: usize },

    #[error("decay rate must be > 0, got {0}")]
    InvalidRate(f64),

    #[error("metric value must be > 0, got {0}")]
    InvalidMetricValue(f64),

    #[error("energy window [{a}, {b}] is empty")]
    EmptyWindow { a: f64, b: f64 },

    #[error("Fermi energy {e_f} collides with eigenvalue {eigenvalue} (index {index}, |gap| = {gap:.3e})")]
    EigenvalueCollision {
        e_f: f64,
        eigenvalue: f64,
        index: usize,
        gap: f64,
    },

    #[error("z = {z} lies on the spectrum (distance {dist:.3e})")]
    OnSpectrum { z: Complex64, dist: f64 },

    #[error("function exceeds the unit bound at eigenvalue {eigenvalue}: |f| = {magnitude}")]
    FunctionUnbounded { eigenvalue: f64, magnitude: f64 },

    #[error("not a projector: ||P^2 - P||_F = {0:.3e}")]
    NotProjector(f64),

    #[error("Chern numbers need a two-dimensional box, got d = {0}")]
    NotTwoDimensional(usize),

    #[error("Bloch oracle needs a clean single-orbital hofstadter spec: {0}")]
    OracleUnavailable(String),

    #[error("k-grid must have >= 12 points per axis, got {0}")]
    KGridTooCoarse(usize),

    #[error("band index must lie in 1..={q}, got {got}")]
    BadBandCount { q: usize, got: usize },

    #[error("bands {lower} and {upper} touch on the k-grid (gap {gap:.3e}); oracle undefined")]
    BandsTouch { lower: usize, upper: usize, gap: f64 },

    #[error("moment exponent must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("imaginary offsets must be > 0, got {0}")]
    InvalidImaginaryOffset(f64),

    #[error("quadrature needs >= {need} nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },

    #[error("need >= {need} samples with positive value, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("all samples vanish; nothing to fit")]
    AllZeroSamples,

    #[error("degenerate regression: every sample sits at distance {0}")]
    DegenerateRegression(f64),

    #[error("ensemble statistics need disorder (W > 0)")]
    CleanEnsemble,

    #[error("ensemble needs >= {need} realizations, got {got}")]
    TooFewRealizations { need: usize, got: usize },

    #[error("need >= {need} eigenvalues inside the window, got {got}")]
    TooFewEigenvalues { need: usize, got: usize },

    #[error("cluster tolerance must be > 0, got {0}")]
    InvalidClusterTol(f64),

    #[error("numerical check failed: {0}")]
    Numerics(String),

    #[error("operator dump: {0}")]
    DumpParse(String),

    #[error("model spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
