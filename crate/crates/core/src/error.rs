use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong between parsing a polynomial and
/// certifying its lattice of intermediate covers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("pole/degeneration at base point z = {z}")]
    DegenerateBasePoint { z: Complex64 },

    #[error("root finder did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        best: Vec<Complex64>,
        residual: f64,
    },

    #[error("near-multiple root: values {cluster:?} closer than {sep_min:e}")]
    NearMultipleRoot { cluster: Vec<Complex64>, sep_min: f64 },

    #[error("critical point proximity at w = {w} (|q'(w)| = {derivative:e})")]
    CriticalPoint { w: Complex64, derivative: f64 },

    #[error("Newton iteration diverged from {start} (last iterate {last}, residual {residual:e})")]
    Divergence {
        start: Complex64,
        last: Complex64,
        residual: f64,
    },

    #[error("path passes within {distance:e} of branch point {branch} (clearance {clearance:e})")]
    PathTooClose {
        branch: Complex64,
        distance: f64,
        clearance: f64,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("cannot certify continuation: step fell below h_min at path parameter {furthest:.6} of {total:.6}")]
    CannotCertify { furthest: f64, total: f64 },

    #[error("germ ({z}, {w}) does not lie on the curve (residual {residual:e})")]
    NotOnCurve { z: Complex64, w: Complex64, residual: f64 },

    #[error("P not squarefree in w: discriminant vanishes identically")]
    NotSquarefree,

    #[error("loop basis construction failed: {0}; consider exact preprocessing of the branch locus")]
    Geometry(String),

    #[error("tracking failed on loop {index}: {source}")]
    LoopTracking {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("group order exceeds cap {cap}")]
    GroupTooLarge { cap: usize },

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("not a subgroup: {0}")]
    NotSubgroup(String),

    #[error("monodromy group is not transitive (orbit sizes {orbit_sizes:?})")]
    NotTransitive { orbit_sizes: Vec<usize> },

    #[error("non-constant branch multiplicity: orbit sizes {sizes:?} across samples")]
    BranchMultiplicity { sizes: Vec<usize> },

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("Vandermonde system ill-conditioned at sample {sample}: branches too close")]
    IllConditioned { sample: Complex64 },

    #[error("Q does not map source onto target fiber: {0}")]
    CoveringPrecondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
