//! Numerical tolerances shared by the kernels and their tests.

/// Relative tolerance for exact algebraic identities (Hamilton product, norms).
pub const ALGEBRA: f64 = 1e-12;

/// Relative reconstruction and unitarity tolerance of the quaternion SVD.
pub const SVD: f64 = 1e-10;

/// Singular values of the complex adjoint come in equal pairs; a pair whose
/// members differ by more than this multiple of the largest value is rejected.
pub const SVD_PAIRING: f64 = 1e-9;

/// Quaternion singular values closer than this multiple of the largest one are
/// treated as one degenerate cluster when lifting singular vectors.
pub const SVD_CLUSTER: f64 = 1e-11;

/// Singular values at or below this multiple of the largest one are treated as
/// zero when forming left singular vectors.
pub const SVD_NULL: f64 = 1e-13;

/// Default successive-iterate tolerance of the ADMM solver.
pub const SOLVER_TOL: f64 = 1e-4;

/// Default ADMM iteration cap for images.
pub const SOLVER_MAX_ITERS: usize = 500;

/// Default ADMM iteration cap for videos.
pub const SOLVER_MAX_ITERS_VIDEO: usize = 100;
