//! Numerical thresholds shared across modules.

use std::f64::consts::PI;

/// Default relative tolerance for the monodromy integrator.
pub const DEFAULT_RTOL: f64 = 1e-12;
/// Accepted range for a user supplied integrator tolerance.
pub const RTOL_RANGE: (f64, f64) = (1e-13, 1e-6);

/// Refuse to integrate beyond this imaginary part; ψ grows like e^{|Im z|}.
pub const MAX_IMAG: f64 = 60.0;

/// Largest grid step used on the real axis.
pub const REAL_GRID_STEP: f64 = PI / 200.0;

/// A Lyapunov value counts as real when its imaginary part is below this.
pub const REAL_DELTA_TOL: f64 = 1e-7;
/// Slack on |Δ| ≤ 1 when deciding band membership.
pub const BAND_EDGE_SLACK: f64 = 1e-9;
/// Band edges are bisected down to this width.
pub const EDGE_BISECTION_WIDTH: f64 = 1e-9;
/// Gap endpoints are matched to roots within this distance.
pub const ENDPOINT_MATCH_TOL: f64 = 1e-6;

/// Multipliers τ, τ' pair when |ττ' - 1| is below this.
pub const PAIRING_TOL: f64 = 1e-6;
/// Two branches closer than this are treated as colliding.
pub const COLLISION_TOL: f64 = 1e-6;
/// Maximal bisection depth when a branch assignment is ambiguous.
pub const MAX_TRACK_SUBDIVISIONS: usize = 8;

/// Boundary samples for root counting on a disk.
pub const WINDING_POINTS: usize = 512;
/// Boundary samples for contour moments around a root cluster.
pub const MOMENT_POINTS: usize = 64;
/// Roots whose imaginary part is below this are reported as real.
pub const REAL_ROOT_IMAG_TOL: f64 = 1e-7;

/// Nodes of the fixed Volterra grid of the series oracle.
pub const SERIES_NODES: usize = 2048;
