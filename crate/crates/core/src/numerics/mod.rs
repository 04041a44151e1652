//! Shared numerical kernels.

mod diff;
mod lstsq;
mod ode;
mod quad;
mod roots;

pub use diff::{fd_derivative, fd_derivative_with_step, FdScheme};
pub use lstsq::{least_squares, LeastSquaresFit};
pub use ode::{integrate_flow, Crossing, Event, EventRecord, OdeOptions, Trajectory};
pub use quad::{quad_jacobi_weight, quad_singular, GaussLegendre, QuadOptions, QuadratureSpec, SingularityExponent};
pub use roots::{cubic_real_roots, find_root_bracketed};
