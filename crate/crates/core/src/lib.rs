//! Numerical analysis of two-degree-of-freedom integrable Hamiltonian systems
//! near a focus-focus equilibrium.
//!
//! The crate computes first-return data `(T, Θ)` of regular tori by two
//! independent engines (turning-point quadrature of an S¹-reduced profile and
//! direct flow integration), converts it to period-lattice coordinates, and
//! builds on it:
//!
//! * [`rotation`]: branch-tracked rotation numbers, monodromy, level curves and
//!   their logarithmic-spiral pitch,
//! * [`twist`]: the isoenergetic twist, its normalised form `S̃ = 2π|j|²S`,
//!   and the curve of twistless tori,
//! * [`kolmogorov`]: the frequency map and its Jacobian determinant with
//!   respect to the actions.
//!
//! Everything here is `no_std` with `alloc`; IO, configuration and parallel
//! fan-out live in the companion CLI crate.
#![no_std]
// f64 math comes from `num_traits::Float`; wherever std is linked (test
// builds) its inherent methods shadow the trait, hence the allow on imports

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod kolmogorov;
pub mod lattice;
pub mod numerics;
pub mod rotation;
pub mod systems;
pub mod twist;

pub use error::{Error, Result};
pub use lattice::{MomentumValue, PeriodLatticeSample};
pub use systems::{EMValue, FocusFocusData, IntegrableSystem};
