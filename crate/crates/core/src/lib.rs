//! Quantum evolution of finite-dimensional systems described over a Hilbert
//! fibre bundle along an observer's world line.
//!
//! The crate is layered bottom-up:
//!
//! * [`linear`]: dense complex operators, commutators, exponentials, means.
//! * [`propagation`]: time-dependent Hamiltonians and unitary propagators.
//! * [`bundle`]: trivializations along a path, evolution transports,
//!   connection coefficients, frames and derivations along the path.
//! * [`pictures`]: Heisenberg, general unitary and interaction pictures.
//! * [`motion`]: certificates for integrals of motion and Lax pairs.
//!
//! Every time-dependent object is a pure function of time. Nothing is mutated
//! after construction, so all of the types here are `Send + Sync`.

pub mod bundle;
pub mod error;
pub mod family;
pub mod linear;
pub mod motion;
pub mod pictures;
pub mod propagation;
pub mod random;

pub use error::{Error, Result};
pub use family::{OperatorFamily, TimeFn};
pub use linear::{Operator, StateVector, Tolerance, C64};
