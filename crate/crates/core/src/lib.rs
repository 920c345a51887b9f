//! Lower bounds to ground-state energies of two-body fermionic Hamiltonians.
//!
//! The energy is located as the zero of `δ(μ) = dist(K_N − μ, C*)`, the distance of the
//! shifted reduced Hamiltonian to the polar cone of the P, Q, G representability
//! conditions. `δ` is found by projection (L-BFGS over factorized dual blocks) and its zero
//! by a damped Newton iteration. A full-CI oracle is included for verification.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod cli;
pub mod error;
pub mod fci;
pub mod hamiltonians;
mod lbfgs;
pub mod newton;
pub mod pairspace;
pub mod projection;
pub mod representability;

pub use error::{Error, Result};
pub use hamiltonians::{IntegralSet, ReducedHamiltonian, SpinIntegrals};
pub use newton::{solve_dual, NewtonConfig, NewtonTrace};
pub use pairspace::{BasisSpec, GSpaceOperator, OneBodyOperator, TwoBodyOperator};
pub use projection::{project, DualCertificate, ProjectionOptions, ProjectionResult};
pub use representability::{Condition, ConditionSet, DualBlocks};
