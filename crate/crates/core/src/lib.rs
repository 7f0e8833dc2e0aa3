//! Multimode continuous-variable quantum battery laboratory.
//!
//! The crate is split into a Gaussian phase-space engine ([`gaussian`],
//! [`observables`]), the figures of merit built on it ([`merit`]), an
//! optimizer over charging phases and energy splits ([`optimize`]), a library
//! of analytical results used as cross-checks ([`closed_forms`]) and an
//! independent truncated Fock-space simulator ([`fock`]) that validates all of
//! the above.
//!
//! Conventions: ħ = 1, quadratures are ordered `x₁, p₁, …, x_N, p_N`, the
//! vacuum covariance matrix is `½·I`, and the battery Hamiltonian is
//! `Σⱼ ωⱼ N̂ⱼ` without zero-point energy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod closed_forms;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod merit;
pub mod observables;
pub mod optimize;
pub mod validation;

pub use circuit::{Battery, Gate};
pub use error::{Error, Result};
pub use gaussian::{GaussianState, SymplecticOp};
pub use merit::{ChargerKind, ChargingConfig, MeritReport};
pub use observables::QuadraticObservable;
