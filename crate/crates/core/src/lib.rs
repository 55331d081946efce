//! Affine-geometric thermodynamics on graph immersions.
//!
//! A complete thermodynamic function `F` on a region `Ω ⊂ ℝⁿ` is modelled as a
//! [`Potential`]. Its graph `x ↦ (x, F(x))` with transversal field `ξ = ∂/∂z`
//! is the set of equilibrium states; the Hessian of `F` is the affine
//! fundamental form and the conormal covector `dz − Σ y_a dx^a` is the
//! fundamental relation. On top of that the crate provides Legendre duality
//! and divergences ([`duality`]), relaxation dynamics towards the graph
//! ([`relaxation`]) and the equivalent contact Hamiltonian flows ([`contact`]).
//!
//! The crate is `no_std` with `alloc`; transcendental functions go through
//! `libm`.
//!
//! ```
//! use thermoaffine_core::potentials::ising_free_energy;
//! use thermoaffine_core::{IntegratorConfig, LiftedState, RelaxationGenerator};
//!
//! let gen = RelaxationGenerator::single(ising_free_energy());
//! let s0 = LiftedState::new(vec![0.5], vec![0.0], 0.0);
//! let traj = gen.integrate(&s0, &IntegratorConfig::new(1e-3, 25.0))?;
//! assert!((traj.last().y[0] - 0.5_f64.tanh()).abs() < 1e-8);
//! # Ok::<(), thermoaffine_core::Error>(())
//! ```

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod contact;
pub mod domain;
pub mod duality;
pub mod error;
pub mod immersion;
pub mod linalg;
pub mod ode;
pub mod potentials;
pub mod relaxation;

pub use contact::{ContactHamiltonian, ContactState};
pub use domain::Domain;
pub use duality::{DivergenceReport, DualChart, NewtonConfig};
pub use error::{Error, Result};
pub use immersion::{Classification, Conormal, EquilibriumPoint, FundamentalForm, GraphImmersion};
pub use linalg::Matrix;
pub use potentials::{ConvexityHint, DiffConfig, ModelId, ModelParams, Potential};
pub use relaxation::{IntegratorConfig, LiftedState, RelaxationGenerator, Trajectory};
