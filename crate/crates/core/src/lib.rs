//! Trait-structured population dynamics under periodic environmental
//! fluctuations: `∂ₜn − ε² ∂ₓₓn = n (a(t,x) − ρ(t))`, `ρ = ∫ n`.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli_io;
pub mod env_models;
pub mod error;
pub mod floquet;
pub mod no_mutation;
pub mod pde_solver;
pub mod quadrature;
pub mod rho_ode;

pub use error::{Error, Result};
