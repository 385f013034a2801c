//! Two-population Hegselmann-Krause opinion dynamics with a constant
//! cross-population delay.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! machinery:
//!
//! - [`kernels`]: radial influence functions and their sup / inf bounds,
//! - [`model`]: parameters, states, interaction weights and the right-hand side,
//! - [`integrator`]: fixed-step RK4 by the method of steps with a dense history,
//! - [`diagnostics`]: diameters, hull and norm bounds, windowed contraction checks,
//! - [`scenarios`]: reproducible presets and a parameter sweep harness.
//!
//! File formats, plotting and the command line live in the `hkd` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod integrator;
pub mod kernels;
mod linalg;
pub mod model;
pub mod scenarios;

pub use error::{Error, Result};
pub use integrator::{integrate, Interpolation, IntegratorConfig, Trajectory};
pub use kernels::Kernel;
pub use model::{History, InitialData, Layout, ModelParams, SystemState};
