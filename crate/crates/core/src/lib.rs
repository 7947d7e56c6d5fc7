//! Within-host HIV dynamics with a latent reservoir of infected T-cells.
//!
//! The crate covers the three-compartment (T, I, V) model, the latent
//! (T, I, L, V) model, antiretroviral therapy folded in through [`Efficacy`],
//! closed-form equilibria and reproduction numbers, Routh–Hurwitz and
//! eigenvalue stability checks, Lyapunov descent checks, an adaptive
//! Dormand–Prince integrator and the time-to-clearance metrics.

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod integrator;
pub mod io;
pub mod lyapunov;
pub mod model;
pub mod stability;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{CoreParams, Efficacy, LatentParams, State3, State4};
