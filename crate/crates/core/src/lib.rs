//! Numerical laboratory for logarithmic Schrödinger dynamics and isothermal
//! fluid models: periodic spectral grids, exact Gaussian/soliton solutions and
//! their finite-dimensional ODEs, split-step time integration, dispersion
//! scalers, and the associated energy/entropy diagnostics.

pub mod diagnostics;
pub mod error;
pub mod fluids;
pub mod gaussian;
pub mod grid;
pub mod ode;
pub mod quad;
pub mod snapshot;
pub mod solitons;
pub mod solver;
pub mod spectral;
pub mod tau;
pub mod transforms;

pub use error::CoreError;
pub use grid::{Density, Field, Grid};
pub use tau::{TauMode, TauScaler};

pub type Result<T> = std::result::Result<T, CoreError>;
