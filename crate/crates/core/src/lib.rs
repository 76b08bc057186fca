pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod fiber_solver;
pub mod hermite;
pub mod quadrature;
pub mod quasimode;
pub mod roots;
pub mod states;

pub use error::{Error, Result};
