pub mod asymptotics;
pub mod casestudy;
pub mod cli;
pub mod error;
pub mod flags;
pub mod linalg;
pub mod lyapunov;
pub mod monodromy;
pub mod potential;
pub mod report;
pub mod roots;
pub mod spectrum;
pub mod tolerances;
pub mod trig;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
