pub mod analysis;
pub mod checks;
pub mod cli;
pub mod coherence;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod partition;
pub mod quotient;
pub mod samplers;
pub mod scenario_file;
pub mod system;
pub mod util;

pub use error::{Error, Result};
