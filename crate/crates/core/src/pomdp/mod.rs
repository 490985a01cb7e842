//! Tabular POMDP models and the `.POMDP` text format.

mod hallway;
mod model;
mod parse;
pub mod rocksample;
mod serialize;

pub use hallway::generate_hallway;
pub use model::{validate_model, ParseDiagnostics, PomdpModel, Violation, PROB_TOLERANCE};
pub use parse::{parse_pomdp, ParseError};
pub use rocksample::{generate_rocksample, RockSampleError, RockSampleSpec};
pub use serialize::serialize_pomdp;
