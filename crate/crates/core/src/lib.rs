//! Belief-grounded recurrent actor-critic agents for tabular POMDPs and
//! force-feedback manipulation MOMDPs.

pub mod agent;
pub mod belief;
pub mod bench;
pub mod env;
pub mod pomdp;
pub mod sampling;
pub mod tensor;
pub mod trainer;
