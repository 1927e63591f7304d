//! Token-level measurement of software components, power-law tail fitting,
//! and a statistical-mechanics ensemble in which conserving total size and
//! total Hartley information makes power-law component sizes the most
//! likely outcome.

pub mod distfit;
pub mod ensemble;
pub mod exec;
pub mod genome;
pub mod lexicon;
pub mod metrics;

pub use exec::Execution;
