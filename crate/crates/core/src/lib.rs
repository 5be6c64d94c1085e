pub mod analysis;
pub mod cli;
pub mod error;
pub mod expr;
pub mod factory;
pub mod harness;
pub mod nonrand;
pub mod numeric;
pub mod series;
pub mod source;
