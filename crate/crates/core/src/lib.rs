pub mod cli;
pub mod cmatrix;
pub mod deficit;
pub mod error;
pub mod json;
pub mod protocol;
pub mod rng;
pub mod search;
pub mod states;
pub mod witness;
