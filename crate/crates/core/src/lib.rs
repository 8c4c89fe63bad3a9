pub mod classifier;
pub mod corpus;
pub mod randtest;
pub mod rng;
pub mod tensor;
pub mod cli;
pub mod evaluation;
