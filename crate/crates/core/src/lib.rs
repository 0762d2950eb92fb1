pub mod crn;
pub mod integrator;
pub mod json;
pub mod memory;
pub mod nfa;
pub mod sampling;
pub mod tm;
pub mod analysis;
pub mod cli;
pub mod determinism;
