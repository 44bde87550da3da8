//! Community detection by modularity optimization, with a quantum-inspired
//! perturbation loop on top of Leiden/Louvain and the benchmark and
//! statistics tooling needed to evaluate it.

pub mod cli;
pub mod detect;
pub mod engine;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod generate;
pub mod partition;
pub mod sampling;
pub mod stats;
