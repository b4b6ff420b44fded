//! Desk-scale simulator and verification library for quantum-walk-accelerated
//! Gibbs sampling of non-logconcave targets: Langevin-derived Markov kernels
//! on discretized domains, Szegedy walk quantization, annealing plus π/3
//! fixed-point amplitude amplification, partition-function estimation, and
//! numerical certification of the underlying inequality lemmas.

pub mod anneal;
pub mod chains;
pub mod domain;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod partition;
pub mod potential;
pub mod qsa;
pub mod walk;
