//! Simulation and exact oracles for random walks on large random trees,
//! their local times and cover times, and the continuum random tree objects
//! that describe their scaling limits.

pub mod besq;
pub mod crt;
pub mod experiments;
pub mod gaussian_field;
pub mod rand_tree;
pub mod real_tree;
pub mod rng;
pub mod stats;
pub mod walk;
