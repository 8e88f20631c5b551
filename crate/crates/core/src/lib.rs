//! Deterministic simulator for sequential heterogeneous destructive foraging.
//!
//! A scout team (fast, wide field of view) discovers drifting items and feeds a
//! shared belief map; a forager team (slow, single-cell view) removes every item
//! in the cell it occupies. Every episode emits an append-only [`trace`] from
//! which the [`metrics`] suite is recomputable offline, and the [`experiments`]
//! module runs seeded batches, stochastic-corruption sweeps and team ablations.
//!
//! Module map:
//!
//! * [`world`]: navigability grid, 8-connected moves, Dijkstra navigation.
//! * [`resources`]: item spawn, wind/noise drift, discretisation, collection.
//! * [`agents`]: agent state, fields of view, the shared model and idleness.
//! * [`policies`]: Greedy, Lévy-walk, uniform-random and replay policies plus
//!   the ε-corruption wrapper.
//! * [`engine`]: the fixed-phase episode loop.
//! * [`metrics`]: primary, inter-team and intra-team metrics.
//! * [`experiments`]: batches with confidence intervals, sweeps, ablations.

pub mod agents;
pub mod engine;
mod error;
pub mod experiments;
pub mod grid;
pub mod maps;
pub mod metrics;
pub mod policies;
pub mod resources;
pub mod streams;
pub mod trace;
pub mod world;

pub use error::{Error, Result};
