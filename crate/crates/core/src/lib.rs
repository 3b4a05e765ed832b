//! Simulation and analysis toolkit for networked transmission of short melodies.
//!
//! Agents placed on a fixed-degree network repeatedly *choose* one melody from
//! their local environment and *reproduce* it; the product becomes visible to
//! their neighbours at the next iteration. The crate provides:
//!
//! - [`graphnet`]: lattice, random regular, modular and disconnected topologies,
//!   plus average path length and betweenness centrality.
//! - [`melody`]: five-note pitch vectors, interval arithmetic and the matched
//!   Gaussian deviation model used by the no-reproduction ablation.
//! - [`behavior`]: proxy pleasantness scorers, selection policies and
//!   reproduction models standing in for human participants.
//! - [`engine`]: synchronous and event-driven asynchronous experiment runners
//!   producing complete trial logs.
//! - [`analysis`]: contour clustering (PCA, k-means, silhouette) and the
//!   population statistics computed from trial logs.

pub mod analysis;
pub mod behavior;
pub mod engine;
mod error;
pub mod graphnet;
pub mod melody;
pub mod seed;

pub use error::{Error, Result};
