//! Clustering by iterated entangled 2x2 quantum games.
//!
//! Data points are players on a weighted, directed k-nearest-neighbour
//! network. Each round every player plays an entangled game against each of
//! its neighbours, rewires its links toward better-paid players, and sharpens
//! its link strengths with an inversion-about-average update. Once the
//! network settles, keeping only each player's strongest link splits it into
//! clusters.

pub mod clustering;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod network;
pub mod pipeline;
pub mod quantum;

pub use error::{Error, Result};
