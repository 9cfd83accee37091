//! Map matching of sparse, noisy GPS tracks onto a road network.
//!
//! [`single_track::match_track`] reconstructs a path from one time-ordered track by
//! minimizing squared sample-to-road distances plus a weighted sum of squared
//! driving distances between consecutive matches. [`multi_track`] merges several
//! unsynchronized tracks of one route into a single ordered track first.
//! [`simulation`] and [`evaluation`] generate synthetic ground truth and score
//! reconstructions against it.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod multi_track;
pub mod parallel;
pub mod road_network;
pub mod rng;
pub mod simulation;
pub mod single_track;

pub use error::{Error, Result};
pub use geometry::Point;
pub use road_network::{RoadNetwork, RoadPoint, RoutePath};
