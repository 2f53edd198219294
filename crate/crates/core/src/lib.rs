//! Brute-force matching of binary feature descriptors under interchangeable
//! distance metrics, and the tooling needed to measure how the metric choice
//! changes the accuracy of RANSAC-estimated homographies.
//!
//! The pipeline for one image pair is:
//!
//! 1. detect keypoints ([`features::fast_detect`]) and describe them
//!    ([`features::brief_describe`]), or ingest descriptors from BDSC files;
//! 2. match descriptors exhaustively ([`matcher::brute_force_match`]);
//! 3. fit a homography with RANSAC ([`homography::ransac_homography`]);
//! 4. warp image 1 onto image 2 and count the residual pixels
//!    ([`imaging::alignment_residual`]).
//!
//! Per-pair scores are then compared across metrics with a two-way ANOVA
//! and pairwise McNemar tests ([`stats`], [`report`]).

pub mod bench;
pub mod descriptor;
pub mod error;
pub mod features;
pub mod homography;
pub mod imaging;
pub mod matcher;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod stats;

pub use descriptor::{contingency, popcount_bytes, BinaryDescriptor, ContingencyCounts};
pub use error::{Error, Result};
pub use homography::{Homography, PointCorrespondence, RansacParams};
pub use imaging::{GrayImage, ResidualScore};
pub use matcher::{brute_force_match, nearest, MatchPair};
pub use metrics::{distance, distance_between, MetricId};
