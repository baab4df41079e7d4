//! Detection of worm-shaped objects from skeleton and endpoint probability maps.
//!
//! The processing chain is:
//!
//! 1. **Skeletons** ([`skelgeo`]) – threshold and thin the skeleton map, classify
//!    skeleton pixels into geometric endpoints, junctions and line points.
//! 2. **Untangling** ([`untangle`]) – cut fused worms at predicted endpoints,
//!    cut at junctions and reconnect segments by smallest steering angle.
//! 3. **Masks** ([`maskrecon`]) – estimate the body radius along each skeleton
//!    from Canny edges and fill discs.
//!
//! Training targets and the slack-weighted focal loss live in [`lossmap`],
//! the bipartite-matching detection metric in [`eval`], and a seeded scene
//! generator used as a test oracle in [`synth`].

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detections;
pub mod error;
pub mod eval;
pub mod geom;
pub mod lossmap;
pub mod maskrecon;
pub mod pipeline;
pub mod raster;
pub mod skelgeo;
pub mod synth;
pub mod untangle;

pub use error::{Error, Result};
pub use geom::Pixel;
pub use raster::{BinaryMask, DistanceField, GrayImage, ProbMap};
