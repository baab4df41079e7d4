//! Image and map containers, PNG/PGM I/O, the exact Euclidean distance
//! transform and Canny edge detection.

mod canny;
mod distance;
mod image;
mod io;

pub use self::canny::{canny_edges, gradient_magnitude, CannyParams, Gradient};
pub use self::distance::distance_transform;
pub use self::image::{BinaryMask, BitDepth, DistanceField, GrayImage, ProbMap};
pub use self::io::{load_image, load_mask, load_prob_map, save_image, save_mask, save_prob_map};
