//! Raster and polyline primitives shared by every other module.
//!
//! Coordinates are `(row, col)` with the origin at the top-left; all distances
//! are Euclidean in pixel units. Everything here is generic over the scalar
//! type (f32 or f64) and consists of pure functions over immutable inputs.

mod distance;
mod line;
mod maxima;
mod polyline;
pub(crate) mod raster;
mod skeleton;

pub use distance::distance_transform;
pub use line::rasterize_segment;
pub use maxima::local_maxima;
pub use polyline::{densify_polyline, DensePolyline, NearestHit};
pub use raster::{crop_window, Raster};
pub use skeleton::{skeleton_segments, skeletonize, SkeletonSegment};

use num_traits::{Float, FromPrimitive, NumCast};
use thiserror::Error;

/// Floating-point scalar the geometry core is generic over: f32 or f64.
pub trait Scalar: Float + FromPrimitive + NumCast + std::fmt::Debug + Default + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + NumCast + std::fmt::Debug + Default + 'static {}

/// Cast an f64 constant into the working scalar.
pub(crate) fn cast<S: Scalar>(v: f64) -> S {
    S::from(v).expect("constant representable in scalar type")
}

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("polyline needs at least 2 distinct points, got {0}")]
    DegeneratePolyline(usize),
    #[error("raster data length {got} does not match {height}x{width}x{channels}")]
    ShapeMismatch {
        height: usize,
        width: usize,
        channels: usize,
        got: usize,
    },
    #[error("distance transform needs at least one foreground pixel")]
    EmptyMask,
    #[error("crop size must be even and >= 2, got {0}")]
    BadCropSize(usize),
    #[error("max_gap must be positive, got {0}")]
    BadMaxGap(f64),
}

/// Continuous (row, col) pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<S> {
    pub row: S,
    pub col: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(row: S, col: S) -> Self {
        Self { row, col }
    }

    pub fn is_finite(&self) -> bool {
        self.row.is_finite() && self.col.is_finite()
    }

    pub fn dist_sq(&self, other: &Self) -> S {
        let dr = self.row - other.row;
        let dc = self.col - other.col;
        dr * dr + dc * dc
    }

    pub fn dist(&self, other: &Self) -> S {
        self.dist_sq(other).sqrt()
    }

    /// Nearest integer cell, rounding half away from zero.
    pub fn round(&self) -> (i64, i64) {
        (
            NumCast::from(self.row.round()).expect("finite coordinate"),
            NumCast::from(self.col.round()).expect("finite coordinate"),
        )
    }

    pub fn offset(&self, dr: S, dc: S) -> Self {
        Self::new(self.row + dr, self.col + dc)
    }

    /// True when the point lies inside an `height` x `width` raster.
    pub fn in_image(&self, height: usize, width: usize) -> bool {
        self.row >= S::zero()
            && self.col >= S::zero()
            && self.row <= cast::<S>((height - 1) as f64)
            && self.col <= cast::<S>((width - 1) as f64)
    }

    /// Clamp the point into an `height` x `width` raster.
    pub fn clamp_to(&self, height: usize, width: usize) -> Self {
        let max_r = cast::<S>((height - 1) as f64);
        let max_c = cast::<S>((width - 1) as f64);
        Self::new(
            self.row.max(S::zero()).min(max_r),
            self.col.max(S::zero()).min(max_c),
        )
    }
}

impl<S: Scalar> From<(i64, i64)> for Point<S> {
    fn from((r, c): (i64, i64)) -> Self {
        Self::new(cast(r as f64), cast(c as f64))
    }
}
