//! Curbtrace: growing polyline graphs (road curbs) over raster maps with an
//! iteratively trained agent.
//!
//! The pipeline, end to end:
//!
//! 1. **synth** – deterministic synthetic worlds: ground-truth curb polylines,
//!    multi-channel feature rasters, a soft segmentation map and an
//!    initial-vertex heatmap.
//! 2. **candidates** – initial-vertex candidates from segmentation skeleton
//!    endpoints and heatmap maxima, merged by probability.
//! 3. **env** – the episodic growing environment: crops local observations,
//!    commits vertices under test / restricted / free update policies, and
//!    emits training samples labeled on the fly by the expert oracle.
//! 4. **policy** – the agent: a two-head function approximator (coordinate
//!    head, stop head) with exact manual gradients, plus expert and
//!    noisy-expert references.
//! 5. **trainer** – the dataset-aggregation training schedule: one restricted
//!    exploration then N free explorations per image, training after each.
//! 6. **metrics** – threshold-relaxed pixel precision/recall/F1 and the
//!    connectivity score over matched instances.
//!
//! Geometry primitives in [`geom`] are generic over the scalar type via
//! `num-traits`; the rest of the crate works with the [`f64`] aliases exported
//! at the root.

pub mod baseline;
pub mod candidates;
pub mod env;
pub mod geom;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod render;
pub mod synth;
pub mod trainer;

pub use geom::Scalar;

/// Scalar type used by the concrete pipeline.
pub type Coord = f64;

/// Continuous (row, col) pixel coordinate over [`Coord`].
pub type Point = geom::Point<Coord>;

/// Channel-planar raster over [`Coord`].
pub type Raster = geom::Raster<Coord>;

/// Densified polyline over [`Coord`].
pub type DensePolyline = geom::DensePolyline<Coord>;

/// Integer raster cell as (row, col).
pub type Pixel = (i64, i64);
