//! Cylindrical shape decomposition of voxel-based tubular objects.
//!
//! The pipeline takes a binary volume holding a union of tubes and splits it
//! into semantic components:
//!
//! 1. [`skeleton`]: sub-voxel curve skeleton from fast-marching arrival times
//!    over a centeredness cost, traced back branch by branch.
//! 2. [`skelgraph`]: the skeleton as a tree, greedily partitioned into
//!    maximal straight-ish paths (one per semantic component).
//! 3. [`sweep`]: cross-sectional sweeps near every junction, compared with a
//!    running mean contour by a normalized Hausdorff distance, to place
//!    critical points where the shape changes.
//! 4. [`reconstruct`]: cut at critical points, relabel parts along each path
//!    and rebuild the discarded intersections with generalized cylinders.
//!
//! [`eval`] holds segmentation metrics and [`synth`] procedural fixtures with
//! ground truth. Everything here is `no_std` + `alloc`; file formats, threads
//! and the command line live in the companion `csd` crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod eval;
pub mod frame;
pub mod geom;
pub(crate) mod math;
pub mod params;
pub mod reconstruct;
pub mod skeleton;
pub mod skelgraph;
pub mod sweep;
pub mod synth;
pub mod volume;

pub use error::{Error, Result, Stage};
pub use geom::{Vec2, Vec3};
pub use params::{AxisKind, DecomposeParams, HausdorffMetric};
pub use reconstruct::{decompose, DecompositionResult};
pub use volume::{BinaryVolume, Dims, LabelVolume, ScalarField, Spacing, TriangleMesh};
