//! Spatial reasoning over yaw-oriented bounding boxes.
//!
//! Objects live in a [`FactBase`]. The [`deduction`] module derives symbolic
//! relations (`ontop`, `near`, `seenleft`, ...) between them, and the
//! [`pipeline`] module runs pipe-delimited inference programs such as
//!
//! ```text
//! filter(volume > 0.4) | pick(left AND above) | log()
//! ```
//!
//! Coordinates are right-handed and Y-up. An object's position is the center
//! of its base footprint and its yaw (`angle`, radians) rotates it
//! counter-clockwise about +Y when viewed from above. In an object's local
//! frame +X points to its right side and +Z to its front.

pub mod deduction;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod taxonomy;

pub use deduction::{deduce, relations_between, Category, SpatialRelation};
pub use error::{Error, Result};
pub use geometry::{SectorLabel, Vec3};
pub use model::{AdjustmentSettings, AttrValue, DerivedAttributes, FactBase, SpatialObject};
pub use pipeline::{evaluate, parse_pipeline, EvaluationContext, PipelineProgram};
pub use taxonomy::Taxonomy;
