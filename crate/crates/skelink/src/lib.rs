//! Medial and skeletal linking structures for planar multi-region configurations,
//! with the volume integrals and positional invariants built on them.

pub mod geometry;
pub mod integrals;
pub mod invariants;
pub mod medial;
pub mod linking;
pub mod operators;
pub mod oracles;
pub mod render;
pub mod scene;
pub mod validate;

pub use geometry::Vec2;
