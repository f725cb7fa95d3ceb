//! HRRPGraphNet: radar high-resolution range profiles recognized as graphs.
//!
//! A range profile becomes a fully connected graph over its range cells
//! ([`graphgen`]); two width-3 convolution blocks extract local features, a
//! graph convolution mixes them along distance-weighted edges, and a linear
//! attention head pools nodes into a class score ([`model`]). Every layer has
//! a hand-derived backward pass checked against finite differences
//! ([`layers::gradcheck`]).

pub mod error;
pub mod graphgen;
pub mod layers;
pub mod data;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
pub mod trainkit;
