//! Performance analysis and optimization of multi-layer edge-caching wireless
//! networks under uncoded and coded caching.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache_model;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
pub mod linalg;
pub mod wireless;
pub mod sdp;
pub mod ee;
pub mod delay;
pub mod popularity;
pub mod experiments;
