//! Periocular recognition with an orthogonal-combination colour texture
//! descriptor (OC-LBCP) and a dual-stream, weight-sharing convolutional
//! network with max/sum late fusion.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`image`]: grayscale conversion, resizing and homomorphic Butterworth
//!    illumination filtering.
//! 2. [`texture`] and [`palette`]: LBP/LTP codes, their orthogonal
//!    combination into a per-pixel code map, and the EMD + MDS colour palette
//!    used to render that map as a 3-channel image.
//! 3. [`nn`] and [`model`]: a small tape-based autodiff engine and the
//!    dual-stream network trained with the summed two-head cross-entropy.
//! 4. [`ident`] and [`dataset`]: gallery/probe identification with left/right
//!    score fusion, CMC curves, dataset ingestion, splitting and a synthetic
//!    dataset generator.
//!
//! [`pipeline`] ties the stages together for training and evaluation.
//!
//! Data-parallel loops go through [`parallel`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

pub mod dataset;
pub mod encoder;
pub mod error;
pub mod ident;
pub mod image;
pub mod model;
pub mod nn;
pub mod palette;
pub mod parallel;
pub mod pipeline;
pub mod texture;

pub use error::{Error, Result};
