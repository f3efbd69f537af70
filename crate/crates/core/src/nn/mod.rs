//! Minimal dense-tensor reverse-mode autodiff engine.
//!
//! A [`Graph`] records operations on [`Tensor`]s; parameters live in a
//! [`ParamStore`] and enter the graph as leaves that borrow the stored value.
//! Reading the same parameter twice yields the same leaf, so gradients from
//! every use accumulate into one slot. That is how weight sharing between
//! the two network streams is expressed.
//!
//! Everything is generic over [`Real`] so gradient checks can run in `f64`
//! while training uses `f32`.

pub mod checkpoint;
pub mod gradcheck;
mod graph;
mod ops;
pub mod optim;
mod params;
mod tensor;

pub use checkpoint::Checkpoint;
pub use graph::{Gradients, Graph, Var};
pub use ops::softmax_rows;
pub use optim::{adam_step, OptimizerConfig};
pub use params::{ParamId, ParamStore};
pub use tensor::Tensor;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Floating-point element type.
pub trait Real:
    num_traits::Float
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
