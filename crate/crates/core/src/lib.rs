//! Relaxation of nonconvex one- and two-dimensional variational problems.
//!
//! The envelope term is handled through a piecewise-linear convex envelope
//! and its exact proximal map; the remaining potential through convexity
//! splitting inside a split Bregman gradient flow. Minimizers of the relaxed
//! problem are turned back into two-atom Young measures, which locate the
//! microstructure of the original problem.

// `!(a < b)` is how the validators reject NaN along with bad orderings.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envelope;
pub mod error;
pub mod measure;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod solver1d;
pub mod solver2d;

pub use error::{RelaxError, Result};
pub use scalar::Scalar;

pub type Envelope = envelope::PiecewiseLinearEnvelope<f64>;
pub type Sampled = envelope::SampledFunction<f64>;
pub type Shrink = prox::ShrinkTable<f64>;
pub type Grid = solver1d::Grid1D<f64>;
pub type GridFn = solver1d::GridFunction1D<f64>;
pub type Potential = solver1d::PotentialV<f64>;
pub type Config = solver1d::SolverConfig<f64>;
pub type Report = solver1d::SolveReport<f64>;
