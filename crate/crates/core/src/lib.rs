//! Polygonal (continuous piecewise-linear) approximation of univariate
//! functions under the L1 norm.
//!
//! The crate builds three approximants on a partition of `[a, b]`:
//!
//! * the interpolant, which samples `f` at the knots;
//! * the best L2 approximation (orthogonal projection onto the hat basis);
//! * the best L1 approximation, found by Newton iterations on a smoothed L1
//!   cost whose Hessian is tridiagonal.
//!
//! Partitions are either uniform or error-equalized, with knots placed
//! according to the density `|f''|^(1/3)`. The [`analysis`] module provides
//! the matching asymptotic error bounds and a segment-budget planner, and
//! [`eval`] evaluates the result in constant time on uniform partitions and
//! by binary search otherwise.
//!
//! ```
//! use polylin::{analysis, builtins, fit, partition};
//!
//! let f = builtins::gaussian(0.0, 4.0).unwrap();
//! let p = partition::optimized_partition(&f, 0.0, 4.0, 63).unwrap();
//! let pi = fit::interpolant(&f, &p).unwrap();
//! let err = analysis::l1_distance(&f, &pi).unwrap();
//! let bound = analysis::bound_optimized_interpolant(&f, 0.0, 4.0, 63).unwrap();
//! assert!((err / bound.value - 1.0).abs() < 0.05);
//! ```

// NaN-rejecting comparisons are written as `!(x < y)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod builtins;
pub mod error;
pub mod eval;
pub mod fit;
pub mod model;
pub mod parallel;
pub mod partition;
pub mod quadrature;
pub mod tridiag;
pub mod vector;

pub use error::{Error, Result};
pub use model::{
    from_samples, hat_basis, Interval, Partition, PolygonalFunction, TargetFunction, VectorTargetFunction,
};
