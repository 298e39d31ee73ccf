//! Least-squares stabilized symmetric Nitsche method for cut isogeometric
//! analysis of the Poisson problem in two dimensions.
//!
//! The crate is organised bottom-up:
//!
//! * [`spline`]: uniform tensor-product B-spline spaces of degree `p >= 2`.
//! * [`geometry`]: polygonal domains immersed in a uniform background grid,
//!   element classification, cut cells and the stabilization band.
//! * [`quadrature`]: Gauss rules on full elements, cut cells and boundary segments.
//! * [`assembly`]: the stabilized and the standard symmetric Nitsche forms,
//!   solution evaluation and error norms.
//! * [`linalg`]: sparse storage, envelope Cholesky, basis function removal and
//!   extreme eigenvalues.
//! * [`harness`]: convergence, conditioning and coercivity studies.
//! * [`cli`]: the `cutiga` command line front end.

pub mod assembly;
pub mod cli;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod output;
pub mod plot;
pub mod quadrature;
pub mod spline;

mod error;

pub use error::Error;

pub use assembly::{MethodParams, ProblemData, SystemMatrices, Variant};
pub use geometry::{BackgroundGrid, ElementKind, ImmersedDomain, Polygon};
pub use linalg::{CsrMatrix, RemovalReport};
pub use spline::{SplineSpace1D, TensorSplineSpace};

pub type Point = nalgebra::Point2<f64>;
pub type Vector = nalgebra::Vector2<f64>;
