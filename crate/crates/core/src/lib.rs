//! Finite-truncation toolkit for coarse geometry.
//!
//! Unbounded metric spaces are presented as filtrations of finite balls; every
//! asymptotic verdict computed here is stamped with the depth and scales it
//! was tested at.

pub mod coarse_algebra;
pub mod cohomology;
pub mod config;
pub mod connect;
pub mod coproduct;
pub mod error;
pub mod excisive;
pub mod filtration;
pub mod groups;
pub mod maps;
pub mod metric;
pub mod rips;
pub mod scalar;

pub use error::{CoarseError, Result};
pub use filtration::{builtin_space, FiltrationSpace, SpaceName};
pub use maps::{ComplexMap, ControlFunction, PointMap};
pub use metric::{Ball, FiniteMetricSpace};
pub use scalar::Scalar;

/// Exact integer-metric space.
pub type IntSpace = FiniteMetricSpace<i64>;
/// Real-valued metric space.
pub type RealSpace = FiniteMetricSpace<f64>;
pub type IntFiltration = FiltrationSpace<i64>;
pub type RealFiltration = FiltrationSpace<f64>;
pub type IntMap = PointMap<i64>;
pub type RealMap = PointMap<f64>;
