//! Kim–McCann geometry of c-divergences and first-order Laplace expansions.
//!
//! The building blocks are generic over [`Scalar`]; the aliases below fix
//! the double-precision instantiation used by the higher-level modules.

pub mod costs;
pub mod error;
pub mod expansion;
pub mod exprlang;
pub mod geometry;
pub mod graph_map;
pub mod jet;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod tensor;
pub mod verify;

pub use costs::{CostFunction, CostSpec, DomainSpec};
pub use error::{Error, Result};
pub use expansion::{DensitySpec, ExpansionResult, Orientation, QuadratureSpec};
pub use exprlang::{parse, Expr};
pub use geometry::GeometryReport;
pub use graph_map::SigmaPoint;
pub use oracle::OracleConfig;
pub use scalar::Scalar;

pub type Jet64 = jet::Jet<f64>;
pub type Jet32 = jet::Jet<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
