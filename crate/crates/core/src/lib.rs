//! Operator inequalities for positive linear maps applied to tuples of
//! Hermitian operators: affine envelopes, Jensen-type bounds and
//! Sobolev-type estimates, all checked numerically.
//!
//! Everything is generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64`.

pub mod bounds;
pub mod envelope;
pub mod error;
pub mod hyperfunc;
pub mod linalg;
pub mod maps;
pub mod random;
pub mod real;
pub mod scalaropt;
pub mod sobolev;

pub use error::{Error, Result};
pub use real::Real;

pub type Matrix = linalg::CMatrix<f64>;
pub type Hermitian = linalg::HermitianOperator<f64>;
pub type Map = maps::PositiveLinearMap<f64>;
pub type Weights = maps::WeightFamily<f64>;
pub type Grid = maps::MapGrid<f64>;
pub type Func1 = hyperfunc::ScalarFunc1D<f64>;
pub type Func = hyperfunc::MultiFunc<f64>;
pub type Domain = hyperfunc::BoxDomain<f64>;
