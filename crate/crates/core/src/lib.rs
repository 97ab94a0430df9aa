//! Symbolic exterior calculus on conformally rescaled torus-bundle coframes,
//! with the numeric layer needed to check heterotic anomaly cancellation.

pub mod anomaly;
pub mod connection;
pub mod diffring;
pub mod error;
pub mod exterior;
pub mod frames;
pub mod gstruct;

pub use connection::{ConnectionForms, CurvatureForms, FormMatrix};
pub use diffring::{CoefExpr, Mat3, Rational};
pub use error::{Error, Result};
pub use exterior::{CoframeSpec, FormExpr};
pub use frames::FrameCatalogId;
