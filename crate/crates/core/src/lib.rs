//! Three-dimensional regular-shaped geometry-based stochastic model of
//! non-isotropic MIMO vehicle-to-vehicle Ricean fading channels, its
//! sum-of-sinusoids simulator and the estimators used to check one against
//! the other.

pub mod curve;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod mev;
pub mod numerics;
pub mod reference;
pub mod sos;
pub mod testkit;
pub mod vmf;

pub use curve::{CurveValues, ModelTag, StatCurve};
pub use error::{Error, Result};
pub use geometry::{Region, ScenarioConfig};
pub use mev::{AngleSet, CoupledAngleSets, MevPairing};
pub use numerics::spectral::UniformGrid;
pub use sos::{ChannelRealization, SosParameterization};
pub use vmf::VmfParams;
