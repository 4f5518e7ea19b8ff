//! Stationary multichannel scattering for `∂(g ∂u) + (V − λ g) u = 0` on the
//! whole line, with constant but different tails at the two infinities.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the bottom of this file fix the scalar to `f64`.

pub mod asymptotics;
pub mod bound;
pub mod config;
pub mod error;
pub mod jost;
pub mod linalg;
pub mod medium;
pub mod num;
pub mod oracle;
pub mod presets;
pub mod residual;
pub mod smatrix;
pub mod spectral;
pub mod tolerances;
pub mod transition;

pub use error::{Error, Result};
pub use medium::{
    diagonalize_ends, sample_medium, validate_profile, AsymptoticBasis, Coefficients, Layer, LayerKind, Medium,
    MediumProfile, SampleNode, Side, ValidationReport,
};
pub use num::{CMat, RMat, Real, C};
pub use spectral::{channel_momenta, classify_channels, ChannelClassification, ChannelMomenta, Sheet, SpectralPoint};
pub use tolerances::Tolerances;

pub type Profile = MediumProfile<f64>;
pub type Medium64 = Medium<f64>;
pub type Basis = AsymptoticBasis<f64>;
pub type Point = SpectralPoint<f64>;
pub type Classification = ChannelClassification<f64>;
