use thiserror::Error;

use crate::medium::{Side, ValidationReport};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid medium profile:\n{0}")]
    InvalidProfile(ValidationReport),

    #[error("malformed profile document: {0}")]
    Config(String),

    #[error("degenerate thresholds on the {side} side: eigenvalue gap {gap:e} <= {tol:e}")]
    DegenerateThresholds { side: Side, gap: f64, tol: f64 },

    #[error("lambda = {lambda} is within {tol:e} of threshold {threshold} (channel {channel}, {side} side)")]
    AtThreshold {
        side: Side,
        channel: usize,
        lambda: f64,
        threshold: f64,
        tol: f64,
    },

    #[error("Phi_+ is singular at lambda = {lambda}: |det| = {det:e} < {tol:e} (bound state nearby?)")]
    SingularPhiPlus { lambda: f64, det: f64, tol: f64 },

    #[error("open/closed split is degenerate (l_o = {l_open}, r_o = {r_open}, l_c = {l_closed}, r_c = {r_closed})")]
    DegenerateSplit {
        l_open: usize,
        r_open: usize,
        l_closed: usize,
        r_closed: usize,
    },

    #[error("turning point: Lambda_{channel}(z) - lambda changes sign near z = {z}")]
    TurningPoint { channel: usize, z: f64 },

    #[error("layer {layer} is not piecewise constant")]
    NotPiecewiseConstant { layer: usize },

    #[error("local momentum of channel {channel} in layer {layer} vanishes at lambda = {lambda}")]
    LayerResonance { layer: usize, channel: usize, lambda: f64 },

    #[error("integrator step underflow at z = {z}")]
    IntegratorStep { z: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
