use crate::error::{Error, Result};

/// Numerical tolerances used across the solver.
///
/// Several entries are relative factors; the absolute tolerance is formed where
/// it is used (see the individual field docs).
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Absolute asymmetry allowed in input matrices.
    pub sym: f64,
    /// Tail eigenproblem residual bound.
    pub eig: f64,
    /// Threshold gap factor: gaps must exceed `gap·max(1, |Λ|_max)`.
    pub gap: f64,
    /// Threshold proximity factor: `threshold·(1 + |λ|)`.
    pub threshold: f64,
    /// Pseudo-inverse cut-off relative to the largest singular value.
    pub rank: f64,
    /// `det Φ₊` singularity factor relative to `‖Φ₊‖^N`.
    pub singularity: f64,
    /// Null-vector acceptance for bound states.
    pub null: f64,
    /// Bound-state root refinement tolerance in λ.
    pub refine: f64,
    /// Bound-state acceptance factor relative to the median `|D|` of a scan.
    pub det_accept: f64,
    /// Largest RK4 step as a fraction of `2 L_z`.
    pub h_max: f64,
    /// Output padding beyond `±L_z` as a fraction of `L_z`.
    pub pad: f64,
    /// Largest phase advance `|K|·h` per RK4 step.
    pub phase_step: f64,
    /// Pass/fail bound used by the identity checks.
    pub check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym: 1e-10,
            eig: 1e-10,
            gap: 1e-9,
            threshold: 1e-8,
            rank: 1e-10,
            singularity: 1e-12,
            null: 1e-7,
            refine: 1e-12,
            det_accept: 1e-8,
            h_max: 1e-3,
            pad: 0.5,
            phase_step: 0.005,
            check: 1e-8,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 13] = [
        "sym",
        "eig",
        "gap",
        "threshold",
        "rank",
        "singularity",
        "null",
        "refine",
        "det_accept",
        "h_max",
        "pad",
        "phase_step",
        "check",
    ];

    /// Overrides one entry by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Invalid(format!(
                "tolerance {name} must be finite and >= 0, got {value}"
            )));
        }
        let slot = match name {
            "sym" => &mut self.sym,
            "eig" => &mut self.eig,
            "gap" => &mut self.gap,
            "threshold" => &mut self.threshold,
            "rank" => &mut self.rank,
            "singularity" => &mut self.singularity,
            "null" => &mut self.null,
            "refine" => &mut self.refine,
            "det_accept" => &mut self.det_accept,
            "h_max" => &mut self.h_max,
            "pad" => &mut self.pad,
            "phase_step" => &mut self.phase_step,
            "check" => &mut self.check,
            _ => {
                return Err(Error::Invalid(format!(
                    "unknown tolerance '{name}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Parses `NAME=VALUE`.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected NAME=VALUE, got '{assignment}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad value in '{assignment}'")))?;
        self.set(name.trim(), value)
    }

    pub fn threshold_abs(&self, lambda_abs: f64) -> f64 {
        self.threshold * (1.0 + lambda_abs)
    }
}
