//! Behavioral model of the variable-φ pre-circuit and its power draw.
//!
//! The front-end first takes the integer part of the gate input, then
//! resolves the fractional residual in up to four halving stages. Only the
//! ideal input/output mapping is modeled.

use std::fmt;

use crate::error::{Error, Result};
use crate::mosfet::VgsGrid;

/// Supported quantization steps: 1, 1/2, 1/4 and 1/8 V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhiSetting {
    One,
    Half,
    Quarter,
    Eighth,
}

impl PhiSetting {
    pub const ALL: [PhiSetting; 4] = [
        PhiSetting::One,
        PhiSetting::Half,
        PhiSetting::Quarter,
        PhiSetting::Eighth,
    ];

    pub fn phi(self) -> f64 {
        match self {
            PhiSetting::One => 1.0,
            PhiSetting::Half => 0.5,
            PhiSetting::Quarter => 0.25,
            PhiSetting::Eighth => 0.125,
        }
    }

    /// `1 + log2(1/φ)`.
    pub fn stages(self) -> u32 {
        match self {
            PhiSetting::One => 1,
            PhiSetting::Half => 2,
            PhiSetting::Quarter => 3,
            PhiSetting::Eighth => 4,
        }
    }

    pub fn from_phi(phi: f64) -> Result<Self> {
        PhiSetting::ALL
            .into_iter()
            .find(|s| s.phi() == phi)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unsupported phi {phi}; expected 1, 0.5, 0.25 or 0.125"
                ))
            })
    }
}

impl fmt::Display for PhiSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phi())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub opamp_uw: f64,
    pub comparator_nw: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            opamp_uw: 8.0,
            comparator_nw: 12.7,
        }
    }
}

pub const DEFAULT_COMPARATORS: u32 = 4;

/// Ideal pre-circuit output: `floor(v)` plus the residual rounded to the
/// nearest multiple of φ, ties up.
pub fn variable_phi_quantize(v_in: f64, setting: PhiSetting) -> Result<f64> {
    if !(v_in >= 1.0) {
        return Err(Error::Domain(format!(
            "pre-circuit input must be >= 1 V, got {v_in}"
        )));
    }
    let base = v_in.floor();
    let grid = VgsGrid::anchored(base, base + 1.0, setting.phi());
    Ok(grid.quantize(v_in).1)
}

/// One OpAmp per stage plus the final adder, plus comparators; µW.
pub fn power_estimate(setting: PhiSetting, model: &PowerModel, comparators: u32) -> f64 {
    f64::from(setting.stages() + 1) * model.opamp_uw
        + f64::from(comparators) * model.comparator_nw / 1000.0
}

/// Number of gate levels on `[lo, hi]` at this step.
pub fn level_count(setting: PhiSetting, lo: f64, hi: f64) -> usize {
    VgsGrid::anchored(lo, hi, setting.phi()).len()
}
