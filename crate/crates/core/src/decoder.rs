//! Slope-matching receiver.
//!
//! Two consecutive currents are assumed to come from the same gate level.
//! Their mean times λ approximates the curve slope; every candidate level
//! has an exact slope λ·A(g). Candidates are ranked by slope mismatch and
//! the first one whose drain-voltage inversions fall inside the known
//! transmitter range wins (range-check correction).

use crate::error::{Error, Result};
use crate::mosfet::{MosfetParams, VgsGrid};

/// Default slack around the drain range when range-checking inversions, V.
pub const DEFAULT_RANGE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub vgs_hat: f64,
    pub vds_hat: f64,
    pub level_index: usize,
    /// Position of the accepted candidate in slope-match order; 0 when the
    /// best match was accepted or when no candidate passed the range check.
    pub correction_rank: usize,
}

/// `λ·(i1 + i2)/2`.
pub fn pair_slope_estimate(i1: f64, i2: f64, params: &MosfetParams) -> f64 {
    params.lambda_clm * 0.5 * (i1 + i2)
}

/// Exact slope of the curve at gate level `g`, `λ·A(g)`.
pub fn candidate_slope(params: &MosfetParams, g: f64) -> Result<f64> {
    Ok(params.lambda_clm * params.curve_gain(g)?)
}

#[derive(Debug, Clone)]
pub struct Decoder {
    params: MosfetParams,
    grid: VgsGrid,
    slopes: Vec<f64>,
    vds_lo: f64,
    vds_hi: f64,
    tolerance: f64,
    range_check: bool,
}

impl Decoder {
    pub fn new(params: MosfetParams, grid: VgsGrid, vds_lo: f64, vds_hi: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Config("decoder grid is empty".into()));
        }
        if params.lambda_clm == 0.0 {
            return Err(Error::InversionUndefined);
        }
        if !(vds_hi > vds_lo) {
            return Err(Error::Config(format!(
                "vds range [{vds_lo}, {vds_hi}] is empty"
            )));
        }
        let slopes = grid
            .levels()
            .iter()
            .map(|&g| candidate_slope(&params, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            grid,
            slopes,
            vds_lo,
            vds_hi,
            tolerance: DEFAULT_RANGE_TOLERANCE,
            range_check: true,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Disable the range check: always take the best slope match.
    pub fn without_correction(mut self) -> Self {
        self.range_check = false;
        self
    }

    pub fn grid(&self) -> &VgsGrid {
        &self.grid
    }

    fn in_range(&self, v: f64) -> bool {
        v >= self.vds_lo - self.tolerance && v <= self.vds_hi + self.tolerance
    }

    fn invert(&self, index: usize, ids: f64) -> f64 {
        (ids / (self.slopes[index] / self.params.lambda_clm) - 1.0) / self.params.lambda_clm
    }

    /// Candidate level indices in slope-match order (ties by grid order).
    pub fn rank_candidates(&self, i1: f64, i2: f64) -> Vec<usize> {
        let est = pair_slope_estimate(i1, i2, &self.params);
        let mut order: Vec<usize> = (0..self.slopes.len()).collect();
        order.sort_by(|&a, &b| {
            let da = (est - self.slopes[a]).abs();
            let db = (est - self.slopes[b]).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        order
    }

    pub fn decode_pair(&self, i1: f64, i2: f64) -> (DecodeResult, DecodeResult) {
        let order = self.rank_candidates(i1, i2);
        let mut chosen = (order[0], 0);
        if self.range_check {
            for (rank, &idx) in order.iter().enumerate() {
                if self.in_range(self.invert(idx, i1)) && self.in_range(self.invert(idx, i2)) {
                    chosen = (idx, rank);
                    break;
                }
            }
        }
        let (idx, rank) = chosen;
        let g = self.grid.level(idx);
        let make = |ids| DecodeResult {
            vgs_hat: g,
            vds_hat: self.invert(idx, ids),
            level_index: idx,
            correction_rank: rank,
        };
        (make(i1), make(i2))
    }

    /// Decode a per-sensor time series with sliding pairs `(k−1, k)`; the
    /// first sample borrows its successor.
    pub fn decode_series(&self, ids: &[f64]) -> Result<Vec<DecodeResult>> {
        if ids.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: ids.len(),
            });
        }
        let mut out = Vec::with_capacity(ids.len());
        out.push(self.decode_pair(ids[0], ids[1]).0);
        out.extend(ids.windows(2).map(|w| self.decode_pair(w[0], w[1]).1));
        Ok(out)
    }
}
