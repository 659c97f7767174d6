//! Saturation-region MOSFET model used as the AJSCC space-filling curve.
//!
//! The drain current of a device in saturation with channel-length
//! modulation is
//!
//! ```text
//! I_ds = ½·k·(V_gs − V_th)²·(1 + λ·V_ds)
//! ```
//!
//! `x1` drives the drain (continuous), `x2` drives the gate after being
//! snapped to a discrete level set. Each gate level selects one current
//! curve; the drain voltage selects a point along it.

use crate::error::{Error, Result};

/// Device constants. `k_gain` is the lumped `W·μ·C_ox/L` factor in A/V².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosfetParams {
    pub k_gain: f64,
    pub v_th: f64,
    pub lambda_clm: f64,
}

impl Default for MosfetParams {
    /// 0.18 µm nMOS.
    fn default() -> Self {
        Self {
            k_gain: 155e-6,
            v_th: 0.74,
            lambda_clm: 0.037,
        }
    }
}

impl MosfetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_gain > 0.0) {
            return Err(Error::Config(format!(
                "k_gain must be > 0, got {}",
                self.k_gain
            )));
        }
        if !(self.v_th > 0.0) {
            return Err(Error::Config(format!(
                "v_th must be > 0, got {}",
                self.v_th
            )));
        }
        if !(self.lambda_clm >= 0.0) {
            return Err(Error::Config(format!(
                "lambda_clm must be >= 0, got {}",
                self.lambda_clm
            )));
        }
        Ok(())
    }

    /// Curve gain `A(g) = ½·k·(g − V_th)²`; the current at zero drain voltage.
    ///
    /// Defined at the threshold itself (where it is zero) so the degenerate
    /// curve can be inspected; anything below threshold is rejected.
    pub fn curve_gain(&self, vgs_level: f64) -> Result<f64> {
        if vgs_level < self.v_th || vgs_level.is_nan() {
            return Err(Error::BelowThreshold {
                vgs: vgs_level,
                v_th: self.v_th,
            });
        }
        let ov = vgs_level - self.v_th;
        Ok(0.5 * self.k_gain * ov * ov)
    }

    pub fn drain_current(&self, vgs: f64, vds: f64) -> Result<f64> {
        if vgs <= self.v_th || vgs.is_nan() {
            return Err(Error::BelowThreshold {
                vgs,
                v_th: self.v_th,
            });
        }
        if !(vds >= 0.0) {
            return Err(Error::Domain(format!(
                "drain voltage must be >= 0, got {vds}"
            )));
        }
        Ok(self.curve_gain(vgs)? * (1.0 + self.lambda_clm * vds))
    }

    /// Closed-form inverse of [`drain_current`](Self::drain_current) along the
    /// curve of `vgs_level`. Any finite current is accepted; currents that do
    /// not belong to the curve simply map outside the operating range.
    pub fn invert_vds(&self, vgs_level: f64, ids: f64) -> Result<f64> {
        if self.lambda_clm == 0.0 {
            return Err(Error::InversionUndefined);
        }
        if vgs_level <= self.v_th || vgs_level.is_nan() {
            return Err(Error::BelowThreshold {
                vgs: vgs_level,
                v_th: self.v_th,
            });
        }
        let a = self.curve_gain(vgs_level)?;
        Ok((ids / a - 1.0) / self.lambda_clm)
    }

    /// True when `(vgs, vds)` is outside the strict saturation region
    /// `vds > vgs − V_th`. Diagnostic only; the encoder never enforces it.
    pub fn saturation_violated(&self, vgs: f64, vds: f64) -> bool {
        vds <= vgs - self.v_th
    }
}

/// Quantizer and operating-range configuration of the encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AjsccConfig {
    pub phi: f64,
    pub vgs_lo: f64,
    pub vgs_hi: f64,
    pub vds_lo: f64,
    pub vds_hi: f64,
}

impl Default for AjsccConfig {
    fn default() -> Self {
        Self {
            phi: 0.5,
            vgs_lo: 1.0,
            vgs_hi: 5.0,
            vds_lo: 4.5,
            vds_hi: 10.0,
        }
    }
}

/// Slack for floating-point level arithmetic (e.g. 1 + 10·0.4 == 5).
const GRID_EPS: f64 = 1e-9;

impl AjsccConfig {
    pub fn validate(&self) -> Result<()> {
        let span = self.vgs_hi - self.vgs_lo;
        if !(self.phi > 0.0) || self.phi > span + GRID_EPS {
            return Err(Error::Config(format!(
                "phi must lie in (0, {span}], got {}",
                self.phi
            )));
        }
        if !(self.vds_hi > self.vds_lo) {
            return Err(Error::Config(format!(
                "vds range [{}, {}] is empty",
                self.vds_lo, self.vds_hi
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, params: &MosfetParams) -> Result<()> {
        self.validate()?;
        params.validate()?;
        if !(self.vgs_lo > params.v_th) {
            return Err(Error::Config(format!(
                "vgs_lo {} must exceed threshold {}",
                self.vgs_lo, params.v_th
            )));
        }
        Ok(())
    }
}

/// Discrete gate-voltage levels `vgs_lo + i·φ` up to `vgs_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct VgsGrid {
    lo: f64,
    phi: f64,
    levels: Vec<f64>,
}

impl VgsGrid {
    pub fn build(cfg: &AjsccConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::anchored(cfg.vgs_lo, cfg.vgs_hi, cfg.phi))
    }

    /// Grid without range validation; callers guarantee `phi > 0` and `hi >= lo`.
    pub(crate) fn anchored(lo: f64, hi: f64, phi: f64) -> Self {
        let steps = ((hi - lo) / phi + GRID_EPS).floor() as usize;
        let levels = (0..=steps).map(|i| lo + i as f64 * phi).collect();
        Self { lo, phi, levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    /// Nearest level to `v`. Exact ties go to the higher level; inputs
    /// outside the grid clamp to the nearest endpoint.
    pub fn quantize(&self, v: f64) -> (usize, f64) {
        let last = self.levels.len() - 1;
        let t = (v - self.lo) / self.phi;
        if !(t > 0.0) {
            return (0, self.levels[0]);
        }
        let below = (t.floor() as usize).min(last);
        if below == last {
            return (last, self.levels[last]);
        }
        let above = below + 1;
        let d_below = (v - self.levels[below]).abs();
        let d_above = (self.levels[above] - v).abs();
        if d_above <= d_below {
            (above, self.levels[above])
        } else {
            (below, self.levels[below])
        }
    }
}

/// Transmitter: a device plus its quantizer grid.
#[derive(Debug, Clone)]
pub struct Encoder {
    params: MosfetParams,
    cfg: AjsccConfig,
    grid: VgsGrid,
}

impl Encoder {
    pub fn new(params: MosfetParams, cfg: AjsccConfig) -> Result<Self> {
        cfg.validate_for(&params)?;
        let grid = VgsGrid::build(&cfg)?;
        Ok(Self { params, cfg, grid })
    }

    pub fn params(&self) -> &MosfetParams {
        &self.params
    }

    pub fn config(&self) -> &AjsccConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &VgsGrid {
        &self.grid
    }

    /// Quantize `x2` onto the gate grid and drive the drain with `x1`.
    pub fn encode_sample(&self, x1: f64, x2: f64) -> Result<(usize, f64)> {
        let (index, level) = self.grid.quantize(x2);
        let ids = self.params.drain_current(level, x1)?;
        Ok((index, ids))
    }

    /// Current at `(vgs_hi, vds_hi)`, an upper bound on anything the encoder
    /// emits. Anchors the frequency scaling of the channel independently of φ.
    pub fn max_current(&self) -> Result<f64> {
        self.params.drain_current(self.cfg.vgs_hi, self.cfg.vds_hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, phi: f64) -> VgsGrid {
        VgsGrid::build(&AjsccConfig {
            phi,
            vgs_lo: lo,
            vgs_hi: hi,
            ..AjsccConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid(1.0, 5.0, 1.0).levels(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let g = grid(1.0, 5.0, 0.5);
        assert_eq!(g.len(), 9);
        assert_eq!(g.level(8), 5.0);
        assert_eq!(grid(5.0, 10.0, 5.0).levels(), &[5.0, 10.0]);
        // 0.4 does not divide 4 exactly in binary.
        assert_eq!(grid(1.0, 5.0, 0.4).len(), 11);
        assert_eq!(grid(1.0, 5.0, 0.125).len(), 33);
    }

    #[test]
    fn grid_rejects_bad_config() {
        let bad = |phi, lo, hi| {
            VgsGrid::build(&AjsccConfig {
                phi,
                vgs_lo: lo,
                vgs_hi: hi,
                ..AjsccConfig::default()
            })
        };
        assert!(matches!(bad(0.0, 1.0, 5.0), Err(Error::Config(_))));
        assert!(matches!(bad(-0.5, 1.0, 5.0), Err(Error::Config(_))));
        assert!(matches!(bad(4.5, 1.0, 5.0), Err(Error::Config(_))));
        let cfg = AjsccConfig {
            vgs_lo: 0.5,
            ..AjsccConfig::default()
        };
        assert!(cfg.validate_for(&MosfetParams::default()).is_err());
    }

    #[test]
    fn quantize_examples() {
        let g = grid(1.0, 5.0, 0.5);
        assert_eq!(g.quantize(2.26).1, 2.5);
        assert_eq!(g.quantize(2.25).1, 2.5);
        assert_eq!(g.quantize(2.24).1, 2.0);
        assert_eq!(grid(1.0, 5.0, 1.0).quantize(1.0), (0, 1.0));
        assert_eq!(g.quantize(-3.0), (0, 1.0));
        assert_eq!(g.quantize(7.0), (8, 5.0));
    }

    #[test]
    fn drain_current_examples() {
        let p = MosfetParams::default();
        // ½·155e-6·0.26²·(1 + 0.037·4.5)
        let expected = 0.5 * 155e-6 * 0.0676 * 1.1665;
        let got = p.drain_current(1.0, 4.5).unwrap();
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got - 6.112e-6).abs() / 6.112e-6 < 2e-4);

        let near = p.drain_current(p.v_th + 1e-6, 7.0).unwrap();
        assert!(near > 0.0 && near < 1e-15);

        let flat = MosfetParams {
            lambda_clm: 0.0,
            ..p
        };
        assert_eq!(
            flat.drain_current(1.0, 4.5).unwrap(),
            flat.drain_current(1.0, 10.0).unwrap()
        );
        assert!(matches!(
            p.drain_current(0.74, 5.0),
            Err(Error::BelowThreshold { .. })
        ));
        assert!(matches!(
            p.drain_current(0.5, 5.0),
            Err(Error::BelowThreshold { .. })
        ));
    }

    #[test]
    fn curve_gain_examples() {
        let p = MosfetParams::default();
        let a = p.curve_gain(1.0).unwrap();
        assert!((a - 0.5 * 155e-6 * 0.26 * 0.26).abs() < 1e-18);
        assert!((a - 5.239e-6).abs() / 5.239e-6 < 1e-4);
        assert_eq!(p.curve_gain(p.v_th).unwrap(), 0.0);
        let doubled = MosfetParams {
            k_gain: 2.0 * p.k_gain,
            ..p
        };
        assert!(
            (doubled.curve_gain(2.0).unwrap() - 2.0 * p.curve_gain(2.0).unwrap()).abs() < 1e-18
        );
        assert!(p.curve_gain(0.7).is_err());
    }

    #[test]
    fn invert_examples() {
        let p = MosfetParams::default();
        let i = p.drain_current(2.0, 6.0).unwrap();
        assert!((p.invert_vds(2.0, i).unwrap() - 6.0).abs() < 6e-9);
        assert!((p.invert_vds(1.0, 6.112e-6).unwrap() - 4.5).abs() < 0.01);
        let a = p.curve_gain(3.0).unwrap();
        assert!(p.invert_vds(3.0, a).unwrap().abs() < 1e-12);
        let flat = MosfetParams {
            lambda_clm: 0.0,
            ..p
        };
        assert!(matches!(
            flat.invert_vds(2.0, 1e-3),
            Err(Error::InversionUndefined)
        ));
    }

    #[test]
    fn encode_examples() {
        let cfg = AjsccConfig {
            phi: 0.5,
            vgs_lo: 1.0,
            vgs_hi: 5.0,
            vds_lo: 4.5,
            vds_hi: 10.0,
        };
        let enc = Encoder::new(MosfetParams::default(), cfg).unwrap();
        let p = enc.params();
        assert_eq!(
            enc.encode_sample(6.0, 3.0).unwrap().1,
            p.drain_current(3.0, 6.0).unwrap()
        );
        assert_eq!(
            enc.encode_sample(6.0, 2.26).unwrap(),
            (3, p.drain_current(2.5, 6.0).unwrap())
        );
        assert_eq!(
            enc.encode_sample(6.0, 0.2).unwrap(),
            (0, p.drain_current(1.0, 6.0).unwrap())
        );
    }

    #[test]
    fn saturation_diagnostic() {
        let p = MosfetParams::default();
        assert!(!p.saturation_violated(5.0, 6.0));
        assert!(p.saturation_violated(9.0, 6.0));
    }

    #[test]
    fn slope_is_lambda_times_gain() {
        let p = MosfetParams::default();
        let h = 1e-4;
        for &g in &[1.0, 2.5, 5.0, 9.5] {
            for &v in &[4.5, 7.0, 9.9] {
                let fd = (p.drain_current(g, v + h).unwrap() - p.drain_current(g, v - h).unwrap())
                    / (2.0 * h);
                let exact = p.lambda_clm * p.curve_gain(g).unwrap();
                assert!((fd - exact).abs() / exact < 1e-6, "g={g} v={v}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(level in 0usize..9, v in 4.5f64..10.0) {
            let p = MosfetParams::default();
            let g = grid(1.0, 5.0, 0.5).level(level);
            let back = p.invert_vds(g, p.drain_current(g, v).unwrap()).unwrap();
            prop_assert!((back - v).abs() / v < 1e-9);
        }

        #[test]
        fn quantizer_error_bounded(v in 1.0f64..5.0, phi_idx in 0usize..10) {
            let phi = 0.1 * (phi_idx + 1) as f64;
            let g = grid(1.0, 5.0, phi);
            let (i, q) = g.quantize(v);
            let top = g.level(g.len() - 1);
            if v <= top {
                prop_assert!((v - q).abs() <= phi / 2.0 + 1e-12);
            }
            prop_assert_eq!(g.quantize(q), (i, q));
        }

        #[test]
        fn monotone(g1 in 1.0f64..9.0, dg in 0.01f64..1.0, v1 in 0.0f64..10.0, dv in 0.01f64..1.0) {
            let p = MosfetParams::default();
            let a = p.drain_current(g1, v1).unwrap();
            prop_assert!(p.drain_current(g1, v1 + dv).unwrap() > a);
            prop_assert!(p.drain_current(g1 + dg, v1).unwrap() > a);
        }
    }
}
