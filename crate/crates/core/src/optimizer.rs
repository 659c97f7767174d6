//! End-to-end link evaluation and quantization-step selection.
//!
//! One pipeline run generates a field, encodes every cell, pushes each
//! sensor's time series through the channel, decodes it with the slope
//! matcher and scores the result by block-averaged MSE.

use rayon::prelude::*;

use crate::channel::{ChannelConfig, ChannelMode, FmChannel};
use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::mosfet::{AjsccConfig, Encoder, MosfetParams};
use crate::rng::{derive_key, substream};
use crate::source::{generate_field, DistributionKind, FieldConfig, SensorField};

/// Block-averaged squared errors, V². `mse_sum` is the mean of the two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MseReport {
    pub mse_gs: f64,
    pub mse_ds: f64,
    pub mse_sum: f64,
}

impl MseReport {
    pub fn new(mse_gs: f64, mse_ds: f64) -> Self {
        Self {
            mse_gs,
            mse_ds,
            mse_sum: 0.5 * (mse_gs + mse_ds),
        }
    }

    pub fn mean(reports: &[MseReport]) -> MseReport {
        let n = reports.len() as f64;
        let gs = reports.iter().map(|r| r.mse_gs).sum::<f64>() / n;
        let ds = reports.iter().map(|r| r.mse_ds).sum::<f64>() / n;
        MseReport::new(gs, ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub phi: f64,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub report: MseReport,
    pub seed: u64,
}

fn block_means(field: &FieldConfig, values: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; field.block_count()];
    let mut counts = vec![0usize; field.block_count()];
    for x in 0..field.nx {
        for y in 0..field.ny {
            for t in 0..field.nt {
                let b = field.block_of(x, y, t);
                sums[b] += values[field.index(x, y, t)];
                counts[b] += 1;
            }
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

fn block_mse(field: &FieldConfig, truth: &[f64], decoded: &[f64]) -> f64 {
    let a = block_means(field, truth);
    let b = block_means(field, decoded);
    a.iter().zip(&b).map(|(t, d)| (t - d).powi(2)).sum::<f64>() / a.len() as f64
}

/// Compare block means (s_p × s_p × t_p) of truth and decoded values.
pub fn block_averaged_mse(
    truth: &SensorField,
    x1_hat: &[f64],
    x2_hat: &[f64],
) -> Result<MseReport> {
    let cfg = &truth.cfg;
    cfg.validate()?;
    let n = cfg.cells();
    if truth.x1.len() != n || truth.x2.len() != n {
        return Err(Error::Shape(format!(
            "field holds {} cells, expected {n}",
            truth.x1.len()
        )));
    }
    if x1_hat.len() != n || x2_hat.len() != n {
        return Err(Error::Shape(format!(
            "decoded arrays have {} and {} cells, expected {n}",
            x1_hat.len(),
            x2_hat.len()
        )));
    }
    Ok(MseReport::new(
        block_mse(cfg, &truth.x2, x2_hat),
        block_mse(cfg, &truth.x1, x1_hat),
    ))
}

/// Everything one end-to-end run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub field: FieldConfig,
    pub kind_x1: DistributionKind,
    pub kind_x2: DistributionKind,
    pub ajscc: AjsccConfig,
    pub mosfet: MosfetParams,
    /// `ids_max_ref` is overwritten from the encoder's operating range.
    pub channel: ChannelConfig,
    pub range_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let field = FieldConfig::default();
        Self {
            field,
            kind_x1: DistributionKind::Uniform,
            kind_x2: DistributionKind::Uniform,
            ajscc: AjsccConfig {
                phi: 0.41,
                vgs_lo: field.scale_lo,
                vgs_hi: field.scale_hi,
                vds_lo: field.scale_lo,
                vds_hi: field.scale_hi,
            },
            mosfet: MosfetParams::default(),
            channel: ChannelConfig::default(),
            range_tolerance: crate::decoder::DEFAULT_RANGE_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub field: SensorField,
    pub x1_hat: Vec<f64>,
    pub x2_hat: Vec<f64>,
    pub report: MseReport,
}

const FIELD_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;

/// The channel configuration actually used: scaled to the encoder's range.
pub fn resolved_channel(cfg: &PipelineConfig) -> Result<ChannelConfig> {
    let encoder = Encoder::new(cfg.mosfet, cfg.ajscc)?;
    Ok(ChannelConfig {
        ids_max_ref: encoder.max_current()?,
        ..cfg.channel
    })
}

pub fn run_pipeline(cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    let encoder = Encoder::new(cfg.mosfet, cfg.ajscc)?;
    let channel = FmChannel::new(resolved_channel(cfg)?)?;
    let decoder = Decoder::new(
        cfg.mosfet,
        encoder.grid().clone(),
        cfg.ajscc.vds_lo,
        cfg.ajscc.vds_hi,
    )?
    .with_tolerance(cfg.range_tolerance);
    let field = generate_field(
        &cfg.field,
        cfg.kind_x1,
        cfg.kind_x2,
        derive_key(seed, &[FIELD_STREAM]),
    )?;

    let nt = cfg.field.nt;
    let decoded: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.field.sensors())
        .into_par_iter()
        .map(|sensor| {
            let span = sensor * nt..(sensor + 1) * nt;
            let ids = field.x1[span.clone()]
                .iter()
                .zip(&field.x2[span])
                .map(|(&x1, &x2)| encoder.encode_sample(x1, x2).map(|(_, i)| i))
                .collect::<Result<Vec<_>>>()?;
            let received = if channel.config().mode == ChannelMode::Ideal {
                ids
            } else {
                let mut rng = substream(seed, &[CHANNEL_STREAM, sensor as u64]);
                channel.transmit_block(&ids, &mut rng)?
            };
            let out = decoder.decode_series(&received)?;
            Ok((
                out.iter().map(|r| r.vds_hat).collect(),
                out.iter().map(|r| r.vgs_hat).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut x1_hat = Vec::with_capacity(cfg.field.cells());
    let mut x2_hat = Vec::with_capacity(cfg.field.cells());
    for (d1, d2) in decoded {
        x1_hat.extend(d1);
        x2_hat.extend(d2);
    }
    let report = block_averaged_mse(&field, &x1_hat, &x2_hat)?;
    Ok(PipelineOutput {
        field,
        x1_hat,
        x2_hat,
        report,
    })
}

pub fn run_pipeline_once(cfg: &PipelineConfig, seed: u64) -> Result<MseReport> {
    Ok(run_pipeline(cfg, seed)?.report)
}

fn mean_over_trials(cfg: &PipelineConfig, trial_seeds: &[u64]) -> Result<MseReport> {
    let reports = trial_seeds
        .par_iter()
        .map(|&s| run_pipeline_once(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(MseReport::mean(&reports))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSweep {
    pub points: Vec<SweepPoint>,
    pub phi_star: f64,
}

/// Mean MSE over `trials` runs per φ. Trial `t` uses the same seed at every
/// φ so the comparison across φ is paired.
pub fn sweep_phi(
    base: &PipelineConfig,
    phis: &[f64],
    trials: usize,
    seed: u64,
) -> Result<PhiSweep> {
    if phis.is_empty() {
        return Err(Error::Config("phi grid is empty".into()));
    }
    if phis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("phi grid must be sorted ascending".into()));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let trial_seeds: Vec<u64> = (0..trials as u64).map(|t| derive_key(seed, &[t])).collect();
    let points = phis
        .iter()
        .map(|&phi| {
            let cfg = PipelineConfig {
                ajscc: AjsccConfig { phi, ..base.ajscc },
                ..base.clone()
            };
            Ok(SweepPoint {
                phi,
                snr_db: base.channel.snr_db,
                bandwidth_hz: base.channel.bandwidth_hz,
                report: mean_over_trials(&cfg, &trial_seeds)?,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let phi_star = points
        .iter()
        .fold(None::<&SweepPoint>, |best, p| match best {
            Some(b) if b.report.mse_sum <= p.report.mse_sum => Some(b),
            _ => Some(p),
        })
        .map(|p| p.phi)
        .expect("grid non-empty");
    Ok(PhiSweep { points, phi_star })
}

/// Full SNR × bandwidth cross product at fixed φ, independent seeds per point.
pub fn sweep_snr_bw(
    base: &PipelineConfig,
    snrs: &[f64],
    bandwidths: &[f64],
    phi: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if snrs.is_empty() || bandwidths.is_empty() {
        return Err(Error::Config(
            "SNR and bandwidth grids must be non-empty".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let mut points = Vec::with_capacity(snrs.len() * bandwidths.len());
    for (bi, &bw) in bandwidths.iter().enumerate() {
        for (si, &snr) in snrs.iter().enumerate() {
            let point_seed = derive_key(seed, &[bi as u64, si as u64]);
            let cfg = PipelineConfig {
                ajscc: AjsccConfig { phi, ..base.ajscc },
                channel: ChannelConfig {
                    snr_db: snr,
                    bandwidth_hz: bw,
                    ..base.channel
                },
                ..base.clone()
            };
            let trial_seeds: Vec<u64> = (0..trials as u64)
                .map(|t| derive_key(point_seed, &[t]))
                .collect();
            points.push(SweepPoint {
                phi,
                snr_db: snr,
                bandwidth_hz: bw,
                report: mean_over_trials(&cfg, &trial_seeds)?,
                seed: point_seed,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::CorrelationMode;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ideal(phi: f64) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.ajscc.phi = phi;
        cfg.channel.mode = ChannelMode::Ideal;
        cfg
    }

    fn small_field() -> SensorField {
        generate_field(
            &FieldConfig::default(),
            DistributionKind::Uniform,
            DistributionKind::Normal,
            3,
        )
        .unwrap()
    }

    #[test]
    fn mse_identity_and_bias() {
        let f = small_field();
        let r = block_averaged_mse(&f, &f.x1, &f.x2).unwrap();
        assert_eq!(r, MseReport::new(0.0, 0.0));
        let c = 0.3;
        let d1: Vec<f64> = f.x1.iter().map(|v| v + c).collect();
        let d2: Vec<f64> = f.x2.iter().map(|v| v + c).collect();
        let r = block_averaged_mse(&f, &d1, &d2).unwrap();
        assert!((r.mse_gs - c * c).abs() < 1e-12);
        assert!((r.mse_ds - c * c).abs() < 1e-12);
        assert!((r.mse_sum - c * c).abs() < 1e-12);
        assert!(matches!(
            block_averaged_mse(&f, &d1[1..], &d2),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mse_of_noise_is_variance_of_mean() {
        let f = small_field();
        let sigma2: f64 = 0.25;
        let block = 1000.0;
        let mut acc = 0.0;
        for seed in 0..100 {
            let mut rng = substream(seed, &[42]);
            let noisy: Vec<f64> =
                f.x1.iter()
                    .map(|v| v + sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
            acc += block_averaged_mse(&f, &noisy, &f.x2).unwrap().mse_ds;
        }
        let mean = acc / 100.0;
        let expected = sigma2 / block;
        assert!(
            (mean - expected).abs() / expected < 0.2,
            "{mean} vs {expected}"
        );
    }

    #[test]
    fn ideal_pipeline_zero_jitter_phi_one() {
        let mut cfg = ideal(1.0);
        cfg.field.jitter_sigma = 0.0;
        cfg.field.t_p = cfg.field.nt;
        let out = run_pipeline(&cfg, 5).unwrap();
        // Every series stays on one curve, so the decoded gate is the quantized block value.
        let enc = Encoder::new(cfg.mosfet, cfg.ajscc).unwrap();
        let q: Vec<f64> = out
            .field
            .x2
            .iter()
            .map(|&v| enc.grid().quantize(v).1)
            .collect();
        let expected = block_mse(&cfg.field, &out.field.x2, &q);
        assert!(
            (out.report.mse_gs - expected).abs() < 1e-12,
            "{:?} {expected}",
            out.report
        );
        assert!(out.report.mse_ds <= 1e-10);
    }

    #[test]
    fn ideal_pipeline_quantization_noise_law() {
        let phi = 0.5;
        let mut cfg = ideal(phi);
        cfg.field.correlation_mode = CorrelationMode::Iid;
        let out = run_pipeline(&cfg, 9).unwrap();
        let raw = out
            .field
            .x2
            .iter()
            .map(|&v| {
                let q = Encoder::new(cfg.mosfet, cfg.ajscc)
                    .unwrap()
                    .grid()
                    .quantize(v)
                    .1;
                (v - q).powi(2)
            })
            .sum::<f64>()
            / out.field.x2.len() as f64;
        let law = phi * phi / 12.0;
        assert!((raw - law).abs() / law < 0.1, "{raw} vs {law}");
    }

    #[test]
    fn pipeline_is_deterministic() {
        let mut cfg = PipelineConfig::default();
        cfg.channel.n_fft = 256;
        cfg.field.nt = 10;
        cfg.field.t_p = 5;
        let a = run_pipeline_once(&cfg, 77).unwrap();
        let b = run_pipeline_once(&cfg, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mse_sum, 0.5 * (a.mse_gs + a.mse_ds));
    }

    #[test]
    fn noiseless_sweep_prefers_small_phi() {
        // Quantization-only regime: each sensor's series stays on one curve
        // and the curves never overlap across the drain range.
        let mut base = ideal(1.0);
        base.field.jitter_sigma = 0.0;
        base.field.t_p = base.field.nt;
        base.ajscc.vgs_lo = 1.0;
        base.ajscc.vgs_hi = 5.0;
        base.field.scale_lo = 1.0;
        base.field.scale_hi = 5.0;
        base.ajscc.vds_lo = 1.0;
        base.ajscc.vds_hi = 5.0;
        let phis = [0.5, 1.0, 2.0, 4.0];
        let sweep = sweep_phi(&base, &phis, 4, 1).unwrap();
        for w in sweep.points.windows(2) {
            assert!(
                w[1].report.mse_sum >= w[0].report.mse_sum - 1e-12,
                "{:?}",
                sweep.points
            );
        }
        assert_eq!(sweep.phi_star, 0.5);

        let single = sweep_phi(&base, &[2.0], 1, 1).unwrap();
        assert_eq!(single.phi_star, 2.0);
        assert!(sweep_phi(&base, &[1.0, 0.5], 1, 1).is_err());
        assert!(sweep_phi(&base, &[1.0], 0, 1).is_err());
    }

    #[test]
    fn single_point_snr_bw() {
        let mut base = ideal(1.0);
        base.field.nt = 10;
        base.field.t_p = 5;
        let pts = sweep_snr_bw(&base, &[0.0], &[200e3], 1.0, 1, 3).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].bandwidth_hz, 200e3);
        assert!(sweep_snr_bw(&base, &[], &[200e3], 1.0, 1, 3).is_err());
    }
}
