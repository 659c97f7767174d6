//! Ground-truth sensor fields.
//!
//! Values are drawn on the unit interval from one of six fixed densities,
//! optionally replicated across spatial blocks and temporal windows with a
//! small Gaussian jitter, and finally mapped affinely onto the sensor's
//! voltage range.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistributionKind {
    Normal,
    Uniform,
    Cosine,
    Triangular,
    InvGau,
    Weibull,
}

const NORMAL_MU: f64 = 0.5;
const NORMAL_SIGMA: f64 = 0.15;
const INVGAU_MU: f64 = 0.3;
const INVGAU_SHAPE: f64 = 1.0;
const WEIBULL_SHAPE: f64 = 1.5;
const WEIBULL_SCALE: f64 = 0.35;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

fn invgau_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (INVGAU_SHAPE / x).sqrt();
    std_normal_cdf(r * (x / INVGAU_MU - 1.0))
        + (2.0 * INVGAU_SHAPE / INVGAU_MU).exp() * std_normal_cdf(-r * (x / INVGAU_MU + 1.0))
}

fn weibull_cdf(x: f64) -> f64 {
    1.0 - (-(x / WEIBULL_SCALE).powf(WEIBULL_SHAPE)).exp()
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 6] = [
        DistributionKind::Normal,
        DistributionKind::Uniform,
        DistributionKind::Cosine,
        DistributionKind::Triangular,
        DistributionKind::InvGau,
        DistributionKind::Weibull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Normal => "normal",
            DistributionKind::Uniform => "uniform",
            DistributionKind::Cosine => "cosine",
            DistributionKind::Triangular => "triangular",
            DistributionKind::InvGau => "invgau",
            DistributionKind::Weibull => "weibull",
        }
    }

    /// Density on `[0, 1]`, zero outside.
    pub fn pdf_unit(self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            DistributionKind::Uniform => 1.0,
            DistributionKind::Normal => {
                let z = (x - NORMAL_MU) / NORMAL_SIGMA;
                let mass = std_normal_cdf((1.0 - NORMAL_MU) / NORMAL_SIGMA)
                    - std_normal_cdf(-NORMAL_MU / NORMAL_SIGMA);
                (-0.5 * z * z).exp() / (NORMAL_SIGMA * (2.0 * PI).sqrt()) / mass
            }
            DistributionKind::Cosine => 1.0 - (2.0 * PI * x).cos(),
            DistributionKind::Triangular => {
                if x < 0.5 {
                    4.0 * x
                } else {
                    4.0 * (1.0 - x)
                }
            }
            DistributionKind::InvGau => {
                if x == 0.0 {
                    return 0.0;
                }
                let d = x - INVGAU_MU;
                let raw = (INVGAU_SHAPE / (2.0 * PI * x.powi(3))).sqrt()
                    * (-INVGAU_SHAPE * d * d / (2.0 * INVGAU_MU * INVGAU_MU * x)).exp();
                raw / invgau_cdf(1.0)
            }
            DistributionKind::Weibull => {
                let t = x / WEIBULL_SCALE;
                let raw = WEIBULL_SHAPE / WEIBULL_SCALE
                    * t.powf(WEIBULL_SHAPE - 1.0)
                    * (-t.powf(WEIBULL_SHAPE)).exp();
                raw / weibull_cdf(1.0)
            }
        }
    }

    /// Density of `lo + (hi − lo)·X` at `y`.
    pub fn pdf_scaled(self, y: f64, lo: f64, hi: f64) -> f64 {
        self.pdf_unit((y - lo) / (hi - lo)) / (hi - lo)
    }

    pub fn sample_one<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DistributionKind::Uniform => rng.random::<f64>(),
            DistributionKind::Normal => {
                let n = Normal::new(NORMAL_MU, NORMAL_SIGMA).expect("valid normal");
                loop {
                    let x = n.sample(rng);
                    if (0.0..=1.0).contains(&x) {
                        return x;
                    }
                }
            }
            DistributionKind::Cosine => loop {
                let x: f64 = rng.random();
                if rng.random::<f64>() * 2.0 <= 1.0 - (2.0 * PI * x).cos() {
                    return x;
                }
            },
            DistributionKind::Triangular => {
                let u: f64 = rng.random();
                if u < 0.5 {
                    (u / 2.0).sqrt()
                } else {
                    1.0 - ((1.0 - u) / 2.0).sqrt()
                }
            }
            DistributionKind::InvGau => {
                let ig =
                    InverseGaussian::new(INVGAU_MU, INVGAU_SHAPE).expect("valid inverse gaussian");
                loop {
                    let x = ig.sample(rng);
                    if x > 0.0 && x <= 1.0 {
                        return x;
                    }
                }
            }
            DistributionKind::Weibull => {
                // Inverse CDF restricted to the mass below 1.
                let u = rng.random::<f64>() * weibull_cdf(1.0);
                WEIBULL_SCALE * (-(1.0 - u).ln()).powf(1.0 / WEIBULL_SHAPE)
            }
        }
    }

    pub fn sample_unit<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistributionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown distribution '{s}'")))
    }
}

pub fn affine_scale(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    values.iter().map(|&x| lo + (hi - lo) * x).collect()
}

pub fn affine_unscale(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    values.iter().map(|&y| (y - lo) / (hi - lo)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    Block,
    Iid,
}

impl CorrelationMode {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationMode::Block => "block",
            CorrelationMode::Iid => "iid",
        }
    }
}

impl FromStr for CorrelationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(CorrelationMode::Block),
            "iid" => Ok(CorrelationMode::Iid),
            _ => Err(Error::Config(format!("unknown correlation mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub s_p: usize,
    pub t_p: usize,
    pub correlation_mode: CorrelationMode,
    /// Jitter standard deviation on the unit scale.
    pub jitter_sigma: f64,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            nx: 20,
            ny: 20,
            nt: 20,
            s_p: 10,
            t_p: 10,
            correlation_mode: CorrelationMode::Block,
            jitter_sigma: 0.02,
            scale_lo: 5.0,
            scale_hi: 10.0,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nt == 0 {
            return Err(Error::Config("field dimensions must be positive".into()));
        }
        if self.s_p == 0 || self.nx % self.s_p != 0 || self.ny % self.s_p != 0 {
            return Err(Error::Config(format!(
                "s_p = {} must divide nx = {} and ny = {}",
                self.s_p, self.nx, self.ny
            )));
        }
        if self.t_p == 0 || self.nt % self.t_p != 0 {
            return Err(Error::Config(format!(
                "t_p = {} must divide nt = {}",
                self.t_p, self.nt
            )));
        }
        if !(self.jitter_sigma >= 0.0) {
            return Err(Error::Config("jitter_sigma must be >= 0".into()));
        }
        if !(self.scale_hi > self.scale_lo) {
            return Err(Error::Config("scale_hi must exceed scale_lo".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nt
    }

    pub fn sensors(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat index; each sensor's time series is contiguous.
    pub fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (x * self.ny + y) * self.nt + t
    }

    /// Number of (spatial block × temporal window) cells groups.
    pub fn block_count(&self) -> usize {
        (self.nx / self.s_p) * (self.ny / self.s_p) * (self.nt / self.t_p)
    }

    /// Block index of a cell.
    pub fn block_of(&self, x: usize, y: usize, t: usize) -> usize {
        let by = self.ny / self.s_p;
        let bt = self.nt / self.t_p;
        ((x / self.s_p) * by + y / self.s_p) * bt + t / self.t_p
    }
}

/// Two co-located signals over an `nx × ny × nt` grid, flattened per
/// [`FieldConfig::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct SensorField {
    pub cfg: FieldConfig,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub kind_x1: DistributionKind,
    pub kind_x2: DistributionKind,
}

fn generate_signal(cfg: &FieldConfig, kind: DistributionKind, seed: u64, signal: u64) -> Vec<f64> {
    let mut unit = vec![0.0; cfg.cells()];
    match cfg.correlation_mode {
        CorrelationMode::Block => {
            let bases: Vec<f64> = (0..cfg.block_count())
                .map(|b| kind.sample_one(&mut substream(seed, &[signal, 0, b as u64])))
                .collect();
            let mut jitter = substream(seed, &[signal, 1]);
            for x in 0..cfg.nx {
                for y in 0..cfg.ny {
                    for t in 0..cfg.nt {
                        let base = bases[cfg.block_of(x, y, t)];
                        let v = if cfg.jitter_sigma > 0.0 {
                            let z: f64 = jitter.sample(StandardNormal);
                            base + cfg.jitter_sigma * z
                        } else {
                            base
                        };
                        unit[cfg.index(x, y, t)] = v.clamp(0.0, 1.0);
                    }
                }
            }
        }
        CorrelationMode::Iid => {
            let mut rng = substream(seed, &[signal, 2]);
            for v in unit.iter_mut() {
                *v = kind.sample_one(&mut rng);
            }
        }
    }
    affine_scale(&unit, cfg.scale_lo, cfg.scale_hi)
}

pub fn generate_field(
    cfg: &FieldConfig,
    kind_x1: DistributionKind,
    kind_x2: DistributionKind,
    seed: u64,
) -> Result<SensorField> {
    cfg.validate()?;
    Ok(SensorField {
        cfg: *cfg,
        x1: generate_signal(cfg, kind_x1, seed, 1),
        x2: generate_signal(cfg, kind_x2, seed, 2),
        kind_x1,
        kind_x2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    /// CDF by trapezoid integration of the density on a fine grid.
    fn numeric_cdf(kind: DistributionKind, n: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            let a = kind.pdf_unit((i - 1) as f64 * h);
            let b = kind.pdf_unit(i as f64 * h);
            cdf[i] = cdf[i - 1] + 0.5 * h * (a + b);
        }
        cdf
    }

    fn ks_statistic(kind: DistributionKind, samples: &mut [f64]) -> f64 {
        let n_grid = 200_000;
        let cdf = numeric_cdf(kind, n_grid);
        let total = cdf[n_grid];
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let pos = (x * n_grid as f64).clamp(0.0, n_grid as f64 - 1.0);
                let k = pos.floor() as usize;
                let f = (cdf[k] + (pos - k as f64) * (cdf[k + 1] - cdf[k])) / total;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(DistributionKind::Uniform.pdf_unit(0.3), 1.0);
        assert!((DistributionKind::Cosine.pdf_unit(0.5) - 2.0).abs() < 1e-12);
        assert!(DistributionKind::Cosine.pdf_unit(0.0).abs() < 1e-12);
        assert_eq!(DistributionKind::Triangular.pdf_unit(0.5), 2.0);
        for k in DistributionKind::ALL {
            assert_eq!(k.pdf_unit(-0.1), 0.0);
            assert_eq!(k.pdf_unit(1.1), 0.0);
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let n = 200_000;
        let h = 1.0 / (n - 1) as f64;
        for k in DistributionKind::ALL {
            let ys: Vec<f64> = (0..n).map(|i| k.pdf_unit(i as f64 * h)).collect();
            let integral = h * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[n - 1]));
            assert!((integral - 1.0).abs() < 1e-6, "{k}: {integral}");
        }
    }

    #[test]
    fn sampler_ks() {
        for k in DistributionKind::ALL {
            let mut s = k.sample_unit(100_000, &mut substream(17, &[k as u64]));
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            let d = ks_statistic(k, &mut s);
            assert!(d < 0.01, "{k}: KS = {d}");
        }
    }

    #[test]
    fn uniform_mean() {
        let s = DistributionKind::Uniform.sample_unit(100_000, &mut substream(1, &[]));
        let m = s.iter().sum::<f64>() / s.len() as f64;
        assert!((m - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampling_is_seeded() {
        let a = DistributionKind::Weibull.sample_unit(50, &mut substream(2, &[]));
        let b = DistributionKind::Weibull.sample_unit(50, &mut substream(2, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn scaling() {
        assert_eq!(affine_scale(&[0.0, 1.0], 5.0, 10.0), vec![5.0, 10.0]);
        assert!((DistributionKind::Uniform.pdf_scaled(7.3, 5.0, 10.0) - 0.2).abs() < 1e-15);
        let x = [0.1, 0.37, 0.99];
        let back = affine_unscale(&affine_scale(&x, 5.0, 10.0), 5.0, 10.0);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_names() {
        for k in DistributionKind::ALL {
            assert_eq!(k.name().parse::<DistributionKind>().unwrap(), k);
        }
        assert!("gamma".parse::<DistributionKind>().is_err());
    }

    #[test]
    fn default_block_count() {
        assert_eq!(FieldConfig::default().block_count(), 8);
    }

    #[test]
    fn zero_jitter_blocks_are_constant() {
        let cfg = FieldConfig {
            jitter_sigma: 0.0,
            ..FieldConfig::default()
        };
        let f =
            generate_field(&cfg, DistributionKind::Normal, DistributionKind::Cosine, 4).unwrap();
        let mut seen = vec![None; cfg.block_count()];
        for x in 0..cfg.nx {
            for y in 0..cfg.ny {
                for t in 0..cfg.nt {
                    let b = cfg.block_of(x, y, t);
                    let v = (f.x1[cfg.index(x, y, t)], f.x2[cfg.index(x, y, t)]);
                    match seen[b] {
                        None => seen[b] = Some(v),
                        Some(prev) => assert_eq!(prev, v),
                    }
                }
            }
        }
        let distinct: std::collections::BTreeSet<u64> =
            seen.iter().map(|v| v.unwrap().0.to_bits()).collect();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn block_spread_bounded() {
        let cfg = FieldConfig::default();
        let f = generate_field(
            &cfg,
            DistributionKind::Uniform,
            DistributionKind::Triangular,
            8,
        )
        .unwrap();
        let limit = 10.0 * cfg.jitter_sigma * (cfg.scale_hi - cfg.scale_lo);
        for signal in [&f.x1, &f.x2] {
            let mut lo = vec![f64::INFINITY; cfg.block_count()];
            let mut hi = vec![f64::NEG_INFINITY; cfg.block_count()];
            for x in 0..cfg.nx {
                for y in 0..cfg.ny {
                    for t in 0..cfg.nt {
                        let b = cfg.block_of(x, y, t);
                        let v = signal[cfg.index(x, y, t)];
                        lo[b] = lo[b].min(v);
                        hi[b] = hi[b].max(v);
                    }
                }
            }
            let ok = lo.iter().zip(&hi).filter(|(l, h)| *h - *l <= limit).count();
            assert!(ok as f64 >= 0.99 * cfg.block_count() as f64);
            assert!(signal.iter().all(|v| (5.0..=10.0).contains(v)));
        }
    }

    #[test]
    fn iid_field_matches_source() {
        let cfg = FieldConfig {
            correlation_mode: CorrelationMode::Iid,
            ..FieldConfig::default()
        };
        let f =
            generate_field(&cfg, DistributionKind::Cosine, DistributionKind::InvGau, 21).unwrap();
        let mut u = affine_unscale(&f.x1, 5.0, 10.0);
        assert_eq!(u.len(), 8000);
        assert!(ks_statistic(DistributionKind::Cosine, &mut u) < 0.02);
        let mut u2 = affine_unscale(&f.x2, 5.0, 10.0);
        assert!(ks_statistic(DistributionKind::InvGau, &mut u2) < 0.02);
    }

    #[test]
    fn bad_block_sizes_rejected() {
        let cfg = FieldConfig {
            s_p: 7,
            ..FieldConfig::default()
        };
        assert!(generate_field(
            &cfg,
            DistributionKind::Uniform,
            DistributionKind::Uniform,
            1
        )
        .is_err());
    }
}
