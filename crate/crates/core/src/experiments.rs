//! Batch experiments: configuration resolution, runners and CSV output.
//!
//! Every experiment starts from built-in defaults, which a flat
//! `key = value` config file and then explicit overrides may replace. Keys
//! an experiment does not know are rejected. Each CSV is written next to a
//! manifest that echoes the resolved configuration, so feeding a manifest
//! back in as a config file reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{ChannelConfig, ChannelMode};
use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::kde::{
    classification_accuracy, estimate_source, scaled_candidates, KdeConfig, KernelKind,
};
use crate::mosfet::{AjsccConfig, MosfetParams, VgsGrid};
use crate::optimizer::{
    run_pipeline, sweep_phi, sweep_snr_bw, PhiSweep, PipelineConfig, SweepPoint,
};
use crate::power::{level_count, power_estimate, PhiSetting, PowerModel};
use crate::rng::{derive_key, label_key};
use crate::source::{CorrelationMode, DistributionKind, FieldConfig};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    RmseSweep,
    EstimateAccuracy,
    PhiOpt,
    SnrBw,
    Power,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::RmseSweep,
        ExperimentKind::EstimateAccuracy,
        ExperimentKind::PhiOpt,
        ExperimentKind::SnrBw,
        ExperimentKind::Power,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RmseSweep => "rmse-sweep",
            ExperimentKind::EstimateAccuracy => "estimate-accuracy",
            ExperimentKind::PhiOpt => "phi-opt",
            ExperimentKind::SnrBw => "snr-bw",
            ExperimentKind::Power => "power",
        }
    }

    fn defaults(self) -> Vec<(&'static str, &'static str)> {
        let mut keys = vec![("seed", "0")];
        match self {
            ExperimentKind::RmseSweep => keys.extend_from_slice(&[
                ("k_gain", "0.000155"),
                ("v_th", "0.74"),
                ("lambda_clm", "0.037"),
                ("vgs_lo", "1"),
                ("vgs_hi", "5"),
                ("vds_lo", "4.5"),
                ("vds_hi", "10"),
                ("vds_step", "0.1"),
                ("vds_count", "55"),
                ("range_tolerance", "0.05"),
                ("phi_grid", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"),
            ]),
            ExperimentKind::EstimateAccuracy => {
                keys.extend_from_slice(PIPELINE_KEYS);
                keys.extend_from_slice(&[
                    ("phi", "0.2"),
                    ("snr_db", "20"),
                    ("bandwidth_hz", "200000"),
                    ("kinds", "normal,uniform,cosine,triangular,invgau,weibull"),
                    ("h_grid", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"),
                    ("kernels", "normal,box,triangle,epanechnikov"),
                    ("integration_points", "1024"),
                    ("density_floor", "1e-12"),
                    ("sweep_phi", "0.1,0.5,1"),
                    ("sweep_snr_db", "-20,0"),
                    ("sweep_bandwidth_hz", "50000,500000"),
                ]);
            }
            ExperimentKind::PhiOpt => {
                keys.extend_from_slice(PIPELINE_KEYS);
                keys.extend_from_slice(&[
                    ("snr_db", "-20"),
                    ("bandwidth_hz", "410000"),
                    ("kind_x1", "uniform"),
                    ("kind_x2", "uniform"),
                    (
                        "phi_grid",
                        "0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1",
                    ),
                ]);
            }
            ExperimentKind::SnrBw => {
                keys.extend_from_slice(PIPELINE_KEYS);
                keys.extend_from_slice(&[
                    ("phi", "0.41"),
                    ("kind_x1", "uniform"),
                    ("kind_x2", "uniform"),
                    ("snr_grid", "-60,-50,-40,-30,-20,-10,0"),
                    ("bandwidth_grid", "50000,200000,500000"),
                ]);
            }
            ExperimentKind::Power => keys.extend_from_slice(&[
                ("opamp_uw", "8"),
                ("comparator_nw", "12.7"),
                ("comparators", "4"),
                ("vgs_lo", "1"),
                ("vgs_hi", "5"),
            ]),
        }
        keys
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Keys shared by the experiments that run the full link.
const PIPELINE_KEYS: &[(&str, &str)] = &[
    ("nx", "20"),
    ("ny", "20"),
    ("nt", "20"),
    ("s_p", "10"),
    ("t_p", "10"),
    ("correlation_mode", "block"),
    ("jitter_sigma", "0.02"),
    ("scale_lo", "5"),
    ("scale_hi", "10"),
    ("k_gain", "0.000155"),
    ("v_th", "0.74"),
    ("lambda_clm", "0.037"),
    ("vgs_lo", "5"),
    ("vgs_hi", "10"),
    ("vds_lo", "5"),
    ("vds_hi", "10"),
    ("range_tolerance", "0.05"),
    ("n_fft", "8192"),
    ("rician_k", "10"),
    ("doppler_frac", "0.02"),
    ("channel_mode", "faded"),
    ("trials", "20"),
];

/// Manifest entries that describe a run rather than configure it. They are
/// accepted in config files so a manifest can be replayed.
const METADATA_KEYS: &[&str] = &["experiment", "output", "code_version"];

/// Parse flat `key = value` text. `#` starts a comment; blank lines are
/// skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                n + 1
            ))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Split `key=value` as given on the command line.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got '{arg}'")))?;
    if key.trim().is_empty() {
        return Err(Error::Config(format!("empty key in '{arg}'")));
    }
    Ok((key.trim().to_string(), value.trim().to_string()))
}

/// The resolved configuration of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    kind: ExperimentKind,
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let values = kind
            .defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { kind, values }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown key '{key}' for experiment {}",
                self.kind
            ))),
        }
    }

    /// Apply pairs read from a config file, allowing manifest metadata.
    pub fn apply_file(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (key, value) in pairs {
            if key == "experiment" && value != self.kind.name() {
                return Err(Error::Config(format!(
                    "config is for experiment '{value}', not {}",
                    self.kind
                )));
            }
            if METADATA_KEYS.contains(&key.as_str()) {
                continue;
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("experiment {} has no key '{key}'", self.kind)))
    }

    pub fn parse<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|e| Error::Config(format!("bad value '{raw}' for {key}: {e}")))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn list<T>(&self, key: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.get(key)?;
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|e| Error::Config(format!("bad item '{item}' in {key}: {e}")))
            })
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse("seed")
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Seed for point streams of this experiment.
    fn experiment_seed(&self) -> Result<u64> {
        Ok(derive_key(self.seed()?, &[label_key(self.kind.name())]))
    }

    fn trials(&self) -> Result<usize> {
        let trials: usize = self.parse("trials")?;
        if trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(trials)
    }

    fn mosfet(&self) -> Result<MosfetParams> {
        let p = MosfetParams {
            k_gain: self.parse("k_gain")?,
            v_th: self.parse("v_th")?,
            lambda_clm: self.parse("lambda_clm")?,
        };
        p.validate()?;
        Ok(p)
    }

    fn ajscc(&self, phi: f64) -> Result<AjsccConfig> {
        Ok(AjsccConfig {
            phi,
            vgs_lo: self.parse("vgs_lo")?,
            vgs_hi: self.parse("vgs_hi")?,
            vds_lo: self.parse("vds_lo")?,
            vds_hi: self.parse("vds_hi")?,
        })
    }

    /// Link configuration at gate step `phi`, SNR and bandwidth.
    fn pipeline(&self, phi: f64, snr_db: f64, bandwidth_hz: f64) -> Result<PipelineConfig> {
        let field = FieldConfig {
            nx: self.parse("nx")?,
            ny: self.parse("ny")?,
            nt: self.parse("nt")?,
            s_p: self.parse("s_p")?,
            t_p: self.parse("t_p")?,
            correlation_mode: self.parse::<CorrelationMode>("correlation_mode")?,
            jitter_sigma: self.parse("jitter_sigma")?,
            scale_lo: self.parse("scale_lo")?,
            scale_hi: self.parse("scale_hi")?,
        };
        field.validate()?;
        let mosfet = self.mosfet()?;
        let ajscc = self.ajscc(phi)?;
        ajscc.validate_for(&mosfet)?;
        let channel = ChannelConfig {
            snr_db,
            bandwidth_hz,
            n_fft: self.parse("n_fft")?,
            rician_k: self.parse("rician_k")?,
            doppler_frac: self.parse("doppler_frac")?,
            mode: self.parse::<ChannelMode>("channel_mode")?,
            ..ChannelConfig::default()
        };
        channel.validate()?;
        let (kind_x1, kind_x2) = if self.values.contains_key("kind_x1") {
            (self.parse("kind_x1")?, self.parse("kind_x2")?)
        } else {
            (DistributionKind::Uniform, DistributionKind::Uniform)
        };
        Ok(PipelineConfig {
            field,
            kind_x1,
            kind_x2,
            ajscc,
            mosfet,
            channel,
            range_tolerance: self.parse("range_tolerance")?,
        })
    }
}

/// One experiment invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: Option<u64>,
    /// Pairs from a config file, applied before `seed` and `overrides`.
    pub config: Vec<(String, String)>,
    pub overrides: Vec<(String, String)>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            seed: None,
            config: Vec::new(),
            overrides: Vec::new(),
            output_dir: output_dir.into(),
        }
    }

    /// Defaults, then the config file, then the seed flag, then overrides.
    pub fn resolve(&self) -> Result<Settings> {
        let mut settings = Settings::defaults(self.kind);
        settings.apply_file(&self.config)?;
        if let Some(seed) = self.seed {
            settings.set("seed", &seed.to_string())?;
        }
        for (key, value) in &self.overrides {
            settings.set(key, value)?;
        }
        Ok(settings)
    }
}

/// Noiseless codec accuracy at one φ, pooled over every curve and drain
/// voltage. "Before" ranks by slope match alone; "after" adds the range
/// check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseRow {
    pub phi: f64,
    pub rmse_vgs_before: f64,
    pub rmse_vds_before: f64,
    pub rmse_vgs_after: f64,
    pub rmse_vds_after: f64,
}

pub fn rmse_sweep(s: &Settings) -> Result<Vec<RmseRow>> {
    let params = s.mosfet()?;
    let step: f64 = s.parse("vds_step")?;
    let count: usize = s.parse("vds_count")?;
    let tolerance: f64 = s.parse("range_tolerance")?;
    let phis: Vec<f64> = s.list("phi_grid")?;
    if count < 2 {
        return Err(Error::Config("vds_count must be >= 2".into()));
    }
    phis.iter()
        .map(|&phi| {
            let cfg = s.ajscc(phi)?;
            let grid = VgsGrid::build(&cfg)?;
            let vds: Vec<f64> = (0..count).map(|i| cfg.vds_lo + i as f64 * step).collect();
            let after = Decoder::new(params, grid.clone(), cfg.vds_lo, cfg.vds_hi)?
                .with_tolerance(tolerance);
            let before = after.clone().without_correction();
            let mut sq = [0.0; 4];
            for &g in grid.levels() {
                let ids = vds
                    .iter()
                    .map(|&v| params.drain_current(g, v))
                    .collect::<Result<Vec<_>>>()?;
                for (slot, decoder) in [(0, &before), (2, &after)] {
                    for (r, &v) in decoder.decode_series(&ids)?.iter().zip(&vds) {
                        sq[slot] += (r.vgs_hat - g).powi(2);
                        sq[slot + 1] += (r.vds_hat - v).powi(2);
                    }
                }
            }
            let n = (grid.len() * count) as f64;
            let rmse = |x: f64| (x / n).sqrt();
            Ok(RmseRow {
                phi,
                rmse_vgs_before: rmse(sq[0]),
                rmse_vds_before: rmse(sq[1]),
                rmse_vgs_after: rmse(sq[2]),
                rmse_vds_after: rmse(sq[3]),
            })
        })
        .collect()
}

/// Identification accuracy for one true kind at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    /// `fixed`, or the name of the parameter being swept.
    pub sweep: &'static str,
    pub phi: f64,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub kind: DistributionKind,
    pub trials: usize,
    pub accuracy_x1: f64,
    pub accuracy_x2: f64,
}

/// Per-candidate minimum KLD for one decoded signal of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KldRow {
    pub trial: usize,
    pub true_kind: DistributionKind,
    pub signal: &'static str,
    pub candidate: DistributionKind,
    pub min_kld: f64,
    pub best_h: f64,
    pub best_kernel: KernelKind,
    pub selected: DistributionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyOutput {
    pub rows: Vec<AccuracyRow>,
    /// Scores at the fixed operating point only.
    pub kld: Vec<KldRow>,
}

impl AccuracyOutput {
    pub fn fixed(&self) -> impl Iterator<Item = &AccuracyRow> {
        self.rows.iter().filter(|r| r.sweep == "fixed")
    }
}

struct TrialOutcome {
    kind: DistributionKind,
    trial: usize,
    x1: crate::kde::EstimationResult,
    x2: crate::kde::EstimationResult,
}

fn accuracy_point(
    s: &Settings,
    kde: &KdeConfig,
    kinds: &[DistributionKind],
    point: (&'static str, f64, f64, f64),
    point_seed: u64,
) -> Result<(Vec<AccuracyRow>, Vec<TrialOutcome>)> {
    let (sweep, phi, snr_db, bandwidth_hz) = point;
    let trials = s.trials()?;
    let base = s.pipeline(phi, snr_db, bandwidth_hz)?;
    let (lo, hi) = (base.field.scale_lo, base.field.scale_hi);
    let candidates = scaled_candidates(&DistributionKind::ALL, lo, hi);
    let jobs: Vec<(usize, usize)> = (0..kinds.len())
        .flat_map(|k| (0..trials).map(move |t| (k, t)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(k, t)| {
            let kind = kinds[k];
            let cfg = PipelineConfig {
                kind_x1: kind,
                kind_x2: kind,
                ..base.clone()
            };
            let out = run_pipeline(&cfg, derive_key(point_seed, &[kind as u64, t as u64]))?;
            Ok(TrialOutcome {
                kind,
                trial: t,
                x1: estimate_source(&out.x1_hat, &candidates, kde, lo, hi)?,
                x2: estimate_source(&out.x2_hat, &candidates, kde, lo, hi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tally = |pick: fn(&TrialOutcome) -> DistributionKind| {
        classification_accuracy(
            &outcomes
                .iter()
                .map(|o| (o.kind, pick(o)))
                .collect::<Vec<_>>(),
        )
    };
    let acc1 = tally(|o| o.x1.selected);
    let acc2 = tally(|o| o.x2.selected);
    let rows = kinds
        .iter()
        .map(|kind| AccuracyRow {
            sweep,
            phi,
            snr_db,
            bandwidth_hz,
            kind: *kind,
            trials,
            accuracy_x1: acc1[kind].accuracy(),
            accuracy_x2: acc2[kind].accuracy(),
        })
        .collect();
    Ok((rows, outcomes))
}

pub fn estimate_accuracy(s: &Settings) -> Result<AccuracyOutput> {
    s.trials()?;
    let kde = KdeConfig {
        h_grid: s.list("h_grid")?,
        kernels: s.list("kernels")?,
        integration_points: s.parse("integration_points")?,
        density_floor: s.parse("density_floor")?,
    };
    kde.validate()?;
    let kinds: Vec<DistributionKind> = s.list("kinds")?;
    if kinds.is_empty() {
        return Err(Error::Config("kinds must not be empty".into()));
    }
    if kinds
        .iter()
        .enumerate()
        .any(|(i, k)| kinds[..i].contains(k))
    {
        return Err(Error::Config("kinds must not repeat".into()));
    }
    let phi: f64 = s.parse("phi")?;
    let snr: f64 = s.parse("snr_db")?;
    let bw: f64 = s.parse("bandwidth_hz")?;

    let mut points = vec![("fixed", phi, snr, bw)];
    points.extend(
        s.list::<f64>("sweep_phi")?
            .into_iter()
            .map(|p| ("phi", p, snr, bw)),
    );
    points.extend(
        s.list::<f64>("sweep_snr_db")?
            .into_iter()
            .map(|v| ("snr_db", phi, v, bw)),
    );
    points.extend(
        s.list::<f64>("sweep_bandwidth_hz")?
            .into_iter()
            .map(|b| ("bandwidth_hz", phi, snr, b)),
    );

    let seed = s.experiment_seed()?;
    let mut rows = Vec::new();
    let mut kld = Vec::new();
    for (index, &point) in points.iter().enumerate() {
        let (point_rows, outcomes) =
            accuracy_point(s, &kde, &kinds, point, derive_key(seed, &[index as u64]))?;
        rows.extend(point_rows);
        if index == 0 {
            for o in &outcomes {
                for (signal, est) in [("x1", &o.x1), ("x2", &o.x2)] {
                    kld.extend(est.scores.iter().map(|c| KldRow {
                        trial: o.trial,
                        true_kind: o.kind,
                        signal,
                        candidate: c.kind,
                        min_kld: c.min_kld,
                        best_h: c.best_h,
                        best_kernel: c.best_kernel,
                        selected: est.selected,
                    }));
                }
            }
        }
    }
    Ok(AccuracyOutput { rows, kld })
}

pub fn phi_opt(s: &Settings) -> Result<PhiSweep> {
    let phis: Vec<f64> = s.list("phi_grid")?;
    let first = *phis
        .first()
        .ok_or_else(|| Error::Config("phi_grid is empty".into()))?;
    let base = s.pipeline(first, s.parse("snr_db")?, s.parse("bandwidth_hz")?)?;
    for &phi in &phis {
        s.ajscc(phi)?.validate_for(&base.mosfet)?;
    }
    sweep_phi(&base, &phis, s.trials()?, s.experiment_seed()?)
}

pub fn snr_bw(s: &Settings) -> Result<Vec<SweepPoint>> {
    let phi: f64 = s.parse("phi")?;
    let snrs: Vec<f64> = s.list("snr_grid")?;
    let bws: Vec<f64> = s.list("bandwidth_grid")?;
    let base = s.pipeline(
        phi,
        snrs.first().copied().unwrap_or(0.0),
        bws.first().copied().unwrap_or(1.0),
    )?;
    for &bw in &bws {
        ChannelConfig {
            bandwidth_hz: bw,
            ..base.channel
        }
        .validate()?;
    }
    sweep_snr_bw(&base, &snrs, &bws, phi, s.trials()?, s.experiment_seed()?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub phi: f64,
    pub levels: usize,
    pub stages: u32,
    pub power_uw: f64,
}

pub fn power_table(s: &Settings) -> Result<Vec<PowerRow>> {
    let model = PowerModel {
        opamp_uw: s.parse("opamp_uw")?,
        comparator_nw: s.parse("comparator_nw")?,
    };
    if !(model.opamp_uw > 0.0 && model.comparator_nw > 0.0) {
        return Err(Error::Config("power model terms must be > 0".into()));
    }
    let comparators: u32 = s.parse("comparators")?;
    let (lo, hi): (f64, f64) = (s.parse("vgs_lo")?, s.parse("vgs_hi")?);
    if !(hi - lo >= 1.0) {
        return Err(Error::Config(
            "power table needs vgs_hi - vgs_lo >= 1".into(),
        ));
    }
    Ok(PhiSetting::ALL
        .into_iter()
        .map(|setting| PowerRow {
            phi: setting.phi(),
            levels: level_count(setting, lo, hi),
            stages: setting.stages(),
            power_uw: power_estimate(setting, &model, comparators),
        })
        .collect())
}

/// A CSV body: header plus rows of already formatted fields.
struct Table {
    file: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

fn write_table(dir: &Path, settings: &Settings, table: &Table) -> Result<PathBuf> {
    let path = dir.join(table.file);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;

    let mut manifest = format!(
        "experiment = {}\noutput = {}\ncode_version = {CODE_VERSION}\n",
        settings.kind, table.file
    );
    for (key, value) in settings.entries() {
        manifest.push_str(&format!("{key} = {value}\n"));
    }
    let stem = table.file.trim_end_matches(".csv");
    fs::write(dir.join(format!("{stem}.manifest")), manifest)?;
    Ok(path)
}

fn cells<const N: usize>(values: [&dyn fmt::Display; N]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn tables(settings: &Settings) -> Result<Vec<Table>> {
    Ok(match settings.kind {
        ExperimentKind::RmseSweep => vec![Table {
            file: "rmse_sweep.csv",
            header: &[
                "phi",
                "rmse_vgs_before",
                "rmse_vds_before",
                "rmse_vgs_after",
                "rmse_vds_after",
            ],
            rows: rmse_sweep(settings)?
                .iter()
                .map(|r| {
                    cells([
                        &r.phi,
                        &r.rmse_vgs_before,
                        &r.rmse_vds_before,
                        &r.rmse_vgs_after,
                        &r.rmse_vds_after,
                    ])
                })
                .collect(),
        }],
        ExperimentKind::EstimateAccuracy => {
            let out = estimate_accuracy(settings)?;
            vec![
                Table {
                    file: "accuracy.csv",
                    header: &[
                        "sweep",
                        "phi",
                        "snr_db",
                        "bandwidth_hz",
                        "kind",
                        "trials",
                        "accuracy_x1",
                        "accuracy_x2",
                    ],
                    rows: out
                        .rows
                        .iter()
                        .map(|r| {
                            cells([
                                &r.sweep,
                                &r.phi,
                                &r.snr_db,
                                &r.bandwidth_hz,
                                &r.kind,
                                &r.trials,
                                &r.accuracy_x1,
                                &r.accuracy_x2,
                            ])
                        })
                        .collect(),
                },
                Table {
                    file: "kld_scores.csv",
                    header: &[
                        "trial",
                        "true_kind",
                        "signal",
                        "candidate",
                        "min_kld",
                        "best_h",
                        "best_kernel",
                        "selected",
                    ],
                    rows: out
                        .kld
                        .iter()
                        .map(|r| {
                            cells([
                                &r.trial,
                                &r.true_kind,
                                &r.signal,
                                &r.candidate,
                                &r.min_kld,
                                &r.best_h,
                                &r.best_kernel,
                                &r.selected,
                            ])
                        })
                        .collect(),
                },
            ]
        }
        ExperimentKind::PhiOpt => vec![Table {
            file: "phi_opt.csv",
            header: &["phi", "mse_gs", "mse_ds", "mse_sum"],
            rows: phi_opt(settings)?
                .points
                .iter()
                .map(|p| {
                    cells([
                        &p.phi,
                        &p.report.mse_gs,
                        &p.report.mse_ds,
                        &p.report.mse_sum,
                    ])
                })
                .collect(),
        }],
        ExperimentKind::SnrBw => vec![Table {
            file: "snr_bw.csv",
            header: &["snr_db", "bandwidth_hz", "mse_sum"],
            rows: snr_bw(settings)?
                .iter()
                .map(|p| cells([&p.snr_db, &p.bandwidth_hz, &p.report.mse_sum]))
                .collect(),
        }],
        ExperimentKind::Power => vec![Table {
            file: "power.csv",
            header: &["phi", "levels", "stages", "power_uW"],
            rows: power_table(settings)?
                .iter()
                .map(|r| cells([&r.phi, &r.levels, &r.stages, &r.power_uw]))
                .collect(),
        }],
    })
}

/// Resolve, run and write one experiment. Returns the CSV paths.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let settings = spec.resolve()?;
    let tables = tables(&settings)?;
    fs::create_dir_all(&spec.output_dir)?;
    tables
        .iter()
        .map(|t| write_table(&spec.output_dir, &settings, t))
        .collect()
}
