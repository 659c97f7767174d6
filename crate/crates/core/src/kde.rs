//! Source-distribution identification by kernel density estimation.
//!
//! The receiver forms a KDE of the decoded samples for every (kernel,
//! bandwidth) pair and scores each candidate density `p` by
//! `D_KL(p ‖ KDE)`. The candidate with the smallest score over all pairs is
//! declared the source.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::source::DistributionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelKind {
    Normal,
    Box,
    Triangle,
    Epanechnikov,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Normal,
        KernelKind::Box,
        KernelKind::Triangle,
        KernelKind::Epanechnikov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Normal => "normal",
            KernelKind::Box => "box",
            KernelKind::Triangle => "triangle",
            KernelKind::Epanechnikov => "epanechnikov",
        }
    }

    pub fn value(self, u: f64) -> f64 {
        match self {
            KernelKind::Normal => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            _ if u.abs() > 1.0 => 0.0,
            KernelKind::Box => 0.5,
            KernelKind::Triangle => 1.0 - u.abs(),
            KernelKind::Epanechnikov => 0.75 * (1.0 - u * u),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeConfig {
    /// Bandwidths in volts.
    pub h_grid: Vec<f64>,
    pub kernels: Vec<KernelKind>,
    pub integration_points: usize,
    pub density_floor: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            h_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            kernels: KernelKind::ALL.to_vec(),
            integration_points: 1024,
            density_floor: 1e-12,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_grid.is_empty() || self.h_grid.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config(
                "bandwidth grid must be non-empty and positive".into(),
            ));
        }
        if self.h_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "bandwidth grid must be strictly increasing".into(),
            ));
        }
        if self.kernels.is_empty() {
            return Err(Error::Config("kernel list is empty".into()));
        }
        if self.integration_points < 128 {
            return Err(Error::Config("integration_points must be >= 128".into()));
        }
        if !(self.density_floor > 0.0) {
            return Err(Error::Config("density_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// `(1/(K·h))·Σ f((y − y_k)/h)`, evaluated term by term.
pub fn kde_pdf(samples: &[f64], h: f64, kernel: KernelKind, y: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(h > 0.0) {
        return Err(Error::Config(format!("bandwidth must be > 0, got {h}")));
    }
    let sum: f64 = samples.iter().map(|&s| kernel.value((y - s) / h)).sum();
    Ok(sum / (samples.len() as f64 * h))
}

/// Trapezoid weights for `n` uniform points spaced `dx`.
fn trapezoid_weight(j: usize, n: usize, dx: f64) -> f64 {
    if j == 0 || j == n - 1 {
        0.5 * dx
    } else {
        dx
    }
}

/// `∫ p·ln(p/q)` on a uniform grid of `n` points over `[lo, hi]`, both
/// densities floored before the log.
pub fn kld_numeric(
    pdf_p: impl Fn(f64) -> f64,
    pdf_q: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
    floor: f64,
) -> Result<f64> {
    if !(hi > lo) || n < 2 {
        return Err(Error::Config(
            "kld needs hi > lo and at least two points".into(),
        ));
    }
    let dx = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|j| {
            let x = lo + j as f64 * dx;
            let p = pdf_p(x).max(floor);
            let q = pdf_q(x).max(floor);
            trapezoid_weight(j, n, dx) * p * (p / q).ln()
        })
        .sum())
}

/// KDE of sorted samples on the uniform grid `lo + j·dx`, exact up to
/// rounding. Compact kernels use prefix sums over the sorted samples; the
/// normal kernel walks a multiplicative recurrence outwards from each
/// sample's nearest grid point.
struct GridKde {
    /// Samples shifted by `center`, sorted.
    shifted: Vec<f64>,
    prefix1: Vec<f64>,
    prefix2: Vec<f64>,
    center: f64,
    lo: f64,
    dx: f64,
    n: usize,
}

/// Gaussian terms below this fraction of the peak are dropped.
const NORMAL_CUTOFF_SIGMAS: f64 = 9.0;

impl GridKde {
    fn new(samples: &[f64], lo: f64, hi: f64, n: usize) -> Self {
        let center = 0.5 * (lo + hi);
        let mut shifted: Vec<f64> = samples.iter().map(|&s| s - center).collect();
        shifted.sort_by(f64::total_cmp);
        let mut prefix1 = Vec::with_capacity(shifted.len() + 1);
        let mut prefix2 = Vec::with_capacity(shifted.len() + 1);
        prefix1.push(0.0);
        prefix2.push(0.0);
        for &s in &shifted {
            prefix1.push(prefix1.last().unwrap() + s);
            prefix2.push(prefix2.last().unwrap() + s * s);
        }
        Self {
            shifted,
            prefix1,
            prefix2,
            center,
            lo,
            dx: (hi - lo) / (n - 1) as f64,
            n,
        }
    }

    fn grid_point(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.dx - self.center
    }

    /// Sample index range with `a <= s <= b`.
    fn window(&self, a: f64, b: f64) -> (usize, usize) {
        let start = self.shifted.partition_point(|&s| s < a);
        let end = self.shifted.partition_point(|&s| s <= b);
        (start, end.max(start))
    }

    fn evaluate(&self, h: f64, kernel: KernelKind) -> Vec<f64> {
        let k = self.shifted.len() as f64;
        let mut out = vec![0.0; self.n];
        match kernel {
            KernelKind::Normal => self.normal_sums(h, &mut out),
            KernelKind::Box => {
                for (j, o) in out.iter_mut().enumerate() {
                    let y = self.grid_point(j);
                    let (a, b) = self.window(y - h, y + h);
                    *o = 0.5 * (b - a) as f64;
                }
            }
            KernelKind::Triangle => {
                for (j, o) in out.iter_mut().enumerate() {
                    let y = self.grid_point(j);
                    let (a, b) = self.window(y - h, y + h);
                    let mid = a + self.shifted[a..b].partition_point(|&s| s <= y);
                    let n_left = (mid - a) as f64;
                    let n_right = (b - mid) as f64;
                    let s_left = self.prefix1[mid] - self.prefix1[a];
                    let s_right = self.prefix1[b] - self.prefix1[mid];
                    let left = n_left - (n_left * y - s_left) / h;
                    let right = n_right - (s_right - n_right * y) / h;
                    *o = (left + right).max(0.0);
                }
            }
            KernelKind::Epanechnikov => {
                for (j, o) in out.iter_mut().enumerate() {
                    let y = self.grid_point(j);
                    let (a, b) = self.window(y - h, y + h);
                    let cnt = (b - a) as f64;
                    let s1 = self.prefix1[b] - self.prefix1[a];
                    let s2 = self.prefix2[b] - self.prefix2[a];
                    let sq = cnt * y * y - 2.0 * y * s1 + s2;
                    *o = (0.75 * (cnt - sq / (h * h))).max(0.0);
                }
            }
        }
        let norm = 1.0 / (k * h);
        out.iter_mut().for_each(|v| *v *= norm);
        out
    }

    /// Unnormalized Gaussian kernel sums on the grid.
    ///
    /// For a sample at `s` and grid offset `d_j = y_j − s`,
    /// `exp(−d_{j+1}²/2h²) = exp(−d_j²/2h²)·exp(−(2·d_j·dx + dx²)/2h²)`,
    /// so each step costs two multiplications.
    fn normal_sums(&self, h: f64, out: &mut [f64]) {
        let inv2h2 = 0.5 / (h * h);
        let reach = (NORMAL_CUTOFF_SIGMAS * h / self.dx).ceil() as i64;
        let c = (-2.0 * self.dx * self.dx * inv2h2).exp();
        let peak = 1.0 / (2.0 * PI).sqrt();
        let last = self.n as i64 - 1;
        let mut run = vec![0.0; self.n];
        for &s in &self.shifted {
            let pos = (s - self.grid_point(0)) / self.dx;
            let j0 = pos.round() as i64;
            let lo = (j0 - reach).max(0);
            let hi = (j0 + reach).min(last);
            if lo > hi {
                continue;
            }
            let start = j0.clamp(lo, hi);
            let d0 = self.grid_point(start as usize) - s;
            let e0 = peak * (-d0 * d0 * inv2h2).exp();

            // Upward: ratio for step j -> j+1 is exp(−(2·d_j·dx + dx²)/2h²).
            let q_up = (-(2.0 * d0 * self.dx + self.dx * self.dx) * inv2h2).exp();
            out[start as usize] += e0;
            let up = &mut run[..(hi - start) as usize];
            gaussian_run(e0, q_up, c, up);
            for (o, v) in out[start as usize + 1..=hi as usize]
                .iter_mut()
                .zip(up.iter())
            {
                *o += v;
            }
            // Downward: ratio for step j -> j−1 is exp(−(−2·d_j·dx + dx²)/2h²).
            let q_down = (-(-2.0 * d0 * self.dx + self.dx * self.dx) * inv2h2).exp();
            let down = &mut run[..(start - lo) as usize];
            gaussian_run(e0, q_down, c, down);
            for (o, v) in out[lo as usize..start as usize]
                .iter_mut()
                .rev()
                .zip(down.iter())
            {
                *o += v;
            }
        }
    }
}

const RUN_LANES: usize = 4;

/// `buf[i] = e_{i+1}` for `e_{j+1} = e_j·q_j`, `q_{j+1} = q_j·c`.
///
/// Four interleaved chains, each advancing four steps at a time with
/// `e_{j+4} = e_j·q_j·q_{j+1}·q_{j+2}·q_{j+3}`.
fn gaussian_run(e0: f64, q0: f64, c: f64, buf: &mut [f64]) {
    let mut e = e0;
    let mut q = q0;
    let mut lanes = [0.0; RUN_LANES];
    for lane in lanes.iter_mut() {
        e *= q;
        q *= c;
        *lane = e;
    }
    let q4 = q0.powi(4);
    let mut ratios: [f64; RUN_LANES] = std::array::from_fn(|l| q4 * c.powi(4 * l as i32 + 10));
    let c16 = c.powi(16);
    for chunk in buf.chunks_mut(RUN_LANES) {
        for ((b, e), r) in chunk
            .iter_mut()
            .zip(lanes.iter_mut())
            .zip(ratios.iter_mut())
        {
            *b = *e;
            *e *= *r;
            *r *= c16;
        }
    }
}

/// A candidate source density on the measurement scale.
pub struct Candidate<'a> {
    pub kind: DistributionKind,
    pub pdf: Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>,
}

impl fmt::Debug for Candidate<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Candidate")
            .field("kind", &self.kind)
            .finish()
    }
}

/// The standard unit-interval densities mapped onto `[lo, hi]`.
pub fn scaled_candidates(kinds: &[DistributionKind], lo: f64, hi: f64) -> Vec<Candidate<'static>> {
    kinds
        .iter()
        .map(|&kind| Candidate {
            kind,
            pdf: Box::new(move |y| kind.pdf_scaled(y, lo, hi)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub kind: DistributionKind,
    pub min_kld: f64,
    pub best_h: f64,
    pub best_kernel: KernelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub selected: DistributionKind,
    pub best_h: f64,
    pub best_kernel: KernelKind,
    /// One entry per candidate, in candidate order.
    pub scores: Vec<CandidateScore>,
}

impl EstimationResult {
    pub fn score(&self, kind: DistributionKind) -> Option<&CandidateScore> {
        self.scores.iter().find(|s| s.kind == kind)
    }
}

pub const MIN_ESTIMATION_SAMPLES: usize = 30;

/// Search kernels × bandwidths × candidates for the smallest
/// `D_KL(candidate ‖ KDE)` over `[lo, hi]`.
pub fn estimate_source(
    samples: &[f64],
    candidates: &[Candidate<'_>],
    cfg: &KdeConfig,
    lo: f64,
    hi: f64,
) -> Result<EstimationResult> {
    cfg.validate()?;
    if samples.len() < MIN_ESTIMATION_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_ESTIMATION_SAMPLES,
            got: samples.len(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::Config("candidate set is empty".into()));
    }
    if !(hi > lo) {
        return Err(Error::Config(format!(
            "integration window [{lo}, {hi}] is empty"
        )));
    }
    let n = cfg.integration_points;
    let floor = cfg.density_floor;
    let dx = (hi - lo) / (n - 1) as f64;
    let weights: Vec<f64> = (0..n).map(|j| trapezoid_weight(j, n, dx)).collect();

    // Per candidate: w·p on the grid and ∫ p·ln p.
    let cand_terms: Vec<(Vec<f64>, f64)> = candidates
        .iter()
        .map(|c| {
            let wp: Vec<f64> = (0..n)
                .map(|j| weights[j] * (c.pdf)(lo + j as f64 * dx).max(floor))
                .collect();
            let neg_entropy = wp
                .iter()
                .zip(&weights)
                .map(|(&wp, &w)| wp * (wp / w).ln())
                .sum();
            (wp, neg_entropy)
        })
        .collect();

    let grid = GridKde::new(samples, lo, hi, n);
    let mut best: Vec<Option<CandidateScore>> = vec![None; candidates.len()];
    for &h in &cfg.h_grid {
        for &kernel in &cfg.kernels {
            let log_q: Vec<f64> = grid
                .evaluate(h, kernel)
                .into_iter()
                .map(|q| q.max(floor).ln())
                .collect();
            for (slot, (c, (wp, neg_entropy))) in
                best.iter_mut().zip(candidates.iter().zip(&cand_terms))
            {
                let cross: f64 = wp.iter().zip(&log_q).map(|(a, b)| a * b).sum();
                let kld = neg_entropy - cross;
                if slot.map_or(true, |s| kld < s.min_kld) {
                    *slot = Some(CandidateScore {
                        kind: c.kind,
                        min_kld: kld,
                        best_h: h,
                        best_kernel: kernel,
                    });
                }
            }
        }
    }
    let scores: Vec<CandidateScore> = best
        .into_iter()
        .map(|s| s.expect("grid is non-empty"))
        .collect();
    let winner = scores
        .iter()
        .fold(None::<&CandidateScore>, |acc, s| match acc {
            Some(a) if a.min_kld <= s.min_kld => Some(a),
            _ => Some(s),
        })
        .expect("candidates non-empty");
    Ok(EstimationResult {
        selected: winner.kind,
        best_h: winner.best_h,
        best_kernel: winner.best_kernel,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Per-true-kind accuracy; kinds without trials are absent.
pub fn classification_accuracy(
    trials: &[(DistributionKind, DistributionKind)],
) -> BTreeMap<DistributionKind, Tally> {
    let mut table: BTreeMap<DistributionKind, Tally> = BTreeMap::new();
    for &(truth, selected) in trials {
        let t = table.entry(truth).or_default();
        t.total += 1;
        if truth == selected {
            t.correct += 1;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let dx = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * dx)).sum();
        dx * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn kernel_values() {
        assert_eq!(KernelKind::Epanechnikov.value(0.0), 0.75);
        assert_eq!(KernelKind::Box.value(0.999), 0.5);
        assert_eq!(KernelKind::Box.value(1.001), 0.0);
        assert_eq!(KernelKind::Triangle.value(-0.25), 0.75);
        assert!((KernelKind::Normal.value(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn kernels_integrate_to_one() {
        // Compact kernels: integrate exactly over [-1, 1] with many nodes;
        // the box edges sit on nodes, where the trapezoid error vanishes.
        for k in [KernelKind::Triangle, KernelKind::Epanechnikov] {
            let v = quad(|u| k.value(u), -1.0, 1.0, 200_000);
            assert!((v - 1.0).abs() < 1e-9, "{k}: {v}");
        }
        let boxed = quad(|u| KernelKind::Box.value(u), -1.0, 1.0, 1000);
        assert!((boxed - 1.0).abs() < 1e-9);
        let normal = quad(|u| KernelKind::Normal.value(u), -12.0, 12.0, 20_000);
        assert!((normal - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kde_single_sample() {
        let v = kde_pdf(&[0.0], 1.0, KernelKind::Normal, 0.0).unwrap();
        assert!((v - 0.39894).abs() < 1e-5);
        assert!(matches!(
            kde_pdf(&[], 1.0, KernelKind::Normal, 0.0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn kde_normalizes() {
        let s = DistributionKind::Triangular.sample_unit(200, &mut substream(1, &[]));
        let s: Vec<f64> = s.iter().map(|x| 5.0 + 5.0 * x).collect();
        let (mn, mx) = s
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        for k in KernelKind::ALL {
            for &h in &[0.1, 0.5, 1.0] {
                let v = quad(
                    |y| kde_pdf(&s, h, k, y).unwrap(),
                    mn - 5.0 * h,
                    mx + 5.0 * h,
                    20_000,
                );
                assert!((v - 1.0).abs() < 1e-3, "{k} h={h}: {v}");
            }
        }
    }

    #[test]
    fn grid_kde_matches_direct_sum() {
        let mut s = DistributionKind::Cosine.sample_unit(500, &mut substream(2, &[]));
        s.iter_mut().for_each(|x| *x = 5.0 + 5.0 * *x);
        s.push(4.2);
        s.push(10.9);
        let grid = GridKde::new(&s, 5.0, 10.0, 257);
        for k in KernelKind::ALL {
            for &h in &[0.05, 0.1, 0.37, 1.0] {
                let fast = grid.evaluate(h, k);
                for (j, &f) in fast.iter().enumerate() {
                    let y = 5.0 + j as f64 * 5.0 / 256.0;
                    let exact = kde_pdf(&s, h, k, y).unwrap();
                    assert!(
                        (f - exact).abs() <= 1e-12 + 1e-10 * exact,
                        "{k} h={h} y={y}: {f} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn kld_examples() {
        let u = |x: f64| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
        assert!(kld_numeric(u, u, 0.0, 1.0, 1024, 1e-12).unwrap().abs() < 1e-9);
        let wide = |x: f64| if (0.0..=2.0).contains(&x) { 0.5 } else { 0.0 };
        let d = kld_numeric(u, wide, 0.0, 1.0, 1024, 1e-12).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-9);
        for p in DistributionKind::ALL {
            for q in DistributionKind::ALL {
                let d = kld_numeric(|x| p.pdf_unit(x), |x| q.pdf_unit(x), 0.0, 1.0, 1024, 1e-12)
                    .unwrap();
                assert!(d >= -1e-3, "{p} vs {q}: {d}");
            }
        }
    }

    #[test]
    fn uniform_samples_pick_uniform() {
        let cands = scaled_candidates(&DistributionKind::ALL, 5.0, 10.0);
        let cfg = KdeConfig::default();
        let mut hits = 0;
        for seed in 0..50 {
            let s = DistributionKind::Uniform.sample_unit(10_000, &mut substream(seed, &[77]));
            let s: Vec<f64> = s.iter().map(|x| 5.0 + 5.0 * x).collect();
            let r = estimate_source(&s, &cands, &cfg, 5.0, 10.0).unwrap();
            assert!(r.scores.iter().all(|c| c.min_kld >= -1e-3));
            if r.selected == DistributionKind::Uniform {
                hits += 1;
            }
        }
        assert!(hits >= 45, "uniform selected {hits}/50");
    }

    #[test]
    fn single_candidate_always_selected() {
        let s = DistributionKind::Weibull.sample_unit(500, &mut substream(3, &[]));
        let s: Vec<f64> = s.iter().map(|x| 5.0 + 5.0 * x).collect();
        let cands = scaled_candidates(&[DistributionKind::Weibull], 5.0, 10.0);
        let r = estimate_source(&s, &cands, &KdeConfig::default(), 5.0, 10.0).unwrap();
        assert_eq!(r.selected, DistributionKind::Weibull);
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn estimation_errors() {
        let cands = scaled_candidates(&DistributionKind::ALL, 5.0, 10.0);
        let few = vec![7.0; 29];
        assert!(matches!(
            estimate_source(&few, &cands, &KdeConfig::default(), 5.0, 10.0),
            Err(Error::InsufficientData {
                needed: 30,
                got: 29
            })
        ));
        let enough = vec![7.0; 40];
        assert!(estimate_source(&enough, &[], &KdeConfig::default(), 5.0, 10.0).is_err());
        let bad = KdeConfig {
            h_grid: vec![0.2, 0.1],
            ..KdeConfig::default()
        };
        assert!(estimate_source(&enough, &cands, &bad, 5.0, 10.0).is_err());
    }

    #[test]
    fn estimate_matches_generic_kld() {
        let s = DistributionKind::Normal.sample_unit(300, &mut substream(4, &[]));
        let s: Vec<f64> = s.iter().map(|x| 5.0 + 5.0 * x).collect();
        let cfg = KdeConfig {
            h_grid: vec![0.3],
            kernels: vec![KernelKind::Epanechnikov],
            ..KdeConfig::default()
        };
        let cands = scaled_candidates(&DistributionKind::ALL, 5.0, 10.0);
        let r = estimate_source(&s, &cands, &cfg, 5.0, 10.0).unwrap();
        for c in &r.scores {
            let direct = kld_numeric(
                |y| c.kind.pdf_scaled(y, 5.0, 10.0),
                |y| kde_pdf(&s, 0.3, KernelKind::Epanechnikov, y).unwrap(),
                5.0,
                10.0,
                1024,
                1e-12,
            )
            .unwrap();
            assert!(
                (c.min_kld - direct).abs() < 1e-9,
                "{}: {} vs {}",
                c.kind,
                c.min_kld,
                direct
            );
        }
    }

    #[test]
    fn accuracy_table() {
        use DistributionKind::*;
        let all_right = [(Normal, Normal), (Cosine, Cosine)];
        let t = classification_accuracy(&all_right);
        assert!(t.values().all(|v| v.accuracy() == 1.0));
        let alternating: Vec<_> = (0..10)
            .map(|i| (Uniform, if i % 2 == 0 { Uniform } else { Weibull }))
            .collect();
        let t = classification_accuracy(&alternating);
        assert_eq!(t[&Uniform].accuracy(), 0.5);
        assert!(!t.contains_key(&Weibull));
        assert_eq!(t.len(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kde_translation_and_permutation(
            mut s in proptest::collection::vec(0.0f64..10.0, 1..40),
            y in -2.0f64..12.0,
            c in -50.0f64..50.0,
            h in 0.05f64..2.0,
        ) {
            for k in KernelKind::ALL {
                let base = kde_pdf(&s, h, k, y).unwrap();
                prop_assert!(base >= 0.0);
                let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
                let moved = kde_pdf(&shifted, h, k, y + c).unwrap();
                prop_assert!((moved - base).abs() <= 1e-9 * base.max(1.0));
                s.reverse();
                let perm = kde_pdf(&s, h, k, y).unwrap();
                prop_assert!((perm - base).abs() <= 1e-12 * base.max(1.0));
            }
        }
    }
}
