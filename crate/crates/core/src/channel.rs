//! Frequency-modulated uplink through single-path Rician fading.
//!
//! Each current is mapped to a tone frequency, shifted by a random Doppler
//! offset, scaled by one complex fading gain, buried in complex AWGN and
//! recovered as the argmax bin of a magnitude FFT. Simulated at complex
//! baseband with sample rate equal to the channel bandwidth.
//!
//! The receiver spectrum is built directly in the frequency domain. The DFT
//! of a finite complex tone has a closed form, and the DFT of white complex
//! Gaussian noise of variance σ² is again white with variance N·σ², so the
//! spectrum has exactly the law of the FFT of the time-domain burst.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Passthrough: received current equals transmitted current.
    Ideal,
    Faded,
}

impl ChannelMode {
    pub fn name(self) -> &'static str {
        match self {
            ChannelMode::Ideal => "ideal",
            ChannelMode::Faded => "faded",
        }
    }
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(ChannelMode::Ideal),
            "faded" => Ok(ChannelMode::Faded),
            _ => Err(Error::Config(format!("unknown channel mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub n_fft: usize,
    /// Linear K-factor (LOS power over scattered power).
    pub rician_k: f64,
    pub doppler_frac: f64,
    /// Current mapped to 90% of the band.
    pub ids_max_ref: f64,
    pub mode: ChannelMode,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            bandwidth_hz: 200e3,
            n_fft: 8192,
            rician_k: 10.0,
            doppler_frac: 0.02,
            ids_max_ref: 1e-2,
            mode: ChannelMode::Faded,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth must be > 0, got {}",
                self.bandwidth_hz
            )));
        }
        if self.n_fft < 64 || !self.n_fft.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_fft must be a power of two >= 64, got {}",
                self.n_fft
            )));
        }
        if !(0.0..0.5).contains(&self.doppler_frac) {
            return Err(Error::Config(format!(
                "doppler_frac must lie in [0, 0.5), got {}",
                self.doppler_frac
            )));
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::Config(format!(
                "rician_k must be >= 0, got {}",
                self.rician_k
            )));
        }
        if !(self.ids_max_ref > 0.0) {
            return Err(Error::Config(format!(
                "ids_max_ref must be > 0, got {}",
                self.ids_max_ref
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        Ok(())
    }

    /// Hz per ampere.
    pub fn scale_factor(&self) -> f64 {
        0.9 * self.bandwidth_hz / self.ids_max_ref
    }

    pub fn bin_width(&self) -> f64 {
        self.bandwidth_hz / self.n_fft as f64
    }

    /// Per-sample complex noise variance for unit mean signal power.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub true_freq: f64,
    pub received_ids: f64,
    /// Detected bin minus the bin nearest the undisturbed tone.
    pub bin_error: i64,
}

/// One transmission's time-domain samples, split into components.
#[derive(Debug, Clone)]
pub struct Burst {
    pub faded_tone: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// A configured channel with cached twiddles. Cheap to share across threads.
#[derive(Clone)]
pub struct FmChannel {
    cfg: ChannelConfig,
    /// `e^{-iπk/N}` for every bin `k`.
    half_twiddles: Arc<[Complex64]>,
}

impl std::fmt::Debug for FmChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FmChannel").field("cfg", &self.cfg).finish()
    }
}

/// Resync the tone phasor against an exact evaluation this often.
const PHASOR_RESYNC: usize = 256;
const TONE_LANES: usize = 8;

/// Index of the strongest bin; the lowest index wins a tie.
fn peak_bin(spectrum: &[Complex64]) -> usize {
    let mut lanes = [f64::NEG_INFINITY; TONE_LANES];
    let mut groups = spectrum.chunks_exact(TONE_LANES);
    for group in &mut groups {
        for (m, x) in lanes.iter_mut().zip(group) {
            let p = x.norm_sqr();
            *m = if p > *m { p } else { *m };
        }
    }
    let tail = groups.remainder().iter().map(|x| x.norm_sqr());
    let best = lanes
        .into_iter()
        .chain(tail)
        .fold(f64::NEG_INFINITY, f64::max);
    spectrum
        .iter()
        .position(|x| x.norm_sqr() == best)
        .unwrap_or(0)
}

impl FmChannel {
    pub fn new(cfg: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_fft as f64;
        let half_twiddles = (0..cfg.n_fft)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / n))
            .collect();
        Ok(Self { cfg, half_twiddles })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn scale_factor(&self) -> f64 {
        self.cfg.scale_factor()
    }

    fn tone_frequency(&self, ids: f64) -> Result<f64> {
        let f = self.cfg.scale_factor() * ids;
        if !(f > 0.0 && f < self.cfg.bandwidth_hz) {
            return Err(Error::ModulationRange {
                freq: f,
                bandwidth: self.cfg.bandwidth_hz,
            });
        }
        Ok(f)
    }

    /// `√(K/(K+1)) + √(1/(2(K+1)))·(z₁ + i·z₂)`, unit mean power.
    pub fn rician_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let k = self.cfg.rician_k;
        let los = (k / (k + 1.0)).sqrt();
        let sigma = (0.5 / (k + 1.0)).sqrt();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        Complex64::new(los + sigma * z1, sigma * z2)
    }

    fn doppler<R: Rng + ?Sized>(&self, f: f64, rng: &mut R) -> f64 {
        if self.cfg.doppler_frac == 0.0 {
            0.0
        } else {
            let span = self.cfg.doppler_frac * f;
            rng.random_range(-span..=span)
        }
    }

    fn write_tone(&self, freq: f64, gain: Complex64, out: &mut [Complex64]) {
        let omega = 2.0 * PI * freq / self.cfg.bandwidth_hz;
        let stride = Complex64::from_polar(1.0, omega * TONE_LANES as f64);
        for (block, chunk) in out.chunks_mut(PHASOR_RESYNC).enumerate() {
            let start = (block * PHASOR_RESYNC) as f64;
            let mut lanes: [Complex64; TONE_LANES] = std::array::from_fn(|j| {
                gain * Complex64::from_polar(1.0, omega * (start + j as f64))
            });
            for group in chunk.chunks_mut(TONE_LANES) {
                for (s, lane) in group.iter_mut().zip(lanes.iter_mut()) {
                    *s = *lane;
                    *lane *= stride;
                }
            }
        }
    }

    /// Unnormalized DFT of `gain·e^{iωn}`, `n = 0..N`.
    ///
    /// With `c = N·f/B` the tone position in bins and `u_k = e^{iπ(c−k)/N}`,
    /// bin `k` equals `gain·e^{iπc}·sin(πc)·conj(u_k)/Im(u_k)`. The bin
    /// nearest `c` is evaluated from the fractional offset alone.
    fn write_tone_spectrum(&self, freq: f64, gain: Complex64, out: &mut [Complex64]) {
        let n = self.cfg.n_fft;
        let c = n as f64 * freq / self.cfg.bandwidth_hz;
        let nearest = c.round();
        let d0 = c - nearest;
        let lead = gain * Complex64::from_polar((PI * d0).sin(), PI * d0);
        let rot = Complex64::from_polar(1.0, PI * c / n as f64);
        for (x, t) in out.iter_mut().zip(self.half_twiddles.iter()) {
            let u = rot * t;
            *x = lead * u.conj() / u.im;
        }
        let peak = nearest as usize % n;
        out[peak] = if d0 == 0.0 {
            gain * n as f64
        } else {
            let u = Complex64::from_polar(1.0, PI * d0 / n as f64);
            lead * u.conj() / u.im
        };
    }

    fn add_noise<R: Rng + ?Sized>(&self, buf: &mut [Complex64], variance: f64, rng: &mut R) {
        let sigma = (0.5 * variance).sqrt();
        for s in buf {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s.re += sigma * re;
            s.im += sigma * im;
        }
    }

    /// Time-domain faded tone and noise for one transmission, kept separate
    /// so the realized SNR can be measured.
    pub fn synthesize<R: Rng + ?Sized>(&self, ids: f64, rng: &mut R) -> Result<Burst> {
        let f = self.tone_frequency(ids)?;
        let shifted = f + self.doppler(f, rng);
        let gain = self.rician_gain(rng);
        let mut faded_tone = vec![Complex64::default(); self.cfg.n_fft];
        self.write_tone(shifted, gain, &mut faded_tone);
        let mut noise = vec![Complex64::default(); self.cfg.n_fft];
        self.add_noise(&mut noise, self.cfg.noise_variance(), rng);
        Ok(Burst { faded_tone, noise })
    }

    fn transmit_into<R: Rng + ?Sized>(
        &self,
        ids: f64,
        rng: &mut R,
        buf: &mut [Complex64],
    ) -> Result<Transmission> {
        if self.cfg.mode == ChannelMode::Ideal {
            return Ok(Transmission {
                true_freq: self.cfg.scale_factor() * ids,
                received_ids: ids,
                bin_error: 0,
            });
        }
        let f = self.tone_frequency(ids)?;
        let shifted = f + self.doppler(f, rng);
        let gain = self.rician_gain(rng);
        self.write_tone_spectrum(shifted, gain, buf);
        self.add_noise(buf, self.cfg.n_fft as f64 * self.cfg.noise_variance(), rng);

        let peak = peak_bin(buf);
        let bin = self.cfg.bin_width();
        let f_hat = peak as f64 * bin;
        Ok(Transmission {
            true_freq: f,
            received_ids: f_hat / self.cfg.scale_factor(),
            bin_error: peak as i64 - (f / bin).round() as i64,
        })
    }

    pub fn transmit<R: Rng + ?Sized>(&self, ids: f64, rng: &mut R) -> Result<Transmission> {
        let mut buf = vec![Complex64::default(); self.cfg.n_fft];
        self.transmit_into(ids, rng, &mut buf)
    }

    /// Element-wise [`transmit`](Self::transmit); each sample gets fresh
    /// Doppler, fading and noise draws from `rng`.
    pub fn transmit_block<R: Rng + ?Sized>(&self, ids: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if self.cfg.mode == ChannelMode::Ideal {
            return Ok(ids.to_vec());
        }
        let mut buf = vec![Complex64::default(); self.cfg.n_fft];
        ids.iter()
            .map(|&i| Ok(self.transmit_into(i, rng, &mut buf)?.received_ids))
            .collect()
    }
}
