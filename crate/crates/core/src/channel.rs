//! Frequency-selective Rayleigh fading channels.
//!
//! A link is described by `tap_count` i.i.d. circularly-symmetric complex
//! Gaussian taps with per-tap variance `1 / tap_count`, so the expected
//! channel energy is one. The per-subcarrier response is the `N`-point DFT of
//! the zero-padded tap vector, `H[n] = sum_i h[i] exp(-j 2 pi i n / N)` for
//! `n = 0..N`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Per-user channel order and requested-rate weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    pub tap_count: usize,
    pub rate_weight: f64,
}

impl UserProfile {
    pub fn new(tap_count: usize, rate_weight: f64) -> Result<Self> {
        if tap_count == 0 {
            return Err(Error::InvalidProfile("tap count must be at least 1".into()));
        }
        if !(rate_weight > 0.0 && rate_weight.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "rate weight must be positive, got {rate_weight}"
            )));
        }
        Ok(Self {
            tap_count,
            rate_weight,
        })
    }
}

/// Noise power per subcarrier and total transmit power, both in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub noise_power: f64,
    pub total_power: f64,
}

impl NoiseModel {
    pub fn new(noise_power: f64, total_power: f64) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }
        if !(total_power > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "total power must be positive, got {total_power}"
            )));
        }
        Ok(Self {
            noise_power,
            total_power,
        })
    }

    /// Noise power that puts the average per-subcarrier SNR `P_T / (N sigma^2)`
    /// at `snr_db` for unit-energy channels.
    pub fn for_snr_db(snr_db: f64, subcarriers: usize, total_power: f64) -> Result<Self> {
        let snr = 10f64.powf(snr_db / 10.0);
        Self::new(total_power / (subcarriers as f64 * snr), total_power)
    }
}

/// Draws `tap_count` taps, each CN(0, 1/tap_count).
pub fn generate_taps<R: Rng + ?Sized>(tap_count: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    if tap_count == 0 {
        return Err(Error::InvalidProfile("tap count must be at least 1".into()));
    }
    // Real and imaginary parts each carry half the tap variance.
    let scale = (0.5 / tap_count as f64).sqrt();
    Ok((0..tap_count)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect())
}

/// Reusable `N`-point response evaluator backed by a planned FFT.
#[derive(Clone)]
pub struct ResponseEngine {
    subcarriers: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ResponseEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResponseEngine")
            .field("subcarriers", &self.subcarriers)
            .finish()
    }
}

impl ResponseEngine {
    pub fn new(subcarriers: usize) -> Result<Self> {
        if subcarriers == 0 {
            return Err(Error::InvalidConfig("subcarrier count must be positive".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(subcarriers);
        Ok(Self { subcarriers, fft })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn respond(&self, taps: &[Complex64]) -> Result<Vec<Complex64>> {
        if taps.is_empty() {
            return Err(Error::InvalidProfile("tap vector is empty".into()));
        }
        if taps.len() > self.subcarriers {
            return Err(Error::InvalidConfig(format!(
                "{} taps exceed {} subcarriers",
                taps.len(),
                self.subcarriers
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.subcarriers];
        buf[..taps.len()].copy_from_slice(taps);
        self.fft.process(&mut buf);
        Ok(buf)
    }
}

pub fn frequency_response(taps: &[Complex64], subcarriers: usize) -> Result<Vec<Complex64>> {
    ResponseEngine::new(subcarriers)?.respond(taps)
}

/// `G[n] = |H[n]|^2 / noise_power`.
pub fn subcarrier_gains(response: &[Complex64], noise_power: f64) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    Ok(response.iter().map(|h| h.norm_sqr() / noise_power).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    pub response: Vec<Complex64>,
    pub gains: Vec<f64>,
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(
        tap_count: usize,
        engine: &ResponseEngine,
        noise_power: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if tap_count > engine.subcarriers() {
            return Err(Error::InvalidConfig(format!(
                "{tap_count} taps exceed {} subcarriers",
                engine.subcarriers()
            )));
        }
        let taps = generate_taps(tap_count, rng)?;
        let response = engine.respond(&taps)?;
        let gains = subcarrier_gains(&response, noise_power)?;
        let realization = Self {
            taps,
            response,
            gains,
        };
        debug_assert!(realization.parseval_error() < 1e-10);
        Ok(realization)
    }

    /// Same taps and response, gains recomputed for another noise level.
    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        Ok(Self {
            taps: self.taps.clone(),
            response: self.response.clone(),
            gains: subcarrier_gains(&self.response, noise_power)?,
        })
    }

    /// Relative mismatch between `sum |H|^2` and `N sum |h|^2`.
    pub fn parseval_error(&self) -> f64 {
        let freq: f64 = self.response.iter().map(|h| h.norm_sqr()).sum();
        let time: f64 = self.taps.iter().map(|h| h.norm_sqr()).sum::<f64>()
            * self.response.len() as f64;
        if time == 0.0 {
            return freq.abs();
        }
        (freq - time).abs() / time
    }
}
