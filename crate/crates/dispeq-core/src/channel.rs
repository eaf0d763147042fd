//! Dispersive all-pass fiber channel and OSNR-calibrated noise loading.
//!
//! Chromatic dispersion is applied as a unitary frequency-domain phase
//! filter, `H(f) = exp(+j β₂ (2πf)² z / 2)`; attenuation, PMD, phase noise
//! and nonlinearity are out of scope, so the channel is exactly invertible
//! and noise can be lumped at the receiver input.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::siggen::SampleSeq;
use crate::SPEED_OF_LIGHT;

/// Fiber span description: dispersion coefficient, carrier wavelength, length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    /// Dispersion coefficient D in ps/(nm·km).
    pub d_ps_nm_km: f64,
    /// Carrier wavelength in nm.
    pub lambda_nm: f64,
    /// Span length in km. Negative lengths realize the analytic inverse
    /// span (dispersion of the opposite sign).
    pub z_km: f64,
}

impl FiberParams {
    pub fn new(d_ps_nm_km: f64, lambda_nm: f64, z_km: f64) -> Result<Self> {
        if lambda_nm <= 0.0 {
            return Err(Error::InvalidConfig("wavelength must be positive".into()));
        }
        if !z_km.is_finite() {
            return Err(Error::InvalidConfig("fiber length must be finite".into()));
        }
        Ok(Self {
            d_ps_nm_km,
            lambda_nm,
            z_km,
        })
    }

    /// Group-velocity dispersion β₂ in ps²/km, derived from the stored D and λ.
    pub fn beta2_ps2_km(&self) -> f64 {
        beta2_from_d(self.d_ps_nm_km, self.lambda_nm)
    }

    /// Accumulated GVD β₂·z in s².
    fn beta2_z_s2(&self) -> f64 {
        // 1 ps²/km = 1e-27 s²/m
        self.beta2_ps2_km() * 1e-27 * self.z_km * 1e3
    }

    /// Group-delay spread across the sampled bandwidth, in samples:
    /// `|D · z| · (λ²/c) · F_s²`.
    pub fn delay_spread_samples(&self, sample_rate: f64) -> f64 {
        let d_si = self.d_ps_nm_km * 1e-6; // s/m²
        let lambda_m = self.lambda_nm * 1e-9;
        (d_si * self.z_km * 1e3).abs() * lambda_m * lambda_m / SPEED_OF_LIGHT
            * sample_rate
            * sample_rate
    }
}

/// Converts a dispersion coefficient D (ps/(nm·km)) at wavelength λ (nm) to
/// β₂ = −Dλ²/(2πc) in ps²/km. Anomalous dispersion (D > 0) gives β₂ < 0.
pub fn beta2_from_d(d_ps_nm_km: f64, lambda_nm: f64) -> f64 {
    let d_si = d_ps_nm_km * 1e-6; // s/m²
    let lambda_m = lambda_nm * 1e-9;
    let beta2_si = -d_si * lambda_m * lambda_m
        / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT); // s²/m
    beta2_si * 1e27 // ps²/km
}

/// FFT bin frequencies in Hz for an `n`-point transform at `sample_rate`,
/// in FFT order (DC, positive, then negative frequencies).
pub fn fft_freq_grid(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| {
            if k <= (n - 1) / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}

/// Frequency response of the dispersive span on the given frequency grid:
/// `H(f) = exp(+j β₂ (2πf)² z / 2)`, a pure phase filter with `H(0) = 1`.
pub fn cd_transfer(params: &FiberParams, freq_grid: &[f64]) -> Vec<Complex64> {
    let half_beta2_z = 0.5 * params.beta2_z_s2();
    freq_grid
        .iter()
        .map(|&f| {
            let omega = 2.0 * std::f64::consts::PI * f;
            Complex64::from_polar(1.0, half_beta2_z * omega * omega)
        })
        .collect()
}

fn apply_phase_filter(signal: &SampleSeq, params: &FiberParams, invert: bool) -> SampleSeq {
    let n = signal.len();
    if n == 0 || params.z_km == 0.0 {
        return signal.clone();
    }
    let grid = fft_freq_grid(n, signal.sample_rate);
    let h = cd_transfer(params, &grid);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut buf = signal.samples.clone();
    fft.process(&mut buf);
    for (v, hk) in buf.iter_mut().zip(&h) {
        *v *= if invert { hk.conj() } else { *hk };
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);

    SampleSeq {
        samples: buf,
        sample_rate: signal.sample_rate,
        sps: signal.sps,
    }
}

/// Propagates the waveform through the dispersive span (single full-length
/// FFT). Energy is preserved; circular wrap-around is confined to one delay
/// spread at each end, which BER counting excludes as a guard region.
pub fn apply_cd(signal: &SampleSeq, params: &FiberParams) -> SampleSeq {
    apply_phase_filter(signal, params, false)
}

/// Removes the span's dispersion by multiplying with the conjugate transfer
/// function. `apply_cd` followed by `compensate_cd` is the identity up to
/// floating-point rounding (guard region excluded).
pub fn compensate_cd(signal: &SampleSeq, params: &FiberParams) -> SampleSeq {
    apply_phase_filter(signal, params, true)
}

/// Receiver noise loading parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Optical SNR in dB referenced to `b_ref_hz`; `f64::INFINITY` disables
    /// noise entirely.
    pub osnr_db: f64,
    /// OSNR reference bandwidth in Hz (0.1 nm at 1550 nm by convention).
    pub b_ref_hz: f64,
    /// RNG seed; equal seeds give bit-identical noise.
    pub seed: u64,
}

impl NoiseParams {
    pub const DEFAULT_B_REF_HZ: f64 = 12.5e9;

    pub fn new(osnr_db: f64, seed: u64) -> Self {
        Self {
            osnr_db,
            b_ref_hz: Self::DEFAULT_B_REF_HZ,
            seed,
        }
    }

    /// Noise disabled (infinite OSNR).
    pub fn noiseless() -> Self {
        Self::new(f64::INFINITY, 0)
    }
}

/// Converts OSNR in `b_ref` to per-polarization Es/N0 in dB for a
/// polarization-multiplexed signal at `symbol_rate`:
/// `Es/N0 = OSNR + 10·log10(2·b_ref / symbol_rate)`.
pub fn osnr_to_esn0(osnr_db: f64, b_ref_hz: f64, symbol_rate: f64) -> f64 {
    osnr_db + 10.0 * (2.0 * b_ref_hz / symbol_rate).log10()
}

/// Adds circular complex white Gaussian noise calibrated so the per-symbol
/// Es/N0 matches [`osnr_to_esn0`]. The noise fills the full simulation
/// bandwidth, so the per-sample noise power is `sps` times N0·symbol_rate.
pub fn add_awgn(signal: &SampleSeq, noise: &NoiseParams, symbol_rate: f64) -> Result<SampleSeq> {
    if noise.b_ref_hz <= 0.0 {
        return Err(Error::InvalidConfig("reference bandwidth must be positive".into()));
    }
    if noise.osnr_db.is_infinite() && noise.osnr_db > 0.0 {
        return Ok(signal.clone());
    }
    let p_sig = signal.average_power();
    if p_sig <= 0.0 {
        return Err(Error::InvalidInput(
            "cannot calibrate noise against a zero-power signal".into(),
        ));
    }
    let esn0_db = osnr_to_esn0(noise.osnr_db, noise.b_ref_hz, symbol_rate);
    let esn0 = 10f64.powf(esn0_db / 10.0);
    let sigma2 = p_sig * signal.sps as f64 / esn0; // total complex noise power per sample
    let sigma_component = (sigma2 / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let samples = signal
        .samples
        .iter()
        .map(|&s| {
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(nr * sigma_component, ni * sigma_component)
        })
        .collect();
    Ok(SampleSeq {
        samples,
        sample_rate: signal.sample_rate,
        sps: signal.sps,
    })
}
