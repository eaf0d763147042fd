//! PRBS payload generation, Gray-coded QPSK mapping, and pulse shaping.
//!
//! The transmit chain is `prbs_generate` → `qpsk_map` → `upsample_shape`;
//! the inverse path is `matched_decimate` → `qpsk_demap`. Symbols are
//! normalized to unit average energy, so channel and metric stages can take
//! signal power as 1 by construction.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Ordered payload bits, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSeq {
    bits: Vec<u8>,
}

impl BitSeq {
    /// Wraps a bit vector, rejecting empty input or values other than 0/1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Length("bit sequence must be non-empty".into()));
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u8> {
        self.bits.iter()
    }
}

/// Linear-feedback shift-register configuration for PRBS generation.
///
/// `taps` lists the exponents of the feedback polynomial; the default
/// `x^15 + x^14 + 1` is the standard PRBS15 generator with period `2^15 - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrbsConfig {
    /// Register length in bits (polynomial degree).
    pub order: u32,
    /// Initial register contents; must be nonzero in the low `order` bits.
    pub seed: u32,
    /// Feedback polynomial exponents, e.g. `[15, 14]` for x^15 + x^14 + 1.
    pub taps: Vec<u32>,
}

impl Default for PrbsConfig {
    fn default() -> Self {
        Self {
            order: 15,
            seed: 0x7ACE,
            taps: vec![15, 14],
        }
    }
}

impl PrbsConfig {
    /// PRBS15 with a caller-chosen seed.
    pub fn prbs15(seed: u32) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 || self.order > 31 {
            return Err(Error::InvalidConfig(format!(
                "PRBS order {} outside supported range 2..=31",
                self.order
            )));
        }
        let mask = (1u32 << self.order) - 1;
        if self.seed & mask == 0 {
            return Err(Error::InvalidConfig(
                "all-zero PRBS seed locks the LFSR at zero".into(),
            ));
        }
        if self.taps.is_empty() {
            return Err(Error::InvalidConfig("PRBS tap list is empty".into()));
        }
        if self.taps.iter().any(|&t| t == 0 || t > self.order) {
            return Err(Error::InvalidConfig(format!(
                "PRBS taps {:?} must lie in 1..={}",
                self.taps, self.order
            )));
        }
        if !self.taps.contains(&self.order) {
            return Err(Error::InvalidConfig(
                "feedback polynomial must include the register length as a tap".into(),
            ));
        }
        Ok(())
    }

    fn tap_mask(&self) -> u32 {
        self.taps.iter().fold(0u32, |m, &t| m | 1 << (t - 1))
    }
}

/// Generates `n_bits` PRBS bits from a Fibonacci LFSR.
///
/// Deterministic for a given `(seed, taps)`; with a primitive polynomial the
/// sequence is periodic with period `2^order - 1`.
pub fn prbs_generate(cfg: &PrbsConfig, n_bits: usize) -> Result<BitSeq> {
    cfg.validate()?;
    if n_bits == 0 {
        return Err(Error::Length("n_bits must be at least 1".into()));
    }
    let mask = (1u32 << cfg.order) - 1;
    let tap_mask = cfg.tap_mask();
    let mut state = cfg.seed & mask;
    let bits = (0..n_bits)
        .map(|_| {
            let fb = (state & tap_mask).count_ones() as u8 & 1;
            state = ((state << 1) | fb as u32) & mask;
            fb
        })
        .collect();
    Ok(BitSeq { bits })
}

/// The four Gray-coded QPSK points, indexed by dibit `(b0 << 1) | b1`.
///
/// 00 → (+1+j)/√2, 01 → (−1+j)/√2, 11 → (−1−j)/√2, 10 → (+1−j)/√2.
/// The first bit of each dibit selects the imaginary sign, the second the
/// real sign; neighbouring points differ in exactly one bit.
pub const QPSK_POINTS: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Unit-average-energy QPSK symbol sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSeq {
    symbols: Vec<Complex64>,
}

impl SymbolSeq {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.symbols
    }
}

/// Maps bit pairs onto the Gray QPSK constellation.
///
/// Errors if the bit count is odd.
pub fn qpsk_map(bits: &BitSeq) -> Result<SymbolSeq> {
    if bits.len() % 2 != 0 {
        return Err(Error::Length(format!(
            "QPSK mapping needs an even bit count, got {}",
            bits.len()
        )));
    }
    let symbols = bits
        .as_slice()
        .chunks_exact(2)
        .map(|d| QPSK_POINTS[((d[0] << 1) | d[1]) as usize])
        .collect();
    Ok(SymbolSeq { symbols })
}

/// Slices one complex sample to the dibit of the nearest constellation point.
///
/// Exact zeros on either axis break toward the positive half-plane, so the
/// decision is deterministic everywhere.
#[inline]
pub fn slice_dibit(z: Complex64) -> [u8; 2] {
    [u8::from(z.im < 0.0), u8::from(z.re < 0.0)]
}

/// Minimum-distance slicing of a complex sequence back to bits.
///
/// Inverse of [`qpsk_map`] on exact constellation points.
pub fn qpsk_demap(symbols: &[Complex64]) -> BitSeq {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for &z in symbols {
        let d = slice_dibit(z);
        bits.push(d[0]);
        bits.push(d[1]);
    }
    BitSeq { bits }
}

/// Transmit pulse shaping applied by [`upsample_shape`].
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Sample-and-hold NRZ: each symbol repeated `sps` times.
    Nrz,
    /// Root-raised-cosine shaping (cyclic convolution, unit average power).
    RootRaisedCosine { rolloff: f64, span_symbols: usize },
}

/// Complex baseband waveform at `sps` samples per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeq {
    pub samples: Vec<Complex64>,
    /// Sampling rate in Hz (`sps × symbol rate`).
    pub sample_rate: f64,
    /// Samples per symbol.
    pub sps: usize,
}

impl SampleSeq {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_symbols(&self) -> usize {
        self.samples.len() / self.sps
    }

    /// Mean squared magnitude of the waveform.
    pub fn average_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Expands symbols to `sps` samples per symbol with the requested shaping.
///
/// NRZ holds each symbol for `sps` samples, leaving average power untouched;
/// RRC zero-stuffs and cyclically convolves with a unit-power-normalized
/// root-raised-cosine, so both shapes feed the channel at average power 1.
pub fn upsample_shape(
    symbols: &SymbolSeq,
    sps: usize,
    symbol_rate: f64,
    shape: &PulseShape,
) -> Result<SampleSeq> {
    if sps == 0 {
        return Err(Error::InvalidConfig("samples per symbol must be >= 1".into()));
    }
    if symbol_rate <= 0.0 {
        return Err(Error::InvalidConfig("symbol rate must be positive".into()));
    }
    let samples = match shape {
        PulseShape::Nrz => {
            let mut out = Vec::with_capacity(symbols.len() * sps);
            for &s in symbols.as_slice() {
                out.extend(std::iter::repeat(s).take(sps));
            }
            out
        }
        PulseShape::RootRaisedCosine {
            rolloff,
            span_symbols,
        } => {
            if !(0.0..=1.0).contains(rolloff) {
                return Err(Error::InvalidConfig(format!(
                    "RRC roll-off {rolloff} outside [0, 1]"
                )));
            }
            let taps = rrc_taps(*rolloff, *span_symbols, sps);
            let n = symbols.len() * sps;
            let mut stuffed = vec![Complex64::new(0.0, 0.0); n];
            for (k, &s) in symbols.as_slice().iter().enumerate() {
                stuffed[k * sps] = s;
            }
            // Cyclic convolution; the transient wraps into the guard region
            // that BER counting already excludes.
            let half = taps.len() / 2;
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &h) in taps.iter().enumerate() {
                    let idx = (i + n + half - j) % n;
                    acc += stuffed[idx] * h;
                }
                *o = acc;
            }
            out
        }
    };
    Ok(SampleSeq {
        samples,
        sample_rate: symbol_rate * sps as f64,
        sps,
    })
}

/// Root-raised-cosine impulse response spanning `span_symbols` on each side,
/// scaled so that Σh² = sps (unit average output power for zero-stuffed
/// unit-energy symbols).
fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Vec<f64> {
    let span = span_symbols.max(1);
    let n = 2 * span * sps + 1;
    let mut taps = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 - (span * sps) as f64) / sps as f64; // in symbol periods
        taps.push(rrc_impulse(t, rolloff));
    }
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = (sps as f64 / energy).sqrt();
    taps.iter_mut().for_each(|h| *h *= scale);
    taps
}

fn rrc_impulse(t: f64, beta: f64) -> f64 {
    use std::f64::consts::PI;
    if t.abs() < 1e-12 {
        return 1.0 + beta * (4.0 / PI - 1.0);
    }
    if beta > 0.0 && (t.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
        let a = (PI / (4.0 * beta)).sin() * (1.0 + 2.0 / PI);
        let b = (PI / (4.0 * beta)).cos() * (1.0 - 2.0 / PI);
        return beta / std::f64::consts::SQRT_2 * (a + b);
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// NRZ matched filter plus symbol-rate sampling: averages each symbol's
/// `sps` samples. At `sps = 1` this is the identity.
pub fn matched_decimate(signal: &SampleSeq) -> Vec<Complex64> {
    signal
        .samples
        .chunks_exact(signal.sps)
        .map(|c| c.iter().sum::<Complex64>() / signal.sps as f64)
        .collect()
}

/// Two independent polarization streams with their transmitted payloads.
///
/// Polarization mode dispersion is out of scope, so the two rails never
/// couple; dual polarization is two parallel single-pol chains.
#[derive(Debug, Clone)]
pub struct DualPolFrame {
    pub pol_x: SampleSeq,
    pub pol_y: SampleSeq,
    pub tx_bits_x: BitSeq,
    pub tx_bits_y: BitSeq,
}

impl DualPolFrame {
    /// Builds both polarizations from independent PRBS seeds.
    pub fn generate(
        prbs_x: &PrbsConfig,
        prbs_y: &PrbsConfig,
        n_bits_per_pol: usize,
        sps: usize,
        symbol_rate: f64,
        shape: &PulseShape,
    ) -> Result<Self> {
        let tx_bits_x = prbs_generate(prbs_x, n_bits_per_pol)?;
        let tx_bits_y = prbs_generate(prbs_y, n_bits_per_pol)?;
        let pol_x = upsample_shape(&qpsk_map(&tx_bits_x)?, sps, symbol_rate, shape)?;
        let pol_y = upsample_shape(&qpsk_map(&tx_bits_y)?, sps, symbol_rate, shape)?;
        Ok(Self {
            pol_x,
            pol_y,
            tx_bits_x,
            tx_bits_y,
        })
    }

    /// Transmitted symbols for one rail, recovered from the payload bits.
    pub fn tx_symbols(&self, pol_y: bool) -> SymbolSeq {
        let bits = if pol_y { &self.tx_bits_y } else { &self.tx_bits_x };
        qpsk_map(bits).expect("frame bit counts are even by construction")
    }
}
