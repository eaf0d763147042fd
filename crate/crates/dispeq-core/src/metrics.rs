//! Bit-error counting, EVM, MSE curves, and the analytic QPSK reference.

use num_complex::Complex64;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::siggen::BitSeq;

/// Below this many counted bits a BER estimate is flagged low-confidence.
pub const MIN_CONFIDENT_BITS: usize = 10_000;

/// Outcome of a bit-error comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerResult {
    pub errors: usize,
    pub bits_counted: usize,
    pub ber: f64,
    /// Symbols dropped from the front before counting.
    pub skipped_prefix: usize,
    /// Constellation rotation (degrees) that minimized the error count.
    pub rotation_applied: u16,
    /// True when fewer than [`MIN_CONFIDENT_BITS`] bits were counted.
    pub low_confidence: bool,
}

/// Derived signal-quality figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMetrics {
    /// RMS error vector magnitude over RMS reference magnitude.
    pub evm_rms: f64,
    /// Steady-state windowed MSE (mean over the final 10% of the curve).
    pub mse_steady: f64,
    /// Q-factor in dB derived from the BER via the inverse Gaussian tail.
    pub q_db: f64,
}

/// Gaussian tail function Q(x).
fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Analytic bit error rate of Gray-coded QPSK over AWGN: `Q(sqrt(Es/N0))`.
pub fn theoretical_qpsk_ber(esn0_db: f64) -> f64 {
    if esn0_db == f64::INFINITY {
        return 0.0;
    }
    let esn0 = 10f64.powf(esn0_db / 10.0);
    q_function(esn0.sqrt())
}

/// Q-factor in dB equivalent to a given BER (reporting convenience).
pub fn ber_to_q_db(ber: f64) -> f64 {
    if ber <= 0.0 {
        return f64::INFINITY;
    }
    if ber >= 0.5 {
        return f64::NEG_INFINITY;
    }
    let q = std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber);
    20.0 * q.log10()
}

/// Dibit permutation equivalent to rotating the received constellation by
/// the given multiple of 90 degrees before slicing.
#[inline]
fn rotate_dibit(b0: u8, b1: u8, quarter_turns: u8) -> (u8, u8) {
    match quarter_turns & 3 {
        0 => (b0, b1),
        1 => (b1, 1 - b0),     // +90°
        2 => (1 - b0, 1 - b1), // 180°
        _ => (1 - b1, b0),     // 270°
    }
}

/// Compares transmitted and received bits after dropping `skip_symbols`
/// QPSK symbols (2 bits each) from the front of both sequences.
///
/// All four constellation rotations of the received bits are tried and the
/// minimum error count is reported together with the rotation, which
/// resolves the 90° phase ambiguity of blind decision-directed equalization.
pub fn count_ber(tx: &BitSeq, rx: &BitSeq, skip_symbols: usize) -> Result<BerResult> {
    let skip_bits = 2 * skip_symbols;
    if tx.len() < skip_bits + 2 || rx.len() < skip_bits + 2 {
        return Err(Error::Length(format!(
            "need more than {skip_bits} bits to count after skipping {skip_symbols} symbols"
        )));
    }
    let tx = &tx.as_slice()[skip_bits..];
    let rx = &rx.as_slice()[skip_bits..];
    if tx.len() != rx.len() {
        return Err(Error::Alignment {
            expected: tx.len(),
            got: rx.len(),
        });
    }
    // Odd trailing bit cannot form a dibit; compare whole symbols only.
    let n_dibits = tx.len() / 2;
    let bits_counted = 2 * n_dibits;

    let mut best_errors = usize::MAX;
    let mut best_rotation = 0u16;
    for quarter in 0..4u8 {
        let mut errors = 0usize;
        for k in 0..n_dibits {
            let (r0, r1) = rotate_dibit(rx[2 * k], rx[2 * k + 1], quarter);
            errors += usize::from(r0 != tx[2 * k]) + usize::from(r1 != tx[2 * k + 1]);
        }
        if errors < best_errors {
            best_errors = errors;
            best_rotation = quarter as u16 * 90;
        }
    }

    Ok(BerResult {
        errors: best_errors,
        bits_counted,
        ber: best_errors as f64 / bits_counted as f64,
        skipped_prefix: skip_symbols,
        rotation_applied: best_rotation,
        low_confidence: bits_counted < MIN_CONFIDENT_BITS,
    })
}

/// RMS error vector magnitude of `y` against the ideal `reference`,
/// normalized by the reference RMS magnitude.
pub fn evm(y: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if y.len() != reference.len() {
        return Err(Error::Alignment {
            expected: reference.len(),
            got: y.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::Length("EVM needs at least one symbol".into()));
    }
    let err: f64 = y
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let pow: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    if pow <= 0.0 {
        return Err(Error::InvalidInput("reference power is zero".into()));
    }
    Ok((err / pow).sqrt())
}

/// Sliding-window mean of |e(n)|²; output length is `e.len() - window + 1`.
pub fn mse_curve(e: &[Complex64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be >= 1".into()));
    }
    if e.len() < window {
        return Err(Error::Length(format!(
            "window {window} longer than error sequence of {}",
            e.len()
        )));
    }
    let inv = 1.0 / window as f64;
    let mut out = Vec::with_capacity(e.len() - window + 1);
    let mut acc: f64 = e[..window].iter().map(|v| v.norm_sqr()).sum();
    out.push(acc * inv);
    for i in window..e.len() {
        acc += e[i].norm_sqr() - e[i - window].norm_sqr();
        out.push(acc * inv);
    }
    Ok(out)
}

/// Mean of the final 10% of a curve (at least one point); the steady-state
/// level used by convergence detection.
pub fn steady_state_level(curve: &[f64]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let tail = (curve.len() / 10).max(1);
    let s: f64 = curve[curve.len() - tail..].iter().sum();
    s / tail as f64
}

/// 95% Wilson score interval for an error proportion.
pub fn binomial_ci95(errors: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_985f64; // 97.5% normal quantile
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}
