//! Adaptive LMS and variable-step-size LMS equalizers, the static
//! frequency-domain reference equalizer, and convergence/stability
//! diagnostics.
//!
//! Both adaptive filters drive the same recursion over a tapped delay line
//! of the last N input samples (Haykin, "Adaptive Filter Theory", ch. 5-6):
//!
//! ```text
//! y(n) = wᴴ(n) x(n)
//! e(n) = d(n) − y(n)
//! w(n+1) = w(n) + μ x(n) e*(n)
//! ```
//!
//! where d(n) is a known training symbol or the sliced decision. The
//! VSS-LMS variant additionally evolves the step size with the squared
//! error, `μ(n+1) = α μ(n) + γ |e(n)|²`, clamped into `[μ_min, μ_max]`:
//! large errors speed up adaptation, small errors shrink the
//! misadjustment.
//!
//! # Step-size normalization
//!
//! The configured step size is a normalized loop gain: the raw gain in the
//! update recursion is `μ / (N · P̂)` with N the tap count and P̂ the mean
//! input power. The raw-gain stability range depends on both tap count and
//! signal power (the classic bound is `0 < μ_raw < 1/λ_max` with λ_max the
//! largest eigenvalue of the tap-input correlation matrix, and mean-square
//! stability shrinks it by roughly the tap count), so without this scaling
//! no single μ value would be usable across equalizer lengths from 9 to
//! 2305 taps. With it, μ is dimensionless, the stability range is
//! length-independent, and steady-state misadjustment is approximately μ/2
//! regardless of N. [`StabilityReport::mu_bound`] reports the raw-gain
//! bound.

use num_complex::Complex64;

use crate::channel::{compensate_cd, FiberParams};
use crate::error::{Error, Result};
use crate::metrics;
use crate::siggen::{slice_dibit, SampleSeq, SymbolSeq, QPSK_POINTS};

/// Step-size law of the adaptive filter.
#[derive(Debug, Clone, PartialEq)]
pub enum StepLaw {
    /// Constant step size.
    Fixed { mu: f64 },
    /// Error-driven step size `μ(n+1) = α μ(n) + γ |e(n)|²`, clamped into
    /// `[mu_min, mu_max]`.
    Vss {
        mu0: f64,
        alpha: f64,
        gamma: f64,
        mu_min: f64,
        mu_max: f64,
    },
}

impl StepLaw {
    /// VSS-LMS defaults: μ₀ = 0.6, α = 0.97, γ = 4.8e-4, bounds [0.06, 0.6].
    pub fn vss_default() -> Self {
        StepLaw::Vss {
            mu0: 0.6,
            alpha: 0.97,
            gamma: 4.8e-4,
            mu_min: 0.06,
            mu_max: 0.6,
        }
    }

    fn initial_mu(&self) -> f64 {
        match *self {
            StepLaw::Fixed { mu } => mu,
            StepLaw::Vss { mu0, .. } => mu0,
        }
    }
}

/// Reference selection per decided symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualizerMode {
    /// Known symbols for the first `training_symbols` decisions, sliced
    /// decisions afterwards.
    TrainThenDecide { training_symbols: usize },
    /// Decision-directed from the first symbol.
    DecisionDirected,
}

impl EqualizerMode {
    fn training_len(&self) -> usize {
        match *self {
            EqualizerMode::TrainThenDecide { training_symbols } => training_symbols,
            EqualizerMode::DecisionDirected => 0,
        }
    }
}

/// Initial tap weights.
#[derive(Debug, Clone, PartialEq)]
pub enum TapInit {
    /// Unit weight on the center tap, zeros elsewhere. Requires an odd tap
    /// count so the center is well defined.
    CenterSpike,
    /// Explicit weight vector in delay order (index 0 weights the newest
    /// sample).
    Custom(Vec<Complex64>),
}

/// Full adaptive-equalizer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerConfig {
    /// Number of taps N.
    pub n_taps: usize,
    /// Samples per symbol of the tap line; must match the input's `sps`.
    /// 2 gives the usual T/2-spaced filter with one update per symbol.
    pub spacing: usize,
    pub step_law: StepLaw,
    pub mode: EqualizerMode,
    pub init: TapInit,
    /// Sliding window for the recorded MSE curve.
    pub mse_window: usize,
}

impl EqualizerConfig {
    /// T/2-spaced fixed-step LMS with center-spike init and the default
    /// 1000-symbol training preamble.
    pub fn lms(n_taps: usize, mu: f64) -> Self {
        Self {
            n_taps,
            spacing: 2,
            step_law: StepLaw::Fixed { mu },
            mode: EqualizerMode::TrainThenDecide {
                training_symbols: 1000,
            },
            init: TapInit::CenterSpike,
            mse_window: 200,
        }
    }

    /// T/2-spaced VSS-LMS with default parameters.
    pub fn vss(n_taps: usize) -> Self {
        Self {
            step_law: StepLaw::vss_default(),
            ..Self::lms(n_taps, 0.1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::InvalidConfig("tap count must be >= 1".into()));
        }
        if self.spacing == 0 {
            return Err(Error::InvalidConfig("tap spacing must be >= 1".into()));
        }
        if self.mse_window == 0 {
            return Err(Error::InvalidConfig("MSE window must be >= 1".into()));
        }
        match &self.init {
            TapInit::CenterSpike => {
                if self.n_taps % 2 == 0 {
                    return Err(Error::InvalidConfig(
                        "center-spike init needs an odd tap count".into(),
                    ));
                }
            }
            TapInit::Custom(w) => {
                if w.len() != self.n_taps {
                    return Err(Error::InvalidConfig(format!(
                        "custom init has {} weights for {} taps",
                        w.len(),
                        self.n_taps
                    )));
                }
            }
        }
        match self.step_law {
            StepLaw::Fixed { mu } => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidConfig(format!("step size {mu} must be > 0")));
                }
            }
            StepLaw::Vss {
                mu0,
                alpha,
                gamma,
                mu_min,
                mu_max,
            } => {
                // α = 1 with γ = 0 is allowed as the documented escape that
                // reduces VSS exactly to fixed-step LMS for validation.
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "VSS alpha {alpha} outside (0, 1]"
                    )));
                }
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidConfig(format!("VSS gamma {gamma} must be >= 0")));
                }
                if !(mu_min > 0.0 && mu_min <= mu0 && mu0 <= mu_max && mu_max.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "VSS step bounds need 0 < mu_min <= mu0 <= mu_max, got ({mu_min}, {mu0}, {mu_max})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Snapshot of the adaptive filter after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerState {
    /// Tap weights in delay order (index 0 weights the newest sample).
    pub w: Vec<Complex64>,
    /// Step size (normalized units) after the final update.
    pub mu_current: f64,
    /// Output symbols produced.
    pub n: usize,
    /// The last N input samples, newest first.
    pub delay_line: Vec<Complex64>,
}

/// Everything recorded during an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerTrace {
    /// Equalized output, one sample per symbol.
    pub y: Vec<Complex64>,
    /// Estimation error per output symbol (zero where no update ran).
    pub e: Vec<Complex64>,
    /// Sliding-window mean of |e|².
    pub mse_curve: Vec<f64>,
    /// Step size in effect at each output symbol.
    pub mu_curve: Vec<f64>,
    /// Final filter state.
    pub final_state: EqualizerState,
    /// Output symbol k decides transmitted symbol k + reference_shift;
    /// the shift is the (negative) group delay of the center tap.
    pub reference_shift: isize,
    /// Symbols on which a weight update actually ran.
    pub updates: usize,
    /// Real multiplications per iteration: filter 4N, update 4N + 2, plus 4
    /// for the VSS step-size law.
    pub mult_per_symbol: u64,
    /// `mult_per_symbol` × updated symbols.
    pub mult_total: u64,
}

impl EqualizerTrace {
    /// Converged tap weights in delay order.
    pub fn w_final(&self) -> &[Complex64] {
        &self.final_state.w
    }

    /// Taps paired with centered indices (−(N−1)/2 ..= +(N−1)/2), the
    /// ordering used by tap dumps.
    pub fn centered_taps(&self) -> Vec<(i64, Complex64)> {
        let c = (self.final_state.w.len() as i64 - 1) / 2;
        self.final_state
            .w
            .iter()
            .enumerate()
            .map(|(j, &w)| (j as i64 - c, w))
            .collect()
    }
}

/// Nearest QPSK constellation point; the decision device for DD operation.
/// Shares its tie-break (exact zeros go positive) with `qpsk_demap`.
#[inline]
pub fn slicer(y: Complex64) -> Complex64 {
    let d = slice_dibit(y);
    QPSK_POINTS[((d[0] << 1) | d[1]) as usize]
}

/// Weight-norm ceiling; beyond this the run is reported as diverged.
const DIVERGENCE_NORM_SQ: f64 = 1e12;
/// Symbols between weight-norm divergence checks.
const NORM_CHECK_INTERVAL: usize = 64;

/// Runs the fixed-step LMS equalizer; `cfg.step_law` must be `Fixed`.
pub fn lms_run(
    input: &SampleSeq,
    reference: &SymbolSeq,
    cfg: &EqualizerConfig,
) -> Result<EqualizerTrace> {
    if !matches!(cfg.step_law, StepLaw::Fixed { .. }) {
        return Err(Error::InvalidConfig(
            "lms_run needs a Fixed step law; use vss_lms_run".into(),
        ));
    }
    run_adaptive(input, reference, cfg)
}

/// Runs the VSS-LMS equalizer; `cfg.step_law` must be `Vss`.
pub fn vss_lms_run(
    input: &SampleSeq,
    reference: &SymbolSeq,
    cfg: &EqualizerConfig,
) -> Result<EqualizerTrace> {
    if !matches!(cfg.step_law, StepLaw::Vss { .. }) {
        return Err(Error::InvalidConfig(
            "vss_lms_run needs a Vss step law; use lms_run".into(),
        ));
    }
    run_adaptive(input, reference, cfg)
}

fn run_adaptive(
    input: &SampleSeq,
    reference: &SymbolSeq,
    cfg: &EqualizerConfig,
) -> Result<EqualizerTrace> {
    cfg.validate()?;
    if input.sps != cfg.spacing {
        return Err(Error::InvalidConfig(format!(
            "tap spacing {} does not match input at {} samples/symbol",
            cfg.spacing, input.sps
        )));
    }
    let n_taps = cfg.n_taps;
    let spacing = cfg.spacing;
    if input.len() < n_taps * spacing {
        return Err(Error::Length(format!(
            "input of {} samples shorter than one tap window ({} taps × {} sps)",
            input.len(),
            n_taps,
            spacing
        )));
    }
    let n_sym = input.len() / spacing;
    if reference.len() < n_sym {
        return Err(Error::Alignment {
            expected: n_sym,
            got: reference.len(),
        });
    }
    let p_hat = input.average_power();
    if p_hat <= 0.0 {
        return Err(Error::InvalidInput("input power is zero".into()));
    }
    // Normalized step size → raw update gain (see module docs).
    let gain_base = 1.0 / (n_taps as f64 * p_hat);

    // Center-tap cursor and the resulting output→reference symbol shift.
    let center = (n_taps - 1) / 2;
    let shift =
        (spacing as isize - 1 - center as isize).div_euclid(spacing as isize);
    let training_len = cfg.mode.training_len();

    // Zero-pad the history so every output symbol has a full window;
    // window k of padded[m..m+N] is sample x(m - (N-1-k)), oldest first.
    let mut padded = vec![Complex64::new(0.0, 0.0); n_taps - 1 + input.len()];
    padded[n_taps - 1..].copy_from_slice(&input.samples);

    // Weights kept window-aligned (reversed delay order) so both hot loops
    // run forward over contiguous memory.
    let mut w_rev = match &cfg.init {
        TapInit::CenterSpike => {
            let mut w = vec![Complex64::new(0.0, 0.0); n_taps];
            w[n_taps - 1 - center] = Complex64::new(1.0, 0.0);
            w
        }
        TapInit::Custom(w) => w.iter().rev().copied().collect(),
    };

    let vss = match cfg.step_law {
        StepLaw::Vss {
            alpha,
            gamma,
            mu_min,
            mu_max,
            ..
        } => Some((alpha, gamma, mu_min, mu_max)),
        StepLaw::Fixed { .. } => None,
    };
    let mut mu = cfg.step_law.initial_mu();

    let reference = reference.as_slice();
    let mut y_out = Vec::with_capacity(n_sym);
    let mut e_out = Vec::with_capacity(n_sym);
    let mut mu_out = Vec::with_capacity(n_sym);
    let mut updates = 0usize;

    for sym in 0..n_sym {
        let m = spacing * sym + spacing - 1;
        let win = &padded[m..m + n_taps];

        let mut y = Complex64::new(0.0, 0.0);
        for (wk, &xk) in w_rev.iter().zip(win) {
            y += wk.conj() * xk;
        }
        if !y.re.is_finite() || !y.im.is_finite() {
            return Err(Error::Divergence { symbol: sym });
        }

        let r = sym as isize + shift;
        let mu_used = mu;
        let mut e = Complex64::new(0.0, 0.0);
        if r >= 0 && (r as usize) < n_sym {
            let r = r as usize;
            let desired = if r < training_len {
                reference[r]
            } else {
                slicer(y)
            };
            e = desired - y;
            let ge = e.conj() * (gain_base * mu_used);
            for (wk, &xk) in w_rev.iter_mut().zip(win) {
                *wk += xk * ge;
            }
            updates += 1;
            if let Some((alpha, gamma, mu_min, mu_max)) = vss {
                mu = (alpha * mu_used + gamma * e.norm_sqr()).clamp(mu_min, mu_max);
            }
            if updates % NORM_CHECK_INTERVAL == 0 {
                let norm_sq: f64 = w_rev.iter().map(|w| w.norm_sqr()).sum();
                if !(norm_sq <= DIVERGENCE_NORM_SQ) {
                    return Err(Error::Divergence { symbol: sym });
                }
            }
        }

        y_out.push(y);
        e_out.push(e);
        mu_out.push(mu_used);
    }

    let norm_sq: f64 = w_rev.iter().map(|w| w.norm_sqr()).sum();
    if !(norm_sq <= DIVERGENCE_NORM_SQ) {
        return Err(Error::Divergence { symbol: n_sym.saturating_sub(1) });
    }

    let window = cfg.mse_window.min(e_out.len()).max(1);
    let mse = if e_out.is_empty() {
        Vec::new()
    } else {
        metrics::mse_curve(&e_out, window)?
    };

    let last_m = spacing * (n_sym - 1) + spacing - 1;
    let delay_line: Vec<Complex64> = padded[last_m..last_m + n_taps].iter().rev().copied().collect();
    let w: Vec<Complex64> = w_rev.into_iter().rev().collect();

    let mult_per_symbol = 8 * n_taps as u64 + 2 + if vss.is_some() { 4 } else { 0 };
    Ok(EqualizerTrace {
        y: y_out,
        e: e_out,
        mse_curve: mse,
        mu_curve: mu_out,
        final_state: EqualizerState {
            w,
            mu_current: mu,
            n: n_sym,
            delay_line,
        },
        reference_shift: shift,
        updates,
        mult_per_symbol,
        mult_total: mult_per_symbol * updates as u64,
    })
}

/// Frequency-domain zero-forcing equalizer for a known span: multiplies the
/// spectrum by the conjugate dispersion transfer function. Serves as the
/// known-dispersion reference the adaptive filters are judged against.
pub fn static_fd_equalizer(signal: &SampleSeq, params: &FiberParams) -> SampleSeq {
    compensate_cd(signal, params)
}

/// A-priori tap-count estimate: the group-delay spread across the sampled
/// bandwidth, `⌈D·z·(λ²/c)·F_s²⌉`, rounded up to the next odd integer.
pub fn required_taps(params: &FiberParams, symbol_rate: f64, sps: usize) -> Result<usize> {
    if symbol_rate <= 0.0 || sps == 0 {
        return Err(Error::InvalidConfig("rates must be positive".into()));
    }
    let spread = params.delay_spread_samples(symbol_rate * sps as f64);
    let n = (spread.ceil() as usize).max(1);
    Ok(if n % 2 == 0 { n + 1 } else { n })
}

/// Tap-input correlation diagnostics for LMS step-size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Largest eigenvalue of the estimated correlation matrix R = E[x xᴴ].
    pub lambda_max: f64,
    /// Smallest eigenvalue estimate.
    pub lambda_min: f64,
    /// λ_max / λ_min; convergence slows as the spread grows.
    pub eigenvalue_spread: f64,
    /// Raw-gain stability bound 1/λ_max.
    pub mu_bound: f64,
}

const POWER_ITER_TOL: f64 = 1e-6;
const POWER_ITER_CAP: usize = 10_000;

/// Estimates R from sliding N-sample windows of the input and extracts the
/// eigenvalue extremes by power iteration (relative tolerance 1e-6, capped
/// at 10⁴ iterations).
pub fn stability_bound(input: &SampleSeq, n_taps: usize) -> Result<StabilityReport> {
    if n_taps == 0 {
        return Err(Error::InvalidConfig("tap count must be >= 1".into()));
    }
    if input.len() < 10 * n_taps {
        return Err(Error::Length(format!(
            "need at least {} samples to estimate an {}-tap correlation matrix",
            10 * n_taps,
            n_taps
        )));
    }
    let s = &input.samples;
    let n = n_taps;
    let available = s.len() - n + 1;
    // Cap the accumulation cost; overlapping windows are cheap statistics.
    let stride = ((available as f64 * (n * n) as f64 / 2e8).ceil() as usize).max(1);
    let mut count = 0usize;

    // Accumulate the upper triangle of R, then mirror.
    let mut r = vec![Complex64::new(0.0, 0.0); n * n];
    let mut start = 0;
    while start < available {
        let win = &s[start..start + n];
        for i in 0..n {
            let xi = win[i];
            for (j, &xj) in win.iter().enumerate().skip(i) {
                r[i * n + j] += xi * xj.conj();
            }
        }
        count += 1;
        start += stride;
    }
    let scale = 1.0 / count as f64;
    for i in 0..n {
        for j in i..n {
            r[i * n + j] *= scale;
            if j != i {
                r[j * n + i] = r[i * n + j].conj();
            }
        }
    }

    let lambda_max = power_iteration(&r, n, None)?;
    // Largest eigenvalue of (s·I − R) gives λ_min; precision there only
    // feeds the spread diagnostic, so a capped estimate is acceptable.
    let shifted = lambda_max * (1.0 + 1e-3) + 1e-12;
    let lambda_min = match power_iteration(&r, n, Some(shifted)) {
        Ok(l) => shifted - l,
        Err(Error::NonConvergent { estimate, .. }) => shifted - estimate,
        Err(e) => return Err(e),
    };
    let lambda_min = lambda_min.max(lambda_max * 1e-12);
    Ok(StabilityReport {
        lambda_max,
        lambda_min,
        eigenvalue_spread: (lambda_max / lambda_min).max(1.0),
        mu_bound: 1.0 / lambda_max,
    })
}

/// Power iteration on R (or on s·I − R when `shift` is given); returns the
/// dominant eigenvalue.
fn power_iteration(r: &[Complex64], n: usize, shift: Option<f64>) -> Result<f64> {
    // Deterministic start with a mild ramp so no eigenvector is missed by
    // symmetry.
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 1e-3 * i as f64, 0.0))
        .collect();
    let norm = (v.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut lambda_prev = f64::INFINITY;
    for it in 0..POWER_ITER_CAP {
        for (i, ui) in u.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &vj) in v.iter().enumerate() {
                acc += r[i * n + j] * vj;
            }
            *ui = match shift {
                Some(s) => s * v[i] - acc,
                None => acc,
            };
        }
        // Rayleigh quotient; real for Hermitian R and unit v.
        let lambda: f64 = v
            .iter()
            .zip(&u)
            .map(|(vi, ui)| (vi.conj() * ui).re)
            .sum();
        let norm = (u.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return Ok(0.0); // zero matrix
        }
        for (vi, &ui) in v.iter_mut().zip(&u) {
            *vi = ui / norm;
        }
        if (lambda - lambda_prev).abs() <= POWER_ITER_TOL * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok(lambda);
        }
        if it == POWER_ITER_CAP - 1 {
            return Err(Error::NonConvergent {
                iterations: POWER_ITER_CAP,
                estimate: lambda,
            });
        }
        lambda_prev = lambda;
    }
    unreachable!()
}

/// Finds the first index of `mse_curve` that drops below
/// `threshold × steady-state MSE` (steady state = mean of the final 10%)
/// and stays below for one full window. `None` means never converged.
pub fn convergence_detect(
    mse_curve: &[f64],
    window: usize,
    threshold: f64,
) -> Result<Option<usize>> {
    if mse_curve.is_empty() {
        return Err(Error::Length("empty MSE curve".into()));
    }
    if window == 0 {
        return Err(Error::InvalidConfig("window must be >= 1".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig("threshold factor must be > 0".into()));
    }
    if mse_curve.len() < window {
        return Ok(None);
    }
    let target = threshold * metrics::steady_state_level(mse_curve);
    let mut run = 0usize;
    for (i, &v) in mse_curve.iter().enumerate() {
        if v <= target {
            run += 1;
            if run == window {
                return Ok(Some(i + 1 - window));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_cd;
    use crate::siggen::{
        prbs_generate, qpsk_map, upsample_shape, PrbsConfig, PulseShape,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn qpsk_frame(n_bits: usize, seed: u32, sps: usize) -> (SymbolSeq, SampleSeq) {
        let bits = prbs_generate(&PrbsConfig::prbs15(seed), n_bits).unwrap();
        let syms = qpsk_map(&bits).unwrap();
        let samples = upsample_shape(&syms, sps, 28e9, &PulseShape::Nrz).unwrap();
        (syms, samples)
    }

    #[test]
    fn slicer_quadrants_and_fixed_points() {
        let p = slicer(Complex64::new(0.9, 0.8));
        assert_eq!(p, QPSK_POINTS[0]);
        for &q in &QPSK_POINTS {
            assert_eq!(slicer(q), q, "constellation points are fixed points");
        }
    }

    #[test]
    fn slicer_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(a, b);
            assert_eq!(slicer(slicer(z)), slicer(z));
        }
    }

    #[test]
    fn zero_fiber_center_spike_is_transparent() {
        // Already-equalized input: errors stay zero, weights never move,
        // output is the input decimated to one sample per symbol.
        let (syms, samples) = qpsk_frame(2000, 0x11, 2);
        let cfg = EqualizerConfig::lms(37, 0.1);
        let trace = lms_run(&samples, &syms, &cfg).unwrap();

        assert!(trace.e.iter().all(|e| e.norm() == 0.0));
        let expected_w = {
            let mut w = vec![Complex64::new(0.0, 0.0); 37];
            w[18] = Complex64::new(1.0, 0.0);
            w
        };
        assert_eq!(trace.w_final(), expected_w.as_slice());

        let shift = trace.reference_shift;
        for n in 0..trace.y.len() {
            let r = n as isize + shift;
            if r >= 0 {
                assert_eq!(trace.y[n], syms.as_slice()[r as usize], "symbol {n}");
            }
        }
    }

    #[test]
    fn scalar_toy_converges_to_inverse_channel() {
        // x(n) = h·s(n) with training on s(n): the single tap must reach
        // the Wiener solution conj(1/h).
        let h = Complex64::from_polar(0.8, 0.7);
        let (syms, clean) = qpsk_frame(4000, 0x22, 1);
        let faded = SampleSeq {
            samples: clean.samples.iter().map(|x| x * h).collect(),
            sample_rate: clean.sample_rate,
            sps: 1,
        };
        let cfg = EqualizerConfig {
            n_taps: 1,
            spacing: 1,
            step_law: StepLaw::Fixed { mu: 0.05 },
            mode: EqualizerMode::TrainThenDecide {
                training_symbols: usize::MAX,
            },
            init: TapInit::Custom(vec![Complex64::new(0.0, 0.0)]),
            mse_window: 50,
        };
        let trace = lms_run(&faded, &syms, &cfg).unwrap();
        let expected = (Complex64::new(1.0, 0.0) / h).conj();
        let got = trace.w_final()[0];
        assert!(
            (got - expected).norm() < 1e-4,
            "w = {got}, expected {expected}"
        );
    }

    #[test]
    fn tap_weights_concentrate_for_60km_span() {
        // 60 km, N=37, μ=0.1: converged magnitudes outside the central
        // 23-tap span stay below 2% of the peak.
        let (syms, samples) = qpsk_frame(40_000, 0x33, 2);
        let params = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
        // Tap structure is read off a clean converged run; at finite OSNR the
        // misadjustment noise floor (~μ·MMSE/2N per tap) masks the edge taps.
        let noisy = apply_cd(&samples, &params);
        let mut cfg = EqualizerConfig::lms(37, 0.1);
        cfg.mode = EqualizerMode::TrainThenDecide {
            training_symbols: 5000,
        };
        let trace = lms_run(&noisy, &syms, &cfg).unwrap();

        let peak = trace
            .w_final()
            .iter()
            .map(|w| w.norm())
            .fold(0.0f64, f64::max);
        let worst_outside = trace
            .centered_taps()
            .iter()
            .filter(|(i, _)| i.abs() > 11)
            .map(|(_, w)| w.norm())
            .fold(0.0f64, f64::max);
        assert!(
            worst_outside < 0.02 * peak,
            "outside {worst_outside:.4} vs peak {peak:.4}"
        );
    }

    #[test]
    fn dd_tracks_after_training_handoff() {
        // After the training preamble the slicer takes over; a converged
        // filter must keep the error small in DD mode.
        let (syms, samples) = qpsk_frame(20_000, 0x44, 2);
        let params = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
        let noisy = crate::channel::add_awgn(
            &apply_cd(&samples, &params),
            &crate::channel::NoiseParams::new(15.0, 9),
            28e9,
        )
        .unwrap();
        let cfg = EqualizerConfig::lms(37, 0.1); // 1000 training symbols
        let trace = lms_run(&noisy, &syms, &cfg).unwrap();
        let steady = metrics::steady_state_level(&trace.mse_curve);
        assert!(steady < 0.1, "steady-state MSE {steady}");
    }

    #[test]
    fn vss_single_step_arithmetic() {
        // α·μ(0) + γ·|e|² with μ(0)=0.6, |e|=0.5 → 0.58212.
        let d = QPSK_POINTS[0];
        let w0 = (d - Complex64::new(0.5, 0.0)).conj();
        let input = SampleSeq {
            samples: vec![Complex64::new(1.0, 0.0); 2],
            sample_rate: 28e9,
            sps: 1,
        };
        let bits = crate::siggen::BitSeq::new(vec![0, 0, 0, 0]).unwrap();
        let reference = qpsk_map(&bits).unwrap();
        let cfg = EqualizerConfig {
            n_taps: 1,
            spacing: 1,
            step_law: StepLaw::Vss {
                mu0: 0.6,
                alpha: 0.97,
                gamma: 4.8e-4,
                mu_min: 1e-9,
                mu_max: 0.6,
            },
            mode: EqualizerMode::TrainThenDecide {
                training_symbols: usize::MAX,
            },
            init: TapInit::Custom(vec![w0]),
            mse_window: 1,
        };
        let trace = vss_lms_run(&input, &reference, &cfg).unwrap();
        assert!((trace.e[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(
            (trace.mu_curve[1] - 0.58212).abs() < 1e-12,
            "mu(1) = {}",
            trace.mu_curve[1]
        );
    }

    #[test]
    fn vss_zero_error_decays_geometrically() {
        // Perfect input keeps e ≡ 0, so μ(n) = αⁿ μ(0) with no clamping.
        let (syms, samples) = qpsk_frame(600, 0x55, 1);
        let cfg = EqualizerConfig {
            n_taps: 1,
            spacing: 1,
            step_law: StepLaw::Vss {
                mu0: 0.6,
                alpha: 0.97,
                gamma: 4.8e-4,
                mu_min: 1e-12,
                mu_max: 0.6,
            },
            mode: EqualizerMode::TrainThenDecide {
                training_symbols: usize::MAX,
            },
            init: TapInit::CenterSpike,
            mse_window: 10,
        };
        let trace = vss_lms_run(&samples, &syms, &cfg).unwrap();
        assert!(trace.e.iter().all(|e| e.norm() == 0.0));
        for (k, &mu) in trace.mu_curve.iter().enumerate().take(200) {
            let expected = 0.6 * 0.97f64.powi(k as i32);
            assert!(
                (mu - expected).abs() < 1e-12 * expected.max(1e-30),
                "mu({k}) = {mu}, expected {expected}"
            );
            assert!(mu > 0.0);
        }
    }

    #[test]
    fn vss_clamps_into_bounds() {
        let (syms, samples) = qpsk_frame(4000, 0x56, 2);
        let params = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
        let noisy = crate::channel::add_awgn(
            &apply_cd(&samples, &params),
            &crate::channel::NoiseParams::new(12.0, 4),
            28e9,
        )
        .unwrap();
        let cfg = EqualizerConfig::vss(37);
        let trace = vss_lms_run(&noisy, &syms, &cfg).unwrap();
        for &mu in &trace.mu_curve {
            assert!((0.06..=0.6).contains(&mu), "mu {mu} escaped the clamp");
        }
        // The error-driven law must actually settle at the floor.
        assert!((trace.final_state.mu_current - 0.06).abs() < 1e-12);
    }

    #[test]
    fn vss_reduces_to_lms_exactly() {
        // α=1, γ=0 is the validation escape: bit-identical to fixed LMS.
        let (syms, samples) = qpsk_frame(8000, 0x66, 2);
        let params = FiberParams::new(16.0, 1550.0, 40.0).unwrap();
        let noisy = crate::channel::add_awgn(
            &apply_cd(&samples, &params),
            &crate::channel::NoiseParams::new(13.0, 21),
            28e9,
        )
        .unwrap();
        let lms_cfg = EqualizerConfig::lms(25, 0.1);
        let vss_cfg = EqualizerConfig {
            step_law: StepLaw::Vss {
                mu0: 0.1,
                alpha: 1.0,
                gamma: 0.0,
                mu_min: 0.1,
                mu_max: 0.1,
            },
            ..lms_cfg.clone()
        };
        let a = lms_run(&noisy, &syms, &lms_cfg).unwrap();
        let b = vss_lms_run(&noisy, &syms, &vss_cfg).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.e, b.e);
        assert_eq!(a.w_final(), b.w_final());
        assert_eq!(b.mult_per_symbol - a.mult_per_symbol, 4);
    }

    #[test]
    fn divergence_above_stability_bound() {
        // White unit-power input: λ_max ≈ 1. A step of 4/λ must blow up,
        // 0.5/λ must stay bounded (single tap: the raw gain equals μ).
        let (syms, samples) = qpsk_frame(4000, 0x77, 1);
        let report = stability_bound(&samples, 1).unwrap();
        assert!((report.lambda_max - 1.0).abs() < 0.1);

        let base = EqualizerConfig {
            n_taps: 1,
            spacing: 1,
            step_law: StepLaw::Fixed { mu: 1.0 },
            mode: EqualizerMode::TrainThenDecide {
                training_symbols: usize::MAX,
            },
            init: TapInit::Custom(vec![Complex64::new(0.0, 0.0)]),
            mse_window: 50,
        };

        let stable_cfg = EqualizerConfig {
            step_law: StepLaw::Fixed {
                mu: 0.5 * report.mu_bound,
            },
            ..base.clone()
        };
        let trace = lms_run(&samples, &syms, &stable_cfg).unwrap();
        let tail = metrics::steady_state_level(&trace.mse_curve);
        assert!(tail < 1e-3, "converged run should reach a tiny MSE, got {tail}");

        let unstable_cfg = EqualizerConfig {
            step_law: StepLaw::Fixed {
                mu: 4.0 * report.mu_bound,
            },
            ..base
        };
        match lms_run(&samples, &syms, &unstable_cfg) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn input_shorter_than_window_rejected() {
        let (syms, samples) = qpsk_frame(20, 0x88, 2);
        let short = SampleSeq {
            samples: samples.samples[..10].to_vec(),
            sample_rate: samples.sample_rate,
            sps: 2,
        };
        let cfg = EqualizerConfig::lms(37, 0.1);
        assert!(matches!(
            lms_run(&short, &syms, &cfg),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn config_validation_catches_bad_parameters() {
        let mut cfg = EqualizerConfig::lms(36, 0.1); // even taps + spike
        assert!(cfg.validate().is_err());
        cfg = EqualizerConfig::lms(37, 0.0);
        assert!(cfg.validate().is_err());
        cfg = EqualizerConfig::vss(37);
        if let StepLaw::Vss { ref mut mu_min, .. } = cfg.step_law {
            *mu_min = 0.7; // above mu0
        }
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn static_equalizer_inverts_channel() {
        let (_, samples) = qpsk_frame(8192, 0x99, 2);
        let params = FiberParams::new(16.0, 1550.0, 300.0).unwrap();
        let recovered = static_fd_equalizer(&apply_cd(&samples, &params), &params);
        let err: f64 = recovered
            .samples
            .iter()
            .zip(&samples.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / samples.len() as f64;
        assert!(err.sqrt() < 1e-9);

        let zero = FiberParams::new(16.0, 1550.0, 0.0).unwrap();
        let same = static_fd_equalizer(&samples, &zero);
        assert_eq!(same.samples, samples.samples);
    }

    #[test]
    fn required_taps_reference_points() {
        // Evaluating ⌈D·z·(λ²/c)·F_s²⌉ (next odd) with c = 299792458 m/s:
        // 60 km → raw 24.13 → 25; 6000 km → raw 2412.6 → 2413; z=0 → 1.
        let rs = 28e9;
        let p60 = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
        assert_eq!(required_taps(&p60, rs, 2).unwrap(), 25);
        let p6000 = FiberParams::new(16.0, 1550.0, 6000.0).unwrap();
        assert_eq!(required_taps(&p6000, rs, 2).unwrap(), 2413);
        let p0 = FiberParams::new(16.0, 1550.0, 0.0).unwrap();
        assert_eq!(required_taps(&p0, rs, 2).unwrap(), 1);
        // 20 km matches the tap count the experiments use for that span.
        let p20 = FiberParams::new(16.0, 1550.0, 20.0).unwrap();
        assert_eq!(required_taps(&p20, rs, 2).unwrap(), 9);
    }

    #[test]
    fn stability_white_input_near_unit_eigenvalue() {
        let (_, samples) = qpsk_frame(200_000, 0xAA, 1);
        let report = stability_bound(&samples, 21).unwrap();
        assert!(
            (report.lambda_max - 1.0).abs() < 0.1,
            "λ_max = {}",
            report.lambda_max
        );
        assert!((report.mu_bound - 1.0).abs() < 0.15);
        assert!(report.eigenvalue_spread >= 1.0);
    }

    #[test]
    fn stability_scales_quadratically_with_amplitude() {
        let (_, samples) = qpsk_frame(20_000, 0xBB, 1);
        let scaled = SampleSeq {
            samples: samples.samples.iter().map(|s| s * 3.0f64.sqrt()).collect(),
            sample_rate: samples.sample_rate,
            sps: 1,
        };
        let a = stability_bound(&samples, 9).unwrap();
        let b = stability_bound(&scaled, 9).unwrap();
        assert!(
            (b.lambda_max / a.lambda_max - 3.0).abs() < 1e-9,
            "ratio {}",
            b.lambda_max / a.lambda_max
        );
    }

    #[test]
    fn stability_dispersed_white_input_stays_near_white() {
        // An all-pass channel leaves a flat spectrum flat, so the tap-input
        // eigenvalue spread stays small.
        let (_, samples) = qpsk_frame(100_000, 0xCC, 1);
        let params = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
        let dispersed = apply_cd(&samples, &params);
        let report = stability_bound(&dispersed, 25).unwrap();
        assert!(
            report.eigenvalue_spread < 1.5,
            "spread = {}",
            report.eigenvalue_spread
        );
    }

    #[test]
    fn stability_input_too_short_rejected() {
        let (_, samples) = qpsk_frame(60, 0xDD, 1);
        assert!(matches!(
            stability_bound(&samples, 9),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn convergence_detect_trivials() {
        let constant = vec![0.01; 500];
        assert_eq!(convergence_detect(&constant, 10, 1.5).unwrap(), Some(0));
        assert!(matches!(
            convergence_detect(&[], 10, 1.5),
            Err(Error::Length(_))
        ));
        // A threshold below the steady level can never be crossed.
        assert_eq!(convergence_detect(&constant, 10, 0.5).unwrap(), None);
    }

    #[test]
    fn convergence_detect_synthetic_crossing() {
        // a·ρⁿ + b crosses threshold·b at n = ln((th−1)·b/a)/ln(ρ).
        let (a, rho, b) = (1.0f64, 0.99f64, 0.01f64);
        let curve: Vec<f64> = (0..2000).map(|n| a * rho.powi(n) + b).collect();
        let window = 50;
        let threshold = 1.5;
        let detected = convergence_detect(&curve, window, threshold)
            .unwrap()
            .expect("curve converges");
        let predicted = ((threshold - 1.0) * b / a).ln() / rho.ln();
        assert!(
            (detected as f64 - predicted).abs() <= window as f64,
            "detected {detected}, predicted {predicted:.1}"
        );
    }

    #[test]
    fn convergence_detect_threshold_monotonic() {
        let curve: Vec<f64> = (0..1000).map(|n| 0.99f64.powi(n) + 0.01).collect();
        let mut prev = usize::MAX;
        for &th in &[1.2, 1.5, 2.0, 3.0] {
            let idx = convergence_detect(&curve, 20, th).unwrap().unwrap();
            assert!(idx <= prev, "threshold {th} raised the index");
            prev = idx;
        }
    }

    #[test]
    fn complexity_ledger_counts() {
        let (syms, samples) = qpsk_frame(1000, 0xEE, 2);
        let lms = lms_run(&samples, &syms, &EqualizerConfig::lms(9, 0.1)).unwrap();
        let vss = vss_lms_run(&samples, &syms, &EqualizerConfig::vss(9)).unwrap();
        assert_eq!(lms.mult_per_symbol, 8 * 9 + 2);
        assert_eq!(vss.mult_per_symbol, 8 * 9 + 6);
        assert_eq!(vss.mult_per_symbol - lms.mult_per_symbol, 4);
        assert_eq!(lms.mult_total, lms.mult_per_symbol * lms.updates as u64);
    }
}
