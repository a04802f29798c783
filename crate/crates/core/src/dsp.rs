//! Shared numerical kernels: spectral transforms, targeted DTFT evaluation,
//! linear convolution, cross-correlation, and Welch PSD estimation.
//!
//! Everything here is a pure function over immutable inputs; all frequencies
//! are in Hz, times in seconds, angles in radians.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Complex baseband sample vector with its sample rate. The universal signal
/// currency of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl IqBuffer {
    /// Wraps samples with a sample rate. Errors on an empty vector or a
    /// non-positive sample rate.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("IqBuffer requires at least one sample"));
        }
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidParam(format!(
                "sample_rate must be positive and finite, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Sample interval in seconds.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// New buffer with the same sample rate, applying `f` to every sample.
    pub fn map<F: FnMut(Complex64) -> Complex64>(&self, f: F) -> IqBuffer {
        IqBuffer {
            samples: self.samples.iter().copied().map(f).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Complex spectrum bins with their spacing and the frequency of bin 0.
/// Bins follow the natural FFT order: DC first, negative frequencies in the
/// upper half.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_spacing: f64,
    pub origin: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Frequency of bin `k` mapped into the principal band
    /// `[-fs/2, fs/2)`.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        let n = self.bins.len();
        let half = n / 2;
        let signed = if k < n - half + (n % 2) * 0 && k <= (n - 1) / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        };
        self.origin + signed as f64 * self.bin_spacing
    }
}

pub(crate) fn fft_forward(mut data: Vec<Complex64>) -> Vec<Complex64> {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(data.len());
        fft.process(&mut data);
    });
    data
}

pub(crate) fn fft_inverse(mut data: Vec<Complex64>) -> Vec<Complex64> {
    let n = data.len();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(n);
        fft.process(&mut data);
    });
    let scale = 1.0 / n as f64;
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Forward transform on the caller's grid (no padding: bin count equals the
/// input length, bin spacing `fs/N`).
pub fn forward_spectrum(x: &IqBuffer) -> Spectrum {
    let n = x.len();
    Spectrum {
        bins: fft_forward(x.samples().to_vec()),
        bin_spacing: x.sample_rate() / n as f64,
        origin: 0.0,
    }
}

/// Inverse of [`forward_spectrum`]; the sample rate is recovered from
/// `bin_spacing * len`.
pub fn inverse_spectrum(s: &Spectrum) -> Result<IqBuffer> {
    if s.bins.is_empty() {
        return Err(Error::EmptyInput("spectrum has no bins"));
    }
    let fs = s.bin_spacing * s.bins.len() as f64;
    IqBuffer::new(fft_inverse(s.bins.clone()), fs)
}

/// Evaluates the DTFT of `x` at one normalized frequency (cycles/sample):
/// `sum_n x[n] e^{-j 2 pi f_norm n}`.
///
/// Uses a phasor recurrence resynchronized every 64 samples so rounding does
/// not drift over long buffers.
pub(crate) fn dtft_single(samples: &[Complex64], f_norm: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -2.0 * PI * f_norm);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = 0usize;
    while idx < samples.len() {
        let block = (samples.len() - idx).min(64);
        let mut w = Complex64::from_polar(1.0, -2.0 * PI * f_norm * idx as f64);
        for &s in &samples[idx..idx + block] {
            acc += s * w;
            w *= step;
        }
        idx += block;
    }
    acc
}

/// Evaluates the DTFT of `x` at arbitrary frequencies (Hz):
/// `result[k] = sum_n x[n] e^{-j 2 pi freqs[k] n T_s}`.
///
/// Frequencies must lie within the Nyquist band `|f| <= fs/2`.
pub fn dtft_at(x: &IqBuffer, freqs: &[f64]) -> Result<Vec<Complex64>> {
    let nyquist = x.sample_rate() / 2.0;
    for &f in freqs {
        if !f.is_finite() || f.abs() > nyquist * (1.0 + 1e-12) {
            return Err(Error::OutOfBand {
                freq_hz: f,
                nyquist_hz: nyquist,
            });
        }
    }
    let ts = x.sample_interval();
    Ok(freqs
        .iter()
        .map(|&f| dtft_single(x.samples(), f * ts))
        .collect())
}

/// Output trimming for [`convolve_linear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    /// Length `len(kernel) + len(signal) - 1`.
    Full,
    /// Center-trimmed to `len(signal)`, kernel anchored at its midpoint.
    Same,
}

/// Linear convolution of a real kernel with a complex signal.
pub fn convolve_linear(
    kernel: &[f64],
    signal: &[Complex64],
    mode: ConvMode,
) -> Result<Vec<Complex64>> {
    if kernel.is_empty() {
        return Err(Error::EmptyInput("convolution kernel"));
    }
    if signal.is_empty() {
        return Err(Error::EmptyInput("convolution signal"));
    }
    let n = kernel.len();
    let m = signal.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n + m - 1];
    for (i, &a) in kernel.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in signal.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    match mode {
        ConvMode::Full => Ok(out),
        ConvMode::Same => {
            let start = (n - 1) / 2;
            Ok(out[start..start + m].to_vec())
        }
    }
}

const XCORR_NAIVE_LIMIT: u64 = 1 << 22;

/// Sliding cross-correlation `c[lag] = sum_n received[n+lag] * conj(reference[n])`
/// for every lag in `0..=len(received)-len(reference)`.
pub fn xcorr_all(reference: &IqBuffer, received: &IqBuffer) -> Result<Vec<Complex64>> {
    let m = reference.len();
    let n = received.len();
    if m > n {
        return Err(Error::ReferenceTooLong {
            reference: m,
            received: n,
        });
    }
    let lags = n - m + 1;
    if (lags as u64) * (m as u64) <= XCORR_NAIVE_LIMIT {
        let rx = received.samples();
        let rf = reference.samples();
        Ok((0..lags)
            .map(|lag| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &r) in rf.iter().enumerate() {
                    acc += rx[lag + k] * r.conj();
                }
                acc
            })
            .collect())
    } else {
        // FFT path: length n+m avoids circular wrap for the lags of interest.
        let p = n + m;
        let mut a = received.samples().to_vec();
        a.resize(p, Complex64::new(0.0, 0.0));
        let mut b = reference.samples().to_vec();
        b.resize(p, Complex64::new(0.0, 0.0));
        let fa = fft_forward(a);
        let fb = fft_forward(b);
        let prod: Vec<Complex64> = fa
            .iter()
            .zip(fb.iter())
            .map(|(x, y)| x * y.conj())
            .collect();
        let c = fft_inverse(prod);
        Ok(c[..lags].to_vec())
    }
}

/// Lag maximizing the cross-correlation magnitude, plus that magnitude.
/// Ties break toward the smallest lag.
pub fn xcorr_peak(reference: &IqBuffer, received: &IqBuffer) -> Result<(usize, f64)> {
    let corr = xcorr_all(reference, received)?;
    let mut best = 0usize;
    let mut best_mag = corr[0].norm_sqr();
    for (lag, c) in corr.iter().enumerate().skip(1) {
        let mag = c.norm_sqr();
        if mag > best_mag {
            best = lag;
            best_mag = mag;
        }
    }
    Ok((best, best_mag.sqrt()))
}

fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / denom).cos())
        .collect()
}

/// Welch PSD estimate with a Hann window. Returns `(freqs, psd)` on an
/// fftshifted grid ascending from `-fs/2`; the PSD is two-sided and
/// normalized so that `sum(psd) * fs / segment_len` approximates the mean
/// power of `x`.
pub fn welch_psd(x: &IqBuffer, segment_len: usize, overlap: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if segment_len == 0 || segment_len > x.len() {
        return Err(Error::InvalidParam(format!(
            "segment_len {} must be in 1..={}",
            segment_len,
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParam(format!(
            "overlap {overlap} must be in [0, 1)"
        )));
    }
    let fs = x.sample_rate();
    let window = hann_window(segment_len);
    let win_energy: f64 = window.iter().map(|w| w * w).sum();
    let step = ((segment_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let samples = x.samples();
    let mut acc = vec![0.0f64; segment_len];
    let mut count = 0usize;
    let mut start = 0usize;
    while start + segment_len <= samples.len() {
        let seg: Vec<Complex64> = samples[start..start + segment_len]
            .iter()
            .zip(window.iter())
            .map(|(&s, &w)| s * w)
            .collect();
        let spec = fft_forward(seg);
        for (a, s) in acc.iter_mut().zip(spec.iter()) {
            *a += s.norm_sqr();
        }
        count += 1;
        start += step;
    }
    let norm = 1.0 / (fs * win_energy * count as f64);
    // fftshift to an ascending frequency axis
    let n = segment_len;
    let half = n.div_ceil(2);
    let mut freqs = Vec::with_capacity(n);
    let mut psd = Vec::with_capacity(n);
    for k in half..n {
        freqs.push((k as f64 - n as f64) * fs / n as f64);
        psd.push(acc[k] * norm);
    }
    for (k, a) in acc.iter().enumerate().take(half) {
        freqs.push(k as f64 * fs / n as f64);
        psd.push(a * norm);
    }
    Ok((freqs, psd))
}
