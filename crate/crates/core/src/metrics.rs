//! Sensing and spectral performance metrics: ambiguity function, integrated
//! sidelobe level, range CRLB, fractional out-of-band power, and
//! channel-estimation NMSE.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{dtft_single, fft_forward, fft_inverse, welch_psd, IqBuffer};
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Sentinel for ratios whose numerator underflows (log of zero).
pub const DB_FLOOR: f64 = -300.0;

/// Sampled |ambiguity| surface over (delay, Doppler).
#[derive(Debug, Clone)]
pub struct AmbiguitySurface {
    /// `values[delay_idx][doppler_idx]`.
    pub values: Vec<Vec<f64>>,
    pub delay_axis: Vec<f64>,
    pub doppler_axis: Vec<f64>,
    pub normalized: bool,
}

/// Discrete ambiguity function
/// `AF(tau, w) = |sum_n x(n) x*(n - lag) e^{-j 2 pi w n T_s}| * T_s`,
/// normalized so `AF(0, 0) = 1`. Delays snap to whole samples and must stay
/// within the buffer duration.
pub fn ambiguity(x: &IqBuffer, delay_axis: &[f64], doppler_axis: &[f64]) -> Result<AmbiguitySurface> {
    if delay_axis.is_empty() || doppler_axis.is_empty() {
        return Err(Error::EmptyInput("ambiguity axes"));
    }
    let fs = x.sample_rate();
    let ts = x.sample_interval();
    let n = x.len();
    for &tau in delay_axis {
        if tau.abs() > x.duration() {
            return Err(Error::InvalidParam(format!(
                "delay {tau} s outside +-{} s",
                x.duration()
            )));
        }
    }
    let zero_lag: f64 = x.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() * ts;
    let norm = if zero_lag > 0.0 { zero_lag } else { 1.0 };
    let samples = x.samples();
    let mut values = Vec::with_capacity(delay_axis.len());
    for &tau in delay_axis {
        let lag = (tau * fs).round() as i64;
        // product p(n) = x(n) x*(n - lag) over the overlap
        let (lo, hi) = if lag >= 0 {
            (lag as usize, n)
        } else {
            (0usize, (n as i64 + lag) as usize)
        };
        let prod: Vec<Complex64> = (lo..hi)
            .map(|i| samples[i] * samples[(i as i64 - lag) as usize].conj())
            .collect();
        let row: Vec<f64> = doppler_axis
            .iter()
            .map(|&w| {
                if prod.is_empty() {
                    0.0
                } else {
                    dtft_single(&prod, w * ts).norm() * ts / norm
                }
            })
            .collect();
        values.push(row);
    }
    Ok(AmbiguitySurface {
        values,
        delay_axis: delay_axis.to_vec(),
        doppler_axis: doppler_axis.to_vec(),
        normalized: true,
    })
}

/// Zero-Doppler ambiguity cut over all integer lags, computed through the
/// FFT autocorrelation. Returns `(delays, |AF|)` normalized to 1 at lag 0.
pub fn zero_doppler_cut(x: &IqBuffer) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let ts = x.sample_interval();
    let mut padded = x.samples().to_vec();
    padded.resize(2 * n, Complex64::new(0.0, 0.0));
    let spec = fft_forward(padded);
    let power: Vec<Complex64> = spec.iter().map(|s| s * s.conj()).collect();
    let acorr = fft_inverse(power);
    let zero = acorr[0].norm().max(f64::MIN_POSITIVE);
    let mut delays = Vec::with_capacity(2 * n - 1);
    let mut af = Vec::with_capacity(2 * n - 1);
    for k in 1..n {
        delays.push(-(k as f64) * ts);
        af.push(acorr[2 * n - k].norm() / zero);
    }
    delays.reverse();
    af.reverse();
    for (k, a) in acorr.iter().enumerate().take(n) {
        delays.push(k as f64 * ts);
        af.push(a.norm() / zero);
    }
    (delays, af)
}

/// Integrated sidelobe level in dB over the zero-Doppler cut:
/// sidelobe integrals over `[z0, z1]` and `[z2, z3]` against the mainlobe
/// integral over `[z1, z2]`, trapezoidal rule.
pub fn isl_from_cut(delays: &[f64], af: &[f64], z0: f64, z1: f64, z2: f64, z3: f64) -> Result<f64> {
    if !(z0 < z1 && z1 < z2 && z2 < z3) {
        return Err(Error::InvalidParam(format!(
            "ISL bounds must satisfy z0 < z1 < z2 < z3, got {z0}, {z1}, {z2}, {z3}"
        )));
    }
    let integrate = |lo: f64, hi: f64| -> f64 {
        let mut acc = 0.0;
        for w in delays.windows(2).zip(af.windows(2)) {
            let (d, a) = w;
            let (d0, d1) = (d[0], d[1]);
            if d1 <= lo || d0 >= hi {
                continue;
            }
            let c0 = d0.max(lo);
            let c1 = d1.min(hi);
            // linear interpolation of the trapezoid onto the clipped span
            let f0 = a[0] + (a[1] - a[0]) * (c0 - d0) / (d1 - d0);
            let f1 = a[0] + (a[1] - a[0]) * (c1 - d0) / (d1 - d0);
            acc += 0.5 * (f0 + f1) * (c1 - c0);
        }
        acc
    };
    let main = integrate(z1, z2);
    let side = integrate(z0, z1) + integrate(z2, z3);
    if main <= 0.0 {
        return Err(Error::InvalidParam("empty mainlobe integral".into()));
    }
    if side <= main * 1e-30 {
        return Ok(DB_FLOOR);
    }
    Ok(10.0 * (side / main).log10())
}

/// ISL of an [`AmbiguitySurface`] using its Doppler row nearest zero.
pub fn isl(surface: &AmbiguitySurface, z1: f64, z2: f64, z0: f64, z3: f64) -> Result<f64> {
    let row = surface
        .doppler_axis
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .ok_or(Error::EmptyInput("doppler axis"))?;
    let cut: Vec<f64> = surface.values.iter().map(|r| r[row]).collect();
    isl_from_cut(&surface.delay_axis, &cut, z0, z1, z2, z3)
}

/// Mainlobe bounds on a zero-Doppler cut: the first discrete nulls (sign
/// change of the forward difference) on either side of the peak.
pub fn default_mainlobe_bounds(delays: &[f64], af: &[f64]) -> (f64, f64) {
    let peak = af
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut hi = delays[delays.len() - 1];
    for i in peak..af.len() - 1 {
        if af[i + 1] > af[i] {
            hi = delays[i];
            break;
        }
    }
    let mut lo = delays[0];
    for i in (1..=peak).rev() {
        if af[i - 1] > af[i] {
            lo = delays[i];
            break;
        }
    }
    (lo, hi)
}

/// Inputs for the range CRLB.
#[derive(Debug, Clone)]
pub struct CrlbConfig {
    /// Linear SNR per sample.
    pub snr_linear: f64,
    pub samples_per_chirp: usize,
    pub bandwidths: Vec<f64>,
    pub speed_of_light: f64,
}

impl CrlbConfig {
    pub fn new(snr_linear: f64, samples_per_chirp: usize, bandwidths: Vec<f64>) -> Self {
        Self {
            snr_linear,
            samples_per_chirp,
            bandwidths,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

/// Range CRLB outputs: per-bandwidth variance bounds (m^2), their mean, and
/// the root of the mean (m).
#[derive(Debug, Clone)]
pub struct CrlbReport {
    pub per_bandwidth: Vec<f64>,
    pub averaged: f64,
    pub rcrlb: f64,
}

/// Exact single-bandwidth range CRLB
/// `3 c^2 N_s / (8 pi^2 psi (N_s^2 - 1) b^2)` in m^2.
pub fn crlb_range_single(snr_linear: f64, n_s: usize, bandwidth: f64, c: f64) -> f64 {
    let n = n_s as f64;
    3.0 * c * c * n / (8.0 * PI * PI * snr_linear * (n * n - 1.0) * bandwidth * bandwidth)
}

/// Large-N approximation `3 c^2 / (8 pi^2 psi N_s b^2)`.
pub fn crlb_range_single_approx(snr_linear: f64, n_s: usize, bandwidth: f64, c: f64) -> f64 {
    let n = n_s as f64;
    3.0 * c * c / (8.0 * PI * PI * snr_linear * n * bandwidth * bandwidth)
}

/// Per-bandwidth exact CRLBs, their arithmetic mean over the bandwidth
/// options, and the RCRLB (square root of the mean).
pub fn crlb_range(cfg: &CrlbConfig) -> Result<CrlbReport> {
    if !(cfg.snr_linear > 0.0) {
        return Err(Error::InvalidParam("snr_linear must be > 0".into()));
    }
    if cfg.samples_per_chirp < 2 {
        return Err(Error::InvalidParam("samples_per_chirp must be > 1".into()));
    }
    if cfg.bandwidths.is_empty() || cfg.bandwidths.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidParam("bandwidths must be positive".into()));
    }
    let per_bandwidth: Vec<f64> = cfg
        .bandwidths
        .iter()
        .map(|&b| crlb_range_single(cfg.snr_linear, cfg.samples_per_chirp, b, cfg.speed_of_light))
        .collect();
    let averaged = per_bandwidth.iter().sum::<f64>() / per_bandwidth.len() as f64;
    Ok(CrlbReport {
        per_bandwidth,
        averaged,
        rcrlb: averaged.sqrt(),
    })
}

/// Fractional out-of-band power in dB: energy at `|f - center| > bandwidth/2`
/// over total energy, from a Welch PSD taken after shifting the chirp to
/// baseband.
pub fn oob_fraction(x: &IqBuffer, center: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidParam("bandwidth must be positive".into()));
    }
    let nyquist = x.sample_rate() / 2.0;
    if center.abs() + bandwidth / 2.0 > nyquist * (1.0 + 1e-12) {
        return Err(Error::OutOfBand {
            freq_hz: center.abs() + bandwidth / 2.0,
            nyquist_hz: nyquist,
        });
    }
    let fs = x.sample_rate();
    let shifted = if center != 0.0 {
        let step = Complex64::from_polar(1.0, -2.0 * PI * center / fs);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(x.len());
        for (n, &s) in x.samples().iter().enumerate() {
            out.push(s * rot);
            rot *= step;
            if n % 4096 == 4095 {
                rot = Complex64::from_polar(1.0, -2.0 * PI * center * (n + 1) as f64 / fs);
            }
        }
        IqBuffer::new(out, fs)?
    } else {
        x.clone()
    };
    let seg = shifted.len().min(512);
    let (freqs, psd) = welch_psd(&shifted, seg, 0.5)?;
    let mut total = 0.0;
    let mut outside = 0.0;
    for (&f, &p) in freqs.iter().zip(psd.iter()) {
        total += p;
        if f.abs() > bandwidth / 2.0 {
            outside += p;
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidParam("zero total power".into()));
    }
    if outside <= total * 1e-30 {
        return Ok(DB_FLOOR);
    }
    Ok(10.0 * (outside / total).log10())
}

/// Channel-estimation NMSE in dB:
/// `10 log10( sum|est - truth|^2 / sum|truth|^2 )`, restricted to masked
/// bins when a mask is given.
pub fn nmse_db(estimate: &[Complex64], truth: &[Complex64], mask: Option<&[bool]>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "estimate has {} bins, truth {}",
            estimate.len(),
            truth.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, (e, t)) in estimate.iter().zip(truth.iter()).enumerate() {
        if let Some(m) = mask {
            if !m[k] {
                continue;
            }
        }
        num += (e - t).norm_sqr();
        den += t.norm_sqr();
    }
    if den <= 0.0 {
        return Err(Error::InvalidParam("zero-energy truth channel".into()));
    }
    if num <= den * 1e-30 {
        return Ok(DB_FLOOR);
    }
    Ok(10.0 * (num / den).log10())
}
