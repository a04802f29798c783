//! Modulation codebook, bit-to-chirp mapping, and synthesis of
//! phase-smoothed IM/PM FMCW baseband chirps and dual-polarization frames.
//!
//! A chirp carries data two ways: its (bandwidth, centre frequency) pair is
//! chosen from the codebook (index modulation), and the chirp is cut into `L`
//! segments whose phases come from a Gray-coded M-PSK alphabet (phase
//! modulation). Phase steps are smoothed with a truncated Gaussian kernel so
//! transitions glide instead of jumping.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{convolve_linear, ConvMode, IqBuffer};
use crate::error::{Error, Result};

/// Antenna polarization of a chirp. The two streams are independent logical
/// channels sharing the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    V,
    H,
}

/// Sweep direction of the frequency ramp. Data chirps always sweep up; the
/// H-pol pilot sweeps down so the two pilots stay distinguishable after
/// cross-polarization leakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDir {
    Up,
    Down,
}

/// Inputs for [`Codebook::build`]. Either derived enumeration from
/// `(band_min, band_max, delta_b, delta_f)` or explicit option lists.
#[derive(Debug, Clone)]
pub struct CodebookConfig {
    pub band_min: f64,
    pub band_max: f64,
    pub delta_b: f64,
    pub delta_f: f64,
    /// Explicit bandwidth options (Hz); overrides the derived enumeration.
    pub explicit_bandwidths: Option<Vec<f64>>,
    /// Explicit centre-frequency options (Hz); overrides the derived grid.
    pub explicit_center_freqs: Option<Vec<f64>>,
    /// M-PSK order; a power of two >= 2, or 1 to disable phase modulation.
    pub psk_order: usize,
    /// Number of phase segments per chirp (L).
    pub segments_per_chirp: usize,
    pub chirp_duration: f64,
    pub sample_rate: f64,
    /// Gaussian smoothing span as a fraction of the segment duration
    /// (`beta`); `None` keeps rectangular phase steps.
    pub phase_smoothing: Option<f64>,
}

/// Enumerations of the bandwidth/centre-frequency options and the PSK
/// alphabet, with their bit mappings. Immutable once built.
#[derive(Debug, Clone)]
pub struct Codebook {
    bandwidth_options: Vec<f64>,
    center_freq_options: Vec<f64>,
    psk_order: usize,
    segments_per_chirp: usize,
    chirp_duration: f64,
    sample_rate: f64,
    phase_smoothing: Option<f64>,
}

impl Codebook {
    /// Validates the configuration and enumerates the codebook.
    ///
    /// Bandwidths run `band_min, band_min+delta_b, ...` up to `band_max`.
    /// Centre frequencies sit on a symmetric `delta_f` grid chosen so the
    /// widest bandwidth still fits inside the Nyquist band; narrower chirps
    /// reuse the same grid. Pair enumeration is bandwidth-major.
    pub fn build(cfg: &CodebookConfig) -> Result<Self> {
        if !(cfg.sample_rate > 0.0) {
            return Err(Error::InvalidParam(format!(
                "sample_rate must be positive, got {}",
                cfg.sample_rate
            )));
        }
        if !(cfg.chirp_duration > 0.0) {
            return Err(Error::InvalidParam(format!(
                "chirp_duration must be positive, got {}",
                cfg.chirp_duration
            )));
        }
        let m = cfg.psk_order;
        if m != 1 && (m < 2 || !m.is_power_of_two()) {
            return Err(Error::InvalidParam(format!(
                "psk_order must be 1 (PM disabled) or a power of two >= 2, got {m}"
            )));
        }
        if cfg.segments_per_chirp < 1 {
            return Err(Error::InvalidParam(
                "segments_per_chirp must be >= 1".into(),
            ));
        }
        let n_s = (cfg.chirp_duration * cfg.sample_rate).round() as usize;
        if cfg.segments_per_chirp > n_s {
            return Err(Error::InvalidParam(format!(
                "segments_per_chirp {} exceeds samples per chirp {}",
                cfg.segments_per_chirp, n_s
            )));
        }
        if let Some(beta) = cfg.phase_smoothing {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "phase smoothing beta must be in (0, 1], got {beta}"
                )));
            }
        }

        let bandwidths = match &cfg.explicit_bandwidths {
            Some(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidParam("empty bandwidth list".into()));
                }
                list.clone()
            }
            None => {
                if !(cfg.delta_b > 0.0) || !(cfg.band_min > 0.0) || cfg.band_max < cfg.band_min {
                    return Err(Error::InvalidParam(format!(
                        "bad bandwidth enumeration: band_min {} band_max {} delta_b {}",
                        cfg.band_min, cfg.band_max, cfg.delta_b
                    )));
                }
                let mut v = Vec::new();
                let mut b = cfg.band_min;
                while b <= cfg.band_max * (1.0 + 1e-12) {
                    v.push(b);
                    b += cfg.delta_b;
                }
                v
            }
        };
        for &b in &bandwidths {
            if !(b > 0.0) {
                return Err(Error::InvalidParam(format!("bandwidth {b} must be > 0")));
            }
        }

        let nyquist = cfg.sample_rate / 2.0;
        let centers = match &cfg.explicit_center_freqs {
            Some(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidParam("empty centre-frequency list".into()));
                }
                list.clone()
            }
            None => {
                if !(cfg.delta_f > 0.0) {
                    return Err(Error::InvalidParam(format!(
                        "delta_f must be positive, got {}",
                        cfg.delta_f
                    )));
                }
                let b_max = bandwidths.iter().cloned().fold(f64::MIN, f64::max);
                let reach = nyquist - b_max / 2.0;
                if reach < 0.0 {
                    return Err(Error::InvalidParam(format!(
                        "widest bandwidth {b_max} Hz does not fit in the Nyquist band ±{nyquist} Hz"
                    )));
                }
                let side = (reach / cfg.delta_f).floor() as i64;
                (-side..=side).map(|k| k as f64 * cfg.delta_f).collect()
            }
        };

        // every (f, b) pair must fit: |f| + b/2 <= fs/2
        for &b in &bandwidths {
            for &f in &centers {
                if f.abs() + b / 2.0 > nyquist * (1.0 + 1e-12) {
                    return Err(Error::InvalidParam(format!(
                        "chirp option (centre {f} Hz, bandwidth {b} Hz) exceeds the Nyquist band ±{nyquist} Hz"
                    )));
                }
            }
        }

        Ok(Self {
            bandwidth_options: bandwidths,
            center_freq_options: centers,
            psk_order: m,
            segments_per_chirp: cfg.segments_per_chirp,
            chirp_duration: cfg.chirp_duration,
            sample_rate: cfg.sample_rate,
            phase_smoothing: cfg.phase_smoothing,
        })
    }

    pub fn bandwidth_options(&self) -> &[f64] {
        &self.bandwidth_options
    }

    pub fn center_freq_options(&self) -> &[f64] {
        &self.center_freq_options
    }

    pub fn psk_order(&self) -> usize {
        self.psk_order
    }

    pub fn segments_per_chirp(&self) -> usize {
        self.segments_per_chirp
    }

    pub fn chirp_duration(&self) -> f64 {
        self.chirp_duration
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn phase_smoothing(&self) -> Option<f64> {
        self.phase_smoothing
    }

    pub fn samples_per_chirp(&self) -> usize {
        (self.chirp_duration * self.sample_rate).round() as usize
    }

    /// Half-width of the phase-smoothing kernel in samples; zero when
    /// smoothing is off or shorter than one sample. Demodulators skip this
    /// many samples at each segment edge, where the phase is mid-glide.
    pub fn smoothing_halfwidth(&self) -> usize {
        match self.phase_smoothing {
            Some(beta) => {
                let t_seg = self.chirp_duration / self.segments_per_chirp as f64;
                (beta * t_seg / 2.0 * self.sample_rate).round() as usize
            }
            None => 0,
        }
    }

    /// Number of (bandwidth, centre) pairs in the full enumeration.
    pub fn pair_count(&self) -> usize {
        self.bandwidth_options.len() * self.center_freq_options.len()
    }

    /// Index-modulation bits per chirp per polarization:
    /// `floor(log2(N_b * N_f))`.
    pub fn im_bits(&self) -> usize {
        let n = self.pair_count();
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }

    /// Number of pairs actually used by the bit mapping: the first
    /// `2^im_bits` entries of the bandwidth-major enumeration. Surplus
    /// combinations beyond the power of two stay unused.
    pub fn used_pairs(&self) -> usize {
        1 << self.im_bits()
    }

    /// Phase-modulation bits per chirp per polarization: `L * log2(M)`.
    pub fn pm_bits(&self) -> usize {
        self.segments_per_chirp * log2_usize(self.psk_order)
    }

    /// Bits carried by one dual-polarization codeword.
    pub fn bits_per_codeword(&self) -> usize {
        2 * self.im_bits() + 2 * self.pm_bits()
    }

    /// `(bandwidth, centre frequency)` for a pair index in the
    /// bandwidth-major enumeration.
    pub fn pair(&self, index: usize) -> (f64, f64) {
        let nf = self.center_freq_options.len();
        (
            self.bandwidth_options[index / nf],
            self.center_freq_options[index % nf],
        )
    }

    /// Pair index from component indices.
    pub fn pair_index(&self, bandwidth_idx: usize, center_idx: usize) -> usize {
        bandwidth_idx * self.center_freq_options.len() + center_idx
    }

    /// Band actually occupied by the codebook: `(low edge, high edge)` over
    /// all pairs. Pilot chirps sweep this whole interval.
    pub fn allocated_band(&self) -> (f64, f64) {
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for &b in &self.bandwidth_options {
            for &f in &self.center_freq_options {
                lo = lo.min(f - b / 2.0);
                hi = hi.max(f + b / 2.0);
            }
        }
        (lo, hi)
    }

    /// Full-band pilot chirp parameters for one polarization. The V pilot
    /// sweeps up, the H pilot down.
    pub fn pilot_params(&self, pol: Polarization) -> ChirpParams {
        let (lo, hi) = self.allocated_band();
        ChirpParams {
            center_freq: (lo + hi) / 2.0,
            bandwidth: hi - lo,
            duration: self.chirp_duration,
            segment_phases: vec![0.0; self.segments_per_chirp],
            polarization: pol,
            sweep: match pol {
                Polarization::V => SweepDir::Up,
                Polarization::H => SweepDir::Down,
            },
        }
    }
}

fn log2_usize(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - 1 - m.leading_zeros()) as usize
    }
}

/// Per-chirp modulation state: the IM pair, the duration, and the segment
/// phases (each exactly `k * 2 pi / M`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpParams {
    pub center_freq: f64,
    pub bandwidth: f64,
    pub duration: f64,
    pub segment_phases: Vec<f64>,
    pub polarization: Polarization,
    pub sweep: SweepDir,
}

impl ChirpParams {
    /// Chirp slope in Hz/s (bandwidth over duration), signed by sweep
    /// direction.
    pub fn slope(&self) -> f64 {
        let s = self.bandwidth / self.duration;
        match self.sweep {
            SweepDir::Up => s,
            SweepDir::Down => -s,
        }
    }

    /// Sweep start frequency: the instantaneous frequency at t = 0.
    pub fn start_freq(&self) -> f64 {
        match self.sweep {
            SweepDir::Up => self.center_freq - self.bandwidth / 2.0,
            SweepDir::Down => self.center_freq + self.bandwidth / 2.0,
        }
    }
}

/// One dual-polarization data chirp: the two parameter sets plus the bits
/// they encode.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub v_params: ChirpParams,
    pub h_params: ChirpParams,
    pub bits: Vec<bool>,
}

/// Binary-reflected Gray code of `k`.
pub fn gray_encode(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Inverse of [`gray_encode`].
pub fn gray_decode(g: usize) -> usize {
    let mut k = g;
    let mut shift = 1;
    while (g >> shift) > 0 {
        k ^= g >> shift;
        shift += 1;
    }
    k
}

fn bits_to_value(bits: &[bool]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn value_to_bits(value: usize, width: usize) -> Vec<bool> {
    (0..width)
        .rev()
        .map(|shift| (value >> shift) & 1 == 1)
        .collect()
}

/// Maps a bit block onto a dual-polarization codeword.
///
/// Layout (MSB first): `N_IM` bits select the V-pol pair, the next `N_IM`
/// the H-pol pair (the binary value indexes the bandwidth-major
/// enumeration), then `L * log2(M)` Gray-coded phase bits for V-pol and the
/// same for H-pol.
pub fn encode(bits: &[bool], cb: &Codebook) -> Result<Codeword> {
    let expected = cb.bits_per_codeword();
    if bits.len() != expected {
        return Err(Error::LengthMismatch(format!(
            "codeword needs {expected} bits, got {}",
            bits.len()
        )));
    }
    let n_im = cb.im_bits();
    let bits_per_sym = log2_usize(cb.psk_order());
    let l = cb.segments_per_chirp();

    let mut cursor = 0usize;
    let mut take = |count: usize| {
        let slice = &bits[cursor..cursor + count];
        cursor += count;
        slice
    };

    let v_pair = bits_to_value(take(n_im));
    let h_pair = bits_to_value(take(n_im));

    let mut phases = |_: Polarization| -> Vec<f64> {
        (0..l)
            .map(|_| {
                if bits_per_sym == 0 {
                    0.0
                } else {
                    let label = bits_to_value(take(bits_per_sym));
                    let symbol = gray_decode(label);
                    2.0 * PI * symbol as f64 / cb.psk_order() as f64
                }
            })
            .collect()
    };
    let v_phases = phases(Polarization::V);
    let h_phases = phases(Polarization::H);

    let make = |pair: usize, seg: Vec<f64>, pol: Polarization| {
        let (b, f) = cb.pair(pair);
        ChirpParams {
            center_freq: f,
            bandwidth: b,
            duration: cb.chirp_duration(),
            segment_phases: seg,
            polarization: pol,
            sweep: SweepDir::Up,
        }
    };

    Ok(Codeword {
        v_params: make(v_pair, v_phases, Polarization::V),
        h_params: make(h_pair, h_phases, Polarization::H),
        bits: bits.to_vec(),
    })
}

/// Reassembles the bit block from receiver decisions (pair indices and PSK
/// symbol indices per polarization). Exact inverse of [`encode`] under
/// correct decisions.
pub fn bits_from_decisions(
    v_pair: usize,
    h_pair: usize,
    v_symbols: &[usize],
    h_symbols: &[usize],
    cb: &Codebook,
) -> Vec<bool> {
    let n_im = cb.im_bits();
    let bits_per_sym = log2_usize(cb.psk_order());
    let mut bits = Vec::with_capacity(cb.bits_per_codeword());
    bits.extend(value_to_bits(v_pair, n_im));
    bits.extend(value_to_bits(h_pair, n_im));
    for &s in v_symbols {
        bits.extend(value_to_bits(gray_encode(s), bits_per_sym));
    }
    for &s in h_symbols {
        bits.extend(value_to_bits(gray_encode(s), bits_per_sym));
    }
    bits
}

/// Start sample of segment `l` when `n_s` samples are divided into
/// `segments` near-equal pieces. Shared by synthesis and demodulation so
/// segment boundaries always agree.
pub fn segment_start(l: usize, segments: usize, n_s: usize) -> usize {
    (l * n_s) / segments
}

/// Piecewise-constant per-sample phase vector from segment phases.
fn rectangular_phases(segment_phases: &[f64], n_s: usize) -> Vec<f64> {
    let l_total = segment_phases.len();
    let mut out = Vec::with_capacity(n_s);
    for l in 0..l_total {
        let start = segment_start(l, l_total, n_s);
        let end = segment_start(l + 1, l_total, n_s);
        out.extend(std::iter::repeat(segment_phases[l]).take(end - start));
    }
    out
}

/// Smooths segment phases into a per-sample trajectory.
///
/// The piecewise-constant phase is mapped to the unit circle, convolved with
/// a truncated Gaussian of span `beta * T_seg` (sigma = span/3, taps
/// normalized to unit sum so constant phases pass through unchanged), and
/// the angle is taken back. The sigma uses the whole truncation window for
/// the glide; a narrower sigma leaves the transition too abrupt to pull the
/// out-of-band skirts down. A kernel too short for the sample rate
/// degenerates to the rectangular trajectory.
pub fn smooth_phases(segment_phases: &[f64], cb: &Codebook, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "beta must be in (0, 1], got {beta}"
        )));
    }
    if segment_phases.is_empty() {
        return Err(Error::EmptyInput("segment phases"));
    }
    let n_s = cb.samples_per_chirp();
    let rect = rectangular_phases(segment_phases, n_s);
    let t_seg = cb.chirp_duration() / segment_phases.len() as f64;
    let ts = 1.0 / cb.sample_rate();
    let half = (beta * t_seg / 2.0 / ts).round() as usize;
    if half == 0 {
        return Ok(rect);
    }
    let sigma = beta * t_seg / 3.0;
    let mut kernel: Vec<f64> = (-(half as i64)..=half as i64)
        .map(|k| {
            let t = k as f64 * ts;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    let on_circle: Vec<Complex64> = rect
        .iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .collect();
    let smoothed = convolve_linear(&kernel, &on_circle, ConvMode::Same)?;
    Ok(smoothed.iter().map(|c| c.arg()).collect())
}

/// Synthesizes one constant-envelope baseband chirp.
///
/// The instantaneous frequency sweeps `f - b/2 -> f + b/2` over the chirp
/// duration (reversed for a down sweep); segment phases ride on top, smoothed
/// per the codebook's `phase_smoothing`. Every output sample has unit
/// magnitude.
pub fn synth_chirp(params: &ChirpParams, cb: &Codebook) -> Result<IqBuffer> {
    if !(params.bandwidth > 0.0) || !(params.duration > 0.0) {
        return Err(Error::InvalidParam(
            "chirp bandwidth and duration must be positive".into(),
        ));
    }
    let m = cb.psk_order();
    for &p in &params.segment_phases {
        let steps = p / (2.0 * PI / m.max(2) as f64);
        if m > 1 && (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!(
                "segment phase {p} is not a multiple of 2*pi/{m}"
            )));
        }
    }
    let n_s = cb.samples_per_chirp();
    let fs = cb.sample_rate();
    let f0 = params.start_freq();
    let slope = params.slope();
    let traj = match cb.phase_smoothing() {
        Some(beta) => smooth_phases(&params.segment_phases, cb, beta)?,
        None => rectangular_phases(&params.segment_phases, n_s),
    };
    let samples: Vec<Complex64> = (0..n_s)
        .map(|n| {
            let t = n as f64 / fs;
            let theta = 2.0 * PI * (f0 * t + 0.5 * slope * t * t);
            Complex64::from_polar(1.0, theta + traj[n])
        })
        .collect();
    IqBuffer::new(samples, fs)
}

/// One transmission frame per polarization: a full-band pilot chirp followed
/// by data chirps.
#[derive(Debug, Clone)]
pub struct Frame {
    pub pilot_v: IqBuffer,
    pub pilot_h: IqBuffer,
    pub codewords: Vec<Codeword>,
    /// Concatenated pilot + data stream, V polarization.
    pub tx_v: IqBuffer,
    /// Concatenated pilot + data stream, H polarization.
    pub tx_h: IqBuffer,
    pub chirp_count: usize,
}

/// Builds a frame of `chirp_count` chirps: chirp 0 in each polarization is
/// the unmodulated full-band pilot, chirps `1..chirp_count` carry
/// consecutive codewords from `bit_stream`. Both streams are sample-aligned.
pub fn build_frame(bit_stream: &[bool], cb: &Codebook, chirp_count: usize) -> Result<Frame> {
    if chirp_count < 2 {
        return Err(Error::InvalidParam(format!(
            "a frame needs at least 2 chirps (pilot + data), got {chirp_count}"
        )));
    }
    let bpc = cb.bits_per_codeword();
    let needed = (chirp_count - 1) * bpc;
    if bit_stream.len() < needed {
        return Err(Error::LengthMismatch(format!(
            "frame needs {needed} bits ({} codewords of {bpc}), got {}",
            chirp_count - 1,
            bit_stream.len()
        )));
    }
    let pilot_v = synth_chirp(&cb.pilot_params(Polarization::V), cb)?;
    let pilot_h = synth_chirp(&cb.pilot_params(Polarization::H), cb)?;
    let mut tx_v = pilot_v.samples().to_vec();
    let mut tx_h = pilot_h.samples().to_vec();
    let mut codewords = Vec::with_capacity(chirp_count - 1);
    for i in 0..chirp_count - 1 {
        let cw = encode(&bit_stream[i * bpc..(i + 1) * bpc], cb)?;
        tx_v.extend_from_slice(synth_chirp(&cw.v_params, cb)?.samples());
        tx_h.extend_from_slice(synth_chirp(&cw.h_params, cb)?.samples());
        codewords.push(cw);
    }
    Ok(Frame {
        pilot_v,
        pilot_h,
        codewords,
        tx_v: IqBuffer::new(tx_v, cb.sample_rate())?,
        tx_h: IqBuffer::new(tx_h, cb.sample_rate())?,
        chirp_count,
    })
}
