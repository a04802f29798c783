//! Communication receiver: pilot synchronization, frequency-domain LMMSE
//! channel estimation, MMSE equalization, index-modulation and
//! phase-modulation demodulation, and link statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::{fft_forward, fft_inverse, xcorr_all, IqBuffer, Spectrum};
use crate::error::{Error, Result};
use crate::waveform::{
    bits_from_decisions, segment_start, synth_chirp, ChirpParams, Codebook, Codeword,
    Polarization, SweepDir,
};

/// Window of the smoothing low-pass applied to magnitude spectra before the
/// IM correlation metric (smallest odd width that visibly smooths at the B1
/// transform sizes).
const IM_SMOOTHING_BINS: usize = 5;

/// Occupied-bin threshold relative to the peak pilot magnitude. The pilot's
/// Fresnel roll-off bins carry estimates shrunk by the regularizer, so the
/// mask keeps only bins with at least half the peak magnitude.
const OCCUPIED_REL_THRESHOLD: f64 = 0.5;

/// Sync acceptance: the correlation peak must exceed this multiple of the
/// median correlation magnitude.
const SYNC_PEAK_OVER_MEDIAN: f64 = 3.0;

/// Random phase codes averaged into each IM hypothesis template. Phase
/// modulation spreads the chirp spectrum, so the templates must describe
/// the phase-coded signal class, not the bare sweep.
const IM_TEMPLATE_AVG: usize = 8;

/// Envelope-ranked candidates re-scored by segmentwise coherence before the
/// final index decision.
const IM_RESCORE_CANDIDATES: usize = 16;

/// Per-bin channel estimate for both polarizations plus the genie noise and
/// interference variances (in the same scale as the pilot bin powers).
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_v: Spectrum,
    pub h_h: Spectrum,
    pub noise_var: f64,
    pub interference_var: f64,
    /// Bins where the pilot has significant energy; estimation and NMSE are
    /// meaningful only there.
    pub occupied: Vec<bool>,
    /// Mean pilot bin power over occupied bins, used to normalize the
    /// equalizer regularizer.
    pub mean_pilot_power: f64,
}

/// Demodulation outcome for one dual-polarization data chirp.
#[derive(Debug, Clone)]
pub struct DemodResult {
    /// (bandwidth index, centre-frequency index) per polarization.
    pub im_indices_v: (usize, usize),
    pub im_indices_h: (usize, usize),
    pub pm_symbols_v: Vec<usize>,
    pub pm_symbols_h: Vec<usize>,
    pub bits: Vec<bool>,
    /// Filled by [`score_against`](DemodResult::score_against).
    pub im_correct: Option<(bool, bool)>,
    pub pm_symbol_errors: Option<(usize, usize)>,
}

impl DemodResult {
    /// Marks the IM/PM diagnostics against the transmitted codeword.
    pub fn score_against(&mut self, truth: &Codeword, cb: &Codebook) {
        let m = cb.psk_order().max(2) as f64;
        let pair_of = |p: &ChirpParams| -> (usize, usize) {
            let bi = cb
                .bandwidth_options()
                .iter()
                .position(|&b| (b - p.bandwidth).abs() < 1.0)
                .unwrap_or(usize::MAX);
            let fi = cb
                .center_freq_options()
                .iter()
                .position(|&f| (f - p.center_freq).abs() < 1.0)
                .unwrap_or(usize::MAX);
            (bi, fi)
        };
        let syms = |p: &ChirpParams| -> Vec<usize> {
            p.segment_phases
                .iter()
                .map(|&ph| (ph * m / (2.0 * PI)).round() as usize % cb.psk_order().max(1))
                .collect()
        };
        let tv = pair_of(&truth.v_params);
        let th = pair_of(&truth.h_params);
        self.im_correct = Some((self.im_indices_v == tv, self.im_indices_h == th));
        let count_err = |got: &[usize], want: &[usize]| {
            got.iter().zip(want.iter()).filter(|(g, w)| g != w).count()
        };
        self.pm_symbol_errors = Some((
            count_err(&self.pm_symbols_v, &syms(&truth.v_params)),
            count_err(&self.pm_symbols_h, &syms(&truth.h_params)),
        ));
    }
}

/// Immutable receiver state: the codebook, reference pilots, and the
/// precomputed IM hypothesis templates.
#[derive(Debug, Clone)]
pub struct Receiver {
    codebook: Codebook,
    pilot_v: IqBuffer,
    pilot_h: IqBuffer,
    /// Smoothed, L2-normalized magnitude spectra of every used (b, f)
    /// hypothesis, bandwidth-major.
    templates: Vec<Vec<f64>>,
    /// Impulse-response window (samples) retained when denoising the channel
    /// estimate; covers the configured delay spread.
    cir_window: usize,
    /// Mean occupied-bin power of the pilot spectrum.
    pilot_mean_power: f64,
}

impl Receiver {
    /// Precomputes pilot references and hypothesis spectra. `cir_window_s` is
    /// the delay-spread window retained in the channel estimate (seconds).
    pub fn new(codebook: Codebook, cir_window_s: f64) -> Result<Self> {
        let pilot_v = synth_chirp(&codebook.pilot_params(Polarization::V), &codebook)?;
        let pilot_h = synth_chirp(&codebook.pilot_params(Polarization::H), &codebook)?;
        let pilot_v_spec = fft_forward(pilot_v.samples().to_vec());
        let n_s = codebook.samples_per_chirp();
        let m = codebook.psk_order();
        let l = codebook.segments_per_chirp();
        let mut templates = Vec::with_capacity(codebook.used_pairs());
        for idx in 0..codebook.used_pairs() {
            let (b, f) = codebook.pair(idx);
            let reps = if m > 1 { IM_TEMPLATE_AVG } else { 1 };
            let mut acc = vec![0.0f64; n_s];
            for rep in 0..reps {
                let phases: Vec<f64> = if m > 1 {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        0x5EED_7E8Bu64 ^ ((idx as u64) << 8) ^ rep as u64,
                    );
                    (0..l)
                        .map(|_| 2.0 * PI * rng.random_range(0..m) as f64 / m as f64)
                        .collect()
                } else {
                    vec![0.0; l]
                };
                let params = ChirpParams {
                    center_freq: f,
                    bandwidth: b,
                    duration: codebook.chirp_duration(),
                    segment_phases: phases,
                    polarization: Polarization::V,
                    sweep: SweepDir::Up,
                };
                let spec = fft_forward(synth_chirp(&params, &codebook)?.samples().to_vec());
                let mags: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
                for (a, v) in acc.iter_mut().zip(smooth_circular(&mags, IM_SMOOTHING_BINS)) {
                    *a += v;
                }
            }
            let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
            templates.push(acc.iter().map(|v| v / norm).collect());
        }
        let cir_window = (cir_window_s * codebook.sample_rate()).round() as usize;
        let peak = pilot_v_spec.iter().map(|u| u.norm()).fold(0.0, f64::max);
        let occ: Vec<f64> = pilot_v_spec
            .iter()
            .filter(|u| u.norm() >= OCCUPIED_REL_THRESHOLD * peak)
            .map(|u| u.norm_sqr())
            .collect();
        let pilot_mean_power = occ.iter().sum::<f64>() / occ.len().max(1) as f64;
        Ok(Self {
            codebook,
            pilot_v,
            pilot_h,
            templates,
            cir_window,
            pilot_mean_power,
        })
    }

    /// Genie noise and interference variances in the FFT-bin scale used by
    /// the estimator and equalizer: a time-domain noise variance maps to
    /// `N_s` times itself per bin, and the cross-polarization interference
    /// power is the leakage times the mean occupied pilot bin power.
    pub fn genie_bin_vars(&self, noise_var_time: f64, leakage_db: Option<f64>) -> (f64, f64) {
        let n = self.codebook.samples_per_chirp() as f64;
        let noise_bin = noise_var_time * n;
        let interf_bin = leakage_db
            .map(|db| 10f64.powf(db / 10.0) * self.pilot_mean_power)
            .unwrap_or(0.0);
        (noise_bin, interf_bin)
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn pilot_reference(&self, pol: Polarization) -> &IqBuffer {
        match pol {
            Polarization::V => &self.pilot_v,
            Polarization::H => &self.pilot_h,
        }
    }

    /// Locates the frame start in `rx` by cross-correlating against the
    /// pilot reference. Fails when the peak does not stand out of the
    /// correlation floor.
    pub fn synchronize(&self, rx: &IqBuffer, pol: Polarization) -> Result<usize> {
        synchronize(rx, self.pilot_reference(pol))
    }

    /// LMMSE channel estimation from the received pilot pair.
    ///
    /// Applies the element-wise estimator per bin, then denoises by keeping
    /// only the impulse-response taps within the delay-spread window (plus a
    /// small wrap-around guard for sync jitter).
    pub fn estimate_channel(
        &self,
        pilot_rx_v: &IqBuffer,
        pilot_rx_h: &IqBuffer,
        noise_var: f64,
        interference_var: f64,
    ) -> Result<ChannelEstimate> {
        estimate_channel(
            pilot_rx_v,
            pilot_rx_h,
            &self.pilot_v,
            &self.pilot_h,
            noise_var,
            interference_var,
            Some(self.cir_window),
        )
    }

    /// MMSE equalization of one received data chirp.
    pub fn equalize(
        &self,
        data_chirp_rx: &IqBuffer,
        est: &ChannelEstimate,
        pol: Polarization,
    ) -> Result<IqBuffer> {
        equalize(data_chirp_rx, est, pol)
    }

    /// ML index-modulation demodulation over the used codebook hypotheses.
    ///
    /// Two stages. First the received spectrum is magnitude-normalized,
    /// smoothed with a moving-average low-pass, and correlated against
    /// every precomputed hypothesis template; this ranks the candidates and
    /// yields the returned metric vector. The strongest candidates are then
    /// re-scored by the per-segment coherence of the conjugate-reference
    /// mix (the same integral the phase demodulator uses, and for one
    /// segment exactly the complex spectral correlation), which is
    /// independent of the unknown phase code. Returns `(bandwidth index,
    /// centre index, metric vector)`; ties break toward the lowest
    /// enumeration index.
    pub fn demod_im(&self, equalized_chirp: &IqBuffer) -> (usize, usize, Vec<f64>) {
        let spec = fft_forward(equalized_chirp.samples().to_vec());
        let mags: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
        let peak = mags.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let normed: Vec<f64> = mags.iter().map(|v| v / peak).collect();
        let w = smooth_circular(&normed, IM_SMOOTHING_BINS);
        let metrics: Vec<f64> = self
            .templates
            .iter()
            .map(|tpl| {
                let dot: f64 = w.iter().zip(tpl.iter()).map(|(a, b)| a * b).sum();
                dot * dot
            })
            .collect();
        let mut order: Vec<usize> = (0..metrics.len()).collect();
        order.sort_by(|&a, &b| {
            metrics[b]
                .partial_cmp(&metrics[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut candidates: Vec<usize> =
            order.iter().copied().take(IM_RESCORE_CANDIDATES).collect();
        candidates.sort_unstable();
        let mut best = candidates[0];
        let mut best_score = f64::MIN;
        for &idx in &candidates {
            let (b, f) = self.codebook.pair(idx);
            let sums = segment_reference_sums(equalized_chirp, &self.codebook, b, f);
            let score: f64 = sums.iter().map(|s| s.norm_sqr()).sum();
            if score > best_score {
                best_score = score;
                best = idx;
            }
        }
        let nf = self.codebook.center_freq_options().len();
        (best / nf, best % nf, metrics)
    }

    /// Phase-code demodulation given the estimated IM pair: one conjugate
    /// reference mix, a complex sum per segment, and nearest-phase
    /// quantization. Returns the symbol indices and per-segment |sum|
    /// confidences.
    pub fn demod_pm(
        &self,
        equalized_chirp: &IqBuffer,
        bandwidth_idx: usize,
        center_idx: usize,
        ) -> (Vec<usize>, Vec<f64>) {
        let cb = &self.codebook;
        let m = cb.psk_order();
        let l = cb.segments_per_chirp();
        if m <= 1 {
            return (vec![0; l], vec![0.0; l]);
        }
        let sums = segment_reference_sums(
            equalized_chirp,
            cb,
            cb.bandwidth_options()[bandwidth_idx],
            cb.center_freq_options()[center_idx],
        );
        let mut symbols = Vec::with_capacity(l);
        let mut metrics = Vec::with_capacity(l);
        for s in sums {
            let step = 2.0 * PI / m as f64;
            let k = (s.arg() / step).round() as i64;
            symbols.push(k.rem_euclid(m as i64) as usize);
            metrics.push(s.norm());
        }
        (symbols, metrics)
    }

    /// Dual implementation of [`demod_pm`]: per segment, correlate against M
    /// phase-rotated reference chirps built from the estimated pair and pick
    /// the best match. Kept as an independent route; both must agree.
    pub fn demod_pm_reference_bank(
        &self,
        equalized_chirp: &IqBuffer,
        bandwidth_idx: usize,
        center_idx: usize,
    ) -> Vec<usize> {
        let cb = &self.codebook;
        let m = cb.psk_order();
        let l = cb.segments_per_chirp();
        if m <= 1 {
            return vec![0; l];
        }
        let b = cb.bandwidth_options()[bandwidth_idx];
        let f = cb.center_freq_options()[center_idx];
        let fs = cb.sample_rate();
        let n_s = cb.samples_per_chirp();
        let f0 = f - b / 2.0;
        let slope = b / cb.chirp_duration();
        // M reference chirps, constant phase 2*pi*k/M on the estimated sweep
        let refs: Vec<Vec<Complex64>> = (0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                (0..n_s)
                    .map(|n| {
                        let t = n as f64 / fs;
                        Complex64::from_polar(1.0, 2.0 * PI * (f0 * t + 0.5 * slope * t * t) + phi)
                    })
                    .collect()
            })
            .collect();
        let x = equalized_chirp.samples();
        (0..l)
            .map(|seg| {
                let (lo, hi) = segment_window(cb, seg, n_s.min(x.len()));
                let mut best = 0usize;
                let mut best_metric = f64::MIN;
                for (k, r) in refs.iter().enumerate() {
                    let corr: Complex64 = x[lo..hi]
                        .iter()
                        .zip(&r[lo..hi])
                        .map(|(a, b)| a * b.conj())
                        .sum();
                    if corr.re > best_metric {
                        best_metric = corr.re;
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// Demodulates every data chirp of a synchronized, channel-estimated
    /// frame and concatenates the recovered bits (IM bits before PM bits per
    /// chirp, V polarization before H).
    pub fn decode_frame(
        &self,
        rx_v: &IqBuffer,
        rx_h: &IqBuffer,
        est: &ChannelEstimate,
        chirp_count: usize,
    ) -> Result<(Vec<bool>, Vec<DemodResult>)> {
        let cb = &self.codebook;
        let n_s = cb.samples_per_chirp();
        if rx_v.len() < chirp_count * n_s || rx_h.len() < chirp_count * n_s {
            return Err(Error::LengthMismatch(format!(
                "frame of {chirp_count} chirps needs {} samples, got {}/{}",
                chirp_count * n_s,
                rx_v.len(),
                rx_h.len()
            )));
        }
        let fs = cb.sample_rate();
        let mut bits = Vec::new();
        let mut results = Vec::with_capacity(chirp_count - 1);
        for i in 1..chirp_count {
            let lo = i * n_s;
            let slice_v = IqBuffer::new(rx_v.samples()[lo..lo + n_s].to_vec(), fs)?;
            let slice_h = IqBuffer::new(rx_h.samples()[lo..lo + n_s].to_vec(), fs)?;
            let eq_v = self.equalize(&slice_v, est, Polarization::V)?;
            let eq_h = self.equalize(&slice_h, est, Polarization::H)?;
            let (bv, fv, _) = self.demod_im(&eq_v);
            let (bh, fh, _) = self.demod_im(&eq_h);
            let (sym_v, _) = self.demod_pm(&eq_v, bv, fv);
            let (sym_h, _) = self.demod_pm(&eq_h, bh, fh);
            let v_pair = cb.pair_index(bv, fv);
            let h_pair = cb.pair_index(bh, fh);
            let chirp_bits = bits_from_decisions(v_pair, h_pair, &sym_v, &sym_h, cb);
            bits.extend_from_slice(&chirp_bits);
            results.push(DemodResult {
                im_indices_v: (bv, fv),
                im_indices_h: (bh, fh),
                pm_symbols_v: sym_v,
                pm_symbols_h: sym_h,
                bits: chirp_bits,
                im_correct: None,
                pm_symbol_errors: None,
            });
        }
        Ok((bits, results))
    }
}

/// Circular moving average of odd width `w`.
fn smooth_circular(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || w <= 1 {
        return x.to_vec();
    }
    let half = w / 2;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..w {
                let idx = (i + n + k - half) % n;
                acc += x[idx];
            }
            acc / w as f64
        })
        .collect()
}

/// Frame-start search: peak of the pilot cross-correlation, accepted only
/// when it stands clear of the correlation floor.
///
/// The floor test keeps the three-medians rule but also accounts for the
/// order statistics of the lag count: over N lags of noise-only
/// correlation the expected peak is already `sqrt(log2 N)` medians, so the
/// acceptance threshold is `max(3, 1.25 sqrt(log2 N))` medians.
pub fn synchronize(rx: &IqBuffer, pilot_reference: &IqBuffer) -> Result<usize> {
    let corr = xcorr_all(pilot_reference, rx)?;
    let mut mags: Vec<f64> = corr.iter().map(|c| c.norm()).collect();
    let mut best = 0usize;
    for (lag, &m) in mags.iter().enumerate().skip(1) {
        if m > mags[best] {
            best = lag;
        }
    }
    let peak = mags[best];
    let mid = mags.len() / 2;
    let n_lags = mags.len() as f64;
    let (_, median, _) = mags.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    let noise_floor = 1.25 * n_lags.log2().max(1.0).sqrt();
    let threshold = SYNC_PEAK_OVER_MEDIAN.max(noise_floor);
    if peak < threshold * *median {
        return Err(Error::SyncNotFound);
    }
    Ok(best)
}

/// Element-wise frequency-domain LMMSE channel estimator.
///
/// `h_e = (y ⊙ u*) ⊘ (u ⊙ u* + (σ_n² + σ_i²))` per bin for each
/// polarization, followed (when `cir_window` is set) by truncation of the
/// estimate's impulse response to the delay-spread window, which suppresses
/// the spread-out cross-polarization residue while keeping the physical
/// taps.
#[allow(clippy::too_many_arguments)]
pub fn estimate_channel(
    pilot_rx_v: &IqBuffer,
    pilot_rx_h: &IqBuffer,
    pilot_tx_v: &IqBuffer,
    pilot_tx_h: &IqBuffer,
    noise_var: f64,
    interference_var: f64,
    cir_window: Option<usize>,
) -> Result<ChannelEstimate> {
    let n = pilot_tx_v.len();
    if pilot_rx_v.len() != n || pilot_rx_h.len() != n || pilot_tx_h.len() != n {
        return Err(Error::LengthMismatch(
            "pilot buffers must share one length".into(),
        ));
    }
    let reg = noise_var + interference_var;
    if reg < 0.0 {
        return Err(Error::InvalidParam("negative regularizer".into()));
    }
    let u_v = fft_forward(pilot_tx_v.samples().to_vec());
    let u_h = fft_forward(pilot_tx_h.samples().to_vec());
    if reg == 0.0 {
        for u in u_v.iter().chain(u_h.iter()) {
            if u.norm_sqr() == 0.0 {
                return Err(Error::InvalidParam(
                    "zero regularizer with a zero pilot bin".into(),
                ));
            }
        }
    }
    let y_v = fft_forward(pilot_rx_v.samples().to_vec());
    let y_h = fft_forward(pilot_rx_h.samples().to_vec());

    let lmmse = |y: &[Complex64], u: &[Complex64]| -> Vec<Complex64> {
        y.iter()
            .zip(u.iter())
            .map(|(yk, uk)| yk * uk.conj() / (uk.norm_sqr() + reg))
            .collect()
    };
    let mut h_v = lmmse(&y_v, &u_v);
    let mut h_h = lmmse(&y_h, &u_h);

    if let Some(w) = cir_window {
        if w > 0 && w < n / 2 {
            // raised-cosine taper: hard truncation would clip the sinc
            // skirts the band-limited estimate puts on every tap
            let taper = (w / 4).max(8);
            let guard = (w / 2).max(n / 64);
            let ramp = |d: usize, full: usize| -> f64 {
                if d < full {
                    1.0
                } else if d < full + taper {
                    0.5 + 0.5 * (PI * (d - full) as f64 / taper as f64).cos()
                } else {
                    0.0
                }
            };
            // causal window [0, w) and wrap-around guard (n - guard, n),
            // both easing out over `taper` taps
            let weight = |i: usize| -> f64 { ramp(i, w).max(ramp(n - i, guard)) };
            for h in [&mut h_v, &mut h_h] {
                let mut taps = fft_inverse(h.clone());
                for (i, tap) in taps.iter_mut().enumerate() {
                    *tap *= weight(i);
                }
                *h = fft_forward(taps);
            }
        }
    }

    let peak = u_v.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let occupied: Vec<bool> = u_v
        .iter()
        .map(|u| u.norm() >= OCCUPIED_REL_THRESHOLD * peak)
        .collect();
    let occ_count = occupied.iter().filter(|&&o| o).count().max(1);
    let mean_pilot_power = u_v
        .iter()
        .zip(occupied.iter())
        .filter(|(_, &o)| o)
        .map(|(u, _)| u.norm_sqr())
        .sum::<f64>()
        / occ_count as f64;

    let spacing = pilot_tx_v.sample_rate() / n as f64;
    Ok(ChannelEstimate {
        h_v: Spectrum {
            bins: h_v,
            bin_spacing: spacing,
            origin: 0.0,
        },
        h_h: Spectrum {
            bins: h_h,
            bin_spacing: spacing,
            origin: 0.0,
        },
        noise_var,
        interference_var,
        occupied,
        mean_pilot_power,
    })
}

/// MMSE equalizer applied element-wise over the FFT bins, then transformed
/// back to the time domain. The regularizer is the genie noise-plus-
/// interference variance normalized by the mean occupied pilot bin power so
/// it lives on the same scale as `|h|^2`.
pub fn equalize(
    data_chirp_rx: &IqBuffer,
    est: &ChannelEstimate,
    pol: Polarization,
) -> Result<IqBuffer> {
    let h = match pol {
        Polarization::V => &est.h_v,
        Polarization::H => &est.h_h,
    };
    if data_chirp_rx.len() != h.bins.len() {
        return Err(Error::LengthMismatch(format!(
            "chirp has {} samples, estimate has {} bins",
            data_chirp_rx.len(),
            h.bins.len()
        )));
    }
    let rho = (est.noise_var + est.interference_var) / est.mean_pilot_power.max(f64::MIN_POSITIVE);
    let y = fft_forward(data_chirp_rx.samples().to_vec());
    let eq: Vec<Complex64> = y
        .iter()
        .zip(h.bins.iter())
        .map(|(yk, hk)| hk.conj() * yk / (hk.norm_sqr() + rho))
        .collect();
    IqBuffer::new(fft_inverse(eq), data_chirp_rx.sample_rate())
}

/// Integration window of segment `seg`: the segment interior, excluding the
/// phase-glide guard at each edge where a smoothed transition is mid-flight.
fn segment_window(cb: &Codebook, seg: usize, n_s: usize) -> (usize, usize) {
    let l = cb.segments_per_chirp();
    let lo = segment_start(seg, l, n_s);
    let hi = segment_start(seg + 1, l, n_s);
    let guard = cb.smoothing_halfwidth().min((hi - lo).saturating_sub(1) / 2);
    (lo + guard, hi - guard)
}

/// Conjugate-reference mix followed by per-segment complex sums: the shared
/// kernel of both PM demodulation routes.
fn segment_reference_sums(
    chirp: &IqBuffer,
    cb: &Codebook,
    bandwidth: f64,
    center: f64,
) -> Vec<Complex64> {
    let fs = cb.sample_rate();
    let n_s = cb.samples_per_chirp().min(chirp.len());
    let l = cb.segments_per_chirp();
    let f0 = center - bandwidth / 2.0;
    let slope = bandwidth / cb.chirp_duration();
    let x = chirp.samples();
    (0..l)
        .map(|seg| {
            let (lo, hi) = segment_window(cb, seg, n_s);
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &s) in x[lo..hi].iter().enumerate() {
                let t = (lo + n) as f64 / fs;
                let theta = 2.0 * PI * (f0 * t + 0.5 * slope * t * t);
                acc += s * Complex64::from_polar(1.0, -theta);
            }
            acc
        })
        .collect()
}

/// Link statistics over scored demodulation results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// IM block error rate: wrong (b, f) decisions over all (chirp, pol)
    /// blocks.
    pub im_bler: f64,
    /// PM block error rate: chirp/pol blocks with any symbol error.
    pub pm_bler: f64,
    pub instantaneous_rate_bps: f64,
    pub max_rate_bps: f64,
}

/// Maximum data rate `2 (N_IM + N_P) / T_c` in bits/s.
pub fn max_rate_bps(cb: &Codebook) -> f64 {
    2.0 * (cb.im_bits() + cb.pm_bits()) as f64 / cb.chirp_duration()
}

/// Instantaneous throughput
/// `[2 (1-γ_I) N_IM + 2 (1-γ_P) N_P] / T_c` in bits/s.
pub fn instantaneous_rate_bps(cb: &Codebook, im_bler: f64, pm_bler: f64) -> f64 {
    (2.0 * (1.0 - im_bler) * cb.im_bits() as f64 + 2.0 * (1.0 - pm_bler) * cb.pm_bits() as f64)
        / cb.chirp_duration()
}

/// Aggregates block error rates and throughput from scored results.
pub fn link_stats(results: &[DemodResult], cb: &Codebook) -> Result<LinkStats> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no demodulation results"));
    }
    let mut im_blocks = 0usize;
    let mut im_errors = 0usize;
    let mut pm_blocks = 0usize;
    let mut pm_errors = 0usize;
    for r in results {
        let (okv, okh) = r.im_correct.ok_or_else(|| {
            Error::InvalidParam("link_stats requires scored results".into())
        })?;
        im_blocks += 2;
        im_errors += (!okv) as usize + (!okh) as usize;
        let (ev, eh) = r.pm_symbol_errors.unwrap_or((0, 0));
        pm_blocks += 2;
        pm_errors += (ev > 0) as usize + (eh > 0) as usize;
    }
    let im_bler = im_errors as f64 / im_blocks as f64;
    let pm_bler = pm_errors as f64 / pm_blocks as f64;
    Ok(LinkStats {
        im_bler,
        pm_bler,
        instantaneous_rate_bps: instantaneous_rate_bps(cb, im_bler, pm_bler),
        max_rate_bps: max_rate_bps(cb),
    })
}
