//! Channel effects: Rician fading with Doppler and cross-polarization
//! leakage for the communication path, delayed Doppler-shifted point-target
//! echoes for the radar path, and seeded AWGN.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::IqBuffer;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Two-way propagation delay for a target at `range` metres.
pub fn two_way_delay(range: f64) -> f64 {
    2.0 * range / SPEED_OF_LIGHT
}

/// Doppler shift `2 v / lambda` for a radial velocity and carrier frequency.
pub fn doppler_shift(velocity: f64, carrier_freq: f64) -> f64 {
    2.0 * velocity * carrier_freq / SPEED_OF_LIGHT
}

/// Statistical description of the communication channel for one link.
#[derive(Debug, Clone)]
pub struct CommChannelConfig {
    /// Rician K-factor in dB: LOS power over total NLOS power.
    pub k_factor_db: f64,
    pub nlos_path_count: usize,
    /// NLOS delays are drawn uniformly from `[0, nlos_delay_max]` unless
    /// pinned explicitly.
    pub nlos_delay_max: f64,
    pub nlos_delays: Option<Vec<f64>>,
    /// NLOS Dopplers are drawn uniformly from `[-los_doppler, los_doppler]`
    /// unless pinned explicitly.
    pub nlos_dopplers: Option<Vec<f64>>,
    pub los_delay: f64,
    pub los_doppler: f64,
    /// Power of each cross-polarization coupling coefficient in dB
    /// (`|h_hv|^2 = |h_vh|^2 = 10^(x/10)`); `None` disables leakage.
    pub crosspol_leakage_db: Option<f64>,
}

impl Default for CommChannelConfig {
    fn default() -> Self {
        Self {
            k_factor_db: 3.0,
            nlos_path_count: 4,
            nlos_delay_max: 2.0e-6,
            nlos_delays: None,
            nlos_dopplers: None,
            los_delay: 0.0,
            los_doppler: 0.0,
            crosspol_leakage_db: Some(-14.0),
        }
    }
}

/// One draw of the random channel state, held fixed within a frame.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub los_gain_v: Complex64,
    pub los_gain_h: Complex64,
    /// Raw CN(0,1) NLOS gains; the path-count normalization is applied when
    /// the channel acts on a signal.
    pub nlos_gains_v: Vec<Complex64>,
    pub nlos_gains_h: Vec<Complex64>,
    pub nlos_delays: Vec<f64>,
    pub nlos_dopplers: Vec<f64>,
    pub crosspol_hv: Complex64,
    pub crosspol_vh: Complex64,
    pub rng_seed: u64,
}

impl ChannelRealization {
    /// Draws a realization deterministically from `seed`. LOS gains have
    /// unit magnitude and uniform phase; NLOS gains are CN(0,1);
    /// cross-polarization coefficients have fixed magnitude from the
    /// configured leakage with uniform phase.
    pub fn draw(cfg: &CommChannelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let cn = |rng: &mut ChaCha8Rng| {
            Complex64::new(normal.sample(rng), normal.sample(rng))
        };
        let unit_phase =
            |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));

        let los_gain_v = unit_phase(&mut rng);
        let los_gain_h = unit_phase(&mut rng);
        let n = cfg.nlos_path_count;
        let nlos_gains_v: Vec<Complex64> = (0..n).map(|_| cn(&mut rng)).collect();
        let nlos_gains_h: Vec<Complex64> = (0..n).map(|_| cn(&mut rng)).collect();
        let nlos_delays = match &cfg.nlos_delays {
            Some(d) => d.clone(),
            None => (0..n)
                .map(|_| rng.random_range(0.0..=cfg.nlos_delay_max.max(f64::MIN_POSITIVE)))
                .collect(),
        };
        let nlos_dopplers = match &cfg.nlos_dopplers {
            Some(d) => d.clone(),
            None => {
                let span = cfg.los_doppler.abs();
                (0..n)
                    .map(|_| {
                        if span > 0.0 {
                            rng.random_range(-span..=span)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        };
        let leak_mag = cfg
            .crosspol_leakage_db
            .map(|db| 10f64.powf(db / 20.0))
            .unwrap_or(0.0);
        let crosspol_hv = unit_phase(&mut rng) * leak_mag;
        let crosspol_vh = unit_phase(&mut rng) * leak_mag;
        Self {
            los_gain_v,
            los_gain_h,
            nlos_gains_v,
            nlos_gains_h,
            nlos_delays,
            nlos_dopplers,
            crosspol_hv,
            crosspol_vh,
            rng_seed: seed,
        }
    }
}

/// Point scatterer for the radar path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarTarget {
    pub range: f64,
    pub velocity: f64,
    pub rcs_gain_db: f64,
}

/// Integer-sample delay; a fractional remainder is carried as a phase
/// rotation at `phase_ref_freq` (0 Hz for baseband-referenced paths, the
/// carrier for radar echoes).
fn delay_samples(x: &[Complex64], tau: f64, fs: f64) -> Vec<Complex64> {
    let shift = (tau * fs).round() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (i, &s) in x.iter().enumerate() {
        if i + shift < out.len() {
            out[i + shift] = s;
        }
    }
    out
}

fn add_rotated(
    acc: &mut [Complex64],
    x: &[Complex64],
    gain: Complex64,
    tau: f64,
    doppler: f64,
    fs: f64,
) {
    let delayed = delay_samples(x, tau, fs);
    let step = Complex64::from_polar(1.0, 2.0 * PI * doppler / fs);
    let mut rot = Complex64::new(1.0, 0.0);
    for (n, (a, d)) in acc.iter_mut().zip(delayed.iter()).enumerate() {
        *a += gain * d * rot;
        rot *= step;
        if n % 4096 == 4095 {
            // resynchronize the phasor so it cannot drift over long frames
            rot = Complex64::from_polar(1.0, 2.0 * PI * doppler * (n + 1) as f64 / fs);
        }
    }
}

/// Applies the Rician communication channel to a dual-polarization frame.
///
/// Per polarization the output is the K-weighted LOS path, the normalized
/// NLOS sum (each gain scaled by `1/sqrt(K+1)/sqrt(path_count)` so the
/// LOS/NLOS power ratio equals the configured K), and the LOS cross-pol
/// leakage from the other stream. Noise is added separately.
pub fn apply_comm_channel(
    tx_v: &IqBuffer,
    tx_h: &IqBuffer,
    cfg: &CommChannelConfig,
    real: &ChannelRealization,
) -> Result<(IqBuffer, IqBuffer)> {
    if tx_v.len() != tx_h.len() {
        return Err(Error::LengthMismatch(format!(
            "polarization streams differ: {} vs {} samples",
            tx_v.len(),
            tx_h.len()
        )));
    }
    if (tx_v.sample_rate() - tx_h.sample_rate()).abs() > 1e-9 {
        return Err(Error::LengthMismatch(
            "polarization streams have different sample rates".into(),
        ));
    }
    let fs = tx_v.sample_rate();
    let k = 10f64.powf(cfg.k_factor_db / 10.0);
    let los_scale = (k / (k + 1.0)).sqrt();
    let path_count = real.nlos_gains_v.len().max(1);
    let nlos_scale = (1.0 / (k + 1.0)).sqrt() / (path_count as f64).sqrt();

    let run = |own: &IqBuffer,
               other: &IqBuffer,
               los_gain: Complex64,
               nlos_gains: &[Complex64],
               leak: Complex64|
     -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); own.len()];
        add_rotated(
            &mut acc,
            own.samples(),
            los_gain * los_scale,
            cfg.los_delay,
            cfg.los_doppler,
            fs,
        );
        for (l, &g) in nlos_gains.iter().enumerate() {
            add_rotated(
                &mut acc,
                own.samples(),
                g * nlos_scale,
                real.nlos_delays[l],
                real.nlos_dopplers[l],
                fs,
            );
        }
        if leak.norm_sqr() > 0.0 {
            add_rotated(
                &mut acc,
                other.samples(),
                leak,
                cfg.los_delay,
                cfg.los_doppler,
                fs,
            );
        }
        acc
    };

    let rx_v = run(
        tx_v,
        tx_h,
        real.los_gain_v,
        &real.nlos_gains_v,
        real.crosspol_hv,
    );
    let rx_h = run(
        tx_h,
        tx_v,
        real.los_gain_h,
        &real.nlos_gains_h,
        real.crosspol_vh,
    );
    Ok((IqBuffer::new(rx_v, fs)?, IqBuffer::new(rx_h, fs)?))
}

/// Superimposes delayed, Doppler-shifted copies of `tx` for every target.
///
/// Each echo is the transmit stream shifted by the round-trip delay,
/// rotated by the carrier phase `e^{-j 2 pi F_c tau}`, and multiplied by the
/// Doppler phasor `e^{j 2 pi f_D (t_start + t)}`. Passing a whole frame with
/// `t_start = 0` makes the slow-time phase progression across chirps emerge
/// naturally; passing single chirps with `t_start = i * T_c` keeps the same
/// global-time phasor while isolating the chirps. Finite `snr_db` adds
/// seeded AWGN referenced to the noiseless echo power.
pub fn apply_radar_echo(
    tx: &IqBuffer,
    targets: &[RadarTarget],
    carrier_freq: f64,
    chirp_duration: f64,
    snr_db: f64,
    seed: u64,
    t_start: f64,
) -> Result<IqBuffer> {
    if targets.is_empty() {
        return Err(Error::InvalidParam("no radar targets".into()));
    }
    let fs = tx.sample_rate();
    let mut acc = vec![Complex64::new(0.0, 0.0); tx.len()];
    for t in targets {
        let tau = two_way_delay(t.range);
        if tau >= chirp_duration {
            return Err(Error::InvalidParam(format!(
                "target at {} m has delay {:.3e} s >= chirp duration {:.3e} s",
                t.range, tau, chirp_duration
            )));
        }
        let amp = 10f64.powf(t.rcs_gain_db / 20.0);
        let f_d = doppler_shift(t.velocity, carrier_freq);
        let gain = Complex64::from_polar(
            amp,
            -2.0 * PI * carrier_freq * tau + 2.0 * PI * f_d * t_start,
        );
        add_rotated(&mut acc, tx.samples(), gain, tau, f_d, fs);
    }
    let echo = IqBuffer::new(acc, fs)?;
    if snr_db.is_finite() {
        add_awgn(&echo, snr_db, seed)
    } else {
        Ok(echo)
    }
}

/// Adds complex AWGN at the given SNR relative to the mean power of `x`.
/// The variance splits equally between the I and Q components. Infinite
/// `snr_db` returns the input unchanged.
pub fn add_awgn(x: &IqBuffer, snr_db: f64, seed: u64) -> Result<IqBuffer> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(x.clone());
    }
    let power = x.mean_power();
    if power <= 0.0 {
        return Err(Error::InvalidParam(
            "SNR undefined for an all-zero signal".into(),
        ));
    }
    let variance = power / 10f64.powf(snr_db / 10.0);
    add_awgn_var(x, variance, seed)
}

/// Adds complex AWGN with an explicit per-sample noise variance.
pub fn add_awgn_var(x: &IqBuffer, noise_variance: f64, seed: u64) -> Result<IqBuffer> {
    if noise_variance < 0.0 || !noise_variance.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise variance must be finite and non-negative, got {noise_variance}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (noise_variance / 2.0).sqrt()).unwrap();
    let samples = x
        .samples()
        .iter()
        .map(|&s| s + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    IqBuffer::new(samples, x.sample_rate())
}
