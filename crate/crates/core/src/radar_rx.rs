//! Monostatic radar processing for IM/PM FMCW echoes: deramp, chirp-matched
//! DTFT range alignment, deterministic phase-error correction, slow-time
//! Doppler FFT, and target extraction.
//!
//! Bandwidth hopping makes the chirp slope vary, so a fixed target produces a
//! different beat frequency in every chirp. Range alignment evaluates each
//! chirp's beat spectrum at its own slope-matched frequencies so the target
//! lands in one common range bin; phase correction then removes the
//! deterministic slow-time phase left behind by the centre-frequency and
//! slope deviations, leaving only the true Doppler progression.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{dtft_single, fft_forward, IqBuffer};
use crate::error::{Error, Result};
use crate::waveform::ChirpParams;
use crate::SPEED_OF_LIGHT;

/// Uniformly spaced range hypotheses (metres).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGrid {
    bins: Vec<f64>,
    spacing: f64,
}

impl RangeGrid {
    pub fn new(start: f64, spacing: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParam("range grid needs at least one bin".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidParam(format!(
                "range grid spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            bins: (0..count).map(|k| start + k as f64 * spacing).collect(),
            spacing,
        })
    }

    /// Grid from 0 out to at least `max_range`.
    pub fn covering(max_range: f64, spacing: f64) -> Result<Self> {
        let count = (max_range / spacing).ceil() as usize + 1;
        Self::new(0.0, spacing, count)
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Index of the bin nearest to `range`.
    pub fn nearest_bin(&self, range: f64) -> usize {
        let idx = ((range - self.bins[0]) / self.spacing).round();
        (idx.max(0.0) as usize).min(self.bins.len() - 1)
    }

    /// The grid must stay below the unambiguous range `c / (2 S_max T_s)`
    /// of the steepest chirp.
    fn validate_unambiguous(&self, max_slope: f64, ts: f64) -> Result<()> {
        let unamb = SPEED_OF_LIGHT / (2.0 * max_slope * ts);
        let max = *self.bins.last().unwrap();
        if max >= unamb {
            return Err(Error::InvalidParam(format!(
                "range grid reaches {max} m, beyond the unambiguous range {unamb:.1} m"
            )));
        }
        Ok(())
    }
}

/// Complex range-Doppler matrix with its axes and the reference chirp
/// parameters used for correction.
#[derive(Debug, Clone)]
pub struct RangeDopplerMap {
    /// `cells[range_bin][doppler_bin]`.
    pub cells: Vec<Vec<Complex64>>,
    pub range_axis: Vec<f64>,
    pub velocity_axis: Vec<f64>,
    pub reference_bandwidth: f64,
    pub reference_center: f64,
}

/// Local maximum of a range-Doppler map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range: f64,
    pub velocity: f64,
    /// Linear power of the cell.
    pub power: f64,
}

/// Mixes the echo against the transmit replica: `s[n] = echo[n] * conj(tx[n])`.
/// Phase codes cancel because the reference carries them too.
pub fn deramp(echo: &IqBuffer, tx_chirp: &IqBuffer) -> Result<IqBuffer> {
    if echo.len() != tx_chirp.len() {
        return Err(Error::LengthMismatch(format!(
            "echo has {} samples, reference {}",
            echo.len(),
            tx_chirp.len()
        )));
    }
    let samples = echo
        .samples()
        .iter()
        .zip(tx_chirp.samples())
        .map(|(r, x)| r * x.conj())
        .collect();
    IqBuffer::new(samples, echo.sample_rate())
}

/// Beat frequency magnitude for a range hypothesis under slope `S`:
/// `2 S r / c`.
pub fn beat_frequency(slope: f64, range: f64) -> f64 {
    2.0 * slope * range / SPEED_OF_LIGHT
}

fn wrap_to_principal(f: f64, fs: f64) -> f64 {
    f - fs * (f / fs).round()
}

/// Slope-matched range profiles: row `m` of chirp `i` evaluates the
/// deramped fast-time signal at that chirp's own beat frequency for range
/// bin `r_m`, aligning a fixed target to one bin across all chirps
/// regardless of bandwidth hopping.
///
/// An up-chirp mixed as `echo * conj(tx)` puts the beat tone of a positive
/// range at minus the textbook beat frequency, so the evaluation frequency
/// is negated before the DTFT.
pub fn range_align(
    deramped: &[IqBuffer],
    params: &[ChirpParams],
    grid: &RangeGrid,
) -> Result<Vec<Vec<Complex64>>> {
    if deramped.is_empty() {
        return Err(Error::EmptyInput("no deramped chirps"));
    }
    if deramped.len() != params.len() {
        return Err(Error::LengthMismatch(format!(
            "{} chirps but {} parameter sets",
            deramped.len(),
            params.len()
        )));
    }
    let ts = deramped[0].sample_interval();
    let max_slope = params
        .iter()
        .map(|p| p.slope().abs())
        .fold(0.0f64, f64::max);
    grid.validate_unambiguous(max_slope, ts)?;

    let mut rows = Vec::with_capacity(deramped.len());
    for (chirp, p) in deramped.iter().zip(params.iter()) {
        let fs = chirp.sample_rate();
        let row: Vec<Complex64> = grid
            .bins()
            .iter()
            .map(|&r| {
                let f = wrap_to_principal(-beat_frequency(p.slope(), r), fs);
                dtft_single(chirp.samples(), f * ts)
            })
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// Fixed-slope baseline: every chirp is evaluated with the reference slope,
/// the conventional FMCW range map. Bandwidth hopping smears targets across
/// bins here.
pub fn fixed_slope_profiles(
    deramped: &[IqBuffer],
    grid: &RangeGrid,
    reference_slope: f64,
) -> Vec<Vec<Complex64>> {
    deramped
        .iter()
        .map(|chirp| {
            let fs = chirp.sample_rate();
            let ts = chirp.sample_interval();
            grid.bins()
                .iter()
                .map(|&r| {
                    let f = wrap_to_principal(-beat_frequency(reference_slope, r), fs);
                    dtft_single(chirp.samples(), f * ts)
                })
                .collect()
        })
        .collect()
}

/// Removes the deterministic per-chirp phase error left after range
/// alignment: the linear term from the chirp-to-chirp sweep-start deviation
/// and the quadratic term from the slope deviation,
/// `phi_err,i(r_m) = -2 pi df_i tau + pi dS_i tau^2` with `tau = 2 r_m / c`.
///
/// The sweep-start deviation `df_i = (f_i - b_i/2) - (f_ref - b_ref/2)`
/// is what the deramp phase actually depends on for chirps whose phase is
/// zero at t = 0; using bare centre-frequency deviations would leave a
/// `pi (b_i - b_ref) tau` residue under bandwidth hopping.
pub fn phase_correct(
    aligned: &[Vec<Complex64>],
    params: &[ChirpParams],
    grid: &RangeGrid,
    f_ref: f64,
    b_ref: f64,
) -> Vec<Vec<Complex64>> {
    let start_ref = f_ref - b_ref / 2.0;
    aligned
        .iter()
        .zip(params.iter())
        .map(|(row, p)| {
            let d_start = p.start_freq() - start_ref;
            let d_slope = (p.bandwidth - b_ref) / p.duration;
            row.iter()
                .zip(grid.bins())
                .map(|(cell, &r)| {
                    let tau = 2.0 * r / SPEED_OF_LIGHT;
                    let phi_err = -2.0 * PI * d_start * tau + PI * d_slope * tau * tau;
                    cell * Complex64::from_polar(1.0, -phi_err)
                })
                .collect()
        })
        .collect()
}

/// Slow-time FFT across the chirp index for every range bin, FFT-shifted so
/// the velocity axis ascends through zero. The axis spans the unambiguous
/// interval `±lambda / (4 T_c)`.
pub fn doppler_map(
    corrected: &[Vec<Complex64>],
    grid: &RangeGrid,
    chirp_duration: f64,
    carrier_freq: f64,
    f_ref: f64,
    b_ref: f64,
    hann: bool,
) -> Result<RangeDopplerMap> {
    let n_c = corrected.len();
    if n_c < 2 {
        return Err(Error::InvalidParam(format!(
            "Doppler processing needs at least 2 chirps, got {n_c}"
        )));
    }
    let n_r = grid.len();
    let window: Vec<f64> = if hann {
        (0..n_c)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n_c - 1) as f64).cos())
            .collect()
    } else {
        vec![1.0; n_c]
    };
    let lambda = SPEED_OF_LIGHT / carrier_freq;
    let velocity_axis: Vec<f64> = (0..n_c)
        .map(|k| (k as f64 - (n_c / 2) as f64) / (n_c as f64 * chirp_duration) * lambda / 2.0)
        .collect();
    let mut cells = Vec::with_capacity(n_r);
    for m in 0..n_r {
        let slow: Vec<Complex64> = corrected
            .iter()
            .zip(window.iter())
            .map(|(row, &w)| row[m] * w)
            .collect();
        let spec = fft_forward(slow);
        let shifted: Vec<Complex64> = (0..n_c).map(|k| spec[(k + n_c / 2) % n_c]).collect();
        cells.push(shifted);
    }
    Ok(RangeDopplerMap {
        cells,
        range_axis: grid.bins().to_vec(),
        velocity_axis,
        reference_bandwidth: b_ref,
        reference_center: f_ref,
    })
}

/// Local maxima above `threshold_db` relative to the map peak, strongest
/// first.
pub fn extract_targets(map: &RangeDopplerMap, threshold_db: f64) -> Result<Vec<Detection>> {
    if map.cells.is_empty() || map.cells[0].is_empty() {
        return Err(Error::EmptyInput("range-Doppler map"));
    }
    let n_r = map.cells.len();
    let n_d = map.cells[0].len();
    let power = |m: usize, k: usize| map.cells[m][k].norm_sqr();
    let mut peak = 0.0f64;
    for m in 0..n_r {
        for k in 0..n_d {
            peak = peak.max(power(m, k));
        }
    }
    if peak <= 0.0 {
        return Err(Error::EmptyInput("all-zero range-Doppler map"));
    }
    let floor = peak * 10f64.powf(threshold_db / 10.0);
    let mut found = Vec::new();
    for m in 0..n_r {
        for k in 0..n_d {
            let p = power(m, k);
            if p < floor {
                continue;
            }
            let mut local_max = true;
            'nb: for dm in -1i64..=1 {
                for dk in -1i64..=1 {
                    if dm == 0 && dk == 0 {
                        continue;
                    }
                    let mm = m as i64 + dm;
                    let kk = k as i64 + dk;
                    if mm < 0 || kk < 0 || mm >= n_r as i64 || kk >= n_d as i64 {
                        continue;
                    }
                    if power(mm as usize, kk as usize) > p {
                        local_max = false;
                        break 'nb;
                    }
                }
            }
            if local_max {
                found.push(Detection {
                    range: map.range_axis[m],
                    velocity: map.velocity_axis[k],
                    power: p,
                });
            }
        }
    }
    found.sort_by(|a, b| b.power.partial_cmp(&a.power).unwrap());
    Ok(found)
}

/// RMSE of range estimates against ground truth, in metres.
pub fn range_rmse(trials: &[(f64, f64)]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::EmptyInput("no range trials"));
    }
    let mse = trials
        .iter()
        .map(|(est, truth)| (est - truth) * (est - truth))
        .sum::<f64>()
        / trials.len() as f64;
    Ok(mse.sqrt())
}

/// Spread (max - min) of the per-chirp range argmax bins; the range-migration
/// signature of a pipeline.
pub fn argmax_spread(profiles: &[Vec<Complex64>]) -> usize {
    let argmax = |row: &Vec<Complex64>| -> usize {
        let mut best = 0;
        for (i, v) in row.iter().enumerate().skip(1) {
            if v.norm_sqr() > row[best].norm_sqr() {
                best = i;
            }
        }
        best
    };
    let bins: Vec<usize> = profiles.iter().map(argmax).collect();
    let lo = *bins.iter().min().unwrap();
    let hi = *bins.iter().max().unwrap();
    hi - lo
}

/// Continuous sub-bin range refinement: golden-section maximization of the
/// slope-matched DTFT magnitude within one grid spacing of the coarse peak.
/// Unlike the parabolic fit this has no grid-quantization bias.
pub fn refine_peak_dtft(
    chirp: &IqBuffer,
    params: &ChirpParams,
    grid: &RangeGrid,
    coarse_bin: usize,
) -> f64 {
    let ts = chirp.sample_interval();
    let fs = chirp.sample_rate();
    let eval = |r: f64| -> f64 {
        let f = wrap_to_principal(-beat_frequency(params.slope(), r), fs);
        dtft_single(chirp.samples(), f * ts).norm_sqr()
    };
    let mut lo = grid.bins()[coarse_bin] - grid.spacing();
    let mut hi = grid.bins()[coarse_bin] + grid.spacing();
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..48 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Sub-bin range estimate: parabolic interpolation of the profile magnitude
/// around its peak.
pub fn refine_peak(profile: &[Complex64], grid: &RangeGrid) -> f64 {
    let mut best = 0usize;
    for (i, v) in profile.iter().enumerate().skip(1) {
        if v.norm_sqr() > profile[best].norm_sqr() {
            best = i;
        }
    }
    if best == 0 || best + 1 >= profile.len() {
        return grid.bins()[best];
    }
    let m0 = profile[best - 1].norm();
    let m1 = profile[best].norm();
    let m2 = profile[best + 1].norm();
    let denom = m0 - 2.0 * m1 + m2;
    let delta = if denom.abs() < 1e-30 {
        0.0
    } else {
        (0.5 * (m0 - m2) / denom).clamp(-0.5, 0.5)
    };
    grid.bins()[best] + delta * grid.spacing()
}
