//! Scenario configuration: a TOML file with band presets (B1: 2.4 GHz,
//! 40-55 MHz; B2: 24 GHz, 150-250 MHz), waveform parameters, channel
//! statistics, radar scene, and Monte Carlo settings. Unknown keys are
//! rejected; every numeric used downstream is reachable from here.

use std::path::Path;

use serde::Deserialize;

use crate::channel::{CommChannelConfig, RadarTarget};
use crate::error::{Error, Result};
use crate::waveform::{Codebook, CodebookConfig};
use crate::SPEED_OF_LIGHT;

/// Operating band preset: carrier frequency plus default waveform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Band {
    B1,
    B2,
}

impl Band {
    pub fn carrier_freq(self) -> f64 {
        match self {
            Band::B1 => 2.4e9,
            Band::B2 => 24.0e9,
        }
    }

    fn default_band_min(self) -> f64 {
        match self {
            Band::B1 => 40.0e6,
            Band::B2 => 150.0e6,
        }
    }

    fn default_band_max(self) -> f64 {
        match self {
            Band::B1 => 55.0e6,
            Band::B2 => 250.0e6,
        }
    }

    fn default_delta(self) -> f64 {
        match self {
            Band::B1 => 2.0e6,
            Band::B2 => 3.0e6,
        }
    }

    fn default_sample_rate(self) -> f64 {
        match self {
            Band::B1 => 62.5e6,
            Band::B2 => 350.0e6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    band: Band,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    waveform: RawWaveform,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    radar: RawRadar,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    sweep: RawSweep,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaveform {
    carrier_freq: Option<f64>,
    sample_rate: Option<f64>,
    chirp_duration: Option<f64>,
    segments: Option<usize>,
    psk_order: Option<usize>,
    delta_f: Option<f64>,
    delta_b: Option<f64>,
    band_min: Option<f64>,
    band_max: Option<f64>,
    bandwidth_options: Option<Vec<f64>>,
    center_freq_options: Option<Vec<f64>>,
    frame_chirps: Option<usize>,
    beta: Option<f64>,
    smoothing: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    k_factor_db: Option<f64>,
    nlos_paths: Option<usize>,
    nlos_delay_max: Option<f64>,
    nlos_delays: Option<Vec<f64>>,
    nlos_dopplers: Option<Vec<f64>>,
    los_delay: Option<f64>,
    los_doppler: Option<f64>,
    crosspol_leakage_db: Option<f64>,
    crosspol_enabled: Option<bool>,
    cir_window: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadar {
    n_chirps: Option<usize>,
    range_max: Option<f64>,
    grid_spacing: Option<f64>,
    threshold_db: Option<f64>,
    hann_window: Option<bool>,
    decimation: Option<usize>,
    snr_db: Option<f64>,
    #[serde(default)]
    targets: Vec<RawTarget>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    range: f64,
    velocity: f64,
    #[serde(default)]
    rcs_db: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    snr_db: Option<Vec<f64>>,
    trials: Option<usize>,
    sync_offset_max: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    segments: Option<Vec<usize>>,
    psk_orders: Option<Vec<usize>>,
    betas: Option<Vec<f64>>,
    chirp_durations: Option<Vec<f64>>,
}

/// Fully validated scenario with all defaults applied.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub band: Band,
    pub seed: u64,
    pub carrier_freq: f64,
    pub sample_rate: f64,
    pub chirp_duration: f64,
    pub segments: usize,
    pub psk_order: usize,
    pub delta_f: f64,
    pub delta_b: f64,
    pub band_min: f64,
    pub band_max: f64,
    pub bandwidth_options: Option<Vec<f64>>,
    pub center_freq_options: Option<Vec<f64>>,
    pub frame_chirps: usize,
    pub beta: f64,
    pub smoothing: bool,
    pub channel: CommChannelConfig,
    /// Delay-spread window retained by the channel-estimate denoiser (s).
    pub cir_window: f64,
    pub radar_chirps: usize,
    pub radar_range_max: f64,
    pub radar_grid_spacing: Option<f64>,
    pub radar_threshold_db: f64,
    pub radar_hann_window: bool,
    pub radar_decimation: usize,
    pub radar_snr_db: f64,
    pub targets: Vec<RadarTarget>,
    pub snr_sweep_db: Vec<f64>,
    pub trials: usize,
    pub sync_offset_max: usize,
    pub sweep_segments: Vec<usize>,
    pub sweep_psk_orders: Vec<usize>,
    pub sweep_betas: Vec<f64>,
    pub sweep_chirp_durations: Vec<f64>,
}

impl ScenarioConfig {
    /// Parses and validates a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Loads a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let band = raw.band;
        let w = raw.waveform;
        let chirp_duration = w.chirp_duration.unwrap_or(50.0e-6);
        let cfg = Self {
            band,
            seed: raw.seed,
            carrier_freq: w.carrier_freq.unwrap_or_else(|| band.carrier_freq()),
            sample_rate: w.sample_rate.unwrap_or_else(|| band.default_sample_rate()),
            chirp_duration,
            segments: w.segments.unwrap_or(10),
            psk_order: w.psk_order.unwrap_or(4),
            delta_f: w.delta_f.unwrap_or_else(|| band.default_delta()),
            delta_b: w.delta_b.unwrap_or_else(|| band.default_delta()),
            band_min: w.band_min.unwrap_or_else(|| band.default_band_min()),
            band_max: w.band_max.unwrap_or_else(|| band.default_band_max()),
            bandwidth_options: w.bandwidth_options,
            center_freq_options: w.center_freq_options,
            frame_chirps: w.frame_chirps.unwrap_or(50),
            beta: w.beta.unwrap_or(0.2),
            smoothing: w.smoothing.unwrap_or(true),
            channel: CommChannelConfig {
                k_factor_db: raw.channel.k_factor_db.unwrap_or(3.0),
                nlos_path_count: raw.channel.nlos_paths.unwrap_or(4),
                nlos_delay_max: raw.channel.nlos_delay_max.unwrap_or(2.0e-6),
                nlos_delays: raw.channel.nlos_delays,
                nlos_dopplers: raw.channel.nlos_dopplers,
                los_delay: raw.channel.los_delay.unwrap_or(0.0),
                los_doppler: raw.channel.los_doppler.unwrap_or(0.0),
                crosspol_leakage_db: match raw.channel.crosspol_enabled {
                    Some(false) => None,
                    _ => Some(raw.channel.crosspol_leakage_db.unwrap_or(-14.0)),
                },
            },
            cir_window: raw.channel.cir_window.unwrap_or(6.0e-6),
            radar_chirps: raw.radar.n_chirps.unwrap_or(64),
            radar_range_max: raw.radar.range_max.unwrap_or(120.0),
            radar_grid_spacing: raw.radar.grid_spacing,
            radar_threshold_db: raw.radar.threshold_db.unwrap_or(-20.0),
            radar_hann_window: raw.radar.hann_window.unwrap_or(false),
            radar_decimation: raw.radar.decimation.unwrap_or(1),
            radar_snr_db: raw.radar.snr_db.unwrap_or(f64::INFINITY),
            targets: raw
                .radar
                .targets
                .iter()
                .map(|t| RadarTarget {
                    range: t.range,
                    velocity: t.velocity,
                    rcs_gain_db: t.rcs_db,
                })
                .collect(),
            snr_sweep_db: raw
                .sim
                .snr_db
                .unwrap_or_else(|| vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]),
            trials: raw.sim.trials.unwrap_or(500),
            sync_offset_max: raw.sim.sync_offset_max.unwrap_or(128),
            sweep_segments: raw.sweep.segments.unwrap_or_else(|| vec![1, 10, 50, 100]),
            sweep_psk_orders: raw.sweep.psk_orders.unwrap_or_else(|| vec![4]),
            sweep_betas: raw.sweep.betas.unwrap_or_else(|| vec![0.2]),
            sweep_chirp_durations: raw
                .sweep
                .chirp_durations
                .unwrap_or_else(|| vec![chirp_duration]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        // building the codebook enforces the per-pair Nyquist invariants
        self.codebook()?;
        if self.frame_chirps < 2 {
            return Err(Error::Config(format!(
                "waveform.frame_chirps must be >= 2, got {}",
                self.frame_chirps
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("sim.trials must be >= 1".into()));
        }
        if self.snr_sweep_db.is_empty() {
            return Err(Error::Config("sim.snr_db must not be empty".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "waveform.beta must be in (0, 1], got {}",
                self.beta
            )));
        }
        if self.radar_decimation == 0 {
            return Err(Error::Config("radar.decimation must be >= 1".into()));
        }
        if !(self.cir_window >= 0.0) || self.cir_window >= self.chirp_duration {
            return Err(Error::Config(format!(
                "channel.cir_window must be in [0, chirp_duration), got {}",
                self.cir_window
            )));
        }
        for t in &self.targets {
            if t.range < 0.0 {
                return Err(Error::Config(format!(
                    "radar.targets: negative range {}",
                    t.range
                )));
            }
            let tau = 2.0 * t.range / SPEED_OF_LIGHT;
            if tau >= self.chirp_duration {
                return Err(Error::Config(format!(
                    "radar.targets: range {} m exceeds the chirp duration",
                    t.range
                )));
            }
        }
        Ok(())
    }

    /// Builds the codebook this scenario describes.
    pub fn codebook(&self) -> Result<Codebook> {
        Codebook::build(&CodebookConfig {
            band_min: self.band_min,
            band_max: self.band_max,
            delta_b: self.delta_b,
            delta_f: self.delta_f,
            explicit_bandwidths: self.bandwidth_options.clone(),
            explicit_center_freqs: self.center_freq_options.clone(),
            psk_order: self.psk_order,
            segments_per_chirp: self.segments,
            chirp_duration: self.chirp_duration,
            sample_rate: self.sample_rate,
            phase_smoothing: if self.smoothing { Some(self.beta) } else { None },
        })
        .map_err(|e| Error::Config(e.to_string()))
    }
}
