//! Library for a joint radar-communication (ISAC) link built on FMCW chirps
//! that carry data through index modulation (chirp bandwidth and centre
//! frequency selection) plus per-segment phase codes.
//!
//! The crate covers the full desk-scale simulation chain:
//!
//! - [`dsp`] — spectral transforms, targeted DTFT evaluation, convolution,
//!   correlation, Welch PSD.
//! - [`waveform`] — modulation codebook, bit mapping, Gaussian phase
//!   smoothing, chirp and frame synthesis.
//! - [`channel`] — Rician fading with Doppler and cross-polarization leakage,
//!   point-target radar echoes, AWGN.
//! - [`comm_rx`] — pilot synchronization, LMMSE channel estimation, MMSE
//!   equalization, index/phase demodulation, link statistics.
//! - [`radar_rx`] — deramp, slope-matched range alignment, deterministic
//!   phase-error correction, range-Doppler maps, peak extraction.
//! - [`metrics`] — ambiguity function, integrated sidelobe level, range CRLB,
//!   fractional out-of-band power, channel-estimation NMSE.
//! - [`config`], [`capture`], [`scenario`] — scenario configuration files,
//!   int16 IQ capture I/O, and Monte Carlo experiment drivers.

pub mod capture;
pub mod channel;
pub mod comm_rx;
pub mod config;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod radar_rx;
pub mod scenario;
pub mod waveform;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
