//! Link-level trend checks that exercise the full chain end to end.

use isac_core::config::ScenarioConfig;
use isac_core::scenario::run_link_sweep;

fn doppler_cfg(doppler_hz: f64) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(&format!(
        r#"
band = "B1"
seed = 42

[waveform]
chirp_duration = 50e-6
bandwidth_options = [50e6]
center_freq_options = [0.0]
segments = 1
psk_order = 1
frame_chirps = 2

[channel]
k_factor_db = 3.0
nlos_paths = 4
nlos_delay_max = 64e-9
los_doppler = {doppler_hz}
crosspol_leakage_db = -14.0
cir_window = 6e-6

[sim]
snr_db = [30.0]
trials = 300
sync_offset_max = 16
"#
    ))
    .unwrap()
}

/// Channel-estimation error becomes Doppler-limited as the shift grows:
/// around -12 dB at 2400 Hz (checked as a trend, +-3 dB) and worse at
/// 4800 Hz.
#[test]
fn nmse_is_doppler_limited_at_high_snr() {
    let at_2400 = run_link_sweep(&doppler_cfg(2400.0)).unwrap()[0].nmse_db;
    let at_4800 = run_link_sweep(&doppler_cfg(4800.0)).unwrap()[0].nmse_db;
    assert!(
        (-15.0..=-9.0).contains(&at_2400),
        "NMSE at 2400 Hz Doppler: {at_2400:.2} dB"
    );
    assert!(
        at_4800 > at_2400,
        "4800 Hz ({at_4800:.2} dB) should degrade past 2400 Hz ({at_2400:.2} dB)"
    );
}

/// The equalized link keeps its blocks intact once the pilot SNR clears the
/// demodulation threshold, under the full Rician + leakage channel.
#[test]
fn rician_link_closes_at_high_snr() {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
band = "B1"
seed = 19

[waveform]
chirp_duration = 10e-6
segments = 10
psk_order = 4
frame_chirps = 4

[channel]
k_factor_db = 3.0
nlos_paths = 4
nlos_delay_max = 64e-9
los_doppler = 0.0
crosspol_leakage_db = -14.0
cir_window = 2e-6

[sim]
snr_db = [30.0]
trials = 100
sync_offset_max = 32
"#,
    )
    .unwrap()
    ;
    let rows = run_link_sweep(&cfg).unwrap();
    assert!(
        rows[0].im_bler < 0.02 && rows[0].pm_bler < 0.05,
        "high-SNR Rician link too lossy: im {} pm {}",
        rows[0].im_bler,
        rows[0].pm_bler
    );
}
