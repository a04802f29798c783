//! Acceptance suite: one integration test per release criterion. Each test
//! prints a `criterion N (...): PASS/FAIL` line (visible with
//! `--nocapture`) and then asserts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isac_core::channel::{add_awgn, apply_radar_echo, two_way_delay, RadarTarget};
use isac_core::comm_rx::Receiver;
use isac_core::config::ScenarioConfig;
use isac_core::dsp::{convolve_linear, dtft_at, ConvMode, IqBuffer};
use isac_core::metrics::{crlb_range, CrlbConfig};
use isac_core::radar_rx::{deramp, range_align, refine_peak_dtft, RangeGrid};
use isac_core::scenario::{
    link_rows_to_csv, map_to_csv, mean_isl_db, mean_oob_db, run_link_sweep, run_radar_scene,
};
use isac_core::waveform::{
    build_frame, synth_chirp, ChirpParams, Codebook, CodebookConfig, Polarization, SweepDir,
};
use isac_core::SPEED_OF_LIGHT;

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {n} ({name}): {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

/// Full noiseless receive path: pad, synchronize, estimate from the clean
/// pilots, decode, compare bits.
fn loopback_exact(l: usize, m: usize, frames: usize) -> bool {
    let t_c = (l as f64 * 1.0e-6).max(10.0e-6);
    let cb = Codebook::build(&CodebookConfig {
        band_min: 40.0e6,
        band_max: 55.0e6,
        delta_b: 2.0e6,
        delta_f: 2.0e6,
        explicit_bandwidths: None,
        explicit_center_freqs: None,
        psk_order: m,
        segments_per_chirp: l,
        chirp_duration: t_c,
        sample_rate: 62.5e6,
        phase_smoothing: Some(0.2),
    })
    .unwrap();
    let rx = Receiver::new(cb.clone(), 6.0e-6).unwrap();
    let chirps = 2usize;
    let n_s = cb.samples_per_chirp();
    let fs = cb.sample_rate();
    for frame_idx in 0..frames as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(frame_idx * 7919 + (l * 64 + m) as u64);
        let bits: Vec<bool> = (0..(chirps - 1) * cb.bits_per_codeword())
            .map(|_| rng.random())
            .collect();
        let frame = build_frame(&bits, &cb, chirps).unwrap();
        let pad = 37usize;
        let extend = |x: &IqBuffer| {
            let mut v = vec![Complex64::new(0.0, 0.0); pad];
            v.extend_from_slice(x.samples());
            IqBuffer::new(v, fs).unwrap()
        };
        let rx_v = extend(&frame.tx_v);
        let rx_h = extend(&frame.tx_h);
        let found = rx.synchronize(&rx_v, Polarization::V).unwrap();
        if found != pad {
            return false;
        }
        let slice = |x: &IqBuffer, lo: usize, len: usize| {
            IqBuffer::new(x.samples()[lo..lo + len].to_vec(), fs).unwrap()
        };
        let est = rx
            .estimate_channel(
                &slice(&rx_v, found, n_s),
                &slice(&rx_h, found, n_s),
                1e-12,
                0.0,
            )
            .unwrap();
        let (got, _) = rx
            .decode_frame(
                &slice(&rx_v, found, chirps * n_s),
                &slice(&rx_h, found, chirps * n_s),
                &est,
                chirps,
            )
            .unwrap();
        if got != bits {
            return false;
        }
    }
    true
}

#[test]
fn criterion_1_noiseless_loopback() {
    let mut failed = Vec::new();
    for &m in &[2usize, 4, 16, 64] {
        for &l in &[1usize, 10, 50, 100] {
            if !loopback_exact(l, m, 10) {
                failed.push((m, l));
            }
        }
    }
    verdict(
        1,
        "noiseless loopback, all (M, L)",
        failed.is_empty(),
        &format!(
            "16 configs x 10 frames, bit-exact; failures: {failed:?}"
        ),
    );
}

#[test]
fn criterion_2_range_migration_fix() {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
band = "B1"
seed = 7

[waveform]
chirp_duration = 50e-6
segments = 50
psk_order = 4

[radar]
n_chirps = 64
range_max = 130.0
threshold_db = -20.0
hann_window = true

[[radar.targets]]
range = 100.0
velocity = -40.0
rcs_db = 0.0

[[radar.targets]]
range = 50.0
velocity = 30.0
rcs_db = 0.0
"#,
    )
    .unwrap();
    let result = run_radar_scene(&cfg).unwrap();
    let spacing = result.corrected.range_axis[1] - result.corrected.range_axis[0];
    let v_res = result.corrected.velocity_axis[1] - result.corrected.velocity_axis[0];
    let fs = cfg.sample_rate;
    let mut localized = true;
    let mut detail = String::new();
    for t in &cfg.targets {
        // sample-quantized range actually synthesized (documented bound
        // c/(4 fs))
        let r_eff = (two_way_delay(t.range) * fs).round() / fs * SPEED_OF_LIGHT / 2.0;
        assert!((r_eff - t.range).abs() <= SPEED_OF_LIGHT / (4.0 * fs) + 1e-9);
        let best = result
            .detections
            .iter()
            .min_by(|a, b| {
                (a.range - r_eff)
                    .abs()
                    .partial_cmp(&(b.range - r_eff).abs())
                    .unwrap()
            })
            .unwrap();
        let ok_r = (best.range - r_eff).abs() <= spacing + 1e-9;
        let ok_v = (best.velocity - t.velocity).abs() <= v_res + 1e-9;
        localized &= ok_r && ok_v;
        detail.push_str(&format!(
            "target ({:.0} m, {:.0} m/s) -> ({:.2} m, {:.2} m/s); ",
            t.range, t.velocity, best.range, best.velocity
        ));
    }
    let two = result.detections.len() == 2;
    let naive_smears = result.naive_spread >= 2;
    // off-grid targets may straddle two bins; one bin of argmax wander is
    // "within one range bin"
    let corrected_tight = result.corrected_spread <= 1;
    verdict(
        2,
        "range-migration fix",
        localized && two && naive_smears && corrected_tight,
        &format!(
            "{detail}detections={}, naive spread={} bins, corrected spread={} bins",
            result.detections.len(),
            result.naive_spread,
            result.corrected_spread
        ),
    );
}

fn crit3_cfg(band: &str, segments: usize, snrs: &str, trials: usize) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(&format!(
        r#"
band = "{band}"
seed = 5

[waveform]
chirp_duration = 10e-6
segments = {segments}
psk_order = 64
frame_chirps = 2

[channel]
k_factor_db = 300.0
nlos_paths = 1
nlos_delays = [0.0]
nlos_dopplers = [0.0]
los_doppler = 0.0
crosspol_enabled = false

[sim]
snr_db = {snrs}
trials = {trials}
sync_offset_max = 16
"#
    ))
    .unwrap()
}

#[test]
fn criterion_3_throughput_plateaus() {
    let mut ok = true;
    let mut detail = String::new();
    for (band, segments, r_target) in [("B1", 20usize, 25.0e6), ("B2", 40usize, 50.0e6)] {
        let plateau_cfg = crit3_cfg(band, segments, "[25.0, 30.0]", 500);
        let cb = plateau_cfg.codebook().unwrap();
        let r_max = isac_core::comm_rx::max_rate_bps(&cb);
        ok &= (r_max - r_target).abs() < 1.0;
        let plateau = run_link_sweep(&plateau_cfg).unwrap();
        for row in &plateau {
            ok &= row.throughput_bps >= 0.99 * r_max;
        }
        let grid_cfg = crit3_cfg(
            band,
            segments,
            "[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]",
            150,
        );
        let grid = run_link_sweep(&grid_cfg).unwrap();
        for w in grid.windows(2) {
            ok &= w[1].throughput_bps >= w[0].throughput_bps - 1e-9;
        }
        detail.push_str(&format!(
            "{band}: R_max={:.1} Mbps, tput@25dB={:.3} Mbps, tput@30dB={:.3} Mbps, monotone over 7 pts; ",
            r_max / 1e6,
            plateau[0].throughput_bps / 1e6,
            plateau[1].throughput_bps / 1e6
        ));
    }
    verdict(3, "throughput plateaus 25/50 Mbps", ok, &detail);
}

fn crit4_cfg(leak: bool) -> ScenarioConfig {
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
los_doppler = 0.0
{}
cir_window = 6e-6

[sim]
snr_db = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
trials = 500
sync_offset_max = 16
"#,
        if leak {
            "crosspol_leakage_db = -14.0"
        } else {
            "crosspol_enabled = false"
        }
    ))
    .unwrap()
}

#[test]
fn criterion_4_nmse_floor() {
    let leak_rows = run_link_sweep(&crit4_cfg(true)).unwrap();
    let clean_rows = run_link_sweep(&crit4_cfg(false)).unwrap();
    let mut monotone = true;
    for w in leak_rows.windows(2) {
        monotone &= w[1].nmse_db <= w[0].nmse_db + 0.3;
    }
    let floor = leak_rows.last().unwrap().nmse_db;
    let in_window = (-23.0..=-17.0).contains(&floor);
    let clean_at_40 = clean_rows.last().unwrap().nmse_db;
    let floor_removed = clean_at_40 <= floor - 10.0;
    verdict(
        4,
        "NMSE floor from cross-pol leakage",
        monotone && in_window && floor_removed,
        &format!(
            "floor {floor:.2} dB (window [-23, -17]), monotone={monotone}, no-leak NMSE@40dB {clean_at_40:.2} dB"
        ),
    );
}

fn metrics_cfg() -> ScenarioConfig {
    ScenarioConfig::from_toml_str(
        r#"
band = "B1"
seed = 11

[waveform]
chirp_duration = 50e-6
sample_rate = 250e6
bandwidth_options = [50e6]
center_freq_options = [0.0]
psk_order = 64
segments = 50
"#,
    )
    .unwrap()
}

#[test]
fn criterion_5_oob_properties() {
    let cfg = metrics_cfg();
    let rect_100 = mean_oob_db(&cfg, 100, 64, None).unwrap();
    let smooth_100 = mean_oob_db(&cfg, 100, 64, Some(0.2)).unwrap();
    let gap = rect_100 - smooth_100;
    let mut smoothed = Vec::new();
    for &l in &[1usize, 10, 50, 100] {
        smoothed.push(mean_oob_db(&cfg, l, 64, Some(0.2)).unwrap());
    }
    let mut monotone = true;
    for w in smoothed.windows(2) {
        monotone &= w[1] >= w[0] - 1e-9;
    }
    verdict(
        5,
        "out-of-band suppression and growth",
        gap >= 3.0 && monotone,
        &format!(
            "L=100: rect {rect_100:.2} dB vs beta=0.2 {smooth_100:.2} dB (gap {gap:.2} dB >= 3); smoothed over L: {smoothed:?}"
        ),
    );
}

#[test]
fn criterion_6_isl_rate_tradeoff() {
    let cfg = metrics_cfg();
    let mut isl = Vec::new();
    let mut bits = Vec::new();
    for &l in &[1usize, 10, 50, 100] {
        isl.push(mean_isl_db(&cfg, l, 64).unwrap());
        bits.push(l * 6);
    }
    let isl_up = isl.windows(2).all(|w| w[1] > w[0]);
    let bits_up = bits.windows(2).all(|w| w[1] > w[0]);
    verdict(
        6,
        "ISL-rate trade-off",
        isl_up && bits_up,
        &format!("ISL over L {{1,10,50,100}}: {isl:?} dB; PM bits/chirp: {bits:?}"),
    );
}

/// One range-estimation trial: echo of a random-IM chirp plus AWGN,
/// deramped and peak-interpolated on the configured grid.
fn range_trial(
    cb: &Codebook,
    grid: &RangeGrid,
    carrier: f64,
    r_eff: f64,
    snr_db: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = rng.random_range(0..cb.used_pairs());
    let (b, f) = cb.pair(pair);
    let params = ChirpParams {
        center_freq: f,
        bandwidth: b,
        duration: cb.chirp_duration(),
        segment_phases: vec![0.0; cb.segments_per_chirp()],
        polarization: Polarization::V,
        sweep: SweepDir::Up,
    };
    let tx = synth_chirp(&params, cb).unwrap();
    let echo = apply_radar_echo(
        &tx,
        &[RadarTarget {
            range: r_eff,
            velocity: 0.0,
            rcs_gain_db: 0.0,
        }],
        carrier,
        cb.chirp_duration(),
        f64::INFINITY,
        0,
        0.0,
    )
    .unwrap();
    let noisy = add_awgn(&echo, snr_db, seed ^ 0xA5A5).unwrap();
    let s = deramp(&noisy, &tx).unwrap();
    // Hann taper for sidelobe control, then a continuous DTFT peak search
    let n = s.len();
    let windowed = {
        let mut i = 0usize;
        s.map(|v| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            i += 1;
            v * w
        })
    };
    let rows = range_align(&[windowed.clone()], &[params.clone()], grid).unwrap();
    let mut coarse = 0usize;
    for (i, v) in rows[0].iter().enumerate().skip(1) {
        if v.norm_sqr() > rows[0][coarse].norm_sqr() {
            coarse = i;
        }
    }
    refine_peak_dtft(&windowed, &params, grid, coarse)
}

#[test]
fn criterion_7_crlb_rmse_ordering() {
    use rayon::prelude::*;
    let bands: Vec<(&str, Codebook, f64)> = vec![
        (
            "B1",
            Codebook::build(&CodebookConfig {
                band_min: 40.0e6,
                band_max: 55.0e6,
                delta_b: 2.0e6,
                delta_f: 2.0e6,
                explicit_bandwidths: None,
                explicit_center_freqs: None,
                psk_order: 1,
                segments_per_chirp: 1,
                chirp_duration: 50.0e-6,
                sample_rate: 62.5e6,
                phase_smoothing: None,
            })
            .unwrap(),
            2.4e9,
        ),
        (
            "B2",
            Codebook::build(&CodebookConfig {
                band_min: 150.0e6,
                band_max: 250.0e6,
                delta_b: 3.0e6,
                delta_f: 3.0e6,
                explicit_bandwidths: None,
                explicit_center_freqs: None,
                psk_order: 1,
                segments_per_chirp: 1,
                chirp_duration: 50.0e-6,
                sample_rate: 350.0e6,
                phase_smoothing: None,
            })
            .unwrap(),
            24.0e9,
        ),
    ];
    let snrs = [10.0, 20.0, 30.0];
    let trials = 200u64;
    let mut ok = true;
    let mut detail = String::new();
    let mut rmse_by_band = Vec::new();
    for (name, cb, carrier) in &bands {
        let fs = cb.sample_rate();
        let b_mean = cb.bandwidth_options().iter().sum::<f64>()
            / cb.bandwidth_options().len() as f64;
        let spacing = SPEED_OF_LIGHT / (4.0 * b_mean);
        let r_eff = (two_way_delay(100.37) * fs).round() / fs * SPEED_OF_LIGHT / 2.0;
        let start = r_eff - 20.0;
        let count = (40.0 / spacing).ceil() as usize;
        let grid = RangeGrid::new(start, spacing, count).unwrap();
        let mut rmses = Vec::new();
        for &snr in &snrs {
            let estimates: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| range_trial(cb, &grid, *carrier, r_eff, snr, 1000 + t))
                .collect();
            let mse = estimates
                .iter()
                .map(|e| (e - r_eff) * (e - r_eff))
                .sum::<f64>()
                / trials as f64;
            let rmse = mse.sqrt();
            let report = crlb_range(&CrlbConfig::new(
                10f64.powf(snr / 10.0),
                cb.samples_per_chirp(),
                cb.bandwidth_options().to_vec(),
            ))
            .unwrap();
            ok &= rmse >= report.rcrlb;
            rmses.push(rmse);
            detail.push_str(&format!(
                "{name}@{snr:.0}dB: RMSE {:.4} m >= RCRLB {:.6} m; ",
                rmse, report.rcrlb
            ));
        }
        ok &= rmses.windows(2).all(|w| w[1] < w[0]);
        rmse_by_band.push(rmses);
    }
    for k in 0..snrs.len() {
        ok &= rmse_by_band[1][k] < rmse_by_band[0][k];
    }
    verdict(7, "RMSE >= RCRLB ordering", ok, &detail);
}

#[test]
fn criterion_8_oracle_equivalences() {
    let mut ok = true;
    let mut detail = String::new();

    // dtft_at vs naive double-loop summation, 1e-12
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let fs = 2.0e6;
    let x = IqBuffer::new(
        (0..16)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
        fs,
    )
    .unwrap();
    let freqs: Vec<f64> = (0..5).map(|_| rng.random_range(-fs / 2.0..fs / 2.0)).collect();
    let got = dtft_at(&x, &freqs).unwrap();
    let mut dtft_ok = true;
    for (&f, g) in freqs.iter().zip(got.iter()) {
        let mut oracle = Complex64::new(0.0, 0.0);
        for (n, &s) in x.samples().iter().enumerate() {
            let ang = -2.0 * PI * f * n as f64 / fs;
            oracle += s * Complex64::new(ang.cos(), ang.sin());
        }
        dtft_ok &= (g - oracle).norm() <= 1e-12 * oracle.norm().max(1.0);
    }
    ok &= dtft_ok;
    detail.push_str(&format!("dtft-vs-naive {dtft_ok}; "));

    // convolution vs schoolbook accumulation, 1e-12
    let a: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<Complex64> = (0..5)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut oracle = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            oracle[i + j] += ai * bj;
        }
    }
    let conv = convolve_linear(&a, &b, ConvMode::Full).unwrap();
    let conv_ok = conv
        .iter()
        .zip(oracle.iter())
        .all(|(g, o)| (g - o).norm() <= 1e-12);
    ok &= conv_ok;
    detail.push_str(&format!("conv-vs-schoolbook {conv_ok}; "));

    // PM demodulation routes agree exactly on noisy inputs
    let cb = Codebook::build(&CodebookConfig {
        band_min: 0.0,
        band_max: 0.0,
        delta_b: 0.0,
        delta_f: 0.0,
        explicit_bandwidths: Some(vec![44.0e6, 50.0e6]),
        explicit_center_freqs: Some(vec![-2.0e6, 2.0e6]),
        psk_order: 8,
        segments_per_chirp: 10,
        chirp_duration: 10.0e-6,
        sample_rate: 62.5e6,
        phase_smoothing: Some(0.2),
    })
    .unwrap();
    let receiver = Receiver::new(cb.clone(), 6.0e-6).unwrap();
    let mut routes_ok = true;
    for t in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + t);
        let phases: Vec<f64> = (0..10)
            .map(|_| 2.0 * PI * rng.random_range(0..8) as f64 / 8.0)
            .collect();
        let (b, f) = cb.pair(rng.random_range(0..cb.used_pairs()));
        let params = ChirpParams {
            center_freq: f,
            bandwidth: b,
            duration: cb.chirp_duration(),
            segment_phases: phases,
            polarization: Polarization::V,
            sweep: SweepDir::Up,
        };
        let chirp = synth_chirp(&params, &cb).unwrap();
        let noisy = add_awgn(&chirp, 5.0, 900 + t).unwrap();
        let (route_b, _) = receiver.demod_pm(&noisy, 0, 0);
        let route_a = receiver.demod_pm_reference_bank(&noisy, 0, 0);
        routes_ok &= route_a == route_b;
    }
    ok &= routes_ok;
    detail.push_str(&format!("pm-routes-agree {routes_ok}; "));

    // exhaustive noiseless IM sweep over a fully-used codebook
    let cb32 = Codebook::build(&CodebookConfig {
        band_min: 0.0,
        band_max: 0.0,
        delta_b: 0.0,
        delta_f: 0.0,
        explicit_bandwidths: Some((0..8).map(|k| 40.0e6 + 2.0e6 * k as f64).collect()),
        explicit_center_freqs: Some(vec![-3.0e6, -1.0e6, 1.0e6, 3.0e6]),
        psk_order: 1,
        segments_per_chirp: 1,
        chirp_duration: 10.0e-6,
        sample_rate: 62.5e6,
        phase_smoothing: None,
    })
    .unwrap();
    let rx32 = Receiver::new(cb32.clone(), 6.0e-6).unwrap();
    let mut sweep_ok = true;
    for idx in 0..cb32.pair_count() {
        let (b, f) = cb32.pair(idx);
        let params = ChirpParams {
            center_freq: f,
            bandwidth: b,
            duration: cb32.chirp_duration(),
            segment_phases: vec![0.0],
            polarization: Polarization::V,
            sweep: SweepDir::Up,
        };
        let chirp = synth_chirp(&params, &cb32).unwrap();
        let (bi, fi, _) = rx32.demod_im(&chirp);
        sweep_ok &= cb32.pair_index(bi, fi) == idx;
    }
    ok &= sweep_ok;
    detail.push_str(&format!("im-exhaustive-sweep {sweep_ok} (32/32)"));

    verdict(8, "oracle equivalences", ok, &detail);
}

#[test]
fn criterion_9_determinism() {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
band = "B1"
seed = 77

[waveform]
chirp_duration = 10e-6
segments = 5
psk_order = 4
frame_chirps = 3

[channel]
los_doppler = 1200.0

[radar]
n_chirps = 8
range_max = 90.0

[[radar.targets]]
range = 60.0
velocity = 10.0

[sim]
snr_db = [10.0, 20.0]
trials = 20
"#,
    )
    .unwrap();
    let link_of = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| link_rows_to_csv(&run_link_sweep(&cfg).unwrap()))
    };
    let a = link_of(1);
    let b = link_of(4);
    let c = link_of(4);
    let link_ok = a == b && b == c;
    let m1 = map_to_csv(&run_radar_scene(&cfg).unwrap().corrected);
    let m2 = map_to_csv(&run_radar_scene(&cfg).unwrap().corrected);
    let radar_ok = m1 == m2;
    verdict(
        9,
        "determinism across runs and thread counts",
        link_ok && radar_ok,
        &format!(
            "link CSV identical over 1/4/4 threads: {link_ok}; radar map CSV identical: {radar_ok}"
        ),
    );
}
