//! End-to-end tests of the `isacsim` binary: exit codes, output manifests,
//! and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isacsim"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(
        &path,
        r#"
band = "B1"
seed = 3

[waveform]
chirp_duration = 10e-6
segments = 4
psk_order = 4
frame_chirps = 3

[radar]
n_chirps = 8
range_max = 90.0

[[radar.targets]]
range = 40.0
velocity = 0.0

[sim]
snr_db = [10.0, 20.0]
trials = 10

[sweep]
segments = [1, 4]
"#,
    )
    .unwrap();
    path
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_fails_nonzero_with_message() {
    let out = bin()
        .args(["run-link", "--config", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.toml"), "stderr: {stderr}");
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "band = \"B1\"\nbogus_key = 1\n").unwrap();
    let out = bin()
        .args(["run-link", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus_key"), "stderr: {stderr}");
}

#[test]
fn run_link_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["run-link", "--trials", "10", "--seed", "7"])
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(out_a.join("link.csv")).unwrap();
    let b = fs::read(out_b.join("link.csv")).unwrap();
    assert_eq!(a, b, "link.csv differs between identical runs");
}

#[test]
fn metrics_writes_all_four_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("m");
    let status = bin()
        .arg("metrics")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["isl.csv", "oob.csv", "crlb.csv", "af.csv"] {
        let content = fs::read_to_string(out.join(name)).unwrap();
        assert!(content.lines().count() >= 2, "{name} is empty");
    }
}

#[test]
fn synth_writes_readable_captures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("synth");
    let status = bin()
        .arg("synth")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for pol in ["tx_v.iq", "tx_h.iq"] {
        let (buf, sidecar) = isac_core::capture::read_iq(&out.join(pol)).unwrap();
        assert_eq!(buf.len(), sidecar.sample_count);
        assert_eq!(sidecar.sample_rate, 62.5e6);
        // 3 chirps of 625 samples
        assert_eq!(buf.len(), 3 * 625);
    }
    assert!(out.join("tx_bits.txt").exists());
}

#[test]
fn run_radar_writes_maps_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("r");
    let status = bin()
        .arg("run-radar")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "radar_corrected.csv",
        "radar_naive.csv",
        "radar_axes.csv",
        "detections.csv",
        "radar_summary.csv",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let detections = fs::read_to_string(out.join("detections.csv")).unwrap();
    assert!(detections.lines().count() >= 2, "no detections recorded");
}

#[test]
fn sweep_emits_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("s");
    let status = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    // header + 2 segment values
    assert_eq!(sweep.lines().count(), 3);
}
