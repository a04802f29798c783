//! `isacsim` — scenario driver for the IM/PM-FMCW joint radar-communication
//! simulator. Every subcommand reads a TOML scenario file, runs
//! deterministically under the configured (or overridden) seed, and writes
//! CSV tables or IQ captures into the output directory.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;

use isac_core::capture::write_iq;
use isac_core::config::ScenarioConfig;
use isac_core::scenario::{
    detections_to_csv, link_rows_to_csv, map_axes_to_csv, map_to_csv, run_link_sweep, run_metrics,
    run_radar_scene, run_sweep,
};
use isac_core::waveform::build_frame;

#[derive(Parser)]
#[command(name = "isacsim", version, about = "IM/PM-FMCW ISAC link and radar simulator")]
struct Cli {
    /// Scenario configuration file (TOML).
    #[arg(long, global = true, default_value = "scenario.toml")]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV tables and captures.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one frame of random data and write V/H IQ captures.
    Synth,
    /// Run the link-level Monte Carlo sweep and write link.csv.
    RunLink,
    /// Process the configured radar scene with both pipelines and write the
    /// range-Doppler maps, detections, and summary.
    RunRadar,
    /// Emit the sensing/spectral metric tables (isl.csv, oob.csv, crlb.csv,
    /// af.csv).
    Metrics,
    /// Sweep waveform parameters (L, M, T_c, beta) and write sweep.csv.
    Sweep,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = ScenarioConfig::load(&cli.config)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            anyhow::bail!("--trials must be >= 1");
        }
        cfg.trials = trials;
    }
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))?;

    match cli.command {
        Command::Synth => {
            let cb = cfg.codebook()?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let bits: Vec<bool> = (0..(cfg.frame_chirps - 1) * cb.bits_per_codeword())
                .map(|_| rng.random())
                .collect();
            let frame = build_frame(&bits, &cb, cfg.frame_chirps)?;
            let v_path = cli.out.join("tx_v.iq");
            let h_path = cli.out.join("tx_h.iq");
            write_iq(&v_path, &frame.tx_v, "V")?;
            write_iq(&h_path, &frame.tx_h, "H")?;
            let bits_text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            fs::write(cli.out.join("tx_bits.txt"), bits_text)?;
            println!(
                "wrote {} and {} ({} chirps, {} bits)",
                v_path.display(),
                h_path.display(),
                cfg.frame_chirps,
                bits.len()
            );
        }
        Command::RunLink => {
            let rows = run_link_sweep(&cfg)?;
            let path = cli.out.join("link.csv");
            fs::write(&path, link_rows_to_csv(&rows))?;
            println!("wrote {} ({} SNR points)", path.display(), rows.len());
        }
        Command::RunRadar => {
            let result = run_radar_scene(&cfg)?;
            fs::write(cli.out.join("radar_corrected.csv"), map_to_csv(&result.corrected))?;
            fs::write(cli.out.join("radar_naive.csv"), map_to_csv(&result.naive))?;
            fs::write(cli.out.join("radar_axes.csv"), map_axes_to_csv(&result.corrected))?;
            fs::write(
                cli.out.join("detections.csv"),
                detections_to_csv(&result.detections),
            )?;
            let mut summary = String::from("metric,value\n");
            summary.push_str(&format!("corrected_spread_bins,{}\n", result.corrected_spread));
            summary.push_str(&format!("naive_spread_bins,{}\n", result.naive_spread));
            if let Some(rmse) = result.range_rmse {
                summary.push_str(&format!("range_rmse_m,{rmse}\n"));
            }
            fs::write(cli.out.join("radar_summary.csv"), summary)?;
            println!(
                "wrote radar maps to {} ({} detections, naive spread {} bins, corrected {})",
                cli.out.display(),
                result.detections.len(),
                result.naive_spread,
                result.corrected_spread
            );
        }
        Command::Metrics => {
            let tables = run_metrics(&cfg)?;
            fs::write(cli.out.join("isl.csv"), &tables.isl_csv)?;
            fs::write(cli.out.join("oob.csv"), &tables.oob_csv)?;
            fs::write(cli.out.join("crlb.csv"), &tables.crlb_csv)?;
            fs::write(cli.out.join("af.csv"), &tables.af_csv)?;
            println!("wrote isl.csv, oob.csv, crlb.csv, af.csv to {}", cli.out.display());
        }
        Command::Sweep => {
            let csv = run_sweep(&cfg)?;
            let path = cli.out.join("sweep.csv");
            fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
