//! Command-line harness around the reconstruction library.
//!
//! Exit codes: 0 on success, 2 for usage problems (bad flags, unreadable or
//! invalid config), 1 for runtime failures; runtime diagnostics name the
//! failing stage.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use sake_pks::kspace::{zero_filled_recon, SamplingMask};
use sake_pks::masks::{generate, DensityProfile, MaskSpec};
use sake_pks::metrics::evaluate;
use sake_pks::phantom::{gen_coil_maps, gen_phantom, simulate_acquisition, Contrast, PhantomSpec};
use sake_pks::raw::{read_raw, write_raw};
use sake_pks::viz::{export_mask_png, export_png, ExportMode};

use sake_pks_cli::config::{self, ExperimentConfig};
use sake_pks_cli::experiment;

#[derive(Parser)]
#[command(name = "sake-pks-cli", version, about = "Calibrationless reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write fully sampled multi-contrast k-space volumes for a synthetic anatomy.
    GenPhantom {
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        coils: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate one sampling mask and write it as a PNG.
    GenMask {
        #[arg(long)]
        family: String,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        density_power: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single mask x variant cell from a config.
    Recon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        mask: usize,
        #[arg(long, default_value_t = 0)]
        variant: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full experiment grid from a config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare two raw k-space volumes in image space (second file is truth).
    Metrics { recon: PathBuf, truth: PathBuf },
}

/// Usage-class failure (unreadable or invalid config): exit 2 like bad flags.
struct UsageError(anyhow::Error);

fn load_config(
    path: &PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> std::result::Result<ExperimentConfig, UsageError> {
    let mut cfg = ExperimentConfig::load(path).map_err(UsageError)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    if out.is_some() {
        cfg.output_dir = out;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn resolve_out(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn gen_phantom_cmd(
    size: usize,
    coils: usize,
    seed: u64,
    noise_std: f64,
    out: &PathBuf,
) -> Result<()> {
    let mut spec = PhantomSpec::new(size, coils, seed).context("stage: phantom spec")?;
    spec.noise_std = noise_std;
    spec.validate().context("stage: phantom spec")?;
    let ph = gen_phantom(&spec).context("stage: phantom generation")?;
    let maps = gen_coil_maps(size, coils, seed).context("stage: coil map generation")?;
    let full = SamplingMask::full(size, size)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("stage: creating output dir {}", out.display()))?;
    for c in [Contrast::T1, Contrast::T2, Contrast::Pd] {
        let vol = simulate_acquisition(ph.contrast(c), &maps, &full)
            .with_context(|| format!("stage: acquisition of {c}"))?;
        let path = out.join(format!("{c}.raw"));
        write_raw(
            &path,
            &vol,
            &[("contrast".into(), c.to_string()), ("seed".into(), seed.to_string())],
        )
        .context("stage: raw export")?;
        let mag = zero_filled_recon(&vol).context("stage: coil combine")?;
        export_png(&mag, out.join(format!("{c}_mag.png")), ExportMode::Magnitude)
            .context("stage: png export")?;
        println!("{}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn gen_mask_cmd(
    family: &str,
    r: f64,
    size: usize,
    rows: Option<usize>,
    cols: Option<usize>,
    seed: u64,
    density_power: f64,
    out: Option<PathBuf>,
) -> Result<()> {
    let fam = config::parse_family(family)?;
    let spec = MaskSpec::new(
        fam,
        r,
        rows.unwrap_or(size),
        cols.unwrap_or(size),
        seed,
        DensityProfile::VariableDensity { power: density_power },
    )
    .context("stage: mask spec")?;
    let mask = generate(&spec).context("stage: mask generation")?;
    let path = out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "mask_{}_{}_s{seed}.png",
            family.to_ascii_lowercase(),
            config::format_r(r)
        ))
    });
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("stage: creating output dir {}", dir.display()))?;
    }
    export_mask_png(&mask, &path).context("stage: png export")?;
    println!(
        "{} measured_R={:.3} sampled={}/{}",
        path.display(),
        mask.measured_r(),
        mask.ones_count(),
        spec.rows * spec.cols
    );
    Ok(())
}

fn metrics_cmd(recon: &PathBuf, truth: &PathBuf) -> Result<()> {
    let (rv, _) = read_raw(recon)
        .with_context(|| format!("stage: reading {}", recon.display()))?;
    let (tv, _) = read_raw(truth)
        .with_context(|| format!("stage: reading {}", truth.display()))?;
    let rm = zero_filled_recon(&rv).context("stage: coil combine")?;
    let tm = zero_filled_recon(&tv).context("stage: coil combine")?;
    let m = evaluate(&rm, &tm).context("stage: metrics")?;
    println!("psnr_db={:.4} ssim={:.6}", m.psnr_db, m.ssim);
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), (u8, anyhow::Error)> {
    let runtime = |e: anyhow::Error| (1u8, e);
    match cli.cmd {
        Cmd::GenPhantom { size, coils, seed, noise_std, out } => {
            gen_phantom_cmd(size, coils, seed, noise_std, &out).map_err(runtime)
        }
        Cmd::GenMask { family, r, size, rows, cols, seed, density_power, out } => {
            gen_mask_cmd(&family, r, size, rows, cols, seed, density_power, out)
                .map_err(runtime)
        }
        Cmd::Recon { config, mask, variant, out, seed } => {
            let cfg = load_config(&config, seed, out, None).map_err(|e| (2u8, e.0))?;
            let dir = resolve_out(&cfg);
            let row = experiment::run_single(&cfg, mask, variant, &dir).map_err(runtime)?;
            println!(
                "variant={} mask={} R={} psnr_db={:.4} ssim={:.6}",
                row.variant, row.mask, row.r, row.psnr_db, row.ssim
            );
            Ok(())
        }
        Cmd::Experiment { config, out, seed, workers } => {
            let cfg = load_config(&config, seed, out, workers).map_err(|e| (2u8, e.0))?;
            let dir = resolve_out(&cfg);
            let summary = experiment::run_experiment(&cfg, &dir).map_err(runtime)?;
            for row in &summary.rows {
                println!(
                    "variant={} mask={} R={} psnr_db={:.4} ssim={:.6}",
                    row.variant, row.mask, row.r, row.psnr_db, row.ssim
                );
            }
            println!(
                "{} rows -> {} ({} failed)",
                summary.rows.len(),
                summary.csv_path.display(),
                summary.failures.len()
            );
            Ok(())
        }
        Cmd::Metrics { recon, truth } => metrics_cmd(&recon, &truth).map_err(runtime),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
