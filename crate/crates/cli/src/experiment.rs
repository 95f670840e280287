//! Grid runner: every mask crossed with every variant, artifacts keyed by
//! cell so concurrent cells never touch the same file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::Array2;

use sake_pks::kspace::{apply_mask, zero_filled_recon, KSpaceVolume, SamplingMask};
use sake_pks::masks::generate;
use sake_pks::metrics::evaluate;
use sake_pks::phantom::{gen_coil_maps, gen_phantom, simulate_acquisition, Contrast};
use sake_pks::pks::{sake_pks, sake_pks_multi_aux, ContrastSet, PartitionAxis, PartitionSpec};
use sake_pks::raw::{read_raw, write_raw};
use sake_pks::sake::{sake_reconstruct, SakeConfig};
use sake_pks::viz::{export_mask_png, export_png, ExportMode};

use crate::config::{format_r, parse_axis, ExperimentConfig, VariantSection};

pub struct ResultRow {
    pub variant: String,
    pub mask: String,
    pub r: String,
    pub seed: u64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub total_time_s: f64,
    pub single_time_s: f64,
}

pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<String>,
    pub csv_path: PathBuf,
}

/// Fully sampled k-space per contrast plus the dims they share.
pub struct SourceData {
    volumes: Vec<(Contrast, KSpaceVolume)>,
}

impl SourceData {
    pub fn volume(&self, c: Contrast) -> Result<&KSpaceVolume> {
        self.volumes
            .iter()
            .find(|(k, _)| *k == c)
            .map(|(_, v)| v)
            .ok_or_else(|| anyhow!("no data for contrast '{c}'"))
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let (_, v) = self.volumes.first().expect("source holds at least the target");
        (v.n_coils(), v.rows(), v.cols())
    }
}

/// Contrasts a config actually touches: the target plus every auxiliary any
/// variant names.
fn needed_contrasts(cfg: &ExperimentConfig) -> Result<Vec<Contrast>> {
    let mut need = vec![cfg.target()?];
    for v in &cfg.variants {
        for a in v.auxiliaries()? {
            if !need.contains(&a) {
                need.push(a);
            }
        }
    }
    Ok(need)
}

pub fn load_source(cfg: &ExperimentConfig) -> Result<SourceData> {
    let need = needed_contrasts(cfg)?;
    let mut volumes = Vec::new();

    if let Some(spec) = cfg.build_phantom_spec().context("stage: data source")? {
        let ph = gen_phantom(&spec).context("stage: phantom generation")?;
        let maps_seed = cfg.phantom.as_ref().and_then(|p| p.maps_seed).unwrap_or(spec.seed);
        let maps = gen_coil_maps(spec.size, spec.n_coils, maps_seed)
            .context("stage: coil map generation")?;
        let full = SamplingMask::full(spec.size, spec.size)?;
        for c in need {
            let vol = simulate_acquisition(ph.contrast(c), &maps, &full)
                .with_context(|| format!("stage: acquisition of {c}"))?;
            volumes.push((c, vol));
        }
    } else {
        let inputs = cfg.inputs.as_ref().expect("validated: phantom or inputs");
        for c in need {
            let path = inputs
                .path_for(c)
                .ok_or_else(|| anyhow!("stage: data source: config names no file for '{c}'"))?;
            let (vol, _) = read_raw(path)
                .with_context(|| format!("stage: reading {} for '{c}'", path.display()))?;
            volumes.push((c, vol));
        }
        let dims: Vec<_> =
            volumes.iter().map(|(_, v)| (v.n_coils(), v.rows(), v.cols())).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            bail!("stage: data source: input volumes disagree on dims: {dims:?}");
        }
    }
    Ok(SourceData { volumes })
}

struct Cell<'a> {
    variant: &'a VariantSection,
    mask: SamplingMask,
    mask_label: String,
    r_label: String,
    mask_seed: u64,
}

fn cell_key(c: &Cell) -> String {
    format!("{}_{}_{}", c.variant.label(), c.mask_label, c.r_label)
}

/// Reconstructs one grid cell and writes its artifacts. Returns the CSV row.
fn run_cell(
    cell: &Cell,
    data: &SourceData,
    target: Contrast,
    truth: &Array2<f64>,
    solver: &SakeConfig,
    out: &Path,
) -> Result<ResultRow> {
    let full_target = data.volume(target)?;
    let masked = apply_mask(full_target, &cell.mask).context("stage: masking")?;
    let (_, rows, cols) = data.dims();

    let t0 = Instant::now();
    let (recon, objects) = match cell.variant {
        VariantSection::ZeroFilled { .. } => (masked.clone(), 1usize),
        VariantSection::Sake { .. } => {
            let (vol, _) =
                sake_reconstruct(&masked, &cell.mask, solver).context("stage: solve")?;
            (vol, 1)
        }
        VariantSection::Pks { axis, blocks, overlap, reverse, .. } => {
            let axis = parse_axis(axis)?;
            let extent = match axis {
                PartitionAxis::Row => rows,
                PartitionAxis::Column => cols,
            };
            let spec = PartitionSpec::equal(axis, *blocks, extent, *overlap)
                .context("stage: partition")?;
            let aux: Vec<(String, KSpaceVolume)> = cell
                .variant
                .auxiliaries()?
                .into_iter()
                .map(|c| Ok((c.to_string(), data.volume(c)?.clone())))
                .collect::<Result<_>>()?;
            let two_aux_half_split = aux.len() == 2 && *blocks == 2;
            let cs = ContrastSet::new(masked.clone(), cell.mask.clone(), aux)
                .context("stage: contrast set")?;
            let (vol, reports) = if two_aux_half_split {
                sake_pks_multi_aux(&cs, &spec, solver, *reverse)
            } else {
                sake_pks(&cs, &spec, solver)
            }
            .context("stage: solve")?;
            (vol, reports.len())
        }
    };
    let total_time_s = t0.elapsed().as_secs_f64();

    let mag = zero_filled_recon(&recon).context("stage: coil combine")?;
    let metrics = evaluate(&mag, truth).context("stage: metrics")?;

    let key = cell_key(cell);
    let peak = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = Array2::from_shape_fn(truth.dim(), |ix| mag[ix] - truth[ix]);
    export_png(&mag, out.join(format!("{key}_mag.png")), ExportMode::Magnitude)
        .context("stage: png export")?;
    export_png(
        &err,
        out.join(format!("{key}_err.png")),
        ExportMode::ErrorMap { scale: 3.0 / peak },
    )
    .context("stage: png export")?;
    write_raw(
        out.join(format!("{key}_recon.raw")),
        &recon,
        &[
            ("variant".into(), cell.variant.label()),
            ("mask".into(), cell.mask_label.clone()),
            ("r".into(), cell.r_label.clone()),
            ("mask_seed".into(), cell.mask_seed.to_string()),
        ],
    )
    .context("stage: raw export")?;

    Ok(ResultRow {
        variant: cell.variant.label(),
        mask: cell.mask_label.clone(),
        r: cell.r_label.clone(),
        seed: cell.mask_seed,
        psnr_db: metrics.psnr_db,
        ssim: metrics.ssim,
        total_time_s,
        single_time_s: total_time_s / objects as f64,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("stage: creating output dir {}", out.display()))?;
    let target = cfg.target()?;
    let data = load_source(cfg)?;
    let (nc, rows, cols) = data.dims();
    let solver = cfg.solver.build(nc)?;

    let truth_vol = data.volume(target)?;
    let truth = zero_filled_recon(truth_vol).context("stage: truth image")?;
    write_raw(
        out.join(format!("truth_{target}.raw")),
        truth_vol,
        &[("contrast".into(), target.to_string())],
    )
    .context("stage: raw export")?;
    export_png(&truth, out.join(format!("truth_{target}_mag.png")), ExportMode::Magnitude)
        .context("stage: png export")?;

    let fallback_seed = cfg.seed.unwrap_or(0);
    let mut cells = Vec::new();
    for m in &cfg.masks {
        let spec = m.build(rows, cols, fallback_seed)?;
        let mask = generate(&spec)
            .with_context(|| format!("stage: mask generation {} R={}", m.family, m.r))?;
        let mask_label = m.family.to_ascii_lowercase();
        let r_label = format_r(m.r);
        export_mask_png(&mask, out.join(format!("mask_{mask_label}_{r_label}.png")))
            .context("stage: png export")?;
        for v in &cfg.variants {
            cells.push(Cell {
                variant: v,
                mask: mask.clone(),
                mask_label: mask_label.clone(),
                r_label: r_label.clone(),
                mask_seed: spec.seed,
            });
        }
    }

    let workers = cfg.workers.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("stage: worker pool")?;
    let outcomes: Vec<Result<ResultRow>> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|cell| run_cell(cell, &data, target, &truth, &solver, out))
            .collect()
    });

    let mut rows_out = Vec::new();
    let mut failures = Vec::new();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(row) => rows_out.push(row),
            Err(e) => {
                let line = format!("{}: {e:#}", cell_key(cell));
                log::error!("{line}");
                failures.push(line);
            }
        }
    }

    let csv_path = out.join("results.csv");
    write_csv(&csv_path, &rows_out)?;
    if !failures.is_empty() {
        std::fs::write(out.join("failures.log"), failures.join("\n") + "\n")
            .context("stage: failure log")?;
    }
    Ok(RunSummary { rows: rows_out, failures, csv_path })
}

/// One cell of the grid, for the `recon` subcommand.
pub fn run_single(
    cfg: &ExperimentConfig,
    mask_idx: usize,
    variant_idx: usize,
    out: &Path,
) -> Result<ResultRow> {
    let m = cfg
        .masks
        .get(mask_idx)
        .ok_or_else(|| anyhow!("mask index {mask_idx} out of range ({})", cfg.masks.len()))?;
    let variant = cfg.variants.get(variant_idx).ok_or_else(|| {
        anyhow!("variant index {variant_idx} out of range ({})", cfg.variants.len())
    })?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("stage: creating output dir {}", out.display()))?;
    let target = cfg.target()?;
    let data = load_source(cfg)?;
    let (nc, rows, cols) = data.dims();
    let solver = cfg.solver.build(nc)?;
    let truth = zero_filled_recon(data.volume(target)?).context("stage: truth image")?;

    let spec = m.build(rows, cols, cfg.seed.unwrap_or(0))?;
    let mask = generate(&spec)
        .with_context(|| format!("stage: mask generation {} R={}", m.family, m.r))?;
    let cell = Cell {
        variant,
        mask,
        mask_label: m.family.to_ascii_lowercase(),
        r_label: format_r(m.r),
        mask_seed: spec.seed,
    };
    run_cell(&cell, &data, target, &truth, &solver, out)
}

fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("stage: csv at {}", path.display()))?;
    w.write_record([
        "variant",
        "mask",
        "R",
        "seed",
        "psnr_db",
        "ssim",
        "total_time_s",
        "single_time_s",
    ])?;
    for r in rows {
        w.write_record([
            r.variant.as_str(),
            r.mask.as_str(),
            r.r.as_str(),
            &r.seed.to_string(),
            &format!("{:.4}", r.psnr_db),
            &format!("{:.6}", r.ssim),
            &format!("{:.6}", r.total_time_s),
            &format!("{:.6}", r.single_time_s),
        ])?;
    }
    w.flush().context("stage: csv flush")?;
    Ok(())
}
