//! Experiment config schema and validation.
//!
//! A config names a data source (synthetic phantom or raw files per
//! contrast), a list of sampling masks, solver settings, and a list of
//! reconstruction variants. The experiment runner forms the full
//! mask x variant grid.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use sake_pks::hankel::{default_rank, HankelConfig};
use sake_pks::masks::{DensityProfile, MaskFamily, MaskSpec};
use sake_pks::phantom::{Contrast, PhantomSpec};
use sake_pks::pks::PartitionAxis;
use sake_pks::sake::SakeConfig;

fn default_target() -> String {
    "t2".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where CSV, PNG, and raw artifacts land. `--out` overrides.
    pub output_dir: Option<PathBuf>,
    /// Fallback seed for sections that do not carry their own.
    pub seed: Option<u64>,
    /// Grid cells run concurrently up to this many workers (default 1).
    pub workers: Option<usize>,
    /// Contrast being under-sampled and reconstructed.
    #[serde(default = "default_target")]
    pub target: String,
    pub phantom: Option<PhantomSection>,
    pub inputs: Option<InputsSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub masks: Vec<MaskSection>,
    #[serde(default)]
    pub variants: Vec<VariantSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    pub size: usize,
    pub n_coils: usize,
    pub seed: Option<u64>,
    /// Coil maps default to the phantom seed so one knob moves both.
    pub maps_seed: Option<u64>,
    #[serde(default)]
    pub noise_std: f64,
}

/// Fully sampled k-space volumes on disk, one per contrast.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSection {
    pub t1: Option<PathBuf>,
    pub t2: Option<PathBuf>,
    pub pd: Option<PathBuf>,
}

impl InputsSection {
    pub fn path_for(&self, c: Contrast) -> Option<&PathBuf> {
        match c {
            Contrast::T1 => self.t1.as_ref(),
            Contrast::T2 => self.t2.as_ref(),
            Contrast::Pd => self.pd.as_ref(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub win_rows: Option<usize>,
    pub win_cols: Option<usize>,
    pub rank: Option<usize>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
}

impl SolverSection {
    pub fn build(&self, n_coils: usize) -> Result<SakeConfig> {
        let wr = self.win_rows.unwrap_or(6);
        let wc = self.win_cols.unwrap_or(6);
        let rank = self.rank.unwrap_or_else(|| default_rank(n_coils, wr, wc));
        let hankel = HankelConfig::new(wr, wc, rank).context("solver window")?;
        let mut cfg = SakeConfig::new(hankel);
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        if let Some(t) = self.rel_tol {
            cfg.rel_tol = t;
        }
        cfg.validate().context("solver settings")?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    pub family: String,
    pub r: f64,
    pub seed: Option<u64>,
    /// Default: the data dims.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub density_power: Option<f64>,
}

impl MaskSection {
    pub fn family(&self) -> Result<MaskFamily> {
        parse_family(&self.family)
    }

    pub fn build(&self, rows: usize, cols: usize, fallback_seed: u64) -> Result<MaskSpec> {
        let density = match self.density_power {
            Some(p) => DensityProfile::VariableDensity { power: p },
            None => DensityProfile::variable(),
        };
        MaskSpec::new(
            self.family()?,
            self.r,
            self.rows.unwrap_or(rows),
            self.cols.unwrap_or(cols),
            self.seed.unwrap_or(fallback_seed),
            density,
        )
        .with_context(|| format!("mask {} R={}", self.family, self.r))
    }
}

pub fn parse_family(s: &str) -> Result<MaskFamily> {
    match s.to_ascii_lowercase().as_str() {
        "random2d" => Ok(MaskFamily::Random2D),
        "cartesian1d" => Ok(MaskFamily::Cartesian1D),
        "poisson2d" => Ok(MaskFamily::Poisson2D),
        other => bail!("unknown mask family '{other}' (random2d, cartesian1d, poisson2d)"),
    }
}

pub fn parse_axis(s: &str) -> Result<PartitionAxis> {
    match s.to_ascii_lowercase().as_str() {
        "row" => Ok(PartitionAxis::Row),
        "column" | "col" => Ok(PartitionAxis::Column),
        other => bail!("unknown partition axis '{other}' (row, column)"),
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VariantSection {
    ZeroFilled {
        label: Option<String>,
    },
    Sake {
        label: Option<String>,
    },
    Pks {
        label: Option<String>,
        #[serde(default = "default_axis")]
        axis: String,
        blocks: usize,
        #[serde(default)]
        overlap: usize,
        auxiliaries: Vec<String>,
        #[serde(default)]
        reverse: bool,
    },
}

fn default_axis() -> String {
    "row".into()
}

impl VariantSection {
    /// Stable cell label used in CSV rows and artifact file names.
    pub fn label(&self) -> String {
        match self {
            VariantSection::ZeroFilled { label } => {
                label.clone().unwrap_or_else(|| "zero_filled".into())
            }
            VariantSection::Sake { label } => label.clone().unwrap_or_else(|| "sake".into()),
            VariantSection::Pks { label, axis, blocks, overlap, auxiliaries, .. } => {
                label.clone().unwrap_or_else(|| {
                    let mut s = format!("pks{blocks}_{}", axis.to_ascii_lowercase());
                    if auxiliaries.len() > 1 {
                        s.push_str(&format!("_{}aux", auxiliaries.len()));
                    }
                    if *overlap > 0 {
                        s.push_str(&format!("_m{overlap}"));
                    }
                    s
                })
            }
        }
    }

    pub fn auxiliaries(&self) -> Result<Vec<Contrast>> {
        match self {
            VariantSection::Pks { auxiliaries, .. } => auxiliaries
                .iter()
                .map(|s| s.parse::<Contrast>().map_err(anyhow::Error::from))
                .collect(),
            _ => Ok(Vec::new()),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn target(&self) -> Result<Contrast> {
        self.target.parse::<Contrast>().map_err(anyhow::Error::from)
    }

    pub fn validate(&self) -> Result<()> {
        if self.masks.is_empty() {
            bail!("config needs at least one [[masks]] entry");
        }
        if self.variants.is_empty() {
            bail!("config needs at least one [[variants]] entry");
        }
        match (&self.phantom, &self.inputs) {
            (Some(_), Some(_)) => bail!("config sets both [phantom] and [inputs]; pick one"),
            (None, None) => bail!("config needs a [phantom] or [inputs] data source"),
            _ => {}
        }
        let target = self.target()?;
        for v in &self.variants {
            if let VariantSection::Pks { blocks, axis, auxiliaries, overlap, .. } = v {
                parse_axis(axis)?;
                if *blocks < 2 {
                    bail!("variant '{}': blocks must be at least 2", v.label());
                }
                if auxiliaries.is_empty() {
                    bail!("variant '{}': needs at least one auxiliary contrast", v.label());
                }
                if auxiliaries.len() > 1 && *blocks != 2 {
                    bail!(
                        "variant '{}': multiple auxiliaries are the two-block half-split \
                         composition; blocks must be 2",
                        v.label()
                    );
                }
                if auxiliaries.len() > 2 {
                    bail!("variant '{}': at most two auxiliaries", v.label());
                }
                for a in v.auxiliaries()? {
                    if a == target {
                        bail!("variant '{}': auxiliary equals the target contrast", v.label());
                    }
                }
                // Silence the unused warning on overlap here; bounds are
                // checked against the data extent when the spec is built.
                let _ = overlap;
            }
        }
        let mut keys = Vec::new();
        for m in &self.masks {
            m.family()?;
            for v in &self.variants {
                let key = (v.label(), m.family.to_ascii_lowercase(), format_r(m.r));
                if keys.contains(&key) {
                    bail!(
                        "duplicate grid cell {}_{}_{}: artifact names must be unique",
                        key.0,
                        key.1,
                        key.2
                    );
                }
                keys.push(key);
            }
        }
        Ok(())
    }

    pub fn build_phantom_spec(&self) -> Result<Option<PhantomSpec>> {
        let Some(ph) = &self.phantom else { return Ok(None) };
        let seed = ph.seed.or(self.seed).unwrap_or(0);
        let mut spec = PhantomSpec::new(ph.size, ph.n_coils, seed)
            .context("phantom section")?;
        spec.noise_std = ph.noise_std;
        spec.validate().context("phantom section")?;
        Ok(Some(spec))
    }
}

/// `3` for integral accelerations, `2.5` otherwise; used in file names and
/// the CSV `R` column.
pub fn format_r(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}
