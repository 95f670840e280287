//! Synthetic multi-contrast phantom and coil sensitivities.
//!
//! One fixed ellipse layout is rendered three times with per-tissue T1, T2,
//! and PD intensities, so all contrasts share anatomy while their weightings
//! differ. Ellipses paint in order, later ones overwriting earlier ones; a
//! dim full-field base layer keeps every pixel weakly positive so magnitude
//! support is identical (and nonempty) everywhere for all three contrasts.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft::fft2c;
use crate::kspace::{apply_mask, ComplexImage, KSpaceVolume, SamplingMask};
use crate::pks::ContrastSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Contrast {
    T1,
    T2,
    Pd,
}

impl std::fmt::Display for Contrast {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Contrast::T1 => "t1",
            Contrast::T2 => "t2",
            Contrast::Pd => "pd",
        })
    }
}

impl std::str::FromStr for Contrast {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Contrast::T1),
            "t2" => Ok(Contrast::T2),
            "pd" => Ok(Contrast::Pd),
            other => Err(Error::invalid(format!("unknown contrast '{other}'"))),
        }
    }
}

/// Per-tissue intensity triple, one entry per contrast weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueContrast {
    pub t1: f64,
    pub t2: f64,
    pub pd: f64,
}

impl TissueContrast {
    fn get(&self, c: Contrast) -> f64 {
        match c {
            Contrast::T1 => self.t1,
            Contrast::T2 => self.t2,
            Contrast::Pd => self.pd,
        }
    }
}

/// Tissue indices used by the fixed geometry, in paint order.
const AIR: usize = 0;
const SKULL: usize = 1;
const WM: usize = 2;
const CSF: usize = 3;
const GM: usize = 4;
const LESION: usize = 5;
const VESSEL: usize = 6;

/// (center x, center y, semi-axis a, semi-axis b, rotation degrees, tissue)
const GEOMETRY: &[(f64, f64, f64, f64, f64, usize)] = &[
    (0.0, 0.0, 1.6, 1.6, 0.0, AIR),
    (0.0, 0.0, 0.92, 0.95, 0.0, SKULL),
    (0.0, -0.01, 0.84, 0.87, 0.0, WM),
    (-0.22, -0.08, 0.12, 0.31, -18.0, CSF),
    (0.22, -0.08, 0.12, 0.31, 18.0, CSF),
    (0.0, 0.42, 0.32, 0.24, 0.0, GM),
    (0.0, -0.38, 0.15, 0.15, 0.0, LESION),
    (-0.42, -0.42, 0.08, 0.08, 0.0, VESSEL),
    (0.42, -0.42, 0.08, 0.08, 0.0, VESSEL),
    (0.0, -0.7, 0.4, 0.09, 0.0, GM),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastParams {
    /// Indexed by the tissue constants above.
    pub tissues: Vec<TissueContrast>,
}

impl Default for ContrastParams {
    fn default() -> Self {
        Self {
            tissues: vec![
                TissueContrast { t1: 0.05, t2: 0.05, pd: 0.05 }, // air
                TissueContrast { t1: 0.90, t2: 0.55, pd: 0.62 }, // skull/fat
                TissueContrast { t1: 0.75, t2: 0.52, pd: 0.58 }, // white matter
                TissueContrast { t1: 0.25, t2: 0.68, pd: 0.66 }, // csf
                TissueContrast { t1: 0.55, t2: 0.60, pd: 0.63 }, // grey matter
                TissueContrast { t1: 0.45, t2: 0.72, pd: 0.68 }, // lesion
                TissueContrast { t1: 0.35, t2: 0.18, pd: 0.24 }, // vessel
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub size: usize,
    pub n_coils: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub contrast_params: ContrastParams,
}

impl PhantomSpec {
    pub fn new(size: usize, n_coils: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            size,
            n_coils,
            seed,
            noise_std: 0.0,
            contrast_params: ContrastParams::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 32 {
            return Err(Error::invalid(format!("phantom size must be >= 32, got {}", self.size)));
        }
        if self.n_coils == 0 {
            return Err(Error::invalid("phantom needs at least one coil"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::invalid(format!("noise std must be >= 0, got {}", self.noise_std)));
        }
        let needed = GEOMETRY.iter().map(|g| g.5).max().unwrap() + 1;
        if self.contrast_params.tissues.len() < needed {
            return Err(Error::invalid(format!(
                "contrast params cover {} tissues, geometry needs {needed}",
                self.contrast_params.tissues.len()
            )));
        }
        for t in &self.contrast_params.tissues {
            for v in [t.t1, t.t2, t.pd] {
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(Error::invalid(format!("tissue intensity {v} outside [0,1]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiContrastPhantom {
    pub t1: ComplexImage,
    pub t2: ComplexImage,
    pub pd: ComplexImage,
}

impl MultiContrastPhantom {
    pub fn contrast(&self, c: Contrast) -> &ComplexImage {
        match c {
            Contrast::T1 => &self.t1,
            Contrast::T2 => &self.t2,
            Contrast::Pd => &self.pd,
        }
    }
}

/// Tissue index per pixel under the fixed geometry (last painted wins).
fn tissue_map(size: usize) -> Array2<Option<usize>> {
    let mut map = Array2::from_elem((size, size), None);
    for ((r, c), slot) in map.indexed_iter_mut() {
        // Pixel centers on [-1, 1]^2; row axis is y.
        let y = 2.0 * (r as f64 + 0.5) / size as f64 - 1.0;
        let x = 2.0 * (c as f64 + 0.5) / size as f64 - 1.0;
        for &(cx, cy, a, b, deg, tissue) in GEOMETRY {
            let th = deg.to_radians();
            let (dx, dy) = (x - cx, y - cy);
            let u = th.cos() * dx + th.sin() * dy;
            let v = -th.sin() * dx + th.cos() * dy;
            if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                *slot = Some(tissue);
            }
        }
    }
    map
}

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

fn render(map: &Array2<Option<usize>>, params: &ContrastParams, c: Contrast) -> Array2<Complex64> {
    map.mapv(|t| {
        let v = t.map_or(0.0, |i| params.tissues[i].get(c));
        Complex64::new(v, 0.0)
    })
}

fn add_kspace_noise(img: ComplexImage, std: f64, rng: &mut ChaCha8Rng) -> Result<ComplexImage> {
    let mut k = fft2c(&img.data().view())?.into_inner();
    for v in k.iter_mut() {
        let (a, b) = box_muller(rng);
        *v += Complex64::new(std * a, std * b);
    }
    crate::fft::ifft2c(&k.view())
}

/// Renders the shared anatomy under all three contrast weightings.
pub fn gen_phantom(spec: &PhantomSpec) -> Result<MultiContrastPhantom> {
    spec.validate()?;
    let map = tissue_map(spec.size);
    let mut planes = Vec::with_capacity(3);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for c in [Contrast::T1, Contrast::T2, Contrast::Pd] {
        let img = ComplexImage::new(render(&map, &spec.contrast_params, c))?;
        let img = if spec.noise_std > 0.0 {
            add_kspace_noise(img, spec.noise_std, &mut rng)?
        } else {
            img
        };
        planes.push(img);
    }
    let pd = planes.pop().unwrap();
    let t2 = planes.pop().unwrap();
    let t1 = planes.pop().unwrap();
    Ok(MultiContrastPhantom { t1, t2, pd })
}

/// Smooth complex coil sensitivities: Gaussian magnitude bumps spaced around
/// the field of view with per-coil linear phase, normalized so the pixelwise
/// root-sum-of-squares is exactly 1.
pub fn gen_coil_maps(size: usize, n_coils: usize, seed: u64) -> Result<Vec<ComplexImage>> {
    if size == 0 {
        return Err(Error::invalid("coil map size must be nonzero"));
    }
    if n_coils == 0 {
        return Err(Error::invalid("need at least one coil"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let sigma = 0.9f64;
    let ring = 0.6f64;

    struct CoilParams {
        cx: f64,
        cy: f64,
        px: f64,
        py: f64,
        p0: f64,
    }
    let params: Vec<CoilParams> = (0..n_coils)
        .map(|k| {
            let ang = offset + std::f64::consts::TAU * k as f64 / n_coils as f64;
            CoilParams {
                cx: ring * ang.cos(),
                cy: ring * ang.sin(),
                px: rng.gen_range(-1.5..1.5),
                py: rng.gen_range(-1.5..1.5),
                p0: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            }
        })
        .collect();

    let mut mags: Vec<Array2<f64>> = Vec::with_capacity(n_coils);
    for p in &params {
        mags.push(Array2::from_shape_fn((size, size), |(r, c)| {
            let y = 2.0 * (r as f64 + 0.5) / size as f64 - 1.0;
            let x = 2.0 * (c as f64 + 0.5) / size as f64 - 1.0;
            (-((x - p.cx).powi(2) + (y - p.cy).powi(2)) / (2.0 * sigma * sigma)).exp()
        }));
    }
    let mut rss = Array2::<f64>::zeros((size, size));
    for m in &mags {
        rss.zip_mut_with(m, |acc, v| *acc += v * v);
    }
    rss.mapv_inplace(f64::sqrt);

    params
        .iter()
        .zip(mags)
        .map(|(p, mag)| {
            let plane = Array2::from_shape_fn((size, size), |(r, c)| {
                let y = 2.0 * (r as f64 + 0.5) / size as f64 - 1.0;
                let x = 2.0 * (c as f64 + 0.5) / size as f64 - 1.0;
                let phase = p.px * x + p.py * y + p.p0;
                Complex64::from_polar(mag[[r, c]] / rss[[r, c]], phase)
            });
            ComplexImage::new(plane)
        })
        .collect()
}

/// Multi-coil acquisition: modulate by each coil map, transform, mask.
pub fn simulate_acquisition(
    image: &ComplexImage,
    maps: &[ComplexImage],
    mask: &SamplingMask,
) -> Result<KSpaceVolume> {
    if maps.is_empty() {
        return Err(Error::invalid("need at least one coil map"));
    }
    for m in maps {
        if m.rows() != image.rows() || m.cols() != image.cols() {
            return Err(Error::shape("coil map dims do not match image"));
        }
    }
    if mask.rows() != image.rows() || mask.cols() != image.cols() {
        return Err(Error::shape("mask dims do not match image"));
    }
    let mut coils = Vec::with_capacity(maps.len());
    for m in maps {
        let modulated = m.data() * image.data();
        coils.push(fft2c(&modulated.view())?);
    }
    apply_mask(&KSpaceVolume::from_coils(&coils)?, mask)
}

/// Convenience: acquire an under-sampled target plus fully sampled
/// auxiliaries from one phantom with one set of coil maps.
pub fn acquire_contrast_set(
    phantom: &MultiContrastPhantom,
    maps: &[ComplexImage],
    mask: &SamplingMask,
    target: Contrast,
    auxiliaries: &[Contrast],
) -> Result<ContrastSet> {
    let target_vol = simulate_acquisition(phantom.contrast(target), maps, mask)?;
    let full = SamplingMask::full(mask.rows(), mask.cols())?;
    let aux = auxiliaries
        .iter()
        .map(|&c| {
            simulate_acquisition(phantom.contrast(c), maps, &full).map(|v| (c.to_string(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    ContrastSet::new(target_vol, mask.clone(), aux)
}
