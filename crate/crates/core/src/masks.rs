//! Under-sampling mask generators.
//!
//! Three families: pointwise Bernoulli sampling (`Random2D`), full
//! phase-encode lines (`Cartesian1D`), and Poisson-disc dart throwing
//! (`Poisson2D`). All of them are deterministic functions of the spec,
//! including the seed, and support an optional variable-density profile
//! that favors the k-space center.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kspace::SamplingMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskFamily {
    Random2D,
    Cartesian1D,
    Poisson2D,
}

impl std::fmt::Display for MaskFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MaskFamily::Random2D => "random2d",
            MaskFamily::Cartesian1D => "cartesian1d",
            MaskFamily::Poisson2D => "poisson2d",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for MaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random2d" => Ok(MaskFamily::Random2D),
            "cartesian1d" => Ok(MaskFamily::Cartesian1D),
            "poisson2d" => Ok(MaskFamily::Poisson2D),
            other => Err(Error::invalid(format!("unknown mask family '{other}'"))),
        }
    }
}

/// Sampling density as a function of distance from the k-space center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityProfile {
    Uniform,
    /// Weight `1 / (1 + (d/d_max)^power)`; larger power concentrates harder.
    VariableDensity { power: f64 },
}

impl DensityProfile {
    pub fn variable() -> Self {
        DensityProfile::VariableDensity { power: 2.0 }
    }

    fn weight(&self, d_frac: f64) -> f64 {
        match self {
            DensityProfile::Uniform => 1.0,
            DensityProfile::VariableDensity { power } => 1.0 / (1.0 + d_frac.powf(*power)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub family: MaskFamily,
    pub r: f64,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub density: DensityProfile,
}

impl MaskSpec {
    pub fn new(
        family: MaskFamily,
        r: f64,
        rows: usize,
        cols: usize,
        seed: u64,
        density: DensityProfile,
    ) -> Result<Self> {
        if rows < 8 || cols < 8 {
            return Err(Error::invalid(format!(
                "mask dims must be at least 8x8, got {rows}x{cols}"
            )));
        }
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::invalid(format!("acceleration R must be >= 1, got {r}")));
        }
        if r > rows as f64 * cols as f64 {
            return Err(Error::invalid(format!(
                "acceleration R={r} exceeds the number of k-space locations"
            )));
        }
        if let DensityProfile::VariableDensity { power } = density {
            if !(power.is_finite() && power > 0.0) {
                return Err(Error::invalid(format!("density power must be positive, got {power}")));
            }
        }
        Ok(Self { family, r, rows, cols, seed, density })
    }
}

pub fn generate(spec: &MaskSpec) -> Result<SamplingMask> {
    match spec.family {
        MaskFamily::Random2D => gen_random2d(spec),
        MaskFamily::Cartesian1D => gen_cartesian1d(spec),
        MaskFamily::Poisson2D => gen_poisson2d(spec).map(|p| p.mask),
    }
}

/// The mask specs the shipped experiment configs are built around. Seeds are
/// fixed so the desk-scale experiments are reproducible; the Cartesian seeds
/// are ones whose draw includes the center row (nothing forces that).
pub fn default_mask_specs() -> Vec<MaskSpec> {
    let mk = |family, r, seed| {
        MaskSpec::new(family, r, 64, 64, seed, DensityProfile::variable())
            .expect("default spec parameters are valid")
    };
    vec![
        mk(MaskFamily::Random2D, 3.0, 3),
        mk(MaskFamily::Random2D, 4.0, 7),
        mk(MaskFamily::Cartesian1D, 2.0, 2),
        mk(MaskFamily::Cartesian1D, 3.0, 5),
        mk(MaskFamily::Poisson2D, 4.0, 11),
        mk(MaskFamily::Poisson2D, 6.0, 11),
    ]
}

fn center_dist_frac(rows: usize, cols: usize, r: usize, c: usize) -> f64 {
    let (cr, cc) = (rows / 2, cols / 2);
    let dmax = f64::hypot(cr.max(rows - 1 - cr) as f64, cc.max(cols - 1 - cc) as f64);
    let d = f64::hypot(r as f64 - cr as f64, c as f64 - cc as f64);
    d / dmax
}

/// Per-location acceptance probabilities whose mean is exactly `1/R`.
fn bernoulli_probabilities(spec: &MaskSpec) -> Array2<f64> {
    let target = 1.0 / spec.r;
    let w = Array2::from_shape_fn((spec.rows, spec.cols), |(i, j)| {
        spec.density.weight(center_dist_frac(spec.rows, spec.cols, i, j))
    });
    let mean_at = |s: f64| w.iter().map(|&v| (s * v).min(1.0)).sum::<f64>() / w.len() as f64;

    let mut hi = 1.0;
    while mean_at(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    w.mapv(|v| (hi * v).min(1.0))
}

/// Independent Bernoulli sampling at every k-space location.
pub fn gen_random2d(spec: &MaskSpec) -> Result<SamplingMask> {
    if spec.family != MaskFamily::Random2D {
        return Err(Error::invalid("spec family is not random2d"));
    }
    if spec.r == 1.0 {
        return SamplingMask::new(Array2::ones((spec.rows, spec.cols)), 1.0, spec.seed);
    }
    let probs = bernoulli_probabilities(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ind = Array2::<u8>::zeros((spec.rows, spec.cols));
    for i in 0..spec.rows {
        for j in 0..spec.cols {
            if rng.gen::<f64>() < probs[[i, j]] {
                ind[[i, j]] = 1;
            }
        }
    }
    // Degenerate draws at extreme R could miss everywhere; pin the DC bin.
    if ind.iter().all(|&v| v == 0) {
        ind[[spec.rows / 2, spec.cols / 2]] = 1;
    }
    SamplingMask::new(ind, spec.r, spec.seed)
}

/// Samples exactly `round(rows/R)` full rows (no calibration region).
pub fn gen_cartesian1d(spec: &MaskSpec) -> Result<SamplingMask> {
    if spec.family != MaskFamily::Cartesian1D {
        return Err(Error::invalid("spec family is not cartesian1d"));
    }
    let k = (spec.rows as f64 / spec.r).round() as usize;
    if k == 0 {
        return Err(Error::invalid(format!(
            "R={} keeps zero of {} rows",
            spec.r, spec.rows
        )));
    }
    let cr = spec.rows / 2;
    let dmax = cr.max(spec.rows - 1 - cr) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Weighted sampling without replacement via exponential keys.
    let mut keyed: Vec<(f64, usize)> = (0..spec.rows)
        .map(|i| {
            let w = spec.density.weight((i as f64 - cr as f64).abs() / dmax);
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (u.powf(1.0 / w), i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut ind = Array2::<u8>::zeros((spec.rows, spec.cols));
    for &(_, row) in keyed.iter().take(k) {
        ind.row_mut(row).fill(1);
    }
    SamplingMask::new(ind, spec.r, spec.seed)
}

/// A Poisson-disc mask plus the calibrated base exclusion radius.
#[derive(Debug, Clone)]
pub struct PoissonMask {
    pub mask: SamplingMask,
    pub base_radius: f64,
}

/// Exclusion radius at a grid location for a given base radius.
pub fn poisson_radius(spec: &MaskSpec, base: f64, row: usize, col: usize) -> f64 {
    let g = match spec.density {
        DensityProfile::Uniform => 1.0,
        DensityProfile::VariableDensity { power } => {
            1.0 + center_dist_frac(spec.rows, spec.cols, row, col).powf(power)
        }
    };
    base * g
}

fn poisson_darts(spec: &MaskSpec, base: f64) -> Array2<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<(usize, usize)> = (0..spec.rows)
        .flat_map(|i| (0..spec.cols).map(move |j| (i, j)))
        .collect();
    order.shuffle(&mut rng);

    let mut ind = Array2::<u8>::zeros((spec.rows, spec.cols));
    for (i, j) in order {
        let ri = poisson_radius(spec, base, i, j);
        let reach = ri.ceil() as isize;
        let mut ok = true;
        'scan: for di in -reach..=reach {
            for dj in -reach..=reach {
                let (qi, qj) = (i as isize + di, j as isize + dj);
                if qi < 0 || qj < 0 || qi >= spec.rows as isize || qj >= spec.cols as isize {
                    continue;
                }
                let (qi, qj) = (qi as usize, qj as usize);
                if ind[[qi, qj]] == 0 {
                    continue;
                }
                let dist = f64::hypot(di as f64, dj as f64);
                if dist < ri.min(poisson_radius(spec, base, qi, qj)) {
                    ok = false;
                    break 'scan;
                }
            }
        }
        if ok {
            ind[[i, j]] = 1;
        }
    }
    ind
}

/// Dart throwing over the integer grid in a seeded random order. The base
/// radius is bisected until the sampled fraction lands within 10% of `1/R`.
pub fn gen_poisson2d(spec: &MaskSpec) -> Result<PoissonMask> {
    if spec.family != MaskFamily::Poisson2D {
        return Err(Error::invalid("spec family is not poisson2d"));
    }
    if spec.r == 1.0 {
        return Ok(PoissonMask {
            mask: SamplingMask::new(Array2::ones((spec.rows, spec.cols)), 1.0, spec.seed)?,
            base_radius: 0.0,
        });
    }

    let target = 1.0 / spec.r;
    let n = (spec.rows * spec.cols) as f64;
    let within = |f: f64| (f - target).abs() <= 0.1 * target;
    let max_attempts = 50usize;
    let mut attempts = 0usize;
    let mut best = 1.0f64;

    let try_base = |base: f64, attempts: &mut usize, best: &mut f64| {
        *attempts += 1;
        let ind = poisson_darts(spec, base);
        let f = ind.iter().filter(|&&v| v == 1).count() as f64 / n;
        if (f - target).abs() < (*best - target).abs() {
            *best = f;
        }
        (ind, f)
    };

    // Fraction decreases as the radius grows; expand until we bracket.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    loop {
        let (ind, f) = try_base(hi, &mut attempts, &mut best);
        if within(f) {
            return Ok(PoissonMask {
                mask: SamplingMask::new(ind, spec.r, spec.seed)?,
                base_radius: hi,
            });
        }
        if f <= target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if attempts >= max_attempts {
            return Err(Error::MaskCalibration { target, best, attempts });
        }
    }

    while attempts < max_attempts {
        let mid = 0.5 * (lo + hi);
        let (ind, f) = try_base(mid, &mut attempts, &mut best);
        if within(f) {
            return Ok(PoissonMask {
                mask: SamplingMask::new(ind, spec.r, spec.seed)?,
                base_radius: mid,
            });
        }
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MaskCalibration { target, best, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: MaskFamily, r: f64, n: usize, seed: u64, density: DensityProfile) -> MaskSpec {
        MaskSpec::new(family, r, n, n, seed, density).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MaskSpec::new(MaskFamily::Random2D, 2.0, 7, 64, 0, DensityProfile::Uniform).is_err());
        assert!(MaskSpec::new(MaskFamily::Random2D, 0.5, 64, 64, 0, DensityProfile::Uniform).is_err());
        assert!(MaskSpec::new(
            MaskFamily::Random2D,
            2.0,
            64,
            64,
            0,
            DensityProfile::VariableDensity { power: -1.0 }
        )
        .is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        for family in [MaskFamily::Random2D, MaskFamily::Cartesian1D, MaskFamily::Poisson2D] {
            let s = spec(family, 3.0, 32, 11, DensityProfile::variable());
            let a = generate(&s).unwrap();
            let b = generate(&s).unwrap();
            assert_eq!(a.indicator(), b.indicator(), "{family} not deterministic");
        }
    }

    #[test]
    fn seeds_change_random_masks() {
        let a = generate(&spec(MaskFamily::Random2D, 3.0, 32, 0, DensityProfile::variable())).unwrap();
        let b = generate(&spec(MaskFamily::Random2D, 3.0, 32, 1, DensityProfile::variable())).unwrap();
        assert_ne!(a.indicator(), b.indicator());
    }

    #[test]
    fn r_one_is_fully_sampled() {
        for family in [MaskFamily::Random2D, MaskFamily::Cartesian1D, MaskFamily::Poisson2D] {
            let m = generate(&spec(family, 1.0, 16, 5, DensityProfile::variable())).unwrap();
            assert_eq!(m.ones_count(), 256, "{family} at R=1");
        }
    }

    #[test]
    fn bernoulli_probabilities_hit_target_mean_and_prefer_center() {
        let s = spec(MaskFamily::Random2D, 4.0, 64, 0, DensityProfile::variable());
        let p = bernoulli_probabilities(&s);
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!((mean - 0.25).abs() < 1e-9, "mean {mean}");
        assert!(p[[32, 32]] > p[[0, 0]]);
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn cartesian_rowcount_is_exact_and_rows_are_full() {
        for (r, expect) in [(2.0, 32usize), (2.5, 26), (4.0, 16)] {
            let m = generate(&spec(MaskFamily::Cartesian1D, r, 64, 9, DensityProfile::variable()))
                .unwrap();
            let full_rows = (0..64)
                .filter(|&i| (0..64).all(|j| m.is_sampled(i, j)))
                .count();
            let empty_rows = (0..64)
                .filter(|&i| (0..64).all(|j| !m.is_sampled(i, j)))
                .count();
            assert_eq!(full_rows, expect, "R={r}");
            assert_eq!(full_rows + empty_rows, 64, "partial row at R={r}");
        }
    }

    #[test]
    fn poisson_respects_spacing_and_fraction() {
        let s = spec(MaskFamily::Poisson2D, 4.0, 48, 3, DensityProfile::variable());
        let out = gen_poisson2d(&s).unwrap();
        let f = out.mask.sampled_fraction();
        assert!((f - 0.25).abs() <= 0.025, "fraction {f}");
        let pts: Vec<(usize, usize)> = out
            .mask
            .indicator()
            .indexed_iter()
            .filter(|(_, &v)| v == 1)
            .map(|(ij, _)| ij)
            .collect();
        for (a, &(ai, aj)) in pts.iter().enumerate() {
            for &(bi, bj) in &pts[a + 1..] {
                let d = f64::hypot(ai as f64 - bi as f64, aj as f64 - bj as f64);
                let ra = poisson_radius(&s, out.base_radius, ai, aj);
                let rb = poisson_radius(&s, out.base_radius, bi, bj);
                assert!(d >= ra.min(rb), "({ai},{aj}) vs ({bi},{bj}): {d}");
            }
        }
    }

    #[test]
    fn variable_density_poisson_is_denser_near_center() {
        let s = spec(MaskFamily::Poisson2D, 6.0, 64, 7, DensityProfile::variable());
        let m = gen_poisson2d(&s).unwrap().mask;
        let count_box = |r0: usize, c0: usize, h: usize| {
            (r0..r0 + h)
                .flat_map(|i| (c0..c0 + h).map(move |j| (i, j)))
                .filter(|&(i, j)| m.is_sampled(i, j))
                .count()
        };
        assert!(count_box(24, 24, 16) > count_box(0, 0, 16));
    }
}
