//! Core sample containers: single-coil image planes, multi-coil k-space
//! volumes, and binary sampling masks. Constructors validate shape and
//! finiteness once so downstream numerics can assume clean data.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// A single complex-valued 2D plane (image domain or one coil of k-space).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    data: Array2<Complex64>,
}

impl ComplexImage {
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r == 0 || c == 0 {
            return Err(Error::shape(format!("image dims must be nonzero, got {r}x{c}")));
        }
        if !data.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("complex image"));
        }
        Ok(Self { data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(Array2::zeros((rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.data
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.data.mapv(|v| v.norm())
    }
}

/// Multi-coil k-space, laid out `(coil, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceVolume {
    data: Array3<Complex64>,
}

impl KSpaceVolume {
    pub fn new(data: Array3<Complex64>) -> Result<Self> {
        let (nc, r, c) = data.dim();
        if nc == 0 || r == 0 || c == 0 {
            return Err(Error::shape(format!(
                "volume dims must be nonzero, got {nc} coils, {r}x{c}"
            )));
        }
        if !data.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("k-space volume"));
        }
        Ok(Self { data })
    }

    pub fn zeros(n_coils: usize, rows: usize, cols: usize) -> Result<Self> {
        Self::new(Array3::zeros((n_coils, rows, cols)))
    }

    pub fn from_coils(coils: &[ComplexImage]) -> Result<Self> {
        if coils.is_empty() {
            return Err(Error::invalid("volume needs at least one coil"));
        }
        let (r, c) = (coils[0].rows(), coils[0].cols());
        if coils.iter().any(|im| im.rows() != r || im.cols() != c) {
            return Err(Error::shape("coil planes have differing dims"));
        }
        let mut data = Array3::zeros((coils.len(), r, c));
        for (i, im) in coils.iter().enumerate() {
            data.index_axis_mut(Axis(0), i).assign(im.data());
        }
        Self::new(data)
    }

    pub fn n_coils(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn rows(&self) -> usize {
        self.data.len_of(Axis(1))
    }

    pub fn cols(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.data
    }

    pub fn into_inner(self) -> Array3<Complex64> {
        self.data
    }

    pub fn coil(&self, i: usize) -> ArrayView2<'_, Complex64> {
        self.data.index_axis(Axis(0), i)
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Swaps rows and columns of every coil plane.
    pub fn transposed(&self) -> KSpaceVolume {
        let mut out = Array3::zeros((self.n_coils(), self.cols(), self.rows()));
        for c in 0..self.n_coils() {
            out.index_axis_mut(Axis(0), c)
                .assign(&self.coil(c).t().to_owned());
        }
        KSpaceVolume { data: out }
    }
}

/// Binary sampling pattern over one k-space plane, shared by all coils.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    indicator: Array2<u8>,
    nominal_r: f64,
    seed: u64,
}

impl SamplingMask {
    pub fn new(indicator: Array2<u8>, nominal_r: f64, seed: u64) -> Result<Self> {
        let (r, c) = indicator.dim();
        if r == 0 || c == 0 {
            return Err(Error::shape(format!("mask dims must be nonzero, got {r}x{c}")));
        }
        if indicator.iter().any(|&v| v > 1) {
            return Err(Error::invalid("mask indicator values must be 0 or 1"));
        }
        if indicator.iter().all(|&v| v == 0) {
            return Err(Error::invalid("mask must sample at least one location"));
        }
        if !(nominal_r.is_finite() && nominal_r > 0.0) {
            return Err(Error::invalid(format!("nominal R must be positive, got {nominal_r}")));
        }
        Ok(Self { indicator, nominal_r, seed })
    }

    /// Fully sampled mask (every location acquired).
    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        Self::new(Array2::ones((rows, cols)), 1.0, 0)
    }

    pub fn rows(&self) -> usize {
        self.indicator.nrows()
    }

    pub fn cols(&self) -> usize {
        self.indicator.ncols()
    }

    pub fn indicator(&self) -> &Array2<u8> {
        &self.indicator
    }

    pub fn nominal_r(&self) -> f64 {
        self.nominal_r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_sampled(&self, row: usize, col: usize) -> bool {
        self.indicator[[row, col]] == 1
    }

    pub fn ones_count(&self) -> usize {
        self.indicator.iter().filter(|&&v| v == 1).count()
    }

    pub fn sampled_fraction(&self) -> f64 {
        self.ones_count() as f64 / (self.rows() * self.cols()) as f64
    }

    /// Acceleration actually realized: total locations over sampled ones.
    pub fn measured_r(&self) -> f64 {
        (self.rows() * self.cols()) as f64 / self.ones_count() as f64
    }

    pub fn transposed(&self) -> SamplingMask {
        SamplingMask {
            indicator: self.indicator.t().to_owned(),
            nominal_r: self.nominal_r,
            seed: self.seed,
        }
    }
}

/// Zeroes every unsampled location of every coil. Sampled locations are
/// copied bitwise, so the operation is idempotent.
pub fn apply_mask(vol: &KSpaceVolume, mask: &SamplingMask) -> Result<KSpaceVolume> {
    if vol.rows() != mask.rows() || vol.cols() != mask.cols() {
        return Err(Error::shape(format!(
            "mask {}x{} does not match volume {}x{}",
            mask.rows(),
            mask.cols(),
            vol.rows(),
            vol.cols()
        )));
    }
    let mut out = vol.data().clone();
    for mut plane in out.axis_iter_mut(Axis(0)) {
        ndarray::Zip::from(&mut plane)
            .and(mask.indicator())
            .for_each(|v, &m| {
                if m == 0 {
                    *v = Complex64::new(0.0, 0.0);
                }
            });
    }
    Ok(KSpaceVolume { data: out })
}

/// Root-sum-of-squares combination of coil images into one magnitude plane.
pub fn rss_combine(coils: &[ComplexImage]) -> Result<Array2<f64>> {
    if coils.is_empty() {
        return Err(Error::invalid("rss needs at least one coil image"));
    }
    let (r, c) = (coils[0].rows(), coils[0].cols());
    if coils.iter().any(|im| im.rows() != r || im.cols() != c) {
        return Err(Error::shape("coil images have differing dims"));
    }
    let mut acc = Array2::<f64>::zeros((r, c));
    for im in coils {
        ndarray::Zip::from(&mut acc).and(im.data()).for_each(|a, v| {
            *a += v.norm_sqr();
        });
    }
    Ok(acc.mapv(f64::sqrt))
}

/// Inverse-transforms each coil plane and combines by root-sum-of-squares.
pub fn zero_filled_recon(vol: &KSpaceVolume) -> Result<Array2<f64>> {
    let mut coils = Vec::with_capacity(vol.n_coils());
    for i in 0..vol.n_coils() {
        coils.push(fft::ifft2c(&vol.coil(i))?);
    }
    rss_combine(&coils)
}
