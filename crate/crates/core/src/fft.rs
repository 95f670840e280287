//! Centered unitary 2D Fourier transforms.
//!
//! Both directions place DC at index `floor(n/2)` along each axis and scale
//! by `1/sqrt(rows*cols)`, so `ifft2c(fft2c(x)) == x` and both maps preserve
//! the Frobenius norm.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kspace::ComplexImage;

fn roll2(a: &ArrayView2<Complex64>, by_r: usize, by_c: usize) -> Array2<Complex64> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((r, c));
    for i in 0..r {
        let ti = (i + by_r) % r;
        for j in 0..c {
            out[[ti, (j + by_c) % c]] = a[[i, j]];
        }
    }
    out
}

/// Moves the DC bin from index 0 to index `floor(n/2)` on both axes.
pub fn fftshift2(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    roll2(a, r / 2, c / 2)
}

/// Inverse of [`fftshift2`] (exact for odd dims too).
pub fn ifftshift2(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    roll2(a, r - r / 2, c - c / 2)
}

fn transform(plane: &ArrayView2<Complex64>, inverse: bool) -> Result<ComplexImage> {
    let (r, c) = plane.dim();
    if r == 0 || c == 0 {
        return Err(Error::shape(format!("fft plane dims must be nonzero, got {r}x{c}")));
    }
    if !plane.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite("fft input"));
    }

    let mut work = ifftshift2(plane);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(c), planner.plan_fft_inverse(r))
    } else {
        (planner.plan_fft_forward(c), planner.plan_fft_forward(r))
    };

    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for mut row in work.rows_mut() {
        let s = row.as_slice_mut().expect("row-major work array");
        row_fft.process_with_scratch(s, &mut scratch);
    }

    let mut scratch = vec![Complex64::default(); col_fft.get_inplace_scratch_len()];
    let mut col = vec![Complex64::default(); r];
    for j in 0..c {
        for i in 0..r {
            col[i] = work[[i, j]];
        }
        col_fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..r {
            work[[i, j]] = col[i];
        }
    }

    let scale = 1.0 / ((r * c) as f64).sqrt();
    let out = fftshift2(&work.view()).mapv(|v| v * scale);
    ComplexImage::new(out)
}

/// Image plane to centered k-space plane.
pub fn fft2c(plane: &ArrayView2<Complex64>) -> Result<ComplexImage> {
    transform(plane, false)
}

/// Centered k-space plane to image plane.
pub fn ifft2c(plane: &ArrayView2<Complex64>) -> Result<ComplexImage> {
    transform(plane, true)
}
