//! 8-bit grayscale PNG export for magnitude and error images.

use std::path::Path;

use image::{GrayImage, Luma};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kspace::SamplingMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExportMode {
    /// Min-max normalize, then quantize.
    Magnitude,
    /// Treat the input as an error image: `|v| * scale` clipped to [0, 1].
    ErrorMap { scale: f64 },
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn export_png(img: &Array2<f64>, path: impl AsRef<Path>, mode: ExportMode) -> Result<()> {
    if !img.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("png export input"));
    }
    let (rows, cols) = img.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::shape("cannot export empty image"));
    }
    let buf = match mode {
        ExportMode::Magnitude => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in img.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                GrayImage::from_pixel(cols as u32, rows as u32, Luma([128]))
            } else {
                GrayImage::from_fn(cols as u32, rows as u32, |x, y| {
                    Luma([quantize((img[[y as usize, x as usize]] - lo) / (hi - lo))])
                })
            }
        }
        ExportMode::ErrorMap { scale } => GrayImage::from_fn(cols as u32, rows as u32, |x, y| {
            Luma([quantize(img[[y as usize, x as usize]].abs() * scale)])
        }),
    };
    buf.save(path.as_ref()).map_err(|e| Error::Image(e.to_string()))
}

/// White = sampled, black = skipped.
pub fn export_mask_png(mask: &SamplingMask, path: impl AsRef<Path>) -> Result<()> {
    let buf = GrayImage::from_fn(mask.cols() as u32, mask.rows() as u32, |x, y| {
        Luma([if mask.is_sampled(y as usize, x as usize) { 255 } else { 0 }])
    });
    buf.save(path.as_ref()).map_err(|e| Error::Image(e.to_string()))
}
