//! Image-quality metrics on real magnitude images.
//!
//! Both metrics normalize by the ground-truth maximum so the dynamic range
//! is 1, making scores comparable across experiments regardless of k-space
//! scaling. PSNR is capped at 99 dB as the "numerically identical" sentinel.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPair {
    pub psnr_db: f64,
    pub ssim: f64,
}

fn check_pair(recon: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    if recon.dim() != truth.dim() {
        return Err(Error::shape(format!(
            "recon {:?} vs truth {:?}",
            recon.dim(),
            truth.dim()
        )));
    }
    if !recon.iter().chain(truth.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("metric input"));
    }
    let peak = truth.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::invalid("truth image is identically zero"));
    }
    Ok(peak)
}

/// Peak signal-to-noise ratio in dB after peak normalization, capped at 99.
pub fn psnr(recon: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    let peak = check_pair(recon, truth)?;
    let n = recon.len() as f64;
    let mse = recon
        .iter()
        .zip(truth.iter())
        .map(|(&a, &b)| {
            let d = (a - b) / peak;
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Separable weighted local means over the valid (fully covered) region.
fn windowed_means(a: &Array2<f64>, w: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (rows, cols) = a.dim();
    let vcols = cols - SSIM_WINDOW + 1;
    let vrows = rows - SSIM_WINDOW + 1;
    let mut tmp = Array2::<f64>::zeros((rows, vcols));
    for i in 0..rows {
        for j in 0..vcols {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                acc += wk * a[[i, j + k]];
            }
            tmp[[i, j]] = acc;
        }
    }
    let mut out = Array2::<f64>::zeros((vrows, vcols));
    for i in 0..vrows {
        for j in 0..vcols {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                acc += wk * tmp[[i + k, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Mean local structural similarity: 11x11 Gaussian window, sigma 1.5,
/// K1=0.01, K2=0.03, dynamic range 1 after peak normalization.
pub fn ssim(recon: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    let peak = check_pair(recon, truth)?;
    let (rows, cols) = recon.dim();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {rows}x{cols}"
        )));
    }
    let x = recon.mapv(|v| v / peak);
    let y = truth.mapv(|v| v / peak);
    let w = gaussian_window();

    let mu_x = windowed_means(&x, &w);
    let mu_y = windowed_means(&y, &w);
    let xx = windowed_means(&(&x * &x), &w);
    let yy = windowed_means(&(&y * &y), &w);
    let xy = windowed_means(&(&x * &y), &w);

    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let mut acc = 0.0;
    for ((i, j), &mx) in mu_x.indexed_iter() {
        let my = mu_y[[i, j]];
        let sx = xx[[i, j]] - mx * mx;
        let sy = yy[[i, j]] - my * my;
        let sxy = xy[[i, j]] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
        let den = (mx * mx + my * my + c1) * (sx + sy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

pub fn evaluate(recon: &Array2<f64>, truth: &Array2<f64>) -> Result<MetricPair> {
    Ok(MetricPair { psnr_db: psnr(recon, truth)?, ssim: ssim(recon, truth)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(0.0..1.0))
    }

    #[test]
    fn identical_images_hit_the_cap_and_unit_ssim() {
        let x = random_image(32, 32, 1);
        assert_eq!(psnr(&x, &x).unwrap(), PSNR_CAP_DB);
        assert_eq!(ssim(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn psnr_matches_closed_form_for_single_pixel_error() {
        let mut truth = Array2::from_elem((16, 16), 0.5);
        truth[[0, 0]] = 0.5;
        let mut recon = truth.clone();
        let delta: f64 = 0.05;
        recon[[7, 9]] += delta;
        // mse = (delta/peak)^2 / N with peak 0.5, N 256.
        let expect = 10.0 * (256.0 * (0.5 / delta).powi(2)).log10();
        let got = psnr(&recon, &truth).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn psnr_is_normalization_invariant() {
        let truth = random_image(20, 20, 3);
        let mut recon = truth.clone();
        recon[[4, 4]] += 0.1;
        let a = psnr(&recon, &truth).unwrap();
        let scaled_truth = truth.mapv(|v| v * 7.5);
        let scaled_recon = recon.mapv(|v| v * 7.5);
        let b = psnr(&scaled_recon, &scaled_truth).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn zero_truth_is_rejected() {
        let z = Array2::zeros((16, 16));
        let x = random_image(16, 16, 0);
        assert!(psnr(&x, &z).is_err());
        assert!(ssim(&x, &z).is_err());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = random_image(16, 16, 0);
        let b = random_image(16, 18, 0);
        assert!(psnr(&a, &b).is_err());
        assert!(ssim(&a, &b).is_err());
    }

    #[test]
    fn ssim_needs_window_sized_images() {
        let a = random_image(10, 16, 0);
        assert!(ssim(&a, &a.clone()).is_err());
    }

    #[test]
    fn ssim_orders_by_distortion() {
        let truth = random_image(32, 32, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let small = truth.mapv(|v| v + rng.gen_range(-0.01..0.01));
        let big = truth.mapv(|v| v + rng.gen_range(-0.2..0.2));
        let s_small = ssim(&small, &truth).unwrap();
        let s_big = ssim(&big, &truth).unwrap();
        assert!(s_small > s_big, "{s_small} vs {s_big}");
        assert!((-1.0..=1.0).contains(&s_small));
        assert!((-1.0..=1.0).contains(&s_big));
    }

    #[test]
    fn psnr_orders_by_distortion() {
        let truth = random_image(32, 32, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let small = truth.mapv(|v| v + rng.gen_range(-0.01..0.01));
        let big = truth.mapv(|v| v + rng.gen_range(-0.2..0.2));
        assert!(psnr(&small, &truth).unwrap() > psnr(&big, &truth).unwrap());
    }
}
