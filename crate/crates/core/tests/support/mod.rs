// Shared fixtures and independent oracles for the acceptance suite.
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::{Mutex, MutexGuard};

use sake_pks::kspace::{KSpaceVolume, SamplingMask};

static GATE: Mutex<()> = Mutex::new(());

/// Serializes the heavy tests so wall-clock assertions are not polluted.
pub fn lock() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|p| p.into_inner())
}

pub fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn rand_volume(n_coils: usize, rows: usize, cols: usize, seed: u64) -> KSpaceVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    KSpaceVolume::new(Array3::from_shape_fn((n_coils, rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }))
    .unwrap()
}

pub fn rand_image(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(0.05..1.0))
}

/// Volume whose 6x6 lifting is algebraically rank `j_modes`: a sum of
/// separable unit-modulus exponentials, each contributing one rank-1 term.
pub fn exponential_volume(n_coils: usize, n: usize, j_modes: usize, seed: u64) -> KSpaceVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<(f64, f64)> =
        (0..j_modes).map(|_| (rng.gen_range(-0.45..0.45), rng.gen_range(-0.45..0.45))).collect();
    let coeffs: Vec<Vec<Complex64>> = (0..n_coils)
        .map(|_| {
            (0..j_modes)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let tau = std::f64::consts::TAU;
    KSpaceVolume::new(Array3::from_shape_fn((n_coils, n, n), |(c, r, col)| {
        (0..j_modes)
            .map(|m| {
                let ph = tau * (freqs[m].0 * r as f64 + freqs[m].1 * col as f64);
                coeffs[c][m] * Complex64::new(0.0, ph).exp()
            })
            .sum()
    }))
    .unwrap()
}

/// Mask with exactly `frac_removed` of the locations dropped, seeded shuffle.
pub fn exact_removal_mask(rows: usize, cols: usize, frac_removed: f64, seed: u64) -> SamplingMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rows * cols;
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(&mut rng);
    let removed = (total as f64 * frac_removed).round() as usize;
    let mut ind = Array2::<u8>::ones((rows, cols));
    for &i in idx.iter().take(removed) {
        ind[[i / cols, i % cols]] = 0;
    }
    SamplingMask::new(ind, 1.0 / (1.0 - frac_removed), seed).unwrap()
}

pub fn rel_frob_err(a: &KSpaceVolume, b: &KSpaceVolume) -> f64 {
    let num = (a.data() - b.data()).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    num / b.frob_norm()
}

pub fn volumes_bit_equal(a: &KSpaceVolume, b: &KSpaceVolume) -> bool {
    a.data().dim() == b.data().dim()
        && a.data()
            .iter()
            .zip(b.data().iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

pub fn transpose_volume(v: &KSpaceVolume) -> KSpaceVolume {
    KSpaceVolume::new(Array3::from_shape_fn((v.n_coils(), v.cols(), v.rows()), |(c, r, col)| {
        v.data()[[c, col, r]]
    }))
    .unwrap()
}

pub fn transpose_mask(m: &SamplingMask) -> SamplingMask {
    SamplingMask::new(
        Array2::from_shape_fn((m.cols(), m.rows()), |(r, c)| m.indicator()[[c, r]]),
        m.nominal_r(),
        m.seed(),
    )
    .unwrap()
}

/// Singular values by one-sided complex Jacobi: orthogonalize column pairs of
/// a working copy until every Gram off-diagonal is negligible. Independent of
/// the LAPACK path used by the library.
pub fn jacobi_singular_values(a: &Array2<Complex64>) -> Vec<f64> {
    let (m, n) = a.dim();
    let mut w: Array2<Complex64> = if m >= n { a.clone() } else { a.t().to_owned() };
    let (rows, cols) = w.dim();
    for _sweep in 0..80 {
        let mut worst = 0.0f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..rows {
                    let ap = w[[r, p]];
                    let aq = w[[r, q]];
                    app += ap.norm_sqr();
                    aqq += aq.norm_sqr();
                    apq += ap.conj() * aq;
                }
                let denom = (app * aqq).sqrt();
                if denom == 0.0 || apq.norm() == 0.0 {
                    continue;
                }
                let rel = apq.norm() / denom;
                worst = worst.max(rel);
                if rel < 1e-15 {
                    continue;
                }
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let ap = w[[r, p]] * phase;
                    let aq = w[[r, q]];
                    w[[r, p]] = ap * c - aq * s;
                    w[[r, q]] = ap * s + aq * c;
                }
            }
        }
        if worst < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|r| w[[r, j]].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Direct windowed SSIM: explicit Gaussian-weighted moments per valid window,
/// no separable convolution. Mirrors the published constants.
pub fn reference_ssim(recon: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let (rows, cols) = truth.dim();
    let win = 11usize;
    let sigma = 1.5f64;
    let half = win / 2;
    let peak = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let x = recon.mapv(|v| v / peak);
    let y = truth.mapv(|v| v / peak);

    let mut weights = vec![vec![0.0f64; win]; win];
    let mut wsum = 0.0;
    for (a, row) in weights.iter_mut().enumerate() {
        for (b, w) in row.iter_mut().enumerate() {
            let da = a as f64 - half as f64;
            let db = b as f64 - half as f64;
            *w = (-(da * da + db * db) / (2.0 * sigma * sigma)).exp();
            wsum += *w;
        }
    }
    for row in weights.iter_mut() {
        for w in row.iter_mut() {
            *w /= wsum;
        }
    }

    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..=(rows - win) {
        for j in 0..=(cols - win) {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (a, row) in weights.iter().enumerate() {
                for (b, &w) in row.iter().enumerate() {
                    let xv = x[[i + a, j + b]];
                    let yv = y[[i + a, j + b]];
                    mx += w * xv;
                    my += w * yv;
                    mxx += w * xv * xv;
                    myy += w * yv * yv;
                    mxy += w * xv * yv;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cxy = mxy - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}

pub fn report(criterion: u32, desc: &str, ok: bool, detail: &str) {
    // Straight to fd 2: the harness only captures the print macros, and the
    // per-criterion verdict should be visible in a plain `cargo test` run.
    use std::io::Write;
    let _ = writeln!(
        std::io::stderr(),
        "criterion {criterion} [{}] {desc}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({desc}) failed: {detail}");
}
