//! Calibrationless k-space completion by alternating projections.
//!
//! Each iteration lifts the current estimate to its block-Hankel data
//! matrix, truncates to rank `k`, maps back with count-averaging, and then
//! overwrites every acquired location with the measured value. Acquired
//! samples therefore survive every iteration bit-for-bit.

use crate::error::{Error, Result};
use crate::hankel::{hankel_adjoint_avg, hankel_forward, lowrank_project, HankelConfig, VolumeDims};
use crate::kspace::{apply_mask, KSpaceVolume, SamplingMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SakeConfig {
    pub hankel: HankelConfig,
    pub max_iters: usize,
    /// Relative-change stopping threshold; 0 disables early exit.
    pub rel_tol: f64,
    /// Also track the pre-consistency data residual per iteration.
    pub record_history: bool,
}

impl SakeConfig {
    pub fn new(hankel: HankelConfig) -> Self {
        Self { hankel, max_iters: 30, rel_tol: 1e-4, record_history: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::invalid(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations_run: usize,
    /// `||x_t - x_{t-1}||_F / ||x_{t-1}||_F` per iteration.
    pub rel_change_history: Vec<f64>,
    /// Squared data residual before each consistency overwrite; only
    /// populated when `record_history` is set.
    pub data_residual_history: Vec<f64>,
    /// Max deviation at acquired locations after the final overwrite.
    pub final_data_residual: f64,
}

/// Sum of squared deviations from the acquired data at sampled locations.
pub fn sake_residual(x: &KSpaceVolume, acquired: &KSpaceVolume, mask: &SamplingMask) -> Result<f64> {
    check_geometry(x, acquired, mask)?;
    let mut acc = 0.0;
    for c in 0..x.n_coils() {
        let xc = x.coil(c);
        let ac = acquired.coil(c);
        for r in 0..x.rows() {
            for col in 0..x.cols() {
                if mask.is_sampled(r, col) {
                    acc += (xc[[r, col]] - ac[[r, col]]).norm_sqr();
                }
            }
        }
    }
    Ok(acc)
}

fn check_geometry(x: &KSpaceVolume, acquired: &KSpaceVolume, mask: &SamplingMask) -> Result<()> {
    if x.n_coils() != acquired.n_coils() || x.rows() != acquired.rows() || x.cols() != acquired.cols()
    {
        return Err(Error::shape("estimate and acquired volume dims differ"));
    }
    if mask.rows() != x.rows() || mask.cols() != x.cols() {
        return Err(Error::shape("mask dims do not match volume"));
    }
    Ok(())
}

fn overwrite_acquired(x: &mut KSpaceVolume, acquired: &KSpaceVolume, mask: &SamplingMask) {
    let n_coils = x.n_coils();
    let (rows, cols) = (x.rows(), x.cols());
    let data = x.data_mut();
    for c in 0..n_coils {
        for r in 0..rows {
            for col in 0..cols {
                if mask.is_sampled(r, col) {
                    data[[c, r, col]] = acquired.data()[[c, r, col]];
                }
            }
        }
    }
}

fn max_deviation_at_sampled(x: &KSpaceVolume, acquired: &KSpaceVolume, mask: &SamplingMask) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..x.n_coils() {
        for r in 0..x.rows() {
            for col in 0..x.cols() {
                if mask.is_sampled(r, col) {
                    worst = worst.max((x.data()[[c, r, col]] - acquired.data()[[c, r, col]]).norm());
                }
            }
        }
    }
    worst
}

/// Completes unacquired k-space from `acquired` under `mask`.
///
/// Starts from the zero-filled volume and runs up to `max_iters` projection
/// rounds, stopping early once the relative change drops below `rel_tol`.
pub fn sake_reconstruct(
    acquired: &KSpaceVolume,
    mask: &SamplingMask,
    cfg: &SakeConfig,
) -> Result<(KSpaceVolume, SolveReport)> {
    cfg.validate()?;
    check_geometry(acquired, acquired, mask)?;
    let dims = VolumeDims::from(acquired);
    cfg.hankel.validate_for(dims)?;

    let mut x = apply_mask(acquired, mask)?;
    let mut report = SolveReport::default();

    for t in 1..=cfg.max_iters {
        let lifted = hankel_forward(&x, &cfg.hankel)?;
        let truncated = lowrank_project(&lifted, cfg.hankel.rank_k)?;
        let mut next = hankel_adjoint_avg(&truncated, dims, &cfg.hankel)?;

        if cfg.record_history {
            report
                .data_residual_history
                .push(sake_residual(&next, acquired, mask)?);
        }
        overwrite_acquired(&mut next, acquired, mask);

        if !next.data().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NumericalDivergence { iteration: t });
        }

        let num = (next.data() - x.data()).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let den = x.frob_norm();
        let rel = if den > 0.0 {
            num / den
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        report.rel_change_history.push(rel);
        report.iterations_run = t;
        x = next;

        if rel < cfg.rel_tol {
            break;
        }
    }

    report.final_data_residual = max_deviation_at_sampled(&x, acquired, mask);
    Ok((x, report))
}
