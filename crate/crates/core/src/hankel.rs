//! Block-Hankel lifting of multi-coil k-space and its low-rank projection.
//!
//! A sliding window of `win_rows x win_cols` walks every position of every
//! coil plane; each window is vectorized row-major and the per-coil pieces
//! are concatenated into one row of the data matrix. Coil-to-coil structure
//! makes that matrix strongly rank-deficient, which is what the completion
//! solver exploits.

use ndarray::{s, Array2, Array3};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kspace::KSpaceVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HankelConfig {
    pub win_rows: usize,
    pub win_cols: usize,
    pub rank_k: usize,
}

impl HankelConfig {
    pub fn new(win_rows: usize, win_cols: usize, rank_k: usize) -> Result<Self> {
        if win_rows == 0 || win_cols == 0 {
            return Err(Error::invalid("window dims must be nonzero"));
        }
        if rank_k == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        Ok(Self { win_rows, win_cols, rank_k })
    }

    /// Window 6x6 with the default rank heuristic.
    pub fn default_for(n_coils: usize) -> Self {
        Self { win_rows: 6, win_cols: 6, rank_k: default_rank(n_coils, 6, 6) }
    }

    pub fn validate_for(&self, dims: VolumeDims) -> Result<()> {
        if self.win_rows > dims.rows || self.win_cols > dims.cols {
            return Err(Error::shape(format!(
                "window {}x{} exceeds volume {}x{}",
                self.win_rows, self.win_cols, dims.rows, dims.cols
            )));
        }
        Ok(())
    }

    pub fn num_windows(&self, dims: VolumeDims) -> usize {
        (dims.rows - self.win_rows + 1) * (dims.cols - self.win_cols + 1)
    }

    pub fn matrix_cols(&self, dims: VolumeDims) -> usize {
        self.win_rows * self.win_cols * dims.n_coils
    }
}

/// Default rank heuristic: three per coil, floored at one window's pixel
/// count. The floor matters at low coil counts, where 3 per coil would sit
/// far below the dimension any image-like lifting actually occupies.
pub fn default_rank(n_coils: usize, win_rows: usize, win_cols: usize) -> usize {
    n_coils.max(1).saturating_mul(3).max(win_rows.saturating_mul(win_cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeDims {
    pub n_coils: usize,
    pub rows: usize,
    pub cols: usize,
}

impl From<&KSpaceVolume> for VolumeDims {
    fn from(v: &KSpaceVolume) -> Self {
        Self { n_coils: v.n_coils(), rows: v.rows(), cols: v.cols() }
    }
}

/// The lifted data matrix, `(num_windows, win_rows*win_cols*n_coils)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<Complex64>,
}

impl DataMatrix {
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn num_windows(&self) -> usize {
        self.values.nrows()
    }

    pub fn frob_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Lifts a volume into its block-Hankel data matrix. Window positions run
/// row-major; so do the entries inside each window.
pub fn hankel_forward(vol: &KSpaceVolume, cfg: &HankelConfig) -> Result<DataMatrix> {
    let dims = VolumeDims::from(vol);
    cfg.validate_for(dims)?;
    let (wr, wc) = (cfg.win_rows, cfg.win_cols);
    let (nwr, nwc) = (dims.rows - wr + 1, dims.cols - wc + 1);
    let mut values = Array2::zeros((nwr * nwc, wr * wc * dims.n_coils));
    let data = vol.data();
    for wi in 0..nwr {
        for wj in 0..nwc {
            let row = wi * nwc + wj;
            for c in 0..dims.n_coils {
                let base = c * wr * wc;
                for a in 0..wr {
                    for b in 0..wc {
                        values[[row, base + a * wc + b]] = data[[c, wi + a, wj + b]];
                    }
                }
            }
        }
    }
    Ok(DataMatrix { values })
}

/// Maps a data matrix back to a volume, averaging every k-space location
/// over all windows that contain it. Inverts [`hankel_forward`] exactly on
/// structured matrices (up to rounding in the average).
pub fn hankel_adjoint_avg(
    mat: &DataMatrix,
    dims: VolumeDims,
    cfg: &HankelConfig,
) -> Result<KSpaceVolume> {
    cfg.validate_for(dims)?;
    let (wr, wc) = (cfg.win_rows, cfg.win_cols);
    let (nwr, nwc) = (dims.rows - wr + 1, dims.cols - wc + 1);
    let want = (nwr * nwc, wr * wc * dims.n_coils);
    if mat.values.dim() != want {
        return Err(Error::shape(format!(
            "data matrix is {:?}, dims/config imply {:?}",
            mat.values.dim(),
            want
        )));
    }

    let mut sums: Array3<Complex64> = Array3::zeros((dims.n_coils, dims.rows, dims.cols));
    let mut counts = Array2::<f64>::zeros((dims.rows, dims.cols));
    for wi in 0..nwr {
        for wj in 0..nwc {
            let row = wi * nwc + wj;
            for a in 0..wr {
                for b in 0..wc {
                    counts[[wi + a, wj + b]] += 1.0;
                    for c in 0..dims.n_coils {
                        sums[[c, wi + a, wj + b]] += mat.values[[row, c * wr * wc + a * wc + b]];
                    }
                }
            }
        }
    }
    for c in 0..dims.n_coils {
        for r in 0..dims.rows {
            for col in 0..dims.cols {
                sums[[c, r, col]] /= counts[[r, col]];
            }
        }
    }
    KSpaceVolume::new(sums)
}

/// Singular values of the data matrix, descending.
pub fn singular_values(mat: &DataMatrix) -> Result<Vec<f64>> {
    let (_, s, _) = mat
        .values
        .svddc(JobSvd::None)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(s.to_vec())
}

/// Truncates the data matrix to its best rank-`k` approximation in the
/// Frobenius sense. `k` at or above full rank returns the input unchanged.
pub fn lowrank_project(mat: &DataMatrix, rank_k: usize) -> Result<DataMatrix> {
    if rank_k == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    let (m, n) = mat.values.dim();
    if rank_k >= m.min(n) {
        return Ok(mat.clone());
    }
    let (u, sv, vt) = mat
        .values
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let u = u.ok_or_else(|| Error::Linalg("svd returned no left vectors".into()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd returned no right vectors".into()))?;

    let mut uk = u.slice(s![.., ..rank_k]).to_owned();
    for (mut col, &sigma) in uk.columns_mut().into_iter().zip(sv.iter()) {
        col.mapv_inplace(|v| v * sigma);
    }
    let values = uk.dot(&vt.slice(s![..rank_k, ..]));
    if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite("low-rank projection"));
    }
    Ok(DataMatrix { values })
}
