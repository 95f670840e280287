//! Partitioned k-space synthesis across contrasts.
//!
//! The under-sampled target contrast is cut into 2..4 blocks along one
//! k-space axis. For each block we synthesize a hybrid volume that keeps the
//! (masked) target data inside that block and fills every other block with
//! fully sampled k-space from auxiliary contrasts of the same anatomy. Each
//! hybrid is completed independently by the low-rank solver; the target
//! blocks are then cut back out and concatenated. Optionally the target
//! span of each hybrid extends a few lines past its interior boundaries,
//! and the doubly-covered lines are averaged on the way back.

use std::ops::Range;

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kspace::{apply_mask, KSpaceVolume, SamplingMask};
use crate::sake::{sake_reconstruct, SakeConfig, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionAxis {
    Row,
    Column,
}

impl std::fmt::Display for PartitionAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PartitionAxis::Row => "row",
            PartitionAxis::Column => "column",
        })
    }
}

impl std::str::FromStr for PartitionAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(PartitionAxis::Row),
            "column" | "col" => Ok(PartitionAxis::Column),
            other => Err(Error::invalid(format!("unknown partition axis '{other}'"))),
        }
    }
}

/// How to cut a k-space extent into consecutive blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    axis: PartitionAxis,
    /// Interior cut positions, strictly increasing, inside `(0, extent)`.
    boundaries: Vec<usize>,
    extent: usize,
    /// Lines the target block extends past each of its interior boundaries.
    overlap: usize,
}

impl PartitionSpec {
    pub fn with_boundaries(
        axis: PartitionAxis,
        boundaries: Vec<usize>,
        extent: usize,
        overlap: usize,
    ) -> Result<Self> {
        if extent == 0 {
            return Err(Error::invalid("partition extent must be nonzero"));
        }
        let p = boundaries.len() + 1;
        if !(1..=4).contains(&p) {
            return Err(Error::invalid(format!("partition needs 1..=4 blocks, got {p}")));
        }
        for w in boundaries.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid("partition boundaries must be strictly increasing"));
            }
        }
        if boundaries.iter().any(|&b| b == 0 || b >= extent) {
            return Err(Error::invalid(format!(
                "partition boundaries must lie strictly inside (0, {extent})"
            )));
        }
        if let (Some(&first), Some(&last)) = (boundaries.first(), boundaries.last()) {
            if overlap > first || overlap > extent - last {
                return Err(Error::invalid(format!(
                    "overlap {overlap} pushes an extended block outside 0..{extent}"
                )));
            }
            if boundaries.windows(2).any(|w| w[1] - w[0] < 2 * overlap) {
                return Err(Error::invalid(format!(
                    "overlap {overlap} makes extended blocks claim a line more than twice"
                )));
            }
        }
        Ok(Self { axis, boundaries, extent, overlap })
    }

    /// Equal-size blocks (remainder spread by flooring `i*extent/p`).
    pub fn equal(axis: PartitionAxis, num_blocks: usize, extent: usize, overlap: usize) -> Result<Self> {
        if !(1..=4).contains(&num_blocks) {
            return Err(Error::invalid(format!(
                "partition needs 1..=4 blocks, got {num_blocks}"
            )));
        }
        let boundaries = (1..num_blocks).map(|i| i * extent / num_blocks).collect();
        Self::with_boundaries(axis, boundaries, extent, overlap)
    }

    pub fn axis(&self) -> PartitionAxis {
        self.axis
    }

    pub fn num_blocks(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Core (non-overlapping) span of each block, in order.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut starts = vec![0];
        starts.extend_from_slice(&self.boundaries);
        let mut ends = self.boundaries.clone();
        ends.push(self.extent);
        starts.into_iter().zip(ends).map(|(s, e)| s..e).collect()
    }

    /// Block span extended by `overlap` past each interior boundary.
    pub fn extended_range(&self, block: usize) -> Range<usize> {
        let core = &self.block_ranges()[block];
        let lo = if block == 0 { core.start } else { core.start - self.overlap };
        let hi = if block == self.num_blocks() - 1 { core.end } else { core.end + self.overlap };
        lo..hi
    }

    fn len_along(&self, vol: &KSpaceVolume) -> usize {
        match self.axis {
            PartitionAxis::Row => vol.rows(),
            PartitionAxis::Column => vol.cols(),
        }
    }
}

/// Where a span of k-space lines in a hybrid object came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceLabel {
    /// Masked lines of the under-sampled target contrast.
    Target,
    /// Fully sampled lines of auxiliary contrast `i`.
    Aux(usize),
}

/// One synthesized volume: target data in one (extended) block, auxiliary
/// data everywhere else, plus the union sampling mask the solver should use.
#[derive(Debug, Clone)]
pub struct HybridObject {
    pub volume: KSpaceVolume,
    pub mask_union: SamplingMask,
    /// Disjoint spans along the partition axis covering the whole extent,
    /// each attributed to exactly one source contrast.
    pub sources: Vec<(Range<usize>, SourceLabel)>,
    pub target_block: usize,
    /// Extended target span along the partition axis.
    pub target_span: Range<usize>,
}

/// An under-sampled target plus fully sampled auxiliary contrasts that share
/// its geometry.
#[derive(Debug, Clone)]
pub struct ContrastSet {
    target: KSpaceVolume,
    mask: SamplingMask,
    auxiliaries: Vec<(String, KSpaceVolume)>,
}

impl ContrastSet {
    pub fn new(
        target: KSpaceVolume,
        mask: SamplingMask,
        auxiliaries: Vec<(String, KSpaceVolume)>,
    ) -> Result<Self> {
        if mask.rows() != target.rows() || mask.cols() != target.cols() {
            return Err(Error::shape("mask dims do not match target volume"));
        }
        for (label, aux) in &auxiliaries {
            if label.is_empty() {
                return Err(Error::invalid("auxiliary label must be nonempty"));
            }
            if aux.n_coils() != target.n_coils()
                || aux.rows() != target.rows()
                || aux.cols() != target.cols()
            {
                return Err(Error::shape(format!(
                    "auxiliary '{label}' dims do not match target"
                )));
            }
        }
        Ok(Self { target, mask, auxiliaries })
    }

    pub fn target(&self) -> &KSpaceVolume {
        &self.target
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn auxiliaries(&self) -> &[(String, KSpaceVolume)] {
        &self.auxiliaries
    }

    pub fn n_aux(&self) -> usize {
        self.auxiliaries.len()
    }

    fn transposed(&self) -> ContrastSet {
        ContrastSet {
            target: self.target.transposed(),
            mask: self.mask.transposed(),
            auxiliaries: self
                .auxiliaries
                .iter()
                .map(|(l, v)| (l.clone(), v.transposed()))
                .collect(),
        }
    }
}

/// Cuts a volume into the core blocks of a partition.
pub fn decompose(vol: &KSpaceVolume, spec: &PartitionSpec) -> Result<Vec<KSpaceVolume>> {
    if spec.len_along(vol) != spec.extent {
        return Err(Error::shape(format!(
            "partition extent {} does not match volume extent {}",
            spec.extent,
            spec.len_along(vol)
        )));
    }
    let ax = match spec.axis {
        PartitionAxis::Row => Axis(1),
        PartitionAxis::Column => Axis(2),
    };
    spec.block_ranges()
        .into_iter()
        .map(|r| {
            let slab = vol.data().slice_axis(ax, ndarray::Slice::from(r)).to_owned();
            KSpaceVolume::new(slab)
        })
        .collect()
}

/// Concatenates blocks back along the partition axis. Exact inverse of
/// [`decompose`] for the same spec.
pub fn concat_blocks(blocks: &[KSpaceVolume], axis: PartitionAxis) -> Result<KSpaceVolume> {
    if blocks.is_empty() {
        return Err(Error::invalid("cannot concatenate zero blocks"));
    }
    let ax = match axis {
        PartitionAxis::Row => Axis(1),
        PartitionAxis::Column => Axis(2),
    };
    let views: Vec<_> = blocks.iter().map(|b| b.data().view()).collect();
    let data = ndarray::concatenate(ax, &views)
        .map_err(|e| Error::shape(format!("block concat failed: {e}")))?;
    KSpaceVolume::new(data)
}

fn cycle_sources(spec: &PartitionSpec, target_block: usize, n_aux: usize) -> Vec<SourceLabel> {
    let mut labels = vec![SourceLabel::Target; spec.num_blocks()];
    let mut next = 0usize;
    for (j, slot) in labels.iter_mut().enumerate() {
        if j != target_block {
            *slot = SourceLabel::Aux(next % n_aux);
            next += 1;
        }
    }
    labels
}

/// Builds hybrid objects in row orientation from a per-line source choice.
fn assemble_row_hybrids(
    cs: &ContrastSet,
    spec: &PartitionSpec,
    line_sources: impl Fn(usize, usize) -> SourceLabel, // (target_block, line) -> source
) -> Result<Vec<HybridObject>> {
    let masked_target = apply_mask(cs.target(), cs.mask())?;
    let (nc, rows, cols) = (cs.target().n_coils(), cs.target().rows(), cs.target().cols());

    let mut objects = Vec::with_capacity(spec.num_blocks());
    for i in 0..spec.num_blocks() {
        let tspan = spec.extended_range(i);
        let mut vol = Array3::<Complex64>::zeros((nc, rows, cols));
        let mut ind = Array2::<u8>::ones((rows, cols));
        let mut sources: Vec<(Range<usize>, SourceLabel)> = Vec::new();

        for r in 0..rows {
            let label = if tspan.contains(&r) { SourceLabel::Target } else { line_sources(i, r) };
            let src = match label {
                SourceLabel::Target => {
                    for j in 0..cols {
                        ind[[r, j]] = cs.mask().indicator()[[r, j]];
                    }
                    masked_target.data()
                }
                SourceLabel::Aux(a) => cs.auxiliaries()[a].1.data(),
            };
            for c in 0..nc {
                for j in 0..cols {
                    vol[[c, r, j]] = src[[c, r, j]];
                }
            }
            match sources.last_mut() {
                Some((span, last)) if *last == label && span.end == r => span.end = r + 1,
                _ => sources.push((r..r + 1, label)),
            }
        }

        objects.push(HybridObject {
            volume: KSpaceVolume::new(vol)?,
            mask_union: SamplingMask::new(ind, cs.mask().nominal_r(), cs.mask().seed())?,
            sources,
            target_block: i,
            target_span: tspan,
        });
    }
    Ok(objects)
}

fn transpose_objects(objects: Vec<HybridObject>) -> Vec<HybridObject> {
    objects
        .into_iter()
        .map(|o| HybridObject {
            volume: o.volume.transposed(),
            mask_union: o.mask_union.transposed(),
            sources: o.sources,
            target_block: o.target_block,
            target_span: o.target_span,
        })
        .collect()
}

fn check_transform_inputs(cs: &ContrastSet, spec: &PartitionSpec) -> Result<()> {
    if cs.n_aux() == 0 {
        return Err(Error::invalid("partition synthesis needs at least one auxiliary contrast"));
    }
    if spec.len_along(cs.target()) != spec.extent {
        return Err(Error::shape(format!(
            "partition extent {} does not match volume extent {}",
            spec.extent,
            spec.len_along(cs.target())
        )));
    }
    Ok(())
}

/// One hybrid object per block: the block's (masked) target lines plus
/// auxiliary lines everywhere else, auxiliaries cycling in order across the
/// non-target blocks.
pub fn pks_transform(cs: &ContrastSet, spec: &PartitionSpec) -> Result<Vec<HybridObject>> {
    check_transform_inputs(cs, spec)?;
    let row_view;
    let (work_cs, work_spec) = match spec.axis {
        PartitionAxis::Row => (cs, spec.clone()),
        PartitionAxis::Column => {
            row_view = cs.transposed();
            let mut s = spec.clone();
            s.axis = PartitionAxis::Row;
            (&row_view, s)
        }
    };

    let ranges = work_spec.block_ranges();
    let n_aux = work_cs.n_aux();
    let objects = assemble_row_hybrids(work_cs, &work_spec, |target_block, line| {
        let j = ranges.iter().position(|r| r.contains(&line)).expect("line inside extent");
        cycle_sources(&work_spec, target_block, n_aux)[j]
    })?;

    Ok(match spec.axis {
        PartitionAxis::Row => objects,
        PartitionAxis::Column => transpose_objects(objects),
    })
}

/// Two-block variant that splits the single non-target block in half and
/// fills the halves from two auxiliaries. With auxiliaries `[a, b]` the half
/// nearer the volume center gets `a`; `reverse` swaps that assignment.
pub fn compose_multi_aux(
    cs: &ContrastSet,
    spec: &PartitionSpec,
    reverse: bool,
) -> Result<Vec<HybridObject>> {
    check_transform_inputs(cs, spec)?;
    if spec.num_blocks() != 2 {
        return Err(Error::invalid(format!(
            "multi-aux composition needs exactly 2 blocks, got {}",
            spec.num_blocks()
        )));
    }
    if cs.n_aux() != 2 {
        return Err(Error::invalid(format!(
            "multi-aux composition needs exactly 2 auxiliaries, got {}",
            cs.n_aux()
        )));
    }

    let row_view;
    let (work_cs, work_spec) = match spec.axis {
        PartitionAxis::Row => (cs, spec.clone()),
        PartitionAxis::Column => {
            row_view = cs.transposed();
            let mut s = spec.clone();
            s.axis = PartitionAxis::Row;
            (&row_view, s)
        }
    };

    let ranges = work_spec.block_ranges();
    let (first, second) = if reverse { (1, 0) } else { (0, 1) };
    let objects = assemble_row_hybrids(work_cs, &work_spec, |target_block, line| {
        let other = &ranges[1 - target_block];
        let mid = other.start + (other.end - other.start) / 2;
        debug_assert!(other.contains(&line));
        if line < mid {
            SourceLabel::Aux(first)
        } else {
            SourceLabel::Aux(second)
        }
    })?;

    Ok(match spec.axis {
        PartitionAxis::Row => objects,
        PartitionAxis::Column => transpose_objects(objects),
    })
}

/// Extracts the (extended) target block from each reconstructed hybrid and
/// reassembles the target volume, averaging lines claimed by two blocks.
pub fn pks_inverse_transform(
    recons: &[KSpaceVolume],
    spec: &PartitionSpec,
) -> Result<KSpaceVolume> {
    if recons.len() != spec.num_blocks() {
        return Err(Error::shape(format!(
            "expected {} reconstructions, got {}",
            spec.num_blocks(),
            recons.len()
        )));
    }
    let row_vols: Vec<KSpaceVolume> = match spec.axis {
        PartitionAxis::Row => recons.to_vec(),
        PartitionAxis::Column => recons.iter().map(|v| v.transposed()).collect(),
    };
    let (nc, rows, cols) = (row_vols[0].n_coils(), row_vols[0].rows(), row_vols[0].cols());
    for v in &row_vols {
        if v.n_coils() != nc || v.rows() != rows || v.cols() != cols {
            return Err(Error::shape("reconstruction dims differ across blocks"));
        }
    }
    if rows != spec.extent {
        return Err(Error::shape(format!(
            "partition extent {} does not match reconstruction extent {rows}",
            spec.extent
        )));
    }

    let mut sum = Array3::<Complex64>::zeros((nc, rows, cols));
    let mut count = vec![0.0f64; rows];
    for (i, vol) in row_vols.iter().enumerate() {
        let span = spec.extended_range(i);
        for r in span {
            count[r] += 1.0;
            for c in 0..nc {
                for j in 0..cols {
                    sum[[c, r, j]] += vol.data()[[c, r, j]];
                }
            }
        }
    }
    for r in 0..rows {
        debug_assert!(count[r] >= 1.0);
        for c in 0..nc {
            for j in 0..cols {
                sum[[c, r, j]] /= count[r];
            }
        }
    }
    let out = KSpaceVolume::new(sum)?;
    Ok(match spec.axis {
        PartitionAxis::Row => out,
        PartitionAxis::Column => out.transposed(),
    })
}

/// Runs the completion solver on each hybrid in order.
pub fn reconstruct_hybrids(
    objects: &[HybridObject],
    cfg: &SakeConfig,
) -> Result<(Vec<KSpaceVolume>, Vec<SolveReport>)> {
    let mut vols = Vec::with_capacity(objects.len());
    let mut reports = Vec::with_capacity(objects.len());
    for obj in objects {
        let (vol, report) = sake_reconstruct(&obj.volume, &obj.mask_union, cfg)?;
        vols.push(vol);
        reports.push(report);
    }
    Ok((vols, reports))
}

/// Full pipeline: transform, solve every hybrid, inverse transform.
/// Acquired target samples come back unchanged.
pub fn sake_pks(
    cs: &ContrastSet,
    spec: &PartitionSpec,
    cfg: &SakeConfig,
) -> Result<(KSpaceVolume, Vec<SolveReport>)> {
    let objects = pks_transform(cs, spec)?;
    let (vols, reports) = reconstruct_hybrids(&objects, cfg)?;
    Ok((pks_inverse_transform(&vols, spec)?, reports))
}

/// Full pipeline over the two-auxiliary half-block composition.
pub fn sake_pks_multi_aux(
    cs: &ContrastSet,
    spec: &PartitionSpec,
    cfg: &SakeConfig,
    reverse: bool,
) -> Result<(KSpaceVolume, Vec<SolveReport>)> {
    let objects = compose_multi_aux(cs, spec, reverse)?;
    let (vols, reports) = reconstruct_hybrids(&objects, cfg)?;
    Ok((pks_inverse_transform(&vols, spec)?, reports))
}
