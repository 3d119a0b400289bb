//! Region similarity (J), boundary accuracy (F) and their mean over a
//! video.
//!
//! Boundaries are the foreground pixels that touch background through one
//! of their four neighbours, with the image border counting as background.
//! A boundary pixel is matched when some pixel of the other boundary lies
//! within the tolerance in Chebyshev distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mask::{intersection_area, iou, BinaryMask, Dims};
use crate::refine::MaskSequence;

/// Region similarity: the Jaccard index of `pred` and `gt`.
pub fn region_j(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    iou(pred, gt)
}

/// Boundary tolerance for a raster: 0.8% of the diagonal, rounded, at
/// least one pixel.
pub fn default_tolerance(dims: Dims) -> usize {
    let diag = ((dims.height * dims.height + dims.width * dims.width) as f64).sqrt();
    ((0.008 * diag).round() as usize).max(1)
}

/// Foreground pixels with a background 4-neighbour or on the image edge.
pub fn boundary(m: &BinaryMask) -> BinaryMask {
    let Dims {
        height: h,
        width: w,
    } = m.dims();
    let px = m.to_bools();
    let at = |r: usize, c: usize| px[r * w + c];
    BinaryMask::from_fn(m.dims(), |r, c| {
        at(r, c)
            && (r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !at(r - 1, c)
                || !at(r + 1, c)
                || !at(r, c - 1)
                || !at(r, c + 1))
    })
}

/// Dilation by a `(2 * radius + 1)` square, i.e. every pixel within
/// Chebyshev distance `radius` of the foreground.
pub fn dilate(m: &BinaryMask, radius: usize) -> BinaryMask {
    let Dims {
        height: h,
        width: w,
    } = m.dims();
    let px = m.to_bools();

    // Horizontal pass with running counts, then vertical.
    let mut horiz = vec![false; h * w];
    let mut prefix = vec![0usize; w.max(h) + 1];
    for r in 0..h {
        for c in 0..w {
            prefix[c + 1] = prefix[c] + px[r * w + c] as usize;
        }
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius + 1).min(w);
            horiz[r * w + c] = prefix[hi] > prefix[lo];
        }
    }
    let mut out = vec![false; h * w];
    for c in 0..w {
        for r in 0..h {
            prefix[r + 1] = prefix[r] + horiz[r * w + c] as usize;
        }
        for r in 0..h {
            let lo = r.saturating_sub(radius);
            let hi = (r + radius + 1).min(h);
            out[r * w + c] = prefix[hi] > prefix[lo];
        }
    }
    BinaryMask::from_bools(m.dims(), &out).expect("raster size is preserved")
}

/// F-measure from matched boundary counts. Both boundaries empty scores 1;
/// exactly one empty scores 0.
pub fn f_measure(
    pred_matched: usize,
    pred_total: usize,
    gt_matched: usize,
    gt_total: usize,
) -> f64 {
    match (pred_total, gt_total) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => {
            let precision = pred_matched as f64 / pred_total as f64;
            let recall = gt_matched as f64 / gt_total as f64;
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        }
    }
}

/// Boundary F-measure of `pred` against `gt` at `tolerance_px`.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tolerance_px: usize) -> Result<f64> {
    if pred.dims() != gt.dims() {
        return Err(Error::Shape {
            expected: gt.dims(),
            found: pred.dims(),
        });
    }
    if tolerance_px == 0 {
        return Err(Error::Config(
            "boundary tolerance must be at least 1 px".into(),
        ));
    }
    let pb = boundary(pred);
    let gb = boundary(gt);
    let (p_total, g_total) = (pb.area(), gb.area());
    if p_total == 0 || g_total == 0 {
        return Ok(f_measure(0, p_total, 0, g_total));
    }
    let p_matched = intersection_area(&pb, &dilate(&gb, tolerance_px))?;
    let g_matched = intersection_area(&gb, &dilate(&pb, tolerance_px))?;
    Ok(f_measure(p_matched, p_total, g_matched, g_total))
}

/// Scores of a predicted sequence against ground truth, as fractions in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub j_mean: f64,
    pub f_mean: f64,
    pub jf_mean: f64,
    /// `(j, f)` per frame.
    pub per_frame: Vec<(f64, f64)>,
}

/// JSON form of an [`EvalResult`], scaled to `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "J&F")]
    pub jf: f64,
    pub per_frame: Vec<[f64; 2]>,
}

impl EvalResult {
    pub fn to_report(&self) -> EvalReport {
        EvalReport {
            j: self.j_mean * 100.0,
            f: self.f_mean * 100.0,
            jf: self.jf_mean * 100.0,
            per_frame: self
                .per_frame
                .iter()
                .map(|&(j, f)| [j * 100.0, f * 100.0])
                .collect(),
        }
    }
}

/// Per-frame J and F and their means. `tolerance_px` defaults to
/// [`default_tolerance`].
pub fn evaluate_sequence(
    pred: &MaskSequence,
    gt: &MaskSequence,
    tolerance_px: Option<usize>,
) -> Result<EvalResult> {
    evaluate_sequence_with(pred, gt, tolerance_px, Execution::default())
}

pub fn evaluate_sequence_with(
    pred: &MaskSequence,
    gt: &MaskSequence,
    tolerance_px: Option<usize>,
    exec: Execution,
) -> Result<EvalResult> {
    if pred.len() != gt.len() {
        return Err(Error::Alignment(format!(
            "prediction has {} frames but ground truth has {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.dims() != gt.dims() {
        return Err(Error::Alignment(format!(
            "prediction frames are {} but ground truth frames are {}",
            pred.dims(),
            gt.dims()
        )));
    }
    let tol = tolerance_px.unwrap_or_else(|| default_tolerance(gt.dims()));
    let per_frame = exec
        .map_range(gt.len(), |t| {
            let (p, g) = (&pred.frames()[t], &gt.frames()[t]);
            Ok((region_j(p, g)?, boundary_f(p, g, tol)?))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = per_frame.len() as f64;
    let j_mean = per_frame.iter().map(|p| p.0).sum::<f64>() / n;
    let f_mean = per_frame.iter().map(|p| p.1).sum::<f64>() / n;
    Ok(EvalResult {
        j_mean,
        f_mean,
        jf_mean: (j_mean + f_mean) / 2.0,
        per_frame,
    })
}
