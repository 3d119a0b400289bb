//! Windowed refinement of coarse masks against tracked masklets.
//!
//! Each frame's coarse mask is compared with every masklet: an instance is
//! part of the frame's combination when the share of its area covered by
//! the coarse mask exceeds `tau`. Within each non-overlapping window the
//! most frequent combination is selected and every frame of the window is
//! rebuilt as the union of the selected masklets. A window whose selection
//! is empty keeps its coarse frames untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mask::{intersection_area, union, BinaryMask, Dims};

/// `T` frames of equal size: coarse predictions, ground truth or refined
/// output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSequence {
    frames: Vec<BinaryMask>,
}

pub type CoarseSequence = MaskSequence;

impl MaskSequence {
    pub fn new(frames: Vec<BinaryMask>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Alignment(
                "a sequence needs at least one frame".into(),
            ));
        };
        let dims = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::Shape {
                expected: dims,
                found: bad.dims(),
            });
        }
        Ok(MaskSequence { frames })
    }

    pub fn frames(&self) -> &[BinaryMask] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<BinaryMask> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.frames[0].dims()
    }
}

/// `N` identity-stable instance tracks, each exactly `T` frames long.
/// Instance `i` (1-based) is `tracks()[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskletSet {
    dims: Dims,
    num_frames: usize,
    tracks: Vec<Vec<BinaryMask>>,
}

impl MaskletSet {
    pub fn new(dims: Dims, num_frames: usize, tracks: Vec<Vec<BinaryMask>>) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::Alignment("masklets need at least one frame".into()));
        }
        for (i, track) in tracks.iter().enumerate() {
            if track.len() != num_frames {
                return Err(Error::Alignment(format!(
                    "instance {} has {} frames, expected {num_frames}",
                    i + 1,
                    track.len()
                )));
            }
            if let Some(bad) = track.iter().find(|m| m.dims() != dims) {
                return Err(Error::Shape {
                    expected: dims,
                    found: bad.dims(),
                });
            }
        }
        Ok(MaskletSet {
            dims,
            num_frames,
            tracks,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_instances(&self) -> usize {
        self.tracks.len()
    }

    pub fn tracks(&self) -> &[Vec<BinaryMask>] {
        &self.tracks
    }

    /// Track of 1-based instance `index`.
    pub fn instance(&self, index: u32) -> Option<&[BinaryMask]> {
        let i = (index as usize).checked_sub(1)?;
        self.tracks.get(i).map(Vec::as_slice)
    }
}

/// Sorted, duplicate-free set of 1-based instance indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct Combination(Vec<u32>);

impl Combination {
    pub fn empty() -> Self {
        Combination(Vec::new())
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.0.binary_search(&index).is_ok()
    }
}

impl From<Vec<u32>> for Combination {
    fn from(mut v: Vec<u32>) -> Self {
        v.sort_unstable();
        v.dedup();
        Combination(v)
    }
}

impl From<Combination> for Vec<u32> {
    fn from(c: Combination) -> Self {
        c.0
    }
}

impl<const K: usize> From<[u32; K]> for Combination {
    fn from(a: [u32; K]) -> Self {
        Combination::from(a.to_vec())
    }
}

impl fmt::Display for Combination {
    /// Tuple notation: `()`, `(2,)`, `(1, 2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [] => f.write_str("()"),
            [one] => write!(f, "({one},)"),
            many => {
                f.write_str("(")?;
                for (k, i) in many.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{i}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// How to choose among equally frequent combinations in a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// The tied combination that shows up first in the window.
    #[default]
    Earliest,
    /// The tied combination whose first appearance is latest.
    Latest,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earliest" => Ok(TieBreak::Earliest),
            "latest" => Ok(TieBreak::Latest),
            other => Err(Error::Config(format!(
                "unknown tie-break policy {other:?} (expected \"earliest\" or \"latest\")"
            ))),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Earliest => "earliest",
            TieBreak::Latest => "latest",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Frames per window.
    pub window: usize,
    /// Overlap threshold; an instance is gated in when its fraction is
    /// strictly greater.
    pub tau: f64,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            window: 15,
            tau: 0.8,
            tie_break: TieBreak::Earliest,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1 frame".into()));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Config(format!(
                "tau must lie in [0, 1), got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    /// 1-based frame number within the video.
    pub frame: usize,
    pub combination: Combination,
    /// Overlap fraction of each instance, index `i - 1` for instance `i`.
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    /// First frame of the window, 1-based.
    pub start: usize,
    /// Last frame of the window, 1-based and inclusive.
    pub end: usize,
    pub selected: Combination,
    /// False when the selection was empty and the coarse frames were kept.
    pub refined: bool,
    pub frames: Vec<FrameReport>,
}

impl WindowReport {
    pub fn combinations(&self) -> Vec<Combination> {
        self.frames.iter().map(|f| f.combination.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutput {
    pub frames: Vec<BinaryMask>,
    pub report: WindowReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSequence {
    pub frames: Vec<BinaryMask>,
    pub windows: Vec<WindowReport>,
}

impl RefinedSequence {
    pub fn to_sequence(&self) -> MaskSequence {
        MaskSequence {
            frames: self.frames.clone(),
        }
    }

    pub fn into_sequence(self) -> MaskSequence {
        MaskSequence {
            frames: self.frames,
        }
    }

    /// Per-frame combinations over the whole video.
    pub fn combinations(&self) -> Vec<Combination> {
        self.windows.iter().flat_map(|w| w.combinations()).collect()
    }
}

/// Share of `v`'s area covered by `u`; zero when `v` is empty.
pub fn overlap_fraction(v: &BinaryMask, u: &BinaryMask) -> Result<f64> {
    let inter = intersection_area(v, u)?;
    let area = v.area();
    if area == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / area as f64)
}

fn fractions_and_combination<'a, I>(
    tracked: I,
    u: &BinaryMask,
    tau: f64,
) -> Result<(Vec<f64>, Combination)>
where
    I: IntoIterator<Item = &'a BinaryMask>,
{
    let mut fractions = Vec::new();
    let mut indices = Vec::new();
    for (i, v) in tracked.into_iter().enumerate() {
        let f = overlap_fraction(v, u)?;
        if f > tau {
            indices.push(i as u32 + 1);
        }
        fractions.push(f);
    }
    // Indices are produced in increasing order.
    Ok((fractions, Combination(indices)))
}

/// Instances whose overlap fraction with `u` exceeds `tau`.
/// `tracked[i]` is instance `i + 1` at this frame.
pub fn frame_combination(tracked: &[BinaryMask], u: &BinaryMask, tau: f64) -> Result<Combination> {
    fractions_and_combination(tracked, u, tau).map(|(_, c)| c)
}

/// The most frequent combination in `combos`, or `None` if it is empty.
pub fn select_combination(combos: &[Combination], tie_break: TieBreak) -> Option<Combination> {
    // (combination, multiplicity) in order of first appearance.
    let mut tally: Vec<(&Combination, usize)> = Vec::new();
    for c in combos {
        match tally.iter_mut().find(|(k, _)| *k == c) {
            Some((_, n)) => *n += 1,
            None => tally.push((c, 1)),
        }
    }
    let mut best: Option<(&Combination, usize)> = None;
    for (c, n) in tally {
        let replace = match best {
            None => true,
            Some((_, m)) => match tie_break {
                TieBreak::Earliest => n > m,
                TieBreak::Latest => n >= m,
            },
        };
        if replace {
            best = Some((c, n));
        }
    }
    best.map(|(c, _)| c.clone())
}

/// Refine one window. `coarse` holds the window's frames and `tracked[i]`
/// the same frames of instance `i + 1`. Reported frame numbers start at 1.
pub fn refine_window(
    coarse: &[BinaryMask],
    tracked: &[&[BinaryMask]],
    cfg: &RefineConfig,
) -> Result<WindowOutput> {
    cfg.validate()?;
    refine_window_at(0, coarse, tracked, cfg)
}

fn refine_window_at(
    offset: usize,
    coarse: &[BinaryMask],
    tracked: &[&[BinaryMask]],
    cfg: &RefineConfig,
) -> Result<WindowOutput> {
    let Some(first) = coarse.first() else {
        return Err(Error::Alignment("empty window".into()));
    };
    let dims = first.dims();
    for (i, track) in tracked.iter().enumerate() {
        if track.len() != coarse.len() {
            return Err(Error::Alignment(format!(
                "instance {} covers {} frames of a {}-frame window",
                i + 1,
                track.len(),
                coarse.len()
            )));
        }
    }

    let mut frames = Vec::with_capacity(coarse.len());
    for (t, u) in coarse.iter().enumerate() {
        let (fractions, combination) =
            fractions_and_combination(tracked.iter().map(|track| &track[t]), u, cfg.tau)?;
        frames.push(FrameReport {
            frame: offset + t + 1,
            combination,
            fractions,
        });
    }

    let combos: Vec<Combination> = frames.iter().map(|f| f.combination.clone()).collect();
    let selected = select_combination(&combos, cfg.tie_break).unwrap_or_default();
    let refined = !selected.is_empty();

    let out = if refined {
        (0..coarse.len())
            .map(|t| {
                let members = selected
                    .indices()
                    .iter()
                    .map(|&i| &tracked[i as usize - 1][t]);
                union(members, Some(dims))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        coarse.to_vec()
    };

    Ok(WindowOutput {
        frames: out,
        report: WindowReport {
            start: offset + 1,
            end: offset + coarse.len(),
            selected,
            refined,
            frames,
        },
    })
}

/// Refine a whole video window by window using the default execution
/// strategy.
pub fn refine_video(
    coarse: &MaskSequence,
    tracked: &MaskletSet,
    cfg: &RefineConfig,
) -> Result<RefinedSequence> {
    refine_video_with(coarse, tracked, cfg, Execution::default())
}

/// As [`refine_video`], with an explicit execution strategy. The output does
/// not depend on the strategy or on the number of worker threads.
pub fn refine_video_with(
    coarse: &MaskSequence,
    tracked: &MaskletSet,
    cfg: &RefineConfig,
    exec: Execution,
) -> Result<RefinedSequence> {
    cfg.validate()?;
    let t = coarse.len();
    if tracked.num_frames() != t {
        return Err(Error::Alignment(format!(
            "coarse sequence has {t} frames but masklets have {}",
            tracked.num_frames()
        )));
    }
    if tracked.dims() != coarse.dims() {
        return Err(Error::Alignment(format!(
            "coarse frames are {} but masklets are {}",
            coarse.dims(),
            tracked.dims()
        )));
    }

    let n_windows = t.div_ceil(cfg.window);
    let outputs = exec.map_range(n_windows, |w| {
        let start = w * cfg.window;
        let end = (start + cfg.window).min(t);
        let slices: Vec<&[BinaryMask]> =
            tracked.tracks().iter().map(|tr| &tr[start..end]).collect();
        refine_window_at(start, &coarse.frames()[start..end], &slices, cfg)
    });

    let mut frames = Vec::with_capacity(t);
    let mut windows = Vec::with_capacity(n_windows);
    for out in outputs {
        let out = out?;
        frames.extend(out.frames);
        windows.push(out.report);
    }
    Ok(RefinedSequence { frames, windows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(h: usize, w: usize) -> Dims {
        Dims::new(h, w).unwrap()
    }

    fn rect(dims: Dims, r: i64, c: i64, h: usize, w: usize) -> BinaryMask {
        let mut m = BinaryMask::empty(dims);
        m.fill_rect(r, c, h, w);
        m
    }

    #[test]
    fn overlap_fraction_examples() {
        let dims = d(6, 6);
        let v = rect(dims, 1, 1, 2, 2);
        let u = rect(dims, 0, 0, 4, 4);
        assert_eq!(overlap_fraction(&v, &u).unwrap(), 1.0);
        let far = rect(dims, 4, 4, 2, 2);
        assert_eq!(overlap_fraction(&v, &far).unwrap(), 0.0);
        // u covers three of v's four pixels
        let mut three = rect(dims, 1, 1, 1, 2);
        three.set(2, 1, true);
        assert_eq!(overlap_fraction(&v, &three).unwrap(), 0.75);
        // absent instance
        assert_eq!(overlap_fraction(&BinaryMask::empty(dims), &u).unwrap(), 0.0);
        assert!(overlap_fraction(&v, &BinaryMask::empty(d(6, 5))).is_err());
    }

    #[test]
    fn frame_combination_examples() {
        let dims = d(10, 10);
        let e = BinaryMask::empty(dims);
        let u = BinaryMask::full(dims);
        assert_eq!(
            frame_combination(&[e.clone(), e.clone()], &u, 0.8).unwrap(),
            Combination::empty()
        );

        // v1: rows 0..2 (20 px), u covers 18 -> 0.9; v2: rows 5..7 (20 px), u covers 2 -> 0.1
        let v1 = rect(dims, 0, 0, 2, 10);
        let v2 = rect(dims, 5, 0, 2, 10);
        let mut u = rect(dims, 0, 0, 2, 9);
        u.fill_rect(5, 0, 1, 2);
        assert_eq!(overlap_fraction(&v1, &u).unwrap(), 0.9);
        assert_eq!(overlap_fraction(&v2, &u).unwrap(), 0.1);
        assert_eq!(
            frame_combination(&[v1, v2], &u, 0.8).unwrap(),
            Combination::from([1])
        );
    }

    #[test]
    fn gate_is_strict() {
        let dims = d(2, 5);
        let v = BinaryMask::full(dims);
        let u = rect(dims, 0, 0, 2, 4);
        assert_eq!(overlap_fraction(&v, &u).unwrap(), 0.8);
        assert!(frame_combination(&[v], &u, 0.8).unwrap().is_empty());
    }

    #[test]
    fn select_examples() {
        let c = |v: &[u32]| Combination::from(v.to_vec());
        let fig2 = [c(&[2]), c(&[2]), c(&[1, 2]), c(&[2]), c(&[2])];
        assert_eq!(select_combination(&fig2, TieBreak::Earliest), Some(c(&[2])));
        let unanimous = vec![c(&[1, 3]); 4];
        assert_eq!(
            select_combination(&unanimous, TieBreak::Earliest),
            Some(c(&[1, 3]))
        );
        let tied = [c(&[1]), c(&[2]), c(&[1]), c(&[2])];
        assert_eq!(select_combination(&tied, TieBreak::Earliest), Some(c(&[1])));
        assert_eq!(select_combination(&tied, TieBreak::Latest), Some(c(&[2])));
        assert_eq!(select_combination(&[], TieBreak::Earliest), None);
    }

    #[test]
    fn combination_is_canonical() {
        assert_eq!(Combination::from([2, 1, 2]), Combination::from([1, 2]));
        assert_eq!(Combination::from([1, 2]).to_string(), "(1, 2)");
        assert_eq!(Combination::from([2]).to_string(), "(2,)");
        assert_eq!(Combination::empty().to_string(), "()");
        assert_eq!(
            serde_json::to_string(&Combination::from([3, 1])).unwrap(),
            "[1,3]"
        );
        let back: Combination = serde_json::from_str("[3,1,3]").unwrap();
        assert_eq!(back, Combination::from([1, 3]));
    }

    #[test]
    fn empty_masklets_fall_back_to_coarse() {
        let dims = d(8, 8);
        let coarse: Vec<_> = (0..4).map(|t| rect(dims, t, t, 3, 3)).collect();
        let empty = vec![BinaryMask::empty(dims); 4];
        let out = refine_window(&coarse, &[&empty, &empty], &RefineConfig::default()).unwrap();
        assert_eq!(out.frames, coarse);
        assert!(!out.report.refined);
        assert!(out.report.selected.is_empty());
    }

    #[test]
    fn exact_coarse_is_a_fixpoint() {
        let dims = d(8, 8);
        let v: Vec<_> = (0..5).map(|t| rect(dims, t, 1, 3, 2)).collect();
        let out = refine_window(&v, &[&v], &RefineConfig::default()).unwrap();
        assert_eq!(out.frames, v);
        assert_eq!(out.report.selected, Combination::from([1]));
    }

    #[test]
    fn window_partition_with_trailing_window() {
        let dims = d(4, 4);
        let frames: Vec<_> = (0..7).map(|_| rect(dims, 0, 0, 2, 2)).collect();
        let coarse = MaskSequence::new(frames.clone()).unwrap();
        let tracked = MaskletSet::new(dims, 7, vec![frames]).unwrap();
        let cfg = RefineConfig {
            window: 5,
            ..RefineConfig::default()
        };
        let out = refine_video(&coarse, &tracked, &cfg).unwrap();
        let spans: Vec<_> = out.windows.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(spans, vec![(1, 5), (6, 7)]);
        assert_eq!(out.windows[1].frames[0].frame, 6);
        assert_eq!(out.frames.len(), 7);
    }

    #[test]
    fn single_window_matches_refine_window() {
        let dims = d(6, 6);
        let coarse: Vec<_> = (0..5).map(|t| rect(dims, 0, t, 3, 3)).collect();
        let a: Vec<_> = (0..5).map(|t| rect(dims, 0, t, 3, 2)).collect();
        let b: Vec<_> = (0..5).map(|_| rect(dims, 4, 0, 2, 2)).collect();
        let cfg = RefineConfig {
            window: 5,
            ..RefineConfig::default()
        };
        let single = refine_window(&coarse, &[&a, &b], &cfg).unwrap();
        let video = refine_video(
            &MaskSequence::new(coarse).unwrap(),
            &MaskletSet::new(dims, 5, vec![a, b]).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(video.frames, single.frames);
        assert_eq!(video.windows, vec![single.report]);
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let dims = d(4, 4);
        let coarse = MaskSequence::new(vec![BinaryMask::empty(dims); 3]).unwrap();
        let tracked = MaskletSet::new(dims, 4, vec![vec![BinaryMask::empty(dims); 4]]).unwrap();
        let err = refine_video(&coarse, &tracked, &RefineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
        let other = MaskletSet::new(d(4, 5), 3, vec![]).unwrap();
        assert!(matches!(
            refine_video(&coarse, &other, &RefineConfig::default()),
            Err(Error::Alignment(_))
        ));
        assert!(MaskletSet::new(dims, 4, vec![vec![BinaryMask::empty(dims); 3]]).is_err());
        assert!(MaskSequence::new(vec![]).is_err());
        assert!(
            MaskSequence::new(vec![BinaryMask::empty(dims), BinaryMask::empty(d(2, 2))]).is_err()
        );
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig {
            window: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RefineConfig {
            tau: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RefineConfig {
            tau: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RefineConfig::default().validate().is_ok());
        let d = RefineConfig::default();
        assert_eq!(
            (d.window, d.tau, d.tie_break),
            (15, 0.8, TieBreak::Earliest)
        );
        assert_eq!("latest".parse::<TieBreak>().unwrap(), TieBreak::Latest);
        assert!("mode".parse::<TieBreak>().is_err());
    }
}
