//! Temporal-consistency refinement for video object segmentation.
//!
//! Coarse per-frame masks from a referring segmentation model are fused
//! with identity-stable instance tracks ("masklets"): each window of frames
//! picks the instance combination the coarse masks agree with most often
//! and rebuilds every frame of the window from those instances.
//!
//! Modules:
//! - [`mask`]: packed binary masks, RLE codec and set algebra
//! - [`refine`]: overlap gating, per-window combination vote, composition
//! - [`metrics`]: J, boundary F and J&F over a sequence
//! - [`synth`]: seeded synthetic scenarios with known ground truth
//! - [`manifest`]: JSON manifests, atomic writes, PGM export
//! - [`ablation`]: window-size sweeps

pub mod ablation;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod mask;
pub mod metrics;
pub mod refine;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use mask::{
    area, intersection_area, iou, rle_decode, rle_encode, union, BinaryMask, Dims, RleMask,
};
pub use metrics::{boundary_f, evaluate_sequence, region_j, EvalResult};
pub use refine::{
    frame_combination, overlap_fraction, refine_video, refine_video_with, refine_window,
    select_combination, CoarseSequence, Combination, MaskSequence, MaskletSet, RefineConfig,
    RefinedSequence, TieBreak, WindowReport,
};
