//! Window-size sweep: J&F of the unrefined baseline and of the refinement
//! at each requested window.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{evaluate_sequence_with, EvalResult};
use crate::refine::{refine_video_with, MaskSequence, MaskletSet, RefineConfig};

/// One row of the sweep, scores in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `baseline` or `W=<window>`.
    pub method: String,
    /// `None` for the baseline row.
    pub window: Option<usize>,
    #[serde(rename = "J&F")]
    pub jf: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

impl AblationRow {
    fn new(method: String, window: Option<usize>, r: &EvalResult) -> Self {
        AblationRow {
            method,
            window,
            jf: r.jf_mean * 100.0,
            j: r.j_mean * 100.0,
            f: r.f_mean * 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub tau: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn baseline(&self) -> &AblationRow {
        &self.rows[0]
    }

    pub fn refined(&self) -> &[AblationRow] {
        &self.rows[1..]
    }

    /// Fixed-width text table with two-decimal scores.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(0)
            .max("Method".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>7}  {:>7}",
            "Method", "J&F", "J", "F"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 27));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7.2}  {:>7.2}  {:>7.2}",
                r.method, r.jf, r.j, r.f
            );
        }
        out
    }
}

/// Evaluate the baseline and the refinement at every window in `windows`.
/// `cfg.window` is ignored; its `tau` and tie-break apply to every row.
pub fn ablate(
    coarse: &MaskSequence,
    tracked: &MaskletSet,
    gt: &MaskSequence,
    windows: &[usize],
    cfg: &RefineConfig,
    tolerance_px: Option<usize>,
    exec: Execution,
) -> Result<AblationTable> {
    if windows.is_empty() {
        return Err(Error::Config(
            "ablation needs at least one window size".into(),
        ));
    }
    let baseline = evaluate_sequence_with(coarse, gt, tolerance_px, exec)?;
    let mut rows = vec![AblationRow::new("baseline".into(), None, &baseline)];
    for &window in windows {
        let cfg = RefineConfig { window, ..*cfg };
        let refined = refine_video_with(coarse, tracked, &cfg, exec)?.into_sequence();
        let result = evaluate_sequence_with(&refined, gt, tolerance_px, exec)?;
        rows.push(AblationRow::new(
            format!("W={window}"),
            Some(window),
            &result,
        ));
    }
    Ok(AblationTable { tau: cfg.tau, rows })
}
