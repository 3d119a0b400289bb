use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stref_core::ablation::ablate as run_ablation;
use stref_core::manifest::{
    export_overlay, load_manifest, load_masklets, load_sequence, write_json_atomic, ManifestKind,
    Video, VideoManifest,
};
use stref_core::metrics::evaluate_sequence;
use stref_core::synth::{fig2_scenario, flicker_scenario, generate, FlickerParams, Scenario};
use stref_core::{refine_video, Error, Execution, RefineConfig, Result, TieBreak, WindowReport};

/// Contents of the report written next to a refined manifest.
#[derive(Serialize)]
struct RefineReport<'a> {
    video_id: &'a str,
    num_frames: usize,
    num_instances: usize,
    window: usize,
    tau: f64,
    tie_break: TieBreak,
    windows: &'a [WindowReport],
}

fn default_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

pub fn refine(
    coarse_path: &Path,
    tracked_path: &Path,
    out: &Path,
    window: usize,
    tau: f64,
    tie_break: TieBreak,
    report: Option<&Path>,
) -> Result<String> {
    let cfg = RefineConfig {
        window,
        tau,
        tie_break,
    };
    cfg.validate()?;
    let (video_id, coarse) = load_sequence(coarse_path)?;
    let (_, tracked) = load_masklets(tracked_path)?;
    let refined = refine_video(&coarse, &tracked, &cfg)?;

    let report_path = report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_report_path(out));
    let manifest = VideoManifest::from_sequence(
        video_id.clone(),
        ManifestKind::Refined,
        &refined.to_sequence(),
    );
    let report = RefineReport {
        video_id: &video_id,
        num_frames: coarse.len(),
        num_instances: tracked.num_instances(),
        window,
        tau,
        tie_break,
        windows: &refined.windows,
    };
    write_json_atomic(&report_path, &report, true)?;
    if let Err(e) = manifest.save(out) {
        let _ = fs::remove_file(&report_path);
        return Err(e);
    }

    let mut s = String::new();
    for w in &refined.windows {
        let action = if w.refined { "refined" } else { "kept coarse" };
        let _ = writeln!(
            s,
            "frames {:>5}..{:<5} C_sel={:<12} {action}",
            w.start,
            w.end,
            w.selected.to_string()
        );
    }
    let _ = writeln!(s, "wrote {} and {}", out.display(), report_path.display());
    Ok(s)
}

pub fn eval(
    pred: &Path,
    gt: &Path,
    tolerance: Option<usize>,
    json: bool,
    out: Option<&Path>,
) -> Result<String> {
    let (_, pred_seq) = load_sequence(pred)?;
    let (_, gt_seq) = load_sequence(gt)?;
    let report = evaluate_sequence(&pred_seq, &gt_seq, tolerance)?.to_report();
    if let Some(path) = out {
        write_json_atomic(path, &report, true)?;
    }
    if json {
        let mut s = serde_json::to_string(&report).map_err(|e| Error::Config(e.to_string()))?;
        s.push('\n');
        return Ok(s);
    }
    Ok(format!(
        "J&F: {:.2}\nJ: {:.2}\nF: {:.2}\n",
        report.jf, report.j, report.f
    ))
}

pub enum ScenarioSource {
    File(PathBuf),
    Fig2,
    Flicker(u64),
}

pub fn synth(source: ScenarioSource, out_dir: &Path) -> Result<String> {
    let scenario: Scenario = match source {
        ScenarioSource::File(path) => {
            let text = fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| {
                if e.is_data() {
                    Error::Schema {
                        path: path.clone(),
                        message: e.to_string(),
                    }
                } else {
                    Error::Parse {
                        path: path.clone(),
                        source: e,
                    }
                }
            })?
        }
        ScenarioSource::Fig2 => fig2_scenario(),
        ScenarioSource::Flicker(seed) => flicker_scenario(seed, &FlickerParams::default())?,
    };
    let g = generate(&scenario)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let id = &scenario.video_id;
    write_json_atomic(&out_dir.join("scenario.json"), &scenario, true)?;
    VideoManifest::from_sequence(id.clone(), ManifestKind::Gt, &g.gt)
        .save(&out_dir.join("gt.json"))?;
    VideoManifest::from_masklets(id.clone(), &g.masklets).save(&out_dir.join("masklets.json"))?;
    VideoManifest::from_sequence(id.clone(), ManifestKind::Coarse, &g.coarse)
        .save(&out_dir.join("coarse.json"))?;
    Ok(format!(
        "wrote scenario.json, gt.json, masklets.json, coarse.json to {} ({} frames, {} instances)\n",
        out_dir.display(),
        scenario.frames,
        scenario.instances.len()
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn ablate(
    coarse: &Path,
    tracked: &Path,
    gt: &Path,
    windows: &[usize],
    tau: f64,
    tie_break: TieBreak,
    tolerance: Option<usize>,
    json: Option<&Path>,
) -> Result<String> {
    let (_, coarse_seq) = load_sequence(coarse)?;
    let (_, masklets) = load_masklets(tracked)?;
    let (_, gt_seq) = load_sequence(gt)?;
    let cfg = RefineConfig {
        tau,
        tie_break,
        ..RefineConfig::default()
    };
    let table = run_ablation(
        &coarse_seq,
        &masklets,
        &gt_seq,
        windows,
        &cfg,
        tolerance,
        Execution::default(),
    )?;
    if let Some(path) = json {
        write_json_atomic(path, &table, true)?;
    }
    Ok(table.to_text())
}

pub fn overlay(input: &Path, out_dir: &Path) -> Result<String> {
    let written = match load_manifest(input)? {
        Video::Sequence { sequence, .. } => export_overlay(&sequence, out_dir)?.len(),
        Video::Masklets { masklets, .. } => {
            let mut n = 0;
            for (i, track) in masklets.tracks().iter().enumerate() {
                let seq = stref_core::MaskSequence::new(track.clone())?;
                n += export_overlay(&seq, &out_dir.join(format!("instance_{}", i + 1)))?.len();
            }
            n
        }
    };
    Ok(format!("wrote {written} frames to {}\n", out_dir.display()))
}
