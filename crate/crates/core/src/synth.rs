//! Synthetic scenarios: moving shapes rendered as exact masklets, a ground
//! truth built from a target subset of them, and coarse predictions derived
//! from the ground truth by seeded corruption.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`, so a scenario file reproduces the same masks everywhere.
//! Exactly one uniform draw is taken per (frame, instance) in frame-major
//! order, whether or not the draw ends up being used.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{union, BinaryMask, Dims};
use crate::metrics::dilate;
use crate::refine::{MaskSequence, MaskletSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rect {
        height: usize,
        width: usize,
    },
    /// Discrete disk: offsets `(dr, dc)` with `dr² + dc² <= radius²`.
    Disk {
        radius: usize,
    },
}

impl Shape {
    /// Size of the bounding box.
    pub fn extent(&self) -> (usize, usize) {
        match *self {
            Shape::Rect { height, width } => (height, width),
            Shape::Disk { radius } => (2 * radius + 1, 2 * radius + 1),
        }
    }

    /// Render with the bounding box's top-left corner at `(row, col)`,
    /// clipping anything outside the raster.
    pub fn render(&self, dims: Dims, row: i64, col: i64) -> BinaryMask {
        let mut m = BinaryMask::empty(dims);
        match *self {
            Shape::Rect { height, width } => m.fill_rect(row, col, height, width),
            Shape::Disk { radius } => {
                let r = radius as i64;
                for dr in -r..=r {
                    // widest run of columns on this row of the disk
                    let mut half = 0i64;
                    while (half + 1) * (half + 1) + dr * dr <= r * r {
                        half += 1;
                    }
                    m.fill_rect(row + r + dr, col + r - half, 1, (2 * half + 1) as usize);
                }
            }
        }
        m
    }
}

/// Per-frame top-left position of an instance's bounding box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Path {
    /// `start + t * velocity`; parts leaving the raster are clipped.
    Linear { start: [i64; 2], velocity: [i64; 2] },
    /// Like `Linear` but reflected off the raster edges so the shape stays
    /// fully inside.
    Bounce { start: [i64; 2], velocity: [i64; 2] },
    /// One explicit `[row, col]` per frame.
    Waypoints { positions: Vec<[i64; 2]> },
}

fn reflect(p: i64, max: i64) -> i64 {
    if max <= 0 {
        return 0;
    }
    let m = p.rem_euclid(2 * max);
    if m > max {
        2 * max - m
    } else {
        m
    }
}

impl Path {
    fn position(&self, t: usize, extent: (usize, usize), dims: Dims) -> [i64; 2] {
        let t = t as i64;
        match self {
            Path::Linear { start, velocity } => {
                [start[0] + t * velocity[0], start[1] + t * velocity[1]]
            }
            Path::Bounce { start, velocity } => [
                reflect(
                    start[0] + t * velocity[0],
                    dims.height as i64 - extent.0 as i64,
                ),
                reflect(
                    start[1] + t * velocity[1],
                    dims.width as i64 - extent.1 as i64,
                ),
            ],
            Path::Waypoints { positions } => positions[t as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub shape: Shape,
    pub path: Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventAction {
    /// Remove a target instance from the coarse mask.
    Drop,
    /// Add a non-target instance to the coarse mask.
    Add,
}

/// A corruption forced at one frame, independent of the random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionEvent {
    /// 1-based frame.
    pub frame: usize,
    /// 1-based instance.
    pub instance: u32,
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionSpec {
    /// Probability that a target instance is missing from a coarse frame.
    pub flicker_drop_prob: f64,
    /// Probability that a non-target instance is wrongly included.
    pub spurious_add_prob: f64,
    /// Square erosion radius applied to every coarse frame.
    pub boundary_erosion_px: usize,
    pub events: Vec<CorruptionEvent>,
}

fn default_video_id() -> String {
    "synthetic".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_video_id")]
    pub video_id: String,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub instances: Vec<Track>,
    /// 1-based indices of the referred instances.
    pub target: Vec<u32>,
    #[serde(default)]
    pub corruption: CorruptionSpec,
    #[serde(default)]
    pub seed: u64,
}

/// Everything a scenario renders to.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub gt: MaskSequence,
    pub masklets: MaskletSet,
    pub coarse: MaskSequence,
}

impl Scenario {
    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.height, self.width)
    }

    pub fn is_target(&self, instance: u32) -> bool {
        self.target.contains(&instance)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        let dims = self.dims()?;
        if self.frames == 0 {
            return cfg("scenario needs at least one frame".into());
        }
        let n = self.instances.len() as u32;
        for (i, track) in self.instances.iter().enumerate() {
            let (h, w) = track.shape.extent();
            if h == 0 || w == 0 || h > dims.height || w > dims.width {
                return cfg(format!(
                    "instance {}: shape {h}x{w} does not fit in {dims}",
                    i + 1
                ));
            }
            if let Path::Waypoints { positions } = &track.path {
                if positions.len() != self.frames {
                    return cfg(format!(
                        "instance {}: {} waypoints for {} frames",
                        i + 1,
                        positions.len(),
                        self.frames
                    ));
                }
            }
        }
        let mut sorted = self.target.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.target.len() {
            return cfg("target indices must be distinct".into());
        }
        if let Some(bad) = self.target.iter().find(|&&i| i == 0 || i > n) {
            return cfg(format!("target index {bad} outside 1..={n}"));
        }
        let c = &self.corruption;
        for (name, p) in [
            ("flicker_drop_prob", c.flicker_drop_prob),
            ("spurious_add_prob", c.spurious_add_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return cfg(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for e in &c.events {
            if e.frame == 0 || e.frame > self.frames {
                return cfg(format!(
                    "event frame {} outside 1..={}",
                    e.frame, self.frames
                ));
            }
            if e.instance == 0 || e.instance > n {
                return cfg(format!("event instance {} outside 1..={n}", e.instance));
            }
            match (e.action, self.is_target(e.instance)) {
                (EventAction::Drop, false) => {
                    return cfg(format!("cannot drop non-target instance {}", e.instance))
                }
                (EventAction::Add, true) => {
                    return cfg(format!("cannot add target instance {}", e.instance))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn event(&self, frame: usize, instance: u32) -> Option<EventAction> {
        self.corruption
            .events
            .iter()
            .find(|e| e.frame == frame && e.instance == instance)
            .map(|e| e.action)
    }
}

/// Erosion by a `(2 * radius + 1)` square; pixels outside the raster do not
/// constrain the result.
pub fn erode(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let inverted: Vec<bool> = m.to_bools().into_iter().map(|p| !p).collect();
    let grown = dilate(
        &BinaryMask::from_bools(m.dims(), &inverted).expect("same size"),
        radius,
    );
    let out: Vec<bool> = grown.to_bools().into_iter().map(|p| !p).collect();
    BinaryMask::from_bools(m.dims(), &out).expect("same size")
}

/// Render a scenario into ground truth, exact masklets and corrupted coarse
/// predictions.
pub fn generate(s: &Scenario) -> Result<Generated> {
    s.validate()?;
    let dims = s.dims()?;
    let tracks: Vec<Vec<BinaryMask>> = s
        .instances
        .iter()
        .map(|tr| {
            let extent = tr.shape.extent();
            (0..s.frames)
                .map(|t| {
                    let [r, c] = tr.path.position(t, extent, dims);
                    tr.shape.render(dims, r, c)
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let c = &s.corruption;
    let mut gt = Vec::with_capacity(s.frames);
    let mut coarse = Vec::with_capacity(s.frames);
    for t in 0..s.frames {
        let mut kept = Vec::new();
        for (i, track) in tracks.iter().enumerate() {
            let index = i as u32 + 1;
            let draw: f64 = rng.random();
            let event = s.event(t + 1, index);
            let include = if s.is_target(index) {
                !(event == Some(EventAction::Drop) || draw < c.flicker_drop_prob)
            } else {
                event == Some(EventAction::Add) || draw < c.spurious_add_prob
            };
            if include {
                kept.push(&track[t]);
            }
        }
        let frame_gt = union(
            s.target.iter().map(|&i| &tracks[i as usize - 1][t]),
            Some(dims),
        )?;
        let frame_coarse = erode(&union(kept, Some(dims))?, c.boundary_erosion_px);
        gt.push(frame_gt);
        coarse.push(frame_coarse);
    }

    Ok(Generated {
        gt: MaskSequence::new(gt)?,
        masklets: MaskletSet::new(dims, s.frames, tracks)?,
        coarse: MaskSequence::new(coarse)?,
    })
}

/// Two instances over five frames; only instance 2 is referred to, but the
/// coarse prediction also picks up instance 1 at frame 3.
pub fn fig2_scenario() -> Scenario {
    Scenario {
        video_id: "fig2".into(),
        frames: 5,
        height: 24,
        width: 40,
        instances: vec![
            Track {
                shape: Shape::Rect {
                    height: 8,
                    width: 8,
                },
                path: Path::Linear {
                    start: [8, 3],
                    velocity: [0, 1],
                },
            },
            Track {
                shape: Shape::Disk { radius: 5 },
                path: Path::Linear {
                    start: [6, 26],
                    velocity: [0, -1],
                },
            },
        ],
        target: vec![2],
        corruption: CorruptionSpec {
            events: vec![CorruptionEvent {
                frame: 3,
                instance: 1,
                action: EventAction::Add,
            }],
            ..CorruptionSpec::default()
        },
        seed: 0,
    }
}

/// Parameters of a flicker-suite scenario.
///
/// Frames are grouped into aligned blocks of `block` frames and at most
/// `max_per_block` frames of each block are corrupted. With
/// `2 * max_per_block < block`, any window made of whole blocks has a
/// strict minority of corrupted frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlickerParams {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub instances: usize,
    pub block: usize,
    pub max_per_block: usize,
}

impl Default for FlickerParams {
    fn default() -> Self {
        FlickerParams {
            frames: 60,
            height: 48,
            width: 64,
            instances: 3,
            block: 5,
            max_per_block: 2,
        }
    }
}

/// Random scenario with instances in disjoint horizontal lanes, bouncing
/// horizontally, and scheduled drop/add corruption. At least one frame is
/// corrupted.
pub fn flicker_scenario(seed: u64, p: &FlickerParams) -> Result<Scenario> {
    if p.instances == 0 || p.block == 0 || p.frames == 0 {
        return Err(Error::Config(
            "flicker scenario needs instances, frames and a block size".into(),
        ));
    }
    let lane = p.height / p.instances;
    if lane < 3 || p.width < 3 {
        return Err(Error::Config(format!(
            "{} lanes do not fit in {}x{}",
            p.instances, p.height, p.width
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let instances: Vec<Track> = (0..p.instances)
        .map(|i| {
            let max_size = (lane - 1).min(p.width / 2).max(1);
            let shape = if rng.random_bool(0.5) {
                Shape::Rect {
                    height: rng.random_range(1..=max_size),
                    width: rng.random_range(1..=max_size),
                }
            } else {
                Shape::Disk {
                    radius: rng.random_range(0..=(max_size - 1) / 2),
                }
            };
            let (h, w) = shape.extent();
            let row = (i * lane + rng.random_range(0..=lane - h)) as i64;
            let col = rng.random_range(0..=p.width - w) as i64;
            let velocity = [0, rng.random_range(-3..=3)];
            Track {
                shape,
                path: Path::Bounce {
                    start: [row, col],
                    velocity,
                },
            }
        })
        .collect();

    let mut ids: Vec<u32> = (1..=p.instances as u32).collect();
    ids.shuffle(&mut rng);
    let n_target = rng.random_range(1..=p.instances);
    let mut target = ids[..n_target].to_vec();
    let mut others = ids[n_target..].to_vec();
    target.sort_unstable();
    others.sort_unstable();

    let mut events = Vec::new();
    let mut frames_in_block: Vec<usize> = Vec::new();
    for start in (0..p.frames).step_by(p.block) {
        let len = p.block.min(p.frames - start);
        let k = rng.random_range(0..=p.max_per_block.min(len));
        frames_in_block.clear();
        frames_in_block.extend(start..start + len);
        frames_in_block.shuffle(&mut rng);
        for &t in &frames_in_block[..k] {
            events.push(random_event(&mut rng, t + 1, &target, &others));
        }
    }
    if events.is_empty() && p.max_per_block > 0 {
        events.push(random_event(&mut rng, 1, &target, &others));
    }
    events.sort_by_key(|e| (e.frame, e.instance));

    Ok(Scenario {
        video_id: format!("flicker-{seed}"),
        frames: p.frames,
        height: p.height,
        width: p.width,
        instances,
        target,
        corruption: CorruptionSpec {
            events,
            ..CorruptionSpec::default()
        },
        seed,
    })
}

fn random_event(
    rng: &mut ChaCha8Rng,
    frame: usize,
    target: &[u32],
    others: &[u32],
) -> CorruptionEvent {
    if others.is_empty() || rng.random_bool(0.5) {
        CorruptionEvent {
            frame,
            instance: target[rng.random_range(0..target.len())],
            action: EventAction::Drop,
        }
    } else {
        CorruptionEvent {
            frame,
            instance: others[rng.random_range(0..others.len())],
            action: EventAction::Add,
        }
    }
}

/// Which frames of each window differ between coarse and ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowAudit {
    pub start: usize,
    pub end: usize,
    /// 1-based frames where coarse != gt.
    pub corrupted: Vec<usize>,
    /// Corrupted frames are a strict minority of the window.
    pub minority: bool,
}

/// Per-window corruption summary. Windows where `minority` is false are the
/// ones refinement is not expected to recover.
pub fn corruption_audit(
    gt: &MaskSequence,
    coarse: &MaskSequence,
    window: usize,
) -> Result<Vec<WindowAudit>> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1 frame".into()));
    }
    if gt.len() != coarse.len() {
        return Err(Error::Alignment(format!(
            "ground truth has {} frames, coarse has {}",
            gt.len(),
            coarse.len()
        )));
    }
    let t = gt.len();
    Ok((0..t)
        .step_by(window)
        .map(|start| {
            let end = (start + window).min(t);
            let corrupted: Vec<usize> = (start..end)
                .filter(|&i| gt.frames()[i] != coarse.frames()[i])
                .map(|i| i + 1)
                .collect();
            WindowAudit {
                start: start + 1,
                end,
                minority: 2 * corrupted.len() < end - start,
                corrupted,
            }
        })
        .collect())
}
