//! JSON video manifests, atomic output and PGM frame export.
//!
//! A manifest carries one video's masks as RLE objects:
//!
//! ```json
//! {"video_id": "cat", "height": 480, "width": 854, "num_frames": 2,
//!  "kind": "coarse", "frames": [{"h": 480, "w": 854, "counts": [...]}, ...]}
//! ```
//!
//! `kind` is one of `coarse`, `refined`, `gt` (with `frames`) or `masklets`
//! (with `instances`, an object mapping `"1"`, `"2"`, ... to per-frame RLE
//! lists). Frame and instance numbers in error messages are 1-based.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{rle_decode, rle_encode, BinaryMask, Dims, RleMask};
use crate::refine::{MaskSequence, MaskletSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Coarse,
    Masklets,
    Refined,
    Gt,
}

impl fmt::Display for ManifestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ManifestKind::Coarse => "coarse",
            ManifestKind::Masklets => "masklets",
            ManifestKind::Refined => "refined",
            ManifestKind::Gt => "gt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub height: usize,
    pub width: usize,
    pub num_frames: usize,
    pub kind: ManifestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<RleMask>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<BTreeMap<u32, Vec<RleMask>>>,
}

/// A validated manifest.
#[derive(Debug, Clone, PartialEq)]
pub enum Video {
    Sequence {
        video_id: String,
        kind: ManifestKind,
        sequence: MaskSequence,
    },
    Masklets {
        video_id: String,
        masklets: MaskletSet,
    },
}

impl Video {
    pub fn video_id(&self) -> &str {
        match self {
            Video::Sequence { video_id, .. } | Video::Masklets { video_id, .. } => video_id,
        }
    }

    pub fn kind(&self) -> ManifestKind {
        match self {
            Video::Sequence { kind, .. } => *kind,
            Video::Masklets { .. } => ManifestKind::Masklets,
        }
    }
}

fn encode_all(frames: &[BinaryMask]) -> Vec<RleMask> {
    frames.iter().map(rle_encode).collect()
}

impl VideoManifest {
    pub fn from_sequence(
        video_id: impl Into<String>,
        kind: ManifestKind,
        seq: &MaskSequence,
    ) -> Self {
        debug_assert!(kind != ManifestKind::Masklets);
        let dims = seq.dims();
        VideoManifest {
            video_id: video_id.into(),
            height: dims.height,
            width: dims.width,
            num_frames: seq.len(),
            kind,
            frames: Some(encode_all(seq.frames())),
            instances: None,
        }
    }

    pub fn from_masklets(video_id: impl Into<String>, masklets: &MaskletSet) -> Self {
        let dims = masklets.dims();
        VideoManifest {
            video_id: video_id.into(),
            height: dims.height,
            width: dims.width,
            num_frames: masklets.num_frames(),
            kind: ManifestKind::Masklets,
            frames: None,
            instances: Some(
                masklets
                    .tracks()
                    .iter()
                    .enumerate()
                    .map(|(i, tr)| (i as u32 + 1, encode_all(tr)))
                    .collect(),
            ),
        }
    }

    pub fn from_video(video: &Video) -> Self {
        match video {
            Video::Sequence {
                video_id,
                kind,
                sequence,
            } => Self::from_sequence(video_id.clone(), *kind, sequence),
            Video::Masklets { video_id, masklets } => {
                Self::from_masklets(video_id.clone(), masklets)
            }
        }
    }

    /// Parse a manifest file without checking its integrity.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parse manifest text; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                Error::Schema {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                }
            } else {
                Error::Parse {
                    path: path.to_path_buf(),
                    source: e,
                }
            }
        })
    }

    /// Check every invariant and decode into masks.
    pub fn validate(self, path: &Path) -> Result<Video> {
        let schema = |message: String| Error::Schema {
            path: path.to_path_buf(),
            message,
        };
        let integrity = |message: String| Error::Integrity {
            path: path.to_path_buf(),
            message,
        };
        let dims = Dims::new(self.height, self.width).map_err(|e| integrity(e.to_string()))?;
        if self.num_frames == 0 {
            return Err(integrity("num_frames must be at least 1".into()));
        }
        let decode = |frames: &[RleMask], what: &str| -> Result<Vec<BinaryMask>> {
            if frames.len() != self.num_frames {
                return Err(integrity(format!(
                    "{what}has {} frames but num_frames is {}",
                    frames.len(),
                    self.num_frames
                )));
            }
            frames
                .iter()
                .enumerate()
                .map(|(t, rle)| {
                    if rle.dims() != dims {
                        return Err(integrity(format!(
                            "{what}frame {}: RLE is {}x{} but the header says {dims}",
                            t + 1,
                            rle.height,
                            rle.width
                        )));
                    }
                    rle_decode(rle).map_err(|e| integrity(format!("{what}frame {}: {e}", t + 1)))
                })
                .collect()
        };

        match self.kind {
            ManifestKind::Masklets => {
                if self.frames.is_some() {
                    return Err(schema("masklets manifest must not have \"frames\"".into()));
                }
                let instances = self
                    .instances
                    .as_ref()
                    .ok_or_else(|| schema("masklets manifest is missing \"instances\"".into()))?;
                let mut tracks = Vec::with_capacity(instances.len());
                for (expected, (&index, frames)) in (1u32..).zip(instances) {
                    if index != expected {
                        return Err(integrity(format!(
                            "instance indices must be contiguous from 1; found {index} where {expected} was expected"
                        )));
                    }
                    tracks.push(decode(frames, &format!("instance {index}: "))?);
                }
                let masklets = MaskletSet::new(dims, self.num_frames, tracks)
                    .map_err(|e| integrity(e.to_string()))?;
                Ok(Video::Masklets {
                    video_id: self.video_id,
                    masklets,
                })
            }
            kind => {
                if self.instances.is_some() {
                    return Err(schema(format!(
                        "{kind} manifest must not have \"instances\""
                    )));
                }
                let frames = self
                    .frames
                    .as_ref()
                    .ok_or_else(|| schema(format!("{kind} manifest is missing \"frames\"")))?;
                let sequence =
                    MaskSequence::new(decode(frames, "")?).map_err(|e| integrity(e.to_string()))?;
                Ok(Video::Sequence {
                    video_id: self.video_id,
                    kind,
                    sequence,
                })
            }
        }
    }

    /// Write atomically as compact JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self, false)
    }
}

/// Read, parse and fully validate a manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Video> {
    let path = path.as_ref();
    VideoManifest::read(path)?.validate(path)
}

/// Load a frame-sequence manifest (`coarse`, `refined` or `gt`).
pub fn load_sequence(path: impl AsRef<Path>) -> Result<(String, MaskSequence)> {
    let path = path.as_ref();
    match load_manifest(path)? {
        Video::Sequence {
            video_id, sequence, ..
        } => Ok((video_id, sequence)),
        Video::Masklets { .. } => Err(Error::Schema {
            path: path.to_path_buf(),
            message: "expected a frame sequence, found a masklets manifest".into(),
        }),
    }
}

pub fn load_masklets(path: impl AsRef<Path>) -> Result<(String, MaskletSet)> {
    let path = path.as_ref();
    match load_manifest(path)? {
        Video::Masklets { video_id, masklets } => Ok((video_id, masklets)),
        Video::Sequence { kind, .. } => Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("expected a masklets manifest, found kind \"{kind}\""),
        }),
    }
}

/// Serialize `value` to a temporary file next to `path`, then rename it
/// into place. Nothing is left at `path` on failure.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        let res = if pretty {
            serde_json::to_writer_pretty(&mut w, value)
        } else {
            serde_json::to_writer(&mut w, value)
        };
        res.map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Binary PGM (`P5`), 0 for background and 255 for foreground.
pub fn write_pgm(path: &Path, mask: &BinaryMask) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    bytes.extend(
        mask.to_bools()
            .into_iter()
            .map(|p| if p { 255u8 } else { 0 }),
    );
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a binary 8-bit PGM; any non-zero sample is foreground.
pub fn read_pgm(path: &Path) -> Result<BinaryMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));

    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let dims = Dims::new(height, width)?;
    let raster = bytes
        .get(pos..pos + dims.pixels())
        .ok_or_else(|| bad("truncated raster"))?;
    let px: Vec<bool> = raster.iter().map(|&b| b != 0).collect();
    BinaryMask::from_bools(dims, &px)
}

/// File name of 1-based frame `frame`.
pub fn frame_file_name(frame: usize) -> String {
    format!("{frame:05}.pgm")
}

/// Write one PGM per frame into `out_dir`, named `00001.pgm`, `00002.pgm`, ...
pub fn export_overlay(seq: &MaskSequence, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    seq.frames()
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let path = out_dir.join(frame_file_name(t + 1));
            write_pgm(&path, m)?;
            Ok(path)
        })
        .collect()
}
