//! Binary masks, the run-length interchange codec and the set algebra the
//! rest of the crate is built on.
//!
//! Masks are stored densely as row-major bits packed into `u64` words
//! (pixel `(row, col)` lives at flat bit `row * width + col`, least
//! significant bit first). Padding bits past `height * width` are always
//! zero, so equality and popcounts can work on whole words.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Raster size of a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "mask dimensions must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(Dims { height, width })
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

/// One frame's foreground/background pixel set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    dims: Dims,
    words: Vec<u64>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {} (area {})", self.dims, self.area())?;
        if self.dims.pixels() <= 64 * 64 {
            for r in 0..self.dims.height {
                for c in 0..self.dims.width {
                    f.write_str(if self.get(r, c) { "#" } else { "." })?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

fn word_count(pixels: usize) -> usize {
    pixels.div_ceil(WORD_BITS)
}

impl BinaryMask {
    /// All-background mask.
    pub fn empty(dims: Dims) -> Self {
        BinaryMask {
            dims,
            words: vec![0; word_count(dims.pixels())],
        }
    }

    /// All-foreground mask.
    pub fn full(dims: Dims) -> Self {
        let mut m = Self::empty(dims);
        m.fill_range(0, dims.pixels());
        m
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(dims);
        for r in 0..dims.height {
            for c in 0..dims.width {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Build from a row-major boolean raster.
    pub fn from_bools(dims: Dims, pixels: &[bool]) -> Result<Self> {
        if pixels.len() != dims.pixels() {
            return Err(Error::Config(format!(
                "expected {} pixels for {dims}, got {}",
                dims.pixels(),
                pixels.len()
            )));
        }
        let mut m = Self::empty(dims);
        for (i, &p) in pixels.iter().enumerate() {
            if p {
                m.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        Ok(m)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.dims.pixels()).map(|i| self.bit(i)).collect()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    /// Packed row-major words; bits past the last pixel are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    fn bit(&self, i: usize) -> bool {
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.dims.height && col < self.dims.width);
        self.bit(row * self.dims.width + col)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.dims.height && col < self.dims.width);
        let i = row * self.dims.width + col;
        let bit = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= bit;
        } else {
            self.words[i / WORD_BITS] &= !bit;
        }
    }

    /// Set flat pixels `start..end` to foreground.
    fn fill_range(&mut self, start: usize, end: usize) {
        if start >= end {
            return;
        }
        let (sw, sb) = (start / WORD_BITS, start % WORD_BITS);
        let (ew, eb) = (end / WORD_BITS, end % WORD_BITS);
        if sw == ew {
            self.words[sw] |= ((1u64 << (eb - sb)) - 1) << sb;
            return;
        }
        self.words[sw] |= !0u64 << sb;
        for w in &mut self.words[sw + 1..ew] {
            *w = !0;
        }
        if eb > 0 {
            self.words[ew] |= (1u64 << eb) - 1;
        }
    }

    /// Set the rectangle with top-left `(row, col)` and the given size to
    /// foreground, clipped to the raster. Offsets may be negative.
    pub fn fill_rect(&mut self, row: i64, col: i64, height: usize, width: usize) {
        let (h, w) = (self.dims.height as i64, self.dims.width as i64);
        let r0 = row.clamp(0, h);
        let r1 = (row + height as i64).clamp(0, h);
        let c0 = col.clamp(0, w);
        let c1 = (col + width as i64).clamp(0, w);
        if c0 >= c1 {
            return;
        }
        for r in r0..r1 {
            let base = (r * w) as usize;
            self.fill_range(base + c0 as usize, base + c1 as usize);
        }
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_same(&self, other: &BinaryMask) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape {
                expected: self.dims,
                found: other.dims,
            });
        }
        Ok(())
    }

    /// In-place pixel-wise OR.
    pub fn or_assign(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// Pixel-wise AND.
    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_same(other)?;
        Ok(BinaryMask {
            dims: self.dims,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        })
    }

    /// First flat index `>= pos` whose bit differs from `value`, or the
    /// pixel count when there is none.
    fn next_change(&self, pos: usize, value: bool) -> usize {
        let n = self.dims.pixels();
        let mut wi = pos / WORD_BITS;
        let mut word = self.words[wi] & (!0u64 << (pos % WORD_BITS));
        if value {
            word = !self.words[wi] & (!0u64 << (pos % WORD_BITS));
        }
        loop {
            if word != 0 {
                return (wi * WORD_BITS + word.trailing_zeros() as usize).min(n);
            }
            wi += 1;
            if wi >= self.words.len() {
                return n;
            }
            word = if value {
                !self.words[wi]
            } else {
                self.words[wi]
            };
        }
    }
}

/// Number of foreground pixels of `m`.
pub fn area(m: &BinaryMask) -> usize {
    m.area()
}

/// `|a ∧ b|`. Symmetric.
pub fn intersection_area(a: &BinaryMask, b: &BinaryMask) -> Result<usize> {
    a.check_same(b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum())
}

/// Pixel-wise OR of `masks`.
///
/// `dims` is required when `masks` may be empty; if given, every mask must
/// match it.
pub fn union<'a, I>(masks: I, dims: Option<Dims>) -> Result<BinaryMask>
where
    I: IntoIterator<Item = &'a BinaryMask>,
{
    let mut iter = masks.into_iter();
    let mut out = match (dims, iter.next()) {
        (Some(d), Some(first)) => {
            let mut out = BinaryMask::empty(d);
            out.or_assign(first)?;
            out
        }
        (None, Some(first)) => first.clone(),
        (Some(d), None) => return Ok(BinaryMask::empty(d)),
        (None, None) => {
            return Err(Error::Config(
                "union of an empty list needs reference dimensions".into(),
            ))
        }
    };
    for m in iter {
        out.or_assign(m)?;
    }
    Ok(out)
}

/// Jaccard index. Two empty masks score 1.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = intersection_area(a, b)?;
    let uni = a.area() + b.area() - inter;
    if uni == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / uni as f64)
}

/// Row-major, background-first run-length form of a mask.
///
/// Runs alternate background/foreground starting with background; only the
/// first run may be zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    #[serde(rename = "h")]
    pub height: usize,
    #[serde(rename = "w")]
    pub width: usize,
    pub counts: Vec<u64>,
}

impl RleMask {
    pub fn new(height: usize, width: usize, counts: Vec<u64>) -> Result<Self> {
        let rle = RleMask {
            height,
            width,
            counts,
        };
        rle.validate()?;
        Ok(rle)
    }

    pub fn dims(&self) -> Dims {
        Dims {
            height: self.height,
            width: self.width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Format(format!(
                "dimensions must be at least 1x1, got {}x{}",
                self.height, self.width
            )));
        }
        if let Some(pos) = self.counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::Format(format!(
                "zero-length run at position {}; only the first run may be empty",
                pos + 1
            )));
        }
        let total = self
            .counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Format("run lengths overflow".into()))?;
        let expected = (self.height as u64) * (self.width as u64);
        if total != expected {
            return Err(Error::Format(format!(
                "run lengths sum to {total}, expected {expected} ({}x{})",
                self.height, self.width
            )));
        }
        Ok(())
    }
}

pub fn rle_encode(m: &BinaryMask) -> RleMask {
    let n = m.dims.pixels();
    let mut counts = Vec::new();
    let mut pos = 0;
    let mut value = false;
    while pos < n {
        let next = m.next_change(pos, value);
        counts.push((next - pos) as u64);
        pos = next;
        value = !value;
    }
    RleMask {
        height: m.dims.height,
        width: m.dims.width,
        counts,
    }
}

pub fn rle_decode(r: &RleMask) -> Result<BinaryMask> {
    r.validate()?;
    let mut m = BinaryMask::empty(r.dims());
    let mut pos = 0usize;
    for (i, &c) in r.counts.iter().enumerate() {
        let end = pos + c as usize;
        if i % 2 == 1 {
            m.fill_range(pos, end);
        }
        pos = end;
    }
    Ok(m)
}
