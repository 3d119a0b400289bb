//! Brute-force reference implementations and random instance generators
//! shared by the integration and acceptance tests.
//!
//! The oracles work on plain `Vec<bool>` rasters with naive pixel loops and
//! never call into the library's mask algebra.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use stref_core::{BinaryMask, Dims, MaskSequence, MaskletSet};

/// Row-major raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub px: Vec<bool>,
}

impl Grid {
    pub fn empty(h: usize, w: usize) -> Self {
        Grid {
            h,
            w,
            px: vec![false; h * w],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> bool {
        self.px[r * self.w + c]
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::from_bools(Dims::new(self.h, self.w).unwrap(), &self.px).unwrap()
    }

    pub fn from_mask(m: &BinaryMask) -> Self {
        Grid {
            h: m.height(),
            w: m.width(),
            px: m.to_bools(),
        }
    }
}

/// Per-window result of the reference refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleWindow {
    pub combos: Vec<Vec<u32>>,
    pub selected: Vec<u32>,
}

/// Reference refinement: naive overlap counts, a map-based tally of
/// combination multiplicities and pixel-loop composition.
pub fn oracle_refine(
    coarse: &[Grid],
    tracks: &[Vec<Grid>],
    window: usize,
    tau: f64,
    latest_on_tie: bool,
) -> (Vec<OracleWindow>, Vec<Grid>) {
    let t_total = coarse.len();
    let mut windows = Vec::new();
    let mut out = Vec::new();
    let mut start = 0;
    while start < t_total {
        let end = (start + window).min(t_total);
        let mut combos = Vec::new();
        for t in start..end {
            let u = &coarse[t];
            let mut combo = Vec::new();
            for (i, track) in tracks.iter().enumerate() {
                let v = &track[t];
                let mut inter = 0usize;
                let mut area = 0usize;
                for p in 0..v.px.len() {
                    if v.px[p] {
                        area += 1;
                        if u.px[p] {
                            inter += 1;
                        }
                    }
                }
                let f = if area == 0 {
                    0.0
                } else {
                    inter as f64 / area as f64
                };
                if f > tau {
                    combo.push(i as u32 + 1);
                }
            }
            combos.push(combo);
        }

        // combination -> (count, first position)
        let mut tally: BTreeMap<Vec<u32>, (usize, usize)> = BTreeMap::new();
        for (pos, c) in combos.iter().enumerate() {
            let e = tally.entry(c.clone()).or_insert((0, pos));
            e.0 += 1;
        }
        let max = tally.values().map(|v| v.0).max().unwrap();
        let tied = tally.iter().filter(|(_, v)| v.0 == max);
        let selected = if latest_on_tie {
            tied.max_by_key(|(_, v)| v.1)
        } else {
            tied.min_by_key(|(_, v)| v.1)
        }
        .unwrap()
        .0
        .clone();

        for t in start..end {
            if selected.is_empty() {
                out.push(coarse[t].clone());
            } else {
                let mut g = Grid::empty(coarse[t].h, coarse[t].w);
                for p in 0..g.px.len() {
                    g.px[p] = selected.iter().any(|&i| tracks[i as usize - 1][t].px[p]);
                }
                out.push(g);
            }
        }
        windows.push(OracleWindow { combos, selected });
        start = end;
    }
    (windows, out)
}

fn oracle_boundary(g: &Grid) -> Vec<(i64, i64)> {
    let mut pts = Vec::new();
    for r in 0..g.h {
        for c in 0..g.w {
            if !g.at(r, c) {
                continue;
            }
            let mut edge = false;
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0
                    || nc < 0
                    || nr >= g.h as i64
                    || nc >= g.w as i64
                    || !g.at(nr as usize, nc as usize)
                {
                    edge = true;
                }
            }
            if edge {
                pts.push((r as i64, c as i64));
            }
        }
    }
    pts
}

/// All-pairs boundary F-measure.
pub fn oracle_boundary_f(pred: &Grid, gt: &Grid, tol: usize) -> f64 {
    let pb = oracle_boundary(pred);
    let gb = oracle_boundary(gt);
    if pb.is_empty() && gb.is_empty() {
        return 1.0;
    }
    if pb.is_empty() || gb.is_empty() {
        return 0.0;
    }
    let tol = tol as i64;
    let near = |a: &(i64, i64), set: &[(i64, i64)]| {
        set.iter()
            .any(|b| (a.0 - b.0).abs().max((a.1 - b.1).abs()) <= tol)
    };
    let pm = pb.iter().filter(|p| near(p, &gb)).count();
    let gm = gb.iter().filter(|g| near(g, &pb)).count();
    let precision = pm as f64 / pb.len() as f64;
    let recall = gm as f64 / gb.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn random_grid<R: Rng>(rng: &mut R, h: usize, w: usize) -> Grid {
    let mut g = Grid::empty(h, w);
    match rng.random_range(0..4) {
        // sparse noise
        0 => {
            let p = rng.random_range(0.0..0.3);
            g.px.iter_mut().for_each(|x| *x = rng.random_bool(p));
        }
        // dense noise
        1 => {
            let p = rng.random_range(0.3..1.0);
            g.px.iter_mut().for_each(|x| *x = rng.random_bool(p));
        }
        // a few rectangles
        _ => {
            for _ in 0..rng.random_range(0..4) {
                let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
                let (r1, c1) = (rng.random_range(r0..h) + 1, rng.random_range(c0..w) + 1);
                for r in r0..r1 {
                    for c in c0..c1 {
                        g.px[r * w + c] = true;
                    }
                }
            }
        }
    }
    g
}

/// A random refinement instance: `tracks[i][t]` and `coarse[t]`.
pub struct Instance {
    pub coarse: Vec<Grid>,
    pub tracks: Vec<Vec<Grid>>,
    pub window: usize,
    pub tau: f64,
}

impl Instance {
    pub fn coarse_seq(&self) -> MaskSequence {
        MaskSequence::new(self.coarse.iter().map(Grid::to_mask).collect()).unwrap()
    }

    pub fn masklets(&self) -> MaskletSet {
        let c = &self.coarse[0];
        MaskletSet::new(
            Dims::new(c.h, c.w).unwrap(),
            self.coarse.len(),
            self.tracks
                .iter()
                .map(|tr| tr.iter().map(Grid::to_mask).collect())
                .collect(),
        )
        .unwrap()
    }
}

/// Coarse frames are built from random subsets of the tracks plus noise so
/// that combinations repeat within windows.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_t: usize,
    max_n: usize,
    max_dim: usize,
) -> Instance {
    let t = rng.random_range(1..=max_t);
    let n = rng.random_range(0..=max_n);
    let h = rng.random_range(1..=max_dim);
    let w = rng.random_range(1..=max_dim);
    let tracks: Vec<Vec<Grid>> = (0..n)
        .map(|_| (0..t).map(|_| random_grid(rng, h, w)).collect())
        .collect();
    let favourite: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let coarse = (0..t)
        .map(|ti| {
            let mut g = if rng.random_bool(0.2) {
                random_grid(rng, h, w)
            } else {
                Grid::empty(h, w)
            };
            for (i, track) in tracks.iter().enumerate() {
                let include = if rng.random_bool(0.7) {
                    favourite[i]
                } else {
                    rng.random_bool(0.5)
                };
                if include {
                    for p in 0..g.px.len() {
                        g.px[p] |= track[ti].px[p];
                    }
                }
            }
            // flip a few pixels so fractions land near the threshold
            for _ in 0..rng.random_range(0..3) {
                let p = rng.random_range(0..g.px.len());
                g.px[p] = !g.px[p];
            }
            g
        })
        .collect();
    Instance {
        coarse,
        tracks,
        window: rng.random_range(1..=t + 2),
        tau: rng.random_range(0.0..1.0),
    }
}
