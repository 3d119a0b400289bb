mod support;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stref_core::refine::refine_video_with;
use stref_core::{
    overlap_fraction, refine_video, union, BinaryMask, Combination, Dims, Execution, MaskSequence,
    MaskletSet, RefineConfig, TieBreak,
};
use support::{oracle_refine, random_instance, Grid};

#[test]
fn matches_brute_force_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..300 {
        let inst = random_instance(&mut rng, 20, 4, 16);
        let latest = rng.random_bool(0.3);
        let cfg = RefineConfig {
            window: inst.window,
            tau: inst.tau,
            tie_break: if latest {
                TieBreak::Latest
            } else {
                TieBreak::Earliest
            },
        };
        let got = refine_video(&inst.coarse_seq(), &inst.masklets(), &cfg).unwrap();
        let (windows, frames) =
            oracle_refine(&inst.coarse, &inst.tracks, inst.window, inst.tau, latest);
        assert_eq!(got.windows.len(), windows.len(), "case {case}");
        for (g, o) in got.windows.iter().zip(&windows) {
            let combos: Vec<Vec<u32>> = g
                .frames
                .iter()
                .map(|f| f.combination.indices().to_vec())
                .collect();
            assert_eq!(combos, o.combos, "case {case}");
            assert_eq!(g.selected.indices(), o.selected.as_slice(), "case {case}");
        }
        let got_frames: Vec<Grid> = got.frames.iter().map(Grid::from_mask).collect();
        assert_eq!(got_frames, frames, "case {case}");
    }
}

#[test]
fn same_output_for_any_worker_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = random_instance(&mut rng, 20, 4, 16);
    let coarse = inst.coarse_seq();
    let tracked = inst.masklets();
    let cfg = RefineConfig {
        window: 3,
        tau: inst.tau,
        ..Default::default()
    };
    let seq = refine_video_with(&coarse, &tracked, &cfg, Execution::Sequential).unwrap();
    for threads in [1, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let par = pool
            .install(|| refine_video_with(&coarse, &tracked, &cfg, Execution::Parallel).unwrap());
        assert_eq!(par, seq);
    }
}

fn instance_strategy() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_constancy_and_fallback(seed in instance_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 20, 4, 12);
        let coarse = inst.coarse_seq();
        let tracked = inst.masklets();
        let cfg = RefineConfig { window: inst.window, tau: inst.tau, ..Default::default() };
        let out = refine_video(&coarse, &tracked, &cfg).unwrap();
        for w in &out.windows {
            for t in w.start - 1..w.end {
                if w.refined {
                    let members = w.selected.indices().iter().map(|&i| &tracked.tracks()[i as usize - 1][t]);
                    prop_assert_eq!(&out.frames[t], &union(members, Some(coarse.dims())).unwrap());
                } else {
                    prop_assert!(w.selected.is_empty());
                    prop_assert_eq!(&out.frames[t], &coarse.frames()[t]);
                }
            }
            if w.frames.iter().all(|f| f.combination.is_empty()) {
                prop_assert!(!w.refined);
            }
        }
    }

    #[test]
    fn raising_tau_never_adds_indices(seed in instance_strategy(), bump in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12, 4, 12);
        let low = inst.tau * 0.5;
        let high = (low + bump).min(0.999);
        let coarse = inst.coarse_seq();
        let tracked = inst.masklets();
        let run = |tau| refine_video(&coarse, &tracked, &RefineConfig { window: inst.window, tau, ..Default::default() })
            .unwrap()
            .combinations();
        for (lo, hi) in run(low).iter().zip(run(high)) {
            prop_assert!(hi.indices().iter().all(|i| lo.contains(*i)), "{} vs {}", lo, hi);
        }
    }

    #[test]
    fn exact_union_of_fixed_subset_is_a_fixpoint(seed in instance_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.random_range(1..=15);
        let n = rng.random_range(1..=4usize);
        let dims = Dims::new(rng.random_range(n * 3..=24), rng.random_range(4..=24)).unwrap();
        let lane = dims.height / n;
        // disjoint lanes keep non-members at zero overlap
        let tracks: Vec<Vec<BinaryMask>> = (0..n)
            .map(|i| (0..t).map(|_| {
                let mut m = BinaryMask::empty(dims);
                let hh = rng.random_range(1..=lane);
                let ww = rng.random_range(1..=dims.width);
                m.fill_rect((i * lane) as i64, rng.random_range(0..=dims.width - ww) as i64, hh, ww);
                m
            }).collect())
            .collect();
        let subset: Vec<u32> = (1..=n as u32).filter(|_| rng.random_bool(0.6)).collect();
        prop_assume!(!subset.is_empty());
        let coarse: Vec<BinaryMask> = (0..t)
            .map(|ti| union(subset.iter().map(|&i| &tracks[i as usize - 1][ti]), Some(dims)).unwrap())
            .collect();
        let coarse = MaskSequence::new(coarse).unwrap();
        let tracked = MaskletSet::new(dims, t, tracks).unwrap();
        let cfg = RefineConfig { window: rng.random_range(1..=t), tau: rng.random_range(0.0..0.99), ..Default::default() };
        let out = refine_video(&coarse, &tracked, &cfg).unwrap();
        prop_assert_eq!(out.frames.as_slice(), coarse.frames());
        for w in &out.windows {
            prop_assert_eq!(&w.selected, &Combination::from(subset.clone()));
        }
    }
}

#[test]
fn reported_fractions_are_raw_overlaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let inst = random_instance(&mut rng, 10, 3, 10);
    let coarse = inst.coarse_seq();
    let tracked = inst.masklets();
    let out = refine_video(
        &coarse,
        &tracked,
        &RefineConfig {
            window: 4,
            tau: 0.5,
            ..Default::default()
        },
    )
    .unwrap();
    for w in &out.windows {
        for f in &w.frames {
            for (i, &frac) in f.fractions.iter().enumerate() {
                let t = f.frame - 1;
                assert_eq!(
                    frac,
                    overlap_fraction(&tracked.tracks()[i][t], &coarse.frames()[t]).unwrap()
                );
            }
        }
    }
}
