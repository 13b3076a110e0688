mod common;

use pimo_core::counting::sweep_dataset;
use pimo_core::curves::{
    aupimo, aupro, auroc, pimo_curve, pro_curve, roc_curve, AuproOptions, FprBounds, PartialPolicy,
};
use pimo_core::regions::{connected_components, Connectivity};
use pimo_core::{build_threshold_grid, Dataset, GridMode, GtMask, Sample};
use proptest::prelude::*;

fn dataset(seed: u64) -> Dataset {
    common::random_dataset(&mut common::rng(seed), 5, 12)
}

fn exact_grid(ds: &Dataset) -> pimo_core::ThresholdGrid {
    build_threshold_grid(ds, GridMode::ExactUnique, 0).unwrap()
}

fn random_mask(seed: u64, h: usize, w: usize) -> GtMask {
    use rand::Rng;
    let mut rng = common::rng(seed);
    let values = (0..h * w).map(|_| rng.random_bool(0.4) as u8).collect();
    GtMask::new("m", h, w, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweep_matches_recount(seed in any::<u64>()) {
        let ds = dataset(seed);
        let grid = build_threshold_grid(&ds, GridMode::LinearGlobal, 17).unwrap();
        for (s, c) in ds.iter().zip(sweep_dataset(&ds, &grid)) {
            for (k, &t) in grid.thresholds().iter().enumerate() {
                let (tp, fp, np, nn) = common::recount(s, t);
                prop_assert_eq!((c.tp[k], c.fp[k], c.n_pos, c.n_neg), (tp, fp, np, nn));
            }
        }
    }

    #[test]
    fn counts_are_monotone_in_threshold(seed in any::<u64>()) {
        let ds = dataset(seed);
        let grid = exact_grid(&ds);
        for c in sweep_dataset(&ds, &grid) {
            prop_assert!(c.tp.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(c.fp.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn complementing_labels_swaps_tp_and_fp(seed in any::<u64>()) {
        let ds = dataset(seed);
        let grid = exact_grid(&ds);
        let flipped = Dataset::new(
            ds.iter().map(|s| s.with_mask(s.mask().complement()).unwrap()).collect(),
        ).unwrap();
        for (a, b) in sweep_dataset(&ds, &grid).iter().zip(sweep_dataset(&flipped, &grid)) {
            prop_assert_eq!(&a.tp, &b.fp);
            prop_assert_eq!(&a.fp, &b.tp);
            prop_assert_eq!((a.n_pos, a.n_neg), (b.n_neg, b.n_pos));
        }
    }

    #[test]
    fn labeling_agrees_with_flood_fill(seed in any::<u64>(), h in 1usize..24, w in 1usize..24) {
        let mask = random_mask(seed, h, w);
        for (conn, eight) in [(Connectivity::Four, false), (Connectivity::Eight, true)] {
            let set = connected_components(&mask, conn);
            let mut got: Vec<Vec<usize>> = vec![Vec::new(); set.num_regions()];
            for (p, &l) in set.labels.iter().enumerate() {
                if l != 0 {
                    got[l as usize - 1].push(p);
                }
            }
            let want = common::flood_fill(&mask, eight);
            prop_assert_eq!(&got, &want);
            prop_assert_eq!(set.region_sizes.clone(), want.iter().map(Vec::len).collect::<Vec<_>>());
        }
    }

    #[test]
    fn eight_connectivity_never_has_more_regions(seed in any::<u64>(), h in 1usize..24, w in 1usize..24) {
        let mask = random_mask(seed, h, w);
        let four = connected_components(&mask, Connectivity::Four).num_regions();
        let eight = connected_components(&mask, Connectivity::Eight).num_regions();
        prop_assert!(eight <= four);
    }

    #[test]
    fn region_recalls_sum_to_true_positives(seed in any::<u64>()) {
        let ds = dataset(seed);
        let grid = exact_grid(&ds);
        let s = ds.anomalous().next().unwrap();
        let set = connected_components(s.mask(), Connectivity::Eight);
        let recalls = pimo_core::regions::per_region_tpr(s, &set, &grid).unwrap();
        for (k, &t) in grid.thresholds().iter().enumerate() {
            let sum: f64 = recalls.iter().zip(&set.region_sizes).map(|(r, &n)| r[k] * n as f64).sum();
            prop_assert!((sum - common::recount(s, t).0 as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn auroc_is_mann_whitney(seed in any::<u64>()) {
        let ds = dataset(seed);
        let got = auroc(&roc_curve(&ds, &exact_grid(&ds)).unwrap());
        prop_assert!((got - common::mann_whitney_auroc(&ds)).abs() < 1e-9);
    }

    #[test]
    fn aupro_matches_oracle(seed in any::<u64>(), max_fpr in 0.05f64..1.0) {
        let ds = dataset(seed);
        let curve = pro_curve(&ds, &exact_grid(&ds), Connectivity::Eight).unwrap();
        let got = aupro(&curve, AuproOptions::with_max_fpr(max_fpr)).ok();
        match (got, common::aupro_oracle(&ds, max_fpr)) {
            (Some(g), Some(w)) => prop_assert!((g - w).abs() < 1e-9, "{} vs {}", g, w),
            (None, None) => {}
            (g, w) => prop_assert!(false, "{:?} vs {:?}", g, w),
        }
    }

    #[test]
    fn aupimo_matches_oracle_and_stays_in_unit_interval(seed in any::<u64>(), lower in 0.01f64..0.2, ratio in 1.5f64..8.0) {
        let ds = dataset(seed);
        let upper = (lower * ratio).min(1.0);
        let bounds = FprBounds::new(lower, upper).unwrap();
        let curve = pimo_curve(&ds, &exact_grid(&ds)).unwrap();
        if let (Ok(res), Ok(want)) = (
            aupimo(&curve, bounds, PartialPolicy::Strict),
            common::log_fpr_auc(&ds, lower, upper, common::tpr_at),
        ) {
            for (g, w) in res.scores.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9);
                prop_assert!((0.0..=1.0).contains(g), "{}", g);
            }
        }
    }

    #[test]
    fn monotone_transform_keeps_all_aucs(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let ds = dataset(seed);
        let mapped = ds.map_scores(|x| (scale * x + shift).exp()).unwrap();
        let a = auroc(&roc_curve(&ds, &exact_grid(&ds)).unwrap());
        let b = auroc(&roc_curve(&mapped, &exact_grid(&mapped)).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        let bounds = FprBounds::new(0.05, 0.5).unwrap();
        let pa = aupimo(&pimo_curve(&ds, &exact_grid(&ds)).unwrap(), bounds, PartialPolicy::Renormalize);
        let pb = aupimo(&pimo_curve(&mapped, &exact_grid(&mapped)).unwrap(), bounds, PartialPolicy::Renormalize);
        match (pa, pb) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.scores.iter().zip(&b.scores) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.code(), b.code()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn duplicating_normal_images_keeps_aupimo(seed in any::<u64>()) {
        let ds = dataset(seed);
        let mut doubled = ds.clone();
        for (i, s) in ds.normal().enumerate() {
            let copy = Sample::new(format!("copy{i}"), s.scores().clone(), s.mask().clone()).unwrap();
            doubled.push(copy).unwrap();
        }
        let bounds = FprBounds::new(0.05, 0.5).unwrap();
        let grid = exact_grid(&ds);
        let a = aupimo(&pimo_curve(&ds, &grid).unwrap(), bounds, PartialPolicy::Renormalize);
        let b = aupimo(&pimo_curve(&doubled, &grid).unwrap(), bounds, PartialPolicy::Renormalize);
        if let (Ok(a), Ok(b)) = (a, b) {
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
