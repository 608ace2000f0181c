//! Property tests over random contours and groups.

use proptest::prelude::*;
use unison_core::analysis::{inter_singer_deviation, transition_regions};
use unison_core::{evaluate_melody, hz_to_cents, F0Contour, Section, UnisonGroup};

const HOP: f64 = 0.01;

fn contour_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 80.0f64..1000.0], len)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..80).prop_flat_map(|n| (contour_values(n), contour_values(n)))
}

fn contour(v: &[f64]) -> F0Contour {
    F0Contour::new(HOP, v.to_vec()).unwrap()
}

fn group(rows: &[Vec<f64>]) -> UnisonGroup {
    UnisonGroup::new(Section::Tenor, rows.iter().map(|r| contour(r)).collect()).unwrap()
}

/// Four singers sharing a length, each frame independently voiced.
fn quartet() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..60).prop_flat_map(|n| prop::collection::vec(contour_values(n), 4))
}

proptest! {
    #[test]
    fn metrics_are_ratios((est, reference) in pair(), tol in 0.0f64..200.0) {
        let m = evaluate_melody(&contour(&est), &contour(&reference), tol).unwrap();
        for v in [m.rpa, m.oa, m.vr, m.vfa] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.rpa <= m.vr);
    }

    #[test]
    fn wider_tolerance_never_lowers_accuracy((est, reference) in pair(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let narrow = evaluate_melody(&contour(&est), &contour(&reference), lo).unwrap();
        let wide = evaluate_melody(&contour(&est), &contour(&reference), hi).unwrap();
        prop_assert!(wide.rpa >= narrow.rpa);
        prop_assert!(wide.oa >= narrow.oa);
        prop_assert_eq!(wide.vr, narrow.vr);
        prop_assert_eq!(wide.vfa, narrow.vfa);
    }

    #[test]
    fn deviation_ignores_order_and_common_transposition(rows in quartet(), shift in -300.0f64..300.0) {
        let base = inter_singer_deviation(&group(&rows));
        let mut reversed = rows.clone();
        reversed.reverse();
        let permuted = inter_singer_deviation(&group(&reversed));
        prop_assert_eq!(&base.frames, &permuted.frames);
        prop_assert!((base.mean_cents - permuted.mean_cents).abs() < 1e-9);

        let factor = (shift / 1200.0).exp2();
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect();
        let transposed = inter_singer_deviation(&group(&moved));
        prop_assert!((base.mean_cents - transposed.mean_cents).abs() < 1e-6);
        prop_assert!(base.mean_cents >= 0.0);
    }

    #[test]
    fn two_singer_deviation_is_the_mean_absolute_difference((a, b) in pair()) {
        let stats = inter_singer_deviation(&group(&[a.clone(), b.clone()]));
        let diffs: Vec<f64> = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| **x > 0.0 && **y > 0.0)
            .map(|(x, y)| (hz_to_cents(*x).unwrap() - hz_to_cents(*y).unwrap()).abs())
            .collect();
        prop_assert_eq!(stats.per_frame_deviations.len(), diffs.len());
        if !diffs.is_empty() {
            let expected = diffs.iter().sum::<f64>() / diffs.len() as f64;
            prop_assert!((stats.mean_cents - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn transitions_ignore_order_and_fit_in_the_clip(rows in quartet()) {
        let stats = transition_regions(&group(&rows));
        let mut swapped = rows.clone();
        swapped.swap(0, 3);
        let other = transition_regions(&group(&swapped));
        prop_assert_eq!(&stats.region_lengths, &other.region_lengths);
        prop_assert!(stats.region_lengths.iter().all(|&l| l > 0.0));
        let duration = rows[0].len() as f64 * HOP;
        prop_assert!(stats.total_seconds() <= duration + 1e-9);
    }
}
