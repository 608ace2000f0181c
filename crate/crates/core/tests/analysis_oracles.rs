mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use unison_core::analysis::{compare_unison_f0, inter_singer_deviation, transition_regions};
use unison_core::signals::VOWEL_A;
use unison_core::{mix_and_normalize, F0Contour, Section, TrackerConfig, UnisonGroup};

const SR: u32 = 16000;

#[test]
fn iid_offsets_match_the_pairwise_normal_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let frames = 10_000;
    for sigma in [10.0f64, 20.0, 50.0] {
        let normal = Normal::new(0.0, sigma).unwrap();
        let contours: Vec<F0Contour> = (0..4)
            .map(|_| {
                let values = (0..frames).map(|_| 220.0 * (normal.sample(&mut rng) / 1200.0).exp2()).collect();
                F0Contour::new(TRACKER_HOP, values).unwrap()
            })
            .collect();
        let stats = inter_singer_deviation(&UnisonGroup::new(Section::Bass, contours).unwrap());
        let expected = 2.0 * sigma / std::f64::consts::PI.sqrt();
        assert!((stats.mean_cents / expected - 1.0).abs() < 0.05, "sigma {sigma}: {} vs {expected}", stats.mean_cents);
    }
}

#[test]
fn staggered_offset_gives_one_region_of_the_difference() {
    let a = F0Contour::new(0.01, (0..120).map(|k| if k < 100 { 300.0 } else { 0.0 }).collect()).unwrap();
    let b = F0Contour::new(0.01, (0..120).map(|k| if k < 110 { 300.0 } else { 0.0 }).collect()).unwrap();
    let stats = transition_regions(&UnisonGroup::new(Section::Alto, vec![a, b]).unwrap());
    assert_eq!(stats.count(), 1);
    assert!((stats.region_lengths[0] - 0.10).abs() < 1e-9);
    assert_eq!(stats.starts, vec![100]);
}

#[test]
fn jittered_onsets_give_the_expected_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let notes = melody(&mut rng, 80, 0.8, 0.6, 0.5, 150.0, 400.0);
    let frames = ((end_of(&notes) + 0.5) / TRACKER_HOP) as usize;
    let jitter = Normal::new(0.0, 0.040).unwrap();
    let contours: Vec<F0Contour> = (0..4)
        .map(|_| {
            let moved: Vec<Note> = notes
                .iter()
                .map(|n| Note { onset: n.onset + jitter.sample(&mut rng), offset: n.offset + jitter.sample(&mut rng), hz: n.hz })
                .collect();
            notes_contour(&moved, TRACKER_HOP, frames, |_| 0.0)
        })
        .collect();
    let stats = transition_regions(&UnisonGroup::new(Section::Tenor, contours).unwrap());
    let oracle = mc_expected_range(&mut rng, 4, 0.040, 100_000);
    assert!((stats.mean_seconds / oracle - 1.0).abs() < 0.15, "{} vs {oracle}", stats.mean_seconds);
}

/// Four singers on one score, each a constant number of cents away from it.
fn detuned_section(offsets: [f64; 4], silent: Option<usize>) -> (UnisonGroup, unison_core::AudioClip) {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let notes = melody(&mut rng, 6, 0.5, 0.2, 0.2, 180.0, 360.0);
    let frames = ((end_of(&notes) + 0.3) / TRACKER_HOP) as usize;
    let contours: Vec<F0Contour> = offsets
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if Some(i) == silent {
                F0Contour::constant(TRACKER_HOP, 0.0, frames).unwrap()
            } else {
                notes_contour(&notes, TRACKER_HOP, frames, |_| c)
            }
        })
        .collect();
    let mix = mix_and_normalize(&voices(&contours, &VOWEL_A, SR)).unwrap();
    (UnisonGroup::new(Section::Soprano, contours).unwrap(), mix)
}

#[test]
fn mean_contour_scores_at_least_as_well_as_any_singer() {
    let (group, mix) = detuned_section([-20.0, -5.0, 8.0, 20.0], None);
    let cmp = compare_unison_f0(&group, &mix, &TrackerConfig::default(), 30.0).unwrap();
    let best = cmp.per_singer.iter().map(|r| r.rpa).fold(0.0, f64::max);
    assert!(cmp.mean.rpa >= best, "{} < {best}", cmp.mean.rpa);
}

#[test]
fn silent_singer_has_the_lowest_recall() {
    let (group, mix) = detuned_section([0.0, 0.0, 0.0, 0.0], Some(2));
    let cmp = compare_unison_f0(&group, &mix, &TrackerConfig::default(), 30.0).unwrap();
    let vr: Vec<f64> = cmp.per_singer.iter().map(|r| r.vr).collect();
    assert!(vr.iter().enumerate().all(|(i, &v)| i == 2 || v > vr[2]), "{vr:?}");
}

#[test]
fn detuned_singer_has_the_lowest_pitch_accuracy() {
    let (group, mix) = detuned_section([0.0, 0.0, 0.0, 100.0], None);
    let cmp = compare_unison_f0(&group, &mix, &TrackerConfig::default(), 30.0).unwrap();
    let rpa: Vec<f64> = cmp.per_singer.iter().map(|r| r.rpa).collect();
    assert!(rpa[..3].iter().all(|&v| v > rpa[3]), "{rpa:?}");
}
