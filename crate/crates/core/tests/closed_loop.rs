mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unison_core::analysis::inter_singer_deviation;
use unison_core::metrics::evaluate_melody;
use unison_core::signals::{render_voice, VOWEL_O};
use unison_core::synth::{clone_features, prepare_solo, render_clones, CloneParams, TimbreVariation};
use unison_core::vocoder::HOP_SECONDS;
use unison_core::{
    hz_to_cents, load_wav, mean_contour, mix_and_normalize, save_wav, solo_to_unison, track_f0, unison_to_solo,
    AudioClip, F0Contour, Section, TrackerConfig, UnisonGroup,
};

const SR: u32 = 16000;

fn solo(seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score = melody(&mut rng, 8, 0.5, 0.2, 0.3, 196.0, 392.0);
    let frames = ((end_of(&score) + 0.3) / HOP_SECONDS) as usize;
    render_voice(&notes_contour(&score, HOP_SECONDS, frames, |_| 0.0), &VOWEL_O, SR, 0.5).unwrap()
}

fn pitch_only(std_cents: f64, seed: u64) -> CloneParams {
    CloneParams { std_cents, ts_seconds: 0.0, ns: 4, timbre: TimbreVariation::OFF, seed }
}

fn tracked(clips: &[AudioClip], cfg: &TrackerConfig) -> Vec<F0Contour> {
    clips.iter().map(|c| track_f0(c, cfg).unwrap()).collect()
}

#[test]
fn clone_scatter_follows_the_requested_spread() {
    let cfg = TrackerConfig::default();
    let x = solo(31);
    for (std_cents, seed) in [(10.0, 1), (20.0, 2), (50.0, 3)] {
        let contours = tracked(&render_clones(&x, &pitch_only(std_cents, seed), &cfg).unwrap(), &cfg);
        let group = UnisonGroup::aligned(Section::Alto, &contours, cfg.hop_seconds).unwrap();
        let dev = inter_singer_deviation(&group).mean_cents;
        let target = 2.0 * std_cents / std::f64::consts::PI.sqrt();
        assert!((dev / target - 1.0).abs() < 0.20, "std {std_cents}: {dev} vs {target}");
    }
}

#[test]
fn clone_f0_departs_from_the_input_by_a_folded_normal() {
    let x = solo(31);
    let feats = prepare_solo(&x, &TrackerConfig::default()).unwrap();
    let params = pitch_only(50.0, 3);
    let mut diffs = Vec::new();
    for i in 0..params.ns {
        let clone = clone_features(&feats, &params, i).unwrap();
        for (a, b) in clone.f0.values().iter().zip(feats.f0.values()) {
            assert_eq!(*a > 0.0, *b > 0.0);
            if *b > 0.0 {
                diffs.push((hz_to_cents(*a).unwrap() - hz_to_cents(*b).unwrap()).abs());
            }
        }
    }
    let folded = 50.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean(&diffs) / folded - 1.0).abs() < 0.15, "{} vs {folded}", mean(&diffs));
}

#[test]
fn prototype_follows_the_clones_mean_contour() {
    let cfg = TrackerConfig::default();
    let x = solo(32);
    let params = pitch_only(20.0, 9);
    let clones = render_clones(&x, &params, &cfg).unwrap();
    let group = UnisonGroup::aligned(Section::Soprano, &tracked(&clones, &cfg), cfg.hop_seconds).unwrap();
    let mixture = mix_and_normalize(&clones).unwrap();
    let prototype = unison_to_solo(&mixture).unwrap();
    let rpa = evaluate_melody(&track_f0(&prototype, &cfg).unwrap(), &mean_contour(&group), 30.0).unwrap().rpa;
    assert!(rpa >= 0.9, "{rpa}");
}

#[test]
fn rendered_unison_survives_a_wav_round_trip_and_reruns_identically() {
    let x = solo(33);
    let params = CloneParams { std_cents: 30.0, ts_seconds: 0.03, ns: 3, timbre: TimbreVariation::ON, seed: 4 };
    let first = solo_to_unison(&x, &params).unwrap();
    let second = solo_to_unison(&x, &params).unwrap();
    assert_eq!(first, second);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unison.wav");
    save_wav(&first, &path).unwrap();
    let back = load_wav(&path).unwrap();
    assert_eq!(back.len(), first.len());
    let worst = first.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1.0 / 32768.0, "{worst}");
}
