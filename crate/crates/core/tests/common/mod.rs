//! Synthetic material shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use unison_core::signals::{render_voice, Formant};
use unison_core::{AudioClip, F0Contour};

pub const TRACKER_HOP: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
pub struct Note {
    pub onset: f64,
    pub offset: f64,
    pub hz: f64,
}

/// `n` notes of `note_secs`, separated by rests of `rest_secs`, starting after
/// `lead_secs` of silence. Pitches are random semitones in `[lo_hz, hi_hz]`.
pub fn melody(rng: &mut impl Rng, n: usize, note_secs: f64, rest_secs: f64, lead_secs: f64, lo_hz: f64, hi_hz: f64) -> Vec<Note> {
    let semis = (12.0 * (hi_hz / lo_hz).log2()).floor() as i32;
    (0..n)
        .map(|i| {
            let onset = lead_secs + i as f64 * (note_secs + rest_secs);
            let hz = lo_hz * 2f64.powf(rng.gen_range(0..=semis) as f64 / 12.0);
            Note { onset, offset: onset + note_secs, hz }
        })
        .collect()
}

pub fn end_of(notes: &[Note]) -> f64 {
    notes.iter().map(|n| n.offset).fold(0.0, f64::max)
}

/// Frame `k` (time `k * hop`) is voiced when it falls inside a note; its
/// value is the note pitch moved by `cents(k)`.
pub fn notes_contour(notes: &[Note], hop: f64, frames: usize, cents: impl Fn(usize) -> f64) -> F0Contour {
    let values = (0..frames)
        .map(|k| {
            let t = k as f64 * hop;
            notes
                .iter()
                .find(|n| n.onset <= t && t < n.offset)
                .map_or(0.0, |n| n.hz * (cents(k) / 1200.0).exp2())
        })
        .collect();
    F0Contour::new(hop, values).unwrap()
}

/// Smooth random cent deviations: Gaussian draws every `every` frames with
/// linear interpolation in between, scaled to standard deviation `sd`.
pub fn smooth_deviation(rng: &mut impl Rng, frames: usize, every: usize, sd: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sd).unwrap();
    let knots: Vec<f64> = (0..frames / every + 2).map(|_| normal.sample(rng)).collect();
    (0..frames)
        .map(|k| {
            let i = k / every;
            let f = (k % every) as f64 / every as f64;
            // Keep variance constant between knots.
            let norm = ((1.0 - f).powi(2) + f * f).sqrt();
            (knots[i] * (1.0 - f) + knots[i + 1] * f) / norm
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Sine,
    Sawtooth,
}

/// Band-limited tone following `f0(t)` (0 = silence) for `secs`.
pub fn render_fn(f0: impl Fn(f64) -> f64, wave: Waveform, amp: f64, secs: f64, sr: u32) -> AudioClip {
    let n = (secs * sr as f64).round() as usize;
    let nyquist = sr as f64 / 2.0;
    let mut phase = 0.0f64;
    let samples = (0..n)
        .map(|i| {
            let f = f0(i as f64 / sr as f64);
            let s = if f <= 0.0 {
                0.0
            } else {
                match wave {
                    Waveform::Sine => phase.sin(),
                    Waveform::Sawtooth => {
                        let mut acc = 0.0;
                        let mut k = 1;
                        while k as f64 * f < nyquist {
                            acc += (k as f64 * phase).sin() / k as f64;
                            k += 1;
                        }
                        acc * 2.0 / PI
                    }
                }
            };
            phase = (phase + 2.0 * PI * f.max(0.0) / sr as f64) % (2.0 * PI);
            amp * s
        })
        .collect();
    AudioClip::new(samples, sr).unwrap()
}

/// Renders a voice for each contour with the given formants.
pub fn voices(contours: &[F0Contour], formants: &[Formant], sr: u32) -> Vec<AudioClip> {
    contours.iter().map(|c| render_voice(c, formants, sr, 0.5).unwrap()).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Monte-Carlo mean range of `n` Normal(0, sd) draws.
pub fn mc_expected_range(rng: &mut ChaCha8Rng, n: usize, sd: f64, trials: usize) -> f64 {
    let normal = Normal::new(0.0, sd).unwrap();
    let total: f64 = (0..trials)
        .map(|_| {
            let draws: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
            draws.iter().cloned().fold(f64::MIN, f64::max) - draws.iter().cloned().fold(f64::MAX, f64::min)
        })
        .sum();
    total / trials as f64
}
