//! Band-limited test voices with exactly known F0.
//!
//! A voice is rendered additively from an [`F0Contour`]: every harmonic below
//! Nyquist gets a 1/k sawtooth slope shaped by a set of formant resonances.
//! Pitch is interpolated in cents between voiced frames and the level ramps
//! over 5 ms at voicing boundaries.

use crate::audio::AudioClip;
use crate::contour::F0Contour;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Formant {
    pub hz: f64,
    pub bandwidth_hz: f64,
}

impl Formant {
    pub const fn new(hz: f64, bandwidth_hz: f64) -> Self {
        Self { hz, bandwidth_hz }
    }

    /// Unit-DC-gain second-order resonance magnitude.
    pub fn gain(&self, f: f64) -> f64 {
        let f2 = self.hz * self.hz;
        f2 / ((f2 - f * f).powi(2) + (self.bandwidth_hz * f).powi(2)).sqrt()
    }
}

/// Open /a/.
pub const VOWEL_A: [Formant; 3] = [Formant::new(730.0, 90.0), Formant::new(1090.0, 110.0), Formant::new(2440.0, 160.0)];
/// /e/.
pub const VOWEL_E: [Formant; 3] = [Formant::new(530.0, 80.0), Formant::new(1840.0, 120.0), Formant::new(2480.0, 160.0)];
/// /i/.
pub const VOWEL_I: [Formant; 3] = [Formant::new(270.0, 60.0), Formant::new(2290.0, 120.0), Formant::new(3010.0, 180.0)];
/// /o/.
pub const VOWEL_O: [Formant; 3] = [Formant::new(570.0, 80.0), Formant::new(840.0, 100.0), Formant::new(2410.0, 160.0)];
/// /u/.
pub const VOWEL_U: [Formant; 3] = [Formant::new(300.0, 60.0), Formant::new(870.0, 100.0), Formant::new(2240.0, 160.0)];

pub const VOWELS: [[Formant; 3]; 5] = [VOWEL_A, VOWEL_E, VOWEL_I, VOWEL_O, VOWEL_U];

const RAMP_SECONDS: f64 = 0.005;

/// Spectral envelope of the source-filter model at `f` Hz, before the
/// per-harmonic 1/k slope.
pub fn envelope_gain(formants: &[Formant], f: f64) -> f64 {
    formants.iter().map(|fm| fm.gain(f)).product()
}

/// Instantaneous F0 at `t` seconds: nearest-frame voicing, cents
/// interpolation between voiced neighbours, 0 when unvoiced.
pub fn f0_at(contour: &F0Contour, t: f64) -> f64 {
    let v = contour.values();
    if v.is_empty() {
        return 0.0;
    }
    let pos = (t / contour.hop_seconds()).max(0.0);
    let nearest = (pos.round() as usize).min(v.len() - 1);
    if v[nearest] <= 0.0 {
        return 0.0;
    }
    let lo = (pos.floor() as usize).min(v.len() - 1);
    let hi = (lo + 1).min(v.len() - 1);
    if v[lo] > 0.0 && v[hi] > 0.0 {
        let frac = pos - lo as f64;
        v[lo] * (v[hi] / v[lo]).powf(frac)
    } else {
        v[nearest]
    }
}

/// Renders `contour` as a formant-filtered harmonic voice whose loudest
/// sample sits at `peak`. The clip spans the contour's frames.
pub fn render_voice(contour: &F0Contour, formants: &[Formant], sample_rate: u32, peak: f64) -> Result<AudioClip> {
    let sr = sample_rate as f64;
    let n = (contour.len() as f64 * contour.hop_seconds() * sr).round() as usize;
    let nyquist = sr / 2.0;
    let ramp = (RAMP_SECONDS * sr).max(1.0);
    let mut phase = 0.0f64;
    let mut gate = 0.0f64;
    let mut last_f0 = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f0 = f0_at(contour, t);
        let target = if f0 > 0.0 { 1.0 } else { 0.0 };
        gate = if target > gate {
            (gate + 1.0 / ramp).min(1.0)
        } else if target < gate {
            (gate - 1.0 / ramp).max(0.0)
        } else {
            gate
        };
        if f0 > 0.0 {
            last_f0 = f0;
        }
        let mut s = 0.0;
        if gate > 0.0 && last_f0 > 0.0 {
            let mut k = 1;
            while k as f64 * last_f0 < nyquist {
                let kf = k as f64;
                s += envelope_gain(formants, kf * last_f0) / kf * (kf * phase).sin();
                k += 1;
            }
            s *= gate;
        }
        phase = (phase + 2.0 * std::f64::consts::PI * last_f0 / sr) % (2.0 * std::f64::consts::PI);
        samples.push(s);
    }
    let clip = AudioClip::new(samples, sample_rate)?;
    let p = clip.peak();
    Ok(if p > 0.0 { clip.scaled(peak / p) } else { clip })
}

/// A steady note at `hz` for `seconds`, framed on `hop`.
pub fn steady(hz: f64, seconds: f64, hop: f64) -> Result<F0Contour> {
    F0Contour::constant(hop, hz, (seconds / hop).round() as usize)
}
