//! Solo-to-unison (STU) clone generation and unison-to-solo (UTS) prototypes.
//!
//! A clone is a vocoder resynthesis of the solo with three independent,
//! seeded perturbations: a smoothed Gaussian pitch offset per frame, a
//! per-segment time shift, and an optional small frequency-axis warp of the
//! envelope standing in for a different singer's timbre. Every random draw
//! comes from a ChaCha stream keyed by `(seed, clone_index, purpose)`, so a
//! clone does not depend on how many others are rendered or in what order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::audio::{mix_and_normalize, rms, AudioClip};
use crate::contour::F0Contour;
use crate::error::{Error, Result};
use crate::par;
use crate::pitch::{track_f0, TrackerConfig, SILENCE_RMS};
use crate::vocoder::{analyze, fit_to_clip, synthesize, VocoderFeatures};

/// Pitch offsets are averaged over this span.
pub const PITCH_SMOOTHING_SECONDS: f64 = 0.050;
/// Silences must last longer than this to split voiced segments.
pub const MIN_SEGMENT_GAP_SECONDS: f64 = 0.080;
pub const SILENCE_BLOCK_SECONDS: f64 = 0.010;
pub const CROSSFADE_SECONDS: f64 = 0.010;
pub const DEFAULT_WARP: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimbreVariation {
    pub enabled: bool,
    /// Largest relative frequency-axis scaling, e.g. 0.03 for ±3%.
    pub max_warp: f64,
}

impl TimbreVariation {
    pub const OFF: Self = Self { enabled: false, max_warp: DEFAULT_WARP };
    pub const ON: Self = Self { enabled: true, max_warp: DEFAULT_WARP };
}

impl Default for TimbreVariation {
    fn default() -> Self {
        Self::OFF
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloneParams {
    /// Standard deviation of the per-clone pitch offset, in cents.
    pub std_cents: f64,
    /// Standard deviation of the per-segment time shift, in seconds.
    pub ts_seconds: f64,
    /// Number of clones.
    pub ns: usize,
    pub timbre: TimbreVariation,
    pub seed: u64,
}

impl Default for CloneParams {
    fn default() -> Self {
        Self { std_cents: 0.0, ts_seconds: 0.0, ns: 1, timbre: TimbreVariation::OFF, seed: 0 }
    }
}

impl CloneParams {
    pub fn validate(&self) -> Result<()> {
        if !self.std_cents.is_finite() || self.std_cents < 0.0 {
            return Err(Error::InvalidConfig(format!("std must be finite and >= 0, got {}", self.std_cents)));
        }
        if !self.ts_seconds.is_finite() || self.ts_seconds < 0.0 {
            return Err(Error::InvalidConfig(format!("ts must be finite and >= 0, got {}", self.ts_seconds)));
        }
        if self.ns == 0 {
            return Err(Error::InvalidConfig("ns must be at least 1".into()));
        }
        let w = self.timbre.max_warp;
        if !w.is_finite() || !(0.0..0.5).contains(&w) {
            return Err(Error::InvalidConfig(format!("timbre warp must lie in [0, 0.5), got {w}")));
        }
        Ok(())
    }
}

/// Listening-test conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Pitch scatter only.
    StuPs,
    /// Pitch scatter and timing.
    StuPts,
    /// Timing only.
    StuTs,
    /// Pitch and timing without timbre variation.
    StuPt,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::StuPs, Preset::StuPts, Preset::StuTs, Preset::StuPt];

    pub fn params(self, seed: u64) -> CloneParams {
        let (std_cents, ts_seconds, timbre) = match self {
            Preset::StuPs => (50.0, 0.0, TimbreVariation::ON),
            Preset::StuPts => (50.0, 0.040, TimbreVariation::ON),
            Preset::StuTs => (0.0, 0.040, TimbreVariation::ON),
            Preset::StuPt => (50.0, 0.040, TimbreVariation::OFF),
        };
        CloneParams { std_cents, ts_seconds, ns: 4, timbre, seed }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::StuPs => "stu_ps",
            Preset::StuPts => "stu_pts",
            Preset::StuTs => "stu_ts",
            Preset::StuPt => "stu_pt",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{s}'")))
    }
}

/// Half-open sample range `[start, end)` of non-silent audio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoicedSegment {
    pub start: usize,
    pub end: usize,
}

impl VoicedSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Splits `clip` at silences (10 ms blocks under -60 dBFS RMS) lasting more
/// than 80 ms. Shorter pauses stay inside their segment.
pub fn segment_voiced_regions(clip: &AudioClip) -> Vec<VoicedSegment> {
    let block = ((SILENCE_BLOCK_SECONDS * clip.sample_rate() as f64).round() as usize).max(1);
    let min_gap_blocks = (MIN_SEGMENT_GAP_SECONDS / SILENCE_BLOCK_SECONDS).floor() as usize + 1;
    let x = clip.samples();
    let loud: Vec<bool> = x.chunks(block).map(|b| rms(b) >= SILENCE_RMS).collect();

    let mut segments = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut quiet_run = 0;
    for (b, &is_loud) in loud.iter().enumerate() {
        if is_loud {
            let end = ((b + 1) * block).min(x.len());
            current = Some(match current {
                Some((s, _)) if quiet_run < min_gap_blocks => (s, end),
                Some((s, e)) => {
                    segments.push(VoicedSegment { start: s, end: e });
                    (b * block, end)
                }
                None => (b * block, end),
            });
            quiet_run = 0;
        } else {
            quiet_run += 1;
        }
    }
    if let Some((s, e)) = current {
        segments.push(VoicedSegment { start: s, end: e });
    }
    segments
}

#[derive(Clone, Copy)]
enum Purpose {
    Pitch = 0,
    Timing = 1,
    Timbre = 2,
    Noise = 3,
}

fn substream(seed: u64, clone_index: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(clone_index as u64 * 4 + purpose as u64);
    rng
}

/// Gaussian per-frame offsets smoothed by a centred moving average and
/// rescaled so every frame keeps standard deviation `std_cents`.
pub fn smoothed_pitch_offsets(frames: usize, hop_seconds: f64, std_cents: f64, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..frames).map(|_| StandardNormal.sample(rng)).collect();
    let width = ((PITCH_SMOOTHING_SECONDS / hop_seconds).round() as usize).max(1);
    let back = width / 2;
    let mut prefix = vec![0.0; frames + 1];
    for (i, v) in raw.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..frames)
        .map(|m| {
            let lo = m.saturating_sub(back);
            let hi = (m + width - back).min(frames);
            std_cents * (prefix[hi] - prefix[lo]) / ((hi - lo) as f64).sqrt()
        })
        .collect()
}

/// Per-segment shifts in samples, drawn from Normal(0, ts) and clipped so a
/// shifted segment never starts before the clip or within two crossfade
/// ramps of the (already shifted) previous segment.
fn timing_shifts(segments: &[VoicedSegment], ts_samples: f64, ramp: usize, rng: &mut impl Rng) -> Vec<isize> {
    let mut shifts = Vec::with_capacity(segments.len());
    let mut prev_end: Option<isize> = None;
    for seg in segments {
        let z: f64 = StandardNormal.sample(rng);
        let wanted = (z * ts_samples).round() as isize;
        let earliest = prev_end.map_or(0, |e| e + 2 * ramp as isize);
        let shift = wanted.max(earliest - seg.start as isize);
        prev_end = Some(seg.end as isize + shift);
        shifts.push(shift);
    }
    shifts
}

/// Weight 1 on the segment, linear 0..1 ramps of `ramp` samples outside it.
fn segment_mask(seg: &VoicedSegment, ramp: usize, len: usize) -> (usize, Vec<f64>) {
    let lo = seg.start.saturating_sub(ramp);
    let hi = (seg.end + ramp).min(len);
    let mask = (lo..hi)
        .map(|i| {
            if i < seg.start {
                1.0 - (seg.start - i) as f64 / (ramp + 1) as f64
            } else if i >= seg.end {
                1.0 - (i + 1 - seg.end) as f64 / (ramp + 1) as f64
            } else {
                1.0
            }
        })
        .collect();
    (lo, mask)
}

/// Moves each segment by its shift, crossfading into what remains of the
/// original signal. The result grows by the largest positive shift.
pub fn shift_segments(y: &[f64], segments: &[VoicedSegment], shifts: &[isize], ramp: usize) -> Vec<f64> {
    let grow = shifts.iter().copied().max().unwrap_or(0).max(0) as usize;
    let mut out: Vec<f64> = y.iter().copied().chain(std::iter::repeat_n(0.0, grow)).collect();
    let mut moved = vec![0.0; out.len()];
    for (seg, &shift) in segments.iter().zip(shifts) {
        let (lo, mask) = segment_mask(seg, ramp, y.len());
        for (j, w) in mask.iter().enumerate() {
            let i = lo + j;
            out[i] -= w * y[i];
            let dest = i as isize + shift;
            if dest >= 0 && (dest as usize) < moved.len() {
                moved[dest as usize] += w * y[i];
            }
        }
    }
    for (o, m) in out.iter_mut().zip(moved) {
        *o += m;
    }
    out
}

/// Pitch- and timbre-perturbed features of clone `clone_index`. Voicing is
/// never altered.
pub fn clone_features(feats: &VocoderFeatures, params: &CloneParams, clone_index: usize) -> Result<VocoderFeatures> {
    params.validate()?;
    if clone_index >= params.ns {
        return Err(Error::InvalidConfig(format!("clone index {clone_index} out of range for ns = {}", params.ns)));
    }
    let mut voice = if params.std_cents > 0.0 {
        let mut rng = substream(params.seed, clone_index, Purpose::Pitch);
        let offsets = smoothed_pitch_offsets(feats.frames(), feats.hop_seconds, params.std_cents, &mut rng);
        feats.transpose_f0(&offsets)?
    } else {
        feats.clone()
    };
    if params.timbre.enabled && params.timbre.max_warp > 0.0 {
        let w = params.timbre.max_warp;
        let factor = 1.0 + substream(params.seed, clone_index, Purpose::Timbre).gen_range(-w..=w);
        voice = voice.warp_envelope(factor);
    }
    Ok(voice)
}

/// Renders clone `clone_index` of the solo `clip`, whose analysis is `feats`.
pub fn make_clone(feats: &VocoderFeatures, clip: &AudioClip, params: &CloneParams, clone_index: usize) -> Result<AudioClip> {
    let voice = clone_features(feats, params, clone_index)?;
    let noise_seed = substream(params.seed, clone_index, Purpose::Noise).next_u64();
    let mut y = synthesize(&voice, noise_seed).into_samples();
    y.resize(clip.len(), 0.0);
    if params.ts_seconds > 0.0 {
        let sr = clip.sample_rate() as f64;
        let segments = segment_voiced_regions(clip);
        let ramp = (CROSSFADE_SECONDS * sr).round() as usize;
        let mut rng = substream(params.seed, clone_index, Purpose::Timing);
        let shifts = timing_shifts(&segments, params.ts_seconds * sr, ramp, &mut rng);
        y = shift_segments(&y, &segments, &shifts, ramp);
    }
    AudioClip::new(y, clip.sample_rate())
}

/// Analysis of a solo ready for cloning.
pub fn prepare_solo(clip: &AudioClip, cfg: &TrackerConfig) -> Result<VocoderFeatures> {
    let f0 = fit_to_clip(&track_f0(clip, cfg)?, clip);
    analyze(clip, &f0)
}

/// All `ns` clones of `clip`, in index order.
pub fn render_clones(clip: &AudioClip, params: &CloneParams, cfg: &TrackerConfig) -> Result<Vec<AudioClip>> {
    params.validate()?;
    let feats = prepare_solo(clip, cfg)?;
    par::map_range(params.ns, |i| make_clone(&feats, clip, params, i)).into_iter().collect()
}

/// Turns a solo recording into a unison of `params.ns` clones.
pub fn solo_to_unison(clip: &AudioClip, params: &CloneParams) -> Result<AudioClip> {
    solo_to_unison_with(clip, params, &TrackerConfig::default())
}

pub fn solo_to_unison_with(clip: &AudioClip, params: &CloneParams, cfg: &TrackerConfig) -> Result<AudioClip> {
    mix_and_normalize(&render_clones(clip, params, cfg)?)
}

/// A single-voice rendering of a unison mixture and the F0 it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct SoloPrototype {
    pub audio: AudioClip,
    /// Tracker output on the mixture, on the tracker's own grid.
    pub f0: F0Contour,
}

/// Resynthesizes a unison mixture as one voice from its tracked F0 and its
/// own envelope and aperiodicity.
pub fn unison_to_solo(clip: &AudioClip) -> Result<AudioClip> {
    Ok(unison_to_solo_with(clip, &TrackerConfig::default())?.audio)
}

pub fn unison_to_solo_with(clip: &AudioClip, cfg: &TrackerConfig) -> Result<SoloPrototype> {
    let f0 = track_f0(clip, cfg)?;
    let feats = analyze(clip, &fit_to_clip(&f0, clip))?;
    let mut audio = synthesize(&feats, 0).into_samples();
    audio.resize(clip.len(), 0.0);
    Ok(SoloPrototype { audio: AudioClip::new(audio, clip.sample_rate())?, f0 })
}
