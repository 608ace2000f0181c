//! Monophonic F0 tracking with a normalized difference function.
//!
//! Each frame compares a window with lagged copies of itself. The difference
//! function is computed through an FFT cross-correlation, normalized by its
//! cumulative mean, and the lag of its first deep minimum (refined by a
//! parabola) gives the period. Frames whose centre is quieter than -60 dBFS,
//! or whose best minimum stays above the voicing threshold, are unvoiced.
//!
//! Silent blocks at either end of the analysis span are dropped before the
//! difference function is formed, so a frame next to an onset is judged on the
//! sounding part of its window only.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::contour::F0Contour;
use crate::error::{Error, Result};
use crate::par;

/// Frames quieter than this RMS (-60 dBFS) are never voiced.
pub const SILENCE_RMS: f64 = 1e-3;

const GATE_BLOCK_SECONDS: f64 = 0.005;
// A later minimum only wins over an earlier one if it is this much deeper.
const CANDIDATE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub hop_seconds: f64,
    pub fmin: f64,
    pub fmax: f64,
    pub voicing_threshold: f64,
    pub window_seconds: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { hop_seconds: 0.010, fmin: 50.0, fmax: 1500.0, voicing_threshold: 0.45, window_seconds: 0.040 }
    }
}

impl TrackerConfig {
    pub fn with_hop(self, hop_seconds: f64) -> Self {
        Self { hop_seconds, ..self }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.hop_seconds > 0.0) || !(self.window_seconds > 0.0) {
            return Err(Error::InvalidConfig("hop and window must be positive".into()));
        }
        if !(self.fmin > 0.0 && self.fmin < self.fmax && self.fmax < nyquist) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < fmin < fmax < {nyquist} Hz, got {}..{}",
                self.fmin, self.fmax
            )));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::InvalidConfig("voicing threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Number of frames on a `hop`-second grid covering `samples` samples.
pub fn frame_count(samples: usize, sample_rate: u32, hop_seconds: f64) -> usize {
    let hop = hop_seconds * sample_rate as f64;
    (samples as f64 / hop - 1e-9).ceil().max(0.0) as usize
}

struct Geometry {
    sample_rate: f64,
    hop: f64,
    tau_min: usize,
    tau_max: usize,
    span: usize,
    block: usize,
}

struct Plans {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Tracks the F0 of `clip` on a uniform grid `t_k = k * hop_seconds`.
pub fn track_f0(clip: &AudioClip, cfg: &TrackerConfig) -> Result<F0Contour> {
    cfg.validate(clip.sample_rate())?;
    let sr = clip.sample_rate() as f64;
    let tau_max = (sr / cfg.fmin).ceil() as usize;
    let window = (cfg.window_seconds * sr).round() as usize;
    let geo = Geometry {
        sample_rate: sr,
        hop: cfg.hop_seconds * sr,
        tau_min: ((sr / cfg.fmax).floor() as usize).max(2),
        tau_max,
        span: window + tau_max,
        block: ((GATE_BLOCK_SECONDS * sr).round() as usize).max(1),
    };
    if clip.len() < geo.span {
        return Err(Error::ClipTooShort { samples: clip.len(), needed: geo.span });
    }
    let size = geo.span.next_power_of_two();
    let mut planner = FftPlanner::new();
    let plans = Plans { size, forward: planner.plan_fft_forward(size), inverse: planner.plan_fft_inverse(size) };

    let frames = frame_count(clip.len(), clip.sample_rate(), cfg.hop_seconds);
    let raw = par::map_range(frames, |k| estimate_frame(clip.samples(), k, &geo, &plans, cfg));
    let values = median_smooth(&raw)
        .into_iter()
        .map(|f| if f > 0.0 { f.clamp(cfg.fmin, cfg.fmax) } else { 0.0 })
        .collect();
    F0Contour::new(cfg.hop_seconds, values)
}

fn estimate_frame(x: &[f64], k: usize, geo: &Geometry, plans: &Plans, cfg: &TrackerConfig) -> f64 {
    let centre = ((k as f64 * geo.hop).round() as usize).min(x.len() - 1);
    let start = centre.saturating_sub(geo.span / 2).min(x.len() - geo.span);
    let span = &x[start..start + geo.span];

    let Some((a, b)) = sounding_stretch(span, centre - start, geo.block) else {
        return 0.0;
    };
    let seg = &span[a..b];
    let tau_hi = geo.tau_max.min(seg.len() / 2);
    if tau_hi < geo.tau_min + 2 {
        return 0.0;
    }
    let cmnd = normalized_difference(seg, seg.len() - tau_hi, tau_hi, plans);
    match pick_period(&cmnd, geo.tau_min, cfg.voicing_threshold) {
        Some(tau) => geo.sample_rate / tau,
        None => 0.0,
    }
}

/// The run of non-silent gate blocks around `centre`, as a sample range of `span`.
fn sounding_stretch(span: &[f64], centre: usize, block: usize) -> Option<(usize, usize)> {
    let blocks: Vec<bool> = span.chunks(block).map(|b| crate::audio::rms(b) >= SILENCE_RMS).collect();
    let c = (centre / block).min(blocks.len() - 1);
    if !blocks[c] {
        return None;
    }
    let first = (0..=c).rev().take_while(|&i| blocks[i]).last().unwrap_or(c);
    let last = (c..blocks.len()).take_while(|&i| blocks[i]).last().unwrap_or(c);
    Some((first * block, ((last + 1) * block).min(span.len())))
}

/// Cumulative-mean-normalized difference d'(tau) for tau in 0..=tau_hi,
/// comparing `seg[..window]` with `seg[tau..tau + window]`.
fn normalized_difference(seg: &[f64], window: usize, tau_hi: usize, plans: &Plans) -> Vec<f64> {
    let n = plans.size;
    let mut head: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(if i < window { seg[i] } else { 0.0 }, 0.0))
        .collect();
    let mut full: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(if i < window + tau_hi { seg[i] } else { 0.0 }, 0.0))
        .collect();
    plans.forward.process(&mut head);
    plans.forward.process(&mut full);
    for (h, f) in head.iter_mut().zip(&full) {
        *h = h.conj() * f;
    }
    plans.inverse.process(&mut head);
    let scale = 1.0 / n as f64;

    let mut prefix = Vec::with_capacity(window + tau_hi + 1);
    prefix.push(0.0);
    for &s in &seg[..window + tau_hi] {
        prefix.push(prefix.last().unwrap() + s * s);
    }
    let energy0 = prefix[window];
    let mut out = vec![1.0; tau_hi + 1];
    let mut running = 0.0;
    for tau in 1..=tau_hi {
        let energy_tau = prefix[tau + window] - prefix[tau];
        let d = (energy0 + energy_tau - 2.0 * head[tau].re * scale).max(0.0);
        running += d;
        out[tau] = if running > 0.0 { d * tau as f64 / running } else { 1.0 };
    }
    out
}

/// Fractional period in samples, or `None` when no minimum is deep enough.
///
/// Minima are compared by their parabola-interpolated depth, so a lag that
/// happens to land on the integer grid does not look deeper than the true
/// period.
fn pick_period(cmnd: &[f64], tau_min: usize, threshold: f64) -> Option<f64> {
    let hi = cmnd.len() - 1;
    let minima: Vec<(usize, f64, f64)> = (tau_min.max(1)..hi)
        .filter(|&t| cmnd[t] <= cmnd[t - 1] && cmnd[t] < cmnd[t + 1])
        .map(|t| {
            let (l, c, r) = (cmnd[t - 1], cmnd[t], cmnd[t + 1]);
            let denom = l - 2.0 * c + r;
            if denom > 0.0 {
                let shift = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
                (t, shift, c - 0.25 * (l - r) * shift)
            } else {
                (t, 0.0, c)
            }
        })
        .collect();
    let deepest = minima.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    if !(deepest < threshold) {
        return None;
    }
    let accept = threshold.min(deepest + CANDIDATE_MARGIN);
    let &(tau, shift, _) = minima.iter().find(|m| m.2 <= accept)?;
    Some(tau as f64 + shift)
}

/// Three-frame median with unvoiced frames counted as 0 Hz, so isolated
/// voiced or unvoiced frames are absorbed by their neighbours.
fn median_smooth(raw: &[f64]) -> Vec<f64> {
    let mut out = raw.to_vec();
    for k in 1..raw.len().saturating_sub(1) {
        let (a, b, c) = (raw[k - 1], raw[k], raw[k + 1]);
        out[k] = a.max(b).min(a.min(b).max(c));
    }
    out
}
