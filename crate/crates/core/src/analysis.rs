//! Unison statistics: inter-singer pitch deviation, transition-region timing
//! and the mixture-F0 versus mean-contour comparison.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::contour::{cents, mean_contour, resample_to_frames, F0Contour, Section, UnisonGroup};
use crate::error::Result;
use crate::metrics::{evaluate_melody, MetricsReport};
use crate::pitch::{track_f0, TrackerConfig};

/// Which frames enter the pairwise deviation average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameAdmission {
    /// Only frames where every singer is voiced; each uses all C(n,2) pairs.
    #[default]
    AllVoiced,
    /// Any frame with at least one voiced pair; averages the voiced pairs.
    PairVoiced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub section: Section,
    pub mean_cents: f64,
    pub std_cents: f64,
    /// Per admitted frame: mean absolute pairwise cents difference.
    pub per_frame_deviations: Vec<f64>,
    /// Frame index of each entry in `per_frame_deviations`.
    pub frames: Vec<usize>,
}

impl DeviationStats {
    /// No frame qualified.
    pub fn is_empty(&self) -> bool {
        self.per_frame_deviations.is_empty()
    }

    fn from_values(section: Section, frames: Vec<usize>, values: Vec<f64>) -> Self {
        let (mean_cents, std_cents) = mean_std(&values);
        Self { section, mean_cents, std_cents, per_frame_deviations: values, frames }
    }
}

/// Population mean and standard deviation; zeros for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean over singer pairs of the absolute cents difference, frame by frame.
pub fn inter_singer_deviation(group: &UnisonGroup) -> DeviationStats {
    inter_singer_deviation_with(group, FrameAdmission::AllVoiced)
}

pub fn inter_singer_deviation_with(group: &UnisonGroup, admission: FrameAdmission) -> DeviationStats {
    let n = group.singers();
    let mut frames = Vec::new();
    let mut values = Vec::new();
    let mut pitch = Vec::with_capacity(n);
    for k in 0..group.frames() {
        pitch.clear();
        pitch.extend(group.frame(k).map(|f| (f > 0.0).then(|| cents(f))));
        if admission == FrameAdmission::AllVoiced && pitch.iter().any(Option::is_none) {
            continue;
        }
        let (mut sum, mut pairs) = (0.0, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                if let (Some(a), Some(b)) = (pitch[i], pitch[j]) {
                    sum += (a - b).abs();
                    pairs += 1;
                }
            }
        }
        if pairs > 0 {
            frames.push(k);
            values.push(sum / pairs as f64);
        }
    }
    DeviationStats::from_values(group.section(), frames, values)
}

/// Pools several songs' deviations with equal weight per frame.
pub fn pool_deviations(section: Section, songs: &[DeviationStats]) -> DeviationStats {
    let values: Vec<f64> = songs.iter().flat_map(|s| s.per_frame_deviations.iter().copied()).collect();
    let frames = songs.iter().flat_map(|s| s.frames.iter().copied()).collect();
    DeviationStats::from_values(section, frames, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub section: Section,
    pub region_lengths: Vec<f64>,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    /// First frame of each region.
    pub starts: Vec<usize>,
}

impl TransitionStats {
    pub fn count(&self) -> usize {
        self.region_lengths.len()
    }

    pub fn total_seconds(&self) -> f64 {
        self.region_lengths.iter().sum()
    }

    /// Summary over already-measured regions.
    pub fn from_lengths(section: Section, starts: Vec<usize>, lengths: Vec<f64>) -> Self {
        let (mean_seconds, std_seconds) = mean_std(&lengths);
        Self { section, region_lengths: lengths, mean_seconds, std_seconds, starts }
    }
}

/// Maximal runs of frames where some singers are voiced and others are not.
pub fn transition_regions(group: &UnisonGroup) -> TransitionStats {
    let n = group.singers();
    let hop = group.hop_seconds();
    let mut starts = Vec::new();
    let mut lengths = Vec::new();
    let mut run_start: Option<usize> = None;
    for k in 0..=group.frames() {
        let mixed = k < group.frames() && {
            let voiced = group.frame(k).filter(|&f| f > 0.0).count();
            voiced > 0 && voiced < n
        };
        match (mixed, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                starts.push(s);
                lengths.push((k - s) as f64 * hop);
                run_start = None;
            }
            _ => {}
        }
    }
    TransitionStats::from_lengths(group.section(), starts, lengths)
}

pub fn pool_transitions(section: Section, songs: &[TransitionStats]) -> TransitionStats {
    let lengths = songs.iter().flat_map(|s| s.region_lengths.iter().copied()).collect();
    let starts = songs.iter().flat_map(|s| s.starts.iter().copied()).collect();
    TransitionStats::from_lengths(section, starts, lengths)
}

/// Mixture F0 scored against each singer's contour and against the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnisonComparison {
    pub section: Section,
    pub per_singer: Vec<MetricsReport>,
    pub mean: MetricsReport,
    #[serde(skip)]
    pub estimate: Option<F0Contour>,
}

impl UnisonComparison {
    /// Average of each metric over the individual singers.
    pub fn singer_average(&self) -> MetricsReport {
        let n = self.per_singer.len().max(1) as f64;
        let sum = |f: fn(&MetricsReport) -> f64| self.per_singer.iter().map(f).sum::<f64>() / n;
        MetricsReport {
            rpa: sum(|m| m.rpa),
            oa: sum(|m| m.oa),
            vr: sum(|m| m.vr),
            vfa: sum(|m| m.vfa),
            tolerance_cents: self.mean.tolerance_cents,
        }
    }
}

/// Tracks the mixture F0 and scores it against every singer and the mean
/// contour, all on the tracker's grid.
pub fn compare_unison_f0(
    group: &UnisonGroup,
    unison_clip: &AudioClip,
    cfg: &TrackerConfig,
    tolerance_cents: f64,
) -> Result<UnisonComparison> {
    let est = track_f0(unison_clip, cfg)?;
    compare_estimate(group, est, tolerance_cents)
}

/// As [`compare_unison_f0`] with an already tracked mixture contour.
pub fn compare_estimate(group: &UnisonGroup, est: F0Contour, tolerance_cents: f64) -> Result<UnisonComparison> {
    let align = |c: &F0Contour| resample_to_frames(c, est.hop_seconds(), est.len());
    let per_singer = group
        .contours()
        .iter()
        .map(|c| evaluate_melody(&est, &align(c), tolerance_cents))
        .collect::<Result<Vec<_>>>()?;
    let mean = evaluate_melody(&est, &align(&mean_contour(group)), tolerance_cents)?;
    Ok(UnisonComparison { section: group.section(), per_singer, mean, estimate: Some(est) })
}
