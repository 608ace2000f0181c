//! WAV ingestion/emission and the unison mixing step.

use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Peak level every mixture is normalized to (about -1 dBFS).
pub const MIX_PEAK: f64 = 0.89;

/// A mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting a zero sample rate or non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("samples must be finite".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self { samples: vec![0.0; len], sample_rate }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Scales down so the peak does not exceed `limit`; quieter clips pass through.
    pub fn peak_limited(mut self, limit: f64) -> Self {
        let peak = self.peak();
        if peak > limit {
            let gain = limit / peak;
            self.samples.iter_mut().for_each(|s| *s *= gain);
        }
        self
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64).sqrt()
}

/// Reads a PCM16 or float32 WAV file, averaging channels down to mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::Unsupported => Error::UnsupportedCodec {
            path: path.to_path_buf(),
            detail: "format tag not PCM or IEEE float".into(),
        },
        other => Error::Unreadable { path: path.to_path_buf(), source: other },
    })?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>(),
        (format, bits) => {
            return Err(Error::UnsupportedCodec {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    }
    .map_err(|source| Error::Unreadable { path: path.to_path_buf(), source })?;

    if interleaved.len() < channels {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteSample(path.to_path_buf()));
    }
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    Ok(AudioClip { samples, sample_rate: spec.sample_rate })
}

fn quantize(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes a mono PCM16 WAV file.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if clip.is_empty() {
        return Err(Error::EmptyClip);
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wrap = |source| Error::Unwritable { path: path.to_path_buf(), source };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &clip.samples {
        writer.write_sample(quantize(s)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

/// Sums the clips sample by sample (zero-padding to the longest) and
/// peak-normalizes to [`MIX_PEAK`]. An all-zero sum is returned as silence.
///
/// Each output sample sums its inputs in sorted order, so the result is
/// bit-identical under any permutation of `clips`.
pub fn mix_and_normalize(clips: &[AudioClip]) -> Result<AudioClip> {
    let first = clips.first().ok_or(Error::NothingToMix)?;
    let sample_rate = first.sample_rate;
    if let Some(other) = clips.iter().find(|c| c.sample_rate != sample_rate) {
        return Err(Error::SampleRateMismatch(sample_rate, other.sample_rate));
    }
    let len = clips.iter().map(AudioClip::len).max().unwrap_or(0);
    let mut column = Vec::with_capacity(clips.len());
    let mut mixed: Vec<f64> = (0..len)
        .map(|n| {
            column.clear();
            column.extend(clips.iter().map(|c| c.samples.get(n).copied().unwrap_or(0.0)));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect();
    let peak = mixed.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let gain = MIX_PEAK / peak;
        mixed.iter_mut().for_each(|s| *s *= gain);
    }
    Ok(AudioClip { samples: mixed, sample_rate })
}
