//! Source-filter vocoder: F0, a 60-coefficient all-pass-warped cepstral
//! envelope and four band aperiodicities per 5 ms frame.
//!
//! Analysis windows each frame with a Hann window three pitch periods long
//! (40 ms when unvoiced), averages the power spectrum over one F0 width,
//! lifters the log spectrum below 0.8 periods of quefrency and warps the
//! result with an all-pass constant of 0.45. Aperiodicity is the share of
//! band energy a periodic comb cannot cancel.
//!
//! Synthesis places one minimum-phase pulse per period, carrying the periodic
//! share of the envelope, and adds white noise filtered frame by frame with the
//! aperiodic share.

mod dsp;

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use dsp::{freqt, warp_frequency};

use crate::audio::{AudioClip, MIX_PEAK};
use crate::contour::{resample_to_frames, F0Contour};
use crate::error::{Error, Result};
use crate::par;
use crate::pitch::{frame_count, track_f0, TrackerConfig};
use dsp::{sample_at, smooth_bins, unit_energy_hann, Spectral};

pub const HOP_SECONDS: f64 = 0.005;
pub const WARP_ALPHA: f64 = 0.45;
pub const ENVELOPE_ORDER: usize = 60;
pub const BANDS: usize = 4;
/// Lower band edges in Hz; the last band runs to Nyquist.
pub const BAND_EDGES_HZ: [f64; BANDS] = [0.0, 1000.0, 2000.0, 4000.0];

/// Lowest F0 used to size windows and the FFT.
const F0_FLOOR: f64 = 71.0;
/// Stand-in F0 for smoothing width and lifter cutoff on unvoiced frames.
const UNVOICED_F0: f64 = 160.0;
const UNVOICED_WINDOW_SECONDS: f64 = 0.040;
const WINDOW_PERIODS: f64 = 3.0;
const LIFTER_PERIODS: f64 = 0.8;
/// -80 dB below the frame peak.
const RELATIVE_FLOOR: f64 = 1e-8;
const ABSOLUTE_FLOOR: f64 = 1e-20;
/// Noise power gain of `x[n] - (x[n-T] + x[n+T]) / 2`.
const COMB_NOISE_GAIN: f64 = 1.5;
const EVENT_BATCH: usize = 512;
const FRACTIONAL_HALF_TAPS: usize = 32;
const DC_BLOCK_HZ: f64 = 20.0;

/// FFT length used at `sample_rate` (2048 at 44.1 kHz).
pub fn fft_size(sample_rate: u32) -> usize {
    let periods = WINDOW_PERIODS * sample_rate as f64 / F0_FLOOR;
    1usize << (1 + periods.log2().floor() as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocoderFeatures {
    pub sample_rate: u32,
    pub hop_seconds: f64,
    pub fft_size: usize,
    pub f0: F0Contour,
    /// Warped cepstrum of the log amplitude envelope, one-sided convention.
    pub mfsc: Vec<Vec<f64>>,
    pub band_ap: Vec<[f64; BANDS]>,
}

impl VocoderFeatures {
    pub fn frames(&self) -> usize {
        self.f0.len()
    }

    fn spectral(&self) -> Spectral {
        Spectral::new(self.fft_size)
    }

    /// Natural-log amplitude envelope of `frame` on bins 0..=fft_size/2.
    pub fn log_amplitude(&self, frame: usize) -> Vec<f64> {
        decode(&self.spectral(), &self.mfsc[frame])
    }

    /// Envelope of `frame` in dB (power).
    pub fn envelope_db(&self, frame: usize) -> Vec<f64> {
        self.log_amplitude(frame).iter().map(|la| la * 20.0 / std::f64::consts::LN_10).collect()
    }

    /// Applies per-frame cent offsets to voiced frames only.
    pub fn transpose_f0(&self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.frames() {
            return Err(Error::FrameCountMismatch { contour: offsets.len(), expected: self.frames() });
        }
        let values = self
            .f0
            .values()
            .iter()
            .zip(offsets)
            .map(|(&f, &c)| if f > 0.0 { f * (c / 1200.0).exp2() } else { 0.0 })
            .collect();
        Ok(Self { f0: F0Contour::new(self.hop_seconds, values)?, ..self.clone() })
    }

    /// Rescales the frequency axis of every envelope by `factor`
    /// (formants move up when `factor > 1`).
    pub fn warp_envelope(&self, factor: f64) -> Self {
        let spectral = self.spectral();
        let mfsc = par::map_range(self.frames(), |m| {
            let la = decode(&spectral, &self.mfsc[m]);
            let half = la.len() - 1;
            let moved: Vec<f64> = (0..=half)
                .map(|k| {
                    let src = (k as f64 / factor).min(half as f64);
                    let i = src.floor() as usize;
                    let f = src - i as f64;
                    if i >= half {
                        la[half]
                    } else {
                        la[i] * (1.0 - f) + la[i + 1] * f
                    }
                })
                .collect();
            encode(&spectral, &moved, half)
        });
        Self { mfsc, ..self.clone() }
    }

    /// Per-frame dump: time, F0, 60 envelope coefficients, 4 aperiodicities.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut header = vec!["time_seconds".to_string(), "f0_hz".to_string()];
        header.extend((0..ENVELOPE_ORDER).map(|i| format!("mfsc{i}")));
        header.extend((0..BANDS).map(|i| format!("ap{i}")));
        writeln!(out, "{}", header.join(","))?;
        for m in 0..self.frames() {
            let mut row = vec![format!("{:.6}", self.f0.time_of(m)), format!("{:.6}", self.f0.values()[m])];
            row.extend(self.mfsc[m].iter().map(|v| format!("{v:.8}")));
            row.extend(self.band_ap[m].iter().map(|v| format!("{v:.6}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Frames the vocoder uses for a clip of `samples` samples.
pub fn vocoder_frames(samples: usize, sample_rate: u32) -> usize {
    frame_count(samples, sample_rate, HOP_SECONDS)
}

/// Puts a contour from any grid onto the vocoder grid of `clip`.
pub fn fit_to_clip(f0: &F0Contour, clip: &AudioClip) -> F0Contour {
    resample_to_frames(f0, HOP_SECONDS, vocoder_frames(clip.len(), clip.sample_rate()))
}

/// Tracks `clip` and returns its F0 on the vocoder grid.
pub fn track_for_vocoder(clip: &AudioClip, cfg: &TrackerConfig) -> Result<F0Contour> {
    Ok(fit_to_clip(&track_f0(clip, cfg)?, clip))
}

/// Mean over voiced frames of the RMS dB difference between two envelopes,
/// restricted to bins at or below `max_hz`. Frames must match.
pub fn log_spectral_distortion(a: &VocoderFeatures, b: &VocoderFeatures, max_hz: f64) -> Result<f64> {
    if a.frames() != b.frames() || a.fft_size != b.fft_size || a.sample_rate != b.sample_rate {
        return Err(Error::GridMismatch("feature sets differ in shape".into()));
    }
    let top = ((max_hz * a.fft_size as f64 / a.sample_rate as f64).floor() as usize).min(a.fft_size / 2);
    let voiced: Vec<usize> = (0..a.frames()).filter(|&m| a.f0.is_voiced(m)).collect();
    if voiced.is_empty() {
        return Ok(0.0);
    }
    let per_frame = par::map_slice(&voiced, |&m| {
        let (ea, eb) = (a.envelope_db(m), b.envelope_db(m));
        let sq: f64 = (0..=top).map(|k| (ea[k] - eb[k]).powi(2)).sum();
        (sq / (top + 1) as f64).sqrt()
    });
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

fn decode(spectral: &Spectral, mfsc: &[f64]) -> Vec<f64> {
    let cep = freqt(mfsc, spectral.n / 2, -WARP_ALPHA);
    spectral.cosine_series(&cep)
}

/// Log amplitude half spectrum -> warped cepstrum, keeping quefrencies up to
/// `cutoff` samples before warping.
fn encode(spectral: &Spectral, log_amp: &[f64], cutoff: usize) -> Vec<f64> {
    let mut cep = spectral.one_sided_cepstrum(log_amp);
    cep.truncate(cutoff + 1);
    freqt(&cep, ENVELOPE_ORDER - 1, WARP_ALPHA)
}

/// Decomposes `clip` given its F0 on the vocoder grid.
pub fn analyze(clip: &AudioClip, f0: &F0Contour) -> Result<VocoderFeatures> {
    let sr = clip.sample_rate();
    let expected = vocoder_frames(clip.len(), sr);
    if (f0.hop_seconds() - HOP_SECONDS).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!("vocoder needs a {HOP_SECONDS} s hop, got {}", f0.hop_seconds())));
    }
    if f0.len() != expected {
        return Err(Error::FrameCountMismatch { contour: f0.len(), expected });
    }
    let n = fft_size(sr);
    let spectral = Spectral::new(n);
    let x = clip.samples();
    let frames = par::map_range(expected, |m| {
        let centre = m as f64 * HOP_SECONDS * sr as f64;
        let hz = f0.values()[m];
        let envelope = frame_envelope(x, centre, hz, sr, &spectral);
        let ap = if hz > 0.0 { band_aperiodicity(x, centre, hz, sr, &spectral) } else { [1.0; BANDS] };
        (envelope, ap)
    });
    let (mfsc, band_ap) = frames.into_iter().unzip();
    Ok(VocoderFeatures { sample_rate: sr, hop_seconds: HOP_SECONDS, fft_size: n, f0: f0.clone(), mfsc, band_ap })
}

/// Samples of `x` under a window of `len` centred on `centre`, zero outside.
fn windowed(x: &[f64], centre: f64, window: &[f64]) -> Vec<f64> {
    let start = centre.round() as isize - (window.len() / 2) as isize;
    window
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let idx = start + i as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                w * x[idx as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn window_len(hz: f64, sr: u32) -> usize {
    let secs = if hz > 0.0 { WINDOW_PERIODS / hz.max(F0_FLOOR) } else { UNVOICED_WINDOW_SECONDS };
    ((secs * sr as f64).round() as usize).max(4)
}

fn frame_envelope(x: &[f64], centre: f64, hz: f64, sr: u32, spectral: &Spectral) -> Vec<f64> {
    let window = unit_energy_hann(window_len(hz, sr));
    let power = spectral.power(&windowed(x, centre, &window));
    let smoothing_hz = if hz > 0.0 { hz.max(F0_FLOOR) } else { UNVOICED_F0 };
    let smoothed = smooth_bins(&power, smoothing_hz * spectral.n as f64 / sr as f64);
    let peak = smoothed.iter().cloned().fold(0.0, f64::max);
    let floor = (peak * RELATIVE_FLOOR).max(ABSOLUTE_FLOOR);
    let log_amp: Vec<f64> = smoothed.iter().map(|&p| 0.5 * p.max(floor).ln()).collect();
    let cutoff = ((LIFTER_PERIODS * sr as f64 / smoothing_hz).floor() as usize).min(spectral.n / 2);
    encode(spectral, &log_amp, cutoff)
}

fn band_of(bin: usize, n: usize, sr: u32) -> usize {
    let hz = bin as f64 * sr as f64 / n as f64;
    BAND_EDGES_HZ.iter().rposition(|&edge| hz >= edge).unwrap_or(0)
}

/// Residual-to-total energy per band after cancelling the periodic part with
/// a symmetric comb at the given F0.
fn band_aperiodicity(x: &[f64], centre: f64, hz: f64, sr: u32, spectral: &Spectral) -> [f64; BANDS] {
    let period = sr as f64 / hz;
    let window = unit_energy_hann(window_len(hz, sr));
    let start = centre.round() - (window.len() / 2) as f64;
    let mut direct = Vec::with_capacity(window.len());
    let mut residual = Vec::with_capacity(window.len());
    for (i, w) in window.iter().enumerate() {
        let pos = start + i as f64;
        let s = sample_at(x, pos);
        let r = s - 0.5 * (sample_at(x, pos - period) + sample_at(x, pos + period));
        direct.push(w * s);
        residual.push(w * r);
    }
    let total = spectral.power(&direct);
    let rest = spectral.power(&residual);
    let mut e_total = [0.0; BANDS];
    let mut e_rest = [0.0; BANDS];
    for k in 1..total.len() {
        let b = band_of(k, spectral.n, sr);
        e_total[b] += total[k];
        e_rest[b] += rest[k];
    }
    let mut ap = [1.0; BANDS];
    for b in 0..BANDS {
        if e_total[b] > 0.0 {
            ap[b] = (e_rest[b] / (COMB_NOISE_GAIN * e_total[b])).clamp(0.0, 1.0);
        }
    }
    ap
}

/// Per-bin aperiodicity interpolated linearly between band centres.
fn aperiodicity_curve(ap: &[f64; BANDS], n: usize, sr: u32) -> Vec<f64> {
    let nyquist = sr as f64 / 2.0;
    let centres: Vec<f64> = (0..BANDS)
        .map(|b| {
            let hi = if b + 1 < BANDS { BAND_EDGES_HZ[b + 1] } else { nyquist };
            0.5 * (BAND_EDGES_HZ[b] + hi.max(BAND_EDGES_HZ[b]))
        })
        .collect();
    (0..=n / 2)
        .map(|k| {
            let hz = k as f64 * sr as f64 / n as f64;
            if hz <= centres[0] {
                return ap[0];
            }
            for b in 1..BANDS {
                if hz <= centres[b] {
                    let t = (hz - centres[b - 1]) / (centres[b] - centres[b - 1]);
                    return ap[b - 1] * (1.0 - t) + ap[b] * t;
                }
            }
            ap[BANDS - 1]
        })
        .collect()
}

enum Event {
    Pulse { position: f64, frame: usize, period: f64 },
    Noise { frame: usize },
}

/// Renders features to audio. Noise comes from a generator seeded with `seed`.
pub fn synthesize(feats: &VocoderFeatures, seed: u64) -> AudioClip {
    let sr = feats.sample_rate;
    let hop = feats.hop_seconds * sr as f64;
    let frames = feats.frames();
    let out_len = (frames as f64 * hop).round() as usize;
    let spectral = feats.spectral();
    let n = spectral.n;
    let noise_fft = Spectral::new((2 * hop.ceil() as usize + 2 + n).next_power_of_two());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..out_len).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut events: Vec<Event> = pulse_positions(feats)
        .into_iter()
        .map(|(position, frame, period)| Event::Pulse { position, frame, period })
        .collect();
    events.extend((0..frames).map(|frame| Event::Noise { frame }));

    let mut out = vec![0.0; out_len + noise_fft.n];
    for batch in events.chunks(EVENT_BATCH) {
        let rendered = par::map_slice(batch, |event| match *event {
            Event::Pulse { position, frame, period } => {
                pulse_response(feats, &spectral, position, frame, period)
            }
            Event::Noise { frame } => noise_segment(feats, &spectral, &noise_fft, &noise, frame, hop, out_len),
        });
        for (start, samples) in rendered {
            for (o, s) in out[start..].iter_mut().zip(samples) {
                *o += s;
            }
        }
    }
    out.truncate(out_len);
    block_dc(&mut out, sr);
    AudioClip::new(out, sr).expect("finite synthesis output").peak_limited(MIX_PEAK)
}

/// One-pole DC blocker with a corner near `DC_BLOCK_HZ`.
fn block_dc(x: &mut [f64], sr: u32) {
    let r = 1.0 - 2.0 * std::f64::consts::PI * DC_BLOCK_HZ / sr as f64;
    let (mut prev_in, mut prev_out) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = *v - prev_in + r * prev_out;
        prev_in = *v;
        prev_out = y;
        *v = y;
    }
}

/// Pulse times (fractional samples), their frame and local period in samples.
fn pulse_positions(feats: &VocoderFeatures) -> Vec<(f64, usize, f64)> {
    let sr = feats.sample_rate as f64;
    let f0 = feats.f0.values();
    let frames = f0.len();
    let duration = frames as f64 * feats.hop_seconds;
    let mut pulses = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let pos = t / feats.hop_seconds;
        let frame = (pos.round() as usize).min(frames - 1);
        if f0[frame] <= 0.0 {
            t = (frame + 1) as f64 * feats.hop_seconds;
            continue;
        }
        let lo = (pos.floor() as usize).min(frames - 1);
        let hi = (lo + 1).min(frames - 1);
        let hz = if f0[lo] > 0.0 && f0[hi] > 0.0 {
            let frac = pos - lo as f64;
            f0[lo] * (1.0 - frac) + f0[hi] * frac
        } else {
            f0[frame]
        };
        pulses.push((t * sr, frame, sr / hz));
        t += 1.0 / hz;
    }
    pulses
}

fn split_log_amplitudes(feats: &VocoderFeatures, spectral: &Spectral, frame: usize) -> (Vec<f64>, Vec<f64>) {
    let la = decode(spectral, &feats.mfsc[frame]);
    let ap = if feats.f0.values()[frame] > 0.0 {
        aperiodicity_curve(&feats.band_ap[frame], spectral.n, feats.sample_rate)
    } else {
        vec![1.0; la.len()]
    };
    let periodic = la.iter().zip(&ap).map(|(l, a)| l + 0.5 * (1.0 - a).max(1e-12).ln()).collect();
    let aperiodic = la.iter().zip(&ap).map(|(l, a)| l + 0.5 * a.max(1e-12).ln()).collect();
    (periodic, aperiodic)
}

fn pulse_response(
    feats: &VocoderFeatures,
    spectral: &Spectral,
    position: f64,
    frame: usize,
    period: f64,
) -> (usize, Vec<f64>) {
    let (periodic, _) = split_log_amplitudes(feats, spectral, frame);
    let gain = 0.5 * period.ln();
    let log_amp: Vec<f64> = periodic.iter().map(|l| l + gain).collect();
    let mut h = spectral.minimum_phase(&log_amp);
    // A short windowed-sinc FIR supplies the sub-sample delay. A pure linear
    // phase would give the pulse circular 1/n tails that the buffer truncates.
    let whole = position.floor();
    let delay = spectral.forward_real(&fractional_delay(position - whole, spectral.n));
    for (v, d) in h.iter_mut().zip(&delay) {
        *v *= d;
    }
    let mut response = spectral.inverse_real(h);
    let first = whole as isize - FRACTIONAL_HALF_TAPS as isize;
    if first < 0 {
        response.drain(..(-first) as usize);
    }
    (first.max(0) as usize, response)
}

/// Blackman-windowed sinc delaying by `FRACTIONAL_HALF_TAPS + frac` samples,
/// normalized to unit DC gain and zero-padded to `n`.
fn fractional_delay(frac: f64, n: usize) -> Vec<f64> {
    let half = FRACTIONAL_HALF_TAPS as f64;
    let mut taps = vec![0.0; n];
    for (j, tap) in taps.iter_mut().enumerate().take(2 * FRACTIONAL_HALF_TAPS + 1) {
        let x = j as f64 - half - frac;
        if x.abs() >= half {
            continue;
        }
        let sinc = if x == 0.0 { 1.0 } else { (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x) };
        let phi = std::f64::consts::PI * x / half;
        *tap = sinc * (0.42 + 0.5 * phi.cos() + 0.08 * (2.0 * phi).cos());
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn noise_segment(
    feats: &VocoderFeatures,
    spectral: &Spectral,
    conv: &Spectral,
    noise: &[f64],
    frame: usize,
    hop: f64,
    out_len: usize,
) -> (usize, Vec<f64>) {
    let centre = frame as f64 * hop;
    let last = frame + 1 == feats.frames();
    let lo = (centre - hop).ceil().max(0.0) as usize;
    let hi = if last { out_len } else { ((centre + hop).floor() as usize + 1).min(out_len) };
    if lo >= hi {
        return (0, Vec::new());
    }
    let segment: Vec<f64> = (lo..hi)
        .map(|i| {
            let d = i as f64 - centre;
            let w = if last && d > 0.0 { 1.0 } else { (1.0 - d.abs() / hop).max(0.0) };
            w * noise[i]
        })
        .collect();
    let (_, aperiodic) = split_log_amplitudes(feats, spectral, frame);
    let g = spectral.minimum_phase(&aperiodic);
    let response = spectral.inverse_real(g);
    let a = conv.forward_real(&segment);
    let b = conv.forward_real(&response);
    let product = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let mut filtered = conv.inverse_real(product);
    filtered.truncate(segment.len() + response.len() - 1);
    (lo, filtered)
}
