//! F0 contours on a uniform time grid, cents conversion and the
//! voicing-aware mean contour of a unison group.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference frequency for the cents scale.
pub const REFERENCE_HZ: f64 = 440.0;

const MAX_F0_HZ: f64 = 20_000.0;
const HOP_EPS: f64 = 1e-9;

pub fn hz_to_cents(hz: f64) -> Result<f64> {
    if !(hz > 0.0) || !hz.is_finite() {
        return Err(Error::NonPositiveFrequency(hz));
    }
    Ok(1200.0 * (hz / REFERENCE_HZ).log2())
}

pub fn cents_to_hz(cents: f64) -> f64 {
    REFERENCE_HZ * (cents / 1200.0).exp2()
}

/// Cents for a frequency already known to be positive.
pub(crate) fn cents(hz: f64) -> f64 {
    1200.0 * (hz / REFERENCE_HZ).log2()
}

/// Uniformly sampled F0 track; `0.0` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Contour {
    hop_seconds: f64,
    values: Vec<f64>,
}

impl F0Contour {
    pub fn new(hop_seconds: f64, values: Vec<f64>) -> Result<Self> {
        if !(hop_seconds > 0.0) || !hop_seconds.is_finite() {
            return Err(Error::InvalidContour(format!("hop must be positive, got {hop_seconds}")));
        }
        if let Some(bad) = values.iter().find(|&&v| !(v == 0.0 || (v > 0.0 && v < MAX_F0_HZ))) {
            return Err(Error::InvalidContour(format!("frequency {bad} outside (0, 20000) Hz")));
        }
        Ok(Self { hop_seconds, values })
    }

    /// A contour holding `hz` on every frame.
    pub fn constant(hop_seconds: f64, hz: f64, frames: usize) -> Result<Self> {
        Self::new(hop_seconds, vec![hz; frames])
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        frame as f64 * self.hop_seconds
    }

    pub fn is_voiced(&self, frame: usize) -> bool {
        self.values[frame] > 0.0
    }

    pub fn voiced_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn voicing_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v > 0.0).collect()
    }

    /// Per-frame cents, `None` where unvoiced.
    pub fn cents(&self) -> Vec<Option<f64>> {
        self.values.iter().map(|&v| (v > 0.0).then(|| cents(v))).collect()
    }

    pub fn same_grid(&self, other: &F0Contour) -> bool {
        self.values.len() == other.values.len()
            && (self.hop_seconds - other.hop_seconds).abs() <= HOP_EPS * self.hop_seconds.max(1.0)
    }

    /// Truncates or zero-pads (unvoiced) to exactly `frames` frames.
    pub fn with_len(mut self, frames: usize) -> Self {
        self.values.resize(frames, 0.0);
        self
    }

    /// Shifts every voiced frame by `offset` cents.
    pub fn transposed(&self, offset: f64) -> Self {
        let ratio = (offset / 1200.0).exp2();
        Self {
            hop_seconds: self.hop_seconds,
            values: self.values.iter().map(|&v| if v > 0.0 { v * ratio } else { 0.0 }).collect(),
        }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Parses `time_seconds,frequency_hz` rows. A non-numeric first line is
    /// taken as a header. The hop is the median spacing of the time column;
    /// rows are placed on the frame nearest their timestamp.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split([',', '\t', ' ']).filter(|f| !f.is_empty());
            let (Some(t), Some(f)) = (fields.next(), fields.next()) else {
                return Err(Error::Csv(format!("line {}: expected two columns", lineno + 1)));
            };
            match (t.trim().parse::<f64>(), f.trim().parse::<f64>()) {
                (Ok(t), Ok(f)) => rows.push((t, f.max(0.0))),
                _ if rows.is_empty() && lineno == 0 => continue,
                _ => return Err(Error::Csv(format!("line {}: not numeric", lineno + 1))),
            }
        }
        if rows.len() < 2 {
            return Err(Error::Csv("need at least two rows to infer the hop".into()));
        }
        let mut gaps: Vec<f64> = rows.windows(2).map(|w| w[1].0 - w[0].0).collect();
        gaps.sort_by(f64::total_cmp);
        let hop = gaps[gaps.len() / 2];
        if !(hop > 0.0) {
            return Err(Error::Csv("time column must increase".into()));
        }
        let last = (rows[rows.len() - 1].0 / hop).round().max(0.0) as usize;
        let mut values = vec![0.0; last + 1];
        for &(t, f) in &rows {
            let idx = (t / hop).round();
            if idx >= 0.0 {
                values[idx as usize] = f;
            }
        }
        Self::new(hop, values)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "time_seconds,frequency_hz")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.6},{:.6}", self.time_of(i), v)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Moves a contour onto a grid with `target_hop`, keeping the same duration.
///
/// Voicing comes from the nearest source frame. Voiced frames between two
/// voiced source frames are interpolated linearly in cents.
pub fn resample_contour(src: &F0Contour, target_hop: f64) -> Result<F0Contour> {
    if !(target_hop > 0.0) {
        return Err(Error::InvalidContour(format!("hop must be positive, got {target_hop}")));
    }
    let duration = src.len() as f64 * src.hop_seconds;
    let frames = (duration / target_hop - 1e-9).ceil().max(0.0) as usize;
    Ok(resample_to_frames(src, target_hop, frames))
}

/// As [`resample_contour`] but with an explicit output frame count.
pub fn resample_to_frames(src: &F0Contour, target_hop: f64, frames: usize) -> F0Contour {
    if src.is_empty() {
        return F0Contour { hop_seconds: target_hop, values: vec![0.0; frames] };
    }
    let last = src.len() - 1;
    let values = (0..frames)
        .map(|j| {
            let pos = j as f64 * target_hop / src.hop_seconds;
            let nearest = (pos.round() as usize).min(last);
            if !src.is_voiced(nearest) {
                return 0.0;
            }
            let lo = (pos.floor() as usize).min(last);
            let hi = (pos.ceil() as usize).min(last);
            let (a, b) = (src.values[lo], src.values[hi]);
            if lo == hi || a <= 0.0 || b <= 0.0 {
                return src.values[nearest];
            }
            let frac = pos - lo as f64;
            cents_to_hz((1.0 - frac) * cents(a) + frac * cents(b))
        })
        .collect();
    F0Contour { hop_seconds: target_hop, values }
}

/// Choir section a unison group belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Section {
    #[serde(rename = "S", alias = "soprano", alias = "Soprano")]
    Soprano,
    #[serde(rename = "A", alias = "alto", alias = "Alto")]
    Alto,
    #[serde(rename = "T", alias = "tenor", alias = "Tenor")]
    Tenor,
    #[serde(rename = "B", alias = "bass", alias = "Bass")]
    Bass,
}

impl Section {
    pub const ALL: [Section; 4] = [Section::Soprano, Section::Alto, Section::Tenor, Section::Bass];

    pub fn label(self) -> &'static str {
        match self {
            Section::Soprano => "S",
            Section::Alto => "A",
            Section::Tenor => "T",
            Section::Bass => "B",
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "soprano" => Ok(Section::Soprano),
            "a" | "alto" => Ok(Section::Alto),
            "t" | "tenor" => Ok(Section::Tenor),
            "b" | "bass" => Ok(Section::Bass),
            other => Err(Error::InvalidGroup(format!("unknown section {other:?}"))),
        }
    }
}

/// The aligned contours of every singer in one section.
#[derive(Debug, Clone, PartialEq)]
pub struct UnisonGroup {
    section: Section,
    contours: Vec<F0Contour>,
}

impl UnisonGroup {
    pub fn new(section: Section, contours: Vec<F0Contour>) -> Result<Self> {
        if contours.len() < 2 {
            return Err(Error::InvalidGroup(format!("need at least 2 singers, got {}", contours.len())));
        }
        if contours.iter().any(|c| !c.same_grid(&contours[0])) {
            return Err(Error::InvalidGroup("contours must share length and hop".into()));
        }
        Ok(Self { section, contours })
    }

    /// Resamples every contour to `hop` and pads to the longest before grouping.
    pub fn aligned(section: Section, contours: &[F0Contour], hop: f64) -> Result<Self> {
        let resampled = contours
            .iter()
            .map(|c| resample_contour(c, hop))
            .collect::<Result<Vec<_>>>()?;
        let frames = resampled.iter().map(F0Contour::len).max().unwrap_or(0);
        Self::new(section, resampled.into_iter().map(|c| c.with_len(frames)).collect())
    }

    pub fn section(&self) -> Section {
        self.section
    }

    pub fn contours(&self) -> &[F0Contour] {
        &self.contours
    }

    pub fn singers(&self) -> usize {
        self.contours.len()
    }

    pub fn frames(&self) -> usize {
        self.contours[0].len()
    }

    pub fn hop_seconds(&self) -> f64 {
        self.contours[0].hop_seconds
    }

    /// F0 values of every singer at `frame`.
    pub fn frame(&self, frame: usize) -> impl Iterator<Item = f64> + '_ {
        self.contours.iter().map(move |c| c.values[frame])
    }
}

/// Frame-wise mean F0 in Hz over the voiced singers; unvoiced only when
/// every singer is unvoiced.
pub fn mean_contour(group: &UnisonGroup) -> F0Contour {
    let values = (0..group.frames())
        .map(|k| {
            let (sum, count) = group
                .frame(k)
                .filter(|&v| v > 0.0)
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    F0Contour { hop_seconds: group.hop_seconds(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cents_reference_points() {
        assert_eq!(hz_to_cents(440.0).unwrap(), 0.0);
        assert!((hz_to_cents(880.0).unwrap() - 1200.0).abs() < 1e-12);
        // 1200*log2(261.626/440) evaluated with 50-digit arithmetic (mpmath).
        assert!((hz_to_cents(261.626).unwrap() - (-899.997_123_500_607_9)).abs() < 1e-9);
        assert_eq!(cents_to_hz(0.0), 440.0);
        // 440*2^(1/12) to 20 digits.
        assert!((cents_to_hz(100.0) - 466.163_761_518_089_9).abs() < 1e-9);
    }

    #[test]
    fn non_positive_frequencies_are_rejected() {
        for f in [0.0, -1.0, f64::NAN] {
            assert!(matches!(hz_to_cents(f), Err(Error::NonPositiveFrequency(_))));
        }
    }

    #[test]
    fn contour_validation() {
        assert!(F0Contour::new(0.0, vec![]).is_err());
        assert!(F0Contour::new(0.01, vec![-3.0]).is_err());
        assert!(F0Contour::new(0.01, vec![25_000.0]).is_err());
        assert!(F0Contour::new(0.01, vec![0.0, 100.0]).is_ok());
    }

    #[test]
    fn resample_same_hop_is_identity() {
        let c = F0Contour::new(0.01, vec![0.0, 220.0, 230.0, 0.0, 250.0]).unwrap();
        assert_eq!(resample_contour(&c, 0.01).unwrap(), c);
    }

    #[test]
    fn resample_constant_contour_stays_constant() {
        let c = F0Contour::constant(0.01, 440.0, 100).unwrap();
        for hop in [0.003, 0.005, 0.0116, 0.02, 0.037] {
            let r = resample_contour(&c, hop).unwrap();
            assert!(r.values().iter().all(|&v| (v - 440.0).abs() < 1e-9), "hop {hop}");
        }
    }

    #[test]
    fn resample_glide_midpoints_are_geometric_means() {
        // 440 -> 880 Hz, linear in log-frequency, 10 ms hop over 1 s.
        let src: Vec<f64> = (0..101).map(|k| 440.0 * (k as f64 / 100.0).exp2()).collect();
        let c = F0Contour::new(0.01, src.clone()).unwrap();
        let r = resample_contour(&c, 0.005).unwrap();
        for k in 0..100 {
            let mid = r.values()[2 * k + 1];
            let geo = (src[k] * src[k + 1]).sqrt();
            assert!((cents(mid) - cents(geo)).abs() < 1.0);
        }
    }

    #[test]
    fn mean_contour_footnote_rule() {
        let group = UnisonGroup::new(
            Section::Soprano,
            vec![
                F0Contour::new(0.01, vec![440.0, 440.0, 0.0, 430.0]).unwrap(),
                F0Contour::new(0.01, vec![440.0, 0.0, 0.0, 450.0]).unwrap(),
                F0Contour::new(0.01, vec![440.0, 0.0, 0.0, 0.0]).unwrap(),
                F0Contour::new(0.01, vec![440.0, 0.0, 0.0, 440.0]).unwrap(),
            ],
        )
        .unwrap();
        let m = mean_contour(&group);
        assert_eq!(m.values()[0], 440.0);
        assert_eq!(m.values()[1], 440.0);
        assert_eq!(m.values()[2], 0.0);
        assert!((m.values()[3] - 440.0).abs() < 1e-12);
    }

    #[test]
    fn group_validation() {
        let a = F0Contour::constant(0.01, 200.0, 10).unwrap();
        assert!(UnisonGroup::new(Section::Alto, vec![a.clone()]).is_err());
        let b = F0Contour::constant(0.01, 200.0, 11).unwrap();
        assert!(UnisonGroup::new(Section::Alto, vec![a.clone(), b]).is_err());
        let c = F0Contour::constant(0.02, 200.0, 10).unwrap();
        assert!(UnisonGroup::new(Section::Alto, vec![a, c]).is_err());
    }

    #[test]
    fn csv_round_trip_with_and_without_header() {
        let c = F0Contour::new(0.01, vec![0.0, 220.5, 221.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = F0Contour::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 4);
        assert!((back.hop_seconds() - 0.01).abs() < 1e-9);
        assert_eq!(back.values(), c.values());
        let headerless = "0.0,100\n0.01,0\n0.02,110\n";
        let h = F0Contour::from_csv_reader(headerless.as_bytes()).unwrap();
        assert_eq!(h.values(), &[100.0, 0.0, 110.0]);
        assert!(F0Contour::from_csv_reader("a,b\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn section_parsing() {
        assert_eq!("soprano".parse::<Section>().unwrap(), Section::Soprano);
        assert_eq!("B".parse::<Section>().unwrap(), Section::Bass);
        assert!("mezzo".parse::<Section>().is_err());
    }

    proptest! {
        #[test]
        fn cents_round_trip(c in -6000.0f64..6000.0) {
            let back = hz_to_cents(cents_to_hz(c)).unwrap();
            prop_assert!((back - c).abs() < 1e-9);
        }

        #[test]
        fn octave_doubles(f in 1.0f64..5000.0) {
            let c = hz_to_cents(f).unwrap();
            let up = cents_to_hz(c + 1200.0);
            prop_assert!((up / (2.0 * f) - 1.0).abs() < 1e-12);
            prop_assert!(hz_to_cents(f * 1.0001).unwrap() > c);
        }

        #[test]
        fn mean_contour_is_permutation_invariant_and_bounded(
            frames in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 80.0f64..1000.0], 4), 1..40),
            rot in 0usize..4,
        ) {
            let singers: Vec<F0Contour> = (0..4)
                .map(|i| F0Contour::new(0.01, frames.iter().map(|f| f[i]).collect()).unwrap())
                .collect();
            let mut rotated = singers.clone();
            rotated.rotate_left(rot);
            let m = mean_contour(&UnisonGroup::new(Section::Tenor, singers).unwrap());
            let r = mean_contour(&UnisonGroup::new(Section::Tenor, rotated).unwrap());
            for (k, f) in frames.iter().enumerate() {
                let voiced: Vec<f64> = f.iter().copied().filter(|&v| v > 0.0).collect();
                prop_assert!((m.values()[k] - r.values()[k]).abs() <= 1e-9 * m.values()[k].max(1.0));
                if voiced.is_empty() {
                    prop_assert_eq!(m.values()[k], 0.0);
                } else {
                    let lo = voiced.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = voiced.iter().cloned().fold(0.0, f64::max);
                    prop_assert!(m.values()[k] >= lo - 1e-9 && m.values()[k] <= hi + 1e-9);
                }
            }
        }

        #[test]
        fn resample_never_invents_voicing(
            vals in prop::collection::vec(prop_oneof![Just(0.0), 80.0f64..1000.0], 2..60),
            hop in 0.002f64..0.03,
        ) {
            let c = F0Contour::new(0.01, vals.clone()).unwrap();
            let r = resample_contour(&c, hop).unwrap();
            for (j, &v) in r.values().iter().enumerate() {
                let nearest = ((j as f64 * hop / 0.01).round() as usize).min(vals.len() - 1);
                prop_assert_eq!(v > 0.0, vals[nearest] > 0.0);
            }
        }
    }
}
