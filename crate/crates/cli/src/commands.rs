use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use unison_core::analysis::{
    compare_unison_f0, inter_singer_deviation, pool_deviations, pool_transitions, transition_regions, DeviationStats,
    TransitionStats, UnisonComparison,
};
use unison_core::synth::{solo_to_unison_with, unison_to_solo_with, CloneParams, Preset, TimbreVariation};
use unison_core::{load_wav, mix_and_normalize, par, save_wav, track_f0, F0Contour, MetricsReport, Section, UnisonGroup};

use crate::manifest::{self, SectionManifest};
use crate::Settings;

/// Per-entry failures are printed and counted; the caller turns a nonzero
/// count into a nonzero exit status.
pub struct Outcome {
    pub failures: usize,
}

fn report_failure(what: &str, err: &anyhow::Error) {
    eprintln!("error: {what}: {err:#}");
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create_csv(path: &Path, header: &str) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}")?;
    Ok(out)
}

/// Annotations when the manifest has them, tracker output otherwise.
fn load_contours(entry: &SectionManifest, settings: &Settings) -> Result<Vec<F0Contour>> {
    Ok(match &entry.annotations {
        Some(files) => files
            .iter()
            .map(|p| F0Contour::read_csv(p).with_context(|| format!("reading {}", p.display())))
            .collect::<Result<_>>()?,
        None => entry
            .stems
            .iter()
            .map(|p| {
                let clip = load_wav(p).with_context(|| format!("loading {}", p.display()))?;
                track_f0(&clip, &settings.tracker).with_context(|| format!("tracking {}", p.display()))
            })
            .collect::<Result<_>>()?,
    })
}

fn group_of(entry: &SectionManifest, contours: &[F0Contour], settings: &Settings) -> Result<UnisonGroup> {
    let hop = settings.hop.unwrap_or_else(|| contours[0].hop_seconds());
    Ok(UnisonGroup::aligned(entry.section, contours, hop)?)
}

struct SongAnalysis {
    song: String,
    deviation: Option<DeviationStats>,
    transitions: TransitionStats,
}

fn deviation_json(d: &DeviationStats) -> serde_json::Value {
    if d.is_empty() {
        json!({ "mean": null, "std": null, "frames": 0, "note": "no frame with every singer voiced" })
    } else {
        json!({ "mean": d.mean_cents, "std": d.std_cents, "frames": d.per_frame_deviations.len() })
    }
}

fn transitions_json(t: &TransitionStats) -> serde_json::Value {
    json!({ "mean_s": t.mean_seconds, "std_s": t.std_seconds, "count": t.count() })
}

pub fn analyze(manifests: &[PathBuf], settings: &Settings) -> Result<Outcome> {
    let entries = manifest::load(manifests)?;
    let results = par::map_slice(&entries, |entry| {
        let contours = load_contours(entry, settings)?;
        let song = entry.song_id().to_string();
        if contours.len() < 2 {
            // One voice has no mixed voicing and no pairwise deviation.
            let transitions = TransitionStats::from_lengths(entry.section, Vec::new(), Vec::new());
            return Ok(SongAnalysis { song, deviation: None, transitions });
        }
        let group = group_of(entry, &contours, settings)?;
        Ok(SongAnalysis { song, deviation: Some(inter_singer_deviation(&group)), transitions: transition_regions(&group) })
    });

    let mut failures = 0;
    let mut by_section: BTreeMap<Section, Vec<SongAnalysis>> = BTreeMap::new();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(a) => by_section.entry(entry.section).or_default().push(a),
            Err(e) => {
                failures += 1;
                report_failure(&entry.key(), &e);
            }
        }
    }

    for (section, songs) in &by_section {
        if let Err(e) = write_section_analysis(*section, songs, settings) {
            failures += 1;
            report_failure(&format!("section {section}"), &e);
        }
    }
    Ok(Outcome { failures })
}

fn write_section_analysis(section: Section, songs: &[SongAnalysis], settings: &Settings) -> Result<()> {
    let label = section.label();
    let deviations: Vec<DeviationStats> = songs.iter().filter_map(|s| s.deviation.clone()).collect();
    let transitions: Vec<TransitionStats> = songs.iter().map(|s| s.transitions.clone()).collect();
    let pooled_transitions = pool_transitions(section, &transitions);
    let delta_f0 = if deviations.is_empty() {
        json!("n<2: skipped")
    } else {
        deviation_json(&pool_deviations(section, &deviations))
    };
    let per_song: Vec<serde_json::Value> = songs
        .iter()
        .map(|s| {
            json!({
                "song": s.song,
                "delta_f0_cents": s.deviation.as_ref().map_or(json!("n<2: skipped"), deviation_json),
                "transitions": transitions_json(&s.transitions),
            })
        })
        .collect();
    let report = json!({
        "section": label,
        "delta_f0_cents": delta_f0,
        "transitions": transitions_json(&pooled_transitions),
        "songs": per_song,
        "config": settings.describe(),
    });
    write_json(&settings.out_dir.join(format!("analysis_{label}.json")), &report)?;

    let mut csv = create_csv(&settings.out_dir.join(format!("deviations_{label}.csv")), "song,frame,deviation_cents")?;
    for s in songs {
        if let Some(d) = &s.deviation {
            for (frame, value) in d.frames.iter().zip(&d.per_frame_deviations) {
                writeln!(csv, "{},{frame},{value:.6}", s.song)?;
            }
        }
    }
    csv.flush()?;

    let mut csv = create_csv(&settings.out_dir.join(format!("transitions_{label}.csv")), "song,start_frame,length_seconds")?;
    for s in songs {
        for (start, len) in s.transitions.starts.iter().zip(&s.transitions.region_lengths) {
            writeln!(csv, "{},{start},{len:.6}", s.song)?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn compare_entry(entry: &SectionManifest, settings: &Settings) -> Result<UnisonComparison> {
    if entry.annotations.is_none() {
        bail!("compare needs F0 annotations for every stem");
    }
    let group = group_of(entry, &load_contours(entry, settings)?, settings)?;
    let clips = entry
        .stems
        .iter()
        .map(|p| load_wav(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let mix = mix_and_normalize(&clips)?;
    Ok(compare_unison_f0(&group, &mix, &settings.tracker, settings.tolerance_cents)?)
}

fn write_comparison(entry: &SectionManifest, cmp: &UnisonComparison, settings: &Settings) -> Result<()> {
    if let Some(est) = &cmp.estimate {
        est.save_csv(settings.out_dir.join(format!("estimate_{}.csv", entry.key())))?;
    }
    let singers: Vec<serde_json::Value> = entry
        .stems
        .iter()
        .zip(&cmp.per_singer)
        .map(|(stem, m)| json!({ "stem": stem, "metrics": m }))
        .collect();
    let report = json!({
        "song": entry.song_id(),
        "section": entry.section.label(),
        "per_singer": singers,
        "singer_average": cmp.singer_average(),
        "mean_contour": cmp.mean,
        "config": settings.describe(),
    });
    write_json(&settings.out_dir.join(format!("compare_{}.json", entry.key())), &report)
}

pub fn compare(manifests: &[PathBuf], settings: &Settings) -> Result<Outcome> {
    let entries = manifest::load(manifests)?;
    let results = par::map_slice(&entries, |entry| compare_entry(entry, settings));

    let mut failures = 0;
    let mut csv = create_csv(&settings.out_dir.join("compare.csv"), "song,section,target,rpa,oa,vr,vfa")?;
    for (entry, result) in entries.iter().zip(results) {
        let written = result.and_then(|cmp| {
            write_comparison(entry, &cmp, settings)?;
            let mut rows: Vec<(String, MetricsReport)> =
                cmp.per_singer.iter().enumerate().map(|(i, m)| (format!("singer_{}", i + 1), *m)).collect();
            rows.push(("singer_average".into(), cmp.singer_average()));
            rows.push(("mean_contour".into(), cmp.mean));
            for (target, m) in rows {
                writeln!(csv, "{},{},{target},{:.6},{:.6},{:.6},{:.6}", entry.song_id(), entry.section.label(), m.rpa, m.oa, m.vr, m.vfa)?;
            }
            Ok(())
        });
        if let Err(e) = written {
            failures += 1;
            report_failure(&entry.key(), &e);
        }
    }
    csv.flush()?;
    Ok(Outcome { failures })
}

/// Explicit STU flags; each overrides the preset's value when given.
#[derive(Debug, Default, Clone)]
pub struct StuOverrides {
    pub preset: Option<Preset>,
    pub std_cents: Option<f64>,
    pub ts_seconds: Option<f64>,
    pub ns: Option<usize>,
    pub seed: u64,
    pub timbre: Option<bool>,
    pub max_warp: Option<f64>,
}

impl StuOverrides {
    pub fn resolve(&self) -> CloneParams {
        let mut p = match self.preset {
            Some(preset) => preset.params(self.seed),
            None => CloneParams { seed: self.seed, ..CloneParams::default() },
        };
        if let Some(v) = self.std_cents {
            p.std_cents = v;
        }
        if let Some(v) = self.ts_seconds {
            p.ts_seconds = v;
        }
        if let Some(v) = self.ns {
            p.ns = v;
        }
        if let Some(on) = self.timbre {
            p.timbre = TimbreVariation { enabled: on, ..p.timbre };
        }
        if let Some(w) = self.max_warp {
            p.timbre.max_warp = w;
        }
        p
    }
}

fn default_output(input: &Path, suffix: &str, settings: &Settings) -> Result<PathBuf> {
    let stem = input.file_stem().ok_or_else(|| anyhow!("{} has no file name", input.display()))?;
    Ok(settings.out_dir.join(format!("{}_{suffix}.wav", stem.to_string_lossy())))
}

pub fn stu(input: &Path, output: Option<&Path>, flags: &StuOverrides, settings: &Settings) -> Result<Outcome> {
    let params = flags.resolve();
    params.validate()?;
    let label = flags.preset.map_or("custom", |p| p.name());
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => default_output(input, label, settings)?,
    };
    let clip = load_wav(input).with_context(|| format!("loading {}", input.display()))?;
    let unison = solo_to_unison_with(&clip, &params, &settings.tracker)?;
    save_wav(&unison, &output).with_context(|| format!("writing {}", output.display()))?;
    let sidecar = json!({
        "command": "stu",
        "input": input,
        "output": output,
        "preset": flags.preset.map(|p| p.name()),
        "params": params,
        "sample_rate": clip.sample_rate(),
        "input_seconds": clip.duration_seconds(),
        "output_seconds": unison.duration_seconds(),
        "config": settings.describe(),
    });
    write_json(&output.with_extension("json"), &sidecar)?;
    println!("{}", output.display());
    Ok(Outcome { failures: 0 })
}

pub fn uts(input: &Path, output: Option<&Path>, settings: &Settings) -> Result<Outcome> {
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => default_output(input, "uts", settings)?,
    };
    let clip = load_wav(input).with_context(|| format!("loading {}", input.display()))?;
    let prototype = unison_to_solo_with(&clip, &settings.tracker)?;
    save_wav(&prototype.audio, &output).with_context(|| format!("writing {}", output.display()))?;
    let f0_path = output.with_extension("f0.csv");
    prototype.f0.save_csv(&f0_path)?;
    let sidecar = json!({
        "command": "uts",
        "input": input,
        "output": output,
        "f0": f0_path,
        "sample_rate": clip.sample_rate(),
        "voiced_frames": prototype.f0.voiced_count(),
        "config": settings.describe(),
    });
    write_json(&output.with_extension("json"), &sidecar)?;
    println!("{}", output.display());
    Ok(Outcome { failures: 0 })
}
