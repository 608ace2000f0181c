//! Frame-wise melody evaluation: raw pitch accuracy, overall accuracy,
//! voicing recall and voicing false alarm (unweighted frame counts).

use serde::{Deserialize, Serialize};

use crate::contour::{cents, F0Contour};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE_CENTS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rpa: f64,
    pub oa: f64,
    pub vr: f64,
    pub vfa: f64,
    pub tolerance_cents: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Frame counts behind a [`MetricsReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameTally {
    pub ref_voiced: usize,
    pub ref_unvoiced: usize,
    pub voiced_detected: usize,
    pub false_alarms: usize,
    pub pitch_correct: usize,
    pub unvoiced_correct: usize,
}

impl FrameTally {
    pub fn report(&self, tolerance_cents: f64) -> MetricsReport {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        MetricsReport {
            rpa: ratio(self.pitch_correct, self.ref_voiced),
            oa: ratio(self.pitch_correct + self.unvoiced_correct, self.ref_voiced + self.ref_unvoiced),
            vr: ratio(self.voiced_detected, self.ref_voiced),
            vfa: ratio(self.false_alarms, self.ref_unvoiced),
            tolerance_cents,
        }
    }
}

pub fn tally(est: &F0Contour, reference: &F0Contour, tolerance_cents: f64) -> Result<FrameTally> {
    if !est.same_grid(reference) {
        return Err(Error::GridMismatch(format!(
            "estimate {} frames @ {} s, reference {} frames @ {} s",
            est.len(),
            est.hop_seconds(),
            reference.len(),
            reference.hop_seconds()
        )));
    }
    let mut t = FrameTally::default();
    for (&e, &r) in est.values().iter().zip(reference.values()) {
        let est_voiced = e > 0.0;
        if r > 0.0 {
            t.ref_voiced += 1;
            if est_voiced {
                t.voiced_detected += 1;
                if (cents(e) - cents(r)).abs() <= tolerance_cents {
                    t.pitch_correct += 1;
                }
            }
        } else {
            t.ref_unvoiced += 1;
            if est_voiced {
                t.false_alarms += 1;
            } else {
                t.unvoiced_correct += 1;
            }
        }
    }
    Ok(t)
}

/// Scores `est` against `reference`; both must share a grid.
pub fn evaluate_melody(est: &F0Contour, reference: &F0Contour, tolerance_cents: f64) -> Result<MetricsReport> {
    Ok(tally(est, reference, tolerance_cents)?.report(tolerance_cents))
}
