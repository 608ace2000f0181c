//! Analysis and resynthesis of unison singing.
//!
//! * [`audio`]: WAV I/O and the mix/normalize step that builds unison mixtures.
//! * [`pitch`]: the F0 tracker used on solo stems and mixtures alike.
//! * [`contour`]: F0 contours, cents, grid resampling and the mean contour.
//! * [`metrics`]: RPA / OA / VR / VFA melody-evaluation scores.
//! * [`analysis`]: inter-singer pitch deviation and transition-region timing.
//! * [`signals`]: band-limited synthetic voices with known F0 for tests and demos.
//! * [`vocoder`]: F0 + warped cepstrum + band aperiodicity analysis/synthesis.
//! * [`synth`]: solo-to-unison clone generation and unison-to-solo prototypes.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod audio;
pub mod contour;
pub mod error;
pub mod metrics;
pub mod par;
pub mod pitch;
pub mod signals;
pub mod synth;
pub mod vocoder;

pub use audio::{load_wav, mix_and_normalize, save_wav, AudioClip};
pub use contour::{cents_to_hz, hz_to_cents, mean_contour, resample_contour, F0Contour, Section, UnisonGroup};
pub use error::{Error, Result};
pub use metrics::{evaluate_melody, MetricsReport};
pub use pitch::{track_f0, TrackerConfig};
pub use synth::{solo_to_unison, unison_to_solo, CloneParams, Preset};
pub use vocoder::{analyze, synthesize, VocoderFeatures};
