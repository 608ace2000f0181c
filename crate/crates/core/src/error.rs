use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("unsupported codec in {path}: {detail}")]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("{0} contains non-finite samples")]
    NonFiniteSample(PathBuf),
    #[error("{0} contains no audio")]
    EmptyAudio(PathBuf),
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("clip is empty")]
    EmptyClip,
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("no clips to mix")]
    NothingToMix,
    #[error("clip too short: {samples} samples, need at least {needed}")]
    ClipTooShort { samples: usize, needed: usize },
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("contour grids differ: {0}")]
    GridMismatch(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("invalid unison group: {0}")]
    InvalidGroup(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("frame count mismatch: contour has {contour} frames, clip needs {expected}")]
    FrameCountMismatch { contour: usize, expected: usize },
    #[error("contour csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
