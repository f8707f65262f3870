use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed Radiance header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },

    #[error("unsupported resolution orientation at byte {offset}: {line:?} (only -Y <H> +X <W>)")]
    UnsupportedOrientation { offset: usize, line: String },

    #[error("truncated scanline {row} at byte {offset}")]
    TruncatedScanline { row: usize, offset: usize },

    #[error("RLE run overrun in scanline {row} at byte {offset}")]
    RunOverrun { row: usize, offset: usize },

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("unsupported channel count: {0}")]
    UnsupportedChannels(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("cannot downsample {from:?} to larger size {to:?}")]
    Upsample {
        from: (usize, usize),
        to: (usize, usize),
    },

    #[error("image has no positive luminance")]
    NoPositiveLuminance,

    #[error("no saturation ceiling: dead time is zero")]
    NoCeiling,

    #[error("image {size:?} is smaller than the {window}x{window} window")]
    WindowTooLarge { size: (usize, usize), window: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("png: {0}")]
    Png(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
