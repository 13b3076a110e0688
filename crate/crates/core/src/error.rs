use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Which integration bound of a shared-FPR range could not be located on a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
    Both,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower"),
            Bound::Upper => f.write_str("upper"),
            Bound::Both => f.write_str("lower and upper"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample `{id}`: score map and mask dimensions differ")]
    DimensionMismatch { id: String },

    #[error("sample `{id}`: mask contains values other than 0 and 1")]
    NonBinaryMask { id: String },

    #[error("sample `{id}`: score map contains NaN or infinite values")]
    NonFiniteScore { id: String },

    #[error("sample `{id}`: raster must be at least 1x1 with height*width values")]
    InvalidRaster { id: String },

    #[error("duplicate sample id `{id}`")]
    DuplicateId { id: String },

    #[error("dataset has no samples")]
    EmptyDataset,

    #[error("all anomaly scores are equal; no threshold grid can be built")]
    DegenerateScores,

    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),

    #[error("no normal-annotated pixels{}", fmt_id(.id))]
    NoNegativePixels { id: Option<String> },

    #[error("no anomalous pixels in the dataset")]
    NoPositivePixels,

    #[error("sample `{id}`: mask has no anomalous region")]
    EmptyRegionSet { id: String },

    #[error("sample `{id}` is not a normal image")]
    NotANormalImage { id: String },

    #[error("sample `{id}` is not an anomalous image")]
    NotAnAnomalousImage { id: String },

    #[error("dataset has no normal images")]
    NoNormalImages,

    #[error("dataset has no anomalous images")]
    NoAnomalousImages,

    #[error("no threshold reaches a set FPR at or below {bound}")]
    BoundNotReachable { bound: f64 },

    #[error("shared FPR curve does not bracket the {which} integration bound")]
    BoundNotBracketed { which: Bound },

    #[error("invalid FPR bounds: need 0 < lower < upper <= 1, got [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("no scores given")]
    EmptyScores,

    #[error("all paired differences are zero; the signed-rank test is undefined")]
    AllDifferencesZero,

    #[error("model `{model}` has no score for image `{image}`")]
    IncompleteTable { model: String, image: String },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("sample `{id}`: not enough background pixels for the requested noise")]
    InsufficientBackground { id: String },

    #[error("invalid noise profile: {0}")]
    InvalidProfile(String),

    #[error("model results share no image ids")]
    IncompatibleImageSets,

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("{}: mask is not an 8-bit single-channel image", .path.display())]
    NonGrayscaleMask { path: PathBuf },

    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_id(id: &Option<String>) -> String {
    match id {
        Some(id) => format!(" in sample `{id}`"),
        None => String::new(),
    }
}

impl Error {
    /// Stable, machine-parsable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonBinaryMask { .. } => "NonBinaryMask",
            Error::NonFiniteScore { .. } => "NonFiniteScore",
            Error::InvalidRaster { .. } => "InvalidRaster",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::EmptyDataset => "EmptyDataset",
            Error::DegenerateScores => "DegenerateScores",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::NoNegativePixels { .. } => "NoNegativePixels",
            Error::NoPositivePixels => "NoPositivePixels",
            Error::EmptyRegionSet { .. } => "EmptyRegionSet",
            Error::NotANormalImage { .. } => "NotANormalImage",
            Error::NotAnAnomalousImage { .. } => "NotAnAnomalousImage",
            Error::NoNormalImages => "NoNormalImages",
            Error::NoAnomalousImages => "NoAnomalousImages",
            Error::BoundNotReachable { .. } => "BoundNotReachable",
            Error::BoundNotBracketed { .. } => "BoundNotBracketed",
            Error::InvalidBounds { .. } => "InvalidBounds",
            Error::EmptyScores => "EmptyScores",
            Error::AllDifferencesZero => "AllDifferencesZero",
            Error::IncompleteTable { .. } => "IncompleteTable",
            Error::UnknownModel(_) => "UnknownModel",
            Error::InsufficientBackground { .. } => "InsufficientBackground",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::IncompatibleImageSets => "IncompatibleImageSets",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::CorruptHeader(_) => "CorruptHeader",
            Error::NonGrayscaleMask { .. } => "NonGrayscaleMask",
            Error::SchemaViolation { .. } => "SchemaViolation",
            Error::Io { .. } => "Io",
        }
    }

    /// The sample id the error refers to, when there is one.
    pub fn sample_id(&self) -> Option<&str> {
        match self {
            Error::DimensionMismatch { id }
            | Error::NonBinaryMask { id }
            | Error::NonFiniteScore { id }
            | Error::InvalidRaster { id }
            | Error::DuplicateId { id }
            | Error::EmptyRegionSet { id }
            | Error::NotANormalImage { id }
            | Error::NotAnAnomalousImage { id }
            | Error::InsufficientBackground { id } => Some(id),
            Error::NoNegativePixels { id } => id.as_deref(),
            Error::IncompleteTable { image, .. } => Some(image),
            _ => None,
        }
    }

    /// True when the inputs were readable but a metric is undefined on them.
    pub fn is_metric_undefined(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::DegenerateScores
                | Error::InvalidGrid(_)
                | Error::NoNegativePixels { .. }
                | Error::NoPositivePixels
                | Error::EmptyRegionSet { .. }
                | Error::NoNormalImages
                | Error::NoAnomalousImages
                | Error::BoundNotReachable { .. }
                | Error::BoundNotBracketed { .. }
                | Error::EmptyScores
                | Error::AllDifferencesZero
                | Error::IncompatibleImageSets
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
