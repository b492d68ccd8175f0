use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation and bound pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// Base station and receiver positions coincide; no ray direction exists.
    #[error("degenerate geometry: base station and receiver positions coincide")]
    DegenerateGeometry,

    /// The ray arrives along the local ±Z axis, where the azimuth is
    /// undefined and its gradient blows up. `bs_index` is set when the
    /// failure is attributed to a specific base station.
    #[error("azimuth gradient singular: ray aligned with the local z axis{}",
            .bs_index.map(|i| format!(" (base station {i})")).unwrap_or_default())]
    AzimuthGradientSingular { bs_index: Option<usize> },

    /// A cosine argument exceeded [-1, 1] by more than the clamping
    /// tolerance, indicating corrupted inputs rather than roundoff.
    #[error("arccos argument {0} outside [-1, 1] beyond tolerance")]
    AcosOutOfRange(f64),

    /// A matrix fails the SO(3) invariants.
    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    /// Requested Fisher information target is not positive.
    #[error("non-positive information target {0}")]
    NonPositiveInformation(f64),

    /// The information target needs a concentration beyond the bracket cap.
    #[error("concentration overflow: information target {0} needs kappa beyond 1e12")]
    ConcentrationOverflow(f64),

    /// Paired inputs have inconsistent lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A concentration vector entry is negative or non-finite, or the
    /// vector length is odd.
    #[error("invalid concentration vector: {0}")]
    InvalidConcentration(String),

    /// A retraction was asked to map a matrix that is not in the tangent
    /// space at the base point.
    #[error("not in tangent space: symmetric residual {residual:.3e}")]
    NotInTangentSpace { residual: f64 },

    /// The 2x2 waveform Fisher information of one link cannot be inverted,
    /// so no finite concentration calibrates that link.
    #[error("singular waveform FIM for base station {bs_index} at el={el:.6} az={az:.6}")]
    SingularWaveformFim { bs_index: usize, el: f64, az: f64 },

    /// Fewer than two base stations were supplied to the LS construction.
    #[error("underdetermined: at least 2 base stations should be used")]
    Underdetermined,

    /// The selected base stations are collinear with the receiver.
    #[error("degenerate subset: selected base stations are collinear with the receiver")]
    DegenerateSubset,

    /// The alignment matrix U Qᵀ has rank < 2; the rotation is not
    /// determined by the data.
    #[error("orientation unobservable: alignment matrix has rank < 2")]
    OrientationUnobservable,

    /// A scenario or parameter failed validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// File I/O failure, carrying the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A results or scenario file does not parse.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}
