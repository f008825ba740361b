//! Multibiometric score-level fusion and verification metrics.
//!
//! The engine takes per-trait feature vectors (face, periocular, iris, nose,
//! eyebrow) extracted from a single face image, scores every genuine and
//! impostor pair of a subject-disjoint protocol with cosine similarity, fuses
//! the per-trait scores with a weighted sum on the probability simplex, and
//! reports EER and FRR at fixed FAR operating points.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! bottom of this file fix the scalar for the common cases.

pub mod error;
pub mod features;
pub mod fusion;
pub mod geometry;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod pgm;
pub mod protocol;
pub mod scalar;
pub mod scorefile;
pub mod synth;

pub use error::{Error, Result};
pub use fusion::{Criterion, FusionWeights, SweepEntry, SweepResult};
pub use matching::{MatchScore, ScoreTable};
pub use metrics::{FrrAtFar, MetricsReport, MetricsSummary, RocCurve};
pub use model::{Dataset, FeatureRecord, IrisRecord, SampleKey, TraitFeatures, TraitKind};
pub use protocol::{EvalProtocol, Pair, Split, SplitAssignment, SplitSpec, SubjectRange};
pub use scalar::Scalar;

/// Feature records as stored on disk (32-bit floats).
pub type FeatureRecordF32 = model::FeatureRecord<f32>;
/// Iris records as stored on disk (32-bit floats).
pub type IrisRecordF32 = model::IrisRecord<f32>;
/// A dataset of 32-bit feature vectors, the on-disk precision.
pub type DatasetF32 = model::Dataset<f32>;
/// A dataset of 64-bit feature vectors.
pub type DatasetF64 = model::Dataset<f64>;
/// Double-precision grayscale image.
pub type GrayImageF64 = geometry::GrayImage<f64>;
/// Single-precision grayscale image.
pub type GrayImageF32 = geometry::GrayImage<f32>;
/// ROC curve over double-precision scores.
pub type RocCurveF64 = metrics::RocCurve<f64>;
/// Fusion weights in double precision.
pub type FusionWeightsF64 = fusion::FusionWeights<f64>;
