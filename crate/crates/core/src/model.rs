//! Domain types: traits, sample keys, feature records and the dataset container.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// The five biometric traits cut out of one face image.
///
/// The declaration order is the canonical order used for weight vectors,
/// file columns and report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraitKind {
    Face,
    Periocular,
    Iris,
    Nose,
    Eyebrow,
}

impl TraitKind {
    pub const COUNT: usize = 5;

    pub const ALL: [TraitKind; 5] = [
        TraitKind::Face,
        TraitKind::Periocular,
        TraitKind::Iris,
        TraitKind::Nose,
        TraitKind::Eyebrow,
    ];

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TraitKind::Face => "face",
            TraitKind::Periocular => "periocular",
            TraitKind::Iris => "iris",
            TraitKind::Nose => "nose",
            TraitKind::Eyebrow => "eyebrow",
        }
    }

    /// Capitalized label used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            TraitKind::Face => "Face",
            TraitKind::Periocular => "Periocular",
            TraitKind::Iris => "Iris",
            TraitKind::Nose => "Nose",
            TraitKind::Eyebrow => "Eyebrow",
        }
    }

    /// Iris templates carry four subimage vectors instead of one.
    pub fn is_iris(self) -> bool {
        self == TraitKind::Iris
    }
}

impl fmt::Display for TraitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TraitKind::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown trait `{s}`")))
    }
}

/// Identifies one captured image: `(subject_id, sample_id)`.
///
/// Ordering is lexicographic on subject, then sample.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleKey {
    pub subject_id: String,
    pub sample_id: String,
}

impl SampleKey {
    pub fn new(subject_id: impl Into<String>, sample_id: impl Into<String>) -> Self {
        SampleKey {
            subject_id: subject_id.into(),
            sample_id: sample_id.into(),
        }
    }

    pub fn same_subject(&self, other: &SampleKey) -> bool {
        self.subject_id == other.subject_id
    }
}

impl fmt::Display for SampleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.subject_id, self.sample_id)
    }
}

pub(crate) fn check_vector<T: Scalar>(v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Shape("feature vector has dimension 0".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature vector".into()));
    }
    if v.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroNorm);
    }
    Ok(())
}

/// One embedding for a single `(sample, trait)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord<T> {
    pub key: SampleKey,
    pub trait_kind: TraitKind,
    vector: Vec<T>,
}

impl<T: Scalar> FeatureRecord<T> {
    /// Rejects empty, non-finite and zero-norm vectors.
    pub fn new(key: SampleKey, trait_kind: TraitKind, vector: Vec<T>) -> Result<Self> {
        check_vector(&vector)?;
        Ok(FeatureRecord {
            key,
            trait_kind,
            vector,
        })
    }

    pub fn vector(&self) -> &[T] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// An iris template: four subimage embeddings and the fraction of valid
/// (unoccluded) pixels in each subimage.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisRecord<T> {
    pub key: SampleKey,
    subvectors: [Vec<T>; 4],
    mask_ratios: [f64; 4],
}

impl<T: Scalar> IrisRecord<T> {
    pub fn new(key: SampleKey, subvectors: [Vec<T>; 4], mask_ratios: [f64; 4]) -> Result<Self> {
        let dim = subvectors[0].len();
        for sub in &subvectors {
            if sub.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: sub.len(),
                });
            }
            check_vector(sub)?;
        }
        for &m in &mask_ratios {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Ingest(format!(
                    "mask ratio {m} for {key} outside [0, 1]"
                )));
            }
        }
        Ok(IrisRecord {
            key,
            subvectors,
            mask_ratios,
        })
    }

    pub fn subvectors(&self) -> &[Vec<T>; 4] {
        &self.subvectors
    }

    pub fn mask_ratios(&self) -> [f64; 4] {
        self.mask_ratios
    }

    /// Dimension of each subvector.
    pub fn dim(&self) -> usize {
        self.subvectors[0].len()
    }
}

/// All records of one trait, keyed by sample.
#[derive(Debug, Clone, PartialEq)]
pub enum TraitFeatures<T> {
    Plain(BTreeMap<SampleKey, FeatureRecord<T>>),
    Iris(BTreeMap<SampleKey, IrisRecord<T>>),
}

impl<T: Scalar> TraitFeatures<T> {
    pub fn len(&self) -> usize {
        match self {
            TraitFeatures::Plain(m) => m.len(),
            TraitFeatures::Iris(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, key: &SampleKey) -> bool {
        match self {
            TraitFeatures::Plain(m) => m.contains_key(key),
            TraitFeatures::Iris(m) => m.contains_key(key),
        }
    }

    pub fn keys(&self) -> Vec<&SampleKey> {
        match self {
            TraitFeatures::Plain(m) => m.keys().collect(),
            TraitFeatures::Iris(m) => m.keys().collect(),
        }
    }

    /// Common per-vector dimension, `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        match self {
            TraitFeatures::Plain(m) => m.values().next().map(|r| r.dim()),
            TraitFeatures::Iris(m) => m.values().next().map(|r| r.dim()),
        }
    }

    /// Builds a plain trait collection, checking key uniqueness and dimension.
    pub fn plain(trait_kind: TraitKind, records: Vec<FeatureRecord<T>>) -> Result<Self> {
        if trait_kind.is_iris() {
            return Err(Error::Ingest(
                "iris features need four subvectors per record".into(),
            ));
        }
        let mut map = BTreeMap::new();
        let mut dim = None;
        for rec in records {
            if rec.trait_kind != trait_kind {
                return Err(Error::Ingest(format!(
                    "record {} has trait {}, expected {}",
                    rec.key, rec.trait_kind, trait_kind
                )));
            }
            check_dim(&mut dim, rec.dim())?;
            let key = rec.key.clone();
            if map.insert(key.clone(), rec).is_some() {
                return Err(Error::Ingest(format!("duplicate sample {key}")));
            }
        }
        Ok(TraitFeatures::Plain(map))
    }

    pub fn iris(records: Vec<IrisRecord<T>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for rec in records {
            check_dim(&mut dim, rec.dim())?;
            let key = rec.key.clone();
            if map.insert(key.clone(), rec).is_some() {
                return Err(Error::Ingest(format!("duplicate sample {key}")));
            }
        }
        Ok(TraitFeatures::Iris(map))
    }
}

fn check_dim(dim: &mut Option<usize>, d: usize) -> Result<()> {
    match *dim {
        None => {
            *dim = Some(d);
            Ok(())
        }
        Some(expected) if expected == d => Ok(()),
        Some(expected) => Err(Error::DimensionMismatch {
            left: expected,
            right: d,
        }),
    }
}

/// Per-trait feature collections over a shared sample universe.
///
/// A sample that lacks some trait is kept; [`Dataset::missing_traits`] reports
/// which ones, and scoring yields an absent marker for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    traits: BTreeMap<TraitKind, TraitFeatures<T>>,
}

impl<T: Scalar> Default for Dataset<T> {
    fn default() -> Self {
        Dataset {
            traits: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> Dataset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trait_kind: TraitKind, features: TraitFeatures<T>) -> Result<()> {
        if matches!(features, TraitFeatures::Iris(_)) != trait_kind.is_iris() {
            return Err(Error::Ingest(format!(
                "record layout does not match trait {trait_kind}"
            )));
        }
        if self.traits.insert(trait_kind, features).is_some() {
            return Err(Error::Ingest(format!("trait {trait_kind} loaded twice")));
        }
        Ok(())
    }

    pub fn get(&self, trait_kind: TraitKind) -> Option<&TraitFeatures<T>> {
        self.traits.get(&trait_kind)
    }

    /// Traits with loaded features, in canonical order.
    pub fn traits(&self) -> Vec<TraitKind> {
        self.traits.keys().copied().collect()
    }

    /// Union of sample keys over all traits, sorted.
    pub fn sample_keys(&self) -> Vec<SampleKey> {
        let set: BTreeSet<&SampleKey> = self.traits.values().flat_map(|f| f.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn knows(&self, key: &SampleKey) -> bool {
        self.traits.values().any(|f| f.contains(key))
    }

    /// Loaded traits for which `key` has no record.
    pub fn missing_traits(&self, key: &SampleKey) -> Vec<TraitKind> {
        self.traits
            .iter()
            .filter(|(_, f)| !f.contains(key))
            .map(|(t, _)| *t)
            .collect()
    }
}
