//! Versioned JSON outputs.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use fusebench_core::metrics::MetricsSummary;
use fusebench_core::{FusionWeights, TraitKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const METRICS_SCHEMA: &str = "fusebench.metrics/1";
pub const SWEEP_SCHEMA: &str = "fusebench.sweep/1";
pub const EVALUATION_SCHEMA: &str = "fusebench.evaluation/1";
pub const GEOMETRY_SCHEMA: &str = "fusebench.geometry/1";

/// Operating point at one FAR target. Infinite thresholds are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingJson {
    pub frr: f64,
    pub far: f64,
    pub threshold: Option<f64>,
    pub false_rejects: usize,
    pub false_accepts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsJson {
    pub genuine: usize,
    pub impostor: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsJson {
    pub eer: f64,
    pub eer_threshold: Option<f64>,
    /// Keyed by the FAR target as a fraction, e.g. `"0.001"`.
    pub frr_at_far: BTreeMap<String, OperatingJson>,
    pub counts: CountsJson,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn target_key(t: f64) -> String {
    format!("{t}")
}

impl MetricsJson {
    pub fn from_summary(m: &MetricsSummary, excluded: usize) -> Self {
        MetricsJson {
            eer: m.eer,
            eer_threshold: finite(m.eer_threshold),
            frr_at_far: m
                .frr_at_far
                .iter()
                .map(|f| {
                    (
                        target_key(f.target),
                        OperatingJson {
                            frr: f.frr,
                            far: f.far,
                            threshold: finite(f.threshold),
                            false_rejects: f.false_rejects,
                            false_accepts: f.false_accepts,
                        },
                    )
                })
                .collect(),
            counts: CountsJson {
                genuine: m.genuine_n,
                impostor: m.impostor_n,
                excluded,
            },
        }
    }

    pub fn frr(&self, target: f64) -> Option<f64> {
        self.frr_at_far.get(&target_key(target)).map(|o| o.frr)
    }
}

/// Positive weights only, canonical trait order.
pub type WeightsJson = BTreeMap<TraitKind, f64>;

pub fn weights_json(w: &FusionWeights<f64>) -> WeightsJson {
    w.support().into_iter().map(|t| (t, w.get(t))).collect()
}

pub fn weights_from_json(w: &WeightsJson) -> anyhow::Result<FusionWeights<f64>> {
    let pairs: Vec<(TraitKind, f64)> = w.iter().map(|(t, v)| (*t, *v)).collect();
    Ok(FusionWeights::from_pairs(&pairs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema: String,
    pub split: String,
    pub weights: WeightsJson,
    #[serde(flatten)]
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub weights: WeightsJson,
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub traits: Vec<TraitKind>,
    pub weights: WeightsJson,
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Sweep,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub schema: String,
    pub split: String,
    pub criterion: String,
    pub step: f64,
    pub far_targets: Vec<f64>,
    pub active_traits: Vec<TraitKind>,
    pub evaluated: usize,
    pub selection: Selection,
    pub selected: WeightedMetrics,
    /// Best weights for every combination of active traits, by size then
    /// canonical order; metrics on the sweep split.
    pub subsets: Vec<SubsetRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRow {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatRow {
    pub traits: Vec<TraitKind>,
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub schema: String,
    pub split: String,
    pub selection_split: String,
    pub criterion: String,
    pub step: f64,
    pub far_targets: Vec<f64>,
    pub active_traits: Vec<TraitKind>,
    pub selection: Selection,
    pub selected: WeightedMetrics,
    pub singles: Vec<SingleRow>,
    /// Weights from the sweep split, metrics on this split.
    pub subsets: Vec<SubsetRow>,
    pub concat: Option<ConcatRow>,
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output types serialize");
    s.push('\n');
    s
}

#[derive(Deserialize)]
struct SchemaOnly {
    schema: Option<String>,
}

/// Parses `text`, failing loudly unless its `schema` is `expected`.
pub fn from_json<T: DeserializeOwned>(text: &str, expected: &str, what: &str) -> anyhow::Result<T> {
    let tag: SchemaOnly = serde_json::from_str(text).with_context(|| format!("parsing {what}"))?;
    match tag.schema.as_deref() {
        Some(s) if s == expected => {}
        Some(s) => bail!("{what} has schema `{s}`, expected `{expected}`"),
        None => bail!("{what} has no schema tag, expected `{expected}`"),
    }
    serde_json::from_str(text).with_context(|| format!("parsing {what}"))
}

/// Non-empty subsets of `traits`, by size, then lexicographically in
/// canonical trait order.
pub fn subsets(traits: &[TraitKind]) -> Vec<Vec<TraitKind>> {
    let mut sorted = traits.to_vec();
    sorted.sort();
    let n = sorted.len();
    let mut out: Vec<Vec<TraitKind>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| sorted[i]).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use TraitKind::*;

    #[test]
    fn subset_order() {
        let s = subsets(&[Nose, Face, Iris]);
        assert_eq!(
            s,
            vec![
                vec![Face],
                vec![Iris],
                vec![Nose],
                vec![Face, Iris],
                vec![Face, Nose],
                vec![Iris, Nose],
                vec![Face, Iris, Nose],
            ]
        );
        assert_eq!(subsets(&TraitKind::ALL).len(), 31);
    }

    #[test]
    fn schema_check() {
        let text = r#"{"schema":"fusebench.sweep/0"}"#;
        let r: anyhow::Result<SweepFile> = from_json(text, SWEEP_SCHEMA, "sweep file");
        assert!(format!("{:#}", r.unwrap_err()).contains("fusebench.sweep/0"));
        let r: anyhow::Result<SweepFile> = from_json("{}", SWEEP_SCHEMA, "sweep file");
        assert!(r.is_err());
    }

    #[test]
    fn weights_round_trip() {
        let w = FusionWeights::from_pairs(&[(Nose, 0.3), (Face, 0.7)]).unwrap();
        let j = weights_json(&w);
        assert_eq!(serde_json::to_string(&j).unwrap(), r#"{"face":0.7,"nose":0.3}"#);
        assert_eq!(weights_from_json(&j).unwrap(), w);
    }
}
