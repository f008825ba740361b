pub mod evaluate;
pub mod geometry;
pub mod report;
pub mod score;
pub mod sweep;
pub mod synth;

use anyhow::{bail, Context};
use fusebench_core::features::read_features;
use fusebench_core::fusion::{fuse_tables, TraitTables};
use fusebench_core::metrics::{evaluate, MetricsReport};
use fusebench_core::scorefile::read_score_csv;
use fusebench_core::{Dataset, FusionWeights, Split, TraitKind};

use crate::config::{read_text, Settings};
use crate::output::{MetricsJson, WeightsJson};
use crate::render::{far_header, pct};

/// Result of a command that wrote its outputs.
#[derive(Debug)]
pub enum Outcome {
    Clean,
    Warnings(Vec<String>),
}

impl Outcome {
    pub fn from_warnings(w: Vec<String>) -> Outcome {
        if w.is_empty() {
            Outcome::Clean
        } else {
            Outcome::Warnings(w)
        }
    }
}

pub fn load_dataset(s: &Settings) -> anyhow::Result<Dataset<f32>> {
    if s.features.is_empty() {
        bail!("no [features] configured");
    }
    let mut ds = Dataset::new();
    for (&t, path) in &s.features {
        let text = read_text(path)?;
        let (header, features) =
            read_features::<f32>(&text).with_context(|| format!("feature file `{}`", path.display()))?;
        if header.trait_kind != t {
            bail!(
                "feature file `{}` holds {} features but is configured as {t}",
                path.display(),
                header.trait_kind
            );
        }
        ds.insert(t, features)?;
    }
    Ok(ds)
}

pub fn load_tables(s: &Settings, split: Split, traits: &[TraitKind]) -> anyhow::Result<TraitTables> {
    let mut tables = Vec::with_capacity(traits.len());
    for &t in traits {
        let path = s.scores_path(split, t);
        if !path.is_file() {
            bail!("missing {split} score file `{}`", path.display());
        }
        let text = read_text(&path)?;
        tables.push(read_score_csv(&text, Some(t)).with_context(|| format!("score file `{}`", path.display()))?);
    }
    TraitTables::new(tables).with_context(|| format!("aligning {split} score tables"))
}

pub struct Evaluated {
    pub report: MetricsReport<f64>,
    pub excluded: usize,
}

impl Evaluated {
    pub fn json(&self) -> MetricsJson {
        MetricsJson::from_summary(&self.report.summary, self.excluded)
    }
}

pub fn evaluate_weights(
    tables: &TraitTables,
    weights: &FusionWeights<f64>,
    targets: &[f64],
) -> anyhow::Result<Evaluated> {
    let fused = fuse_tables(tables, weights)?;
    let report = evaluate(&fused.genuine, &fused.impostor, targets)
        .with_context(|| format!("evaluating weights {weights}"))?;
    Ok(Evaluated {
        report,
        excluded: fused.excluded,
    })
}

/// `label: face=0.3 nose=0.7 | EER 1.234 | FRR@FAR0.1% 2.345 | ...` (percent).
pub fn summary_line(label: &str, weights: &WeightsJson, m: &MetricsJson, targets: &[f64]) -> String {
    let w: Vec<String> = weights.iter().map(|(t, v)| format!("{t}={v}")).collect();
    let mut parts = vec![format!("{label}: {}", w.join(" ")), format!("EER {}", pct(m.eer))];
    for &t in targets {
        if let Some(f) = m.frr(t) {
            parts.push(format!("{} {}", far_header(t), pct(f)));
        }
    }
    parts.join(" | ")
}
