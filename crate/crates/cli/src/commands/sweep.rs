use anyhow::bail;
use fusebench_core::fusion::sweep;
use fusebench_core::Split;

use super::{evaluate_weights, load_tables, summary_line, Outcome};
use crate::config::{write_file, Settings};
use crate::output::{
    subsets, to_json, weights_json, MetricsJson, Selection, SubsetRow, SweepFile, WeightedMetrics, SWEEP_SCHEMA,
};
use crate::render::sweep_csv;

pub const SWEEP_SPLIT: Split = Split::Val;

pub fn run(s: &Settings) -> anyhow::Result<Outcome> {
    let active = s.resolve_active(SWEEP_SPLIT)?;
    let tables = load_tables(s, SWEEP_SPLIT, &active)?;
    let result = sweep(&tables, &active, s.step, s.criterion, &s.far_targets)?;

    let (selection, selected) = match &s.weights {
        Some(w) => {
            if let Some(t) = w.support().into_iter().find(|t| !active.contains(t)) {
                bail!("fixed weights use {t}, which is not an active trait");
            }
            let e = evaluate_weights(&tables, w, &s.far_targets)?;
            (
                Selection::Fixed,
                WeightedMetrics {
                    weights: weights_json(w),
                    metrics: e.json(),
                },
            )
        }
        None => {
            let e = result.selected();
            (
                Selection::Sweep,
                WeightedMetrics {
                    weights: weights_json(&e.weights),
                    metrics: MetricsJson::from_summary(&e.metrics, e.excluded),
                },
            )
        }
    };
    let rows = subsets(&active)
        .into_iter()
        .filter_map(|traits| {
            result.best_for_support(&traits).map(|e| SubsetRow {
                traits,
                weights: weights_json(&e.weights),
                metrics: MetricsJson::from_summary(&e.metrics, e.excluded),
            })
        })
        .collect();

    let mut warnings = Vec::new();
    if selected.metrics.counts.excluded > 0 {
        warnings.push(format!(
            "{} {SWEEP_SPLIT} pairs excluded from the selected fusion (absent scores)",
            selected.metrics.counts.excluded
        ));
    }
    println!(
        "{}",
        summary_line(&SWEEP_SPLIT.to_string(), &selected.weights, &selected.metrics, &s.far_targets)
    );
    let file = SweepFile {
        schema: SWEEP_SCHEMA.into(),
        split: SWEEP_SPLIT.to_string(),
        criterion: s.criterion.to_string(),
        step: s.step,
        far_targets: s.far_targets.clone(),
        active_traits: active,
        evaluated: result.entries.len(),
        selection,
        selected,
        subsets: rows,
    };
    write_file(&s.out.join("sweep.csv"), sweep_csv(&result, &s.far_targets))?;
    write_file(&s.out.join("sweep.json"), to_json(&file))?;
    Ok(Outcome::from_warnings(warnings))
}
