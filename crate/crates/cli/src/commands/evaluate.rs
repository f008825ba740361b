use anyhow::Context;
use fusebench_core::fusion::concat_scores;
use fusebench_core::metrics::{evaluate, write_det_csv};
use fusebench_core::{EvalProtocol, FusionWeights, Split};

use super::sweep::SWEEP_SPLIT;
use super::{evaluate_weights, load_dataset, load_tables, summary_line, Outcome};
use crate::config::{read_text, write_file, Settings};
use crate::output::{
    from_json, to_json, weights_from_json, ConcatRow, EvaluationFile, MetricsFile, MetricsJson, SingleRow,
    SubsetRow, SweepFile, WeightedMetrics, EVALUATION_SCHEMA, METRICS_SCHEMA, SWEEP_SCHEMA,
};

pub const EVAL_SPLIT: Split = Split::Test;

pub fn run(s: &Settings) -> anyhow::Result<Outcome> {
    let sweep_path = s.out.join("sweep.json");
    let sweep: SweepFile = from_json(
        &read_text(&sweep_path).context("run `fusebench sweep` first")?,
        SWEEP_SCHEMA,
        &format!("sweep file `{}`", sweep_path.display()),
    )?;
    let targets = &sweep.far_targets;
    let tables = load_tables(s, EVAL_SPLIT, &sweep.active_traits)?;
    let mut warnings = Vec::new();

    let weights = weights_from_json(&sweep.selected.weights)?;
    let selected = evaluate_weights(&tables, &weights, targets)?;
    if selected.excluded > 0 {
        warnings.push(format!(
            "{} {EVAL_SPLIT} pairs excluded from the selected fusion (absent scores)",
            selected.excluded
        ));
    }
    let selected_json = selected.json();

    let singles = sweep
        .active_traits
        .iter()
        .map(|&t| {
            let e = evaluate_weights(&tables, &FusionWeights::one_hot(t), targets)?;
            Ok(SingleRow {
                trait_kind: t,
                metrics: e.json(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let subsets = sweep
        .subsets
        .iter()
        .map(|row| {
            let e = evaluate_weights(&tables, &weights_from_json(&row.weights)?, targets)?;
            Ok(SubsetRow {
                traits: row.traits.clone(),
                weights: row.weights.clone(),
                metrics: e.json(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let concat = if s.concat_baseline {
        let ds = load_dataset(s).context("concatenation baseline needs features")?;
        let protocol = EvalProtocol::build(&ds.sample_keys(), &s.splits)?;
        let fused = concat_scores(&ds, &sweep.active_traits, protocol.pairs(EVAL_SPLIT))?;
        if fused.excluded > 0 {
            warnings.push(format!(
                "{} {EVAL_SPLIT} pairs excluded from the concatenation baseline (missing traits)",
                fused.excluded
            ));
        }
        let r = evaluate(&fused.genuine, &fused.impostor, targets).context("evaluating concatenation baseline")?;
        Some(ConcatRow {
            traits: sweep.active_traits.clone(),
            metrics: MetricsJson::from_summary(&r.summary, fused.excluded),
        })
    } else {
        None
    };

    println!(
        "{}",
        summary_line(&EVAL_SPLIT.to_string(), &sweep.selected.weights, &selected_json, targets)
    );
    let metrics = MetricsFile {
        schema: METRICS_SCHEMA.into(),
        split: EVAL_SPLIT.to_string(),
        weights: sweep.selected.weights.clone(),
        metrics: selected_json.clone(),
    };
    let evaluation = EvaluationFile {
        schema: EVALUATION_SCHEMA.into(),
        split: EVAL_SPLIT.to_string(),
        selection_split: SWEEP_SPLIT.to_string(),
        criterion: sweep.criterion.clone(),
        step: sweep.step,
        far_targets: targets.clone(),
        active_traits: sweep.active_traits.clone(),
        selection: sweep.selection.clone(),
        selected: WeightedMetrics {
            weights: sweep.selected.weights.clone(),
            metrics: selected_json,
        },
        singles,
        subsets,
        concat,
    };
    write_file(&s.out.join("metrics.json"), to_json(&metrics))?;
    write_file(&s.out.join("det.csv"), write_det_csv(&selected.report.curve))?;
    write_file(&s.out.join("evaluation.json"), to_json(&evaluation))?;
    Ok(Outcome::from_warnings(warnings))
}
