use std::sync::Arc;

use anyhow::bail;
use fusebench_core::matching::score_table;
use fusebench_core::scorefile::write_score_csv;
use fusebench_core::{EvalProtocol, Pair, Split};

use super::{load_dataset, Outcome};
use crate::config::{write_file, Settings};

pub fn run(s: &Settings) -> anyhow::Result<Outcome> {
    let ds = load_dataset(s)?;
    if s.splits.is_empty() {
        bail!("no [[splits]] configured");
    }
    let protocol = EvalProtocol::build(&ds.sample_keys(), &s.splits)?;
    let mut warnings = Vec::new();
    for split in Split::ALL {
        let pairs: Arc<[Pair]> = protocol.pairs(split).into();
        for t in ds.traits() {
            let table = score_table(&ds, t, pairs.clone())?;
            if table.missing_count() > 0 {
                warnings.push(format!(
                    "{split}/{t}: {} pairs without a score (sample lacks {t} features)",
                    table.missing_count()
                ));
            }
            if table.occluded_count() > 0 {
                warnings.push(format!(
                    "{split}/{t}: {} pairs fully occluded",
                    table.occluded_count()
                ));
            }
            write_file(&s.scores_path(split, t), write_score_csv(&table))?;
        }
        let (g, i) = protocol.counts(split);
        println!("{split}: {g} genuine, {i} impostor pairs");
    }
    Ok(Outcome::from_warnings(warnings))
}
