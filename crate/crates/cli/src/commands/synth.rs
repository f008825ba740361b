use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use fusebench_core::features::{write_features, Encoding};
use fusebench_core::scorefile::write_score_csv;
use fusebench_core::synth::{gen_embeddings, SynthConfig};
use fusebench_core::{Split, SplitSpec, TraitKind};

use super::Outcome;
use crate::config::{read_text, write_file, Settings};

fn toml_list(traits: &[TraitKind]) -> String {
    let names: Vec<String> = traits.iter().map(|t| format!("\"{}\"", t.name())).collect();
    format!("[{}]", names.join(", "))
}

/// Run config pointing at the generated files; paths relative to `out`.
fn run_toml(cfg: &SynthConfig, seed: u64, features: &[TraitKind], scores: &[TraitKind]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "seed = {seed}");
    t.push_str("out = \".\"\n");
    if !scores.is_empty() {
        let _ = writeln!(t, "active_traits = {}", toml_list(scores));
    }
    if !features.is_empty() {
        t.push_str("concat_baseline = true\n\n[features]\n");
        for f in features {
            let _ = writeln!(t, "{} = \"features/{}.feat\"", f.name(), f.name());
        }
    }
    for SplitSpec { range, split } in &cfg.splits {
        let _ = write!(t, "\n[[splits]]\nrange = \"{range}\"\nsplit = \"{split}\"\n");
    }
    t
}

pub fn run(s: &Settings, fixture: &Path) -> anyhow::Result<Outcome> {
    let cfg = SynthConfig::from_json(&read_text(fixture)?)
        .with_context(|| format!("fixture `{}`", fixture.display()))?;
    let seed = s.seed.unwrap_or(cfg.seed);
    let out = &s.out;
    let ranges = cfg.ranges()?;
    let mut feature_traits = Vec::new();
    let mut score_traits = Vec::new();

    if let Some(mut model) = cfg.embedding.clone() {
        model.seed = seed;
        let ds = gen_embeddings::<f32>(&model)?;
        for t in ds.traits() {
            let text = write_features(t, ds.get(t).expect("listed trait"), Encoding::Hex)?;
            write_file(&out.join("features").join(format!("{}.feat", t.name())), text)?;
            feature_traits.push(t);
        }
        println!("wrote {} feature files for {} samples", feature_traits.len(), ds.sample_keys().len());
    }
    if let Some(fx) = &cfg.scores {
        for (split, tables) in fx.generate(&ranges, seed)? {
            for table in tables {
                let t = table.trait_kind;
                let path = out.join("scores").join(split.name()).join(format!("{}.csv", t.name()));
                write_file(&path, write_score_csv(&table))?;
                if split == Split::Val {
                    score_traits.push(t);
                }
            }
        }
        println!("wrote score tables for {} traits", score_traits.len());
    }
    write_file(&out.join("run.toml"), run_toml(&cfg, seed, &feature_traits, &score_traits))?;
    Ok(Outcome::Clean)
}
