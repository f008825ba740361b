//! Run configuration.
//!
//! ```toml
//! seed = 7
//! out = "out"                      # relative to this file
//! step = 0.1
//! criterion = "eer"                # or "frr_far_0.1", "frr_far_0.01"
//! far_targets = [0.001, 0.0001]
//! active_traits = ["face", "nose"] # default: every trait with features or scores
//! concat_baseline = true
//!
//! [features]
//! face = "features/face.feat"
//!
//! [[splits]]
//! range = "S4000..S4083"
//! split = "train"
//!
//! [crop]                           # multiples of the inter-eye distance
//! periocular = 0.9
//!
//! [weights]                        # fixed weights; skips sweep selection
//! nose = 1.0
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fusebench_core::fusion::grid_divisions;
use fusebench_core::geometry::CropConfig;
use fusebench_core::metrics::check_target;
use fusebench_core::{Criterion, FusionWeights, Split, SplitSpec, SubjectRange, TraitKind};
use serde::Deserialize;

pub const DEFAULT_FAR_TARGETS: [f64; 2] = [0.001, 0.0001];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    step: Option<f64>,
    criterion: Option<String>,
    far_targets: Option<Vec<f64>>,
    active_traits: Option<Vec<TraitKind>>,
    #[serde(default)]
    concat_baseline: bool,
    #[serde(default)]
    features: BTreeMap<TraitKind, PathBuf>,
    #[serde(default)]
    splits: Vec<SplitSpec>,
    #[serde(default)]
    crop: CropConfig,
    weights: Option<BTreeMap<TraitKind, f64>>,
}

#[derive(Debug, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub step: Option<f64>,
    pub criterion: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct Settings {
    pub out: PathBuf,
    pub step: f64,
    pub criterion: Criterion,
    /// Sorted descending (0.1% before 0.01%), criterion target included.
    pub far_targets: Vec<f64>,
    pub active_traits: Option<Vec<TraitKind>>,
    pub weights: Option<FusionWeights<f64>>,
    pub concat_baseline: bool,
    /// Overrides a fixture's seed in `synth`.
    pub seed: Option<u64>,
    pub features: BTreeMap<TraitKind, PathBuf>,
    pub splits: Vec<SubjectRange>,
    pub crop: CropConfig,
}

impl Settings {
    pub fn load(path: Option<&Path>, cli: &CliOverrides) -> anyhow::Result<Settings> {
        let (cfg, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config `{}`", p.display()))?;
                let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config `{}`", p.display()))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (
                toml::from_str::<RunConfig>("").expect("empty config parses"),
                PathBuf::new(),
            ),
        };
        let ctx = || match path {
            Some(p) => format!("in config `{}`", p.display()),
            None => "in command-line settings".to_string(),
        };

        let step = cli.step.or(cfg.step).unwrap_or(0.1);
        grid_divisions(step).with_context(ctx)?;
        let criterion: Criterion = cli
            .criterion
            .as_deref()
            .or(cfg.criterion.as_deref())
            .unwrap_or("eer")
            .parse()
            .with_context(ctx)?;
        let mut far_targets = cfg.far_targets.unwrap_or_else(|| DEFAULT_FAR_TARGETS.to_vec());
        for &t in &far_targets {
            check_target(t).with_context(ctx)?;
        }
        if let Some(t) = criterion.target() {
            if !far_targets.contains(&t) {
                far_targets.push(t);
            }
        }
        far_targets.sort_by(|a, b| b.total_cmp(a));
        far_targets.dedup();

        let weights = match cfg.weights {
            Some(w) => {
                let pairs: Vec<(TraitKind, f64)> = w.into_iter().collect();
                Some(FusionWeights::from_pairs(&pairs).with_context(ctx)?)
            }
            None => None,
        };
        if let Some(active) = &cfg.active_traits {
            if active.is_empty() {
                bail!("`active_traits` is empty {}", ctx());
            }
        }
        cfg.crop.validate().with_context(ctx)?;

        let mut features = BTreeMap::new();
        for (t, p) in cfg.features {
            let full = base.join(&p);
            if !full.is_file() {
                bail!("feature file for {t} not found: `{}` {}", full.display(), ctx());
            }
            features.insert(t, full);
        }
        let splits = cfg
            .splits
            .iter()
            .map(SplitSpec::to_range)
            .collect::<Result<Vec<_>, _>>()
            .with_context(ctx)?;

        let out = match (&cli.out, &cfg.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o),
            (None, None) => base.join("out"),
        };
        Ok(Settings {
            out,
            step,
            criterion,
            far_targets,
            active_traits: cfg.active_traits.map(|mut a| {
                a.sort();
                a.dedup();
                a
            }),
            weights,
            concat_baseline: cfg.concat_baseline,
            seed: cli.seed.or(cfg.seed),
            features,
            splits,
            crop: cfg.crop,
        })
    }

    pub fn scores_path(&self, split: Split, t: TraitKind) -> PathBuf {
        self.out.join("scores").join(split.name()).join(format!("{}.csv", t.name()))
    }

    /// Configured active traits, else traits with features, else traits with a
    /// score file for `split`.
    pub fn resolve_active(&self, split: Split) -> anyhow::Result<Vec<TraitKind>> {
        if let Some(a) = &self.active_traits {
            return Ok(a.clone());
        }
        if !self.features.is_empty() {
            return Ok(self.features.keys().copied().collect());
        }
        let found: Vec<TraitKind> = TraitKind::ALL
            .into_iter()
            .filter(|t| self.scores_path(split, *t).is_file())
            .collect();
        if found.is_empty() {
            bail!(
                "no score files under `{}`; run `fusebench score` first",
                self.out.join("scores").join(split.name()).display()
            );
        }
        Ok(found)
    }
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing `{}`", path.display()))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))
}
