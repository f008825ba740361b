//! Seeded synthetic data: Gaussian score models with a closed-form EER and
//! subject-centroid embedding models.
//!
//! Randomness layout, fixed so fixtures are reproducible:
//!
//! * Every consumer draws from its own stream. The stream seed is
//!   `splitmix64(master ^ splitmix64(stream_id))`, fed to
//!   `ChaCha8Rng::seed_from_u64`.
//! * A uniform variate is `((next_u64 >> 11) + 0.5) * 2^-53`, in `(0, 1)`.
//! * A standard normal variate is the inverse normal CDF of one uniform.
//!
//! Stream ids: score model genuine = 0, impostor = 1; score tables per trait
//! = `100 + trait index`; embeddings per trait = `200 + trait index`; score
//! fixture splits = `300 + split index`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matching::ScoreTable;
use crate::model::{Dataset, FeatureRecord, IrisRecord, SampleKey, TraitFeatures, TraitKind};
use crate::protocol::{EvalProtocol, Pair, Split, SplitSpec, SubjectRange};
use crate::Scalar;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, stream_id: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream_id))
}

/// Uniform and normal variates from one seeded stream.
pub struct Stream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl Stream {
    pub fn new(master: u64, stream_id: u64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(stream_seed(master, stream_id)),
            normal: Normal::standard(),
        }
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }
}

/// Genuine and impostor scores as two normals with a shared spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreModel {
    pub mu_genuine: f64,
    pub mu_impostor: f64,
    pub sigma: f64,
}

impl ScoreModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_genuine.is_finite() && self.mu_impostor.is_finite()) {
            return Err(Error::Config("score model means must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!(
                "score model sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Population EER: the two densities cross at the midpoint, giving
    /// `Phi(-(mu_g - mu_i) / (2 sigma))`.
    pub fn analytic_eer(&self) -> f64 {
        Normal::standard().cdf(-(self.mu_genuine - self.mu_impostor) / (2.0 * self.sigma))
    }

    /// Model with the given population EER: `mu_g - mu_i = -2 sigma Phi^-1(eer)`.
    pub fn with_eer(eer: f64, mu_impostor: f64, sigma: f64) -> Result<Self> {
        if !(eer > 0.0 && eer < 0.5) {
            return Err(Error::Config(format!("target EER {eer} outside (0, 0.5)")));
        }
        let gap = -2.0 * sigma * Normal::standard().inverse_cdf(eer);
        let m = ScoreModel {
            mu_genuine: mu_impostor + gap,
            mu_impostor,
            sigma,
        };
        m.validate()?;
        Ok(m)
    }
}

pub fn gen_scores(model: &ScoreModel, genuine_n: usize, impostor_n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    model.validate()?;
    if genuine_n == 0 || impostor_n == 0 {
        return Err(Error::Config("score counts must be at least 1".into()));
    }
    let mut g = Stream::new(seed, 0);
    let mut i = Stream::new(seed, 1);
    let genuine = (0..genuine_n)
        .map(|_| model.mu_genuine + model.sigma * g.normal())
        .collect();
    let impostor = (0..impostor_n)
        .map(|_| model.mu_impostor + model.sigma * i.normal())
        .collect();
    Ok((genuine, impostor))
}

/// One score per pair and trait, drawn from the trait's model. Traits are
/// independent given the genuine flag.
pub fn gen_score_tables(models: &BTreeMap<TraitKind, ScoreModel>, pairs: Arc<[Pair]>, seed: u64) -> Result<Vec<ScoreTable>> {
    models
        .iter()
        .map(|(&t, m)| {
            m.validate()?;
            let mut s = Stream::new(seed, 100 + t.index() as u64);
            let rows = pairs
                .iter()
                .map(|p| {
                    let mu = if p.genuine { m.mu_genuine } else { m.mu_impostor };
                    Ok(mu + m.sigma * s.normal())
                })
                .collect();
            ScoreTable::from_rows(t, pairs.clone(), rows)
        })
        .collect()
}

/// Subject/sample grid shared by the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub subjects: usize,
    pub samples_per_subject: usize,
    #[serde(default = "default_base")]
    pub subject_base: u32,
    #[serde(default = "default_prefix")]
    pub subject_prefix: String,
}

fn default_base() -> u32 {
    4000
}

fn default_prefix() -> String {
    "S".into()
}

impl Population {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.samples_per_subject == 0 {
            return Err(Error::Config("population needs at least 1 subject and 1 sample".into()));
        }
        Ok(())
    }

    pub fn subject_id(&self, i: usize) -> String {
        format!("{}{:04}", self.subject_prefix, self.subject_base as usize + i)
    }

    pub fn sample_id(&self, j: usize) -> String {
        let width = self.samples_per_subject.to_string().len().max(2);
        format!("{:0width$}", j + 1)
    }

    /// All keys, subject-major.
    pub fn keys(&self) -> Vec<SampleKey> {
        (0..self.subjects)
            .flat_map(|i| (0..self.samples_per_subject).map(move |j| (i, j)))
            .map(|(i, j)| SampleKey::new(self.subject_id(i), self.sample_id(j)))
            .collect()
    }
}

/// Per-trait embeddings scattered around per-subject centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub dim: usize,
    #[serde(flatten)]
    pub population: Population,
    /// Within-subject noise (per-coordinate standard deviation) per trait.
    /// Only listed traits are generated.
    pub noise: BTreeMap<TraitKind, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl EmbeddingModel {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config("embedding dimension must be at least 2".into()));
        }
        self.population.validate()?;
        for (t, s) in &self.noise {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(Error::Config(format!("noise for {t} must be >= 0")));
            }
        }
        Ok(())
    }
}

fn unit_vector(stream: &mut Stream, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| stream.normal()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `centroid + sigma * z`, renormalized; `z` is always drawn so the stream
/// position does not depend on `sigma`.
pub fn perturb(stream: &mut Stream, centroid: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let v: Vec<f64> = centroid.iter().map(|c| c + sigma * stream.normal()).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

fn cast<T: Scalar>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::from_f64_lossy).collect()
}

/// Generates every trait listed in `model.noise`. Iris records get four
/// subvectors (independent centroids) and mask ratios uniform on `[0.3, 1]`.
pub fn gen_embeddings<T: Scalar>(model: &EmbeddingModel) -> Result<Dataset<T>> {
    model.validate()?;
    let pop = &model.population;
    let mut ds = Dataset::new();
    for (&t, &sigma) in &model.noise {
        let mut s = Stream::new(model.seed, 200 + t.index() as u64);
        let features = if t.is_iris() {
            let mut recs = Vec::with_capacity(pop.subjects * pop.samples_per_subject);
            for i in 0..pop.subjects {
                let centroids: [Vec<f64>; 4] = std::array::from_fn(|_| unit_vector(&mut s, model.dim));
                for j in 0..pop.samples_per_subject {
                    let mut subs: [Vec<T>; 4] = Default::default();
                    for (k, c) in centroids.iter().enumerate() {
                        subs[k] = cast(perturb(&mut s, c, sigma)?);
                    }
                    let ratios = std::array::from_fn(|_| 0.3 + 0.7 * s.uniform());
                    let key = SampleKey::new(pop.subject_id(i), pop.sample_id(j));
                    recs.push(IrisRecord::new(key, subs, ratios)?);
                }
            }
            TraitFeatures::iris(recs)?
        } else {
            let mut recs = Vec::with_capacity(pop.subjects * pop.samples_per_subject);
            for i in 0..pop.subjects {
                let c = unit_vector(&mut s, model.dim);
                for j in 0..pop.samples_per_subject {
                    let key = SampleKey::new(pop.subject_id(i), pop.sample_id(j));
                    recs.push(FeatureRecord::new(key, t, cast(perturb(&mut s, &c, sigma)?))?);
                }
            }
            TraitFeatures::plain(t, recs)?
        };
        ds.insert(t, features)?;
    }
    Ok(ds)
}

/// Score-level fixture: a population, a protocol and one model per trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFixture {
    #[serde(flatten)]
    pub population: Population,
    pub models: BTreeMap<TraitKind, ScoreModel>,
}

impl ScoreFixture {
    /// Score tables for every split of the protocol built over the fixture
    /// population. Split `k` (train, val, test) uses master seed
    /// `stream_seed(seed, 300 + k)`.
    pub fn generate(&self, ranges: &[SubjectRange], seed: u64) -> Result<Vec<(Split, Vec<ScoreTable>)>> {
        self.population.validate()?;
        if self.models.is_empty() {
            return Err(Error::Config("score fixture lists no trait models".into()));
        }
        let protocol = EvalProtocol::build(&self.population.keys(), ranges)?;
        Split::ALL
            .into_iter()
            .enumerate()
            .map(|(k, split)| {
                let pairs: Arc<[Pair]> = protocol.pairs(split).into();
                let tables = gen_score_tables(&self.models, pairs, stream_seed(seed, 300 + k as u64))?;
                Ok((split, tables))
            })
            .collect()
    }
}

/// Fixture config file (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub schema: String,
    pub seed: u64,
    pub splits: Vec<SplitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScoreFixture>,
}

pub const SYNTH_SCHEMA: &str = "fusebench.synth/1";

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != SYNTH_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported fixture schema `{}`, expected `{SYNTH_SCHEMA}`",
                cfg.schema
            )));
        }
        if cfg.embedding.is_some() == cfg.scores.is_some() {
            return Err(Error::Config(
                "fixture must define exactly one of `embedding` or `scores`".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn ranges(&self) -> Result<Vec<SubjectRange>> {
        self.splits.iter().map(SplitSpec::to_range).collect()
    }

    /// The embedding model with the master seed applied.
    pub fn embedding_model(&self) -> Option<EmbeddingModel> {
        self.embedding.clone().map(|mut m| {
            m.seed = self.seed;
            m
        })
    }
}
