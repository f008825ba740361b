//! Per-trait match scores.
//!
//! All accumulation happens in `f64` with pairwise summation over vector
//! indices, so a score depends only on the two operands, never on the thread
//! that computed it.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dataset, IrisRecord, SampleKey, TraitFeatures, TraitKind};
use crate::protocol::Pair;
use crate::scalar::pairwise_sum;
use crate::Scalar;

/// Slack allowed past `[-1, 1]` before clamping.
pub const COSINE_SLACK: f64 = 1e-9;

/// Cosine similarity in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MatchScore(f64);

impl MatchScore {
    /// Clamps values within [`COSINE_SLACK`] of the interval.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("match score".into()));
        }
        if !(-1.0 - COSINE_SLACK..=1.0 + COSINE_SLACK).contains(&value) {
            return Err(Error::DataIntegrity(format!(
                "cosine {value} outside [-1, 1]"
            )));
        }
        Ok(MatchScore(value.clamp(-1.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn dot<T: Scalar>(u: &[T], v: &[T]) -> f64 {
    pairwise_sum(0, u.len(), &|i| u[i].to_f64_lossless() * v[i].to_f64_lossless())
}

fn sq_norm<T: Scalar>(u: &[T]) -> f64 {
    pairwise_sum(0, u.len(), &|i| {
        let x = u[i].to_f64_lossless();
        x * x
    })
}

fn cosine_parts(dot: f64, nu: f64, nv: f64) -> Result<MatchScore> {
    // sqrt(nu * nv) keeps cosine(v, v) exactly 1: sqrt(fl(n * n)) == n.
    MatchScore::new(dot / (nu * nv).sqrt())
}

/// `u . v / (|u| |v|)`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<MatchScore> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (nu, nv) = (sq_norm(u), sq_norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    cosine_parts(dot(u, v), nu, nv)
}

/// Mask-weighted mean of the four subimage cosines.
///
/// Subimage `i` gets weight `a.mask_ratio[i] * b.mask_ratio[i]`, so occlusion
/// on either template lowers its influence. Fails with
/// [`Error::FullyOccluded`] when every weight is zero.
pub fn iris_score<T: Scalar>(a: &IrisRecord<T>, b: &IrisRecord<T>) -> Result<MatchScore> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (ma, mb) = (a.mask_ratios(), b.mask_ratios());
    let mut sub = [0.0; 4];
    for i in 0..4 {
        sub[i] = cosine(&a.subvectors()[i], &b.subvectors()[i])?.value();
    }
    aggregate_iris(sub, std::array::from_fn(|i| ma[i] * mb[i]))
}

fn aggregate_iris(sub: [f64; 4], w: [f64; 4]) -> Result<MatchScore> {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::FullyOccluded);
    }
    let mut num = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..4 {
        num += w[i] * sub[i];
        if w[i] > 0.0 {
            lo = lo.min(sub[i]);
            hi = hi.max(sub[i]);
        }
    }
    // keep the result inside the convex hull despite rounding
    MatchScore::new((num / total).clamp(lo, hi))
}

/// Why a score row has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Absent {
    /// One side has no record for this trait.
    Missing,
    /// Iris pair whose subimage weights are all zero.
    Occluded,
}

/// Scores of one trait over a protocol pair list, row-aligned with it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub trait_kind: TraitKind,
    pairs: Arc<[Pair]>,
    scores: Vec<Option<f64>>,
    missing: usize,
    occluded: usize,
}

impl ScoreTable {
    /// Builds a table from precomputed rows.
    pub fn from_rows(
        trait_kind: TraitKind,
        pairs: Arc<[Pair]>,
        rows: Vec<std::result::Result<f64, Absent>>,
    ) -> Result<Self> {
        if rows.len() != pairs.len() {
            return Err(Error::Protocol(format!(
                "{} score rows for {} pairs",
                rows.len(),
                pairs.len()
            )));
        }
        let missing = rows.iter().filter(|r| **r == Err(Absent::Missing)).count();
        let occluded = rows.iter().filter(|r| **r == Err(Absent::Occluded)).count();
        Ok(ScoreTable {
            trait_kind,
            pairs,
            scores: rows.into_iter().map(|r| r.ok()).collect(),
            missing,
            occluded,
        })
    }

    pub fn pairs(&self) -> &Arc<[Pair]> {
        &self.pairs
    }

    pub fn scores(&self) -> &[Option<f64>] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Rows without a score (missing trait or fully occluded iris).
    pub fn absent_count(&self) -> usize {
        self.scores.iter().filter(|s| s.is_none()).count()
    }

    pub fn missing_count(&self) -> usize {
        self.missing
    }

    pub fn occluded_count(&self) -> usize {
        self.occluded
    }

    /// Present genuine and impostor scores, in row order.
    pub fn split_scores(&self) -> (Vec<f64>, Vec<f64>) {
        let mut genuine = Vec::new();
        let mut impostor = Vec::new();
        for (p, s) in self.pairs.iter().zip(&self.scores) {
            if let Some(s) = s {
                if p.genuine {
                    genuine.push(*s);
                } else {
                    impostor.push(*s);
                }
            }
        }
        (genuine, impostor)
    }

    /// Same pair list, row for row.
    pub fn aligned_with(&self, other: &ScoreTable) -> bool {
        Arc::ptr_eq(&self.pairs, &other.pairs) || self.pairs == other.pairs
    }
}

enum Prepared<'a, T> {
    Plain(Vec<(&'a [T], f64)>),
    Iris(Vec<&'a IrisRecord<T>>),
}

/// Scores every pair for one trait, in protocol order.
///
/// Rows run in parallel on the current rayon pool; each row is written to its
/// own slot, so the table is identical for any thread count.
pub fn score_table<T: Scalar>(
    dataset: &Dataset<T>,
    trait_kind: TraitKind,
    pairs: Arc<[Pair]>,
) -> Result<ScoreTable> {
    let features = dataset
        .get(trait_kind)
        .ok_or_else(|| Error::DataIntegrity(format!("trait {trait_kind} not loaded")))?;

    let mut index: HashMap<&SampleKey, usize> = HashMap::new();
    let prepared = match features {
        TraitFeatures::Plain(map) => Prepared::Plain(
            map.iter()
                .enumerate()
                .map(|(i, (k, r))| {
                    index.insert(k, i);
                    (r.vector(), sq_norm(r.vector()))
                })
                .collect(),
        ),
        TraitFeatures::Iris(map) => Prepared::Iris(
            map.iter()
                .enumerate()
                .map(|(i, (k, r))| {
                    index.insert(k, i);
                    r
                })
                .collect(),
        ),
    };

    for p in pairs.iter() {
        for k in [&p.a, &p.b] {
            if !index.contains_key(k) && !dataset.knows(k) {
                return Err(Error::DataIntegrity(format!(
                    "pair references unknown sample {k}"
                )));
            }
        }
    }

    let rows: Vec<Result<std::result::Result<f64, Absent>>> = pairs
        .par_iter()
        .map(|p| {
            let (Some(&ia), Some(&ib)) = (index.get(&p.a), index.get(&p.b)) else {
                return Ok(Err(Absent::Missing));
            };
            match &prepared {
                Prepared::Plain(v) => {
                    let (a, na) = v[ia];
                    let (b, nb) = v[ib];
                    if a.len() != b.len() {
                        return Err(Error::DimensionMismatch {
                            left: a.len(),
                            right: b.len(),
                        });
                    }
                    Ok(Ok(cosine_parts(dot(a, b), na, nb)?.value()))
                }
                Prepared::Iris(v) => match iris_score(v[ia], v[ib]) {
                    Ok(s) => Ok(Ok(s.value())),
                    Err(Error::FullyOccluded) => Ok(Err(Absent::Occluded)),
                    Err(e) => Err(e),
                },
            }
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    ScoreTable::from_rows(trait_kind, pairs, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureRecord;
    use crate::protocol::enumerate_pairs;
    use proptest::prelude::*;

    #[test]
    fn cosine_basics() {
        let v = [0.3f64, -1.7, 2.2];
        assert_eq!(cosine(&v, &v).unwrap().value(), 1.0);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap().value(), 0.0);
        assert!(matches!(
            cosine(&[1.0f64], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(cosine(&[0.0f64, 0.0], &[1.0, 2.0]), Err(Error::ZeroNorm));
    }

    #[test]
    fn cosine_reference_value() {
        // 32 / sqrt(14 * 77), evaluated in extended precision elsewhere:
        // 0.97463184619707627107...
        let s = cosine(&[1.0f64, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().value();
        assert!((s - 0.974_631_846_197_076_27).abs() < 1e-12);
    }

    fn iris(ratios: [f64; 4], subs: [Vec<f64>; 4]) -> IrisRecord<f64> {
        IrisRecord::new(SampleKey::new("S", "x"), subs, ratios).unwrap()
    }

    fn unit(angle: f64) -> Vec<f64> {
        vec![angle.cos(), angle.sin()]
    }

    #[test]
    fn iris_uniform_and_indicator_weights() {
        let a = iris([1.0; 4], [unit(0.0), unit(0.0), unit(0.0), unit(0.0)]);
        let b = iris([1.0; 4], [unit(0.1), unit(0.5), unit(1.0), unit(1.5)]);
        let sub: Vec<f64> = [0.1f64, 0.5, 1.0, 1.5].iter().map(|t| t.cos()).collect();
        let s = iris_score(&a, &b).unwrap().value();
        assert!((s - sub.iter().sum::<f64>() / 4.0).abs() < 1e-15);

        let a2 = iris([1.0, 1.0, 0.0, 0.0], a.subvectors().clone());
        let b2 = iris([1.0, 1.0, 0.0, 0.0], b.subvectors().clone());
        let s = iris_score(&a2, &b2).unwrap().value();
        assert!((s - (sub[0] + sub[1]) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn iris_weighted_example() {
        let s = aggregate_iris([0.8, 0.6, 0.4, 0.2], [0.9, 0.5, 0.1, 0.0]).unwrap().value();
        assert!((s - (0.72 + 0.30 + 0.04) / 1.5).abs() < 1e-12);
        assert_eq!(aggregate_iris([0.8; 4], [0.0; 4]), Err(Error::FullyOccluded));
    }

    #[test]
    fn iris_fully_occluded() {
        let a = iris([0.0, 1.0, 0.0, 1.0], [unit(0.0), unit(0.0), unit(0.0), unit(0.0)]);
        let b = iris([1.0, 0.0, 1.0, 0.0], [unit(0.0), unit(0.0), unit(0.0), unit(0.0)]);
        assert_eq!(iris_score(&a, &b), Err(Error::FullyOccluded));
    }

    fn toy_dataset() -> Dataset<f64> {
        let mut ds = Dataset::new();
        let vecs = [
            ("A", "1", [1.0, 0.2, 0.0]),
            ("A", "2", [0.9, 0.1, 0.1]),
            ("B", "1", [0.0, 1.0, 0.3]),
            ("B", "2", [0.1, 0.8, 0.2]),
            ("C", "1", [0.2, 0.1, 1.0]),
            ("C", "2", [0.3, 0.0, 0.9]),
        ];
        let recs = vecs
            .iter()
            .map(|(s, n, v)| {
                FeatureRecord::new(SampleKey::new(*s, *n), TraitKind::Nose, v.to_vec()).unwrap()
            })
            .collect();
        ds.insert(TraitKind::Nose, TraitFeatures::plain(TraitKind::Nose, recs).unwrap())
            .unwrap();
        ds
    }

    #[test]
    fn table_matches_double_loop() {
        let ds = toy_dataset();
        let keys = ds.sample_keys();
        let pairs: Arc<[Pair]> = enumerate_pairs(&keys).into();
        let t = score_table(&ds, TraitKind::Nose, pairs.clone()).unwrap();
        assert_eq!(t.len(), 15);
        let TraitFeatures::Plain(map) = ds.get(TraitKind::Nose).unwrap() else {
            unreachable!()
        };
        // naive oracle: plain loops, no pairwise summation
        let mut row = 0;
        let recs: Vec<_> = map.values().collect();
        for i in 0..recs.len() {
            for j in i + 1..recs.len() {
                let (u, v) = (recs[i].vector(), recs[j].vector());
                let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!((t.scores()[row].unwrap() - d / (nu * nv)).abs() < 1e-14);
                assert_eq!(t.pairs()[row].genuine, recs[i].key.subject_id == recs[j].key.subject_id);
                row += 1;
            }
        }
    }

    #[test]
    fn table_thread_count_invariant() {
        let ds = toy_dataset();
        let pairs: Arc<[Pair]> = enumerate_pairs(&ds.sample_keys()).into();
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| score_table(&ds, TraitKind::Nose, pairs.clone()).unwrap())
        };
        let one = run(1);
        let many = run(4);
        let bits = |t: &ScoreTable| t.scores().iter().map(|s| s.unwrap().to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&many));
    }

    #[test]
    fn missing_and_unknown_keys() {
        let mut ds = toy_dataset();
        let face = TraitFeatures::plain(
            TraitKind::Face,
            vec![
                FeatureRecord::new(SampleKey::new("A", "1"), TraitKind::Face, vec![1.0, 0.0]).unwrap(),
                FeatureRecord::new(SampleKey::new("A", "2"), TraitKind::Face, vec![1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        ds.insert(TraitKind::Face, face).unwrap();
        let pairs: Arc<[Pair]> = enumerate_pairs(&ds.sample_keys()).into();
        let t = score_table(&ds, TraitKind::Face, pairs).unwrap();
        assert_eq!(t.scores()[0], Some(1.0));
        assert_eq!(t.missing_count(), 14);
        assert_eq!(t.absent_count(), 14);

        let stranger: Arc<[Pair]> =
            vec![Pair::new(SampleKey::new("A", "1"), SampleKey::new("Q", "9")).unwrap()].into();
        assert!(matches!(
            score_table(&ds, TraitKind::Nose, stranger),
            Err(Error::DataIntegrity(_))
        ));
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 1..40),
            seed in prop::collection::vec(-10.0f64..10.0, 40),
        ) {
            let v = &seed[..u.len()];
            prop_assume!(u.iter().any(|x| *x != 0.0) && v.iter().any(|x| *x != 0.0));
            let s = cosine(&u, v).unwrap().value();
            prop_assert_eq!(s.to_bits(), cosine(v, &u).unwrap().value().to_bits());
            for alpha in [1e-6, 1.0, 1e6] {
                let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
                prop_assert!((cosine(&scaled, v).unwrap().value() - s).abs() < 1e-12);
            }
        }

        #[test]
        fn iris_score_is_convex(
            sub in prop::array::uniform4(-1.0f64..1.0),
            w in prop::array::uniform4(0.0f64..1.0),
        ) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let s = aggregate_iris(sub, w).unwrap().value();
            let pos: Vec<f64> = (0..4).filter(|&i| w[i] > 0.0).map(|i| sub[i]).collect();
            let lo = pos.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = pos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= s && s <= hi);
        }
    }
}
