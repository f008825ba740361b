//! Score-level fusion: weighted sums on the probability simplex, exhaustive
//! weight sweeps, and the untrained feature-concatenation baseline.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matching::{cosine, ScoreTable};
use crate::metrics::{evaluate, far_percent_label, MetricsSummary};
use crate::model::{Dataset, SampleKey, TraitFeatures, TraitKind};
use crate::protocol::Pair;
use crate::scalar::pairwise_sum;
use crate::Scalar;

/// One nonnegative weight per trait, in canonical order, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights<T> {
    values: [T; TraitKind::COUNT],
}

impl<T: Scalar> FusionWeights<T> {
    /// Tolerance on `|sum - 1|`: `1e-9`, widened to a few ulps for `f32`.
    pub fn sum_tolerance() -> f64 {
        (16.0 * T::epsilon().to_f64_lossless()).max(1e-9)
    }

    pub fn new(values: [T; TraitKind::COUNT]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Config(
                "fusion weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().map(|v| v.to_f64_lossless()).sum();
        if (sum - 1.0).abs() > Self::sum_tolerance() {
            return Err(Error::Config(format!("fusion weights sum to {sum}, not 1")));
        }
        Ok(FusionWeights { values })
    }

    /// Builds weights from `(trait, weight)` pairs; unnamed traits get 0.
    pub fn from_pairs(pairs: &[(TraitKind, T)]) -> Result<Self> {
        let mut values = [T::zero(); TraitKind::COUNT];
        let mut seen = [false; TraitKind::COUNT];
        for &(t, w) in pairs {
            if std::mem::replace(&mut seen[t.index()], true) {
                return Err(Error::Config(format!("weight for {t} given twice")));
            }
            values[t.index()] = w;
        }
        Self::new(values)
    }

    pub fn one_hot(trait_kind: TraitKind) -> Self {
        let mut values = [T::zero(); TraitKind::COUNT];
        values[trait_kind.index()] = T::one();
        FusionWeights { values }
    }

    pub fn get(&self, trait_kind: TraitKind) -> T {
        self.values[trait_kind.index()]
    }

    pub fn values(&self) -> &[T; TraitKind::COUNT] {
        &self.values
    }

    /// Traits with positive weight.
    pub fn support(&self) -> Vec<TraitKind> {
        TraitKind::ALL
            .into_iter()
            .filter(|t| self.get(*t) > T::zero())
            .collect()
    }

    /// Lexicographic order in canonical trait order.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.values.iter().zip(&other.values) {
            match a.partial_cmp(b) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        Ordering::Equal
    }
}

impl<T: Scalar> fmt::Display for FusionWeights<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = TraitKind::ALL
            .iter()
            .map(|t| format!("{}={}", t.name(), self.get(*t)))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Weighted sum of the per-trait scores. Only positively weighted traits are
/// read; an absent score among them fails with [`Error::MissingScore`].
pub fn fuse<T: Scalar>(scores: &[Option<f64>; TraitKind::COUNT], weights: &FusionWeights<T>) -> Result<f64> {
    let mut total = 0.0;
    for t in TraitKind::ALL {
        let w = weights.get(t);
        if w > T::zero() {
            let s = scores[t.index()].ok_or(Error::MissingScore(t))?;
            total += w.to_f64_lossless() * s;
        }
    }
    Ok(total)
}

/// Row-aligned score tables, at most one per trait.
#[derive(Debug, Clone)]
pub struct TraitTables {
    pairs: Arc<[Pair]>,
    tables: [Option<ScoreTable>; TraitKind::COUNT],
}

impl TraitTables {
    pub fn new(tables: Vec<ScoreTable>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Protocol("no score tables".into()))?;
        let pairs = first.pairs().clone();
        let mut slots: [Option<ScoreTable>; TraitKind::COUNT] = Default::default();
        for t in tables {
            if !(Arc::ptr_eq(t.pairs(), &pairs) || **t.pairs() == *pairs) {
                return Err(Error::Protocol(format!(
                    "score table for {} is not aligned with the others",
                    t.trait_kind
                )));
            }
            let idx = t.trait_kind.index();
            if slots[idx].is_some() {
                return Err(Error::Protocol(format!("two score tables for {}", t.trait_kind)));
            }
            slots[idx] = Some(t);
        }
        Ok(TraitTables {
            pairs,
            tables: slots,
        })
    }

    pub fn pairs(&self) -> &Arc<[Pair]> {
        &self.pairs
    }

    pub fn get(&self, t: TraitKind) -> Option<&ScoreTable> {
        self.tables[t.index()].as_ref()
    }

    /// Traits with a table, canonical order.
    pub fn traits(&self) -> Vec<TraitKind> {
        TraitKind::ALL
            .into_iter()
            .filter(|t| self.get(*t).is_some())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Fused genuine and impostor scores of one weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedScores {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
    /// Pairs dropped because a positively weighted trait had no score.
    pub excluded: usize,
}

pub fn fuse_tables<T: Scalar>(tables: &TraitTables, weights: &FusionWeights<T>) -> Result<FusedScores> {
    let support = weights.support();
    for t in &support {
        if tables.get(*t).is_none() {
            return Err(Error::Config(format!("weight on {t} but no {t} scores loaded")));
        }
    }
    let mut out = FusedScores {
        genuine: Vec::new(),
        impostor: Vec::new(),
        excluded: 0,
    };
    for (row, pair) in tables.pairs().iter().enumerate() {
        let mut scores = [None; TraitKind::COUNT];
        for t in &support {
            scores[t.index()] = tables.get(*t).and_then(|tab| tab.scores()[row]);
        }
        match fuse(&scores, weights) {
            Ok(s) if pair.genuine => out.genuine.push(s),
            Ok(s) => out.impostor.push(s),
            Err(Error::MissingScore(_)) => out.excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Every weight vector on the grid `{0, step, ..., 1}` over `active`
/// (other traits fixed at 0) that sums to 1, in ascending lexicographic order.
pub fn enumerate_simplex<T: Scalar>(step: f64, active: &[TraitKind]) -> Result<Vec<FusionWeights<T>>> {
    let k = grid_divisions(step)?;
    let mut active: Vec<TraitKind> = active.to_vec();
    active.sort();
    active.dedup();
    if active.is_empty() {
        return Err(Error::Config("no active traits to fuse".into()));
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; active.len()];
    compositions(k, 0, &mut counts, &mut |c| {
        let mut values = [T::zero(); TraitKind::COUNT];
        for (t, &n) in active.iter().zip(c) {
            values[t.index()] = T::from_f64_lossy(n as f64 / k as f64);
        }
        out.push(FusionWeights { values });
    });
    Ok(out)
}

/// `1 / step` as an integer, or a config error.
pub fn grid_divisions(step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!("sweep step {step} must be in (0, 1]")));
    }
    let k = (1.0 / step).round();
    if (k * step - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("1 / step is not an integer for step {step}")));
    }
    Ok(k as usize)
}

fn compositions(remaining: usize, idx: usize, counts: &mut [usize], emit: &mut impl FnMut(&[usize])) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        emit(counts);
        return;
    }
    for n in 0..=remaining {
        counts[idx] = n;
        compositions(remaining - n, idx + 1, counts, emit);
    }
}

/// What the sweep minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Eer,
    /// FRR at the given FAR (fraction).
    FrrAtFar(f64),
}

impl Criterion {
    pub fn value(&self, m: &MetricsSummary) -> f64 {
        match *self {
            Criterion::Eer => m.eer,
            Criterion::FrrAtFar(t) => m.frr_for(t).unwrap_or(f64::INFINITY),
        }
    }

    pub fn target(&self) -> Option<f64> {
        match *self {
            Criterion::Eer => None,
            Criterion::FrrAtFar(t) => Some(t),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Criterion::Eer => f.write_str("eer"),
            Criterion::FrrAtFar(t) => write!(f, "frr_far_{}", far_percent_label(t)),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// `eer`, or `frr_far_<percent>` such as `frr_far_0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("eer") {
            return Ok(Criterion::Eer);
        }
        let pct = s
            .strip_prefix("frr_far_")
            .and_then(|p| p.parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("unknown criterion `{s}`")))?;
        let target = pct / 100.0;
        crate::metrics::check_target(target)?;
        Ok(Criterion::FrrAtFar(target))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub weights: FusionWeights<f64>,
    pub metrics: MetricsSummary,
    pub excluded: usize,
}

/// All evaluated weight vectors, in enumeration order, and the winner.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub selected: usize,
    pub criterion: Criterion,
    pub step: f64,
}

impl SweepResult {
    pub fn selected(&self) -> &SweepEntry {
        &self.entries[self.selected]
    }

    /// Best entry whose support lies inside `subset` (zero weights allowed).
    pub fn best_within(&self, subset: &[TraitKind]) -> Option<&SweepEntry> {
        let idx: Vec<usize> = (0..self.entries.len())
            .filter(|&i| {
                self.entries[i]
                    .weights
                    .support()
                    .iter()
                    .all(|t| subset.contains(t))
            })
            .collect();
        select(&self.entries, &idx, self.criterion).map(|i| &self.entries[i])
    }

    /// Best entry whose support is exactly `subset`: every listed trait has a
    /// positive weight and no other trait does.
    pub fn best_for_support(&self, subset: &[TraitKind]) -> Option<&SweepEntry> {
        let mut want = subset.to_vec();
        want.sort();
        want.dedup();
        let idx: Vec<usize> = (0..self.entries.len())
            .filter(|&i| self.entries[i].weights.support() == want)
            .collect();
        select(&self.entries, &idx, self.criterion).map(|i| &self.entries[i])
    }
}

fn select(entries: &[SweepEntry], candidates: &[usize], criterion: Criterion) -> Option<usize> {
    candidates.iter().copied().min_by(|&a, &b| {
        let (va, vb) = (
            criterion.value(&entries[a].metrics),
            criterion.value(&entries[b].metrics),
        );
        va.total_cmp(&vb)
            .then_with(|| entries[a].weights.lex_cmp(&entries[b].weights))
    })
}

/// Evaluates every simplex weight vector over `active` and picks the
/// minimizer of `criterion`; ties go to the lexicographically smallest
/// weights.
pub fn sweep(
    tables: &TraitTables,
    active: &[TraitKind],
    step: f64,
    criterion: Criterion,
    targets: &[f64],
) -> Result<SweepResult> {
    for t in active {
        if tables.get(*t).is_none() {
            return Err(Error::Protocol(format!("no score table for active trait {t}")));
        }
    }
    let mut targets = targets.to_vec();
    if let Some(t) = criterion.target() {
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    let grid = enumerate_simplex::<f64>(step, active)?;
    let entries = grid
        .into_par_iter()
        .map(|weights| {
            let fused = fuse_tables(tables, &weights)?;
            let report = evaluate(&fused.genuine, &fused.impostor, &targets)?;
            Ok(SweepEntry {
                weights,
                metrics: report.summary,
                excluded: fused.excluded,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..entries.len()).collect();
    let selected = select(&entries, &all, criterion).expect("grid is never empty");
    Ok(SweepResult {
        entries,
        selected,
        criterion,
        step,
    })
}

fn unit_f64<T: Scalar>(v: &[T]) -> Result<Vec<f64>> {
    let norm = pairwise_sum(0, v.len(), &|i| {
        let x = v[i].to_f64_lossless();
        x * x
    })
    .sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x.to_f64_lossless() / norm).collect())
}

/// Unit-normalizes each part, concatenates in canonical trait order, and
/// unit-normalizes the result.
pub fn concat_fuse<T: Scalar>(parts: &[(TraitKind, &[T])]) -> Result<Vec<T>> {
    let mut sorted: Vec<&(TraitKind, &[T])> = parts.iter().collect();
    sorted.sort_by_key(|(t, _)| *t);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Config("trait repeated in concatenation".into()));
    }
    if sorted.is_empty() {
        return Err(Error::Config("nothing to concatenate".into()));
    }
    let mut joined = Vec::new();
    for (_, v) in sorted {
        joined.extend(unit_f64(v)?);
    }
    Ok(unit_f64(&joined)?.into_iter().map(T::from_f64_lossy).collect())
}

/// One vector per trait for a sample; iris contributes its four unit-normalized
/// subvectors back to back.
fn trait_vector<T: Scalar>(features: &TraitFeatures<T>, key: &SampleKey) -> Result<Option<Vec<f64>>> {
    Ok(match features {
        TraitFeatures::Plain(m) => m
            .get(key)
            .map(|r| r.vector().iter().map(|x| x.to_f64_lossless()).collect()),
        TraitFeatures::Iris(m) => match m.get(key) {
            Some(r) => {
                let mut v = Vec::with_capacity(4 * r.dim());
                for sub in r.subvectors() {
                    v.extend(unit_f64(sub)?);
                }
                Some(v)
            }
            None => None,
        },
    })
}

/// Cosine scores of concatenated features: the untrained feature-level
/// baseline. Samples lacking any selected trait are excluded, along with
/// every pair that touches them.
pub fn concat_scores<T: Scalar>(dataset: &Dataset<T>, traits: &[TraitKind], pairs: &[Pair]) -> Result<FusedScores> {
    let mut cache: HashMap<&SampleKey, Option<Vec<f64>>> = HashMap::new();
    for p in pairs {
        for key in [&p.a, &p.b] {
            if cache.contains_key(key) {
                continue;
            }
            let mut parts = Vec::with_capacity(traits.len());
            let mut complete = true;
            for &t in traits {
                let f = dataset
                    .get(t)
                    .ok_or_else(|| Error::Config(format!("trait {t} not loaded")))?;
                match trait_vector(f, key)? {
                    Some(v) => parts.push((t, v)),
                    None => complete = false,
                }
            }
            let fused = if complete {
                let refs: Vec<(TraitKind, &[f64])> = parts.iter().map(|(t, v)| (*t, v.as_slice())).collect();
                Some(concat_fuse(&refs)?)
            } else {
                None
            };
            cache.insert(key, fused);
        }
    }
    let rows: Vec<Option<(bool, f64)>> = pairs
        .par_iter()
        .map(|p| match (&cache[&p.a], &cache[&p.b]) {
            (Some(a), Some(b)) => cosine(a, b).map(|s| Some((p.genuine, s.value()))),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = FusedScores {
        genuine: Vec::new(),
        impostor: Vec::new(),
        excluded: 0,
    };
    for r in rows {
        match r {
            Some((true, s)) => out.genuine.push(s),
            Some((false, s)) => out.impostor.push(s),
            None => out.excluded += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::Absent;
    use crate::model::SampleKey;
    use proptest::prelude::*;

    fn w(v: [f64; 5]) -> FusionWeights<f64> {
        FusionWeights::new(v).unwrap()
    }

    #[test]
    fn weights_validation() {
        assert!(FusionWeights::new([0.5, 0.5, 0.0, 0.0, 0.0]).is_ok());
        assert!(FusionWeights::new([0.5, 0.6, 0.0, 0.0, 0.0]).is_err());
        assert!(FusionWeights::new([1.5, -0.5, 0.0, 0.0, 0.0]).is_err());
        assert!(FusionWeights::<f32>::new([0.1, 0.3, 0.3, 0.3, 0.0]).is_ok());
        let fw = FusionWeights::from_pairs(&[(TraitKind::Face, 0.4), (TraitKind::Nose, 0.6)]).unwrap();
        assert_eq!(fw.support(), vec![TraitKind::Face, TraitKind::Nose]);
        assert!(FusionWeights::from_pairs(&[(TraitKind::Face, 0.5), (TraitKind::Face, 0.5)]).is_err());
    }

    #[test]
    fn fuse_examples() {
        let s = [Some(0.5), Some(0.1), None, Some(1.0), Some(0.2)];
        assert_eq!(fuse(&s, &FusionWeights::<f64>::one_hot(TraitKind::Nose)).unwrap(), 1.0);
        assert!((fuse(&s, &w([0.4, 0.0, 0.0, 0.6, 0.0])).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            fuse(&s, &w([0.0, 0.1, 0.3, 0.3, 0.3])),
            Err(Error::MissingScore(TraitKind::Iris))
        );
        // zero weight on an absent trait is fine
        assert!(fuse(&s, &w([0.5, 0.5, 0.0, 0.0, 0.0])).is_ok());
    }

    #[test]
    fn simplex_counts() {
        assert_eq!(enumerate_simplex::<f64>(1.0, &TraitKind::ALL).unwrap().len(), 5);
        assert_eq!(enumerate_simplex::<f64>(0.1, &TraitKind::ALL).unwrap().len(), 1001);
        let two = enumerate_simplex::<f64>(0.5, &[TraitKind::Nose, TraitKind::Face]).unwrap();
        let got: Vec<[f64; 5]> = two.iter().map(|w| *w.values()).collect();
        assert_eq!(
            got,
            vec![
                [0.0, 0.0, 0.0, 1.0, 0.0],
                [0.5, 0.0, 0.0, 0.5, 0.0],
                [1.0, 0.0, 0.0, 0.0, 0.0]
            ]
        );
        assert!(enumerate_simplex::<f64>(0.3, &TraitKind::ALL).is_err());
        assert!(enumerate_simplex::<f64>(0.0, &TraitKind::ALL).is_err());
        assert!(enumerate_simplex::<f64>(0.1, &[]).is_err());
        for fw in enumerate_simplex::<f32>(0.1, &TraitKind::ALL).unwrap() {
            assert!(FusionWeights::new(*fw.values()).is_ok());
        }
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("eer".parse::<Criterion>().unwrap(), Criterion::Eer);
        assert_eq!("frr_far_0.1".parse::<Criterion>().unwrap(), Criterion::FrrAtFar(0.001));
        assert_eq!("frr_far_0.01".parse::<Criterion>().unwrap(), Criterion::FrrAtFar(0.0001));
        assert_eq!(Criterion::FrrAtFar(0.0001).to_string(), "frr_far_0.01");
        assert!("auc".parse::<Criterion>().is_err());
        assert!("frr_far_150".parse::<Criterion>().is_err());
    }

    fn table(t: TraitKind, pairs: &Arc<[Pair]>, scores: &[Option<f64>]) -> ScoreTable {
        let rows = scores.iter().map(|s| s.ok_or(Absent::Missing)).collect();
        ScoreTable::from_rows(t, pairs.clone(), rows).unwrap()
    }

    fn pairs() -> Arc<[Pair]> {
        let k = |s: &str, n: &str| SampleKey::new(s, n);
        vec![
            Pair::new(k("A", "1"), k("A", "2")).unwrap(),
            Pair::new(k("A", "1"), k("B", "1")).unwrap(),
            Pair::new(k("A", "2"), k("B", "1")).unwrap(),
            Pair::new(k("B", "1"), k("B", "2")).unwrap(),
        ]
        .into()
    }

    #[test]
    fn fuse_tables_tallies_exclusions() {
        let p = pairs();
        let tabs = TraitTables::new(vec![
            table(TraitKind::Face, &p, &[Some(0.9), Some(0.1), None, Some(0.8)]),
            table(TraitKind::Nose, &p, &[Some(0.7), Some(0.3), Some(0.2), Some(0.6)]),
        ])
        .unwrap();
        let f = fuse_tables(&tabs, &w([0.5, 0.0, 0.0, 0.5, 0.0])).unwrap();
        assert_eq!(f.excluded, 1);
        assert_eq!(f.genuine.len(), 2);
        let nose = fuse_tables(&tabs, &FusionWeights::<f64>::one_hot(TraitKind::Nose)).unwrap();
        assert_eq!(nose.excluded, 0);
        assert_eq!(nose.impostor, vec![0.3, 0.2]);
        assert!(fuse_tables(&tabs, &FusionWeights::<f64>::one_hot(TraitKind::Iris)).is_err());
    }

    #[test]
    fn misaligned_tables() {
        let p = pairs();
        let q: Arc<[Pair]> = p[..3].to_vec().into();
        let r = TraitTables::new(vec![
            table(TraitKind::Face, &p, &[Some(0.1); 4]),
            table(TraitKind::Nose, &q, &[Some(0.1); 3]),
        ]);
        assert!(matches!(r, Err(Error::Protocol(_))));
        let dup = TraitTables::new(vec![
            table(TraitKind::Face, &p, &[Some(0.1); 4]),
            table(TraitKind::Face, &p, &[Some(0.1); 4]),
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn sweep_picks_separable_trait() {
        let p = pairs();
        let tabs = TraitTables::new(vec![
            // genuine rows 0 and 3; perfectly separable
            table(TraitKind::Nose, &p, &[Some(0.9), Some(0.1), Some(0.2), Some(0.8)]),
            table(TraitKind::Face, &p, &[Some(0.1), Some(0.9), Some(0.2), Some(0.3)]),
        ])
        .unwrap();
        let r = sweep(&tabs, &[TraitKind::Face, TraitKind::Nose], 0.1, Criterion::Eer, &[0.001]).unwrap();
        assert_eq!(r.entries.len(), 11);
        assert_eq!(r.selected().metrics.eer, 0.0);
        // several vectors reach EER 0; the smallest lexicographically has face = 0
        assert_eq!(r.selected().weights.get(TraitKind::Face), 0.0);
        let both = r.best_for_support(&[TraitKind::Nose, TraitKind::Face]).unwrap();
        assert_eq!(both.weights.support(), vec![TraitKind::Face, TraitKind::Nose]);
        assert_eq!(
            r.best_within(&[TraitKind::Face]).unwrap().weights,
            FusionWeights::one_hot(TraitKind::Face)
        );
        assert!(r.best_for_support(&[TraitKind::Iris]).is_none());
    }

    #[test]
    fn sweep_tie_break_identical_tables() {
        let p = pairs();
        let s = [Some(0.9), Some(0.4), Some(0.5), Some(0.3)];
        let tabs = TraitTables::new(vec![
            table(TraitKind::Periocular, &p, &s),
            table(TraitKind::Eyebrow, &p, &s),
        ])
        .unwrap();
        let r = sweep(&tabs, &[TraitKind::Periocular, TraitKind::Eyebrow], 0.25, Criterion::Eer, &[]).unwrap();
        let first = r.entries[0].metrics.eer;
        assert!(r.entries.iter().all(|e| e.metrics.eer == first));
        assert_eq!(*r.selected().weights.values(), [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn concat_single_and_orthogonal() {
        let v = [3.0f64, 4.0];
        assert_eq!(concat_fuse(&[(TraitKind::Nose, &v[..])]).unwrap(), vec![0.6, 0.8]);
        assert!(concat_fuse::<f64>(&[(TraitKind::Nose, &[0.0, 0.0][..])]).is_err());
        assert!(concat_fuse(&[(TraitKind::Nose, &v[..]), (TraitKind::Nose, &v[..])]).is_err());
    }

    proptest! {
        #[test]
        fn fuse_is_linear(
            s in prop::array::uniform5(-1.0f64..1.0),
            a in prop::array::uniform5(0.01f64..1.0),
            b in prop::array::uniform5(0.01f64..1.0),
            alpha in 0.0f64..1.0,
        ) {
            let norm = |v: [f64; 5]| {
                let t: f64 = v.iter().sum();
                FusionWeights::new(v.map(|x| x / t)).unwrap()
            };
            let (wa, wb) = (norm(a), norm(b));
            let mix = FusionWeights::new(std::array::from_fn(|i| alpha * wa.values()[i] + (1.0 - alpha) * wb.values()[i])).unwrap();
            let scores = s.map(Some);
            let lhs = fuse(&scores, &mix).unwrap();
            let rhs = alpha * fuse(&scores, &wa).unwrap() + (1.0 - alpha) * fuse(&scores, &wb).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn concat_cosine_is_mean_of_parts(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 4),
        ) {
            prop_assume!(raw.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6));
            let unit = |v: &[f64]| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect::<Vec<_>>()
            };
            let (a1, a2, b1, b2) = (unit(&raw[0]), unit(&raw[1]), unit(&raw[2]), unit(&raw[3]));
            let x = concat_fuse(&[(TraitKind::Face, &a1[..]), (TraitKind::Nose, &a2[..])]).unwrap();
            let y = concat_fuse(&[(TraitKind::Face, &b1[..]), (TraitKind::Nose, &b2[..])]).unwrap();
            let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
            let expected = (dot(&a1, &b1) + dot(&a2, &b2)) / 2.0;
            prop_assert!((cosine(&x, &y).unwrap().value() - expected).abs() < 1e-12);
        }
    }
}
