//! Subject-disjoint splits and genuine/impostor pair enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SampleKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Inclusive lexicographic interval of subject IDs, written `first..last`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectRange {
    pub first: String,
    pub last: String,
    pub split: Split,
}

impl SubjectRange {
    pub fn new(first: impl Into<String>, last: impl Into<String>, split: Split) -> Result<Self> {
        let (first, last) = (first.into(), last.into());
        if first.is_empty() || last.is_empty() {
            return Err(Error::Config("empty subject range bound".into()));
        }
        if first > last {
            return Err(Error::Config(format!(
                "subject range {first}..{last} is empty"
            )));
        }
        Ok(SubjectRange { first, last, split })
    }

    /// Parses `"S4000..S4083"`; a bare ID is a single-subject range.
    pub fn parse(range: &str, split: Split) -> Result<Self> {
        match range.split_once("..") {
            Some((a, b)) => SubjectRange::new(a.trim(), b.trim(), split),
            None => SubjectRange::new(range.trim(), range.trim(), split),
        }
    }

    pub fn contains(&self, subject: &str) -> bool {
        self.first.as_str() <= subject && subject <= self.last.as_str()
    }

    fn overlaps(&self, other: &SubjectRange) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

impl fmt::Display for SubjectRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Serialized form of a [`SubjectRange`]: `{"range": "S4000..S4083", "split": "train"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub range: String,
    pub split: Split,
}

impl SplitSpec {
    pub fn to_range(&self) -> Result<SubjectRange> {
        SubjectRange::parse(&self.range, self.split)
    }
}

impl From<&SubjectRange> for SplitSpec {
    fn from(r: &SubjectRange) -> Self {
        SplitSpec {
            range: r.to_string(),
            split: r.split,
        }
    }
}

/// Subject → split map.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    subjects: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn split_of(&self, subject: &str) -> Option<Split> {
        self.subjects.get(subject).copied()
    }

    /// Subjects of one split, sorted.
    pub fn subjects(&self, split: Split) -> Vec<&str> {
        self.subjects
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Keys whose subject belongs to `split`, sorted and deduplicated.
    pub fn keys_in<'a, I>(&self, split: Split, keys: I) -> Vec<SampleKey>
    where
        I: IntoIterator<Item = &'a SampleKey>,
    {
        let set: BTreeSet<&SampleKey> = keys
            .into_iter()
            .filter(|k| self.split_of(&k.subject_id) == Some(split))
            .collect();
        set.into_iter().cloned().collect()
    }
}

/// Assigns every subject in `keys` to the split of the range that contains it.
pub fn split_by_subject<'a, I>(keys: I, ranges: &[SubjectRange]) -> Result<SplitAssignment>
where
    I: IntoIterator<Item = &'a SampleKey>,
{
    for (i, a) in ranges.iter().enumerate() {
        for b in &ranges[i + 1..] {
            if a.overlaps(b) {
                return Err(Error::Config(format!("subject ranges {a} and {b} overlap")));
            }
        }
    }
    let subjects: BTreeSet<&str> = keys.into_iter().map(|k| k.subject_id.as_str()).collect();
    let mut out = BTreeMap::new();
    for s in subjects {
        let range = ranges
            .iter()
            .find(|r| r.contains(s))
            .ok_or_else(|| Error::Ingest(format!("subject {s} is not covered by any split range")))?;
        out.insert(s.to_string(), range.split);
    }
    Ok(SplitAssignment { subjects: out })
}

/// An unordered sample pair, stored with the smaller key first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub a: SampleKey,
    pub b: SampleKey,
    pub genuine: bool,
}

impl Pair {
    /// Canonicalizes operand order. Returns `None` for a self-pair.
    pub fn new(x: SampleKey, y: SampleKey) -> Option<Pair> {
        let (a, b) = match x.cmp(&y) {
            std::cmp::Ordering::Less => (x, y),
            std::cmp::Ordering::Greater => (y, x),
            std::cmp::Ordering::Equal => return None,
        };
        let genuine = a.same_subject(&b);
        Some(Pair { a, b, genuine })
    }
}

/// All `C(n, 2)` unordered pairs over the distinct keys, in lexicographic
/// order on `(a, b)`.
pub fn enumerate_pairs<'a, I>(keys: I) -> Vec<Pair>
where
    I: IntoIterator<Item = &'a SampleKey>,
{
    let sorted: Vec<&SampleKey> = keys.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let n = sorted.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            pairs.push(Pair {
                a: (*a).clone(),
                b: (*b).clone(),
                genuine: a.same_subject(b),
            });
        }
    }
    pairs
}

/// Split assignment plus the pair list of every split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub assignment: SplitAssignment,
    pairs: BTreeMap<Split, Vec<Pair>>,
}

impl EvalProtocol {
    pub fn build(keys: &[SampleKey], ranges: &[SubjectRange]) -> Result<Self> {
        let assignment = split_by_subject(keys, ranges)?;
        let pairs = Split::ALL
            .into_iter()
            .map(|s| (s, enumerate_pairs(&assignment.keys_in(s, keys))))
            .collect();
        Ok(EvalProtocol { assignment, pairs })
    }

    pub fn pairs(&self, split: Split) -> &[Pair] {
        self.pairs.get(&split).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `(genuine, impostor)` counts of a split.
    pub fn counts(&self, split: Split) -> (usize, usize) {
        let pairs = self.pairs(split);
        let g = pairs.iter().filter(|p| p.genuine).count();
        (g, pairs.len() - g)
    }
}
