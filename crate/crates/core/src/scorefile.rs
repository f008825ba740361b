//! Score table CSV.
//!
//! Header `trait,subject_a,sample_a,subject_b,sample_b,genuine,score`; one
//! row per protocol pair in protocol order; `genuine` is `1` or `0`; scores
//! carry 9 significant digits and an absent score is an empty field.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matching::{Absent, ScoreTable};
use crate::model::{SampleKey, TraitKind};
use crate::protocol::Pair;
use crate::scalar::format_sig;

pub const SCORE_HEADER: &str = "trait,subject_a,sample_a,subject_b,sample_b,genuine,score";

/// Significant digits for scores and rates in CSV outputs.
pub const CSV_DIGITS: usize = 9;

pub fn write_score_csv(table: &ScoreTable) -> String {
    let mut out = String::with_capacity(64 * (table.len() + 1));
    out.push_str(SCORE_HEADER);
    out.push('\n');
    let name = table.trait_kind.name();
    for (p, s) in table.pairs().iter().zip(table.scores()) {
        let _ = write!(
            out,
            "{name},{},{},{},{},{},",
            p.a.subject_id,
            p.a.sample_id,
            p.b.subject_id,
            p.b.sample_id,
            p.genuine as u8
        );
        if let Some(s) = s {
            out.push_str(&format_sig(*s, CSV_DIGITS));
        }
        out.push('\n');
    }
    out
}

fn err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

/// Parses a score CSV. An empty body yields an empty table of `expected`
/// trait; otherwise every row must name the same trait.
pub fn read_score_csv(text: &str, expected: Option<TraitKind>) -> Result<ScoreTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, h)) if h == SCORE_HEADER => {}
        Some((_, h)) => return Err(err(1, "header", format!("unexpected header `{h}`"))),
        None => return Err(err(1, "header", "empty file")),
    }
    let mut trait_kind = expected;
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err(n, "row", format!("expected 7 fields, found {}", f.len())));
        }
        let t: TraitKind = f[0].parse().map_err(|_| err(n, "trait", format!("unknown trait `{}`", f[0])))?;
        match trait_kind {
            None => trait_kind = Some(t),
            Some(k) if k != t => {
                return Err(err(n, "trait", format!("expected {k}, found {t}")));
            }
            _ => {}
        }
        let a = SampleKey::new(f[1], f[2]);
        let b = SampleKey::new(f[3], f[4]);
        let genuine = match f[5] {
            "1" => true,
            "0" => false,
            other => return Err(err(n, "genuine", format!("expected 0 or 1, found `{other}`"))),
        };
        let pair = Pair::new(a.clone(), b.clone()).ok_or_else(|| err(n, "sample_b", "self-pair"))?;
        if pair.a != a {
            return Err(err(n, "subject_a", "pair keys not in canonical order"));
        }
        if pair.genuine != genuine {
            return Err(err(n, "genuine", "flag contradicts subject ids"));
        }
        let row = if f[6].is_empty() {
            Err(Absent::Missing)
        } else {
            let v: f64 = f[6]
                .parse()
                .map_err(|_| err(n, "score", format!("bad score `{}`", f[6])))?;
            if !v.is_finite() {
                return Err(err(n, "score", "non-finite score"));
            }
            Ok(v)
        };
        pairs.push(pair);
        rows.push(row);
    }
    let trait_kind = trait_kind.ok_or_else(|| err(1, "trait", "cannot infer trait of an empty score file"))?;
    ScoreTable::from_rows(trait_kind, Arc::from(pairs), rows)
}
