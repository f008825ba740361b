//! Canonical feature file format.
//!
//! ```text
//! {"trait":"nose","dim":3,"count":2,"subimages":1}
//! S4000,01,0000803f,00000000,000000bf
//! S4000,02,...
//! ```
//!
//! The first line is a JSON header. Each following line is one record:
//! `subject_id,sample_id`, then `dim` (or `4 * dim` for iris) values, each the
//! little-endian bytes of an IEEE-754 `f32` written as 8 lowercase hex digits.
//! Iris records end with 4 decimal mask ratios. A header with
//! `"encoding":"decimal"` switches the vector values to plain decimal floats.
//! Records are written in sorted key order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureRecord, IrisRecord, SampleKey, TraitFeatures, TraitKind};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Hex,
    Decimal,
}

impl Encoding {
    fn is_hex(&self) -> bool {
        *self == Encoding::Hex
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureHeader {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    pub dim: usize,
    pub count: usize,
    pub subimages: usize,
    #[serde(default, skip_serializing_if = "Encoding::is_hex")]
    pub encoding: Encoding,
}

fn parse_err(line: usize, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

/// Encodes one `f32` as the hex of its little-endian bytes.
pub fn encode_f32(x: f32) -> String {
    let mut s = String::with_capacity(8);
    for b in x.to_le_bytes() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn decode_f32(s: &str) -> Option<f32> {
    if s.len() != 8 || !s.is_ascii() {
        return None;
    }
    let mut bytes = [0u8; 4];
    for (i, b) in bytes.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(f32::from_le_bytes(bytes))
}

/// Parses a feature file.
pub fn read_features<T: Scalar>(text: &str) -> Result<(FeatureHeader, TraitFeatures<T>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| parse_err(1, "header", "empty file"))?;
    let header: FeatureHeader = serde_json::from_str(header_line.trim())
        .map_err(|e| parse_err(1, "header", e.to_string()))?;
    let expected_sub = if header.trait_kind.is_iris() { 4 } else { 1 };
    if header.subimages != expected_sub {
        return Err(parse_err(
            1,
            "subimages",
            format!(
                "trait {} needs subimages = {expected_sub}, got {}",
                header.trait_kind, header.subimages
            ),
        ));
    }
    if header.dim == 0 {
        return Err(parse_err(1, "dim", "dimension must be at least 1"));
    }

    let n_values = header.dim * header.subimages;
    let n_fields = 2 + n_values + if header.trait_kind.is_iris() { 4 } else { 0 };
    let mut plain = Vec::new();
    let mut iris = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_fields {
            return Err(parse_err(
                lineno,
                "record",
                format!("expected {n_fields} fields, found {}", fields.len()),
            ));
        }
        let subject = fields[0].trim();
        let sample = fields[1].trim();
        if subject.is_empty() {
            return Err(parse_err(lineno, "subject_id", "empty"));
        }
        if sample.is_empty() {
            return Err(parse_err(lineno, "sample_id", "empty"));
        }
        let key = SampleKey::new(subject, sample);
        let mut values = Vec::with_capacity(n_values);
        for (j, raw) in fields[2..2 + n_values].iter().enumerate() {
            let v = match header.encoding {
                Encoding::Hex => decode_f32(raw.trim()).map(f64::from),
                Encoding::Decimal => raw.trim().parse::<f64>().ok(),
            }
            .ok_or_else(|| parse_err(lineno, format!("value[{j}]"), format!("bad float `{raw}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("value[{j}]"), "non-finite value"));
            }
            values.push(T::from_f64_lossy(v));
        }
        let wrap = |e: Error| parse_err(lineno, "vector", e.to_string());
        if header.trait_kind.is_iris() {
            let mut ratios = [0.0; 4];
            for (j, raw) in fields[2 + n_values..].iter().enumerate() {
                ratios[j] = raw.trim().parse::<f64>().map_err(|_| {
                    parse_err(lineno, format!("mask_ratio[{j}]"), format!("bad ratio `{raw}`"))
                })?;
                if !(0.0..=1.0).contains(&ratios[j]) {
                    return Err(parse_err(
                        lineno,
                        format!("mask_ratio[{j}]"),
                        "outside [0, 1]",
                    ));
                }
            }
            let d = header.dim;
            let subs = [
                values[0..d].to_vec(),
                values[d..2 * d].to_vec(),
                values[2 * d..3 * d].to_vec(),
                values[3 * d..].to_vec(),
            ];
            iris.push(IrisRecord::new(key, subs, ratios).map_err(wrap)?);
        } else {
            plain.push(FeatureRecord::new(key, header.trait_kind, values).map_err(wrap)?);
        }
    }

    let found = plain.len() + iris.len();
    if found != header.count {
        return Err(parse_err(
            1,
            "count",
            format!("header declares {} records, found {found}", header.count),
        ));
    }
    let features = if header.trait_kind.is_iris() {
        TraitFeatures::iris(iris)
    } else {
        TraitFeatures::plain(header.trait_kind, plain)
    }
    .map_err(|e| parse_err(0, "records", e.to_string()))?;
    Ok((header, features))
}

fn push_value(out: &mut String, x: f64, encoding: Encoding) {
    out.push(',');
    match encoding {
        Encoding::Hex => out.push_str(&encode_f32(x as f32)),
        Encoding::Decimal => {
            let _ = write!(out, "{}", x as f32);
        }
    }
}

/// Serializes a trait collection. Values are narrowed to `f32`.
pub fn write_features<T: Scalar>(
    trait_kind: TraitKind,
    features: &TraitFeatures<T>,
    encoding: Encoding,
) -> Result<String> {
    let dim = features.dim().unwrap_or(1);
    let header = FeatureHeader {
        trait_kind,
        dim,
        count: features.len(),
        subimages: if trait_kind.is_iris() { 4 } else { 1 },
        encoding,
    };
    let mut out = serde_json::to_string(&header).map_err(|e| Error::Ingest(e.to_string()))?;
    out.push('\n');
    match features {
        TraitFeatures::Plain(map) => {
            if trait_kind.is_iris() {
                return Err(Error::Ingest("iris trait needs iris records".into()));
            }
            for rec in map.values() {
                let _ = write!(out, "{},{}", rec.key.subject_id, rec.key.sample_id);
                for &x in rec.vector() {
                    push_value(&mut out, x.to_f64_lossless(), encoding);
                }
                out.push('\n');
            }
        }
        TraitFeatures::Iris(map) => {
            if !trait_kind.is_iris() {
                return Err(Error::Ingest(format!("trait {trait_kind} cannot hold iris records")));
            }
            for rec in map.values() {
                let _ = write!(out, "{},{}", rec.key.subject_id, rec.key.sample_id);
                for sub in rec.subvectors() {
                    for &x in sub {
                        push_value(&mut out, x.to_f64_lossless(), encoding);
                    }
                }
                for m in rec.mask_ratios() {
                    let _ = write!(out, ",{m}");
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}
