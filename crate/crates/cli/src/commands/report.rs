use std::path::Path;

use super::Outcome;
use crate::config::{read_text, write_file, Settings};
use crate::output::{from_json, EvaluationFile, EVALUATION_SCHEMA};
use crate::render::report;

pub fn run(s: &Settings, input: Option<&Path>) -> anyhow::Result<Outcome> {
    let path = input.map(Path::to_path_buf).unwrap_or_else(|| s.out.join("evaluation.json"));
    let ev: EvaluationFile = from_json(
        &read_text(&path)?,
        EVALUATION_SCHEMA,
        &format!("evaluation file `{}`", path.display()),
    )?;
    let (txt, csv) = report(&ev);
    write_file(&s.out.join("report.txt"), &txt)?;
    write_file(&s.out.join("report.csv"), &csv)?;
    print!("{txt}");
    Ok(Outcome::Clean)
}
