//! Table rendering: percentages with 3 decimals, one weight column per trait
//! with `---` for traits outside the combination, fusion rows grouped by
//! combination size.

use std::fmt::Write as _;

use fusebench_core::metrics::far_percent_label;
use fusebench_core::{SweepResult, TraitKind};

use crate::output::{EvaluationFile, MetricsJson, Selection, WeightsJson};

pub const EXCLUDED: &str = "---";

pub fn pct(rate: f64) -> String {
    format!("{:.3}", rate * 100.0)
}

/// Decimals needed to print multiples of `step` exactly; at least 1.
pub fn weight_decimals(step: f64) -> usize {
    (1..=9)
        .find(|&d| {
            let scaled = step * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(9)
}

fn weight_cell(w: Option<f64>, decimals: usize) -> String {
    match w {
        Some(v) if v > 0.0 => format!("{v:.decimals$}"),
        _ => EXCLUDED.to_string(),
    }
}

pub fn far_header(target: f64) -> String {
    format!("FRR@FAR{}%", far_percent_label(target))
}

pub fn far_column(target: f64) -> String {
    format!("frr_far_{}_pct", far_percent_label(target))
}

pub fn group_name(size: usize) -> &'static str {
    match size {
        1 => "Singles",
        2 => "Pairs",
        3 => "Triples",
        4 => "Quadruples",
        _ => "Quintuple",
    }
}

fn metric_cells(m: &MetricsJson, targets: &[f64]) -> Vec<String> {
    let mut cells = vec![pct(m.eer)];
    for &t in targets {
        cells.push(m.frr(t).map(pct).unwrap_or_else(|| EXCLUDED.to_string()));
    }
    cells
}

fn weight_cells(w: &WeightsJson, decimals: usize) -> Vec<String> {
    TraitKind::ALL
        .iter()
        .map(|t| weight_cell(w.get(t).copied(), decimals))
        .collect()
}

fn csv_header(first: Option<&str>, targets: &[f64]) -> String {
    let mut cols: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    cols.extend(TraitKind::ALL.iter().map(|t| t.name().to_string()));
    cols.push("eer_pct".into());
    cols.extend(targets.iter().map(|&t| far_column(t)));
    cols.join(",")
}

/// Every evaluated weight vector in enumeration order.
pub fn sweep_csv(result: &SweepResult, targets: &[f64]) -> String {
    let decimals = weight_decimals(result.step);
    let mut out = csv_header(None, targets);
    out.push('\n');
    for e in &result.entries {
        let w: Vec<String> = TraitKind::ALL
            .iter()
            .map(|t| weight_cell(Some(e.weights.get(*t)), decimals))
            .collect();
        let mut cells = w;
        cells.push(pct(e.metrics.eer));
        for &t in targets {
            cells.push(e.metrics.frr_for(t).map(pct).unwrap_or_else(|| EXCLUDED.to_string()));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

enum Line {
    Heading(String),
    Cells(Vec<String>),
}

/// Fixed-width text table; the first column is left-aligned when `label_col`.
struct TextTable {
    header: Vec<String>,
    lines: Vec<Line>,
    label_col: bool,
}

impl TextTable {
    fn new(header: Vec<String>, label_col: bool) -> Self {
        TextTable {
            header,
            lines: Vec::new(),
            label_col,
        }
    }

    fn heading(&mut self, s: &str) {
        self.lines.push(Line::Heading(s.to_string()));
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.lines.push(Line::Cells(cells));
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for l in &self.lines {
            if let Line::Cells(c) = l {
                for (w, s) in widths.iter_mut().zip(c) {
                    *w = (*w).max(s.len());
                }
            }
        }
        let fmt_row = |cells: &[String]| -> String {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (s, &w))| {
                    if i == 0 && self.label_col {
                        format!("{s:<w$}")
                    } else {
                        format!("{s:>w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        out.push_str(&fmt_row(&self.header));
        out.push('\n');
        for l in &self.lines {
            match l {
                Line::Heading(h) => {
                    out.push_str(h);
                    out.push('\n');
                }
                Line::Cells(c) => {
                    out.push_str(&fmt_row(c));
                    out.push('\n');
                }
            }
        }
    }
}

fn metric_headers(targets: &[f64]) -> Vec<String> {
    let mut h = vec!["EER (%)".to_string()];
    h.extend(targets.iter().map(|&t| format!("{} (%)", far_header(t))));
    h
}

fn trait_list(traits: &[TraitKind]) -> String {
    traits.iter().map(|t| t.name()).collect::<Vec<_>>().join("+")
}

/// Text report and its CSV twin.
pub fn report(ev: &EvaluationFile) -> (String, String) {
    let targets = &ev.far_targets;
    let decimals = weight_decimals(ev.step);
    let mut txt = String::new();
    let mut csv = csv_header(Some("section"), targets);
    csv.push('\n');
    let mut csv_row = |section: &str, weights: Vec<String>, metrics: Vec<String>| {
        let mut cells = vec![section.to_string()];
        cells.extend(weights);
        cells.extend(metrics);
        csv.push_str(&cells.join(","));
        csv.push('\n');
    };

    let how = match ev.selection {
        Selection::Sweep => format!(
            "weights selected on {} by {} (step {})",
            ev.selection_split, ev.criterion, ev.step
        ),
        Selection::Fixed => "weights fixed by configuration".to_string(),
    };
    let _ = writeln!(txt, "fusebench report ({})", ev.schema);
    let _ = writeln!(txt, "{how}; metrics on {}", ev.split);
    txt.push('\n');

    txt.push_str("Single traits\n");
    let mut header = vec!["Trait".to_string()];
    header.extend(metric_headers(targets));
    let mut singles = TextTable::new(header, true);
    for s in &ev.singles {
        let mut cells = vec![s.trait_kind.title().to_string()];
        let m = metric_cells(&s.metrics, targets);
        cells.extend(m.iter().cloned());
        singles.row(cells);
        let mut w = WeightsJson::new();
        w.insert(s.trait_kind, 1.0);
        csv_row("single", weight_cells(&w, decimals), m);
    }
    singles.render(&mut txt);
    txt.push('\n');

    txt.push_str("Score-level fusion\n");
    let mut header: Vec<String> = TraitKind::ALL.iter().map(|t| t.title().to_string()).collect();
    header.extend(metric_headers(targets));
    let mut fusion = TextTable::new(header, false);
    let mut size = 0;
    for row in &ev.subsets {
        if row.traits.len() != size {
            size = row.traits.len();
            fusion.heading(group_name(size));
        }
        let w = weight_cells(&row.weights, decimals);
        let m = metric_cells(&row.metrics, targets);
        csv_row(&group_name(size).to_lowercase(), w.clone(), m.clone());
        fusion.row(w.into_iter().chain(m).collect());
    }
    fusion.heading("Selected");
    let w = weight_cells(&ev.selected.weights, decimals);
    let m = metric_cells(&ev.selected.metrics, targets);
    csv_row("selected", w.clone(), m.clone());
    fusion.row(w.into_iter().chain(m).collect());
    fusion.render(&mut txt);
    let c = &ev.selected.metrics.counts;
    let _ = writeln!(
        txt,
        "selected: genuine {}, impostor {}, excluded {}",
        c.genuine, c.impostor, c.excluded
    );

    if let Some(cat) = &ev.concat {
        txt.push('\n');
        let _ = writeln!(
            txt,
            "Feature-level baseline (untrained concatenation of {})",
            trait_list(&cat.traits)
        );
        let mut t = TextTable::new(metric_headers(targets), false);
        let m = metric_cells(&cat.metrics, targets);
        t.row(m.clone());
        t.render(&mut txt);
        let c = &cat.metrics.counts;
        let _ = writeln!(
            txt,
            "concat: genuine {}, impostor {}, excluded {}",
            c.genuine, c.impostor, c.excluded
        );
        let w: Vec<String> = TraitKind::ALL
            .iter()
            .map(|t| if cat.traits.contains(t) { "+".to_string() } else { EXCLUDED.to_string() })
            .collect();
        csv_row("concat", w, m);
    }
    (txt, csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(pct(0.00337), "0.337");
        assert_eq!(pct(0.02719), "2.719");
        assert_eq!(pct(1.0), "100.000");
        assert_eq!(weight_decimals(0.1), 1);
        assert_eq!(weight_decimals(0.25), 2);
        assert_eq!(weight_decimals(1.0), 1);
        assert_eq!(weight_cell(Some(0.5), 1), "0.5");
        assert_eq!(weight_cell(Some(0.0), 1), "---");
        assert_eq!(weight_cell(None, 1), "---");
        assert_eq!(far_header(0.0001), "FRR@FAR0.01%");
        assert_eq!(far_column(0.001), "frr_far_0.1_pct");
    }

    #[test]
    fn groups() {
        let names: Vec<&str> = (1..=5).map(group_name).collect();
        assert_eq!(names, ["Singles", "Pairs", "Triples", "Quadruples", "Quintuple"]);
    }
}
