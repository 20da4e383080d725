//! Aggregated per-backend results rendered as a text table, CSV, or JSON.
//!
//! Rendering is a pure function of the report value, numbers shown to
//! three decimals in the text formats while JSON carries the exact
//! floats, so identical runs print identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{FailureRecord, RunManifest, ScoreRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSummary {
    pub backend_id: String,
    pub items: usize,
    pub failures: usize,
    pub bert_f1: f64,
    pub meteor: f64,
    pub bleu: f64,
    pub rouge1_f1: f64,
    pub perplexity: f64,
    /// Mean human rating; absent until someone has rated this backend.
    pub human: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub run_id: String,
    pub backends: Vec<BackendSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Output format for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format {other:?}; expected table, csv, or json")),
        }
    }
}

/// Folds score rows, failure rows, and human rating means into one
/// summary per backend. Backends appear in manifest order, then any id
/// present only in the score file, sorted.
pub fn build_report(
    manifest: &RunManifest,
    scores: &[ScoreRecord],
    failures: &[FailureRecord],
    human: &BTreeMap<String, f64>,
) -> MetricReport {
    let mut order: Vec<String> = manifest.backend_ids.clone();
    let mut extras: BTreeSet<String> = scores.iter().map(|s| s.backend_id.clone()).collect();
    for id in &order {
        extras.remove(id);
    }
    order.extend(extras);

    let mut notes = Vec::new();
    let mut backends = Vec::new();
    let mut story_sets: Vec<BTreeSet<&str>> = Vec::new();

    for backend_id in &order {
        let rows: Vec<&ScoreRecord> = scores
            .iter()
            .filter(|s| &s.backend_id == backend_id)
            .collect();
        let items = rows.len();
        let failures = failures
            .iter()
            .filter(|f| &f.backend_id == backend_id)
            .count();
        let mean = |f: &dyn Fn(&ScoreRecord) -> f64| -> f64 {
            if items == 0 {
                return 0.0;
            }
            rows.iter().map(|r| f(r)).sum::<f64>() / items as f64
        };
        if items == 0 {
            notes.push(format!("backend {backend_id} has no scored items"));
        }
        story_sets.push(rows.iter().map(|r| r.story_id.as_str()).collect());
        backends.push(BackendSummary {
            backend_id: backend_id.clone(),
            items,
            failures,
            bert_f1: mean(&|r| r.scores.bert.f1),
            meteor: mean(&|r| r.scores.meteor),
            bleu: mean(&|r| r.scores.bleu),
            rouge1_f1: mean(&|r| r.scores.rouge1.f1),
            perplexity: mean(&|r| r.scores.perplexity),
            human: human.get(backend_id).copied(),
        });
    }

    let scored_sets: Vec<&BTreeSet<&str>> =
        story_sets.iter().filter(|s| !s.is_empty()).collect();
    if scored_sets.windows(2).any(|w| w[0] != w[1]) {
        notes.push(
            "backends were scored on different story subsets; means are not directly comparable"
                .to_string(),
        );
    }

    MetricReport {
        run_id: manifest.run_id.clone(),
        backends,
        notes,
    }
}

pub fn render(report: &MetricReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report),
    }
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

fn human_cell(summary: &BackendSummary) -> String {
    summary.human.map(fmt3).unwrap_or_else(|| "-".to_string())
}

/// The six metric rows, top to bottom, with one value column per backend.
fn metric_rows(report: &MetricReport) -> Vec<(&'static str, Vec<String>)> {
    let col = |f: &dyn Fn(&BackendSummary) -> String| -> Vec<String> {
        report.backends.iter().map(f).collect()
    };
    vec![
        ("BERT", col(&|b| fmt3(b.bert_f1))),
        ("METEOR", col(&|b| fmt3(b.meteor))),
        ("BLEU", col(&|b| fmt3(b.bleu))),
        ("ROUGE", col(&|b| fmt3(b.rouge1_f1))),
        ("Perplexity", col(&|b| fmt3(b.perplexity))),
        ("Human Score", col(&human_cell)),
    ]
}

pub fn render_table(report: &MetricReport) -> String {
    let rows = metric_rows(report);
    let mut widths: Vec<usize> = report
        .backends
        .iter()
        .map(|b| b.backend_id.len())
        .collect();
    for (_, cells) in &rows {
        for (w, cell) in widths.iter_mut().zip(cells) {
            *w = (*w).max(cell.len());
        }
    }
    let label_width = rows
        .iter()
        .map(|(label, _)| label.len())
        .max()
        .unwrap_or(0)
        .max("metric".len());

    let mut out = String::new();
    let _ = writeln!(out, "run {}", report.run_id);
    let _ = write!(out, "{:<label_width$}", "metric");
    for (b, w) in report.backends.iter().zip(&widths) {
        let _ = write!(out, " | {:>w$}", b.backend_id);
    }
    out.push('\n');
    let _ = write!(out, "{}", "-".repeat(label_width));
    for w in &widths {
        let _ = write!(out, "-+-{}", "-".repeat(*w));
    }
    out.push('\n');
    for (label, cells) in &rows {
        let _ = write!(out, "{label:<label_width$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, " | {cell:>w$}");
        }
        out.push('\n');
    }

    out.push('\n');
    for b in &report.backends {
        let _ = writeln!(
            out,
            "{}: {} items scored, {} failures",
            b.backend_id, b.items, b.failures
        );
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

pub fn render_csv(report: &MetricReport) -> String {
    let mut out = String::from(
        "backend,bert_f1,meteor,bleu,rouge1_f1,perplexity,human_score,items,failures\n",
    );
    for b in &report.backends {
        let human = b.human.map(fmt3).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            b.backend_id,
            fmt3(b.bert_f1),
            fmt3(b.meteor),
            fmt3(b.bleu),
            fmt3(b.rouge1_f1),
            fmt3(b.perplexity),
            human,
            b.items,
            b.failures
        );
    }
    out
}

pub fn render_json(report: &MetricReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::RunManifest;
    use crate::metrics::{PrecisionRecallF1, ScoreSet};

    fn manifest(backend_ids: &[&str]) -> RunManifest {
        RunManifest {
            run_id: "abc123def456".into(),
            corpus_fingerprint: "f".repeat(64),
            stories: 4,
            train_stories: 2,
            test_stories: 2,
            backend_ids: backend_ids.iter().map(|s| s.to_string()).collect(),
            created_at: 0,
        }
    }

    fn score(story: &str, backend: &str, value: f64, perplexity: f64) -> ScoreRecord {
        let prf = PrecisionRecallF1 {
            precision: value,
            recall: value,
            f1: value,
        };
        ScoreRecord {
            story_id: story.into(),
            backend_id: backend.into(),
            scores: ScoreSet {
                bleu: value,
                rouge1: prf,
                rouge2: prf,
                rouge_l: prf,
                meteor: value,
                bert: prf,
                perplexity,
                flags: Vec::new(),
            },
        }
    }

    #[test]
    fn means_and_rounding() {
        let m = manifest(&["a"]);
        let scores = vec![
            score("s1", "a", 0.2, 140.0), // perplexities average to 140.0536
            score("s2", "a", 0.4, 140.1072),
        ];
        let report = build_report(&m, &scores, &[], &BTreeMap::new());
        assert_eq!(report.backends.len(), 1);
        let b = &report.backends[0];
        assert_eq!(b.items, 2);
        assert!((b.bleu - 0.3).abs() < 1e-12);
        assert_eq!(fmt3(b.perplexity), "140.054");
        assert!(b.human.is_none());
    }

    #[test]
    fn table_rows_come_in_fixed_order() {
        let m = manifest(&["a", "b"]);
        let scores = vec![score("s1", "a", 0.5, 10.0), score("s1", "b", 0.25, 20.0)];
        let text = render_table(&build_report(&m, &scores, &[], &BTreeMap::new()));
        let rows: Vec<usize> = ["BERT", "METEOR", "BLEU", "ROUGE", "Perplexity", "Human Score"]
            .iter()
            .map(|label| text.find(label).unwrap_or_else(|| panic!("missing row {label}")))
            .collect();
        assert!(rows.windows(2).all(|w| w[0] < w[1]), "rows out of order in:\n{text}");
        // no ratings yet: the human row renders dashes
        let human_line = text.lines().find(|l| l.starts_with("Human Score")).unwrap();
        assert!(human_line.contains('-'));
    }

    #[test]
    fn csv_column_order_and_absent_human() {
        let m = manifest(&["a"]);
        let scores = vec![score("s1", "a", 1.0, 1.0)];
        let mut human = BTreeMap::new();
        let without = render_csv(&build_report(&m, &scores, &[], &human));
        assert!(without.starts_with(
            "backend,bert_f1,meteor,bleu,rouge1_f1,perplexity,human_score,items,failures\n"
        ));
        assert!(without.contains("a,1.000,1.000,1.000,1.000,1.000,,1,0"));

        human.insert("a".to_string(), 4.2);
        let with = render_csv(&build_report(&m, &scores, &[], &human));
        assert!(with.contains("a,1.000,1.000,1.000,1.000,1.000,4.200,1,0"));
    }

    #[test]
    fn json_round_trips_exact_floats() {
        let m = manifest(&["a"]);
        let scores = vec![score("s1", "a", 0.1 + 0.2, 517.0), score("s2", "a", 0.3, 519.494)];
        let report = build_report(&m, &scores, &[], &BTreeMap::new());
        let text = render_json(&report);
        let back: MetricReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn unequal_story_subsets_are_flagged() {
        let m = manifest(&["a", "b"]);
        let scores = vec![
            score("s1", "a", 0.5, 1.0),
            score("s2", "a", 0.5, 1.0),
            score("s1", "b", 0.5, 1.0),
        ];
        let report = build_report(&m, &scores, &[], &BTreeMap::new());
        assert!(report
            .notes
            .iter()
            .any(|n| n.contains("different story subsets")));

        let aligned = vec![score("s1", "a", 0.5, 1.0), score("s1", "b", 0.5, 1.0)];
        let report = build_report(&m, &aligned, &[], &BTreeMap::new());
        assert!(report.notes.is_empty());
    }

    #[test]
    fn extra_backend_ids_follow_manifest_order() {
        let m = manifest(&["b", "a"]);
        let scores = vec![
            score("s1", "z", 0.5, 1.0),
            score("s1", "a", 0.5, 1.0),
            score("s1", "b", 0.5, 1.0),
        ];
        let report = build_report(&m, &scores, &[], &BTreeMap::new());
        let ids: Vec<&str> = report.backends.iter().map(|b| b.backend_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a", "z"]);
    }

    #[test]
    fn failures_are_counted_per_backend() {
        let m = manifest(&["a"]);
        let failures = vec![FailureRecord {
            story_id: "s9".into(),
            backend_id: "a".into(),
            stage: "generation".into(),
            message: "boom".into(),
            at: 0,
        }];
        let report = build_report(&m, &[score("s1", "a", 0.5, 1.0)], &failures, &BTreeMap::new());
        assert_eq!(report.backends[0].failures, 1);
    }
}
