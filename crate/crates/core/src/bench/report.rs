use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::attack::AttackReport;
use crate::error::{PaseError, Result};

/// One value per defense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple<T> {
    pub baseline: T,
    pub pase: T,
    pub pate: T,
}

impl<T> Triple<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Triple<U> {
        Triple {
            baseline: f(&self.baseline),
            pase: f(&self.pase),
            pate: f(&self.pate),
        }
    }

    fn labelled(&self) -> [(&'static str, &T); 3] {
        [("baseline", &self.baseline), ("pase", &self.pase), ("pate", &self.pate)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub target_train: usize,
    pub target_test: usize,
    pub attack_pool: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generalization {
    pub baseline_train_accuracy: f64,
    /// Train accuracy minus test accuracy.
    pub baseline_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub started_unix_ms: u64,
    pub wall_seconds: f64,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub sizes: SplitSizes,
    /// Layer widths of the target classifier, input to output.
    pub architecture: Vec<usize>,
    /// Test accuracy.
    pub utility: Triple<f64>,
    pub generalization: Generalization,
    pub attack: Triple<AttackReport>,
    pub train_seconds: Triple<f64>,
    pub train_time_ratio: Triple<f64>,
    pub inference_ms_per_sample: Triple<f64>,
    pub inference_repetitions_ms: Triple<Vec<f64>>,
    pub metadata: RunMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = PaseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(PaseError::Usage(format!(
                "unknown report format `{other}` (expected json, markdown or csv)"
            ))),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

fn table(out: &mut String, title: &str, head: &[&str], body: &[Vec<String>]) {
    let _ = writeln!(out, "### {title}\n");
    row(out, &head.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    row(out, &head.iter().map(|_| "---".to_string()).collect::<Vec<_>>());
    for r in body {
        row(out, r);
    }
    out.push('\n');
}

fn arch(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Render one or more reports. Markdown gives four tables with one row per
/// report; CSV gives one `dataset,model,metric,value` line per number.
pub fn render_reports(reports: &[ExperimentReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(reports)?),
        ReportFormat::Markdown => Ok(markdown(reports)),
        ReportFormat::Csv => csv(reports),
    }
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        _ => render_reports(std::slice::from_ref(report), format),
    }
}

fn markdown(reports: &[ExperimentReport]) -> String {
    let head = ["Dataset", "Baseline", "PASE", "PATE"];
    let per = |f: &dyn Fn(&ExperimentReport) -> [String; 3]| -> Vec<Vec<String>> {
        reports
            .iter()
            .map(|r| {
                let mut cells = vec![r.name.clone()];
                cells.extend(f(r));
                cells
            })
            .collect()
    };
    let mut out = String::new();
    table(
        &mut out,
        "Utility accuracy",
        &head,
        &per(&|r| [pct(r.utility.baseline), pct(r.utility.pase), pct(r.utility.pate)]),
    );
    table(
        &mut out,
        "Attack accuracy",
        &head,
        &per(&|r| {
            [
                pct(r.attack.baseline.accuracy),
                pct(r.attack.pase.accuracy),
                pct(r.attack.pate.accuracy),
            ]
        }),
    );
    table(
        &mut out,
        "Training time (ratio over baseline training time)",
        &head,
        &per(&|r| {
            let t = &r.train_time_ratio;
            [
                format!("{:.2}", t.baseline),
                format!("{:.2}", t.pase),
                format!("{:.2}", t.pate),
            ]
        }),
    );
    let body: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let t = &r.inference_ms_per_sample;
            vec![
                r.name.clone(),
                arch(&r.architecture),
                format!("{:.4}", t.baseline),
                format!("{:.4}", t.pase),
                format!("{:.4}", t.pate),
            ]
        })
        .collect();
    table(
        &mut out,
        "Inference time (millisecond per sample)",
        &["Dataset", "Architecture", "Baseline", "PASE", "PATE"],
        &body,
    );
    out
}

fn csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| PaseError::Input(format!("csv rendering failed: {e}"));
    w.write_record(["dataset", "model", "metric", "value"]).map_err(io)?;
    for r in reports {
        let metrics: [(&str, Triple<f64>); 5] = [
            ("utility_accuracy", r.utility),
            ("attack_accuracy", r.attack.map(|a| a.accuracy)),
            ("train_seconds", r.train_seconds),
            ("train_time_ratio", r.train_time_ratio),
            ("inference_ms_per_sample", r.inference_ms_per_sample),
        ];
        for (metric, values) in metrics {
            for (model, v) in values.labelled() {
                w.write_record([r.name.as_str(), model, metric, &v.to_string()])
                    .map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| PaseError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| PaseError::Input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::Confusion;

    fn fake_report() -> ExperimentReport {
        let atk = |acc: f64| AttackReport {
            accuracy: acc,
            confusion: Confusion {
                tp: 1,
                fp: 1,
                fn_: 1,
                tn: 1,
            },
            per_class_accuracy: vec![Some(acc)],
            per_side: 2,
        };
        ExperimentReport {
            name: "toy".into(),
            config_hash: "0".repeat(16),
            config: ExperimentConfig::desk_blobs(1),
            sizes: SplitSizes {
                target_train: 4,
                target_test: 4,
                attack_pool: 8,
            },
            architecture: vec![20, 128, 5],
            utility: Triple {
                baseline: 0.9,
                pase: 0.88,
                pate: 0.8,
            },
            generalization: Generalization {
                baseline_train_accuracy: 1.0,
                baseline_gap: 0.1,
            },
            attack: Triple {
                baseline: atk(0.6),
                pase: atk(0.5),
                pate: atk(0.5),
            },
            train_seconds: Triple {
                baseline: 1.0,
                pase: 4.0,
                pate: 1.5,
            },
            train_time_ratio: Triple {
                baseline: 1.0,
                pase: 4.0,
                pate: 1.5,
            },
            inference_ms_per_sample: Triple {
                baseline: 0.01,
                pase: 0.02,
                pate: 0.01,
            },
            inference_repetitions_ms: Triple {
                baseline: vec![0.01; 3],
                pase: vec![0.02; 3],
                pate: vec![0.01; 3],
            },
            metadata: RunMetadata {
                started_unix_ms: 0,
                wall_seconds: 1.0,
                crate_version: "0".into(),
            },
        }
    }

    #[test]
    fn markdown_has_four_tables() {
        let md = render_report(&fake_report(), ReportFormat::Markdown).unwrap();
        for title in [
            "Utility accuracy",
            "Attack accuracy",
            "Training time (ratio over baseline training time)",
            "Inference time (millisecond per sample)",
        ] {
            assert!(md.contains(&format!("### {title}")), "missing {title}");
        }
        assert!(md.contains("| toy | 90.00% | 88.00% | 80.00% |"));
        assert!(md.contains("| toy | 20-128-5 |"));
    }

    #[test]
    fn csv_has_long_format() {
        let text = render_report(&fake_report(), ReportFormat::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dataset,model,metric,value"));
        assert_eq!(lines.count(), 15);
        assert!(text.contains("toy,pase,train_time_ratio,4\n"));
    }

    #[test]
    fn json_round_trips() {
        let r = fake_report();
        let text = render_report(&r, ReportFormat::Json).unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unknown_format_is_usage_error() {
        assert!(matches!("xml".parse::<ReportFormat>(), Err(PaseError::Usage(_))));
        assert_eq!("MD".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
    }
}
