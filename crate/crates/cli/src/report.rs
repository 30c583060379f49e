use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    pub id: String,
    pub task: String,
    pub status: Status,
    pub summary: String,
    pub witnesses: Vec<Value>,
    pub timing_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub seed: u64,
    pub algebra: Option<String>,
    pub records: Vec<Record>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.status == Status::Pass)
    }

    pub fn exit_code(&self) -> u8 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    /// The report with every timing set to zero, for comparing runs.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.timing_ms = 0.0;
        }
        r
    }
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "vertexkit {} (seed {}, algebra {})",
                report.subcommand,
                report.seed,
                report.algebra.as_deref().unwrap_or("none")
            );
            for r in &report.records {
                let _ = writeln!(
                    s,
                    "[{:>5}] {} ({}): {} [{:.1} ms]",
                    r.status.label(),
                    r.id,
                    r.task,
                    r.summary,
                    r.timing_ms
                );
                for w in &r.witnesses {
                    let _ = writeln!(s, "        witness: {w}");
                }
            }
            let passed = report.records.iter().filter(|r| r.status == Status::Pass).count();
            let _ = writeln!(s, "{passed}/{} tasks passed", report.records.len());
            s
        }
    }
}
