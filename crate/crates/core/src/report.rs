//! Versioned JSON reports with self-contained counterexamples.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{Expectation, ExpectationCheck, FixtureReport};
use crate::config::RunConfig;
use crate::invexity::{CheckError, Counterexample, Instance, Verdict, VerdictKey};
use crate::optimize::SolveResult;
use crate::sampling::{CheckConfig, Domain};
use crate::theorems::TheoremReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Expression texts and domain: enough to rebuild the checked instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub dim: usize,
    pub h: Option<String>,
    pub eta: String,
    pub w: Option<String>,
    pub domain: Domain,
}

impl Subject {
    pub fn of(config: &RunConfig) -> Self {
        Subject {
            dim: config.dim,
            h: config.h.clone(),
            eta: config.eta.clone(),
            w: config.w.clone(),
            domain: config.domain.clone(),
        }
    }

    pub fn instance(&self) -> Result<Instance, CheckError> {
        let rc = RunConfig {
            dim: self.dim,
            fixture: None,
            h: self.h.clone(),
            eta: self.eta.clone(),
            w: self.w.clone(),
            domain: self.domain.clone(),
            check: CheckConfig::default(),
            class: None,
            alpha: None,
            problem: None,
            output: None,
        };
        rc.instance().map_err(|e| CheckError::Precondition(e.to_string()))
    }
}

/// An item tagged with where it came from (a fixture id or `config`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sourced<T> {
    pub source: String,
    #[serde(flatten)]
    pub item: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Original,
    Shrunk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleEntry {
    pub source: String,
    pub key: VerdictKey,
    pub which: WitnessKind,
    pub subject: Subject,
    pub config: CheckConfig,
    pub counterexample: Counterexample,
}

impl CounterexampleEntry {
    /// Re-evaluate the witness from the stored texts.
    pub fn reverify(&self) -> bool {
        self.subject
            .instance()
            .map(|inst| inst.reverify(self.key, &self.counterexample, &self.config))
            .unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub id: String,
    pub all_match: bool,
    pub checks: Vec<ExpectationCheck>,
    pub paper_claims: BTreeMap<VerdictKey, Expectation>,
    pub discrepancy_note: Option<String>,
    pub internal_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config_echo: BTreeMap<String, BTreeMap<String, String>>,
    pub verdicts: Vec<Sourced<Verdict>>,
    pub counterexamples: Vec<CounterexampleEntry>,
    pub theorem_reports: Vec<Sourced<TheoremReport>>,
    pub solve_results: Vec<Sourced<SolveResult>>,
    pub fixtures: Vec<FixtureSummary>,
    pub notes: Vec<String>,
    pub seed: u64,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            config_echo: BTreeMap::new(),
            verdicts: Vec::new(),
            counterexamples: Vec::new(),
            theorem_reports: Vec::new(),
            solve_results: Vec::new(),
            fixtures: Vec::new(),
            notes: Vec::new(),
            seed,
        }
    }

    /// Merge config sections, prefixing section names with `prefix/` when given.
    pub fn echo(&mut self, prefix: Option<&str>, config: &RunConfig) {
        for (section, kv) in config.sections() {
            let name = match prefix {
                Some(p) => format!("{p}/{section}"),
                None => section,
            };
            self.config_echo.insert(name, kv);
        }
    }

    /// Record a verdict and, if refuted, both its witnesses.
    pub fn add_verdict(&mut self, source: &str, subject: &Subject, verdict: Verdict) {
        if let (Some(w), Some(s)) = (verdict.witness(), verdict.shrunk()) {
            for (which, cx) in [(WitnessKind::Original, w), (WitnessKind::Shrunk, s)] {
                self.counterexamples.push(CounterexampleEntry {
                    source: source.into(),
                    key: verdict.key,
                    which,
                    subject: subject.clone(),
                    config: verdict.config.clone(),
                    counterexample: cx.clone(),
                });
            }
        }
        self.verdicts.push(Sourced {
            source: source.into(),
            item: verdict,
        });
    }

    pub fn add_theorem(&mut self, source: &str, report: TheoremReport) {
        self.theorem_reports.push(Sourced {
            source: source.into(),
            item: report,
        });
    }

    pub fn add_solve(&mut self, source: &str, result: SolveResult) {
        self.solve_results.push(Sourced {
            source: source.into(),
            item: result,
        });
    }

    /// Everything a fixture run produced.
    pub fn add_fixture(&mut self, subject: &Subject, run: FixtureReport) {
        let id = run.id.clone();
        for v in run.verdicts() {
            self.add_verdict(&id, subject, v.clone());
        }
        for t in run.theorems {
            self.add_theorem(&id, t);
        }
        if let Some(t) = run.optimality {
            self.add_theorem(&id, t);
        }
        if let Some(s) = run.solve {
            self.add_solve(&id, s);
        }
        if let Some(note) = &run.discrepancy_note {
            self.notes.push(format!("{id}: {note}"));
        }
        self.fixtures.push(FixtureSummary {
            id,
            all_match: run.all_match,
            checks: run.checks,
            paper_claims: run.paper_claims,
            discrepancy_note: run.discrepancy_note,
            internal_error: run.classification.internal_error,
        });
    }

    /// Pretty JSON with a trailing newline. Non-finite numbers become `null`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReverifyResult {
    pub index: usize,
    pub source: String,
    pub key: String,
    pub which: String,
    pub ok: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0:?}")]
    Schema(Value),
}

fn parse_checked(text: &str) -> Result<Value, ReportError> {
    let v: Value = serde_json::from_str(text)?;
    match v.get("schema_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => Ok(v),
        other => Err(ReportError::Schema(other.cloned().unwrap_or(Value::Null))),
    }
}

/// Re-check every counterexample in a serialized report using only its contents.
/// Entries that fail to decode count as not verified.
pub fn reverify_json(text: &str) -> Result<Vec<ReverifyResult>, ReportError> {
    let v = parse_checked(text)?;
    let entries = v
        .get("counterexamples")
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();
    Ok(entries
        .into_iter()
        .enumerate()
        .map(|(index, raw)| {
            let field = |k: &str| raw.get(k).and_then(Value::as_str).unwrap_or("?").to_string();
            let (source, key, which) = (field("source"), field("key"), field("which"));
            let ok = serde_json::from_value::<CounterexampleEntry>(raw)
                .map(|e| e.reverify())
                .unwrap_or(false);
            ReverifyResult {
                index,
                source,
                key,
                which,
                ok,
            }
        })
        .collect())
}

fn fmt_num(v: &Value) -> String {
    match v {
        Value::Null => "non-finite".into(),
        Value::Array(xs) => format!("({})", xs.iter().map(fmt_num).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

/// Human-readable summary of a serialized report.
pub fn render_json(text: &str) -> Result<String, ReportError> {
    let v = parse_checked(text)?;
    let s = |v: &Value, k: &str| v.get(k).and_then(Value::as_str).unwrap_or("").to_string();
    let arr = |k: &str| v.get(k).and_then(Value::as_array).cloned().unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "winvex {} | {} | seed {}",
        s(&v, "tool_version"),
        s(&v, "command"),
        fmt_num(v.get("seed").unwrap_or(&Value::Null))
    );
    for f in arr("fixtures") {
        let ok = f.get("all_match").and_then(Value::as_bool).unwrap_or(false);
        let _ = writeln!(
            out,
            "fixture {}: {}",
            s(&f, "id"),
            if ok { "match" } else { "MISMATCH" }
        );
    }
    for e in arr("verdicts") {
        let _ = writeln!(
            out,
            "  [{}] {:<28} {:<22} samples={}",
            s(&e, "source"),
            s(&e, "key"),
            s(&e, "status"),
            fmt_num(e.get("samples_checked").unwrap_or(&Value::Null))
        );
    }
    for c in arr("counterexamples") {
        if s(&c, "which") != "shrunk" {
            continue;
        }
        let cx = c.get("counterexample").cloned().unwrap_or(Value::Null);
        let g = |k: &str| fmt_num(cx.get(k).unwrap_or(&Value::Null));
        let _ = writeln!(
            out,
            "  counterexample [{}] {}: z1={} z2={} delta={} point={} lhs={} rhs={} violation={}",
            s(&c, "source"),
            s(&c, "key"),
            g("z1"),
            g("z2"),
            g("delta"),
            g("generated_point"),
            g("lhs"),
            g("rhs"),
            g("violation")
        );
    }
    for t in arr("theorem_reports") {
        let _ = writeln!(
            out,
            "  theorem [{}] {}: {}",
            s(&t, "source"),
            s(&t, "theorem"),
            s(&t, "status")
        );
    }
    for r in arr("solve_results") {
        let g = |k: &str| fmt_num(r.get(k).unwrap_or(&Value::Null));
        let _ = writeln!(
            out,
            "  solve [{}] {}: best={} at {} oracle={}",
            s(&r, "source"),
            s(&r, "status"),
            g("best_value"),
            g("best_point"),
            g("oracle_value")
        );
    }
    for n in arr("notes") {
        let _ = writeln!(out, "note: {}", n.as_str().unwrap_or(""));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::find_fixture;

    fn plus6_report() -> Report {
        let f = find_fixture("shifted-plus6").unwrap();
        let rc = f.to_run_config();
        let subject = Subject::of(&rc);
        let inst = subject.instance().unwrap();
        let mut r = Report::new("test", f.seed);
        r.echo(None, &rc);
        let cfg = f.check_config();
        for class in crate::invexity::ClassId::function_classes() {
            r.add_verdict("config", &subject, inst.check(class, &cfg).unwrap());
        }
        r
    }

    #[test]
    fn round_trip_and_reverify() {
        let r = plus6_report();
        let json = r.to_json();
        assert_eq!(json, plus6_report().to_json());
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let results = reverify_json(&json).unwrap();
        assert!(!results.is_empty());
        assert!(results.iter().all(|x| x.ok), "{results:?}");
    }

    #[test]
    fn tampered_witness_fails() {
        let json = plus6_report().to_json();
        let mut v: Value = serde_json::from_str(&json).unwrap();
        v["counterexamples"][0]["counterexample"]["lhs"] = Value::from(123.0);
        v["counterexamples"][1]["subject"]["eta"] = Value::from("(((");
        let results = reverify_json(&v.to_string()).unwrap();
        assert!(!results[0].ok && !results[1].ok);
        assert!(results[2..].iter().all(|x| x.ok));
    }

    #[test]
    fn schema_checked_and_rendered() {
        assert!(matches!(reverify_json("{}"), Err(ReportError::Schema(_))));
        assert!(reverify_json("not json").is_err());
        let text = render_json(&plus6_report().to_json()).unwrap();
        assert!(text.contains("w-preinvex"));
        assert!(text.contains("counterexample"));
    }
}
