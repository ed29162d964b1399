//! Machine-readable reports. One JSON document shape serves every
//! subcommand; unused sections are null. Reports for identical runs are
//! byte-identical except for the timing section.

use crate::analysis::{DeclAnalysis, ExecVerdict, StmVerdict};
use crate::stm::TestReport;
use crate::typecheck::TypeError;
use serde_json::{json, Value as Json};

pub const TOOL_NAME: &str = "speclite";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Default)]
pub struct Report {
    pub subcommand: String,
    pub config: Json,
    pub spec_errors: Vec<Json>,
    pub analysis: Option<Vec<DeclAnalysis>>,
    pub test: Option<TestReport>,
    pub path: Option<Json>,
    pub parse: Option<Json>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn new(subcommand: &str) -> Self {
        Report {
            subcommand: subcommand.to_string(),
            config: Json::Null,
            ..Report::default()
        }
    }

    pub fn push_parse_error(&mut self, e: &crate::parser::ParseError) {
        self.spec_errors.push(json!({
            "decl": Json::Null,
            "line": e.span.line,
            "col": e.span.col,
            "kind": "parse-error",
            "message": e.message,
        }));
    }

    pub fn push_type_errors(&mut self, errors: &[TypeError]) {
        for e in errors {
            self.spec_errors.push(json!({
                "decl": e.decl,
                "line": e.span.line,
                "col": e.span.col,
                "kind": format!("{:?}", e.kind),
                "message": e.message,
            }));
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "tool": { "name": TOOL_NAME, "version": TOOL_VERSION },
            "subcommand": self.subcommand,
            "config": self.config,
            "spec_errors": self.spec_errors,
            "analysis": self.analysis.as_ref().map(|a| analysis_json(a)),
            "test": self.test.as_ref().map(TestReport::to_json),
            "path": self.path,
            "parse": self.parse,
            "timing": { "elapsed_ms": self.elapsed_ms },
        })
    }
}

pub fn analysis_json(decls: &[DeclAnalysis]) -> Json {
    Json::Array(decls.iter().map(decl_analysis_json).collect())
}

fn decl_analysis_json(d: &DeclAnalysis) -> Json {
    let exec = d.exec.as_ref().map(|v| match v {
        ExecVerdict::Executable => json!({ "verdict": "executable", "reasons": [] }),
        ExecVerdict::NonExecutable(reasons) => json!({
            "verdict": "non-executable",
            "reasons": reasons.iter().map(|(span, r)| json!({
                "line": span.line,
                "col": span.col,
                "reason": r.label(),
            })).collect::<Vec<_>>(),
        }),
    });
    let stm = d.stm.as_ref().map(|v| match v {
        StmVerdict::Compatible { constructor } => json!({
            "verdict": "compatible",
            "constructor": constructor,
            "reason": Json::Null,
        }),
        StmVerdict::Incompatible(reason) => json!({
            "verdict": "incompatible",
            "constructor": false,
            "reason": reason.label(),
        }),
    });
    json!({
        "name": d.name,
        "kind": d.kind,
        "executable": exec,
        "stm": stm,
    })
}

/// Human-readable analysis lines, one per declaration.
pub fn analysis_human(decls: &[DeclAnalysis]) -> String {
    let mut out = String::new();
    for d in decls {
        out.push_str(&format!("{:12} {:10}", d.name, d.kind));
        match &d.exec {
            Some(ExecVerdict::Executable) => out.push_str(" executable"),
            Some(ExecVerdict::NonExecutable(reasons)) => {
                let labels: Vec<String> = reasons
                    .iter()
                    .map(|(span, r)| format!("{} at line {}", r.label(), span.line))
                    .collect();
                out.push_str(&format!(" NON-EXECUTABLE ({})", labels.join("; ")));
            }
            None => {}
        }
        match &d.stm {
            Some(StmVerdict::Compatible { constructor: true }) => {
                out.push_str("; stm-compatible (constructor)")
            }
            Some(StmVerdict::Compatible { constructor: false }) => out.push_str("; stm-compatible"),
            Some(StmVerdict::Incompatible(r)) => {
                out.push_str(&format!("; stm-incompatible: {}", r.label()))
            }
            None => {}
        }
        out.push('\n');
    }
    out
}

/// Strip the volatile fields so two reports can be compared for identity.
pub fn without_timing(mut report: Json) -> Json {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("timing");
    }
    report
}
