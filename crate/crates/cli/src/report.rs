use std::fmt::Write;
use std::io::Write as _;

use conslaw::conslaw::{ConservedCurrent, CurrentKind, Status, TrivialityVerdict};
use conslaw::numgrid::{IntegralReport, QuadratureSpec, Tolerance};
use serde::Serialize;

use crate::Format;

pub const SCHEMA: &str = "conslaw-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

#[derive(Debug, Clone, Serialize)]
pub struct Echo {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurrentRef {
    pub id: String,
    pub kind: CurrentKind,
}

impl CurrentRef {
    pub fn of(c: &ConservedCurrent) -> CurrentRef {
        CurrentRef { id: c.id.clone(), kind: c.kind }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ListEntry {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub description: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub system: String,
    pub current: CurrentRef,
    pub passed: bool,
    /// Canonical residual on solutions; `0` when conserved.
    pub residual: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rendered {
    pub id: String,
    pub kind: CurrentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    pub flux: Option<String>,
    pub closed_only: bool,
    pub dsl: String,
}

impl Rendered {
    pub fn of(c: &ConservedCurrent) -> Rendered {
        Rendered {
            id: c.id.clone(),
            kind: c.kind,
            density: c.density.as_ref().map(|d| d.to_string()),
            flux: c.flux.as_ref().map(|f| f.to_string()),
            closed_only: c.closed_only,
            dsl: conslaw::dsl::print_current(c),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub status: Status,
    pub order_bound: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_checked: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_law: Option<Rendered>,
    pub notes: Vec<String>,
}

impl Classification {
    pub fn of(v: &TrivialityVerdict, witness_checked: Option<bool>) -> Classification {
        let w = v.witness.as_ref();
        Classification {
            status: v.status,
            order_bound: v.order_bound,
            theta: w.and_then(|w| w.theta.as_ref()).map(|t| t.to_string()),
            lambda: w.and_then(|w| w.lambda.as_ref()).map(|l| l.to_string()),
            witness_checked,
            certificate: v.certificate.as_ref().map(|c| c.to_string()),
            boundary_law: v.boundary_law.as_ref().map(Rendered::of),
            notes: v.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MappingReport {
    pub xi: String,
    pub xi_components: String,
    pub target: CurrentKind,
    pub mapped: Rendered,
    pub residual: String,
    pub verifies: bool,
    pub source_status: Status,
    pub image: Classification,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericReport {
    pub solution: String,
    pub quadrature: QuadratureSpec,
    pub tolerance: Tolerance,
    pub passes: bool,
    pub integral: IntegralReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: Echo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current: Option<CurrentRef>,
    /// One-word outcome: PASS, FAIL, a triviality status, or ERROR.
    pub verdict: String,
    pub exit_status: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub listing: Option<Vec<ListEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericReport>,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn new(command: Echo, verdict: &str, exit_status: i32) -> Report {
        Report {
            schema: SCHEMA,
            command,
            system: None,
            current: None,
            verdict: verdict.to_string(),
            exit_status,
            listing: None,
            checks: None,
            classification: None,
            mapping: None,
            numeric: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn failure(command: Echo, exit_status: i32, message: String) -> Report {
        let mut r = Report::new(command, "ERROR", exit_status);
        r.diagnostics.push(message);
        r
    }

    pub fn emit(&self, format: Format) {
        match format {
            Format::Json => {
                let json = serde_json::to_string_pretty(self).expect("report serializes");
                let _ = writeln!(std::io::stdout(), "{json}");
            }
            Format::Text if self.verdict == "ERROR" => {
                for d in &self.diagnostics {
                    let _ = writeln!(std::io::stderr(), "error: {d}");
                }
            }
            Format::Text => {
                let _ = std::io::stdout().write_all(self.text().as_bytes());
            }
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        if let Some(list) = &self.listing {
            for e in list {
                let id = match &e.system {
                    Some(s) => format!("{s}/{}", e.id),
                    None => e.id.clone(),
                };
                let kind = e.kind.as_deref().map(|k| format!(" [{k}]")).unwrap_or_default();
                let _ = writeln!(out, "{id}{kind}  {}", e.description);
            }
            return out;
        }
        if let Some(checks) = &self.checks {
            for c in checks {
                let word = if c.passed { "PASS" } else { "FAIL" };
                let _ = write!(out, "{word} {}/{} ({})", c.system, c.current.id, c.current.kind.name());
                if !c.passed {
                    let _ = write!(out, "\n  residual: {}", c.residual);
                }
                out.push('\n');
            }
        }
        if let (Some(sys), Some(c)) = (&self.system, &self.current) {
            if self.checks.is_none() {
                let _ = writeln!(out, "{sys}/{} ({})", c.id, c.kind.name());
            }
        }
        if let Some(m) = &self.mapping {
            let _ = writeln!(out, "mapped by {} = {} to {}", m.xi, m.xi_components, m.target.name());
            let _ = writeln!(out, "source status: {}", m.source_status);
            out.push_str(&m.mapped.dsl);
            let _ = writeln!(out, "verifies: {}", m.verifies);
            if !m.verifies {
                let _ = writeln!(out, "residual: {}", m.residual);
            }
            write_classification(&mut out, &m.image);
        }
        if let Some(c) = &self.classification {
            write_classification(&mut out, c);
        }
        if let Some(n) = &self.numeric {
            let i = &n.integral;
            let _ = writeln!(out, "solution: {}  domain: {}  t = {}", n.solution, i.domain, i.t);
            let _ = writeln!(out, "  {:>6}  {:>22}  {:>22}  {:>22}  {:>12}", "points", "C", "F", "dC/dt", "residual");
            for row in &i.refinement_table {
                let _ = writeln!(
                    out,
                    "  {:>6}  {:>22.15e}  {:>22.15e}  {:>22.15e}  {:>12.3e}",
                    row.points_per_axis, row.value_c, row.value_f, row.dcdt, row.residual
                );
            }
            let _ = writeln!(out, "residual: {:e}  relative: {:e}", i.residual, i.relative_residual);
            if let Some(d) = i.dcdt_difference {
                let _ = writeln!(out, "dC/dt by central difference: {d:e}");
            }
            let _ = writeln!(out, "converged: {}", i.converged);
            for w in &i.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "note: {d}");
        }
        let _ = writeln!(out, "verdict: {}", self.verdict);
        out
    }
}

fn write_classification(out: &mut String, c: &Classification) {
    let _ = writeln!(out, "status: {} (order bound {})", c.status, c.order_bound);
    if let Some(t) = &c.theta {
        let _ = writeln!(out, "  theta = {t}");
    }
    if let Some(l) = &c.lambda {
        let _ = writeln!(out, "  lambda = {l}");
    }
    if let Some(ok) = c.witness_checked {
        let _ = writeln!(out, "  witness re-substitutes: {ok}");
    }
    if let Some(cert) = &c.certificate {
        let _ = writeln!(out, "  certificate: {cert}");
    }
    if let Some(b) = &c.boundary_law {
        let _ = writeln!(out, "  boundary law ({}, closed domains only):", b.kind.name());
        for line in b.dsl.lines() {
            let _ = writeln!(out, "    {line}");
        }
    }
    for n in &c.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}
