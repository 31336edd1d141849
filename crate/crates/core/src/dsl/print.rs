use std::collections::HashMap;
use std::fmt::Write;

use super::Entity;
use crate::conslaw::ConservedCurrent;
use crate::expr::{func_def, intern, Atom, Expr};
use crate::mappings::MappingVector;
use crate::sysdef::{Dependent, ExactSolution, PdeSystem, TensorRole};

// Strings have no escapes, so embedded quotes are softened.
fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

fn decls(list: &[Dependent]) -> String {
    list.iter()
        .map(|d| match d.role {
            TensorRole::Scalar => d.name.clone(),
            TensorRole::Vector => format!("vector {}", d.name),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn section(out: &mut String, name: &str, body: &str) {
    let _ = writeln!(out, "    {name}: {body};");
}

pub fn print_system(sys: &PdeSystem) -> String {
    let mut out = format!("system {} {{\n", sys.id);
    if !sys.description.is_empty() {
        section(&mut out, "description", &quoted(&sys.description));
    }
    if !sys.parameters.is_empty() {
        section(&mut out, "parameters", &sys.parameters.join(", "));
    }
    section(&mut out, "dependents", &decls(&sys.dependents));
    if !sys.sources.is_empty() {
        section(&mut out, "sources", &decls(&sys.sources));
    }
    if !sys.functions.is_empty() {
        let fs: Vec<String> = sys
            .functions
            .iter()
            .map(|(name, id)| {
                let def = func_def(*id);
                let args: Vec<String> = (1..=def.arity).map(|k| format!("arg{k}")).collect();
                let mut s = format!("{name}({})", args.join(", "));
                if let Some(ts) = &def.partials {
                    let rules: HashMap<_, _> = args
                        .iter()
                        .enumerate()
                        .map(|(k, a)| (intern(Atom::Slot(k as u8)), Expr::param(a)))
                        .collect();
                    let parts: Vec<String> = ts
                        .iter()
                        .enumerate()
                        .map(|(k, t)| {
                            let body = t.substitute_unchecked(&rules).expect("renaming slots");
                            format!("d{} = {body}", k + 1)
                        })
                        .collect();
                    let _ = write!(s, " {{ {} }}", parts.join(", "));
                }
                s
            })
            .collect();
        section(&mut out, "functions", &fs.join(", "));
    }
    let eqs: Vec<String> = sys.equations.iter().map(|g| g.to_string()).collect();
    section(&mut out, "equations", &eqs.join(",\n        "));
    let leads: Vec<String> = sys.rules.iter().map(|r| format!("{} = {}", r.var, r.rhs)).collect();
    section(&mut out, "leading", &leads.join(",\n        "));
    if !sys.assumptions.is_empty() {
        section(&mut out, "assume", &sys.assumptions.join(", "));
    }
    section(&mut out, "ranking", sys.ranking.name());
    out.push_str("}\n");
    out
}

pub fn print_current(c: &ConservedCurrent) -> String {
    let mut out = format!("current {} on {} kind {} {{\n", c.id, c.system_id, c.kind.name());
    if !c.description.is_empty() {
        section(&mut out, "description", &quoted(&c.description));
    }
    if let Some(d) = &c.density {
        section(&mut out, "density", &d.to_string());
    }
    if let Some(f) = &c.flux {
        section(&mut out, "flux", &f.to_string());
    }
    if c.closed_only {
        section(&mut out, "closed", "true");
    }
    out.push_str("}\n");
    out
}

pub fn print_solution(s: &ExactSolution) -> String {
    let mut out = format!("solution {} on {} {{\n", s.id, s.system_id);
    if !s.description.is_empty() {
        section(&mut out, "description", &quoted(&s.description));
    }
    if !s.parameter_defaults.is_empty() {
        let ps: Vec<String> = s.parameter_defaults.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        section(&mut out, "parameters", &ps.join(", "));
    }
    let fs: Vec<String> = s.fields.iter().map(|(k, e)| format!("{k} = {e}")).collect();
    section(&mut out, "fields", &fs.join(",\n        "));
    out.push_str("}\n");
    out
}

pub fn print_vectorfield(m: &MappingVector) -> String {
    let mut out = format!("vectorfield {} {{\n", m.id);
    if !m.description.is_empty() {
        section(&mut out, "description", &quoted(&m.description));
    }
    section(&mut out, "components", &m.components.to_string());
    section(&mut out, "constraint", m.constraint.name());
    out.push_str("}\n");
    out
}

/// Canonical text for an entity; reading it back yields an equal entity.
pub fn print_entity(e: &Entity) -> String {
    match e {
        Entity::System(s) => print_system(s),
        Entity::Current(c) => print_current(c),
        Entity::Solution(s) => print_solution(s),
        Entity::VectorField(v) => print_vectorfield(v),
    }
}
