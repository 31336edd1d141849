use std::collections::VecDeque;

use conslaw::catalog::{Catalog, CatalogError};
use conslaw::conslaw::ConservedCurrent;
use conslaw::dsl::Entity;
use conslaw::sysdef::SystemRef;
use thiserror::Error;

use crate::report::{EXIT_FAIL, EXIT_PARSE};
use crate::Target;

const SYSTEM_ALIASES: &[(&str, &str)] = &[("irrotational", "irrotational-fluid")];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Catalog(CatalogError::Parse { .. }) | CliError::Usage(_) => EXIT_PARSE,
            _ => EXIT_FAIL,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn failed(msg: impl Into<String>) -> CliError {
    CliError::Failed(msg.into())
}

/// The catalog plus whatever `--file` defines, and the ids that file added.
pub fn load(target: &Target) -> Result<(Catalog, Vec<Entity>)> {
    let mut cat = Catalog::load()?;
    let mut added = Vec::new();
    if let Some(path) = &target.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| failed(format!("cannot read {}: {e}", path.display())))?;
        added = cat.add_text(&path.display().to_string(), &text)?;
    }
    Ok((cat, added))
}

pub fn system_id(cat: &Catalog, name: &str) -> Option<String> {
    if cat.system(name).is_some() {
        return Some(name.to_string());
    }
    SYSTEM_ALIASES.iter().find(|(a, _)| *a == name).map(|(_, s)| s.to_string())
}

pub struct Resolved {
    pub system: SystemRef,
    pub currents: Vec<ConservedCurrent>,
    /// Positional tokens left for the command.
    pub rest: VecDeque<String>,
}

/// Resolves system and currents from flags and positionals. A leading
/// positional naming a system is the system; the next naming one of its
/// currents is the current. A current alone is accepted when exactly one
/// system defines it. Without a current, the currents from `--file` (or all
/// currents of the system) are selected.
pub fn resolve(cat: &Catalog, added: &[Entity], target: &Target) -> Result<Resolved> {
    let mut rest: VecDeque<String> = target.positional.iter().cloned().collect();
    let mut system = match &target.system {
        Some(s) => Some(system_id(cat, s).ok_or_else(|| failed(format!("unknown system `{s}`")))?),
        None => match rest.front().and_then(|p| system_id(cat, p)) {
            Some(s) => {
                rest.pop_front();
                Some(s)
            }
            None => None,
        },
    };
    let current = match &target.current {
        Some(c) => Some(c.clone()),
        None => match rest.front() {
            Some(p) if is_current_name(cat, system.as_deref(), p) => rest.pop_front(),
            _ => None,
        },
    };
    if system.is_none() {
        system = match &current {
            Some(c) => Some(unique_system_for(cat, c)?),
            None => added.iter().find_map(|e| match e {
                Entity::Current(c) => Some(c.system_id.clone()),
                Entity::System(s) => Some(s.id.clone()),
                _ => None,
            }),
        };
    }
    let system_id = system.ok_or_else(|| usage("name a system, a current, or pass --file"))?;
    let sys = cat
        .system(&system_id)
        .cloned()
        .ok_or_else(|| failed(format!("unknown system `{system_id}`")))?;
    let currents = match &current {
        Some(c) => vec![cat
            .current(&system_id, c)
            .cloned()
            .ok_or_else(|| failed(format!("unknown current `{c}` on `{system_id}`")))?],
        None => {
            let from_file: Vec<ConservedCurrent> = added
                .iter()
                .filter_map(|e| match e {
                    Entity::Current(c) if c.system_id == system_id => Some(c.clone()),
                    _ => None,
                })
                .collect();
            if from_file.is_empty() {
                cat.currents_on(&system_id).cloned().collect()
            } else {
                from_file
            }
        }
    };
    Ok(Resolved { system: sys, currents, rest })
}

fn is_current_name(cat: &Catalog, system: Option<&str>, name: &str) -> bool {
    match system {
        Some(s) => cat.current(s, name).is_some(),
        None => cat.currents().any(|c| c.id == name),
    }
}

fn unique_system_for(cat: &Catalog, current: &str) -> Result<String> {
    let hosts: Vec<&str> = cat.currents().filter(|c| c.id == current).map(|c| c.system_id.as_str()).collect();
    match hosts.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(failed(format!("unknown current `{current}`"))),
        many => Err(usage(format!(
            "current `{current}` is defined on {}; name the system",
            many.join(", ")
        ))),
    }
}

/// Exactly one current, for commands that act on a single law.
pub fn single(r: &Resolved) -> Result<&ConservedCurrent> {
    match r.currents.as_slice() {
        [c] => Ok(c),
        [] => Err(failed(format!("system `{}` has no currents", r.system.id))),
        _ => Err(usage(format!("system `{}` has several currents; name one", r.system.id))),
    }
}
