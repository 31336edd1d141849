//! Built-in registry of systems, currents, exact solutions and mapping vectors.
//!
//! The registry is read from `.claw` files. The copies embedded at build time
//! are used unless `CONSLAW_CATALOG_DIR` names a directory to read instead.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::conslaw::ConservedCurrent;
use crate::dsl::{parse_document, Diagnostic, Entity, Resolver};
use crate::expr::Expr;
use crate::mappings::MappingVector;
use crate::sysdef::{verify_exact_solution, ExactSolution, SysError, SystemRef};

pub const CATALOG_DIR_VAR: &str = "CONSLAW_CATALOG_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("fluids.claw", include_str!("../catalog/fluids.claw")),
    ("electromagnetism.claw", include_str!("../catalog/electromagnetism.claw")),
    ("mhd.claw", include_str!("../catalog/mhd.claw")),
    ("vectors.claw", include_str!("../catalog/vectors.claw")),
];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{}", .diagnostics.first().map(|d| d.to_string()).unwrap_or_default())]
    Parse { file: String, diagnostics: Vec<Diagnostic> },
    #[error("{kind} `{id}` is defined twice")]
    Duplicate { kind: &'static str, id: String },
    #[error("solution `{solution}` does not solve `{system}`: {reason}")]
    BadSolution { solution: String, system: String, reason: String },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown solution `{0}`")]
    UnknownSolution(String),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    systems: BTreeMap<String, SystemRef>,
    currents: BTreeMap<(String, String), ConservedCurrent>,
    solutions: BTreeMap<String, ExactSolution>,
    vectorfields: BTreeMap<String, MappingVector>,
    texts: Vec<(String, String)>,
}

impl Resolver for Catalog {
    fn system(&self, id: &str) -> Option<SystemRef> {
        self.systems.get(id).cloned()
    }
}

impl Catalog {
    /// The embedded catalog.
    pub fn builtin() -> Result<Catalog> {
        Catalog::from_texts(BUILTIN.iter().map(|(n, t)| (n.to_string(), t.to_string())))
    }

    /// Every `.claw` file in `dir`, read in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Catalog> {
        let io = |source| CatalogError::Io { path: dir.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "claw"))
            .collect();
        paths.sort();
        let mut texts = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|source| CatalogError::Io { path: p.clone(), source })?;
            texts.push((p.display().to_string(), text));
        }
        Catalog::from_texts(texts)
    }

    /// The directory named by `CONSLAW_CATALOG_DIR`, else the embedded catalog.
    pub fn load() -> Result<Catalog> {
        match std::env::var_os(CATALOG_DIR_VAR) {
            Some(dir) if !dir.is_empty() => Catalog::from_dir(Path::new(&dir)),
            _ => Catalog::builtin(),
        }
    }

    pub fn from_texts(texts: impl IntoIterator<Item = (String, String)>) -> Result<Catalog> {
        let mut cat = Catalog::default();
        for (name, text) in texts {
            cat.add_text(&name, &text)?;
        }
        Ok(cat)
    }

    /// Parses one document against the current registry and registers what it defines.
    pub fn add_text(&mut self, name: &str, text: &str) -> Result<Vec<Entity>> {
        let doc = parse_document(text, self).map_err(|diagnostics| CatalogError::Parse {
            file: name.to_string(),
            diagnostics,
        })?;
        for e in &doc.entities {
            self.insert(e.clone())?;
        }
        self.texts.push((name.to_string(), text.to_string()));
        Ok(doc.entities)
    }

    fn insert(&mut self, e: Entity) -> Result<()> {
        let dup = |kind, id: &str| CatalogError::Duplicate { kind, id: id.to_string() };
        match e {
            Entity::System(s) => {
                if self.systems.contains_key(&s.id) {
                    return Err(dup("system", &s.id));
                }
                self.systems.insert(s.id.clone(), s);
            }
            Entity::Current(c) => {
                let key = (c.system_id.clone(), c.id.clone());
                if self.currents.contains_key(&key) {
                    return Err(dup("current", &format!("{} on {}", c.id, c.system_id)));
                }
                self.currents.insert(key, c);
            }
            Entity::Solution(s) => {
                if self.solutions.contains_key(&s.id) {
                    return Err(dup("solution", &s.id));
                }
                let sys = self
                    .systems
                    .get(&s.system_id)
                    .ok_or_else(|| CatalogError::UnknownSystem(s.system_id.clone()))?;
                check_solution(&s, sys)?;
                self.solutions.insert(s.id.clone(), s);
            }
            Entity::VectorField(v) => {
                if self.vectorfields.contains_key(&v.id) {
                    return Err(dup("vectorfield", &v.id));
                }
                self.vectorfields.insert(v.id.clone(), v);
            }
        }
        Ok(())
    }

    pub fn system(&self, id: &str) -> Option<&SystemRef> {
        self.systems.get(id)
    }

    pub fn systems(&self) -> impl Iterator<Item = &SystemRef> {
        self.systems.values()
    }

    pub fn current(&self, system: &str, id: &str) -> Option<&ConservedCurrent> {
        self.currents.get(&(system.to_string(), id.to_string()))
    }

    /// All currents, ordered by system id then current id.
    pub fn currents(&self) -> impl Iterator<Item = &ConservedCurrent> {
        self.currents.values()
    }

    pub fn currents_on<'a>(&'a self, system: &'a str) -> impl Iterator<Item = &'a ConservedCurrent> + 'a {
        self.currents.values().filter(move |c| c.system_id == system)
    }

    pub fn solution(&self, id: &str) -> Option<&ExactSolution> {
        self.solutions.get(id)
    }

    pub fn solutions(&self) -> impl Iterator<Item = &ExactSolution> {
        self.solutions.values()
    }

    /// The named solution viewed as a solution of `system`. A solution of a
    /// source-free system is accepted for a system that adds sources, with
    /// the sources set to zero, provided the residuals still vanish.
    pub fn solution_for(&self, id: &str, system: &str) -> Result<ExactSolution> {
        let sol = self.solution(id).ok_or_else(|| CatalogError::UnknownSolution(id.to_string()))?;
        if sol.system_id == system {
            return Ok(sol.clone());
        }
        let sys = self.system(system).ok_or_else(|| CatalogError::UnknownSystem(system.to_string()))?;
        let mut out = sol.clone();
        out.system_id = system.to_string();
        for name in sys.source_names() {
            out.fields.entry(name).or_insert_with(Expr::zero);
        }
        check_solution(&out, sys)?;
        Ok(out)
    }

    pub fn vectorfield(&self, id: &str) -> Option<&MappingVector> {
        self.vectorfields.get(id)
    }

    pub fn vectorfields(&self) -> impl Iterator<Item = &MappingVector> {
        self.vectorfields.values()
    }

    /// The documents read, as (name, text) pairs.
    pub fn texts(&self) -> &[(String, String)] {
        &self.texts
    }
}

fn check_solution(sol: &ExactSolution, sys: &SystemRef) -> Result<()> {
    let bad = |reason: String| CatalogError::BadSolution {
        solution: sol.id.clone(),
        system: sys.id.clone(),
        reason,
    };
    let residuals = verify_exact_solution(sol, sys).map_err(|e: SysError| bad(e.to_string()))?;
    match residuals.iter().position(|r| !r.is_zero()) {
        None => Ok(()),
        Some(k) => Err(bad(format!("equation {} leaves {}", k + 1, residuals[k]))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conslaw::verify_local;

    #[test]
    fn builtin_loads() {
        let cat = Catalog::builtin().unwrap();
        for id in ["gasdyn", "em", "mhd", "fluid-incompressible"] {
            assert!(cat.system(id).is_some(), "{id}");
        }
        for id in ["em-planewave", "rigid-rotation", "potential-flow"] {
            assert!(cat.solution(id).is_some(), "{id}");
        }
        assert!(cat.currents().count() >= 20);
    }

    #[test]
    fn every_current_verifies() {
        let cat = Catalog::builtin().unwrap();
        let mut failures = Vec::new();
        for c in cat.currents() {
            let sys = cat.system(&c.system_id).unwrap();
            match verify_local(c, sys) {
                Ok(r) if r.is_zero() => {}
                Ok(r) => failures.push(format!("{} on {}: {r}", c.id, c.system_id)),
                Err(e) => failures.push(format!("{} on {}: {e}", c.id, c.system_id)),
            }
        }
        assert!(failures.is_empty(), "{}", failures.join("\n"));
    }

    #[test]
    fn planewave_extends_to_sourced_maxwell() {
        let cat = Catalog::builtin().unwrap();
        let sol = cat.solution_for("em-planewave", "em").unwrap();
        assert!(sol.fields.contains_key("J1"));
        assert!(cat.solution_for("em-planewave", "gasdyn").is_err());
    }

    #[test]
    fn duplicate_rejected() {
        let text = "system s { dependents: u; equations: u_t; leading: u_t; }";
        let mut cat = Catalog::default();
        cat.add_text("a", text).unwrap();
        assert!(matches!(cat.add_text("b", text), Err(CatalogError::Duplicate { .. })));
    }
}
