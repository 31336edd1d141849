//! PDE systems in solved form and reduction onto their solution spaces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{atom, intern, Atom, AtomId, Expr, ExprError, FuncId, JetVar, MultiIndex};
use crate::jetcalc::{jet_order, total_derivative, total_multi};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SysError {
    #[error("system `{0}` declares no solved forms")]
    NotReducible(String),
    #[error("equation {index} is not linear in its leading derivative `{leading}`")]
    NotSolvable { index: usize, leading: String },
    #[error("{0} equations but {1} leading derivatives")]
    LeadingCount(usize, usize),
    #[error("`{jet}` in the solved form of `{leading}` does not rank below it")]
    RankingViolation { leading: String, jet: String },
    #[error("leading derivative `{0}` divides leading derivative `{1}`")]
    DivisibleLeading(String, String),
    #[error("equation {index} does not vanish under the solved forms: residual {residual}")]
    Inconsistent { index: usize, residual: String },
    #[error("`{0}` is not a declared dependent or source")]
    UnknownVariable(String),
    #[error("exact solution has no field for `{0}`")]
    MissingField(String),
    #[error("exact solution field is not closed-form in (t, x): {0}")]
    Unsupported(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, SysError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorRole {
    Scalar,
    Vector,
}

/// A declared dependent (or source) variable. Vectors expand to the
/// components `name1, name2, name3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependent {
    pub name: String,
    pub role: TensorRole,
}

impl Dependent {
    pub fn scalar(name: &str) -> Dependent {
        Dependent {
            name: name.into(),
            role: TensorRole::Scalar,
        }
    }

    pub fn vector(name: &str) -> Dependent {
        Dependent {
            name: name.into(),
            role: TensorRole::Vector,
        }
    }

    pub fn components(&self) -> Vec<String> {
        match self.role {
            TensorRole::Scalar => vec![self.name.clone()],
            TensorRole::Vector => (1..=3).map(|i| format!("{}{i}", self.name)).collect(),
        }
    }
}

/// Order in which jet variables are compared when checking solved forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    /// (t-order, total order, x1, x2, x3 counts, declaration order).
    #[default]
    Orderly,
    /// (t-order, total order, declaration order, x1, x2, x3 counts).
    DependentsFirst,
}

impl Ranking {
    pub fn name(self) -> &'static str {
        match self {
            Ranking::Orderly => "orderly",
            Ranking::DependentsFirst => "dependents-first",
        }
    }

    pub fn from_name(s: &str) -> Option<Ranking> {
        [Ranking::Orderly, Ranking::DependentsFirst].into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadingRule {
    pub var: JetVar,
    pub source: bool,
    pub rhs: Expr,
}

impl LeadingRule {
    pub fn atom(&self) -> Atom {
        if self.source {
            Atom::Source(self.var.clone())
        } else {
            Atom::Jet(self.var.clone())
        }
    }
}

/// Leading derivative of one equation, with an optional explicit solved form.
#[derive(Debug, Clone)]
pub struct LeadingSpec {
    pub var: JetVar,
    pub source: bool,
    pub rhs: Option<Expr>,
}

/// Everything needed to build a [`PdeSystem`].
#[derive(Debug, Clone, Default)]
pub struct SystemSpec {
    pub id: String,
    pub description: String,
    pub parameters: Vec<String>,
    pub dependents: Vec<Dependent>,
    pub sources: Vec<Dependent>,
    pub functions: Vec<(String, FuncId)>,
    pub equations: Vec<Expr>,
    pub leading: Vec<LeadingSpec>,
    pub assumptions: Vec<String>,
    pub ranking: Ranking,
}

/// A PDE system `G^a = 0` with one solved leading derivative per equation.
#[derive(Debug)]
pub struct PdeSystem {
    pub id: String,
    pub description: String,
    pub parameters: Vec<String>,
    pub dependents: Vec<Dependent>,
    pub sources: Vec<Dependent>,
    pub functions: Vec<(String, FuncId)>,
    pub equations: Vec<Expr>,
    pub rules: Vec<LeadingRule>,
    pub assumptions: Vec<String>,
    pub ranking: Ranking,
    rank_of: HashMap<String, usize>,
    cache: Mutex<HashMap<AtomId, Expr>>,
}

impl PdeSystem {
    pub fn new(spec: SystemSpec) -> Result<PdeSystem> {
        if spec.leading.is_empty() {
            return Err(SysError::NotReducible(spec.id));
        }
        if spec.leading.len() != spec.equations.len() {
            return Err(SysError::LeadingCount(spec.equations.len(), spec.leading.len()));
        }
        let mut rank_of = HashMap::new();
        for d in spec.dependents.iter().chain(&spec.sources) {
            for c in d.components() {
                let n = rank_of.len();
                rank_of.entry(c).or_insert(n);
            }
        }
        let mut rules = Vec::new();
        for (index, (eq, lead)) in spec.equations.iter().zip(&spec.leading).enumerate() {
            if !rank_of.contains_key(&*lead.var.dep) {
                return Err(SysError::UnknownVariable(lead.var.dep.to_string()));
            }
            let latom = if lead.source {
                Atom::Source(lead.var.clone())
            } else {
                Atom::Jet(lead.var.clone())
            };
            let rhs = match &lead.rhs {
                Some(r) => r.clone(),
                None => solve_linear(eq, intern(latom)).ok_or_else(|| SysError::NotSolvable {
                    index,
                    leading: lead.var.to_string(),
                })?,
            };
            rules.push(LeadingRule {
                var: lead.var.clone(),
                source: lead.source,
                rhs,
            });
        }
        for (i, a) in rules.iter().enumerate() {
            for (j, b) in rules.iter().enumerate() {
                if i != j && a.var.dep == b.var.dep && a.source == b.source && a.var.idx.divides(&b.var.idx) {
                    return Err(SysError::DivisibleLeading(a.var.to_string(), b.var.to_string()));
                }
            }
        }
        let sys = PdeSystem {
            id: spec.id,
            description: spec.description,
            parameters: spec.parameters,
            dependents: spec.dependents,
            sources: spec.sources,
            functions: spec.functions,
            equations: spec.equations,
            rules,
            assumptions: spec.assumptions,
            ranking: spec.ranking,
            rank_of,
            cache: Mutex::new(HashMap::new()),
        };
        for rule in &sys.rules {
            for id in rule.rhs.atoms_deep() {
                let jet = match &*atom(id) {
                    Atom::Jet(j) | Atom::Source(j) => j.clone(),
                    _ => continue,
                };
                if !sys.rank_of.contains_key(&*jet.dep) {
                    return Err(SysError::UnknownVariable(jet.dep.to_string()));
                }
                if sys.compare(&jet, &rule.var) != Ordering::Less {
                    return Err(SysError::RankingViolation {
                        leading: rule.var.to_string(),
                        jet: jet.to_string(),
                    });
                }
            }
        }
        let mut reduced = Vec::new();
        for rule in &sys.rules {
            reduced.push(sys.reduce(&rule.rhs));
        }
        let mut sys = sys;
        for (rule, rhs) in sys.rules.iter_mut().zip(reduced) {
            rule.rhs = rhs;
        }
        for (index, g) in sys.equations.iter().enumerate() {
            let r = sys.reduce(g);
            if !r.is_zero() {
                return Err(SysError::Inconsistent {
                    index,
                    residual: r.to_string(),
                });
            }
        }
        Ok(sys)
    }

    fn rank_key(&self, j: &JetVar) -> [u32; 6] {
        let i = &j.idx.0;
        let dep = self.rank_of.get(&*j.dep).copied().unwrap_or(usize::MAX) as u32;
        // earlier declarations rank higher
        let dep = u32::MAX - dep;
        match self.ranking {
            Ranking::Orderly => [i[0] as u32, j.idx.order(), i[1] as u32, i[2] as u32, i[3] as u32, dep],
            Ranking::DependentsFirst => [i[0] as u32, j.idx.order(), dep, i[1] as u32, i[2] as u32, i[3] as u32],
        }
    }

    /// Ranking comparison of two jet variables.
    pub fn compare(&self, a: &JetVar, b: &JetVar) -> Ordering {
        self.rank_key(a).cmp(&self.rank_key(b))
    }

    /// Scalar component names of all dependents, in declaration order.
    pub fn dependent_names(&self) -> Vec<String> {
        self.dependents.iter().flat_map(Dependent::components).collect()
    }

    pub fn source_names(&self) -> Vec<String> {
        self.sources.iter().flat_map(Dependent::components).collect()
    }

    /// Jet order of equation `a`, counting dependents only.
    pub fn equation_order(&self, a: usize) -> u32 {
        jet_order(&self.equations[a]).unwrap_or(0)
    }

    fn dynamic_equations(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.equations.len()).filter(|&a| !self.rules[a].source)
    }

    pub fn order(&self) -> u32 {
        self.dynamic_equations().map(|a| self.equation_order(a)).max().unwrap_or(0)
    }

    pub fn min_equation_order(&self) -> u32 {
        self.dynamic_equations().map(|a| self.equation_order(a)).min().unwrap_or(0)
    }

    /// Every leading derivative of a dependent is a first-order time derivative.
    pub fn is_evolution(&self) -> bool {
        self.rules
            .iter()
            .filter(|r| !r.source)
            .all(|r| r.var.idx.order() == 1 && r.var.idx.t_order() == 1)
    }

    fn rule_for(&self, j: &JetVar, source: bool) -> Option<&LeadingRule> {
        self.rules
            .iter()
            .find(|r| r.source == source && r.var.dep == j.dep && r.var.idx.divides(&j.idx))
    }

    /// Whether the jet (or source derivative) is a leading derivative or a
    /// derivative of one.
    pub fn is_principal(&self, j: &JetVar, source: bool) -> bool {
        self.rule_for(j, source).is_some()
    }

    /// Reduced form of a principal jet: the matching differential consequence
    /// of its solved form.
    fn consequence(&self, id: AtomId, j: &JetVar, source: bool) -> Expr {
        if let Some(e) = self.cache.lock().unwrap().get(&id) {
            return e.clone();
        }
        let rule = self.rule_for(j, source).expect("principal jet");
        let k = j.idx.minus(&rule.var.idx).unwrap();
        let out = if k == MultiIndex::ZERO {
            self.reduce(&rule.rhs)
        } else {
            let axis = k.axes().next().unwrap();
            let mut lower = j.clone();
            lower.idx.0[axis.slot()] -= 1;
            let latom = if source {
                Atom::Source(lower.clone())
            } else {
                Atom::Jet(lower.clone())
            };
            let prev = self.consequence(intern(latom), &lower, source);
            self.reduce(&total_derivative(&prev, axis))
        };
        self.cache.lock().unwrap().insert(id, out.clone());
        out
    }

    /// Canonical representative of `e` on the solution space.
    pub fn reduce(&self, e: &Expr) -> Expr {
        let mut changed = false;
        let out = e
            .map_atoms(&mut |id| {
                let a = atom(id);
                let r = match &*a {
                    Atom::Jet(j) if self.is_principal(j, false) => Some(self.consequence(id, j, false)),
                    Atom::Source(j) if self.is_principal(j, true) => Some(self.consequence(id, j, true)),
                    Atom::Func(app) => {
                        let args: Vec<Expr> = app.args.iter().map(|x| self.reduce(x)).collect();
                        if args != app.args {
                            let mut app = app.clone();
                            app.args = args;
                            Some(Expr::atom(Atom::Func(app)))
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                changed |= r.is_some();
                Ok(r)
            })
            .expect("reduction never divides by zero");
        if changed {
            out
        } else {
            e.clone()
        }
    }

    pub fn vanishes_on_solutions(&self, e: &Expr) -> bool {
        self.reduce(e).is_zero()
    }

    /// Solved forms as a substitution map from leading atoms.
    pub fn solved_forms(&self) -> HashMap<AtomId, Expr> {
        self.rules.iter().map(|r| (intern(r.atom()), r.rhs.clone())).collect()
    }
}

/// Solves `eq = 0` for the atom `lead`, assuming `eq` is affine in it.
fn solve_linear(eq: &Expr, lead: AtomId) -> Option<Expr> {
    let a = eq.partial_direct(lead);
    if a.is_zero() || a.contains_deep(lead) {
        return None;
    }
    let rules: HashMap<AtomId, Expr> = [(lead, Expr::zero())].into_iter().collect();
    let b = eq.substitute(&rules).ok()?;
    if b.contains_deep(lead) {
        return None;
    }
    (-b).checked_div(&a).ok()
}

/// A closed-form solution of a registered system.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub id: String,
    pub system_id: String,
    pub description: String,
    /// Closed-form field per scalar dependent component, in (t, x) and parameters.
    pub fields: BTreeMap<String, Expr>,
    pub parameter_defaults: BTreeMap<String, f64>,
}

impl ExactSolution {
    /// Replaces every jet in `e` by the matching derivative of its field.
    pub fn substitute(&self, e: &Expr) -> Result<Expr> {
        for f in self.fields.values() {
            if !crate::jetcalc::jet_vars(f).is_empty() {
                return Err(SysError::Unsupported(f.to_string()));
            }
        }
        let mut cache: HashMap<AtomId, Expr> = HashMap::new();
        let mut missing = None;
        let out = e.map_atoms(&mut |id| Ok(self.field_atom(id, &mut cache, &mut missing)))?;
        if let Some(m) = missing {
            return Err(SysError::MissingField(m));
        }
        Ok(out)
    }

    fn field_atom(
        &self,
        id: AtomId,
        cache: &mut HashMap<AtomId, Expr>,
        missing: &mut Option<String>,
    ) -> Option<Expr> {
        if let Some(e) = cache.get(&id) {
            return Some(e.clone());
        }
        let out = match &*atom(id) {
            Atom::Jet(j) | Atom::Source(j) => match self.fields.get(&*j.dep) {
                Some(f) => total_multi(f, &j.idx),
                None => {
                    *missing = Some(j.dep.to_string());
                    return None;
                }
            },
            Atom::Func(app) => {
                let mut app = app.clone();
                for a in app.args.iter_mut() {
                    match self.substitute(a) {
                        Ok(x) => *a = x,
                        Err(SysError::MissingField(m)) => {
                            *missing = Some(m);
                            return None;
                        }
                        Err(_) => return None,
                    }
                }
                Expr::atom(Atom::Func(app))
            }
            _ => return None,
        };
        cache.insert(id, out.clone());
        Some(out)
    }
}

/// Normalized residual of each equation of `sys` under the solution's fields.
pub fn verify_exact_solution(sol: &ExactSolution, sys: &PdeSystem) -> Result<Vec<Expr>> {
    sys.equations.iter().map(|g| sol.substitute(g)).collect()
}

/// Shared handle type used by registries.
pub type SystemRef = Arc<PdeSystem>;
