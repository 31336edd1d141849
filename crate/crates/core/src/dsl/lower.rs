use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::Range;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::parser::{BinOp, CurrentAst, ExprKind, ExprNode, FuncAst, Ident, ItemAst, SolutionAst, SystemAst, VectorFieldAst};
use super::{Diagnostic, Document};
use crate::conslaw::{ConservedCurrent, CurrentKind, Field};
use crate::expr::{
    atom, intern, lookup_builtin, register_function, self_marker, Atom, Axis, Expr, FuncId, JetVar, MultiIndex, Q,
    VectorExpr,
};
use crate::jetcalc::{tcurl, tdiv, tgrad, total_di, total_dt};
use crate::mappings::{Constraint, MappingVector};
use crate::sysdef::{
    verify_exact_solution, Dependent, ExactSolution, LeadingSpec, PdeSystem, Ranking, SystemRef, SystemSpec, TensorRole,
};

/// Looks up systems defined outside the document being read.
pub trait Resolver {
    fn system(&self, id: &str) -> Option<SystemRef>;
}

impl Resolver for () {
    fn system(&self, _: &str) -> Option<SystemRef> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Entity {
    System(SystemRef),
    Current(ConservedCurrent),
    Solution(ExactSolution),
    VectorField(MappingVector),
}

impl Entity {
    pub fn id(&self) -> &str {
        match self {
            Entity::System(s) => &s.id,
            Entity::Current(c) => &c.id,
            Entity::Solution(s) => &s.id,
            Entity::VectorField(v) => &v.id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Entity::System(_) => "system",
            Entity::Current(_) => "current",
            Entity::Solution(_) => "solution",
            Entity::VectorField(_) => "vectorfield",
        }
    }
}

const RESERVED: &[&str] = &[
    "t", "x1", "x2", "x3", "dt", "di", "grad", "div", "curl", "dot", "cross", "sin", "cos", "exp", "vector",
];

type LResult<T> = Result<T, Diagnostic>;

#[derive(Debug, Clone)]
enum Val {
    S(Expr),
    V(VectorExpr),
}

#[derive(Debug, Clone, Copy)]
struct Var {
    source: bool,
    vector: bool,
}

struct Scope<'a> {
    text: &'a str,
    params: HashSet<String>,
    vars: HashMap<String, Var>,
    funcs: HashMap<String, FuncId>,
    slots: HashMap<String, u8>,
    this: Option<(String, usize)>,
    jets: bool,
}

impl<'a> Scope<'a> {
    fn new(text: &'a str) -> Scope<'a> {
        Scope {
            text,
            params: HashSet::new(),
            vars: HashMap::new(),
            funcs: HashMap::new(),
            slots: HashMap::new(),
            this: None,
            jets: false,
        }
    }

    fn for_system(text: &'a str, sys: &PdeSystem, jets: bool) -> Scope<'a> {
        let mut s = Scope::new(text);
        s.params = sys.parameters.iter().cloned().collect();
        for (list, source) in [(&sys.dependents, false), (&sys.sources, true)] {
            for d in list {
                s.declare(d, source);
            }
        }
        s.funcs = sys.functions.iter().cloned().collect();
        s.jets = jets;
        s
    }

    fn declare(&mut self, d: &Dependent, source: bool) {
        let vector = d.role == TensorRole::Vector;
        self.vars.insert(d.name.clone(), Var { source, vector });
        if vector {
            for c in d.components() {
                self.vars.insert(c, Var { source, vector: false });
            }
        }
    }

    fn err<T>(&self, span: &Range<usize>, msg: impl AsRef<str>) -> LResult<T> {
        Err(Diagnostic::error(self.text, span.clone(), msg.as_ref()))
    }

    fn scalar(&self, n: &ExprNode) -> LResult<Expr> {
        match self.expr(n)? {
            Val::S(e) => Ok(e),
            Val::V(_) => self.err(&n.span, "expected a scalar, found a vector"),
        }
    }

    fn vector(&self, n: &ExprNode) -> LResult<VectorExpr> {
        match self.expr(n)? {
            Val::V(v) => Ok(v),
            Val::S(_) => self.err(&n.span, "expected a vector, found a scalar"),
        }
    }

    fn int_constant(&self, n: &ExprNode) -> LResult<i64> {
        let e = self.scalar(n)?;
        match e.as_constant() {
            Some(c) if c.is_integer() => match c.to_integer().to_i64() {
                Some(k) => Ok(k),
                None => self.err(&n.span, "integer out of range"),
            },
            _ => self.err(&n.span, "expected an integer constant"),
        }
    }

    fn expr(&self, n: &ExprNode) -> LResult<Val> {
        match &n.kind {
            ExprKind::Num(s) => Ok(Val::S(Expr::constant(parse_decimal(s)))),
            ExprKind::Name(name) => self.name(name, &n.span),
            ExprKind::Vector(items) => {
                if items.len() != 3 {
                    return self.err(&n.span, format!("vectors have 3 components, found {}", items.len()));
                }
                let a = self.scalar(&items[0])?;
                let b = self.scalar(&items[1])?;
                let c = self.scalar(&items[2])?;
                Ok(Val::V(VectorExpr::new(a, b, c)))
            }
            ExprKind::Neg(inner) => Ok(match self.expr(inner)? {
                Val::S(e) => Val::S(-e),
                Val::V(v) => Val::V(-v),
            }),
            ExprKind::Bin(op, a, b) => self.binary(*op, a, b, &n.span),
            ExprKind::Call { name, derivs, args } => self.call(name, derivs, args, &n.span),
        }
    }

    fn binary(&self, op: BinOp, a: &ExprNode, b: &ExprNode, span: &Range<usize>) -> LResult<Val> {
        if op == BinOp::Pow {
            let base = self.scalar(a)?;
            let k = self.int_constant(b)?;
            let Ok(k) = i32::try_from(k) else {
                return self.err(&b.span, "exponent out of range");
            };
            return match base.pow(k) {
                Ok(e) => Ok(Val::S(e)),
                Err(e) => self.err(span, e.to_string()),
            };
        }
        let (x, y) = (self.expr(a)?, self.expr(b)?);
        let out = match (op, x, y) {
            (BinOp::Add, Val::S(x), Val::S(y)) => Val::S(x + y),
            (BinOp::Add, Val::V(x), Val::V(y)) => Val::V(x + y),
            (BinOp::Sub, Val::S(x), Val::S(y)) => Val::S(x - y),
            (BinOp::Sub, Val::V(x), Val::V(y)) => Val::V(x - y),
            (BinOp::Add | BinOp::Sub, _, _) => return self.err(span, "cannot add a scalar and a vector"),
            (BinOp::Mul, Val::S(x), Val::S(y)) => Val::S(x * y),
            (BinOp::Mul, Val::S(x), Val::V(y)) | (BinOp::Mul, Val::V(y), Val::S(x)) => Val::V(y.scale(&x)),
            (BinOp::Mul, Val::V(_), Val::V(_)) => {
                return self.err(span, "cannot multiply two vectors; use dot or cross")
            }
            (BinOp::Div, x, Val::S(y)) => {
                if y.is_zero() {
                    return self.err(&b.span, "division by zero");
                }
                match x {
                    Val::S(x) => Val::S(x.checked_div(&y).expect("nonzero divisor")),
                    Val::V(v) => Val::V(v.map(|c| c.checked_div(&y).expect("nonzero divisor"))),
                }
            }
            (BinOp::Div, _, Val::V(_)) => return self.err(&b.span, "cannot divide by a vector"),
            (BinOp::Pow, _, _) => unreachable!(),
        };
        Ok(out)
    }

    fn name(&self, name: &str, span: &Range<usize>) -> LResult<Val> {
        if let Some(&k) = self.slots.get(name) {
            return Ok(Val::S(Expr::atom(Atom::Slot(k))));
        }
        if let Some(axis) = Axis::from_name(name) {
            return Ok(Val::S(Expr::coord(axis)));
        }
        if self.params.contains(name) {
            return Ok(Val::S(Expr::param(name)));
        }
        let (base, idx) = match name.split_once('_') {
            Some((base, suffix)) => match MultiIndex::parse_suffix(suffix) {
                Some(idx) if self.vars.contains_key(base) => (base, idx),
                Some(_) => return self.err(span, format!("unknown variable `{base}`")),
                None => return self.err(span, format!("bad derivative suffix `{suffix}`")),
            },
            None => (name, MultiIndex::ZERO),
        };
        let Some(var) = self.vars.get(base) else {
            if self.funcs.contains_key(name) || lookup_builtin(name).is_some() {
                return self.err(span, format!("function `{name}` needs arguments"));
            }
            return self.err(span, format!("unknown identifier `{name}`"));
        };
        if !self.jets {
            return self.err(
                span,
                format!("`{name}` is a field variable; only t, x1, x2, x3 and parameters are allowed here"),
            );
        }
        let make = |dep: &str| {
            let j = JetVar::new(dep, idx);
            if var.source {
                Expr::source(&j)
            } else {
                Expr::jet_var(&j)
            }
        };
        if var.vector {
            Ok(Val::V(VectorExpr::from_fn(|i| make(&format!("{base}{}", i + 1)))))
        } else {
            Ok(Val::S(make(base)))
        }
    }

    fn arity(&self, name: &str, args: &[ExprNode], n: usize, span: &Range<usize>) -> LResult<()> {
        if args.len() != n {
            return self.err(span, format!("`{name}` takes {n} argument(s), got {}", args.len()));
        }
        Ok(())
    }

    fn call(&self, name: &str, derivs: &[u8], args: &[ExprNode], span: &Range<usize>) -> LResult<Val> {
        let user = self.funcs.get(name).copied();
        if derivs.is_empty() && user.is_none() {
            let op = match name {
                "dt" | "grad" | "div" | "curl" => Some(1),
                "di" | "dot" | "cross" => Some(2),
                _ => None,
            };
            if let Some(n) = op {
                self.arity(name, args, n, span)?;
                return self.operator(name, args);
            }
        }
        if let Some((this, n)) = &self.this {
            if this == name {
                if !derivs.is_empty() {
                    return self.err(span, "a function's own derivatives cannot appear in its templates");
                }
                self.arity(name, args, *n, span)?;
                let args = args.iter().map(|a| self.scalar(a)).collect::<LResult<Vec<_>>>()?;
                return Ok(Val::S(Expr::apply_unchecked(self_marker(), args)));
            }
        }
        let Some(func) = user.or_else(|| lookup_builtin(name)) else {
            return self.err(span, format!("unknown function `{name}`"));
        };
        let def = crate::expr::func_def(func);
        self.arity(name, args, def.arity, span)?;
        let args = args.iter().map(|a| self.scalar(a)).collect::<LResult<Vec<_>>>()?;
        if derivs.is_empty() {
            return Ok(Val::S(Expr::apply_unchecked(func, args)));
        }
        let slots: Vec<Expr> = (0..def.arity).map(|k| Expr::atom(Atom::Slot(k as u8))).collect();
        let mut template = Expr::apply_unchecked(func, slots);
        for &k in derivs {
            if k as usize > def.arity {
                return self.err(span, format!("`{name}` has no argument {k}"));
            }
            template = template.partial(intern(Atom::Slot(k - 1)));
        }
        let rules: HashMap<_, _> = args
            .into_iter()
            .enumerate()
            .map(|(k, a)| (intern(Atom::Slot(k as u8)), a))
            .collect();
        match template.substitute_unchecked(&rules) {
            Ok(e) => Ok(Val::S(e)),
            Err(e) => self.err(span, e.to_string()),
        }
    }

    fn operator(&self, name: &str, args: &[ExprNode]) -> LResult<Val> {
        Ok(match name {
            "dt" => match self.expr(&args[0])? {
                Val::S(e) => Val::S(total_dt(&e)),
                Val::V(v) => Val::V(v.map(total_dt)),
            },
            "di" => {
                let k = self.int_constant(&args[1])?;
                if !(1..=3).contains(&k) {
                    return self.err(&args[1].span, "direction must be 1, 2 or 3");
                }
                let k = k as usize;
                match self.expr(&args[0])? {
                    Val::S(e) => Val::S(total_di(&e, k)),
                    Val::V(v) => Val::V(v.map(|c| total_di(c, k))),
                }
            }
            "grad" => Val::V(tgrad(&self.scalar(&args[0])?)),
            "div" => Val::S(tdiv(&self.vector(&args[0])?)),
            "curl" => Val::V(tcurl(&self.vector(&args[0])?)),
            "dot" => Val::S(self.vector(&args[0])?.dot(&self.vector(&args[1])?)),
            "cross" => Val::V(self.vector(&args[0])?.cross(&self.vector(&args[1])?)),
            _ => unreachable!(),
        })
    }
}

fn parse_decimal(s: &str) -> Q {
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{whole}{frac}").parse().expect("lexer yields digits");
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Q::new(digits, scale)
}

fn val_to_field(v: Val) -> Field {
    match v {
        Val::S(e) => Field::Scalar(e),
        Val::V(v) => Field::Vector(v),
    }
}

struct Lowerer<'a> {
    text: &'a str,
    resolver: &'a dyn Resolver,
    systems: HashMap<String, SystemRef>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
}

/// Lowers parsed items. Systems are built first so later items may refer to
/// any system in the same document regardless of order.
pub fn lower_document(text: &str, items: &[ItemAst], resolver: &dyn Resolver) -> Result<Document, Vec<Diagnostic>> {
    let mut lw = Lowerer {
        text,
        resolver,
        systems: HashMap::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
    };
    let mut slots: Vec<Option<Entity>> = vec![None; items.len()];
    let mut seen: HashSet<(&'static str, String)> = HashSet::new();
    for (k, item) in items.iter().enumerate() {
        if let ItemAst::System(s) = item {
            match lw.system(s) {
                Ok(sys) => {
                    let sys = Arc::new(sys);
                    if lw.systems.insert(sys.id.clone(), sys.clone()).is_some() {
                        let id = s.id.as_ref().expect("parser sets ids");
                        lw.errors.push(Diagnostic::error(text, id.span.clone(), &format!("duplicate system `{}`", id.name)));
                    }
                    slots[k] = Some(Entity::System(sys));
                }
                Err(d) => lw.errors.push(d),
            }
        }
    }
    for (k, item) in items.iter().enumerate() {
        let (key, res) = match item {
            ItemAst::System(_) => continue,
            ItemAst::Current(c) => (
                ("current", format!("{}/{}", c.system.name, c.id.name)),
                lw.current(c).map(Entity::Current),
            ),
            ItemAst::Solution(s) => (("solution", s.id.name.clone()), lw.solution(s).map(Entity::Solution)),
            ItemAst::VectorField(v) => (("vectorfield", v.id.name.clone()), lw.vectorfield(v).map(Entity::VectorField)),
        };
        match res {
            Ok(e) => {
                if !seen.insert(key.clone()) {
                    let span = item_span(item);
                    lw.errors.push(Diagnostic::error(text, span, &format!("duplicate {} `{}`", key.0, key.1)));
                }
                slots[k] = Some(e);
            }
            Err(d) => lw.errors.push(d),
        }
    }
    if !lw.errors.is_empty() {
        lw.errors.sort_by_key(|d| d.span.start);
        return Err(lw.errors);
    }
    Ok(Document {
        entities: slots.into_iter().flatten().collect(),
        warnings: lw.warnings,
    })
}

fn item_span(item: &ItemAst) -> Range<usize> {
    match item {
        ItemAst::System(s) => s.id.as_ref().map_or(0..0, |i| i.span.clone()),
        ItemAst::Current(c) => c.id.span.clone(),
        ItemAst::Solution(s) => s.id.span.clone(),
        ItemAst::VectorField(v) => v.id.span.clone(),
    }
}

impl Lowerer<'_> {
    fn err<T>(&self, span: &Range<usize>, msg: impl AsRef<str>) -> LResult<T> {
        Err(Diagnostic::error(self.text, span.clone(), msg.as_ref()))
    }

    fn lookup_system(&self, id: &Ident) -> LResult<SystemRef> {
        if let Some(s) = self.systems.get(&id.name) {
            return Ok(s.clone());
        }
        match self.resolver.system(&id.name) {
            Some(s) => Ok(s),
            None => self.err(&id.span, format!("unknown system `{}`", id.name)),
        }
    }

    fn system(&mut self, ast: &SystemAst) -> LResult<PdeSystem> {
        let text = self.text;
        let id = ast.id.as_ref().expect("parser sets ids");
        let mut names: HashSet<String> = HashSet::new();
        let mut claim = |ident: &Ident, extra: &[String]| -> LResult<()> {
            if RESERVED.contains(&ident.name.as_str()) {
                return Err(Diagnostic::error(text, ident.span.clone(), &format!("`{}` is reserved", ident.name)));
            }
            for n in std::iter::once(&ident.name).chain(extra) {
                if !names.insert(n.clone()) {
                    return Err(Diagnostic::error(text, ident.span.clone(), &format!("`{n}` is declared twice")));
                }
            }
            Ok(())
        };
        let mut spec = SystemSpec {
            id: id.name.clone(),
            description: ast.description.clone().unwrap_or_default(),
            ..Default::default()
        };
        for p in &ast.parameters {
            claim(p, &[])?;
            spec.parameters.push(p.name.clone());
        }
        for (list, out) in [(&ast.dependents, &mut spec.dependents), (&ast.sources, &mut spec.sources)] {
            for (vector, name) in list {
                if name.name.contains('_') {
                    return self.err(&name.span, "variable names may not contain `_`");
                }
                let d = if *vector {
                    Dependent::vector(&name.name)
                } else {
                    Dependent::scalar(&name.name)
                };
                let extra = if *vector { d.components() } else { Vec::new() };
                claim(name, &extra)?;
                out.push(d);
            }
        }
        let mut scope = Scope::new(text);
        scope.params = spec.parameters.iter().cloned().collect();
        for f in &ast.functions {
            claim(&f.name, &[])?;
            let func = self.function(&scope, f)?;
            scope.funcs.insert(f.name.name.clone(), func);
            spec.functions.push((f.name.name.clone(), func));
        }
        for d in &spec.dependents {
            scope.declare(d, false);
        }
        for d in &spec.sources {
            scope.declare(d, true);
        }
        scope.jets = true;
        for (lhs, rhs) in &ast.equations {
            let mut g = scope.expr(lhs)?;
            if let Some(r) = rhs {
                let span = lhs.span.start..r.span.end;
                g = match (g, scope.expr(r)?) {
                    (Val::S(a), Val::S(b)) => Val::S(a - b),
                    (Val::V(a), Val::V(b)) => Val::V(a - b),
                    _ => return self.err(&span, "the two sides of an equation differ in shape"),
                };
            }
            match g {
                Val::S(e) => spec.equations.push(e),
                Val::V(v) => spec.equations.extend(v.0),
            }
        }
        for (jet, rhs) in &ast.leading {
            let lead = scope.name(&jet.name, &jet.span)?;
            let rhs = rhs.as_ref().map(|r| scope.expr(r)).transpose()?;
            let pairs: Vec<(Expr, Option<Expr>)> = match (lead, rhs) {
                (Val::S(l), None) => vec![(l, None)],
                (Val::S(l), Some(Val::S(r))) => vec![(l, Some(r))],
                (Val::V(l), None) => l.0.into_iter().map(|c| (c, None)).collect(),
                (Val::V(l), Some(Val::V(r))) => l.0.into_iter().zip(r.0).map(|(c, r)| (c, Some(r))).collect(),
                _ => return self.err(&jet.span, "leading derivative and solved form differ in shape"),
            };
            for (l, rhs) in pairs {
                let found = l.atoms().into_iter().next().map(|id| atom(id));
                let (var, source) = match found.as_deref() {
                    Some(Atom::Jet(j)) => (j.clone(), false),
                    Some(Atom::Source(j)) => (j.clone(), true),
                    _ => return self.err(&jet.span, format!("`{}` is not a jet variable", jet.name)),
                };
                spec.leading.push(LeadingSpec { var, source, rhs });
            }
        }
        for a in &ast.assume {
            if !scope.vars.contains_key(&a.name) && !scope.funcs.contains_key(&a.name) && !scope.params.contains(&a.name)
            {
                return self.err(&a.span, format!("cannot assume unknown name `{}`", a.name));
            }
            spec.assumptions.push(a.name.clone());
        }
        if let Some(r) = &ast.ranking {
            spec.ranking = match Ranking::from_name(&r.name) {
                Some(r) => r,
                None => return self.err(&r.span, "ranking must be `orderly` or `dependents-first`"),
            };
        }
        PdeSystem::new(spec).map_err(|e| Diagnostic::error(text, id.span.clone(), &format!("system `{}`: {e}", id.name)))
    }

    fn function(&self, outer: &Scope, f: &FuncAst) -> LResult<FuncId> {
        let arity = f.params.len();
        if arity == 0 {
            return self.err(&f.name.span, "functions take at least one argument");
        }
        let Some(partials) = &f.partials else {
            return Ok(register_function(&f.name.name, arity, None));
        };
        let mut scope = Scope::new(self.text);
        scope.params = outer.params.clone();
        scope.funcs = outer.funcs.clone();
        scope.this = Some((f.name.name.clone(), arity));
        for (k, p) in f.params.iter().enumerate() {
            if scope.slots.insert(p.name.clone(), k as u8).is_some() {
                return self.err(&p.span, format!("argument `{}` repeated", p.name));
            }
        }
        let mut templates: Vec<Option<Expr>> = vec![None; arity];
        for (d, body) in partials {
            let k = d
                .name
                .strip_prefix('d')
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| (1..=arity).contains(k));
            let Some(k) = k else {
                return self.err(&d.span, format!("expected d1..d{arity}, found `{}`", d.name));
            };
            if templates[k - 1].is_some() {
                return self.err(&d.span, format!("`{}` given twice", d.name));
            }
            templates[k - 1] = Some(scope.scalar(body)?);
        }
        let Some(templates) = templates.into_iter().collect::<Option<Vec<_>>>() else {
            return self.err(&f.name.span, format!("`{}` needs every partial d1..d{arity}", f.name.name));
        };
        Ok(register_function(&f.name.name, arity, Some(templates)))
    }

    fn current(&mut self, ast: &CurrentAst) -> LResult<ConservedCurrent> {
        let sys = self.lookup_system(&ast.system)?;
        let scope = Scope::for_system(self.text, &sys, true);
        let Some(kind) = CurrentKind::from_name(&ast.kind.name) else {
            let names: Vec<&str> = CurrentKind::ALL.iter().map(|k| k.name()).collect();
            return self.err(&ast.kind.span, format!("unknown kind `{}`; expected one of {}", ast.kind.name, names.join(", ")));
        };
        let density = ast.density.as_ref().map(|d| scope.expr(d)).transpose()?.map(val_to_field);
        let flux = ast.flux.as_ref().map(|d| scope.expr(d)).transpose()?.map(val_to_field);
        if let (Some(d), Some(node)) = (&density, &ast.density) {
            if d.is_zero() {
                self.warnings.push(Diagnostic::warning(self.text, node.span.clone(), "density is identically zero"));
            }
        }
        let mut c = ConservedCurrent::new(&ast.id.name, &sys.id, kind, density, flux)
            .map_err(|e| Diagnostic::error(self.text, ast.kind.span.clone(), &e.to_string()))?;
        c.description = ast.description.clone().unwrap_or_default();
        if let Some(flag) = &ast.closed {
            c.closed_only = match flag.name.as_str() {
                "true" => true,
                "false" => false,
                _ => return self.err(&flag.span, "expected `true` or `false`"),
            };
        }
        Ok(c)
    }

    fn solution(&mut self, ast: &SolutionAst) -> LResult<ExactSolution> {
        let sys = self.lookup_system(&ast.system)?;
        let mut scope = Scope::for_system(self.text, &sys, false);
        let mut defaults = BTreeMap::new();
        for (name, value) in &ast.parameters {
            let v = scope.scalar(value)?;
            let Some(c) = v.as_constant() else {
                return self.err(&value.span, "parameter values must be numbers");
            };
            defaults.insert(name.name.clone(), c.to_f64().unwrap_or(f64::NAN));
            scope.params.insert(name.name.clone());
        }
        let mut fields = BTreeMap::new();
        for (name, value) in &ast.fields {
            let Some(var) = scope.vars.get(&name.name).copied() else {
                return self.err(&name.span, format!("`{}` is not a variable of `{}`", name.name, sys.id));
            };
            let assigned: Vec<(String, Expr)> = match (var.vector, scope.expr(value)?) {
                (false, Val::S(e)) => vec![(name.name.clone(), e)],
                (true, Val::V(v)) => v.0.into_iter().enumerate().map(|(i, e)| (format!("{}{}", name.name, i + 1), e)).collect(),
                _ => return self.err(&value.span, format!("shape does not match `{}`", name.name)),
            };
            for (k, e) in assigned {
                if fields.insert(k.clone(), e).is_some() {
                    return self.err(&name.span, format!("field `{k}` given twice"));
                }
            }
        }
        let sol = ExactSolution {
            id: ast.id.name.clone(),
            system_id: sys.id.clone(),
            description: ast.description.clone().unwrap_or_default(),
            fields,
            parameter_defaults: defaults,
        };
        let residuals = verify_exact_solution(&sol, &sys).map_err(|e| Diagnostic::error(self.text, ast.id.span.clone(), &e.to_string()))?;
        for (k, r) in residuals.iter().enumerate() {
            if !r.is_zero() {
                return self.err(&ast.id.span, format!("not a solution: equation {} leaves residual {r}", k + 1));
            }
        }
        Ok(sol)
    }

    fn vectorfield(&mut self, ast: &VectorFieldAst) -> LResult<MappingVector> {
        let scope = Scope::new(self.text);
        let Some(components) = &ast.components else {
            return self.err(&ast.id.span, "missing `components` section");
        };
        let v = scope.vector(components)?;
        let Some(c) = &ast.constraint else {
            return self.err(&ast.id.span, "missing `constraint` section");
        };
        let Some(constraint) = Constraint::from_name(&c.name) else {
            return self.err(&c.span, "constraint must be `divergence-free`, `curl-free` or `constant`");
        };
        let mut m = MappingVector::new(&ast.id.name, v, constraint).map_err(|e| Diagnostic::error(self.text, components.span.clone(), &e.to_string()))?;
        m.description = ast.description.clone().unwrap_or_default();
        Ok(m)
    }
}
