use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::atom::{Atom, Sym};
use super::value::Expr;

pub type NumericFn = fn(&[f64]) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub u32);

/// A named function of fixed arity. With `partials == None` the function is
/// generic: its partial derivatives are new atoms. Otherwise `partials[k]` is a
/// template in `Atom::Slot` placeholders giving the k-th partial.
#[derive(Debug, Clone)]
pub struct FuncDef {
    pub name: Sym,
    pub arity: usize,
    pub partials: Option<Vec<Expr>>,
    pub numeric: Option<NumericFn>,
}

impl FuncDef {
    pub fn is_generic(&self) -> bool {
        self.partials.is_none()
    }
}

type Key = (Sym, usize, Option<Vec<Expr>>);

#[derive(Default)]
struct Registry {
    defs: Vec<Arc<FuncDef>>,
    ids: HashMap<Key, FuncId>,
}

fn registry() -> &'static RwLock<Registry> {
    static CELL: OnceLock<RwLock<Registry>> = OnceLock::new();
    CELL.get_or_init(|| RwLock::new(Registry::default()))
}

pub fn func_def(id: FuncId) -> Arc<FuncDef> {
    registry().read().unwrap().defs[id.0 as usize].clone()
}

/// Placeholder standing for the function being defined inside its own
/// partial templates, as in `p'(r) = k p(r) / r`.
pub fn self_marker() -> FuncId {
    static CELL: OnceLock<FuncId> = OnceLock::new();
    *CELL.get_or_init(|| {
        let mut w = registry().write().unwrap();
        let id = FuncId(w.defs.len() as u32);
        w.defs.push(Arc::new(FuncDef {
            name: Arc::from("self"),
            arity: 0,
            partials: None,
            numeric: None,
        }));
        id
    })
}

/// Registers (or finds) a function. Identical definitions share one id, so
/// parsing the same text twice yields structurally equal expressions.
/// Templates may refer to the function itself through [`self_marker`].
pub fn register_function(name: &str, arity: usize, partials: Option<Vec<Expr>>) -> FuncId {
    let key: Key = (Arc::from(name), arity, partials.clone());
    if let Some(&id) = registry().read().unwrap().ids.get(&key) {
        return id;
    }
    let marker = self_marker();
    let id = {
        let mut w = registry().write().unwrap();
        if let Some(&id) = w.ids.get(&key) {
            return id;
        }
        let id = FuncId(w.defs.len() as u32);
        w.defs.push(Arc::new(FuncDef {
            name: key.0.clone(),
            arity,
            partials: partials.clone(),
            numeric: None,
        }));
        w.ids.insert(key, id);
        id
    };
    if let Some(ts) = partials {
        if ts.iter().any(|t| t.mentions_function(marker)) {
            let resolved = ts.iter().map(|t| t.replace_function(marker, id)).collect();
            patch_partials(id, resolved);
        }
    }
    id
}

fn insert_raw(name: &str, numeric: NumericFn) -> FuncId {
    let mut w = registry().write().unwrap();
    let id = FuncId(w.defs.len() as u32);
    w.defs.push(Arc::new(FuncDef {
        name: Arc::from(name),
        arity: 1,
        partials: Some(Vec::new()),
        numeric: Some(numeric),
    }));
    id
}

fn patch_partials(id: FuncId, partials: Vec<Expr>) {
    let mut w = registry().write().unwrap();
    let slot = &mut w.defs[id.0 as usize];
    let mut def = (**slot).clone();
    def.partials = Some(partials);
    *slot = Arc::new(def);
}

struct Builtins {
    sin: FuncId,
    cos: FuncId,
    exp: FuncId,
}

fn builtins() -> &'static Builtins {
    static CELL: OnceLock<Builtins> = OnceLock::new();
    CELL.get_or_init(|| {
        let sin = insert_raw("sin", |a| a[0].sin());
        let cos = insert_raw("cos", |a| a[0].cos());
        let exp = insert_raw("exp", |a| a[0].exp());
        let arg = Expr::atom(Atom::Slot(0));
        let app = |f| Expr::apply_unchecked(f, vec![arg.clone()]);
        patch_partials(sin, vec![app(cos)]);
        patch_partials(cos, vec![-app(sin)]);
        patch_partials(exp, vec![app(exp)]);
        Builtins { sin, cos, exp }
    })
}

/// The built-in elementary functions `sin`, `cos`, `exp`.
pub fn lookup_builtin(name: &str) -> Option<FuncId> {
    let b = builtins();
    match name {
        "sin" => Some(b.sin),
        "cos" => Some(b.cos),
        "exp" => Some(b.exp),
        _ => None,
    }
}
