use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::atom::{atom, intern, Atom, AtomId, Axis, JetVar};
use super::display::atom_text;
use super::func::func_def;
use super::poly::Poly;
use super::value::Expr;
use super::{ExprError, Result};

type RealFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Numeric values for atoms plus callables for functions without a built-in
/// numeric implementation. Function callables are keyed by their printed
/// head, e.g. `p` or `p@1` for the first partial.
#[derive(Clone, Default)]
pub struct Binding {
    values: HashMap<AtomId, f64>,
    funcs: HashMap<String, RealFn>,
}

impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Binding")
            .field("values", &self.values.len())
            .field("funcs", &self.funcs.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn set(&mut self, a: Atom, v: f64) -> &mut Self {
        self.values.insert(intern(a), v);
        self
    }

    pub fn set_id(&mut self, id: AtomId, v: f64) -> &mut Self {
        self.values.insert(id, v);
        self
    }

    pub fn coord(&mut self, axis: Axis, v: f64) -> &mut Self {
        self.set(Atom::Coord(axis), v)
    }

    pub fn param(&mut self, name: &str, v: f64) -> &mut Self {
        self.set(Atom::Param(Arc::from(name)), v)
    }

    pub fn jet(&mut self, j: &JetVar, v: f64) -> &mut Self {
        self.set(Atom::Jet(j.clone()), v)
    }

    pub fn point(&mut self, t: f64, x: [f64; 3]) -> &mut Self {
        self.coord(Axis::T, t)
            .coord(Axis::X1, x[0])
            .coord(Axis::X2, x[1])
            .coord(Axis::X3, x[2])
    }

    pub fn func<F>(&mut self, head: &str, f: F) -> &mut Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.funcs.insert(head.to_string(), Arc::new(f));
        self
    }

    fn atom_value(&self, id: AtomId) -> Result<f64> {
        if let Some(&v) = self.values.get(&id) {
            return Ok(v);
        }
        let a = atom(id);
        let Atom::Func(app) = &*a else {
            return Err(ExprError::MissingBinding(atom_text(id)));
        };
        let args = app
            .args
            .iter()
            .map(|e| self.eval(e))
            .collect::<Result<Vec<f64>>>()?;
        let def = func_def(app.func);
        if let Some(f) = def.numeric {
            if app.deriv.iter().all(|&k| k == 0) {
                return Ok(f(&args));
            }
        }
        let text = atom_text(id);
        let head = &text[..text.find('(').unwrap_or(text.len())];
        match self.funcs.get(head) {
            Some(f) => Ok(f(&args)),
            None => Err(ExprError::MissingBinding(head.to_string())),
        }
    }

    fn eval_poly(&self, p: &Poly) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &p.0 {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for &(a, e) in &m.0 {
                t *= self.atom_value(a)?.powi(e);
            }
            total += t;
        }
        Ok(total)
    }

    /// Evaluates `e` in double precision.
    pub fn eval(&self, e: &Expr) -> Result<f64> {
        let mut v = self.eval_poly(e.num())?;
        if !e.is_laurent() {
            v /= self.eval_poly(e.den())?;
        }
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NumericOverflow(e.to_string()))
        }
    }
}

impl Expr {
    pub fn eval_point(&self, binding: &Binding) -> Result<f64> {
        binding.eval(self)
    }
}
