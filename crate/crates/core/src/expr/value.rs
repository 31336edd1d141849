use std::collections::{BTreeSet, HashMap};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use smallvec::smallvec;

use super::atom::{atom, intern, Atom, AtomId, Axis, FuncApp, JetVar, MultiIndex};
use super::func::{func_def, FuncId};
use super::poly::{q_int, Mono, Poly, Q};
use super::{ExprError, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Frac {
    num: Poly,
    den: Poly,
}

/// An immutable differential function in normal form. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Frac>);

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

impl Expr {
    fn raw(num: Poly, den: Poly) -> Expr {
        Expr(Arc::new(Frac { num, den }))
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr::raw(p, Poly::one())
    }

    /// Builds `num / den`, bringing it to normal form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Expr> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Expr::zero());
        }
        if den.len() == 1 {
            let (m, c) = den.0.iter().next().unwrap();
            let k = Q::one() / c;
            return Ok(Expr::from_poly(num.mul_term(&k, &m.inv())));
        }
        let g = den.monomial_gcd().inv();
        let den = den.mul_term(&Q::one(), &g);
        let num = num.mul_term(&Q::one(), &g);
        let gn = num.monomial_gcd();
        let num0 = num.mul_term(&Q::one(), &gn.inv());
        if let Some(q) = num0.div_exact(&den) {
            return Ok(Expr::from_poly(q.mul_term(&Q::one(), &gn)));
        }
        let c = Q::one() / den.first_coeff().unwrap();
        Ok(Expr::raw(num.scale(&c), den.scale(&c)))
    }

    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_poly(Poly::constant(q_int(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::from_poly(Poly::constant(Q::new(n.into(), d.into())))
    }

    pub fn constant(c: Q) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn from_id(id: AtomId) -> Expr {
        Expr::from_poly(Poly::term(Q::one(), Mono::var(id, 1)))
    }

    pub fn atom(a: Atom) -> Expr {
        Expr::from_id(intern(a))
    }

    pub fn coord(axis: Axis) -> Expr {
        Expr::atom(Atom::Coord(axis))
    }

    pub fn param(name: &str) -> Expr {
        Expr::atom(Atom::Param(Arc::from(name)))
    }

    pub fn jet(dep: &str, idx: MultiIndex) -> Expr {
        Expr::atom(Atom::Jet(JetVar::new(dep, idx)))
    }

    pub fn dep(name: &str) -> Expr {
        Expr::jet(name, MultiIndex::ZERO)
    }

    pub fn jet_var(j: &JetVar) -> Expr {
        Expr::atom(Atom::Jet(j.clone()))
    }

    pub fn source(j: &JetVar) -> Expr {
        Expr::atom(Atom::Source(j.clone()))
    }

    pub fn apply(func: FuncId, args: Vec<Expr>) -> Result<Expr> {
        let def = func_def(func);
        if def.arity != args.len() {
            return Err(ExprError::Arity {
                name: def.name.to_string(),
                expected: def.arity,
                got: args.len(),
            });
        }
        Ok(Expr::apply_unchecked(func, args))
    }

    pub(crate) fn apply_unchecked(func: FuncId, args: Vec<Expr>) -> Expr {
        let n = args.len();
        Expr::atom(Atom::Func(FuncApp {
            func,
            deriv: smallvec![0; n],
            args,
        }))
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.num.is_one() && self.0.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.0.den.is_one() {
            self.0.num.as_constant()
        } else {
            None
        }
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &Poly {
        &self.0.den
    }

    /// True when the denominator is 1, i.e. the expression is a Laurent polynomial.
    pub fn is_laurent(&self) -> bool {
        self.0.den.is_one()
    }

    /// Atoms appearing directly (not inside function arguments).
    pub fn atoms(&self) -> BTreeSet<AtomId> {
        self.0.num.atoms().chain(self.0.den.atoms()).collect()
    }

    /// Atoms appearing anywhere, including inside function arguments.
    pub fn atoms_deep(&self) -> BTreeSet<AtomId> {
        let mut out = BTreeSet::new();
        self.collect_deep(&mut out);
        out
    }

    fn collect_deep(&self, out: &mut BTreeSet<AtomId>) {
        for id in self.atoms() {
            if out.insert(id) {
                if let Atom::Func(app) = &*atom(id) {
                    for a in &app.args {
                        a.collect_deep(out);
                    }
                }
            }
        }
    }

    pub fn contains_deep(&self, id: AtomId) -> bool {
        self.atoms_deep().contains(&id)
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr> {
        if other.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Expr::from_parts(
            self.0.num.mul(&other.0.den),
            self.0.den.mul(&other.0.num),
        )
    }

    pub fn recip(&self) -> Result<Expr> {
        Expr::one().checked_div(self)
    }

    pub fn pow(&self, k: i32) -> Result<Expr> {
        if k < 0 {
            return self.recip()?.pow(-k);
        }
        if self.0.num.len() == 1 && self.is_laurent() {
            let (m, c) = self.0.num.0.iter().next().unwrap();
            let coeff = num_traits::pow::pow(c.clone(), k as usize);
            return Ok(Expr::from_poly(Poly::term(coeff, m.pow(k))));
        }
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut k = k as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, k: &Q) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr::raw(self.0.num.scale(k), self.0.den.clone())
    }

    /// Formal derivative in a single atom, treating every other atom
    /// (function applications included) as independent.
    pub fn partial_direct(&self, id: AtomId) -> Expr {
        let dn = poly_partial(&self.0.num, id);
        if self.is_laurent() {
            return Expr::from_poly(dn);
        }
        let dd = poly_partial(&self.0.den, id);
        if dd.is_zero() {
            return Expr::from_parts(dn, self.0.den.clone()).unwrap();
        }
        let top = dn.mul(&self.0.den).sub(&self.0.num.mul(&dd));
        Expr::from_parts(top, self.0.den.mul(&self.0.den)).unwrap()
    }

    /// Derivative in an atom, following the chain rule into function arguments.
    pub fn partial(&self, id: AtomId) -> Expr {
        let mut out = Expr::zero();
        for a in self.atoms() {
            let inner = if a == id {
                Expr::one()
            } else if let Atom::Func(app) = &*atom(a) {
                let mut s = Expr::zero();
                for (k, arg) in app.args.iter().enumerate() {
                    let d = arg.partial(id);
                    if !d.is_zero() {
                        s = s + Expr::func_partial(app, k) * d;
                    }
                }
                s
            } else {
                continue;
            };
            if !inner.is_zero() {
                out = out + self.partial_direct(a) * inner;
            }
        }
        out
    }

    /// The partial of a function application in argument `k`.
    pub fn func_partial(app: &FuncApp, k: usize) -> Expr {
        let def = func_def(app.func);
        match &def.partials {
            None => {
                let mut deriv = app.deriv.clone();
                deriv[k] += 1;
                Expr::atom(Atom::Func(FuncApp {
                    func: app.func,
                    deriv,
                    args: app.args.clone(),
                }))
            }
            Some(templates) => {
                let rules: HashMap<AtomId, Expr> = app
                    .args
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (intern(Atom::Slot(i as u8)), a.clone()))
                    .collect();
                templates[k]
                    .substitute_unchecked(&rules)
                    .expect("partial template evaluates")
            }
        }
    }

    /// Simultaneous replacement of atoms, reaching inside function arguments.
    pub fn substitute(&self, rules: &HashMap<AtomId, Expr>) -> Result<Expr> {
        for (id, rhs) in rules {
            if rhs.contains_deep(*id) {
                return Err(ExprError::CyclicSubstitution(atom_name(*id)));
            }
        }
        self.substitute_unchecked(rules)
    }

    pub(crate) fn substitute_unchecked(&self, rules: &HashMap<AtomId, Expr>) -> Result<Expr> {
        if rules.is_empty() {
            return Ok(self.clone());
        }
        let mut cache = HashMap::new();
        self.map_atoms(&mut |id| {
            if let Some(r) = rules.get(&id) {
                return Ok(Some(r.clone()));
            }
            if let Some(r) = cache.get(&id) {
                return Ok(Some(Expr::clone(r)));
            }
            if let Atom::Func(app) = &*atom(id) {
                let mut changed = false;
                let mut args = Vec::with_capacity(app.args.len());
                for a in &app.args {
                    let b = a.substitute_unchecked(rules)?;
                    changed |= &b != a;
                    args.push(b);
                }
                if changed {
                    let e = Expr::atom(Atom::Func(FuncApp {
                        func: app.func,
                        deriv: app.deriv.clone(),
                        args,
                    }));
                    cache.insert(id, e.clone());
                    return Ok(Some(e));
                }
            }
            Ok(None)
        })
    }

    /// Rebuilds the expression with each atom replaced by `f(atom)` when it
    /// returns `Some`.
    pub fn map_atoms<F>(&self, f: &mut F) -> Result<Expr>
    where
        F: FnMut(AtomId) -> Result<Option<Expr>>,
    {
        let mut repl: HashMap<AtomId, Expr> = HashMap::new();
        for id in self.atoms() {
            if let Some(e) = f(id)? {
                repl.insert(id, e);
            }
        }
        if repl.is_empty() {
            return Ok(self.clone());
        }
        let num = eval_poly(&self.0.num, &repl)?;
        if self.is_laurent() {
            return Ok(num);
        }
        let den = eval_poly(&self.0.den, &repl)?;
        num.checked_div(&den)
    }

    pub fn mentions_function(&self, f: FuncId) -> bool {
        self.atoms_deep()
            .into_iter()
            .any(|id| matches!(&*atom(id), Atom::Func(app) if app.func == f))
    }

    /// Swaps every application of `from` for one of `to`, at any depth.
    pub fn replace_function(&self, from: FuncId, to: FuncId) -> Expr {
        self.map_atoms(&mut |id| {
            let Atom::Func(app) = &*atom(id) else {
                return Ok(None);
            };
            let args: Vec<Expr> = app.args.iter().map(|a| a.replace_function(from, to)).collect();
            if app.func != from && args == app.args {
                return Ok(None);
            }
            let func = if app.func == from { to } else { app.func };
            Ok(Some(Expr::atom(Atom::Func(FuncApp {
                func,
                deriv: app.deriv.clone(),
                args,
            }))))
        })
        .expect("renaming functions never divides by zero")
    }

    /// Highest exponent of `id` in the numerator.
    pub fn degree_in(&self, id: AtomId) -> i32 {
        self.0
            .num
            .0
            .keys()
            .map(|m| m.exponent(id))
            .max()
            .unwrap_or(0)
    }
}

fn atom_name(id: AtomId) -> String {
    Expr::from_id(id).to_string()
}

fn poly_partial(p: &Poly, id: AtomId) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.0 {
        if let Some((e, rest)) = m.lower(id) {
            out.add_term(rest, c * q_int(e as i64));
        }
    }
    out
}

fn eval_poly(p: &Poly, repl: &HashMap<AtomId, Expr>) -> Result<Expr> {
    let mut kept = Poly::zero();
    let mut parts: Vec<Expr> = Vec::new();
    let mut powers: HashMap<(AtomId, i32), Expr> = HashMap::new();
    for (m, c) in &p.0 {
        if !m.atoms().any(|a| repl.contains_key(&a)) {
            kept.add_term(m.clone(), c.clone());
            continue;
        }
        let mut rest = Mono::one();
        let mut factor = Expr::one();
        for &(a, e) in &m.0 {
            match repl.get(&a) {
                Some(r) => {
                    let pw = match powers.get(&(a, e)) {
                        Some(x) => x.clone(),
                        None => {
                            let x = r.pow(e)?;
                            powers.insert((a, e), x.clone());
                            x
                        }
                    };
                    factor = &factor * &pw;
                }
                None => rest = rest.mul(&Mono::var(a, e)),
            }
        }
        if factor.is_laurent() {
            kept = kept.add(&factor.0.num.mul_term(c, &rest));
        } else {
            parts.push(factor * Expr::from_poly(Poly::term(c.clone(), rest)));
        }
    }
    let mut out = Expr::from_poly(kept);
    for e in parts {
        out = out + e;
    }
    Ok(out)
}

fn add_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.0.den == b.0.den {
        let num = a.0.num.add(&b.0.num);
        if a.is_laurent() {
            return Expr::from_poly(num);
        }
        return Expr::from_parts(num, a.0.den.clone()).unwrap();
    }
    let num = a.0.num.mul(&b.0.den).add(&b.0.num.mul(&a.0.den));
    Expr::from_parts(num, a.0.den.mul(&b.0.den)).unwrap()
}

fn mul_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.is_laurent() && b.is_laurent() {
        return Expr::from_poly(a.0.num.mul(&b.0.num));
    }
    Expr::from_parts(a.0.num.mul(&b.0.num), a.0.den.mul(&b.0.den)).unwrap()
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::raw(self.0.num.neg(), self.0.den.clone())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $body(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add_exprs);
binop!(Sub, sub, |a: &Expr, b: &Expr| add_exprs(a, &-b));
binop!(Mul, mul, mul_exprs);
// Panics when the divisor is identically zero; use `checked_div` for fallible input.
binop!(Div, div, |a: &Expr, b: &Expr| a
    .checked_div(b)
    .expect("division by zero expression"));

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
