//! Total derivatives, total vector calculus, Euler operators and exactness
//! witnesses on jet space.

use std::collections::{BTreeSet, HashMap};
use std::sync::{OnceLock, RwLock};

use num_traits::One;
use thiserror::Error;

use crate::expr::{atom, intern, Atom, AtomId, Axis, Expr, JetVar, Mono, MultiIndex, Poly, VectorExpr, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("expression lies outside the supported class: {0}")]
    UnsupportedClass(String),
    #[error("no witness could be constructed: {0}")]
    WitnessUnavailable(String),
}

pub type Result<T> = std::result::Result<T, JetError>;

/// The operators of this module, for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DifferentialOperator {
    Dt,
    Di(usize),
    TotalGrad,
    TotalDiv,
    TotalCurl,
    Euler(String),
    SpatialEuler(String),
}

fn deriv_cache() -> &'static RwLock<HashMap<(AtomId, Axis), Expr>> {
    static CELL: OnceLock<RwLock<HashMap<(AtomId, Axis), Expr>>> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

/// Total derivative of a single atom.
fn atom_derivative(id: AtomId, axis: Axis) -> Option<Expr> {
    match &*atom(id) {
        Atom::Coord(a) => (*a == axis).then(Expr::one),
        Atom::Param(_) | Atom::Slot(_) => None,
        Atom::Jet(j) => Some(Expr::jet_var(&j.derive(axis))),
        Atom::Source(j) => Some(Expr::source(&j.derive(axis))),
        Atom::Func(app) => {
            if let Some(e) = deriv_cache().read().unwrap().get(&(id, axis)) {
                return (!e.is_zero()).then(|| e.clone());
            }
            let mut out = Expr::zero();
            for (k, arg) in app.args.iter().enumerate() {
                let d = total_derivative(arg, axis);
                if !d.is_zero() {
                    out = out + Expr::func_partial(app, k) * d;
                }
            }
            deriv_cache().write().unwrap().insert((id, axis), out.clone());
            (!out.is_zero()).then_some(out)
        }
    }
}

fn poly_derivative(p: &Poly, axis: Axis) -> Expr {
    let mut lin = Poly::zero();
    let mut extra = Expr::zero();
    let mut dcache: HashMap<AtomId, Option<Expr>> = HashMap::new();
    for (m, c) in &p.0 {
        for &(a, e) in &m.0 {
            let da = dcache
                .entry(a)
                .or_insert_with(|| atom_derivative(a, axis))
                .clone();
            let Some(da) = da else { continue };
            let rest = m.mul(&Mono::var(a, -1));
            let k = c * Q::from_integer(e.into());
            if da.is_laurent() {
                lin = lin.add(&da.num().mul_term(&k, &rest));
            } else {
                extra = extra + da * Expr::from_poly(Poly::term(k, rest));
            }
        }
    }
    Expr::from_poly(lin) + extra
}

/// Chain-rule total derivative along any coordinate.
pub fn total_derivative(e: &Expr, axis: Axis) -> Expr {
    let dn = poly_derivative(e.num(), axis);
    if e.is_laurent() {
        return dn;
    }
    let dd = poly_derivative(e.den(), axis);
    let (n, d) = (Expr::from_poly(e.num().clone()), Expr::from_poly(e.den().clone()));
    (dn * &d - n * dd) / (&d * &d)
}

pub fn total_dt(e: &Expr) -> Expr {
    total_derivative(e, Axis::T)
}

/// Total derivative along the spatial axis `i` in 1..=3.
pub fn total_di(e: &Expr, i: usize) -> Expr {
    total_derivative(e, Axis::spatial(i).expect("spatial axis index in 1..=3"))
}

/// `D_J e` for a multi-index `J`.
pub fn total_multi(e: &Expr, idx: &MultiIndex) -> Expr {
    idx.axes().fold(e.clone(), |acc, a| total_derivative(&acc, a))
}

pub fn tgrad(f: &Expr) -> VectorExpr {
    VectorExpr::from_fn(|i| total_di(f, i + 1))
}

pub fn tdiv(v: &VectorExpr) -> Expr {
    (0..3).map(|i| total_di(&v[i], i + 1)).sum()
}

pub fn tcurl(v: &VectorExpr) -> VectorExpr {
    VectorExpr::new(
        total_di(&v[2], 2) - total_di(&v[1], 3),
        total_di(&v[0], 3) - total_di(&v[2], 1),
        total_di(&v[1], 1) - total_di(&v[0], 2),
    )
}

pub fn tdt_vec(v: &VectorExpr) -> VectorExpr {
    v.map(total_dt)
}

/// Jet variables occurring anywhere in `e`.
pub fn jet_vars(e: &Expr) -> BTreeSet<JetVar> {
    e.atoms_deep()
        .into_iter()
        .filter_map(|id| atom(id).as_jet().cloned())
        .collect()
}

/// Highest jet order in `e`, or `None` when no jets occur.
pub fn jet_order(e: &Expr) -> Option<u32> {
    jet_vars(e).iter().map(JetVar::order).max()
}

fn mask(idx: &MultiIndex, dirs: &[Axis]) -> (MultiIndex, MultiIndex) {
    let mut inner = MultiIndex::ZERO;
    let mut outer = *idx;
    for &a in dirs {
        inner.0[a.slot()] = idx.0[a.slot()];
        outer.0[a.slot()] = 0;
    }
    (outer, inner)
}

/// Euler operator restricted to derivatives along `dirs`, for the variable
/// `dep_label` (the dependent differentiated by `label`, which has no
/// components in `dirs`).
pub fn euler_restricted(e: &Expr, dep: &str, label: &MultiIndex, dirs: &[Axis]) -> Expr {
    let mut out = Expr::zero();
    for j in jet_vars(e) {
        if &*j.dep != dep {
            continue;
        }
        let (outer, inner) = mask(&j.idx, dirs);
        if &outer != label {
            continue;
        }
        let p = e.partial(intern(Atom::Jet(j.clone())));
        let d = total_multi(&p, &inner);
        if inner.order() % 2 == 0 {
            out = out + d;
        } else {
            out = out - d;
        }
    }
    out
}

/// Space-time Euler operator.
pub fn euler(e: &Expr, dep: &str) -> Expr {
    euler_restricted(e, dep, &MultiIndex::ZERO, &Axis::ALL)
}

/// Spatial Euler operator over the jets of `dep` carrying no t-derivative.
pub fn spatial_euler(e: &Expr, dep: &str) -> Expr {
    euler_restricted(e, dep, &MultiIndex::ZERO, &Axis::SPATIAL)
}

fn labels(e: &Expr, dirs: &[Axis]) -> BTreeSet<(String, MultiIndex)> {
    jet_vars(e)
        .into_iter()
        .map(|j| (j.dep.to_string(), mask(&j.idx, dirs).0))
        .collect()
}

fn check_class(e: &Expr) -> Result<()> {
    for id in e.atoms_deep() {
        if matches!(&*atom(id), Atom::Slot(_)) {
            return Err(JetError::UnsupportedClass("template placeholder in expression".into()));
        }
    }
    Ok(())
}

/// True when `f` is a total spatial divergence: every restricted Euler
/// operator vanishes. Functions of (t, x) alone are always divergences.
pub fn is_total_div(f: &Expr) -> Result<bool> {
    check_class(f)?;
    Ok(labels(f, &Axis::SPATIAL)
        .into_iter()
        .all(|(dep, label)| euler_restricted(f, &dep, &label, &Axis::SPATIAL).is_zero()))
}

pub fn is_total_curl(v: &VectorExpr) -> Result<bool> {
    for c in v.iter() {
        check_class(c)?;
    }
    Ok(tdiv(v).is_zero())
}

pub fn is_total_grad(v: &VectorExpr) -> Result<bool> {
    for c in v.iter() {
        check_class(c)?;
    }
    Ok(tcurl(v).is_zero())
}

fn unavailable(msg: &str) -> JetError {
    JetError::WitnessUnavailable(msg.to_string())
}

fn jet_degree(m: &Mono) -> i32 {
    m.0.iter()
        .filter(|(a, _)| matches!(&*atom(*a), Atom::Jet(_)))
        .map(|&(_, e)| e)
        .sum()
}

/// Whether the atom's value changes along `axis` other than through the
/// coordinate itself.
fn depends_on(id: AtomId, axis: Axis) -> bool {
    match &*atom(id) {
        Atom::Coord(_) | Atom::Param(_) | Atom::Slot(_) => false,
        Atom::Jet(_) | Atom::Source(_) => true,
        Atom::Func(_) => atom_derivative(id, axis).is_some(),
    }
}

/// Antiderivative along `axis` of a jet-free Laurent polynomial, when it is
/// polynomial in that coordinate.
fn integrate_coordinate(p: &Poly, axis: Axis) -> Option<Poly> {
    let x = intern(Atom::Coord(axis));
    let mut out = Poly::zero();
    for (m, c) in &p.0 {
        if m.atoms().any(|a| a != x && depends_on(a, axis)) {
            return None;
        }
        let n = m.exponent(x);
        if n == -1 {
            return None;
        }
        let k = c / Q::from_integer((n + 1).into());
        out.add_term(m.mul(&Mono::var(x, 1)), k);
    }
    Some(out)
}

/// Finds components `theta[a]` for `a` in `dirs` with `sum_a D_a theta[a] = f`.
/// Requires the restricted Euler operators of `f` to vanish; the caller verifies.
pub fn inverse_div(f: &Expr, dirs: &[Axis]) -> Result<[Expr; 4]> {
    let mut theta: [Expr; 4] = Default::default();
    if f.is_zero() {
        return Ok(theta);
    }
    if !f.is_laurent() {
        return Err(unavailable("denominator is not a monomial"));
    }
    for id in f.atoms_deep() {
        if let Atom::Func(app) = &*atom(id) {
            if app.args.iter().any(|a| !jet_vars(a).is_empty()) {
                return Err(unavailable("function of dependent variables"));
            }
        }
        if matches!(&*atom(id), Atom::Slot(_)) {
            return Err(unavailable("template placeholder"));
        }
    }
    let mut by_degree: HashMap<i32, Poly> = HashMap::new();
    for (m, c) in &f.num().0 {
        by_degree
            .entry(jet_degree(m))
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    for (d, part) in by_degree {
        if d == 0 {
            if part.atoms().any(|a| matches!(&*atom(a), Atom::Jet(_))) {
                return Err(unavailable("jet part of degree zero"));
            }
            let axis_int = dirs
                .iter()
                .find_map(|&a| integrate_coordinate(&part, a).map(|p| (a, p)));
            let Some((a, p)) = axis_int else {
                return Err(unavailable("coordinate part is not polynomial along any direction"));
            };
            theta[a.slot()] = &theta[a.slot()] + Expr::from_poly(p);
            continue;
        }
        let fd = Expr::from_poly(part);
        let scale = Q::one() / Q::from_integer(d.into());
        for j in jet_vars(&fd) {
            let mut p = fd.partial_direct(intern(Atom::Jet(j.clone())));
            let (outer, mut inner) = mask(&j.idx, dirs);
            while inner.order() > 0 {
                let axis = inner.axes().next().unwrap();
                inner.0[axis.slot()] -= 1;
                let w = Expr::jet(&j.dep, outer.plus(&inner));
                theta[axis.slot()] = &theta[axis.slot()] + (&w * &p).scale(&scale);
                p = -total_derivative(&p, axis);
            }
        }
    }
    Ok(theta)
}

/// Witness `theta` with `Div theta = f`, verified before return.
pub fn div_witness(f: &Expr) -> Result<VectorExpr> {
    let th = inverse_div(f, &Axis::SPATIAL)?;
    let v = VectorExpr::new(th[1].clone(), th[2].clone(), th[3].clone());
    if tdiv(&v) != *f {
        return Err(unavailable("divergence inverse failed verification"));
    }
    Ok(v)
}

fn integrate_remainder(g: &Expr, axis: Axis) -> Result<Expr> {
    if g.is_zero() {
        return Ok(Expr::zero());
    }
    if !g.is_laurent() || !jet_vars(g).is_empty() {
        return Err(unavailable("remainder still depends on dependent variables"));
    }
    integrate_coordinate(g.num(), axis)
        .map(Expr::from_poly)
        .ok_or_else(|| unavailable("remainder is not polynomial in the coordinate"))
}

/// Antiderivative along `axis` of a jet-free expression polynomial in that
/// coordinate.
pub fn integrate_along(g: &Expr, axis: Axis) -> Result<Expr> {
    integrate_remainder(g, axis)
}

/// Potential `phi` with `Grad phi = v`, verified before return.
pub fn grad_witness(v: &VectorExpr) -> Result<Expr> {
    let mut phi = inverse_div(&v[0], &[Axis::X1])?[1].clone();
    for (k, axis) in [(1usize, Axis::X2), (2, Axis::X3)] {
        let rem = &v[k] - total_derivative(&phi, axis);
        if rem.is_zero() {
            continue;
        }
        phi = phi + integrate_remainder(&rem, axis)?;
    }
    if tgrad(&phi) != *v {
        return Err(unavailable("gradient inverse failed verification"));
    }
    Ok(phi)
}

/// Vector potential `a` with `Curl a = v`, verified before return.
pub fn curl_witness(v: &VectorExpr) -> Result<VectorExpr> {
    let pq = inverse_div(&v[0], &[Axis::X2, Axis::X3])?;
    let (p, q) = (pq[2].clone(), pq[3].clone());
    let z2 = &v[1] + total_di(&p, 1);
    let z3 = &v[2] + total_di(&q, 1);
    let psi = if z3.is_zero() {
        Expr::zero()
    } else {
        inverse_div(&z3, &[Axis::X2])?[2].clone()
    };
    let g = z2 + total_di(&psi, 3);
    let a1 = integrate_remainder(&g, Axis::X3)? - psi;
    let a = VectorExpr::new(a1, -q, p);
    if tcurl(&a) != *v {
        return Err(unavailable("curl inverse failed verification"));
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    Grad,
    Curl,
    Div,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Scalar(Expr),
    Vector(VectorExpr),
}

/// Dispatches to the witness constructions above.
pub fn homotopy_witness(target: &Target, kind: WitnessKind) -> Result<Target> {
    match (kind, target) {
        (WitnessKind::Grad, Target::Vector(v)) => grad_witness(v).map(Target::Scalar),
        (WitnessKind::Curl, Target::Vector(v)) => curl_witness(v).map(Target::Vector),
        (WitnessKind::Div, Target::Scalar(f)) => div_witness(f).map(Target::Vector),
        _ => Err(JetError::UnsupportedClass("target shape does not match witness kind".into())),
    }
}

#[cfg(test)]
mod tests;
