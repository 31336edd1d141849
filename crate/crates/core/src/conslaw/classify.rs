use std::fmt;

use serde::Serialize;

use super::ansatz::{self, Problem};
use super::{check_system, ConsError, ConservedCurrent, CurrentKind, Field, Result};
use crate::expr::{atom, Atom, Axis, Expr, VectorExpr};
use crate::jetcalc::{
    curl_witness, div_witness, grad_witness, integrate_along, jet_order, jet_vars, spatial_euler, tcurl, tdiv,
    tgrad, total_di, total_dt,
};
use crate::sysdef::PdeSystem;

/// Extra jet order allowed in ansatz witnesses beyond the current's own order.
pub const DEFAULT_ORDER_SLACK: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    TrivialTypeI,
    /// Circulatory and topological currents trivial through a nonzero witness.
    TrivialTypeII,
    TrivialTypeIIa,
    TrivialTypeIIb,
    NonTrivial,
    Inconclusive,
}

impl Status {
    pub fn is_trivial(self) -> bool {
        !matches!(self, Status::NonTrivial | Status::Inconclusive)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Evidence that no witness exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    CurlOfDensityNonzero { residual: VectorExpr },
    DivOfDensityNonzero { residual: Expr },
    SpatialEulerNonzero { dependent: String, residual: Expr },
    /// An order-zero expression with essential dependence on the dependents
    /// cannot equal a total derivative on solutions.
    OrderObstruction { bound: u32 },
    /// A gradient-type law whose potential is not constant on solutions.
    NonConstantPotential { potential: Expr },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::CurlOfDensityNonzero { residual } => write!(f, "Curl T on solutions = {residual}"),
            Certificate::DivOfDensityNonzero { residual } => write!(f, "Div T on solutions = {residual}"),
            Certificate::SpatialEulerNonzero { dependent, residual } => {
                write!(f, "spatial Euler operator for {dependent} = {residual}")
            }
            Certificate::OrderObstruction { bound } => {
                write!(f, "order obstruction: order-0 expression is not a total derivative (bound {bound})")
            }
            Certificate::NonConstantPotential { potential } => write!(f, "potential {potential} is not constant"),
        }
    }
}

/// Potentials realizing a trivial current.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub theta: Option<Field>,
    pub lambda: Option<Field>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrivialityVerdict {
    pub current_id: String,
    pub system_id: String,
    pub kind: CurrentKind,
    pub status: Status,
    pub witness: Option<Witness>,
    pub certificate: Option<Certificate>,
    pub boundary_law: Option<ConservedCurrent>,
    pub order_bound: u32,
    pub diagnostics: Vec<String>,
}

impl TrivialityVerdict {
    fn new(c: &ConservedCurrent, order_bound: u32) -> TrivialityVerdict {
        TrivialityVerdict {
            current_id: c.id.clone(),
            system_id: c.system_id.clone(),
            kind: c.kind,
            status: Status::Inconclusive,
            witness: None,
            certificate: None,
            boundary_law: None,
            order_bound,
            diagnostics: Vec::new(),
        }
    }

    fn trivial(mut self, status: Status, witness: Witness) -> TrivialityVerdict {
        self.status = status;
        self.witness = Some(witness);
        self
    }

    fn nontrivial(mut self, cert: Certificate) -> TrivialityVerdict {
        self.status = Status::NonTrivial;
        self.certificate = Some(cert);
        self
    }

    fn inconclusive(mut self, why: &str) -> TrivialityVerdict {
        self.status = Status::Inconclusive;
        self.diagnostics.push(why.to_string());
        self
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.diagnostics.push(msg.into());
    }
}

fn shape_err(c: &ConservedCurrent) -> ConsError {
    ConsError::ShapeError {
        kind: c.kind,
        expected: "a density and flux matching its kind".into(),
    }
}

fn field_order(f: &Option<Field>) -> u32 {
    match f {
        Some(Field::Scalar(e)) => jet_order(e).unwrap_or(0),
        Some(Field::Vector(v)) => v.iter().filter_map(jet_order).max().unwrap_or(0),
        None => 0,
    }
}

fn bound_for(c: &ConservedCurrent, order_bound: Option<u32>) -> u32 {
    order_bound.unwrap_or_else(|| field_order(&c.density).max(field_order(&c.flux)) + DEFAULT_ORDER_SLACK)
}

fn rv(sys: &PdeSystem, v: &VectorExpr) -> VectorExpr {
    v.map(|e| sys.reduce(e))
}

fn has_dependents(e: &Expr) -> bool {
    !jet_vars(e).is_empty()
}

/// Every term of `e` that involves the dependents contains a jet of order
/// at least one.
fn all_terms_differentiated(e: &Expr) -> bool {
    e.num().0.keys().all(|m| {
        let involves = m.atoms().any(|a| has_dependents(&Expr::from_id(a)));
        !involves
            || m.0.iter()
                .any(|&(a, k)| k > 0 && matches!(&*atom(a), Atom::Jet(j) if j.order() >= 1))
    })
}

/// Order-zero obstruction: `exprs` are order zero with essential dependence
/// on the dependents, every equation is at least first order, and no
/// spatial leading derivative is replaced by an undifferentiated term. A
/// total derivative of anything then reduces to terms of order one or more.
fn order_obstruction(sys: &PdeSystem, exprs: &[&Expr]) -> bool {
    let orders: Vec<Option<u32>> = exprs.iter().map(|e| jet_order(e)).collect();
    if !exprs.iter().any(|e| has_dependents(e)) || orders.iter().any(|o| o.is_some_and(|o| o > 0)) {
        return false;
    }
    sys.min_equation_order() >= 1
        && sys
            .rules
            .iter()
            .filter(|r| r.var.idx.t_order() == 0 && !r.source)
            .all(|r| all_terms_differentiated(&r.rhs))
}

/// Depends on t alone.
fn time_only(e: &Expr) -> bool {
    !has_dependents(e)
        && !e.atoms_deep().iter().any(|&a| matches!(&*atom(a), Atom::Source(_)))
        && (1..=3).all(|i| total_di(e, i).is_zero())
}

fn spatially_constant(e: &Expr) -> bool {
    (1..=3).all(|i| total_di(e, i).is_zero())
}

fn components(v: &VectorExpr) -> Vec<Expr> {
    v.iter().cloned().collect()
}

/// Witness of the identity first on the raw expression, then on its reduction.
fn homotopy<I, O, E>(raw: &I, reduced: &I, holds: impl Fn(&I) -> bool, build: impl Fn(&I) -> std::result::Result<O, E>) -> Option<O> {
    [raw, reduced]
        .into_iter()
        .filter(|x| holds(x))
        .find_map(|x| build(x).ok())
}

fn vector_from(xs: &[Expr]) -> VectorExpr {
    VectorExpr::new(xs[0].clone(), xs[1].clone(), xs[2].clone())
}

fn genericity_note(v: &mut TrivialityVerdict, what: &str, residual: &Expr) {
    v.note(format!(
        "{what} is time-dependent for generic solutions (reduced rate {residual} is not the zero form)"
    ));
}

/// Classifies any current by its kind.
pub fn classify(c: &ConservedCurrent, sys: &PdeSystem, order_bound: Option<u32>) -> Result<TrivialityVerdict> {
    match c.kind {
        CurrentKind::Volumetric => classify_volumetric(c, sys, order_bound),
        CurrentKind::SurfaceFlux => classify_surfaceflux(c, sys, order_bound),
        CurrentKind::Circulatory => classify_circulatory(c, sys, order_bound),
        _ => classify_topological(c, sys, order_bound),
    }
}

/// Circulatory `(T, X)`: trivial when `T = Grad Θ` and `X = -D_t Θ` on solutions.
pub fn classify_circulatory(
    c: &ConservedCurrent,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<TrivialityVerdict> {
    check_system(c, sys)?;
    let t = c.density_vector().ok_or_else(|| shape_err(c))?;
    let x = c.flux_scalar().ok_or_else(|| shape_err(c))?;
    let bound = bound_for(c, order_bound);
    let v = TrivialityVerdict::new(c, bound);
    let t_r = rv(sys, t);
    let x_r = sys.reduce(x);
    if t_r.is_zero() && x_r.is_zero() {
        let w = Witness {
            theta: Some(Field::Scalar(Expr::zero())),
            lambda: None,
        };
        return Ok(v.trivial(Status::TrivialTypeI, w));
    }
    let curl = rv(sys, &tcurl(&t_r));
    if !curl.is_zero() {
        return Ok(v.nontrivial(Certificate::CurlOfDensityNonzero { residual: curl }));
    }
    let mut theta = homotopy(t, &t_r, |w| tcurl(w).is_zero(), grad_witness);
    if let Some(th) = &theta {
        let r = sys.reduce(&(x + total_dt(th)));
        if !r.is_zero() {
            theta = time_only(&r)
                .then(|| integrate_along(&r, Axis::T).ok())
                .flatten()
                .map(|g| th - g);
        }
    }
    if theta.is_none() {
        if order_obstruction(sys, &t_r.iter().collect::<Vec<_>>()) {
            return Ok(v.nontrivial(Certificate::OrderObstruction { bound }));
        }
        let image = |_: usize, b: &Expr| {
            let mut out: Vec<Expr> = (1..=3).map(|i| sys.reduce(&total_di(b, i))).collect();
            out.push(sys.reduce(&total_dt(b)));
            out
        };
        let mut target = components(&t_r);
        target.push(-&x_r);
        let p = Problem {
            sys,
            components: 1,
            image: &image,
            target: target.clone(),
        };
        theta = ansatz::search(&p, &target, bound).map(|s| s[0].clone());
    }
    let Some(theta) = theta else {
        return Ok(v.inconclusive("no potential found within the ansatz bound"));
    };
    let ok = rv(sys, &(t - &tgrad(&theta))).is_zero() && sys.reduce(&(x + total_dt(&theta))).is_zero();
    if !ok {
        return Ok(v.inconclusive("candidate potential failed re-substitution"));
    }
    let theta_r = sys.reduce(&theta);
    let status = if spatially_constant(&theta_r) {
        Status::TrivialTypeI
    } else {
        Status::TrivialTypeII
    };
    let w = Witness {
        theta: Some(Field::Scalar(theta)),
        lambda: None,
    };
    Ok(v.trivial(status, w))
}

/// Surface-flux `(T, X)`: trivial when `T = Curl Θ` and `X = -D_t Θ + Grad Λ`
/// on solutions.
pub fn classify_surfaceflux(
    c: &ConservedCurrent,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<TrivialityVerdict> {
    check_system(c, sys)?;
    let t = c.density_vector().ok_or_else(|| shape_err(c))?;
    let x = c.flux_vector().ok_or_else(|| shape_err(c))?;
    let bound = bound_for(c, order_bound);
    let mut v = TrivialityVerdict::new(c, bound);
    let t_r = rv(sys, t);
    let x_r = rv(sys, x);
    if t.is_zero() && x_r.is_zero() {
        let w = Witness {
            theta: Some(Field::Vector(VectorExpr::zero())),
            lambda: Some(Field::Scalar(Expr::zero())),
        };
        return Ok(v.trivial(Status::TrivialTypeI, w));
    }
    let div = sys.reduce(&tdiv(&t_r));
    if !div.is_zero() {
        return Ok(v.nontrivial(Certificate::DivOfDensityNonzero { residual: div }));
    }
    let theta = homotopy(t, &t_r, |w| tdiv(w).is_zero(), curl_witness);
    let (theta, lambda) = match theta {
        Some(th) => {
            let r = rv(sys, &(x + &th.map(total_dt)));
            let lambda = grad_potential(sys, &r, bound);
            (th, lambda)
        }
        None => {
            if order_obstruction(sys, &t_r.iter().collect::<Vec<_>>()) {
                return Ok(v.nontrivial(Certificate::OrderObstruction { bound }));
            }
            let image = |k: usize, b: &Expr| {
                if k < 3 {
                    let th = VectorExpr::unit(k).scale(b);
                    let mut out = components(&rv(sys, &tcurl(&th)));
                    out.extend(components(&rv(sys, &-th.map(total_dt))));
                    out
                } else {
                    let mut out = vec![Expr::zero(); 3];
                    out.extend(components(&rv(sys, &tgrad(b))));
                    out
                }
            };
            let mut target = components(&t_r);
            target.extend(components(&x_r));
            let p = Problem {
                sys,
                components: 4,
                image: &image,
                target: target.clone(),
            };
            let Some(s) = ansatz::search(&p, &target, bound) else {
                return Ok(v.inconclusive("no potentials found within the ansatz bound"));
            };
            (vector_from(&s[..3]), Some(s[3].clone()))
        }
    };
    if !rv(sys, &(t - &tcurl(&theta))).is_zero() {
        return Ok(v.inconclusive("candidate potential failed re-substitution"));
    }
    let remainder = rv(sys, &(x + &theta.map(total_dt)));
    match &lambda {
        Some(l) if !(&remainder - &rv(sys, &tgrad(l))).is_zero() => {
            return Ok(v.inconclusive("candidate flux potential failed re-substitution"));
        }
        None => {
            if !rv(sys, &tcurl(&remainder)).is_zero() {
                return Ok(v.inconclusive("flux remainder is not curl-free on solutions"));
            }
            v.note(format!(
                "flux remainder {remainder} is a spatial curl-type law with no potential in the ansatz bound"
            ));
        }
        _ => {}
    }
    let theta_r = rv(sys, &theta);
    let gauge = t_r.is_zero() && (tcurl(&theta_r).is_zero() || theta_r.is_zero());
    let status = if gauge {
        if x_r.is_zero() {
            Status::TrivialTypeI
        } else {
            Status::TrivialTypeIIa
        }
    } else {
        if t_r.is_zero() && !order_obstruction(sys, &theta_r.iter().collect::<Vec<_>>()) {
            v.note("reduction of the density potential to a gradient is not excluded");
        }
        Status::TrivialTypeIIb
    };
    let w = Witness {
        theta: Some(Field::Vector(theta)),
        lambda: lambda.map(Field::Scalar),
    };
    let mut v = v.trivial(status, w);
    if status == Status::TrivialTypeIIb {
        v.boundary_law = detect_boundary_law(&v, sys);
        if v.boundary_law.is_none() {
            if let Some(Field::Vector(th)) = v.witness.as_ref().and_then(|w| w.theta.clone()) {
                let rate = rv(sys, &tcurl(&th.map(total_dt)));
                genericity_note(&mut v, "circulation of the density potential", &rate.iter().find(|e| !e.is_zero()).cloned().unwrap_or_default());
            }
        }
    }
    Ok(v)
}

/// `Λ` with `Grad Λ = r` on solutions.
fn grad_potential(sys: &PdeSystem, r: &VectorExpr, bound: u32) -> Option<Expr> {
    if r.is_zero() {
        return Some(Expr::zero());
    }
    if tcurl(r).is_zero() {
        if let Ok(l) = grad_witness(r) {
            return Some(l);
        }
    }
    let image = |_: usize, b: &Expr| components(&rv(sys, &tgrad(b)));
    let target = components(r);
    let p = Problem {
        sys,
        components: 1,
        image: &image,
        target: target.clone(),
    };
    ansatz::search(&p, &target, bound).map(|s| s[0].clone())
}

/// `Λ` with `Curl Λ = r` on solutions.
fn curl_potential(sys: &PdeSystem, r: &VectorExpr, bound: u32) -> Option<VectorExpr> {
    if r.is_zero() {
        return Some(VectorExpr::zero());
    }
    if tdiv(r).is_zero() {
        if let Ok(l) = curl_witness(r) {
            return Some(l);
        }
    }
    let image = |k: usize, b: &Expr| components(&rv(sys, &tcurl(&VectorExpr::unit(k).scale(b))));
    let target = components(r);
    let p = Problem {
        sys,
        components: 3,
        image: &image,
        target: target.clone(),
    };
    ansatz::search(&p, &target, bound).map(|s| vector_from(&s))
}

/// Volumetric `(T, X)`: trivial when `T = Div Θ` and `X = -D_t Θ + Curl Λ`
/// on solutions.
pub fn classify_volumetric(
    c: &ConservedCurrent,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<TrivialityVerdict> {
    check_system(c, sys)?;
    let t = c.density_scalar().ok_or_else(|| shape_err(c))?;
    let x = c.flux_vector().ok_or_else(|| shape_err(c))?;
    let bound = bound_for(c, order_bound);
    let mut v = TrivialityVerdict::new(c, bound);
    let t_r = sys.reduce(t);
    let x_r = rv(sys, x);
    if t.is_zero() && x_r.is_zero() {
        let w = Witness {
            theta: Some(Field::Vector(VectorExpr::zero())),
            lambda: Some(Field::Vector(VectorExpr::zero())),
        };
        return Ok(v.trivial(Status::TrivialTypeI, w));
    }
    let density_order = jet_order(&t_r).unwrap_or(0);
    let euler_decisive = sys.is_evolution() || density_order < sys.min_equation_order();
    if !t_r.is_zero() && euler_decisive {
        for dep in sys.dependent_names() {
            let e = spatial_euler(&t_r, &dep);
            if !e.is_zero() {
                return Ok(v.nontrivial(Certificate::SpatialEulerNonzero {
                    dependent: dep,
                    residual: e,
                }));
            }
        }
    }
    let theta = homotopy(t, &t_r, |e| crate::jetcalc::is_total_div(e).unwrap_or(false), div_witness);
    let (theta, lambda) = match theta {
        Some(th) => {
            let r = rv(sys, &(x + &th.map(total_dt)));
            let lambda = curl_potential(sys, &r, bound);
            (th, lambda)
        }
        None => {
            if order_obstruction(sys, &[&t_r]) {
                return Ok(v.nontrivial(Certificate::OrderObstruction { bound }));
            }
            if !euler_decisive {
                v.note("density order is not below the system order; the spatial Euler test is not decisive");
            }
            let image = |k: usize, b: &Expr| {
                let (th, lam) = if k < 3 {
                    (VectorExpr::unit(k).scale(b), VectorExpr::zero())
                } else {
                    (VectorExpr::zero(), VectorExpr::unit(k - 3).scale(b))
                };
                let mut out = vec![sys.reduce(&tdiv(&th))];
                out.extend(components(&rv(sys, &(&tcurl(&lam) - &th.map(total_dt)))));
                out
            };
            let mut target = vec![t_r.clone()];
            target.extend(components(&x_r));
            let p = Problem {
                sys,
                components: 6,
                image: &image,
                target: target.clone(),
            };
            let Some(s) = ansatz::search(&p, &target, bound) else {
                return Ok(v.inconclusive("no potentials found within the ansatz bound"));
            };
            (vector_from(&s[..3]), Some(vector_from(&s[3..])))
        }
    };
    if !sys.reduce(&(t - tdiv(&theta))).is_zero() {
        return Ok(v.inconclusive("candidate potential failed re-substitution"));
    }
    let remainder = rv(sys, &(x + &theta.map(total_dt)));
    match &lambda {
        Some(l) if !(&remainder - &rv(sys, &tcurl(l))).is_zero() => {
            return Ok(v.inconclusive("candidate flux potential failed re-substitution"));
        }
        None => {
            if !sys.reduce(&tdiv(&remainder)).is_zero() {
                return Ok(v.inconclusive("flux remainder is not divergence-free on solutions"));
            }
            v.note(format!(
                "flux remainder {remainder} is a spatial divergence-type law with no potential in the ansatz bound"
            ));
        }
        _ => {}
    }
    let theta_r = rv(sys, &theta);
    let gauge = t_r.is_zero() && (tdiv(&theta_r).is_zero() || theta_r.is_zero());
    let status = if gauge {
        if x_r.is_zero() {
            Status::TrivialTypeI
        } else {
            Status::TrivialTypeIIa
        }
    } else {
        if t_r.is_zero() && !order_obstruction(sys, &theta_r.iter().collect::<Vec<_>>()) {
            v.note("reduction of the density potential to a curl is not excluded");
        }
        Status::TrivialTypeIIb
    };
    let w = Witness {
        theta: Some(Field::Vector(theta.clone())),
        lambda: lambda.map(Field::Vector),
    };
    let mut v = v.trivial(status, w);
    if status == Status::TrivialTypeIIb {
        v.boundary_law = detect_boundary_law(&v, sys);
        if v.boundary_law.is_none() {
            let rate = sys.reduce(&total_dt(&tdiv(&theta)));
            genericity_note(&mut v, "flux of the density potential through closed surfaces", &rate);
        }
    }
    Ok(v)
}

/// Spatial laws `Div X = 0`, `Curl X = 0`, `Grad X = 0` on solutions.
pub fn classify_topological(
    c: &ConservedCurrent,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<TrivialityVerdict> {
    check_system(c, sys)?;
    let bound = bound_for(c, order_bound);
    let mut v = TrivialityVerdict::new(c, bound);
    match c.kind {
        CurrentKind::SpatialGrad => {
            let x = c.flux_scalar().ok_or_else(|| shape_err(c))?;
            let x_r = sys.reduce(x);
            if spatially_constant(&x_r) && !has_dependents(&x_r) {
                let w = Witness {
                    theta: Some(Field::Scalar(x_r)),
                    lambda: None,
                };
                return Ok(v.trivial(Status::TrivialTypeI, w));
            }
            Ok(v.nontrivial(Certificate::NonConstantPotential { potential: x_r }))
        }
        CurrentKind::SpatialDiv | CurrentKind::SpatialCurl => {
            let x = c.flux_vector().ok_or_else(|| shape_err(c))?;
            let x_r = rv(sys, x);
            let is_div = c.kind == CurrentKind::SpatialDiv;
            if x_r.is_zero() {
                let theta = if is_div {
                    Field::Vector(VectorExpr::zero())
                } else {
                    Field::Scalar(Expr::zero())
                };
                let w = Witness {
                    theta: Some(theta),
                    lambda: None,
                };
                return Ok(v.trivial(Status::TrivialTypeI, w));
            }
            let theta = if is_div {
                homotopy(x, &x_r, |w| tdiv(w).is_zero(), curl_witness)
                    .map(Field::Vector)
                    .or_else(|| {
                        if order_obstruction(sys, &x_r.iter().collect::<Vec<_>>()) {
                            return None;
                        }
                        curl_potential(sys, &x_r, bound).map(Field::Vector)
                    })
            } else {
                homotopy(x, &x_r, |w| tcurl(w).is_zero(), grad_witness)
                    .map(Field::Scalar)
                    .or_else(|| {
                        if order_obstruction(sys, &x_r.iter().collect::<Vec<_>>()) {
                            return None;
                        }
                        grad_potential(sys, &x_r, bound).map(Field::Scalar)
                    })
            };
            if let Some(th) = theta {
                let ok = match &th {
                    Field::Vector(a) => rv(sys, &(x - &tcurl(a))).is_zero(),
                    Field::Scalar(p) => rv(sys, &(x - &tgrad(p))).is_zero(),
                };
                if ok {
                    let w = Witness {
                        theta: Some(th),
                        lambda: None,
                    };
                    return Ok(v.trivial(Status::TrivialTypeII, w));
                }
                v.note("candidate potential failed re-substitution");
            }
            let mut v = if order_obstruction(sys, &x_r.iter().collect::<Vec<_>>()) {
                v.nontrivial(Certificate::OrderObstruction { bound })
            } else {
                v.inconclusive("no potential found within the ansatz bound")
            };
            v.boundary_law = topological_boundary_law(c, sys);
            Ok(v)
        }
        _ => Err(shape_err(c)),
    }
}

/// Closed-surface or closed-curve constant of motion `(Θ, 0)` induced by
/// a type IIb witness, when its boundary integral is time-independent.
pub fn detect_boundary_law(v: &TrivialityVerdict, sys: &PdeSystem) -> Option<ConservedCurrent> {
    if v.status != Status::TrivialTypeIIb {
        return None;
    }
    let Some(Field::Vector(theta)) = v.witness.as_ref()?.theta.clone() else {
        return None;
    };
    let id = format!("{}-boundary", v.current_id);
    let (kind, holds) = match v.kind {
        CurrentKind::Volumetric => (CurrentKind::SurfaceFlux, sys.reduce(&total_dt(&tdiv(&theta))).is_zero()),
        CurrentKind::SurfaceFlux => (CurrentKind::Circulatory, rv(sys, &tcurl(&theta.map(total_dt))).is_zero()),
        _ => return None,
    };
    holds.then(|| closed_law(&id, &v.system_id, kind, theta))
}

fn closed_law(id: &str, system_id: &str, kind: CurrentKind, theta: VectorExpr) -> ConservedCurrent {
    let flux = match kind {
        CurrentKind::SurfaceFlux => Field::Vector(VectorExpr::zero()),
        _ => Field::Scalar(Expr::zero()),
    };
    let mut c = ConservedCurrent::new(id, system_id, kind, Some(Field::Vector(theta)), Some(flux))
        .expect("boundary law shapes");
    c.closed_only = true;
    c
}

/// The closed-domain constant of motion carried by a spatial divergence or
/// curl law `X`, when `D_t X` integrates to zero over closed surfaces or
/// curves.
pub fn topological_boundary_law(c: &ConservedCurrent, sys: &PdeSystem) -> Option<ConservedCurrent> {
    let x = c.flux_vector()?.clone();
    let id = format!("{}-boundary", c.id);
    match c.kind {
        CurrentKind::SpatialDiv => sys
            .reduce(&tdiv(&x.map(total_dt)))
            .is_zero()
            .then(|| closed_law(&id, &c.system_id, CurrentKind::SurfaceFlux, x)),
        CurrentKind::SpatialCurl => rv(sys, &tcurl(&x.map(total_dt)))
            .is_zero()
            .then(|| closed_law(&id, &c.system_id, CurrentKind::Circulatory, x)),
        _ => None,
    }
}

/// Outcome of comparing two currents of the same kind.
#[derive(Debug, Clone, Serialize)]
pub struct Equivalence {
    /// `Some(true)` when the difference is trivial, `Some(false)` when it is
    /// certified non-trivial, `None` when undecided.
    pub equivalent: Option<bool>,
    pub difference: TrivialityVerdict,
}

/// Two currents are equivalent when their difference is trivial.
pub fn equivalent(
    a: &ConservedCurrent,
    b: &ConservedCurrent,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<Equivalence> {
    let d = a.difference(b)?;
    let verdict = classify(&d, sys, order_bound)?;
    let equivalent = match verdict.status {
        Status::NonTrivial => Some(false),
        Status::Inconclusive => None,
        _ => Some(true),
    };
    Ok(Equivalence {
        equivalent,
        difference: verdict,
    })
}

/// Re-substitutes a witness into the kind's trivial form: density minus the
/// potential's derivative, and flux plus `D_t Θ` minus the derivative of `Λ`,
/// both reduced on solutions. Absent potentials count as zero.
pub fn check_witness(c: &ConservedCurrent, w: &Witness, sys: &PdeSystem) -> Result<bool> {
    check_system(c, sys)?;
    let vec_of = |f: &Option<Field>| match f {
        Some(Field::Vector(v)) => Some(v.clone()),
        None => Some(VectorExpr::zero()),
        _ => None,
    };
    let scalar_of = |f: &Option<Field>| match f {
        Some(Field::Scalar(e)) => Some(e.clone()),
        None => Some(Expr::zero()),
        _ => None,
    };
    let bad = || shape_err(c);
    let zero = |f: Field| f.reduce(sys).is_zero();
    Ok(match c.kind {
        CurrentKind::Volumetric => {
            let theta = vec_of(&w.theta).ok_or_else(bad)?;
            let lambda = vec_of(&w.lambda).ok_or_else(bad)?;
            let t = c.density_scalar().ok_or_else(bad)?;
            let x = c.flux_vector().ok_or_else(bad)?;
            zero(Field::Scalar(t - &tdiv(&theta)))
                && zero(Field::Vector(&(x + &theta.map(total_dt)) - &tcurl(&lambda)))
        }
        CurrentKind::SurfaceFlux => {
            let theta = vec_of(&w.theta).ok_or_else(bad)?;
            let lambda = scalar_of(&w.lambda).ok_or_else(bad)?;
            let t = c.density_vector().ok_or_else(bad)?;
            let x = c.flux_vector().ok_or_else(bad)?;
            zero(Field::Vector(t - &tcurl(&theta)))
                && (c.closed_only || zero(Field::Vector(&(x + &theta.map(total_dt)) - &tgrad(&lambda))))
        }
        CurrentKind::Circulatory => {
            let theta = scalar_of(&w.theta).ok_or_else(bad)?;
            let t = c.density_vector().ok_or_else(bad)?;
            let x = c.flux_scalar().ok_or_else(bad)?;
            zero(Field::Vector(t - &tgrad(&theta))) && (c.closed_only || zero(Field::Scalar(x + &total_dt(&theta))))
        }
        CurrentKind::SpatialDiv => {
            let theta = vec_of(&w.theta).ok_or_else(bad)?;
            zero(Field::Vector(c.flux_vector().ok_or_else(bad)? - &tcurl(&theta)))
        }
        CurrentKind::SpatialCurl => {
            let theta = scalar_of(&w.theta).ok_or_else(bad)?;
            zero(Field::Vector(c.flux_vector().ok_or_else(bad)? - &tgrad(&theta)))
        }
        CurrentKind::SpatialGrad => {
            let x = sys.reduce(c.flux_scalar().ok_or_else(bad)?);
            spatially_constant(&x) && !has_dependents(&x)
        }
    })
}
