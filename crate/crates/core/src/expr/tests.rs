use super::*;

fn x(i: usize) -> Expr {
    Expr::coord(Axis::spatial(i).unwrap())
}

#[test]
fn commutativity_cancels() {
    let (u, v) = (Expr::dep("u"), Expr::dep("v"));
    assert!(((&u + &v) - (&v + &u)).is_zero());
}

#[test]
fn reciprocal_cancels() {
    let rho = Expr::dep("rho");
    assert!((&rho * rho.recip().unwrap()).is_one());
}

#[test]
fn division_by_zero_is_an_error() {
    let u = Expr::dep("u");
    assert_eq!(u.checked_div(&(&u - &u)), Err(ExprError::DivisionByZero));
}

#[test]
fn rational_functions_normalize() {
    let (a, b) = (Expr::dep("a"), Expr::dep("b"));
    let s = &a + &b;
    let f = (&s * &s).checked_div(&s).unwrap();
    assert_eq!(f, s);
    let g = Expr::one().checked_div(&s).unwrap();
    assert!(!g.is_laurent());
    assert!((&g * &s - Expr::one()).is_zero());
    assert!((&g + &g - Expr::int(2) * &g).is_zero());
}

#[test]
fn substitution_is_simultaneous_and_rejects_cycles() {
    let (u, v) = (Expr::dep("u"), Expr::dep("v"));
    let iu = intern(Atom::Jet(JetVar::base("u")));
    let iv = intern(Atom::Jet(JetVar::base("v")));
    let rules = [(iu, v.clone()), (iv, u.clone())].into_iter().collect();
    let swapped = (&u - Expr::int(2) * &v).substitute(&rules).unwrap();
    assert_eq!(swapped, &v - Expr::int(2) * &u);
    let bad = [(iu, &u + &v)].into_iter().collect();
    assert!(matches!(u.substitute(&bad), Err(ExprError::CyclicSubstitution(_))));
    assert_eq!(u.substitute(&Default::default()).unwrap(), u);
}

#[test]
fn chain_rule_through_functions() {
    let c = register_function("c", 2, None);
    let (p, rho) = (Expr::dep("p"), Expr::dep("rho"));
    let app = Expr::apply(c, vec![p.clone(), &rho * &rho]).unwrap();
    let irho = intern(Atom::Jet(JetVar::base("rho")));
    let d = app.partial(irho);
    assert_eq!(d.to_string(), "2*c@2(p, rho^2)*rho");
    let sin = lookup_builtin("sin").unwrap();
    let s = Expr::apply(sin, vec![x(1)]).unwrap();
    let dd = s.partial(intern(Atom::Coord(Axis::X1))).partial(intern(Atom::Coord(Axis::X1)));
    assert!((dd + s).is_zero());
    assert!(matches!(Expr::apply(c, vec![p]), Err(ExprError::Arity { .. })));
}

#[test]
fn explicit_partials_expand() {
    let p = register_function("p", 1, None);
    let slot = Expr::atom(Atom::Slot(0));
    let tmpl = Expr::apply(p, vec![slot.clone()]).unwrap() / slot.pow(2).unwrap();
    let e = register_function("e", 1, Some(vec![tmpl]));
    let rho = Expr::dep("rho");
    let app = Expr::apply(e, vec![rho.clone()]).unwrap();
    let d = app.partial(intern(Atom::Jet(JetVar::base("rho"))));
    assert_eq!(d.to_string(), "p(rho)/rho^2");
    assert_eq!(register_function("e", 1, Some(vec![Expr::apply(p, vec![slot.clone()]).unwrap() / slot.pow(2).unwrap()])), e);
}

#[test]
fn evaluation() {
    let mut b = Binding::new();
    b.jet(&JetVar::base("rho"), 2.0).jet(&JetVar::base("u1"), 3.0);
    assert_eq!(b.eval(&Expr::zero()).unwrap(), 0.0);
    assert_eq!(b.eval(&(Expr::dep("rho") * Expr::dep("u1"))).unwrap(), 6.0);
    assert!(matches!(b.eval(&Expr::dep("w")), Err(ExprError::MissingBinding(_))));
    let r = Expr::dep("rho") - Expr::int(2);
    assert!(matches!(b.eval(&Expr::one().checked_div(&r).unwrap()), Err(ExprError::NumericOverflow(_))));
}

#[test]
fn printing_is_stable() {
    let e = Expr::ratio(-1, 2) * Expr::dep("u1").pow(2).unwrap() / Expr::dep("rho") + Expr::int(3);
    assert_eq!(e.to_string(), "-1/2*u1^2/rho + 3");
    let j = Expr::jet("u1", MultiIndex([1, 2, 0, 1]));
    assert_eq!(j.to_string(), "u1_tx1x1x3");
}
