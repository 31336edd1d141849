use super::*;
use crate::catalog::Catalog;
use crate::expr::{Axis, Expr, MultiIndex, VectorExpr};

fn catalog() -> Catalog {
    Catalog::builtin().unwrap()
}

fn verdict(cat: &Catalog, system: &str, id: &str) -> (TrivialityVerdict, ConservedCurrent) {
    let c = cat.current(system, id).unwrap_or_else(|| panic!("{id} on {system}")).clone();
    let v = classify(&c, cat.system(system).unwrap(), None).unwrap();
    (v, c)
}

#[test]
fn gas_mass_is_nontrivial_by_euler() {
    let cat = catalog();
    let (v, _) = verdict(&cat, "gasdyn", "mass");
    assert_eq!(v.status, Status::NonTrivial);
    assert!(matches!(v.certificate, Some(Certificate::SpatialEulerNonzero { .. })));
}

#[test]
fn type_iib_witnesses_resubstitute() {
    let cat = catalog();
    for (system, id) in [
        ("em", "charge-current"),
        ("euler-adiabatic", "ertel"),
        ("euler-barotropic", "vorticity-transport"),
        ("euler-constdens", "vorticity-transport"),
        ("irrotational-fluid", "entropy-cross"),
    ] {
        let (v, c) = verdict(&cat, system, id);
        assert_eq!(v.status, Status::TrivialTypeIIb, "{id} on {system}");
        let w = v.witness.as_ref().unwrap();
        assert!(check_witness(&c, w, cat.system(system).unwrap()).unwrap(), "{id} on {system}");
    }
}

#[test]
fn div_vorticity_has_velocity_potential() {
    let cat = catalog();
    let (v, c) = verdict(&cat, "euler-constdens", "div-vorticity");
    assert_eq!(v.status, Status::TrivialTypeII);
    let w = v.witness.unwrap();
    let u = VectorExpr::new(Expr::jet("u1", MultiIndex::ZERO), Expr::jet("u2", MultiIndex::ZERO), Expr::jet("u3", MultiIndex::ZERO));
    assert_eq!(w.theta, Some(Field::Vector(u)));
    assert!(check_witness(&c, &w, cat.system("euler-constdens").unwrap()).unwrap());
}

#[test]
fn bernoulli_potential_is_not_constant() {
    let cat = catalog();
    let (v, _) = verdict(&cat, "irrotational-equilibrium", "bernoulli");
    assert_eq!(v.status, Status::NonTrivial);
    assert!(matches!(v.certificate, Some(Certificate::NonConstantPotential { .. })));
}

#[test]
fn topological_laws_yield_boundary_laws() {
    let cat = catalog();
    for (system, id, kind) in [
        ("em", "div-B", CurrentKind::SurfaceFlux),
        ("fluid-incompressible", "div-u", CurrentKind::SurfaceFlux),
        ("irrotational-fluid", "curl-u", CurrentKind::Circulatory),
    ] {
        let (v, _) = verdict(&cat, system, id);
        assert_eq!(v.status, Status::NonTrivial, "{id}");
        let law = v.boundary_law.unwrap_or_else(|| panic!("{id} has no boundary law"));
        assert_eq!(law.kind, kind);
        assert!(law.closed_only);
        assert!(law.flux.as_ref().unwrap().is_zero());
        assert!(verify_local(&law, cat.system(system).unwrap()).unwrap().is_zero());
    }
}

#[test]
fn zero_current_is_type_i() {
    let cat = catalog();
    let sys = cat.system("gasdyn").unwrap();
    let c = ConservedCurrent::volumetric("zero", "gasdyn", Expr::zero(), VectorExpr::zero());
    let v = classify(&c, sys, None).unwrap();
    assert_eq!(v.status, Status::TrivialTypeI);
}

#[test]
fn adding_a_trivial_current_keeps_equivalence() {
    let cat = catalog();
    let sys = cat.system("gasdyn").unwrap();
    let mass = cat.current("gasdyn", "mass").unwrap();
    // Div Θ, -D_t Θ for Θ = (r, 0, 0) is trivial.
    let theta = VectorExpr::new(Expr::jet("r", MultiIndex::ZERO), Expr::zero(), Expr::zero());
    let t = mass.density_scalar().unwrap() + &crate::jetcalc::tdiv(&theta);
    let x = mass.flux_vector().unwrap() - &theta.map(crate::jetcalc::total_dt);
    let shifted = ConservedCurrent::volumetric("mass-shifted", "gasdyn", t, x);
    assert!(verify_local(&shifted, sys).unwrap().is_zero());
    let eq = equivalent(mass, &shifted, sys, None).unwrap();
    assert_eq!(eq.equivalent, Some(true));
    let mom = cat.current("gasdyn", "momentum-1").unwrap();
    assert_eq!(equivalent(mass, mom, sys, None).unwrap().equivalent, Some(false));
}

#[test]
fn wrong_witness_is_rejected() {
    let cat = catalog();
    let (v, c) = verdict(&cat, "euler-adiabatic", "ertel");
    let mut w = v.witness.unwrap();
    w.theta = Some(Field::Vector(VectorExpr::new(Expr::coord(Axis::X1), Expr::zero(), Expr::zero())));
    assert!(!check_witness(&c, &w, cat.system("euler-adiabatic").unwrap()).unwrap());
}
