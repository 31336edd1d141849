use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::catalog::Catalog;
use crate::expr::register_function;
use crate::jetcalc::{tcurl, tdiv};
use crate::testing::random_coordinate_poly;

fn cat() -> Catalog {
    Catalog::builtin().unwrap()
}

fn coords() -> VectorExpr {
    VectorExpr::from_fn(|i| Expr::coord(crate::expr::Axis::SPATIAL[i]))
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn unit_volume() {
    let v = integrate_coordinates(&Integrand::Scalar(Expr::one()), &IntegrationDomain::unit_box(), &Binding::new(), 0.0, 8).unwrap();
    assert!((v - 1.0).abs() <= 1e-14);
}

#[test]
fn position_flux_through_unit_box() {
    let dom: IntegrationDomain = "boxboundary".parse().unwrap();
    let v = integrate_coordinates(&Integrand::Vector(coords()), &dom, &Binding::new(), 0.0, 8).unwrap();
    assert!((v - 3.0).abs() <= 1e-12);
}

#[test]
fn planewave_magnetic_flux_vanishes() {
    let c = cat();
    let sol = c.solution("em-planewave").unwrap();
    let div_b = c.current("em-vacuum", "div-B").unwrap();
    for dom in ["boxboundary", "boxboundary:-0.3,0.1,0.2,0.9,1.7,0.6"] {
        let r = topological_residual(div_b, &dom.parse().unwrap(), sol, 0.3, &q()).unwrap();
        assert!(r.residual.abs() <= 1e-10 && r.converged, "{r:?}");
    }
}

#[test]
fn planewave_energy_balance() {
    let c = cat();
    let sol = c.solution("em-planewave").unwrap();
    let energy = c.current("em-vacuum", "energy").unwrap();
    let r = balance_residual(energy, &IntegrationDomain::unit_box(), sol, 0.3, &q()).unwrap();
    assert!(r.relative_residual <= 1e-8, "{r:?}");
    assert!(r.converged && r.warnings.is_empty(), "{r:?}");
    assert!(r.dcdt.abs() > 1e-3);
}

// Potential flow u = A(t)(x2, x1, 0) with A = a cos(wt), p from Bernoulli.
// Along x = (s, s, 0): C = A, and the Bernoulli head is -A' x1 x2.
#[test]
fn potential_flow_segment_balance() {
    let c = cat();
    let sol = c.solution("potential-flow").unwrap();
    let circ = c.current("irrotational-fluid", "circulation").unwrap();
    let dom: IntegrationDomain = "segment:p0=0,0,0,p1=1,1,0".parse().unwrap();
    let t = 0.4;
    let (a, w) = (sol.parameter_defaults["a"], sol.parameter_defaults["w"]);
    let r = balance_residual(circ, &dom, sol, t, &q()).unwrap();
    let rate = -a * w * (w * t).sin();
    assert!((r.value_c - a * (w * t).cos()).abs() <= 1e-12);
    assert!((r.dcdt - rate).abs() <= 1e-8 * rate.abs());
    assert!((r.value_f + rate).abs() <= 1e-8 * rate.abs());
    assert!(r.relative_residual <= 1e-8);
}

#[test]
fn potential_flow_closed_circulation() {
    let c = cat();
    let sol = c.solution("potential-flow").unwrap();
    let circ = c.current("irrotational-fluid", "circulation").unwrap();
    let r = balance_residual(circ, &"circle".parse().unwrap(), sol, 0.7, &q()).unwrap();
    assert!(r.value_c.abs() <= 1e-10 && r.dcdt.abs() <= 1e-10, "{r:?}");
    let curl = c.current("irrotational-fluid", "curl-u").unwrap();
    let r = topological_residual(curl, &"circle:center=0.2,0.1,0.5,r=0.8".parse().unwrap(), sol, 0.7, &q()).unwrap();
    assert!(r.residual.abs() <= 1e-10);
}

#[test]
fn rigid_rotation_is_not_irrotational() {
    let c = cat();
    let sol = c.solution("rigid-rotation").unwrap();
    let omega = sol.parameter_defaults["w"];
    let probe = ConservedCurrent::spatial("curl-u", "euler-constdens", CurrentKind::SpatialCurl, Field::Vector(VectorExpr::dep("u"))).unwrap();
    let r = topological_residual(&probe, &"circle".parse().unwrap(), sol, 0.0, &q()).unwrap();
    let exact = TAU * omega;
    assert!((r.value_c - exact).abs() <= 1e-8 * exact);
    assert!(r.converged);
}

#[test]
fn zero_density_balances_trivially() {
    let c = cat();
    let sol = c.solution("em-planewave").unwrap();
    let zero = ConservedCurrent::volumetric("zero", "em-vacuum", Expr::zero(), VectorExpr::zero());
    let r = balance_residual(&zero, &IntegrationDomain::unit_box(), sol, 0.2, &q()).unwrap();
    assert_eq!((r.dcdt, r.value_f, r.value_c), (0.0, 0.0, 0.0));
}

#[test]
fn reversing_a_curve_negates_circulation() {
    let c = cat();
    let sol = c.solution("rigid-rotation").unwrap();
    let f = Integrand::Vector(VectorExpr::dep("u")).substitute(sol).unwrap();
    let b = parameter_binding(sol);
    for text in ["circle:center=0.1,0,0,r=0.7", "rectboundary:plane=xy,offset=0.4,lo=0,-1,hi=1,2", "segment:p0=0,0,0,p1=1,2,3"] {
        let dom: IntegrationDomain = text.parse().unwrap();
        let fwd = integrate_coordinates(&f, &dom, &b, 0.0, 16).unwrap();
        let back = integrate_coordinates(&f, &dom.reversed(), &b, 0.0, 16).unwrap();
        if matches!(dom, IntegrationDomain::Segment { .. }) {
            assert!((fwd + back).abs() <= 1e-12);
        } else {
            assert!(fwd != 0.0);
            assert_eq!(fwd.to_bits(), (-back).to_bits(), "{text}");
        }
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> Cuboid {
    let lo: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..0.5));
    let hi: [f64; 3] = std::array::from_fn(|i| lo[i] + rng.gen_range(0.2..1.5));
    Cuboid::new(lo, hi).unwrap()
}

#[test]
fn gauss_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x = VectorExpr::from_fn(|_| random_coordinate_poly(&mut rng, 4, 3));
        let b = random_box(&mut rng);
        let flux = integrate_coordinates(&Integrand::Vector(x.clone()), &IntegrationDomain::BoxBoundary(b), &Binding::new(), 0.0, 8).unwrap();
        let vol = integrate_coordinates(&Integrand::Scalar(tdiv(&x)), &IntegrationDomain::Box(b), &Binding::new(), 0.0, 8).unwrap();
        assert!((flux - vol).abs() <= 1e-8 * flux.abs().max(vol.abs()).max(1.0));
    }
}

#[test]
fn stokes_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..10 {
        let x = VectorExpr::from_fn(|_| random_coordinate_poly(&mut rng, 4, 3));
        let plane = [Plane::Xy, Plane::Yz, Plane::Zx][k % 3];
        let lo = [rng.gen_range(-1.0..0.0), rng.gen_range(-1.0..0.0)];
        let hi = [lo[0] + rng.gen_range(0.3..1.2), lo[1] + rng.gen_range(0.3..1.2)];
        let r = Rect::new(plane, rng.gen_range(-0.5..0.5), lo, hi, k % 2 == 1).unwrap();
        let circ = integrate_coordinates(&Integrand::Vector(x.clone()), &IntegrationDomain::RectBoundary(r), &Binding::new(), 0.0, 8).unwrap();
        let surf = integrate_coordinates(&Integrand::Vector(tcurl(&x)), &IntegrationDomain::PlanarRect(r), &Binding::new(), 0.0, 8).unwrap();
        assert!((circ - surf).abs() <= 1e-8 * circ.abs().max(surf.abs()).max(1.0), "{circ} {surf}");
    }
}

#[test]
fn nested_boxes_compare_fluxes() {
    let c = cat();
    let sol = c.solution("em-planewave").unwrap();
    let div_b = c.current("em-vacuum", "div-B").unwrap();
    let dom: IntegrationDomain = "nested:-1,-1,-1,2,2,2,0,0,0,1,1,1".parse().unwrap();
    let r = topological_residual(div_b, &dom, sol, 0.1, &q()).unwrap();
    assert!(r.residual.abs() <= 1e-10);
    assert!("nested:0,0,0,1,1,1,0.5,0.5,0.5,2,2,2".parse::<IntegrationDomain>().is_err());
}

#[test]
fn refinement_behaviour() {
    let smooth = |n: usize| {
        integrate_coordinates(
            &Integrand::Scalar(crate::expr::Expr::apply(crate::expr::lookup_builtin("exp").unwrap(), vec![Expr::coord(crate::expr::Axis::X1)]).unwrap()),
            &IntegrationDomain::unit_box(),
            &Binding::new(),
            0.0,
            n / 4,
        )
    };
    let (table, warn) = refine_and_certify(smooth, &QuadratureSpec::new(4, 3).unwrap(), 1e-12).unwrap();
    assert!(warn.is_none(), "{table:?}");
    let (_, warn) = refine_and_certify(|_| Ok(0.0), &q(), 1e-12).unwrap();
    assert!(warn.is_none());

    let step = register_function("step", 1, None);
    let f = Integrand::Scalar(Expr::apply(step, vec![Expr::coord(crate::expr::Axis::X1)]).unwrap());
    let mut b = Binding::new();
    b.func("step", |a| if a[0] > 0.3 { 1.0 } else { 0.0 });
    let (_, warn) = refine_and_certify(|n| integrate_coordinates(&f, &IntegrationDomain::unit_box(), &b, 0.0, n), &q(), 1e-12).unwrap();
    assert!(warn.is_some());
    assert!(refine_and_certify(|_| Ok(1.0), &QuadratureSpec::new(8, 1).unwrap(), 1e-12).is_err());
}

#[test]
fn domain_syntax_round_trips() {
    for text in [
        "box:0,0,0,1,1,1",
        "boxboundary:-1,0,0,1,2,3",
        "rect:plane=zx,offset=0.5,lo=0,0,hi=1,2",
        "rectboundary:plane=xy,offset=0,lo=0,0,hi=1,1,orientation=cw",
        "circle:center=0,0,1,r=2,plane=yz",
        "segment:p0=0,0,0,p1=1,1,0",
    ] {
        let d: IntegrationDomain = text.parse().unwrap();
        assert_eq!(d.to_string().parse::<IntegrationDomain>().unwrap(), d);
    }
    for bad in ["box:0,0,0,1,1", "box:1,1,1,0,0,0", "circle:r=-1", "sphere", "segment:p0=0,0,0,p1=0,0,0"] {
        assert!(bad.parse::<IntegrationDomain>().is_err(), "{bad}");
    }
}

#[test]
fn kind_and_domain_must_match() {
    let c = cat();
    let sol = c.solution("em-planewave").unwrap();
    let energy = c.current("em-vacuum", "energy").unwrap();
    assert!(matches!(
        balance_residual(energy, &"circle".parse().unwrap(), sol, 0.0, &q()),
        Err(NumError::DomainMismatch { .. })
    ));
    let faraday = c.current("em-vacuum", "faraday").unwrap();
    let r = balance_residual(faraday, &"rect:plane=xy,offset=0.3,lo=0.2,0,hi=0.9,1".parse().unwrap(), sol, 0.3, &q()).unwrap();
    assert!(r.dcdt.abs() > 1e-2 && r.relative_residual <= 1e-8, "{r:?}");
    assert!(r.passes(&Tolerance::default()));
}
