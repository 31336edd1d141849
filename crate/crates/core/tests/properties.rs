//! Property tests for the module invariants. Random expressions are drawn
//! from a seeded generator so failures shrink to a single seed.

use std::collections::HashMap;

use conslaw::catalog::Catalog;
use conslaw::conslaw::{classify, detect_boundary_law, verify_local, Certificate, ConservedCurrent, CurrentKind, Field};
use conslaw::dsl::parse_document;
use conslaw::expr::{intern, Atom, Axis, Binding, Expr, VectorExpr};
use conslaw::jetcalc::{
    curl_witness, div_witness, euler, grad_witness, spatial_euler, tcurl, tdiv, tgrad, total_di, total_dt,
};
use conslaw::mappings::{map_current, MappingVector, Constraint};
use conslaw::numgrid::{integrate_coordinates, residual, Cuboid, Integrand, IntegrationDomain};
use conslaw::testing::{random_coordinate_poly, random_poly, random_vector, PolyShape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shape() -> PolyShape {
    PolyShape { terms: 3, ..PolyShape::default() }
}

/// Jets of gasdyn's dependents up to first order, no time derivatives.
fn gas_shape() -> PolyShape {
    PolyShape {
        deps: vec!["rho".into(), "u1".into(), "u2".into(), "u3".into()],
        max_order: 1,
        terms: 3,
        max_degree: 2,
        coords: true,
        time: true,
    }
}

fn random_binding(e: &[&Expr], r: &mut ChaCha8Rng) -> Binding {
    let mut b = Binding::new();
    for x in e {
        for id in x.atoms() {
            b.set_id(id, r.gen_range(-1.5..1.5));
        }
    }
    b
}

fn catalog() -> &'static Catalog {
    use std::sync::OnceLock;
    static CAT: OnceLock<Catalog> = OnceLock::new();
    CAT.get_or_init(|| Catalog::builtin().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // expr

    #[test]
    fn sums_are_congruent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_poly(&mut r, &shape()), random_poly(&mut r, &shape()), random_poly(&mut r, &shape()));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!((&a + &b) + c.clone(), a.clone() + (&b + &c));
    }

    #[test]
    fn shuffled_expansions_cancel(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_poly(&mut r, &shape()), random_poly(&mut r, &shape()), random_poly(&mut r, &shape()));
        let factored = (&a + &b) * (&c - &a);
        let expanded = &(&(&a * &c) - &(&a * &a)) + &(&(&b * &c) - &(&a * &b));
        prop_assert!((factored - expanded).is_zero());
    }

    #[test]
    fn substitution_is_a_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_poly(&mut r, &shape()), random_poly(&mut r, &shape()));
        let target = intern(Atom::Jet(conslaw::expr::JetVar::base("u")));
        let rhs = random_poly(&mut r, &PolyShape { deps: vec!["v".into()], ..shape() });
        let rules = HashMap::from([(target, rhs)]);
        let sub = |e: &Expr| e.substitute(&rules).unwrap();
        prop_assert_eq!(sub(&(&a * &b)), &sub(&a) * &sub(&b));
        prop_assert_eq!(sub(&(&a + &b)), &sub(&a) + &sub(&b));
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_poly(&mut r, &shape()), random_poly(&mut r, &shape()));
        let bind = random_binding(&[&a, &b], &mut r);
        let (va, vb) = (bind.eval(&a).unwrap(), bind.eval(&b).unwrap());
        let scale = va.abs().max(vb.abs()).max(1.0).powi(2);
        prop_assert!((bind.eval(&(&a * &b)).unwrap() - va * vb).abs() <= 1e-12 * scale);
        prop_assert!((bind.eval(&(&a + &b)).unwrap() - (va + vb)).abs() <= 1e-12 * scale);
    }

    // jetcalc

    #[test]
    fn total_derivatives_commute(seed in any::<u64>(), i in 0usize..4, j in 0usize..4) {
        let f = random_poly(&mut rng(seed), &shape());
        let d = |e: &Expr, k: usize| if k == 0 { total_dt(e) } else { total_di(e, k) };
        prop_assert_eq!(d(&d(&f, i), j), d(&d(&f, j), i));
    }

    #[test]
    fn differential_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = shape();
        prop_assert!(tdiv(&tcurl(&random_vector(&mut r, &s))).is_zero());
        prop_assert!(tcurl(&tgrad(&random_poly(&mut r, &s))).is_zero());
        let divergence = total_dt(&random_poly(&mut r, &s)) + tdiv(&random_vector(&mut r, &s));
        prop_assert!(euler(&divergence, "u").is_zero() && euler(&divergence, "v").is_zero());
        prop_assert!(spatial_euler(&tdiv(&random_vector(&mut r, &s)), "u").is_zero());
    }

    #[test]
    fn homotopy_witnesses_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = PolyShape { time: false, ..shape() };
        let target = tdiv(&random_vector(&mut r, &s));
        prop_assert_eq!(tdiv(&div_witness(&target).unwrap()), target);
        let target = tcurl(&random_vector(&mut r, &s));
        prop_assert_eq!(tcurl(&curl_witness(&target).unwrap()), target);
        let target = tgrad(&random_poly(&mut r, &s));
        prop_assert_eq!(tgrad(&grad_witness(&target).unwrap()), target);
    }

    // sysdef

    #[test]
    fn reduction_is_idempotent_and_linear(seed in any::<u64>(), k in -3i64..=3) {
        let mut r = rng(seed);
        let sys = catalog().system("gasdyn").unwrap();
        let (e1, e2) = (random_poly(&mut r, &gas_shape()), random_poly(&mut r, &gas_shape()));
        let once = sys.reduce(&e1);
        prop_assert_eq!(sys.reduce(&once), once.clone());
        let combo = &(&Expr::int(k) * &e1) + &e2;
        prop_assert_eq!(sys.reduce(&combo), &(&Expr::int(k) * &once) + &sys.reduce(&e2));
    }

    // conslaw

    #[test]
    fn trivial_circulatory_maps_to_trivial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = catalog();
        let sys = cat.system("gasdyn").unwrap();
        let theta = random_poly(&mut r, &PolyShape { time: false, max_degree: 2, ..gas_shape() });
        let c = ConservedCurrent::circulatory("probe", "gasdyn", tgrad(&theta), -total_dt(&theta));
        prop_assert!(verify_local(&c, sys).unwrap().is_zero());
        let zeta = random_coordinate_poly(&mut r, 3, 2);
        let xi = MappingVector::new("xi", tgrad(&zeta), Constraint::CurlFree).unwrap();
        let mapped = map_current(&c, &xi, CurrentKind::SurfaceFlux).unwrap();
        prop_assert!(verify_local(&mapped, sys).unwrap().is_zero());
        let v = classify(&mapped, sys, None).unwrap();
        prop_assert!(v.status.is_trivial(), "{}", v.status);
    }

    // mappings

    #[test]
    fn mapped_currents_verify(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut r = rng(seed);
        let cat = catalog();
        let sources: Vec<&ConservedCurrent> = cat
            .currents()
            .filter(|c| matches!(c.kind, CurrentKind::Circulatory | CurrentKind::SurfaceFlux))
            .collect();
        let c = sources[pick.index(sources.len())];
        let sys = cat.system(&c.system_id).unwrap();
        let needs_div_free = c.kind == CurrentKind::Circulatory;
        let xi = if needs_div_free {
            let zeta = VectorExpr::from_fn(|_| random_coordinate_poly(&mut r, 2, 2));
            MappingVector::new("xi", tcurl(&zeta), Constraint::DivergenceFree).unwrap()
        } else {
            MappingVector::new("xi", tgrad(&random_coordinate_poly(&mut r, 3, 2)), Constraint::CurlFree).unwrap()
        };
        let m = map_current(c, &xi, CurrentKind::Volumetric).unwrap();
        prop_assert!(verify_local(&m, sys).unwrap().is_zero(), "{} on {}", c.id, c.system_id);
    }

    #[test]
    fn mapping_is_linear(seed in any::<u64>(), k in -3i64..=3) {
        let mut r = rng(seed);
        let s = PolyShape { time: false, ..shape() };
        let (t1, t2) = (random_vector(&mut r, &s), random_vector(&mut r, &s));
        let (x1, x2) = (random_poly(&mut r, &s), random_poly(&mut r, &s));
        let kk = Expr::int(k);
        let combo = ConservedCurrent::circulatory("c", "any", &t1.scale(&kk) + &t2, &(&kk * &x1) + &x2);
        let xi = MappingVector::unit("k").unwrap();
        let image = |c: &ConservedCurrent| map_current(c, &xi, CurrentKind::Volumetric).unwrap();
        let m1 = image(&ConservedCurrent::circulatory("c", "any", t1, x1));
        let m2 = image(&ConservedCurrent::circulatory("c", "any", t2, x2));
        let mc = image(&combo);
        let lhs_t = mc.density_scalar().unwrap();
        let rhs_t = &(&kk * m1.density_scalar().unwrap()) + m2.density_scalar().unwrap();
        prop_assert_eq!(lhs_t, &rhs_t);
        let rhs_x = &m1.flux_vector().unwrap().scale(&kk) + m2.flux_vector().unwrap();
        prop_assert_eq!(mc.flux_vector().unwrap(), &rhs_x);
    }

    #[test]
    fn trivial_images_reduce_globally(seed in any::<u64>()) {
        // Grad θ mapped by a divergence-free ξ is Div(θ ξ), so its volume
        // integral equals the boundary flux of θ ξ.
        let mut r = rng(seed);
        let theta = random_coordinate_poly(&mut r, 3, 3);
        let zeta = VectorExpr::from_fn(|_| random_coordinate_poly(&mut r, 2, 2));
        let xi = MappingVector::new("xi", tcurl(&zeta), Constraint::DivergenceFree).unwrap();
        let c = ConservedCurrent::circulatory("grad", "any", tgrad(&theta), Expr::zero());
        let m = map_current(&c, &xi, CurrentKind::Volumetric).unwrap();
        let lo: [f64; 3] = std::array::from_fn(|_| r.gen_range(-1.0..0.0));
        let hi: [f64; 3] = std::array::from_fn(|i| lo[i] + r.gen_range(0.3..1.3));
        let b = Cuboid::new(lo, hi).unwrap();
        let none = Binding::new();
        let vol = integrate_coordinates(&Integrand::Scalar(m.density_scalar().unwrap().clone()), &IntegrationDomain::Box(b), &none, 0.0, 8).unwrap();
        let flux = integrate_coordinates(&Integrand::Vector(xi.components.scale(&theta)), &IntegrationDomain::BoxBoundary(b), &none, 0.0, 8).unwrap();
        prop_assert!((vol - flux).abs() <= 1e-8 * vol.abs().max(flux.abs()).max(1.0), "{vol} {flux}");
    }

    // dsl

    #[test]
    fn random_bytes_yield_diagnostics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_document(&text, catalog());
    }

    #[test]
    fn diagnostic_spans_slice_to_the_token(pick in any::<prop::sample::Index>(), at in any::<prop::sample::Index>()) {
        let items: Vec<&str> = catalog().texts().iter().flat_map(|(_, t)| t.split("\n}\n")).filter(|s| s.contains('{')).collect();
        let item = items[pick.index(items.len())];
        let body = item.find('{').unwrap() + 1;
        // Positions outside string literals and comments, and not between
        // a decimal point and its digits, where the point is the bad token.
        let in_comment = |k: usize| item[..k].rsplit('\n').next().is_some_and(|line| line.contains('#'));
        let boundaries: Vec<usize> = (body..item.len())
            .filter(|&k| {
                item.is_char_boundary(k)
                    && item[..k].matches('"').count() % 2 == 0
                    && !in_comment(k)
                    && !item[..k].ends_with('.')
            })
            .collect();
        let k = boundaries[at.index(boundaries.len())];
        let text = format!("{}${}\n}}\n", &item[..k], &item[k..]);
        let errs = parse_document(&text, catalog()).unwrap_err();
        prop_assert_eq!(&text[errs[0].span.clone()], "$");
    }
}

#[test]
fn solved_forms_reproduce_equations() {
    for sys in catalog().systems() {
        for (a, g) in sys.equations.iter().enumerate() {
            assert!(sys.reduce(g).is_zero(), "{} equation {}", sys.id, a + 1);
        }
    }
}

#[test]
fn certificates_are_sound() {
    let cat = catalog();
    for c in cat.currents() {
        let sys = cat.system(&c.system_id).unwrap();
        let v = classify(c, sys, None).unwrap();
        match &v.certificate {
            Some(Certificate::SpatialEulerNonzero { dependent, residual }) => {
                let t = sys.reduce(c.density_scalar().unwrap());
                let e = sys.reduce(&spatial_euler(&t, dependent));
                assert!(!e.is_zero() && !residual.is_zero(), "{}", c.id);
            }
            Some(Certificate::DivOfDensityNonzero { residual }) => {
                assert!(!sys.reduce(&tdiv(c.density_vector().unwrap())).is_zero() && !residual.is_zero());
            }
            Some(Certificate::CurlOfDensityNonzero { residual }) => {
                let curl = tcurl(c.density_vector().unwrap()).map(|e| sys.reduce(e));
                assert!(!curl.is_zero() && !residual.is_zero());
            }
            _ => {}
        }
    }
}

#[test]
fn boundary_laws_always_verify() {
    let cat = catalog();
    for c in cat.currents() {
        let sys = cat.system(&c.system_id).unwrap();
        let v = classify(c, sys, None).unwrap();
        for law in v.boundary_law.iter().chain(detect_boundary_law(&v, sys).iter()) {
            assert!(law.flux.as_ref().is_some_and(Field::is_zero), "{}", law.id);
            assert!(verify_local(law, sys).unwrap().is_zero(), "{}", law.id);
        }
    }
}

#[test]
fn symbolic_rate_matches_finite_difference() {
    let cat = catalog();
    let mut runs = 0;
    for sol in cat.solutions() {
        for c in cat.currents_on(&sol.system_id).filter(|c| !c.kind.is_spatial()) {
            let dom: IntegrationDomain = match c.kind {
                CurrentKind::Volumetric => "box:0.1,-0.2,0,0.9,0.7,1.1",
                CurrentKind::SurfaceFlux => "rect:plane=xy,offset=0.3,lo=0.2,0,hi=0.9,1",
                _ => "segment:p0=0.1,0.2,0,p1=0.8,-0.3,0.5",
            }
            .parse()
            .unwrap();
            for t in [0.0, 0.45] {
                let rep = residual(c, &dom, sol, t, &Default::default()).unwrap();
                if let Some(fd) = rep.dcdt_difference {
                    let scale = rep.dcdt.abs().max(fd.abs()).max(1e-6);
                    assert!((rep.dcdt - fd).abs() <= 1e-6 * scale.max(1.0), "{} on {} at t={t}: {} vs {fd}", c.id, sol.id, rep.dcdt);
                    runs += 1;
                }
            }
        }
    }
    assert!(runs >= 10, "{runs}");
}

#[test]
fn unit_vectors_are_constant() {
    for n in ["i", "j", "k"] {
        let xi = MappingVector::unit(n).unwrap();
        assert!(xi.is_div_free() && xi.is_curl_free());
        assert!(Axis::SPATIAL.iter().all(|&a| xi.components.iter().all(|e| e.partial(intern(Atom::Coord(a))).is_zero())));
    }
}
