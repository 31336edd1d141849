//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use conslaw::catalog::Catalog;
use conslaw::conslaw::{check_witness, classify, verify_local, ConservedCurrent, CurrentKind, Field, Status};
use conslaw::dsl::{parse_document, print_entity, Entity};
use conslaw::expr::{Binding, Expr, MultiIndex, VectorExpr};
use conslaw::jetcalc::{euler, spatial_euler, tcurl, tdiv, tgrad, total_dt};
use conslaw::mappings::{check_triviality_preservation, map_current, targets, MappingVector};
use conslaw::numgrid::{
    balance_residual, integrate_coordinates, topological_residual, Cuboid, Integrand, IntegrationDomain, Plane,
    QuadratureSpec, Rect, Tolerance,
};
use conslaw::testing::{random_coordinate_poly, random_poly, random_vector, PolyShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const SAMPLES: usize = 200;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog() -> Catalog {
    Catalog::builtin().expect("builtin catalog")
}

fn operator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = PolyShape::default();
    let mut failures = Vec::new();
    for k in 0..SAMPLES {
        let v = random_vector(&mut rng, &shape);
        if !tdiv(&tcurl(&v)).is_zero() {
            failures.push(format!("div curl #{k}"));
        }
        let f = random_poly(&mut rng, &shape);
        if !tcurl(&tgrad(&f)).is_zero() {
            failures.push(format!("curl grad #{k}"));
        }
        let p0 = random_poly(&mut rng, &shape);
        let p = random_vector(&mut rng, &shape);
        let divergence = total_dt(&p0) + tdiv(&p);
        for dep in &shape.deps {
            if !euler(&divergence, dep).is_zero() {
                failures.push(format!("Euler of total divergence #{k} ({dep})"));
            }
        }
        let q = random_vector(&mut rng, &shape);
        let spatial = tdiv(&q);
        for dep in &shape.deps {
            if !spatial_euler(&spatial, dep).is_zero() {
                failures.push(format!("spatial Euler of spatial divergence #{k} ({dep})"));
            }
        }
    }
    ensure(failures.is_empty(), || failures.join(", "))?;
    Ok(format!("4 identities x {SAMPLES} random polynomials, 0 failures"))
}

fn catalog_verification() -> Outcome {
    let cat = catalog();
    let mut failures = Vec::new();
    let mut count = 0;
    for c in cat.currents() {
        count += 1;
        let sys = cat.system(&c.system_id).unwrap();
        match verify_local(c, sys) {
            Ok(r) if r.is_zero() => {}
            Ok(r) => failures.push(format!("{}/{}: {r}", c.system_id, c.id)),
            Err(e) => failures.push(format!("{}/{}: {e}", c.system_id, c.id)),
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(count >= 20, || format!("only {count} currents"))?;
    Ok(format!("{count} currents verify to the zero literal"))
}

fn classification_golden() -> Outcome {
    let cat = catalog();
    let mut rows = 0;
    let mut check = |system: &str, id: &str, want: &dyn Fn(Status) -> bool| -> Result<(), String> {
        let c = cat.current(system, id).ok_or_else(|| format!("missing {system}/{id}"))?;
        let sys = cat.system(system).unwrap();
        let v = classify(c, sys, None).map_err(|e| format!("{system}/{id}: {e}"))?;
        ensure(want(v.status), || format!("{system}/{id}: got {}", v.status))?;
        if v.status.is_trivial() {
            let w = v.witness.as_ref().ok_or_else(|| format!("{system}/{id}: no witness"))?;
            let ok = check_witness(c, w, sys).map_err(|e| e.to_string())?;
            ensure(ok, || format!("{system}/{id}: witness does not re-substitute"))?;
        } else {
            ensure(v.certificate.is_some(), || format!("{system}/{id}: no certificate"))?;
        }
        rows += 1;
        Ok(())
    };
    let nontrivial = |s: Status| s == Status::NonTrivial;
    let iib = |s: Status| s == Status::TrivialTypeIIb;
    for c in catalog().currents() {
        let physical = ["mass", "energy", "entropy"].contains(&c.id.as_str()) || c.id.starts_with("momentum-");
        if physical {
            check(&c.system_id, &c.id, &nontrivial)?;
        }
    }
    check("euler-barotropic", "helicity", &nontrivial)?;
    check("mhd-ideal", "cross-helicity", &nontrivial)?;
    for (s, id) in [
        ("em", "charge-current"),
        ("euler-adiabatic", "ertel"),
        ("euler-barotropic", "vorticity-transport"),
        ("euler-constdens", "vorticity-transport"),
        ("irrotational-fluid", "entropy-cross"),
    ] {
        check(s, id, &iib)?;
    }
    for (s, id) in [
        ("em", "div-B"),
        ("fluid-incompressible", "div-u"),
        ("irrotational-fluid", "curl-u"),
        ("irrotational-equilibrium", "bernoulli"),
    ] {
        check(s, id, &nontrivial)?;
    }
    check("euler-constdens", "div-vorticity", &|s: Status| s.is_trivial())?;
    let c = cat.current("euler-constdens", "div-vorticity").unwrap();
    let v = classify(c, cat.system("euler-constdens").unwrap(), None).unwrap();
    let u = VectorExpr::new(
        Expr::jet("u1", MultiIndex::ZERO),
        Expr::jet("u2", MultiIndex::ZERO),
        Expr::jet("u3", MultiIndex::ZERO),
    );
    ensure(v.witness.and_then(|w| w.theta) == Some(Field::Vector(u)), || "div-vorticity potential is not u".into())?;
    Ok(format!("{rows} golden rows match, witnesses re-substitute exactly"))
}

fn boundary_laws() -> Outcome {
    let cat = catalog();
    let mut found = Vec::new();
    for (s, id, kind) in [
        ("em", "div-B", CurrentKind::SurfaceFlux),
        ("fluid-incompressible", "div-u", CurrentKind::SurfaceFlux),
        ("irrotational-fluid", "curl-u", CurrentKind::Circulatory),
    ] {
        let sys = cat.system(s).unwrap();
        let v = classify(cat.current(s, id).unwrap(), sys, None).map_err(|e| e.to_string())?;
        let law = v.boundary_law.ok_or_else(|| format!("{s}/{id}: no boundary law"))?;
        ensure(law.kind == kind && law.closed_only, || format!("{s}/{id}: wrong law kind {:?}", law.kind))?;
        ensure(law.flux.as_ref().is_some_and(Field::is_zero), || format!("{s}/{id}: nonzero flux"))?;
        let r = verify_local(&law, sys).map_err(|e| e.to_string())?;
        ensure(r.is_zero(), || format!("{s}/{id}: law residual {r}"))?;
        found.push(law.id);
    }
    Ok(format!("{} verified with zero flux", found.join(", ")))
}

fn mapping_suite() -> Outcome {
    let cat = catalog();
    let units: Vec<MappingVector> = ["i", "j", "k"].iter().map(|n| MappingVector::unit(n).unwrap()).collect();
    let mut sources = 0;
    let mut images = 0;
    for c in cat.currents() {
        let kinds = targets(c.kind);
        if kinds.is_empty() {
            continue;
        }
        sources += 1;
        let sys = cat.system(&c.system_id).unwrap();
        for xi in &units {
            for &to in &kinds {
                let m = map_current(c, xi, to).map_err(|e| format!("{}/{} by {}: {e}", c.system_id, c.id, xi.id))?;
                let r = verify_local(&m, sys).map_err(|e| e.to_string())?;
                ensure(r.is_zero(), || format!("{} does not verify: {r}", m.id))?;
                images += 1;
            }
        }
    }
    ensure(sources >= 5, || format!("only {sources} mappable currents"))?;
    let family: Vec<MappingVector> = cat.vectorfields().cloned().collect();
    for (s, id) in [("fluid-incompressible", "density-gradient"), ("euler-adiabatic", "entropy-gradient")] {
        let c = cat.current(s, id).unwrap();
        let rep = check_triviality_preservation(c, &family, cat.system(s).unwrap(), None).map_err(|e| e.to_string())?;
        ensure(rep.source_status.is_trivial(), || format!("{id} source not trivial"))?;
        ensure(rep.consistent == Some(true), || format!("{id}: {:?}", rep.diagnostics))?;
        ensure(rep.images.iter().all(|i| i.status.is_trivial() && i.verifies), || format!("{id}: nontrivial image"))?;
    }
    let c = cat.current("irrotational-fluid", "circulation").unwrap();
    let rep = check_triviality_preservation(c, &family, cat.system("irrotational-fluid").unwrap(), None)
        .map_err(|e| e.to_string())?;
    let witness = rep.images.iter().find(|i| i.status == Status::NonTrivial && i.verifies);
    ensure(rep.consistent == Some(true) && witness.is_some(), || format!("circulation: {:?}", rep.diagnostics))?;
    Ok(format!(
        "{images} images of {sources} currents verify; gradients preserve triviality; circulation has non-trivial image {}",
        witness.unwrap().current.id
    ))
}

fn monotone(values: &[f64]) -> bool {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let floor = 64.0 * f64::EPSILON * scale;
    let deltas: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    deltas.windows(2).all(|d| d[1] <= d[0] || d[1] <= floor)
}

fn numeric_balance() -> Outcome {
    let cat = catalog();
    let q = QuadratureSpec::default();
    let tol = Tolerance::default();
    let wave = cat.solution("em-planewave").unwrap();
    let energy = cat.current("em-vacuum", "energy").unwrap();
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.3, 0.7] {
        let r = balance_residual(energy, &IntegrationDomain::unit_box(), wave, t, &q).map_err(|e| e.to_string())?;
        let values: Vec<f64> = r.refinement_table.iter().map(|row| row.dcdt + row.value_f).collect();
        let cs: Vec<f64> = r.refinement_table.iter().map(|row| row.value_c).collect();
        ensure(r.converged && monotone(&values) && monotone(&cs), || format!("energy t={t}: refinement {values:?}"))?;
        ensure(r.relative_residual <= tol.relative, || format!("energy t={t}: relative {}", r.relative_residual))?;
        worst = worst.max(r.relative_residual);
    }
    let div_b = cat.current("em-vacuum", "div-B").unwrap();
    let mut flux_max: f64 = 0.0;
    for t in [0.0, 0.3, 0.7] {
        let r = topological_residual(div_b, &"boxboundary".parse().unwrap(), wave, t, &q).map_err(|e| e.to_string())?;
        flux_max = flux_max.max(r.value_c.abs());
    }
    ensure(flux_max <= 1e-10, || format!("closed-surface magnetic flux {flux_max:e}"))?;
    let flow = cat.solution("potential-flow").unwrap();
    let circ = cat.current("irrotational-fluid", "circulation").unwrap();
    let r = balance_residual(circ, &"circle".parse().unwrap(), flow, 0.4, &q).map_err(|e| e.to_string())?;
    let rate = r.dcdt_difference.unwrap_or(r.dcdt);
    ensure(r.value_c.abs() <= 1e-10 && r.dcdt.abs() <= 1e-10 && rate.abs() <= 1e-10, || {
        format!("potential-flow circulation {:e}, rate {:e}", r.value_c, r.dcdt)
    })?;
    let circulation = r.value_c.abs();
    let rigid = cat.solution("rigid-rotation").unwrap();
    let omega = rigid.parameter_defaults["w"];
    let probe = ConservedCurrent::spatial(
        "curl-u",
        "euler-constdens",
        CurrentKind::SpatialCurl,
        Field::Vector(VectorExpr::dep("u")),
    )
    .unwrap();
    let r = topological_residual(&probe, &"circle".parse().unwrap(), rigid, 0.0, &q).map_err(|e| e.to_string())?;
    let exact = std::f64::consts::TAU * omega;
    let rel = (r.value_c - exact).abs() / exact;
    ensure(rel <= 1e-8, || format!("rigid rotation circulation {} vs {exact}", r.value_c))?;
    Ok(format!(
        "energy relative residual <= {worst:.1e}; magnetic flux <= {flux_max:.1e}; circulation {circulation:.1e}; rigid rotation error {rel:.1e}"
    ))
}

fn random_box(rng: &mut ChaCha8Rng) -> Cuboid {
    let lo: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..0.5));
    let hi: [f64; 3] = std::array::from_fn(|i| lo[i] + rng.gen_range(0.2..1.5));
    Cuboid::new(lo, hi).unwrap()
}

fn gauss_stokes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let none = Binding::new();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let x = VectorExpr::from_fn(|_| random_coordinate_poly(&mut rng, 4, 3));
        let b = random_box(&mut rng);
        let flux = integrate_coordinates(&Integrand::Vector(x.clone()), &IntegrationDomain::BoxBoundary(b), &none, 0.0, 8)
            .map_err(|e| e.to_string())?;
        let vol = integrate_coordinates(&Integrand::Scalar(tdiv(&x)), &IntegrationDomain::Box(b), &none, 0.0, 8)
            .map_err(|e| e.to_string())?;
        ensure(rel(flux, vol) <= 1e-8, || format!("Gauss #{k}: {flux} vs {vol}"))?;
        worst = worst.max(rel(flux, vol));
    }
    for k in 0..10 {
        let x = VectorExpr::from_fn(|_| random_coordinate_poly(&mut rng, 4, 3));
        let plane = [Plane::Xy, Plane::Yz, Plane::Zx][k % 3];
        let lo = [rng.gen_range(-1.0..0.0), rng.gen_range(-1.0..0.0)];
        let hi = [lo[0] + rng.gen_range(0.3..1.2), lo[1] + rng.gen_range(0.3..1.2)];
        let r = Rect::new(plane, rng.gen_range(-0.5..0.5), lo, hi, k % 2 == 1).unwrap();
        let circ = integrate_coordinates(&Integrand::Vector(x.clone()), &IntegrationDomain::RectBoundary(r), &none, 0.0, 8)
            .map_err(|e| e.to_string())?;
        let surf = integrate_coordinates(&Integrand::Vector(tcurl(&x)), &IntegrationDomain::PlanarRect(r), &none, 0.0, 8)
            .map_err(|e| e.to_string())?;
        ensure(rel(circ, surf) <= 1e-8, || format!("Stokes #{k}: {circ} vs {surf}"))?;
        worst = worst.max(rel(circ, surf));
    }
    Ok(format!("10 Gauss + 10 Stokes fields, worst relative mismatch {worst:.1e}"))
}

fn printed(entities: &[Entity]) -> String {
    entities.iter().map(print_entity).collect::<Vec<_>>().join("\n")
}

const VOCABULARY: &[&str] = &[
    "system", "current", "solution", "vectorfield", "on", "kind", "volumetric", "surface-flux", "{", "}", "(", ")",
    "[", "]", ";", ":", ",", "=", "+", "-", "*", "/", "^", "dependents", "equations", "leading", "density", "flux",
    "fields", "parameters", "vector", "u", "rho", "u_t", "u1_x1", "dt", "di", "grad", "div", "curl", "dot", "cross",
    "sin", "exp", "1", "2.5", "x1", "t", "\"text\"", "gasdyn", "#", "\n", " ",
];

fn fuzz_input(rng: &mut ChaCha8Rng, items: &[String]) -> String {
    match rng.gen_range(0..3) {
        0 => (0..rng.gen_range(0..80)).map(|_| char::from(rng.gen_range(9u8..127))).collect(),
        1 => (0..rng.gen_range(0..60)).map(|_| VOCABULARY[rng.gen_range(0..VOCABULARY.len())]).collect::<Vec<_>>().join(" "),
        _ => {
            let mut chars: Vec<char> = items[rng.gen_range(0..items.len())].chars().collect();
            for _ in 0..rng.gen_range(1..4) {
                let at = rng.gen_range(0..=chars.len());
                match rng.gen_range(0..3) {
                    0 if at < chars.len() => {
                        chars.remove(at);
                    }
                    1 => chars.insert(at, "{}();,=+-*/^[]:_".chars().nth(rng.gen_range(0..16)).unwrap()),
                    _ if at < chars.len() => chars[at] = char::from(rng.gen_range(32u8..127)),
                    _ => {}
                }
            }
            chars.into_iter().collect()
        }
    }
}

fn parser() -> Outcome {
    let builtin = catalog();
    let mut reprinted = Catalog::default();
    let mut entities = 0;
    for (name, text) in builtin.texts() {
        let first = parse_document(text, &reprinted).map_err(|d| format!("{name}: {}", d[0]))?;
        let once = printed(&first.entities);
        let second = reprinted.add_text(name, &once).map_err(|e| format!("{name} reprinted: {e}"))?;
        let twice = printed(&second);
        ensure(once == twice, || format!("{name}: printing is not stable"))?;
        for (a, b) in first.entities.iter().zip(&second) {
            let same = match (a, b) {
                (Entity::System(x), Entity::System(y)) => x.equations == y.equations && x.id == y.id,
                (Entity::Current(x), Entity::Current(y)) => x == y,
                (Entity::Solution(x), Entity::Solution(y)) => x.fields == y.fields && x.parameter_defaults == y.parameter_defaults,
                (Entity::VectorField(x), Entity::VectorField(y)) => x == y,
                _ => false,
            };
            ensure(same, || format!("{name}: entity changed on round trip"))?;
            entities += 1;
        }
    }
    let items: Vec<String> = builtin
        .texts()
        .iter()
        .flat_map(|(_, t)| t.split("\n}\n").map(|s| format!("{s}\n}}\n")).collect::<Vec<_>>())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut crashes = 0;
    const INPUTS: usize = 10_000;
    for _ in 0..INPUTS {
        let input = fuzz_input(&mut rng, &items);
        if catch_unwind(AssertUnwindSafe(|| parse_document(&input, &builtin).is_ok())).is_err() {
            crashes += 1;
        }
    }
    ensure(crashes == 0, || format!("{crashes} crashes in {INPUTS} inputs"))?;
    Ok(format!("{entities} entities round-trip; {INPUTS} fuzz inputs, 0 crashes"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("operator identities", operator_identities),
        ("catalog verification", catalog_verification),
        ("classification golden table", classification_golden),
        ("boundary-law detection", boundary_laws),
        ("mapping suite", mapping_suite),
        ("numeric balance", numeric_balance),
        ("Gauss/Stokes consistency", gauss_stokes),
        ("parser round trip and fuzz", parser),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {}: PASS {name}: {detail} ({secs:.1}s)", n + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {}: FAIL {name}: {why} ({secs:.1}s)", n + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
