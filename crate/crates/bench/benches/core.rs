use std::hint::black_box;

use conslaw::conslaw::{classify, verify_local};
use conslaw::jetcalc::{euler, tdiv, total_dt};
use conslaw::numgrid::{balance_residual, IntegrationDomain, QuadratureSpec};
use conslaw::testing::{random_poly, random_vector, PolyShape};
use conslaw_bench::catalog;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expressions(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = PolyShape::default();
    let p0 = random_poly(&mut rng, &shape);
    let p = random_vector(&mut rng, &shape);
    c.bench_function("euler of a total divergence", |b| {
        b.iter(|| euler(black_box(&(total_dt(&p0) + tdiv(&p))), "u"))
    });
}

fn catalog_ops(c: &mut Criterion) {
    let cat = catalog();
    let gas = cat.system("gasdyn").unwrap();
    let mass = cat.current("gasdyn", "mass").unwrap();
    c.bench_function("verify gasdyn mass", |b| b.iter(|| verify_local(black_box(mass), gas).unwrap()));
    c.bench_function("parse builtin catalog", |b| b.iter(catalog));
    let mhd = cat.system("mhd-ideal").unwrap();
    let helicity = cat.current("mhd-ideal", "cross-helicity").unwrap();
    c.bench_function("classify mhd cross-helicity", |b| b.iter(|| classify(black_box(helicity), mhd, None).unwrap()));
    let em = cat.system("em").unwrap();
    let charge = cat.current("em", "charge-current").unwrap();
    c.bench_function("classify em charge-current", |b| b.iter(|| classify(black_box(charge), em, None).unwrap()));
}

fn quadrature(c: &mut Criterion) {
    let cat = catalog();
    let wave = cat.solution("em-planewave").unwrap();
    let energy = cat.current("em-vacuum", "energy").unwrap();
    let q = QuadratureSpec::new(8, 2).unwrap();
    c.bench_function("plane-wave energy balance", |b| {
        b.iter(|| balance_residual(energy, &IntegrationDomain::unit_box(), wave, 0.3, &q).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = expressions, catalog_ops, quadrature
}
criterion_main!(benches);
