use super::*;
use crate::testing::{random_poly, random_vector, PolyShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn x(i: usize) -> Expr {
    Expr::coord(Axis::spatial(i).unwrap())
}

fn idx(s: &[Axis]) -> MultiIndex {
    s.iter().fold(MultiIndex::ZERO, |m, &a| m.bump(a))
}

#[test]
fn chain_and_product_rules() {
    let u = Expr::dep("u");
    assert_eq!(total_dt(&(&u * &u)), Expr::int(2) * &u * Expr::jet("u", idx(&[Axis::T])));
    let (rho, u1) = (Expr::dep("rho"), Expr::dep("u1"));
    let want = Expr::jet("rho", idx(&[Axis::X1])) * &u1 + &rho * Expr::jet("u1", idx(&[Axis::X1]));
    assert_eq!(total_di(&(&rho * &u1), 1), want);
}

#[test]
fn square_expansion_oracle() {
    // u u_x - (1/2) D_x(u^2) vanishes term by term
    let u = Expr::dep("u");
    let ux = Expr::jet("u", idx(&[Axis::X1]));
    assert!((&u * &ux - total_di(&(&u * &u), 1).scale(&Q::new(1.into(), 2.into()))).is_zero());
}

#[test]
fn classical_curl_of_rotation() {
    let v = VectorExpr::new(-x(2), x(1), Expr::zero());
    assert_eq!(tcurl(&v), VectorExpr::new(Expr::zero(), Expr::zero(), Expr::int(2)));
}

#[test]
fn derivatives_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = PolyShape::default();
    for _ in 0..50 {
        let e = random_poly(&mut rng, &shape);
        assert_eq!(total_dt(&total_di(&e, 2)), total_di(&total_dt(&e), 2));
        assert_eq!(total_di(&total_di(&e, 1), 3), total_di(&total_di(&e, 3), 1));
    }
}

#[test]
fn euler_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shape = PolyShape { terms: 3, ..PolyShape::default() };
    for _ in 0..20 {
        let phi = random_vector(&mut rng, &shape);
        let phit = random_poly(&mut rng, &shape);
        let f = total_dt(&phit) + tdiv(&phi);
        assert!(euler(&f, "u").is_zero());
        assert!(spatial_euler(&tdiv(&phi), "v").is_zero());
        assert!(is_total_div(&tdiv(&phi)).unwrap());
    }
    assert!(spatial_euler(&Expr::dep("rho"), "rho").is_one());
}

#[test]
fn exactness_tests() {
    let g = VectorExpr::dep("w");
    assert!(!is_total_grad(&g).unwrap());
    assert!(!is_total_curl(&g).unwrap());
    let u = VectorExpr::dep("u");
    let s = Expr::dep("S");
    let ertel = tdiv(&u.cross(&tgrad(&s)));
    assert!(is_total_div(&ertel).unwrap());
    assert!(!is_total_div(&(Expr::dep("u1") * Expr::dep("u1"))).unwrap());
}

#[test]
fn radial_gradient_witness() {
    let v = VectorExpr::new(Expr::int(2) * x(1), Expr::int(2) * x(2), Expr::int(2) * x(3));
    let phi = grad_witness(&v).unwrap();
    assert_eq!(tgrad(&phi), v);
    assert!((phi - (x(1) * x(1) + x(2) * x(2) + x(3) * x(3))).as_constant().is_some());
}

#[test]
fn witnesses_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = PolyShape { terms: 3, time: true, ..PolyShape::default() };
    for _ in 0..25 {
        let a = random_vector(&mut rng, &shape);
        let target = tcurl(&a);
        let w = curl_witness(&target).unwrap();
        assert_eq!(tcurl(&w), target);
        let f = random_poly(&mut rng, &shape);
        let g = tgrad(&f);
        assert_eq!(tgrad(&grad_witness(&g).unwrap()), g);
        let d = tdiv(&a);
        assert_eq!(tdiv(&div_witness(&d).unwrap()), d);
    }
}

#[test]
fn ertel_density_witness() {
    let u = VectorExpr::dep("u");
    let s = Expr::dep("S");
    let ertel = tdiv(&u.cross(&tgrad(&s)));
    let w = div_witness(&ertel).unwrap();
    assert_eq!(tdiv(&w), ertel);
}

#[test]
fn witness_outside_class() {
    let f = Expr::dep("u").recip().unwrap() * Expr::jet("u", idx(&[Axis::X1]));
    assert!(matches!(div_witness(&f), Err(JetError::WitnessUnavailable(_))));
}
