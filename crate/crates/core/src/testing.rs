//! Random expression generators shared by property tests and benchmarks.

use rand::Rng;

use crate::expr::{Axis, Expr, MultiIndex, VectorExpr};

/// Shape of generated polynomials.
#[derive(Debug, Clone)]
pub struct PolyShape {
    pub deps: Vec<String>,
    pub max_order: u8,
    pub terms: usize,
    pub max_degree: u32,
    pub coords: bool,
    pub time: bool,
}

impl Default for PolyShape {
    fn default() -> Self {
        PolyShape {
            deps: vec!["u".into(), "v".into()],
            max_order: 2,
            terms: 4,
            max_degree: 3,
            coords: true,
            time: true,
        }
    }
}

fn random_index<R: Rng>(rng: &mut R, shape: &PolyShape) -> MultiIndex {
    let mut idx = MultiIndex::ZERO;
    let order = rng.gen_range(0..=shape.max_order);
    for _ in 0..order {
        let lo = if shape.time { 0 } else { 1 };
        idx = idx.bump(Axis::from_slot(rng.gen_range(lo..4)));
    }
    idx
}

fn random_factor<R: Rng>(rng: &mut R, shape: &PolyShape) -> Expr {
    if shape.coords && rng.gen_bool(0.25) {
        let lo = if shape.time { 0 } else { 1 };
        return Expr::coord(Axis::from_slot(rng.gen_range(lo..4)));
    }
    let dep = &shape.deps[rng.gen_range(0..shape.deps.len())];
    Expr::jet(dep, random_index(rng, shape))
}

pub fn random_poly<R: Rng>(rng: &mut R, shape: &PolyShape) -> Expr {
    let mut out = Expr::zero();
    for _ in 0..shape.terms {
        let mut term = Expr::int(rng.gen_range(-5..=5));
        for _ in 0..rng.gen_range(1..=shape.max_degree) {
            term = term * random_factor(rng, shape);
        }
        out = out + term;
    }
    out
}

pub fn random_vector<R: Rng>(rng: &mut R, shape: &PolyShape) -> VectorExpr {
    VectorExpr::from_fn(|_| random_poly(rng, shape))
}

/// Random polynomial in x1, x2, x3 only.
pub fn random_coordinate_poly<R: Rng>(rng: &mut R, terms: usize, max_degree: u32) -> Expr {
    let mut out = Expr::zero();
    for _ in 0..terms {
        let mut term = Expr::int(rng.gen_range(-4..=4));
        for _ in 0..rng.gen_range(0..=max_degree) {
            term = term * Expr::coord(Axis::from_slot(rng.gen_range(1..4)));
        }
        out = out + term;
    }
    out
}
