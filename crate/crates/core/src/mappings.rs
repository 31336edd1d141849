//! Maps between conservation-law kinds driven by a coordinate vector field.

use std::fmt;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;
use thiserror::Error;

use crate::conslaw::{classify, verify_local, ConsError, ConservedCurrent, CurrentKind, Field, Status};
use crate::expr::{intern, Atom, AtomId, Axis, Expr, Poly, VectorExpr, Q};
use crate::jetcalc::{jet_vars, tcurl, tdiv, tgrad};
use crate::sysdef::PdeSystem;
use crate::testing::random_coordinate_poly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("mapping vector must depend on x1, x2, x3 only")]
    NotCoordinateField,
    #[error("mapping vector violates its `{0}` constraint")]
    ConstraintViolation(Constraint),
    #[error("no mapping from {from} to {to}")]
    UnsupportedMapping { from: String, to: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    DivergenceFree,
    CurlFree,
    Constant,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::DivergenceFree => "divergence-free",
            Constraint::CurlFree => "curl-free",
            Constraint::Constant => "constant",
        }
    }

    pub fn from_name(s: &str) -> Option<Constraint> {
        [Constraint::DivergenceFree, Constraint::CurlFree, Constraint::Constant]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A time-independent coordinate vector field with a checked constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingVector {
    pub id: String,
    pub description: String,
    pub components: VectorExpr,
    pub constraint: Constraint,
}

impl MappingVector {
    pub fn new(id: &str, components: VectorExpr, constraint: Constraint) -> Result<MappingVector, MapError> {
        let t = crate::expr::intern(crate::expr::Atom::Coord(crate::expr::Axis::T));
        for c in components.iter() {
            if !jet_vars(c).is_empty() || c.atoms_deep().contains(&t) {
                return Err(MapError::NotCoordinateField);
            }
        }
        let ok = match constraint {
            Constraint::DivergenceFree => tdiv(&components).is_zero(),
            Constraint::CurlFree => tcurl(&components).is_zero(),
            Constraint::Constant => components.iter().all(|c| c.as_constant().is_some()),
        };
        if !ok {
            return Err(MapError::ConstraintViolation(constraint));
        }
        Ok(MappingVector {
            id: id.into(),
            description: String::new(),
            components,
            constraint,
        })
    }

    /// Unit vector by name: `i`, `j` or `k`.
    pub fn unit(name: &str) -> Option<MappingVector> {
        let k = match name {
            "i" => 0,
            "j" => 1,
            "k" => 2,
            _ => return None,
        };
        MappingVector::new(name, VectorExpr::unit(k), Constraint::Constant).ok()
    }

    pub fn is_div_free(&self) -> bool {
        self.constraint != Constraint::CurlFree || tdiv(&self.components).is_zero()
    }

    pub fn is_curl_free(&self) -> bool {
        self.constraint != Constraint::DivergenceFree || tcurl(&self.components).is_zero()
    }

    pub fn scalar(&self, i: usize) -> &Expr {
        &self.components[i]
    }
}

/// Scales each term of a coordinate polynomial by `1/(degree + shift)`,
/// the integral of `λ^(degree + shift - 1)` over `[0, 1]`. Every term is
/// assumed to carry at least one coordinate factor when `shift` is zero.
fn radial_weight(e: &Expr, shift: i32) -> Expr {
    let coords: Vec<AtomId> = Axis::SPATIAL.iter().map(|&a| intern(Atom::Coord(a))).collect();
    let mut out = Poly::zero();
    for (m, c) in &e.num().0 {
        let deg: i32 = coords.iter().map(|&a| m.exponent(a)).sum();
        out.add_term(m.clone(), c / Q::from_integer((deg + shift).into()));
    }
    Expr::from_poly(out).checked_div(&Expr::from_poly(e.den().clone())).expect("nonzero denominator")
}

fn polynomial(v: &VectorExpr) -> bool {
    v.iter().all(|c| c.den().is_one() && !c.num().has_negative_exponent())
}

/// ζ with Grad ζ = ξ for a curl-free polynomial ξ.
pub fn scalar_potential(xi: &MappingVector) -> Option<Expr> {
    if !xi.is_curl_free() || !polynomial(&xi.components) {
        return None;
    }
    let x = VectorExpr::from_fn(|i| Expr::coord(Axis::SPATIAL[i]));
    Some(radial_weight(&xi.components.dot(&x), 0))
}

/// ζ⃗ with Curl ζ⃗ = ξ for a divergence-free polynomial ξ.
pub fn vector_potential(xi: &MappingVector) -> Option<VectorExpr> {
    if !xi.is_div_free() || !polynomial(&xi.components) {
        return None;
    }
    let x = VectorExpr::from_fn(|i| Expr::coord(Axis::SPATIAL[i]));
    Some(xi.components.cross(&x).map(|c| radial_weight(c, 1)))
}

fn require(xi: &MappingVector, needs: Constraint) -> Result<(), MapError> {
    let ok = match needs {
        Constraint::DivergenceFree => xi.is_div_free(),
        Constraint::CurlFree => xi.is_curl_free(),
        Constraint::Constant => xi.constraint == Constraint::Constant,
    };
    if ok {
        Ok(())
    } else {
        Err(MapError::ConstraintViolation(needs))
    }
}

/// The constraint on ξ needed to map `from` into `to`, if the pair is supported.
pub fn required_constraint(from: CurrentKind, to: CurrentKind) -> Option<Constraint> {
    use CurrentKind::*;
    match (from, to) {
        (Circulatory, Volumetric) | (SpatialGrad, SpatialDiv) => Some(Constraint::DivergenceFree),
        (SurfaceFlux, Volumetric) | (Circulatory, SurfaceFlux) => Some(Constraint::CurlFree),
        (SpatialCurl, SpatialDiv) | (SpatialGrad, SpatialCurl) => Some(Constraint::CurlFree),
        _ => None,
    }
}

/// Dot or cross product with ξ turning a law of one kind into a law of another.
pub fn map_current(c: &ConservedCurrent, xi: &MappingVector, to: CurrentKind) -> Result<ConservedCurrent, MapError> {
    use CurrentKind::*;
    let unsupported = || MapError::UnsupportedMapping {
        from: c.kind.to_string(),
        to: to.to_string(),
    };
    let needs = required_constraint(c.kind, to).ok_or_else(unsupported)?;
    require(xi, needs)?;
    let v = &xi.components;
    let dv = c.density_vector();
    let (density, flux) = match (c.kind, to) {
        (Circulatory, Volumetric) => (
            Some(Field::Scalar(dv.ok_or_else(unsupported)?.dot(v))),
            Field::Vector(v.scale(c.flux_scalar().ok_or_else(unsupported)?)),
        ),
        (SurfaceFlux, Volumetric) => (
            Some(Field::Scalar(dv.ok_or_else(unsupported)?.dot(v))),
            Field::Vector(c.flux_vector().ok_or_else(unsupported)?.cross(v)),
        ),
        (Circulatory, SurfaceFlux) => (
            Some(Field::Vector(dv.ok_or_else(unsupported)?.cross(v))),
            Field::Vector(v.scale(c.flux_scalar().ok_or_else(unsupported)?)),
        ),
        (SpatialGrad, SpatialDiv) | (SpatialGrad, SpatialCurl) => {
            (None, Field::Vector(v.scale(c.flux_scalar().ok_or_else(unsupported)?)))
        }
        (SpatialCurl, SpatialDiv) => (None, Field::Vector(c.flux_vector().ok_or_else(unsupported)?.cross(v))),
        _ => return Err(unsupported()),
    };
    let id = format!("{}-{}-{}", c.id, to.name(), xi.id);
    let mut out = ConservedCurrent::new(&id, &c.system_id, to, density, Some(flux)).map_err(|_| unsupported())?;
    out.description = format!("{} mapped by {}", c.id, xi.id);
    Ok(out)
}

/// Targets reachable from `kind` by a mapping vector.
pub fn targets(kind: CurrentKind) -> Vec<CurrentKind> {
    CurrentKind::ALL
        .into_iter()
        .filter(|&to| required_constraint(kind, to).is_some())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MappedImage {
    pub xi: String,
    pub xi_components: VectorExpr,
    pub target: CurrentKind,
    pub current: ConservedCurrent,
    pub verifies: bool,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub current_id: String,
    pub system_id: String,
    pub source_status: Status,
    /// Curl (circulatory) or divergence (surface-flux) of the density vanishes
    /// identically, off solutions as well.
    pub density_closed: bool,
    /// The same condition on solutions only.
    pub density_closed_on_solutions: bool,
    pub images: Vec<MappedImage>,
    /// Whether the images agree with the preservation theorem; `None` when
    /// the search could not decide.
    pub consistent: Option<bool>,
    pub diagnostics: Vec<String>,
}

const RANDOM_XI: usize = 6;

fn random_xi(rng: &mut StdRng, needs: Constraint, n: usize) -> Option<MappingVector> {
    let id = format!("random-{n}");
    match needs {
        Constraint::CurlFree => {
            let zeta = random_coordinate_poly(rng, 3, 2);
            MappingVector::new(&id, tgrad(&zeta), Constraint::CurlFree).ok()
        }
        Constraint::DivergenceFree => {
            let zeta = VectorExpr::from_fn(|_| random_coordinate_poly(rng, 3, 2));
            MappingVector::new(&id, tcurl(&zeta), Constraint::DivergenceFree).ok()
        }
        Constraint::Constant => None,
    }
}

fn image(
    c: &ConservedCurrent,
    xi: &MappingVector,
    to: CurrentKind,
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<Option<MappedImage>, ConsError> {
    let current = match map_current(c, xi, to) {
        Ok(m) => m,
        Err(_) => return Ok(None),
    };
    let verifies = verify_local(&current, sys)?.is_zero();
    let status = classify(&current, sys, order_bound)?.status;
    Ok(Some(MappedImage {
        xi: xi.id.clone(),
        xi_components: xi.components.clone(),
        target: to,
        current,
        verifies,
        status,
    }))
}

/// Maps `c` by the unit vectors and `family` into every reachable kind,
/// classifies each image and compares with the preservation theorem. When
/// the density is not closed and no fixed ξ gives a non-trivial image, a few
/// seeded random polynomial ξ are tried before giving up.
pub fn check_triviality_preservation(
    c: &ConservedCurrent,
    family: &[MappingVector],
    sys: &PdeSystem,
    order_bound: Option<u32>,
) -> Result<PreservationReport, ConsError> {
    let source_status = classify(c, sys, order_bound)?.status;
    let closedness = |reduce: bool| -> Option<bool> {
        let t = c.density_vector()?;
        let r = match c.kind {
            CurrentKind::Circulatory => Field::Vector(tcurl(t)),
            CurrentKind::SurfaceFlux => Field::Scalar(tdiv(t)),
            _ => return None,
        };
        Some(if reduce { r.reduce(sys).is_zero() } else { r.is_zero() })
    };
    let density_closed = closedness(false).unwrap_or(true);
    let density_closed_on_solutions = closedness(true).unwrap_or(true);
    let mut xis: Vec<MappingVector> = ["i", "j", "k"].iter().filter_map(|n| MappingVector::unit(n)).collect();
    xis.extend(family.iter().cloned());

    let mut images = Vec::new();
    for to in targets(c.kind) {
        for xi in &xis {
            images.extend(image(c, xi, to, sys, order_bound)?);
        }
    }
    let mut diagnostics = Vec::new();
    let consistent = if density_closed {
        if images.iter().all(|m| m.status.is_trivial()) {
            Some(true)
        } else if images.iter().any(|m| m.status == Status::NonTrivial) {
            Some(false)
        } else {
            diagnostics.push("some images could not be classified".into());
            None
        }
    } else {
        let mut verdict = Some(true);
        for to in targets(c.kind) {
            let found = |imgs: &[MappedImage]| imgs.iter().any(|m| m.target == to && m.status == Status::NonTrivial);
            if found(&images) {
                continue;
            }
            let needs = required_constraint(c.kind, to).expect("reachable target");
            let mut rng = StdRng::seed_from_u64(0x5eed);
            for n in 0..RANDOM_XI {
                if let Some(xi) = random_xi(&mut rng, needs, n) {
                    images.extend(image(c, &xi, to, sys, order_bound)?);
                }
                if found(&images) {
                    break;
                }
            }
            if !found(&images) {
                diagnostics.push(format!("no non-trivial {to} image found among the sampled mapping vectors"));
                verdict = None;
            }
        }
        verdict
    };
    Ok(PreservationReport {
        current_id: c.id.clone(),
        system_id: c.system_id.clone(),
        source_status,
        density_closed,
        density_closed_on_solutions,
        images,
        consistent,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn cat() -> Catalog {
        Catalog::builtin().unwrap()
    }

    #[test]
    fn potentials_invert_grad_and_curl() {
        let c = cat();
        let rot = c.vectorfield("rotation-x3").unwrap();
        assert_eq!(tcurl(&vector_potential(rot).unwrap()), rot.components);
        let radial = c.vectorfield("radial").unwrap();
        assert_eq!(tgrad(&scalar_potential(radial).unwrap()), radial.components);
        assert!(vector_potential(radial).is_none());
    }

    #[test]
    fn faraday_to_volumetric() {
        let c = cat();
        let sys = c.system("em").unwrap();
        let f = c.current("em", "faraday").unwrap();
        let m = map_current(f, &MappingVector::unit("i").unwrap(), CurrentKind::Volumetric).unwrap();
        assert_eq!(m.density_scalar().unwrap(), &Expr::dep("B1"));
        assert!(verify_local(&m, sys).unwrap().is_zero());
    }

    #[test]
    fn guards() {
        let c = cat();
        let circ = c.current("irrotational-fluid", "circulation").unwrap();
        let radial = c.vectorfield("radial").unwrap();
        assert_eq!(
            map_current(circ, radial, CurrentKind::Volumetric),
            Err(MapError::ConstraintViolation(Constraint::DivergenceFree))
        );
        let faraday = c.current("em", "faraday").unwrap();
        assert!(matches!(
            map_current(faraday, radial, CurrentKind::SurfaceFlux),
            Err(MapError::UnsupportedMapping { .. })
        ));
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = ConservedCurrent::circulatory("z", "gasdyn", VectorExpr::zero(), Expr::zero());
        let m = map_current(&z, &MappingVector::unit("j").unwrap(), CurrentKind::SurfaceFlux).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn gradient_densities_stay_trivial() {
        let c = cat();
        for (sys, id) in [("fluid-incompressible", "density-gradient"), ("euler-adiabatic", "entropy-gradient")] {
            let r = check_triviality_preservation(c.current(sys, id).unwrap(), &[], c.system(sys).unwrap(), None).unwrap();
            assert!(r.density_closed);
            assert_eq!(r.images.len(), 6);
            assert!(r.images.iter().all(|m| m.verifies && m.status.is_trivial()), "{id}");
            assert_eq!(r.consistent, Some(true));
        }
    }

    #[test]
    fn irrotational_circulation_has_nontrivial_image() {
        let c = cat();
        let sys = c.system("irrotational-fluid").unwrap();
        let r = check_triviality_preservation(c.current("irrotational-fluid", "circulation").unwrap(), &[], sys, None).unwrap();
        assert!(!r.density_closed && r.density_closed_on_solutions);
        assert!(r.images.iter().all(|m| m.verifies));
        assert!(r
            .images
            .iter()
            .any(|m| m.target == CurrentKind::SurfaceFlux && m.status == Status::NonTrivial));
        assert_eq!(r.consistent, Some(true));
    }
}
