//! Conserved currents of the six kinds, local verification and triviality
//! classification.

mod ansatz;
mod classify;

pub use classify::{
    classify, classify_circulatory, classify_surfaceflux, classify_topological, classify_volumetric,
    check_witness, detect_boundary_law, equivalent, topological_boundary_law, Certificate, Equivalence, Status, TrivialityVerdict, Witness,
    DEFAULT_ORDER_SLACK,
};

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, VectorExpr};
use crate::jetcalc::{tcurl, tdiv, tgrad, total_dt};
use crate::sysdef::PdeSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsError {
    #[error("{kind} current needs {expected}")]
    ShapeError { kind: CurrentKind, expected: String },
    #[error("current belongs to system `{current}`, not `{system}`")]
    SystemMismatch { current: String, system: String },
    #[error("currents have different kinds ({0} and {1})")]
    KindMismatch(CurrentKind, CurrentKind),
}

pub type Result<T> = std::result::Result<T, ConsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurrentKind {
    Volumetric,
    SurfaceFlux,
    Circulatory,
    SpatialDiv,
    SpatialCurl,
    SpatialGrad,
}

impl CurrentKind {
    pub const ALL: [CurrentKind; 6] = [
        CurrentKind::Volumetric,
        CurrentKind::SurfaceFlux,
        CurrentKind::Circulatory,
        CurrentKind::SpatialDiv,
        CurrentKind::SpatialCurl,
        CurrentKind::SpatialGrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurrentKind::Volumetric => "volumetric",
            CurrentKind::SurfaceFlux => "surface-flux",
            CurrentKind::Circulatory => "circulatory",
            CurrentKind::SpatialDiv => "spatial-div",
            CurrentKind::SpatialCurl => "spatial-curl",
            CurrentKind::SpatialGrad => "spatial-grad",
        }
    }

    pub fn from_name(s: &str) -> Option<CurrentKind> {
        CurrentKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_spatial(self) -> bool {
        matches!(self, CurrentKind::SpatialDiv | CurrentKind::SpatialCurl | CurrentKind::SpatialGrad)
    }

    /// Expected (density, flux) shapes; `None` means absent.
    pub fn shape(self) -> (Option<Shape>, Shape) {
        use Shape::*;
        match self {
            CurrentKind::Volumetric => (Some(Scalar), Vector),
            CurrentKind::SurfaceFlux => (Some(Vector), Vector),
            CurrentKind::Circulatory => (Some(Vector), Scalar),
            CurrentKind::SpatialDiv | CurrentKind::SpatialCurl => (None, Vector),
            CurrentKind::SpatialGrad => (None, Scalar),
        }
    }
}

impl fmt::Display for CurrentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector,
}

/// A scalar or vector differential function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Field {
    Scalar(Expr),
    Vector(VectorExpr),
}

impl Field {
    pub fn shape(&self) -> Shape {
        match self {
            Field::Scalar(_) => Shape::Scalar,
            Field::Vector(_) => Shape::Vector,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Scalar(e) => e.is_zero(),
            Field::Vector(v) => v.is_zero(),
        }
    }

    pub fn zero(shape: Shape) -> Field {
        match shape {
            Shape::Scalar => Field::Scalar(Expr::zero()),
            Shape::Vector => Field::Vector(VectorExpr::zero()),
        }
    }

    pub fn scalar(&self) -> Option<&Expr> {
        match self {
            Field::Scalar(e) => Some(e),
            Field::Vector(_) => None,
        }
    }

    pub fn vector(&self) -> Option<&VectorExpr> {
        match self {
            Field::Vector(v) => Some(v),
            Field::Scalar(_) => None,
        }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Field {
        match self {
            Field::Scalar(e) => Field::Scalar(f(e)),
            Field::Vector(v) => Field::Vector(v.map(f)),
        }
    }

    pub fn sub(&self, other: &Field) -> Option<Field> {
        match (self, other) {
            (Field::Scalar(a), Field::Scalar(b)) => Some(Field::Scalar(a - b)),
            (Field::Vector(a), Field::Vector(b)) => Some(Field::Vector(a - b)),
            _ => None,
        }
    }

    pub fn reduce(&self, sys: &PdeSystem) -> Field {
        self.map(|e| sys.reduce(e))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Scalar(e) => write!(f, "{e}"),
            Field::Vector(v) => write!(f, "{v}"),
        }
    }
}

/// A (kind, density, flux) triple on a named system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConservedCurrent {
    pub id: String,
    pub description: String,
    pub kind: CurrentKind,
    pub density: Option<Field>,
    pub flux: Option<Field>,
    pub system_id: String,
    /// Holds only on closed surfaces or curves (a boundary constant of motion).
    pub closed_only: bool,
}

impl ConservedCurrent {
    pub fn new(
        id: &str,
        system_id: &str,
        kind: CurrentKind,
        density: Option<Field>,
        flux: Option<Field>,
    ) -> Result<ConservedCurrent> {
        let (dshape, fshape) = kind.shape();
        let density_ok = match (&density, dshape) {
            (None, None) => true,
            (Some(d), Some(s)) => d.shape() == s,
            _ => false,
        };
        let flux = match (flux, kind.is_spatial()) {
            (Some(f), _) => Some(f),
            (None, false) => Some(Field::zero(fshape)),
            (None, true) => None,
        };
        let flux_ok = flux.as_ref().is_some_and(|f| f.shape() == fshape);
        if !density_ok || !flux_ok {
            let name = |s: Option<Shape>| match s {
                None => "no",
                Some(Shape::Scalar) => "a scalar",
                Some(Shape::Vector) => "a vector",
            };
            return Err(ConsError::ShapeError {
                kind,
                expected: format!("{} density and {} flux", name(dshape), name(Some(fshape))),
            });
        }
        Ok(ConservedCurrent {
            id: id.into(),
            description: String::new(),
            kind,
            density,
            flux,
            system_id: system_id.into(),
            closed_only: false,
        })
    }

    pub fn volumetric(id: &str, system_id: &str, t: Expr, x: VectorExpr) -> ConservedCurrent {
        ConservedCurrent::new(id, system_id, CurrentKind::Volumetric, Some(Field::Scalar(t)), Some(Field::Vector(x)))
            .unwrap()
    }

    pub fn surface_flux(id: &str, system_id: &str, t: VectorExpr, x: VectorExpr) -> ConservedCurrent {
        ConservedCurrent::new(id, system_id, CurrentKind::SurfaceFlux, Some(Field::Vector(t)), Some(Field::Vector(x)))
            .unwrap()
    }

    pub fn circulatory(id: &str, system_id: &str, t: VectorExpr, x: Expr) -> ConservedCurrent {
        ConservedCurrent::new(id, system_id, CurrentKind::Circulatory, Some(Field::Vector(t)), Some(Field::Scalar(x)))
            .unwrap()
    }

    pub fn spatial(id: &str, system_id: &str, kind: CurrentKind, x: Field) -> Result<ConservedCurrent> {
        ConservedCurrent::new(id, system_id, kind, None, Some(x))
    }

    pub fn density_scalar(&self) -> Option<&Expr> {
        self.density.as_ref().and_then(Field::scalar)
    }

    pub fn density_vector(&self) -> Option<&VectorExpr> {
        self.density.as_ref().and_then(Field::vector)
    }

    pub fn flux_scalar(&self) -> Option<&Expr> {
        self.flux.as_ref().and_then(Field::scalar)
    }

    pub fn flux_vector(&self) -> Option<&VectorExpr> {
        self.flux.as_ref().and_then(Field::vector)
    }

    /// Componentwise `self - other`.
    pub fn difference(&self, other: &ConservedCurrent) -> Result<ConservedCurrent> {
        if self.kind != other.kind {
            return Err(ConsError::KindMismatch(self.kind, other.kind));
        }
        let sub = |a: &Option<Field>, b: &Option<Field>| match (a, b) {
            (Some(a), Some(b)) => a.sub(b),
            _ => None,
        };
        let mut out = self.clone();
        out.id = format!("{}-minus-{}", self.id, other.id);
        out.density = sub(&self.density, &other.density);
        out.flux = sub(&self.flux, &other.flux);
        Ok(out)
    }

    /// Whether density and flux vanish identically.
    pub fn is_zero(&self) -> bool {
        self.density.as_ref().is_none_or(Field::is_zero) && self.flux.as_ref().is_none_or(Field::is_zero)
    }
}

fn check_system(c: &ConservedCurrent, sys: &PdeSystem) -> Result<()> {
    if c.system_id != sys.id {
        return Err(ConsError::SystemMismatch {
            current: c.system_id.clone(),
            system: sys.id.clone(),
        });
    }
    Ok(())
}

/// The kind's defining combination reduced on solutions; all-zero means the
/// law holds.
pub fn verify_local(c: &ConservedCurrent, sys: &PdeSystem) -> Result<Field> {
    check_system(c, sys)?;
    let shape_err = || ConsError::ShapeError {
        kind: c.kind,
        expected: "a density and flux matching its kind".into(),
    };
    let raw = match c.kind {
        CurrentKind::Volumetric => {
            let t = c.density_scalar().ok_or_else(shape_err)?;
            let x = c.flux_vector().ok_or_else(shape_err)?;
            Field::Scalar(total_dt(t) + tdiv(x))
        }
        CurrentKind::SurfaceFlux => {
            let t = c.density_vector().ok_or_else(shape_err)?;
            if c.closed_only {
                Field::Scalar(total_dt(&tdiv(t)))
            } else {
                let x = c.flux_vector().ok_or_else(shape_err)?;
                Field::Vector(&t.map(total_dt) + &tcurl(x))
            }
        }
        CurrentKind::Circulatory => {
            let t = c.density_vector().ok_or_else(shape_err)?;
            if c.closed_only {
                Field::Vector(tcurl(&t.map(total_dt)))
            } else {
                let x = c.flux_scalar().ok_or_else(shape_err)?;
                Field::Vector(&t.map(total_dt) + &tgrad(x))
            }
        }
        CurrentKind::SpatialDiv => Field::Scalar(tdiv(c.flux_vector().ok_or_else(shape_err)?)),
        CurrentKind::SpatialCurl => Field::Vector(tcurl(c.flux_vector().ok_or_else(shape_err)?)),
        CurrentKind::SpatialGrad => Field::Vector(tgrad(c.flux_scalar().ok_or_else(shape_err)?)),
    };
    Ok(raw.reduce(sys))
}

#[cfg(test)]
mod tests;
