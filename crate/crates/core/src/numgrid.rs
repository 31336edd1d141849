//! Quadrature over boxes, rectangles, circles and segments, and numerical
//! residuals of global conservation laws evaluated on exact solutions.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::GaussLegendre;
use serde::Serialize;
use thiserror::Error;

use crate::conslaw::{ConservedCurrent, CurrentKind, Field};
use crate::expr::{Binding, Expr, ExprError, VectorExpr};
use crate::jetcalc::total_dt;
use crate::sysdef::{ExactSolution, SysError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error(transparent)]
    Solution(#[from] SysError),
    #[error("a {kind} current cannot be integrated over a {domain}")]
    DomainMismatch { kind: CurrentKind, domain: &'static str },
    #[error("invalid domain: {0}")]
    BadDomain(String),
    #[error("invalid quadrature: {0}")]
    BadQuadrature(String),
}

pub type Result<T> = std::result::Result<T, NumError>;

/// A coordinate plane; its normal is the remaining axis, oriented so that
/// the two in-plane axes and the normal are right-handed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Yz,
    Zx,
}

impl Plane {
    /// (first in-plane axis, second in-plane axis, normal axis) as 0-based indices.
    pub fn axes(self) -> (usize, usize, usize) {
        match self {
            Plane::Xy => (0, 1, 2),
            Plane::Yz => (1, 2, 0),
            Plane::Zx => (2, 0, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::Xy => "xy",
            Plane::Yz => "yz",
            Plane::Zx => "zx",
        }
    }
}

impl FromStr for Plane {
    type Err = NumError;

    fn from_str(s: &str) -> Result<Plane> {
        match s {
            "xy" | "yx" => Ok(Plane::Xy),
            "yz" | "zy" => Ok(Plane::Yz),
            "zx" | "xz" => Ok(Plane::Zx),
            _ => Err(NumError::BadDomain(format!("unknown plane `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cuboid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Cuboid {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Cuboid> {
        if (0..3).any(|i| !(hi[i] > lo[i]) || !lo[i].is_finite() || !hi[i].is_finite()) {
            return Err(NumError::BadDomain("box extents must be positive and finite".into()));
        }
        Ok(Cuboid { lo, hi })
    }

    pub fn unit() -> Cuboid {
        Cuboid { lo: [0.0; 3], hi: [1.0; 3] }
    }

    fn contains(&self, other: &Cuboid) -> bool {
        (0..3).all(|i| self.lo[i] < other.lo[i] && other.hi[i] < self.hi[i])
    }
}

/// An axis-aligned rectangle in a coordinate plane. Its normal is the plane
/// normal, reversed when `flipped`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub plane: Plane,
    pub offset: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub flipped: bool,
}

impl Rect {
    pub fn new(plane: Plane, offset: f64, lo: [f64; 2], hi: [f64; 2], flipped: bool) -> Result<Rect> {
        if (0..2).any(|i| !(hi[i] > lo[i])) || !offset.is_finite() {
            return Err(NumError::BadDomain("rectangle extents must be positive".into()));
        }
        Ok(Rect { plane, offset, lo, hi, flipped })
    }

    fn sign(&self) -> f64 {
        if self.flipped {
            -1.0
        } else {
            1.0
        }
    }

    fn point(&self, a: f64, b: f64) -> [f64; 3] {
        let (ia, ib, n) = self.plane.axes();
        let mut p = [0.0; 3];
        p[ia] = a;
        p[ib] = b;
        p[n] = self.offset;
        p
    }
}

/// A circle in a plane parallel to a coordinate plane, traversed
/// counterclockwise about the plane normal unless `flipped`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub center: [f64; 3],
    pub radius: f64,
    pub plane: Plane,
    pub flipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum IntegrationDomain {
    Box(Cuboid),
    /// Closed surface of a box with outward normals.
    BoxBoundary(Cuboid),
    /// The two boundaries of the region between nested boxes, both with
    /// normals pointing away from the inner box.
    NestedBoxes { outer: Cuboid, inner: Cuboid },
    PlanarRect(Rect),
    /// Edges of the rectangle, oriented so that tangent × normal points out
    /// of the rectangle.
    RectBoundary(Rect),
    Circle(Circle),
    Segment { p0: [f64; 3], p1: [f64; 3] },
}

/// A weighted quadrature node. `dir` is the unit normal on surfaces and the
/// unit tangent on curves; weights already include the area or length element.
#[derive(Debug, Clone, Copy)]
struct Node {
    x: [f64; 3],
    w: f64,
    dir: [f64; 3],
}

fn rule(n: usize) -> Vec<(f64, f64)> {
    let deg = NonZeroUsize::new(n.max(1)).expect("positive");
    GaussLegendre::new(deg).as_node_weight_pairs().to_vec()
}

/// Nodes and weights on `[a, b]`.
fn mapped(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule(n).into_iter().map(|(x, w)| (mid + half * x, half * w)).collect()
}

fn unit(i: usize, sign: f64) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[i] = sign;
    v
}

fn box_faces(b: &Cuboid, n: usize, outward: f64, out: &mut Vec<Node>) {
    for axis in 0..3 {
        let (ia, ib) = ((axis + 1) % 3, (axis + 2) % 3);
        let qa = mapped(n, b.lo[ia], b.hi[ia]);
        let qb = mapped(n, b.lo[ib], b.hi[ib]);
        for (level, sign) in [(b.lo[axis], -1.0), (b.hi[axis], 1.0)] {
            for &(a, wa) in &qa {
                for &(c, wc) in &qb {
                    let mut x = [0.0; 3];
                    x[axis] = level;
                    x[ia] = a;
                    x[ib] = c;
                    out.push(Node { x, w: wa * wc, dir: unit(axis, sign * outward) });
                }
            }
        }
    }
}

impl IntegrationDomain {
    pub fn unit_box() -> IntegrationDomain {
        IntegrationDomain::Box(Cuboid::unit())
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegrationDomain::Box(_) => "box",
            IntegrationDomain::BoxBoundary(_) => "box boundary",
            IntegrationDomain::NestedBoxes { .. } => "nested box boundary",
            IntegrationDomain::PlanarRect(_) => "rectangle",
            IntegrationDomain::RectBoundary(_) => "rectangle boundary",
            IntegrationDomain::Circle(_) => "circle",
            IntegrationDomain::Segment { .. } => "segment",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            IntegrationDomain::Box(_) => 3,
            IntegrationDomain::BoxBoundary(_) | IntegrationDomain::NestedBoxes { .. } | IntegrationDomain::PlanarRect(_) => 2,
            _ => 1,
        }
    }

    /// Has no boundary of its own.
    pub fn is_closed(&self) -> bool {
        !matches!(
            self,
            IntegrationDomain::Box(_) | IntegrationDomain::PlanarRect(_) | IntegrationDomain::Segment { .. }
        )
    }

    /// The oriented boundary, when it is again a domain of this catalogue.
    pub fn boundary(&self) -> Option<IntegrationDomain> {
        match *self {
            IntegrationDomain::Box(b) => Some(IntegrationDomain::BoxBoundary(b)),
            IntegrationDomain::PlanarRect(r) => Some(IntegrationDomain::RectBoundary(r)),
            _ => None,
        }
    }

    /// The same domain with reversed orientation.
    pub fn reversed(&self) -> IntegrationDomain {
        match *self {
            IntegrationDomain::PlanarRect(r) => IntegrationDomain::PlanarRect(Rect { flipped: !r.flipped, ..r }),
            IntegrationDomain::RectBoundary(r) => IntegrationDomain::RectBoundary(Rect { flipped: !r.flipped, ..r }),
            IntegrationDomain::Circle(c) => IntegrationDomain::Circle(Circle { flipped: !c.flipped, ..c }),
            IntegrationDomain::Segment { p0, p1 } => IntegrationDomain::Segment { p0: p1, p1: p0 },
            other => other,
        }
    }

    fn nodes(&self, n: usize) -> Vec<Node> {
        let mut out = Vec::new();
        match self {
            IntegrationDomain::Box(b) => {
                let q: Vec<_> = (0..3).map(|i| mapped(n, b.lo[i], b.hi[i])).collect();
                for &(x, wx) in &q[0] {
                    for &(y, wy) in &q[1] {
                        for &(z, wz) in &q[2] {
                            out.push(Node { x: [x, y, z], w: wx * wy * wz, dir: [0.0; 3] });
                        }
                    }
                }
            }
            IntegrationDomain::BoxBoundary(b) => box_faces(b, n, 1.0, &mut out),
            IntegrationDomain::NestedBoxes { outer, inner } => {
                box_faces(outer, n, 1.0, &mut out);
                box_faces(inner, n, -1.0, &mut out);
            }
            IntegrationDomain::PlanarRect(r) => {
                let (_, _, axis) = r.plane.axes();
                for &(a, wa) in &mapped(n, r.lo[0], r.hi[0]) {
                    for &(b, wb) in &mapped(n, r.lo[1], r.hi[1]) {
                        out.push(Node { x: r.point(a, b), w: wa * wb, dir: unit(axis, r.sign()) });
                    }
                }
            }
            IntegrationDomain::RectBoundary(r) => {
                let (ia, ib, _) = r.plane.axes();
                let s = r.sign();
                // counterclockwise about the plane normal: bottom, right, top, left
                let edges = [
                    (ia, r.lo[1], r.lo[0], r.hi[0], 1.0),
                    (ib, r.hi[0], r.lo[1], r.hi[1], 1.0),
                    (ia, r.hi[1], r.lo[0], r.hi[0], -1.0),
                    (ib, r.lo[0], r.lo[1], r.hi[1], -1.0),
                ];
                for (along, fixed, a, b, dirn) in edges {
                    for (p, w) in mapped(n, a, b) {
                        let x = if along == ia { r.point(p, fixed) } else { r.point(fixed, p) };
                        out.push(Node { x, w, dir: unit(along, dirn * s) });
                    }
                }
            }
            IntegrationDomain::Circle(c) => {
                let (ia, ib, _) = c.plane.axes();
                let s = if c.flipped { -1.0 } else { 1.0 };
                for (theta, w) in mapped(n, 0.0, std::f64::consts::TAU) {
                    let (sin, cos) = theta.sin_cos();
                    let mut x = c.center;
                    x[ia] += c.radius * cos;
                    x[ib] += c.radius * sin;
                    let mut dir = [0.0; 3];
                    dir[ia] = -sin * s;
                    dir[ib] = cos * s;
                    out.push(Node { x, w: w * c.radius, dir });
                }
            }
            IntegrationDomain::Segment { p0, p1 } => {
                let d: Vec<f64> = (0..3).map(|i| p1[i] - p0[i]).collect();
                let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dir = [d[0] / len, d[1] / len, d[2] / len];
                for (s, w) in mapped(n, 0.0, 1.0) {
                    let x = [p0[0] + s * d[0], p0[1] + s * d[1], p0[2] + s * d[2]];
                    out.push(Node { x, w: w * len, dir });
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        match self {
            IntegrationDomain::NestedBoxes { outer, inner } if !outer.contains(inner) => {
                Err(NumError::BadDomain("inner box must lie strictly inside the outer box".into()))
            }
            IntegrationDomain::Circle(c) if !(c.radius > 0.0) => Err(NumError::BadDomain("radius must be positive".into())),
            IntegrationDomain::Segment { p0, p1 } if p0 == p1 => Err(NumError::BadDomain("segment has zero length".into())),
            _ => Ok(()),
        }
    }
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| NumError::BadDomain(format!("`{t}` is not a number")))
        })
        .collect()
}

fn fixed<const N: usize>(v: &[f64], what: &str) -> Result<[f64; N]> {
    v.try_into()
        .map_err(|_| NumError::BadDomain(format!("{what} needs {N} numbers, got {}", v.len())))
}

/// `key=v1,v2,...` groups; a token without `=` extends the previous key.
fn keyed(s: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for tok in s.split(',') {
        match tok.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(',');
                    v.push_str(tok.trim());
                }
                None => return Err(NumError::BadDomain(format!("expected key=value, found `{tok}`"))),
            },
        }
    }
    Ok(out)
}

struct Keys(Vec<(String, String)>);

impl Keys {
    fn get(&self, k: &str) -> Option<&str> {
        self.0.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str())
    }

    fn nums<const N: usize>(&self, k: &str, default: Option<[f64; N]>) -> Result<[f64; N]> {
        match (self.get(k), default) {
            (Some(v), _) => fixed(&numbers(v)?, k),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(NumError::BadDomain(format!("missing `{k}=`"))),
        }
    }

    fn flipped(&self) -> bool {
        matches!(self.get("orientation"), Some("cw" | "negative" | "-"))
    }

    fn plane(&self) -> Result<Plane> {
        self.get("plane").unwrap_or("xy").parse()
    }
}

fn cuboid(v: &[f64]) -> Result<Cuboid> {
    let v: [f64; 6] = fixed(v, "box")?;
    Cuboid::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
}

impl FromStr for IntegrationDomain {
    type Err = NumError;

    /// Domain syntax:
    /// `box:lo1,lo2,lo3,hi1,hi2,hi3`, `boxboundary:...` (same numbers),
    /// `nested:<outer six>,<inner six>`,
    /// `rect:plane=xy,offset=0,lo=0,0,hi=1,1[,orientation=cw]`, `rectboundary:...`,
    /// `circle:center=0,0,0,r=1,plane=xy[,orientation=cw]`,
    /// `segment:p0=0,0,0,p1=1,1,0`.
    /// Without arguments, boxes are the unit box, rectangles the unit square
    /// and circles the unit circle about the origin in the xy plane.
    fn from_str(s: &str) -> Result<IntegrationDomain> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let rest = rest.trim();
        let dom = match head.trim() {
            "box" | "boxboundary" => {
                let b = if rest.is_empty() { Cuboid::unit() } else { cuboid(&numbers(rest)?)? };
                if head.trim() == "box" {
                    IntegrationDomain::Box(b)
                } else {
                    IntegrationDomain::BoxBoundary(b)
                }
            }
            "nested" => {
                let v = numbers(rest)?;
                if v.len() != 12 {
                    return Err(NumError::BadDomain("nested needs twelve numbers".into()));
                }
                IntegrationDomain::NestedBoxes { outer: cuboid(&v[..6])?, inner: cuboid(&v[6..])? }
            }
            "rect" | "rectboundary" => {
                let k = Keys(if rest.is_empty() { Vec::new() } else { keyed(rest)? });
                let offset = k.nums::<1>("offset", Some([0.0]))?[0];
                let r = Rect::new(k.plane()?, offset, k.nums("lo", Some([0.0; 2]))?, k.nums("hi", Some([1.0; 2]))?, k.flipped())?;
                if head.trim() == "rect" {
                    IntegrationDomain::PlanarRect(r)
                } else {
                    IntegrationDomain::RectBoundary(r)
                }
            }
            "circle" => {
                let k = Keys(if rest.is_empty() { Vec::new() } else { keyed(rest)? });
                IntegrationDomain::Circle(Circle {
                    center: k.nums("center", Some([0.0; 3]))?,
                    radius: k.nums::<1>("r", Some([1.0]))?[0],
                    plane: k.plane()?,
                    flipped: k.flipped(),
                })
            }
            "segment" => {
                let k = Keys(keyed(rest)?);
                IntegrationDomain::Segment { p0: k.nums("p0", None)?, p1: k.nums("p1", None)? }
            }
            other => return Err(NumError::BadDomain(format!("unknown domain `{other}`"))),
        };
        dom.validate()?;
        Ok(dom)
    }
}

impl fmt::Display for IntegrationDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let orient = |flip: bool| if flip { ",orientation=cw" } else { "" };
        match self {
            IntegrationDomain::Box(b) => write!(f, "box:{},{}", list(&b.lo), list(&b.hi)),
            IntegrationDomain::BoxBoundary(b) => write!(f, "boxboundary:{},{}", list(&b.lo), list(&b.hi)),
            IntegrationDomain::NestedBoxes { outer, inner } => write!(
                f,
                "nested:{},{},{},{}",
                list(&outer.lo),
                list(&outer.hi),
                list(&inner.lo),
                list(&inner.hi)
            ),
            IntegrationDomain::PlanarRect(r) | IntegrationDomain::RectBoundary(r) => {
                let head = if matches!(self, IntegrationDomain::PlanarRect(_)) { "rect" } else { "rectboundary" };
                write!(
                    f,
                    "{head}:plane={},offset={},lo={},hi={}{}",
                    r.plane.name(),
                    r.offset,
                    list(&r.lo),
                    list(&r.hi),
                    orient(r.flipped)
                )
            }
            IntegrationDomain::Circle(c) => write!(
                f,
                "circle:center={},r={},plane={}{}",
                list(&c.center),
                c.radius,
                c.plane.name(),
                orient(c.flipped)
            ),
            IntegrationDomain::Segment { p0, p1 } => write!(f, "segment:p0={},p1={}", list(p0), list(p1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub points_per_axis: usize,
    pub refinement_levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { points_per_axis: 8, refinement_levels: 3 }
    }
}

impl QuadratureSpec {
    pub fn new(points_per_axis: usize, refinement_levels: usize) -> Result<QuadratureSpec> {
        if points_per_axis < 2 {
            return Err(NumError::BadQuadrature("at least two points per axis".into()));
        }
        if refinement_levels < 1 {
            return Err(NumError::BadQuadrature("at least one level".into()));
        }
        Ok(QuadratureSpec { points_per_axis, refinement_levels })
    }

    fn points(&self, level: usize) -> usize {
        self.points_per_axis << level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { relative: 1e-6, absolute: 1e-12 }
    }
}

/// Level-to-level changes must shrink at least this much for spectral convergence.
pub const CONVERGENCE_RATIO: f64 = 10.0;

pub const RELATIVE_FLOOR: f64 = 1e-300;

/// A scalar or vector integrand in (t, x) and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Scalar(Expr),
    Vector(VectorExpr),
}

impl Integrand {
    fn from_field(f: &Field) -> Integrand {
        match f {
            Field::Scalar(e) => Integrand::Scalar(e.clone()),
            Field::Vector(v) => Integrand::Vector(v.clone()),
        }
    }

    fn substitute(&self, sol: &ExactSolution) -> Result<Integrand> {
        Ok(match self {
            Integrand::Scalar(e) => Integrand::Scalar(sol.substitute(e)?),
            Integrand::Vector(v) => Integrand::Vector(VectorExpr::new(
                sol.substitute(&v[0])?,
                sol.substitute(&v[1])?,
                sol.substitute(&v[2])?,
            )),
        })
    }

    fn at(&self, b: &mut Binding, t: f64, node: &Node) -> Result<f64> {
        b.point(t, node.x);
        Ok(match self {
            Integrand::Scalar(e) => b.eval(e)?,
            Integrand::Vector(v) => (0..3).map(|i| Ok(b.eval(&v[i])? * node.dir[i])).sum::<Result<f64>>()?,
        })
    }
}

/// Sum of weight × integrand (vector integrands dotted with the node
/// direction), plus the sum of absolute contributions as a magnitude scale.
fn quadrature(f: &Integrand, dom: &IntegrationDomain, binding: &Binding, t: f64, n: usize) -> Result<(f64, f64)> {
    if matches!(f, Integrand::Scalar(_)) != (dom.dimension() == 3) {
        return Err(NumError::BadDomain(format!(
            "{} integrands need a {}",
            if matches!(f, Integrand::Scalar(_)) { "scalar" } else { "vector" },
            if matches!(f, Integrand::Scalar(_)) { "volume" } else { "surface or curve" }
        )));
    }
    let mut b = binding.clone();
    let mut sum = 0.0;
    let mut scale = 0.0;
    for node in dom.nodes(n) {
        let v = node.w * f.at(&mut b, t, &node)?;
        sum += v;
        scale += v.abs();
    }
    Ok((sum, scale))
}

fn parameter_binding(sol: &ExactSolution) -> Binding {
    let mut b = Binding::new();
    for (k, v) in &sol.parameter_defaults {
        b.param(k, *v);
    }
    b
}

/// Quadrature of an integrand that depends on (t, x) and parameters only.
pub fn integrate_coordinates(f: &Integrand, dom: &IntegrationDomain, binding: &Binding, t: f64, points: usize) -> Result<f64> {
    dom.validate()?;
    quadrature(f, dom, binding, t, points).map(|(s, _)| s)
}

/// Quadrature of a differential function evaluated on the solution, at the
/// finest level of `q`.
pub fn integrate(f: &Field, dom: &IntegrationDomain, sol: &ExactSolution, t: f64, q: &QuadratureSpec) -> Result<f64> {
    let g = Integrand::from_field(f).substitute(sol)?;
    integrate_coordinates(&g, dom, &parameter_binding(sol), t, q.points(q.refinement_levels - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub points_per_axis: usize,
    pub value_c: f64,
    pub value_f: f64,
    pub dcdt: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport {
    pub current_id: String,
    pub kind: CurrentKind,
    pub domain: String,
    pub t: f64,
    /// Conserved quantity; for topological laws, the closed-surface flux or
    /// closed-curve circulation (outer boundary for nested boxes).
    pub value_c: f64,
    /// Net flux through the boundary; the inner boundary flux for nested boxes.
    pub value_f: f64,
    pub dcdt: f64,
    /// Central-difference rate, when computed.
    pub dcdt_difference: Option<f64>,
    pub residual: f64,
    pub relative_residual: f64,
    pub refinement_table: Vec<RefinementRow>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl IntegralReport {
    /// Converged and the residual within tolerance, absolutely or relatively.
    pub fn passes(&self, tol: &Tolerance) -> bool {
        self.converged && (self.residual.abs() <= tol.absolute || self.relative_residual <= tol.relative)
    }
}

/// Convergence of a refinement sequence: the last two levels agree within
/// the absolute floor, or every level-to-level change shrinks by
/// [`CONVERGENCE_RATIO`] until it reaches the floor.
pub fn certify(values: &[f64], floor: f64) -> bool {
    if values.len() < 2 {
        return false;
    }
    let deltas: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let floor = floor.max(64.0 * f64::EPSILON * scale);
    if *deltas.last().expect("two values") <= floor {
        return true;
    }
    deltas.len() >= 2 && deltas.windows(2).all(|w| w[1] <= floor || w[1] * CONVERGENCE_RATIO <= w[0])
}

struct Evaluated {
    c: Integrand,
    dc: Integrand,
    flux: Option<(Integrand, IntegrationDomain)>,
    endpoints: Option<(Expr, [f64; 3], [f64; 3])>,
}

fn dynamical_parts(c: &ConservedCurrent, dom: &IntegrationDomain, sol: &ExactSolution) -> Result<Evaluated> {
    let mismatch = || NumError::DomainMismatch { kind: c.kind, domain: dom.name() };
    let density = c.density.as_ref().ok_or_else(mismatch)?;
    let d_density = match density {
        Field::Scalar(e) => Field::Scalar(total_dt(e)),
        Field::Vector(v) => Field::Vector(v.map(total_dt)),
    };
    let cc = Integrand::from_field(density).substitute(sol)?;
    let dc = Integrand::from_field(&d_density).substitute(sol)?;
    let flux = c.flux.as_ref().map(Integrand::from_field);
    let ok_dim = match c.kind {
        CurrentKind::Volumetric => dom.dimension() == 3,
        CurrentKind::SurfaceFlux => dom.dimension() == 2,
        CurrentKind::Circulatory => dom.dimension() == 1,
        _ => false,
    };
    if !ok_dim {
        return Err(mismatch());
    }
    let mut out = Evaluated { c: cc, dc, flux: None, endpoints: None };
    if dom.is_closed() {
        return Ok(out);
    }
    if c.closed_only {
        return Err(mismatch());
    }
    let flux = flux.ok_or_else(mismatch)?;
    match (dom, flux) {
        (IntegrationDomain::Segment { p0, p1 }, Integrand::Scalar(x)) => {
            out.endpoints = Some((sol.substitute(&x)?, *p0, *p1));
        }
        (_, flux) => {
            let boundary = dom.boundary().ok_or_else(mismatch)?;
            out.flux = Some((flux.substitute(sol)?, boundary));
        }
    }
    Ok(out)
}

fn relative(residual: f64, a: f64, b: f64) -> f64 {
    residual.abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Residual of the global balance dC/dt + F = 0 for a dynamical current on
/// an exact solution, refined per `q`. The rate is the quadrature of the
/// symbolic time derivative of the density; a central difference of C is
/// reported alongside as a cross-check.
pub fn balance_residual(
    c: &ConservedCurrent,
    dom: &IntegrationDomain,
    sol: &ExactSolution,
    t: f64,
    q: &QuadratureSpec,
) -> Result<IntegralReport> {
    dom.validate()?;
    if c.kind.is_spatial() {
        return Err(NumError::DomainMismatch { kind: c.kind, domain: dom.name() });
    }
    let parts = dynamical_parts(c, dom, sol)?;
    let binding = parameter_binding(sol);
    let mut table = Vec::new();
    for level in 0..q.refinement_levels {
        let n = q.points(level);
        let (value_c, _) = quadrature(&parts.c, dom, &binding, t, n)?;
        let (dcdt, _) = quadrature(&parts.dc, dom, &binding, t, n)?;
        let value_f = match (&parts.flux, &parts.endpoints) {
            (Some((x, bdom)), _) => quadrature(x, bdom, &binding, t, n)?.0,
            (None, Some((x, p0, p1))) => {
                let mut b = binding.clone();
                let end = b.point(t, *p1).eval(x)?;
                end - b.point(t, *p0).eval(x)?
            }
            (None, None) => 0.0,
        };
        table.push(RefinementRow { points_per_axis: n, value_c, value_f, dcdt, residual: dcdt + value_f });
    }
    let last = table.last().expect("at least one level").clone();
    let n = last.points_per_axis;
    let h = 1e-5 * t.abs().max(1.0);
    let ahead = quadrature(&parts.c, dom, &binding, t + h, n)?.0;
    let behind = quadrature(&parts.c, dom, &binding, t - h, n)?.0;
    let difference = (ahead - behind) / (2.0 * h);
    let mut warnings = Vec::new();
    let agree = (difference - last.dcdt).abs() <= 1e-6 * difference.abs().max(last.dcdt.abs()) + 1e-8 * last.value_c.abs().max(1.0);
    if !agree {
        warnings.push(format!("finite-difference rate {difference:e} disagrees with symbolic rate {:e}", last.dcdt));
    }
    let residuals: Vec<f64> = table.iter().map(|r| r.residual).collect();
    let converged = q.refinement_levels >= 2 && certify(&residuals, 1e-12);
    if !converged {
        warnings.push("refinement did not certify convergence".into());
    }
    Ok(IntegralReport {
        current_id: c.id.clone(),
        kind: c.kind,
        domain: dom.to_string(),
        t,
        value_c: last.value_c,
        value_f: last.value_f,
        dcdt: last.dcdt,
        dcdt_difference: Some(difference),
        residual: last.residual,
        relative_residual: relative(last.residual, last.dcdt, last.value_f),
        refinement_table: table,
        converged,
        warnings,
    })
}

/// Closed-surface flux (spatial divergence laws) or closed-curve circulation
/// (spatial curl laws) of the flux on an exact solution; endpoint difference
/// of the potential for gradient laws on a segment. For nested boxes the
/// residual is the difference between the outer and inner fluxes. The
/// relative residual is taken against the sum of absolute contributions.
pub fn topological_residual(
    c: &ConservedCurrent,
    dom: &IntegrationDomain,
    sol: &ExactSolution,
    t: f64,
    q: &QuadratureSpec,
) -> Result<IntegralReport> {
    dom.validate()?;
    let mismatch = || NumError::DomainMismatch { kind: c.kind, domain: dom.name() };
    let flux = c.flux.as_ref().ok_or_else(mismatch)?;
    let ok = match (c.kind, dom) {
        (CurrentKind::SpatialDiv, IntegrationDomain::BoxBoundary(_) | IntegrationDomain::NestedBoxes { .. }) => true,
        (CurrentKind::SpatialCurl, IntegrationDomain::Circle(_) | IntegrationDomain::RectBoundary(_)) => true,
        (CurrentKind::SpatialGrad, IntegrationDomain::Segment { .. }) => true,
        _ => false,
    };
    if !ok {
        return Err(mismatch());
    }
    let f = Integrand::from_field(flux).substitute(sol)?;
    let binding = parameter_binding(sol);
    let mut table = Vec::new();
    let mut scale = 0.0;
    for level in 0..q.refinement_levels {
        let n = q.points(level);
        let (value_c, value_f) = match (dom, &f) {
            (IntegrationDomain::NestedBoxes { outer, inner }, _) => {
                let (o, so) = quadrature(&f, &IntegrationDomain::BoxBoundary(*outer), &binding, t, n)?;
                let (i, si) = quadrature(&f, &IntegrationDomain::BoxBoundary(*inner), &binding, t, n)?;
                scale = so + si;
                (o, i)
            }
            (IntegrationDomain::Segment { p0, p1 }, Integrand::Scalar(x)) => {
                let mut b = binding.clone();
                let end = b.point(t, *p1).eval(x)?;
                let start = b.point(t, *p0).eval(x)?;
                scale = end.abs() + start.abs();
                (end - start, 0.0)
            }
            _ => {
                let (v, s) = quadrature(&f, dom, &binding, t, n)?;
                scale = s;
                (v, 0.0)
            }
        };
        table.push(RefinementRow { points_per_axis: n, value_c, value_f, dcdt: 0.0, residual: value_c - value_f });
    }
    let last = table.last().expect("at least one level").clone();
    let residuals: Vec<f64> = table.iter().map(|r| r.residual).collect();
    let converged = q.refinement_levels >= 2 && certify(&residuals, 1e-12);
    let mut warnings = Vec::new();
    if !converged {
        warnings.push("refinement did not certify convergence".into());
    }
    Ok(IntegralReport {
        current_id: c.id.clone(),
        kind: c.kind,
        domain: dom.to_string(),
        t,
        value_c: last.value_c,
        value_f: last.value_f,
        dcdt: 0.0,
        dcdt_difference: None,
        residual: last.residual,
        relative_residual: relative(last.residual, scale, 0.0),
        refinement_table: table,
        converged,
        warnings,
    })
}

/// Level-by-level values of `eval(points_per_axis)` with doubling point
/// counts, and a warning when they do not certify convergence.
pub fn refine_and_certify(
    eval: impl Fn(usize) -> Result<f64>,
    q: &QuadratureSpec,
    floor: f64,
) -> Result<(Vec<(usize, f64)>, Option<ConvergenceWarning>)> {
    if q.refinement_levels < 2 {
        return Err(NumError::BadQuadrature("refinement needs at least two levels".into()));
    }
    let mut table = Vec::new();
    for level in 0..q.refinement_levels {
        let n = q.points(level);
        table.push((n, eval(n)?));
    }
    let values: Vec<f64> = table.iter().map(|r| r.1).collect();
    let warning = (!certify(&values, floor)).then_some(ConvergenceWarning { values });
    Ok((table, warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Error)]
#[error("quadrature did not converge: {values:?}")]
pub struct ConvergenceWarning {
    pub values: Vec<f64>,
}

/// Balance or topological residual according to the current's kind.
pub fn residual(c: &ConservedCurrent, dom: &IntegrationDomain, sol: &ExactSolution, t: f64, q: &QuadratureSpec) -> Result<IntegralReport> {
    if c.kind.is_spatial() {
        topological_residual(c, dom, sol, t, q)
    } else {
        balance_residual(c, dom, sol, t, q)
    }
}

#[cfg(test)]
mod tests;
