use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use smallvec::SmallVec;

use super::func::FuncId;
use super::value::Expr;

pub type Sym = Arc<str>;

/// One of the four Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    T,
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::T, Axis::X1, Axis::X2, Axis::X3];
    pub const SPATIAL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn slot(self) -> usize {
        self as usize
    }

    pub fn from_slot(slot: usize) -> Axis {
        Axis::ALL[slot]
    }

    /// Spatial axis for a 1-based component index.
    pub fn spatial(i: usize) -> Option<Axis> {
        match i {
            1 => Some(Axis::X1),
            2 => Some(Axis::X2),
            3 => Some(Axis::X3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "t",
            Axis::X1 => "x1",
            Axis::X2 => "x2",
            Axis::X3 => "x3",
        }
    }

    pub fn from_name(s: &str) -> Option<Axis> {
        match s {
            "t" => Some(Axis::T),
            "x1" => Some(Axis::X1),
            "x2" => Some(Axis::X2),
            "x3" => Some(Axis::X3),
            _ => None,
        }
    }
}

/// Derivative counts along (t, x1, x2, x3). Mixed partials commute by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(pub [u8; 4]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; 4]);

    pub fn of(axis: Axis) -> MultiIndex {
        MultiIndex::ZERO.bump(axis)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|&k| k as u32).sum()
    }

    pub fn spatial_order(&self) -> u32 {
        self.0[1..].iter().map(|&k| k as u32).sum()
    }

    pub fn t_order(&self) -> u8 {
        self.0[0]
    }

    pub fn count(&self, axis: Axis) -> u8 {
        self.0[axis.slot()]
    }

    pub fn bump(mut self, axis: Axis) -> MultiIndex {
        self.0[axis.slot()] += 1;
        self
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = *self;
        for k in 0..4 {
            out.0[k] += other.0[k];
        }
        out
    }

    /// `self - other` when `other` divides `self`.
    pub fn minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = *self;
        for k in 0..4 {
            out.0[k] = self.0[k].checked_sub(other.0[k])?;
        }
        Some(out)
    }

    pub fn divides(&self, other: &MultiIndex) -> bool {
        (0..4).all(|k| self.0[k] <= other.0[k])
    }

    /// Axes listed with multiplicity, t first.
    pub fn axes(&self) -> impl Iterator<Item = Axis> + '_ {
        Axis::ALL
            .into_iter()
            .flat_map(move |a| std::iter::repeat_n(a, self.count(a) as usize))
    }

    pub fn suffix(&self) -> String {
        self.axes().map(Axis::name).collect()
    }

    /// Inverse of [`MultiIndex::suffix`]: `tx1x1` is one t and two x1 derivatives.
    pub fn parse_suffix(s: &str) -> Option<MultiIndex> {
        let mut idx = MultiIndex::ZERO;
        let mut rest = s;
        while !rest.is_empty() {
            let (axis, len) = if rest.starts_with('t') {
                (Axis::T, 1)
            } else {
                let a = Axis::from_name(rest.get(..2)?)?;
                (a, 2)
            };
            if idx.count(axis) == u8::MAX {
                return None;
            }
            idx = idx.bump(axis);
            rest = &rest[len..];
        }
        Some(idx)
    }
}

/// A dependent (or source) variable together with a derivative multi-index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub dep: Sym,
    pub idx: MultiIndex,
}

impl JetVar {
    pub fn new(dep: &str, idx: MultiIndex) -> JetVar {
        JetVar {
            dep: Arc::from(dep),
            idx,
        }
    }

    pub fn base(dep: &str) -> JetVar {
        JetVar::new(dep, MultiIndex::ZERO)
    }

    pub fn order(&self) -> u32 {
        self.idx.order()
    }

    pub fn derive(&self, axis: Axis) -> JetVar {
        JetVar {
            dep: self.dep.clone(),
            idx: self.idx.bump(axis),
        }
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.idx == MultiIndex::ZERO {
            write!(f, "{}", self.dep)
        } else {
            write!(f, "{}_{}", self.dep, self.idx.suffix())
        }
    }
}

/// Application of a registered function. `deriv[k]` counts partials taken in
/// argument `k`; only generic functions carry nonzero counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncApp {
    pub func: FuncId,
    pub deriv: SmallVec<[u8; 2]>,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Coord(Axis),
    Param(Sym),
    /// Jet coordinate of a dependent variable.
    Jet(JetVar),
    /// Derivative of a prescribed source function of (t, x); never a dependent.
    Source(JetVar),
    Func(FuncApp),
    /// Argument placeholder inside a partial-derivative template.
    Slot(u8),
}

impl Atom {
    pub fn as_jet(&self) -> Option<&JetVar> {
        match self {
            Atom::Jet(j) => Some(j),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

struct Interner {
    atoms: Vec<Arc<Atom>>,
    ids: HashMap<Arc<Atom>, AtomId>,
}

fn interner() -> &'static RwLock<Interner> {
    static CELL: OnceLock<RwLock<Interner>> = OnceLock::new();
    CELL.get_or_init(|| {
        RwLock::new(Interner {
            atoms: Vec::new(),
            ids: HashMap::new(),
        })
    })
}

pub fn intern(a: Atom) -> AtomId {
    if let Some(&id) = interner().read().unwrap().ids.get(&a) {
        return id;
    }
    let mut w = interner().write().unwrap();
    if let Some(&id) = w.ids.get(&a) {
        return id;
    }
    let id = AtomId(w.atoms.len() as u32);
    let a = Arc::new(a);
    w.atoms.push(a.clone());
    w.ids.insert(a, id);
    id
}

pub fn atom(id: AtomId) -> Arc<Atom> {
    interner().read().unwrap().atoms[id.0 as usize].clone()
}

impl AtomId {
    pub fn get(self) -> Arc<Atom> {
        atom(self)
    }
}
