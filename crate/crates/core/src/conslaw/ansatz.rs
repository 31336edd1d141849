//! Bounded polynomial ansatz for witnesses that the homotopy formulas miss.
//!
//! Unknown witness components are linear combinations of candidate
//! monomials in parametric spatial jets. Matching coefficients of the reduced
//! defining identities gives a linear system over Q, solved exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::expr::{atom, intern, Atom, AtomId, Axis, Expr, JetVar, Mono, MultiIndex, Poly, Q};
use crate::sysdef::PdeSystem;

/// Largest number of unknown coefficients attempted in one solve.
const MAX_UNKNOWNS: usize = 6000;

pub(super) struct Problem<'a> {
    pub sys: &'a PdeSystem,
    /// Number of scalar witness components.
    pub components: usize,
    /// Reduced contribution of basis element `b` placed in component `k`,
    /// one expression per condition.
    pub image: &'a dyn Fn(usize, &Expr) -> Vec<Expr>,
    /// Reduced right sides, one per condition.
    pub target: Vec<Expr>,
}

/// Tries candidates obtained by stripping one derivative from the terms of
/// `seeds` first, then generic monomials of increasing jet order and degree.
/// Returns the witness components of the first consistent system.
pub(super) fn search(p: &Problem, seeds: &[Expr], order_bound: u32) -> Option<Vec<Expr>> {
    let family = family(p.sys, seeds);
    let stripped = stripped(seeds, &family);
    if !stripped.is_empty() && stripped.len() * p.components <= MAX_UNKNOWNS {
        if let Some(sol) = solve_for(p, &stripped) {
            return Some(sol);
        }
    }
    let deps = dependents(seeds);
    if deps.is_empty() {
        return None;
    }
    let max_degree = seeds
        .iter()
        .flat_map(|e| e.num().0.keys().map(jet_degree).collect::<Vec<_>>())
        .max()
        .unwrap_or(1)
        .max(1);
    for order in 0..=order_bound {
        let jets = parametric_jets(p.sys, &deps, order);
        for degree in 1..=max_degree {
            let basis = basis(&jets, degree, &family);
            if basis.len() * p.components > MAX_UNKNOWNS {
                break;
            }
            if let Some(sol) = solve_for(p, &basis) {
                return Some(sol);
            }
        }
    }
    None
}

fn is_jet(a: AtomId) -> bool {
    matches!(&*atom(a), Atom::Jet(_))
}

fn jet_degree(m: &Mono) -> u32 {
    m.0.iter().filter(|&&(a, k)| is_jet(a) && k > 0).map(|&(_, k)| k as u32).sum()
}

fn dependents(seeds: &[Expr]) -> BTreeSet<String> {
    seeds
        .iter()
        .flat_map(|e| e.atoms_deep())
        .filter_map(|id| atom(id).as_jet().map(|j| j.dep.to_string()))
        .collect()
}

/// Splits a monomial into its weight (non-jet atoms and negative jet
/// powers) and its positive jet part.
fn split(m: &Mono) -> (Mono, Mono) {
    let (mut w, mut j) = (Mono::one(), Mono::one());
    for &(a, k) in &m.0 {
        if is_jet(a) && k > 0 {
            j = j.mul(&Mono::var(a, k));
        } else {
            w = w.mul(&Mono::var(a, k));
        }
    }
    (w, j)
}

/// Candidate weights: those of the seed terms, plus every system function
/// applied to argument lists seen in the seeds, times the negative powers
/// seen in the seeds.
fn family(sys: &PdeSystem, seeds: &[Expr]) -> Vec<Mono> {
    let mut weights: BTreeSet<Mono> = BTreeSet::new();
    let mut negatives: BTreeSet<Mono> = BTreeSet::new();
    let mut funcs: BTreeSet<AtomId> = BTreeSet::new();
    let mut arglists: BTreeSet<Vec<Expr>> = BTreeSet::new();
    weights.insert(Mono::one());
    negatives.insert(Mono::one());
    for e in seeds {
        for m in e.num().0.keys() {
            let (w, _) = split(m);
            let neg = Mono(w.0.iter().filter(|&&(a, k)| is_jet(a) && k < 0).copied().collect());
            negatives.insert(neg);
            weights.insert(w);
        }
        for id in e.atoms_deep() {
            if let Atom::Func(app) = &*atom(id) {
                if app.args.iter().any(|x| x.atoms_deep().into_iter().any(is_jet)) {
                    funcs.insert(id);
                    arglists.insert(app.args.to_vec());
                }
            }
        }
    }
    for (_, f) in &sys.functions {
        for args in &arglists {
            let Ok(e) = Expr::apply(*f, args.clone()) else { continue };
            if e.num().len() == 1 && e.is_laurent() {
                let (m, _) = e.num().0.iter().next().unwrap();
                funcs.extend(m.atoms());
            }
        }
    }
    for &f in &funcs {
        for n in &negatives {
            weights.insert(n.mul(&Mono::var(f, 1)));
        }
    }
    weights.extend(negatives);
    weights.into_iter().collect()
}

/// Monomials with one spatial derivative removed from one jet factor. When
/// the stripped jet becomes undifferentiated and the term carries a weight,
/// the whole family of weights is tried in its place.
fn stripped(seeds: &[Expr], family: &[Mono]) -> Vec<Expr> {
    let mut out: BTreeSet<Mono> = BTreeSet::new();
    for e in seeds {
        for m in e.num().0.keys() {
            let (w, jets) = split(m);
            for &(a, _) in &jets.0 {
                let j = atom(a).as_jet().cloned().expect("jet factor");
                let rest = jets.mul(&Mono::var(a, -1));
                for axis in Axis::SPATIAL {
                    if j.idx.count(axis) == 0 {
                        continue;
                    }
                    let mut lower = j.clone();
                    lower.idx.0[axis.slot()] -= 1;
                    let down = rest.mul(&Mono::var(intern(Atom::Jet(lower.clone())), 1));
                    out.insert(w.mul(&down));
                    if !w.is_one() && lower.idx == MultiIndex::ZERO {
                        for f in family {
                            out.insert(f.mul(&rest));
                            out.insert(f.mul(&down));
                        }
                    }
                }
            }
        }
    }
    out.remove(&Mono::one());
    out.into_iter()
        .map(|m| Expr::from_poly(Poly::term(Q::one(), m)))
        .collect()
}

fn parametric_jets(sys: &PdeSystem, deps: &BTreeSet<String>, order: u32) -> Vec<AtomId> {
    let mut out = Vec::new();
    for dep in deps {
        for a in 0..=order {
            for b in 0..=order - a {
                for c in 0..=order - a - b {
                    let idx = MultiIndex([0, a as u8, b as u8, c as u8]);
                    let j = JetVar::new(dep, idx);
                    if !sys.is_principal(&j, false) {
                        out.push(intern(Atom::Jet(j)));
                    }
                }
            }
        }
    }
    out
}

fn basis(jets: &[AtomId], degree: u32, weights: &[Mono]) -> Vec<Expr> {
    let mut monos: Vec<Mono> = vec![Mono::one()];
    let mut layer: Vec<(Mono, usize)> = vec![(Mono::one(), 0)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for (m, start) in &layer {
            for (k, &j) in jets.iter().enumerate().skip(*start) {
                next.push((m.mul(&Mono::var(j, 1)), k));
            }
        }
        monos.extend(next.iter().map(|(m, _)| m.clone()));
        layer = next;
    }
    let mut out: BTreeSet<Mono> = BTreeSet::new();
    for w in weights {
        for m in &monos {
            let p = w.mul(m);
            if !p.is_one() {
                out.insert(p);
            }
        }
    }
    out.into_iter()
        .map(|m| Expr::from_poly(Poly::term(Q::one(), m)))
        .collect()
}

fn solve_for(p: &Problem, basis: &[Expr]) -> Option<Vec<Expr>> {
    let conds = p.target.len();
    let mut columns: Vec<Vec<Expr>> = Vec::new();
    for k in 0..p.components {
        for b in basis {
            columns.push((p.image)(k, b));
        }
    }
    let mut rows: Vec<(BTreeMap<usize, Q>, Q)> = Vec::new();
    for c in 0..conds {
        let mut exprs: Vec<&Expr> = columns.iter().map(|col| &col[c]).collect();
        exprs.push(&p.target[c]);
        let scaled = clear_denominators(&exprs)?;
        let (target, cols) = scaled.split_last()?;
        let mut by_mono: HashMap<Mono, (BTreeMap<usize, Q>, Q)> = HashMap::new();
        for (v, e) in cols.iter().enumerate() {
            for (m, q) in &e.num().0 {
                by_mono.entry(m.clone()).or_default().0.insert(v, q.clone());
            }
        }
        for (m, q) in &target.num().0 {
            by_mono.entry(m.clone()).or_default().1 = q.clone();
        }
        rows.extend(by_mono.into_values());
    }
    let sol = solve_linear(rows, columns.len())?;
    let n = basis.len();
    Some(
        (0..p.components)
            .map(|k| {
                basis
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !sol[k * n + i].is_zero())
                    .map(|(i, b)| b.scale(&sol[k * n + i]))
                    .sum()
            })
            .collect(),
    )
}

/// Multiplies every expression by the product of the distinct non-monomial
/// denominators so that all become Laurent polynomials.
fn clear_denominators(exprs: &[&Expr]) -> Option<Vec<Expr>> {
    let mut dens: Vec<Poly> = Vec::new();
    for e in exprs {
        if !e.is_laurent() && !dens.contains(e.den()) {
            dens.push(e.den().clone());
        }
    }
    let factor = dens
        .into_iter()
        .fold(Expr::one(), |acc, d| acc * Expr::from_poly(d));
    let out: Vec<Expr> = exprs.iter().map(|e| *e * &factor).collect();
    out.iter().all(Expr::is_laurent).then_some(out)
}

/// Exact elimination over Q; free variables are set to zero. `None` when
/// the system is inconsistent.
pub(super) fn solve_linear(rows: Vec<(BTreeMap<usize, Q>, Q)>, vars: usize) -> Option<Vec<Q>> {
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, Q>, Q)> = BTreeMap::new();
    for (mut row, mut rhs) in rows {
        let mut from = 0;
        loop {
            let next = row
                .range(from..)
                .map(|(&c, _)| c)
                .find(|c| pivots.contains_key(c));
            let Some(c) = next else { break };
            let k = row.remove(&c).unwrap();
            let (prow, prhs) = &pivots[&c];
            for (&j, q) in prow {
                if j == c {
                    continue;
                }
                let v = row.entry(j).or_insert_with(Q::zero);
                *v -= &k * q;
                if v.is_zero() {
                    row.remove(&j);
                }
            }
            rhs -= &k * prhs;
            from = c + 1;
        }
        let Some((&lead, lc)) = row.iter().next() else {
            if rhs.is_zero() {
                continue;
            }
            return None;
        };
        let inv = Q::one() / lc;
        let row: BTreeMap<usize, Q> = row.into_iter().map(|(j, q)| (j, q * &inv)).collect();
        pivots.insert(lead, (row, rhs * inv));
    }
    let mut x = vec![Q::zero(); vars];
    for (&c, (row, rhs)) in pivots.iter().rev() {
        let mut v = rhs.clone();
        for (&j, q) in row {
            if j != c {
                v -= q * &x[j];
            }
        }
        x[c] = v;
    }
    Some(x)
}
