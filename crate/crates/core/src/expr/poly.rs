use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use smallvec::SmallVec;

use super::atom::AtomId;

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Product of atom powers, sorted by atom id, no zero exponents.
/// Negative exponents are allowed: every atom is taken to be nonvanishing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mono(pub SmallVec<[(AtomId, i32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(a: AtomId, e: i32) -> Mono {
        let mut m = Mono::one();
        if e != 0 {
            m.0.push((a, e));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, a: AtomId) -> i32 {
        match self.0.binary_search_by(|&(b, _)| b.cmp(&a)) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    pub fn inv(&self) -> Mono {
        Mono(self.0.iter().map(|&(a, e)| (a, -e)).collect())
    }

    pub fn pow(&self, k: i32) -> Mono {
        if k == 0 {
            return Mono::one();
        }
        Mono(self.0.iter().map(|&(a, e)| (a, e * k)).collect())
    }

    /// Drop one power of `a`, returning the old exponent.
    pub fn lower(&self, a: AtomId) -> Option<(i32, Mono)> {
        let e = self.exponent(a);
        if e == 0 {
            return None;
        }
        Some((e, self.mul(&Mono::var(a, -1))))
    }

    pub fn without(&self, a: AtomId) -> Mono {
        Mono(self.0.iter().copied().filter(|&(b, _)| b != a).collect())
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.iter().map(|&(a, _)| a)
    }

    pub fn degree(&self) -> i32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    /// Componentwise minimum exponent, missing atoms counting as zero.
    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = SmallVec::new();
        let mut keys: Vec<AtomId> = self.atoms().chain(other.atoms()).collect();
        keys.sort();
        keys.dedup();
        for a in keys {
            let e = self.exponent(a).min(other.exponent(a));
            if e != 0 {
                out.push((a, e));
            }
        }
        Mono(out)
    }

    fn divides(&self, other: &Mono) -> bool {
        self.0.iter().all(|&(a, e)| other.exponent(a) >= e)
    }

    /// Lexicographic term order on exponent vectors, smallest atom id most significant.
    fn lex_cmp(&self, other: &Mono) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(&(_, e)), None) => return e.cmp(&0),
                (None, Some(&(_, e))) => return 0.cmp(&e),
                (Some(&(x, ex)), Some(&(y, ey))) => match x.cmp(&y) {
                    Ordering::Less => return ex.cmp(&0),
                    Ordering::Greater => return 0.cmp(&ey),
                    Ordering::Equal => {
                        if ex != ey {
                            return ex.cmp(&ey);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Sparse Laurent polynomial with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly(pub BTreeMap<Mono, Q>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(BTreeMap::new())
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.0.insert(Mono::one(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn term(c: Q, m: Mono) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.0.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.0.len() == 1 && self.0.get(&Mono::one()).is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => self.0.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    pub fn mul_term(&self, k: &Q, mono: &Mono) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.mul(mono), c * k)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn monomial_gcd(&self) -> Mono {
        let mut it = self.0.keys();
        let Some(first) = it.next() else {
            return Mono::one();
        };
        it.fold(first.clone(), |g, m| g.gcd(m))
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.keys().flat_map(|m| m.atoms())
    }

    fn leading(&self) -> Option<(&Mono, &Q)> {
        self.0.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Exact quotient `self / d` for polynomials with nonnegative exponents.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = {
            let (m, c) = d.leading()?;
            (m.clone(), c.clone())
        };
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let mut guard = 0usize;
        while let Some((m, c)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            if !lm.divides(&m) {
                return None;
            }
            let tm = m.mul(&lm.inv());
            let tc = c / &lc;
            rem = rem.sub(&d.mul_term(&tc, &tm));
            quot.add_term(tm, tc);
            guard += 1;
            if guard > 100_000 {
                return None;
            }
        }
        Some(quot)
    }

    /// Leading coefficient in storage order; used to fix the scale of denominators.
    pub fn first_coeff(&self) -> Option<&Q> {
        self.0.values().next()
    }

    pub fn has_negative_exponent(&self) -> bool {
        self.0.keys().any(|m| m.0.iter().any(|&(_, e)| e < 0))
    }
}
