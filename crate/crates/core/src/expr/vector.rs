use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use super::atom::AtomId;
use super::poly::Q;
use super::value::Expr;
use super::Result;

/// Three components along x1, x2, x3.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct VectorExpr(pub [Expr; 3]);

impl VectorExpr {
    pub fn new(a: Expr, b: Expr, c: Expr) -> VectorExpr {
        VectorExpr([a, b, c])
    }

    pub fn zero() -> VectorExpr {
        VectorExpr::default()
    }

    pub fn from_fn(f: impl FnMut(usize) -> Expr) -> VectorExpr {
        VectorExpr(std::array::from_fn(f))
    }

    /// Unit vector along 0-based component `k`.
    pub fn unit(k: usize) -> VectorExpr {
        VectorExpr::from_fn(|i| if i == k { Expr::one() } else { Expr::zero() })
    }

    /// Components `<name>1, <name>2, <name>3` of a vector dependent.
    pub fn dep(name: &str) -> VectorExpr {
        VectorExpr::from_fn(|i| Expr::dep(&format!("{name}{}", i + 1)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Expr::is_zero)
    }

    pub fn dot(&self, o: &VectorExpr) -> Expr {
        &self.0[0] * &o.0[0] + &self.0[1] * &o.0[1] + &self.0[2] * &o.0[2]
    }

    pub fn cross(&self, o: &VectorExpr) -> VectorExpr {
        let (a, b) = (&self.0, &o.0);
        VectorExpr::new(
            &a[1] * &b[2] - &a[2] * &b[1],
            &a[2] * &b[0] - &a[0] * &b[2],
            &a[0] * &b[1] - &a[1] * &b[0],
        )
    }

    pub fn scale(&self, k: &Expr) -> VectorExpr {
        VectorExpr::from_fn(|i| &self.0[i] * k)
    }

    pub fn scale_q(&self, k: &Q) -> VectorExpr {
        VectorExpr::from_fn(|i| self.0[i].scale(k))
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorExpr {
        VectorExpr::from_fn(|i| f(&self.0[i]))
    }

    pub fn try_map(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<VectorExpr> {
        Ok(VectorExpr::new(f(&self.0[0])?, f(&self.0[1])?, f(&self.0[2])?))
    }

    pub fn substitute(&self, rules: &HashMap<AtomId, Expr>) -> Result<VectorExpr> {
        self.try_map(|e| e.substitute(rules))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Expr> {
        self.0.iter()
    }
}

impl Index<usize> for VectorExpr {
    type Output = Expr;
    fn index(&self, i: usize) -> &Expr {
        &self.0[i]
    }
}

impl fmt::Display for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.0[0], self.0[1], self.0[2])
    }
}

impl fmt::Debug for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Add for &VectorExpr {
    type Output = VectorExpr;
    fn add(self, o: &VectorExpr) -> VectorExpr {
        VectorExpr::from_fn(|i| &self.0[i] + &o.0[i])
    }
}

impl Sub for &VectorExpr {
    type Output = VectorExpr;
    fn sub(self, o: &VectorExpr) -> VectorExpr {
        VectorExpr::from_fn(|i| &self.0[i] - &o.0[i])
    }
}

impl Add for VectorExpr {
    type Output = VectorExpr;
    fn add(self, o: VectorExpr) -> VectorExpr {
        &self + &o
    }
}

impl Sub for VectorExpr {
    type Output = VectorExpr;
    fn sub(self, o: VectorExpr) -> VectorExpr {
        &self - &o
    }
}

impl Neg for &VectorExpr {
    type Output = VectorExpr;
    fn neg(self) -> VectorExpr {
        VectorExpr::from_fn(|i| -&self.0[i])
    }
}

impl Neg for VectorExpr {
    type Output = VectorExpr;
    fn neg(self) -> VectorExpr {
        -&self
    }
}

impl Mul<&Expr> for &VectorExpr {
    type Output = VectorExpr;
    fn mul(self, k: &Expr) -> VectorExpr {
        self.scale(k)
    }
}

impl serde::Serialize for VectorExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}
