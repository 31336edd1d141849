use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::atom::{atom, Atom, AtomId};
use super::func::func_def;
use super::poly::{Mono, Poly, Q};
use super::value::Expr;

pub(crate) fn atom_text(id: AtomId) -> String {
    match &*atom(id) {
        Atom::Coord(a) => a.name().to_string(),
        Atom::Param(p) => p.to_string(),
        Atom::Jet(j) | Atom::Source(j) => j.to_string(),
        Atom::Slot(k) => format!("#{k}"),
        Atom::Func(app) => {
            let def = func_def(app.func);
            let mut s = def.name.to_string();
            for (k, &n) in app.deriv.iter().enumerate() {
                for _ in 0..n {
                    let _ = write!(s, "@{}", k + 1);
                }
            }
            s.push('(');
            for (i, a) in app.args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{a}");
            }
            s.push(')');
            s
        }
    }
}

fn factors(m: &Mono, sign: i32) -> Vec<String> {
    let mut out: Vec<String> = m
        .0
        .iter()
        .filter(|&&(_, e)| e.signum() == sign)
        .map(|&(a, e)| {
            let e = e.abs();
            if e == 1 {
                atom_text(a)
            } else {
                format!("{}^{}", atom_text(a), e)
            }
        })
        .collect();
    out.sort();
    out
}

fn coeff_text(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn term_text(m: &Mono, c: &Q) -> String {
    let c = c.abs();
    let pos = factors(m, 1);
    let neg = factors(m, -1);
    let mut s = String::new();
    if pos.is_empty() {
        s.push_str(&coeff_text(&c));
    } else {
        if !c.is_one() {
            s.push_str(&coeff_text(&c));
            s.push('*');
        }
        s.push_str(&pos.join("*"));
    }
    match neg.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&neg[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&neg.join("*"));
            s.push(')');
        }
    }
    s
}

pub(crate) fn poly_text(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(String, bool)> = p
        .0
        .iter()
        .map(|(m, c)| (term_text(m, c), c.is_negative()))
        .collect();
    // constants last, otherwise alphabetical on the rendered term
    terms.sort_by(|a, b| {
        let ka = a.0.starts_with(|ch: char| ch.is_ascii_digit());
        let kb = b.0.starts_with(|ch: char| ch.is_ascii_digit());
        ka.cmp(&kb).then_with(|| a.0.cmp(&b.0))
    });
    let mut s = String::new();
    for (i, (t, neg)) in terms.iter().enumerate() {
        match (i, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(t);
    }
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_laurent() {
            f.write_str(&poly_text(self.num()))
        } else {
            write!(f, "({})/({})", poly_text(self.num()), poly_text(self.den()))
        }
    }
}
