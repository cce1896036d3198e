//! Exponential variables and monomials with exact rational exponents.
//!
//! `q` itself is excluded from the alphabet: it is the series variable and
//! its exponents live on the [`crate::series::FourierSeries`] grading.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Zero;

use crate::scalar::{qexp_string, QExp};

/// A variable from the declared exponential alphabet.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    /// `zeta = e^(2 pi i z)`, the elliptic variable.
    Zeta,
    /// `q_w = e^(2 pi i w)`.
    QW,
    /// `q_z` as a second formal exponential (bivariate expansions).
    QZ,
    /// `q_y`.
    QY,
    /// `q_{x_j}` for auxiliary insertion points.
    QX(u8),
}

impl Var {
    pub fn name(self) -> String {
        match self {
            Var::Zeta => "zeta".into(),
            Var::QW => "qw".into(),
            Var::QZ => "qz".into(),
            Var::QY => "qy".into(),
            Var::QX(j) => format!("qx{j}"),
        }
    }
}

/// Product of variables raised to reduced rational exponents.
///
/// Stored sorted by variable with no zero exponents; the empty monomial is 1.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ExpMonomial {
    exps: Vec<(Var, QExp)>,
}

impl ExpMonomial {
    pub fn one() -> Self {
        ExpMonomial::default()
    }

    pub fn var(v: Var, e: QExp) -> Self {
        if e.is_zero() {
            return Self::one();
        }
        ExpMonomial { exps: vec![(v, e)] }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponent(&self, v: Var) -> QExp {
        self.exps
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or_else(QExp::zero)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.exps.iter().map(|(v, _)| *v)
    }

    pub fn exps(&self) -> &[(Var, QExp)] {
        &self.exps
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            match self.exps[i].0.cmp(&other.exps[j].0) {
                Ordering::Less => {
                    out.push(self.exps[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.exps[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.exps[i].1 + other.exps[j].1;
                    if !e.is_zero() {
                        out.push((self.exps[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.exps[i..]);
        out.extend_from_slice(&other.exps[j..]);
        ExpMonomial { exps: out }
    }

    pub fn inv(&self) -> Self {
        ExpMonomial {
            exps: self.exps.iter().map(|(v, e)| (*v, -e)).collect(),
        }
    }

    pub fn pow(&self, e: QExp) -> Self {
        if e.is_zero() {
            return Self::one();
        }
        ExpMonomial {
            exps: self.exps.iter().map(|(v, x)| (*v, x * e)).collect(),
        }
    }

    /// Replace `v` by a monomial (exponents scale by the old exponent).
    pub fn substitute_var(&self, v: Var, image: &ExpMonomial) -> (QExp, ExpMonomial) {
        let e = self.exponent(v);
        if e.is_zero() {
            return (QExp::zero(), self.clone());
        }
        let mut rest = ExpMonomial {
            exps: self
                .exps
                .iter()
                .filter(|(w, _)| *w != v)
                .cloned()
                .collect(),
        };
        rest = rest.mul(&image.pow(e));
        (e, rest)
    }

    /// Componentwise minimum of exponents, the monomial gcd.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for (v, e) in &self.exps {
            let f = other.exponent(*v);
            let m = (*e).min(f);
            if !m.is_zero() {
                out.push((*v, m));
            }
        }
        for (v, f) in &other.exps {
            if self.exponent(*v).is_zero() && *f < QExp::zero() {
                out.push((*v, *f));
            }
        }
        out.sort_by_key(|(v, _)| *v);
        ExpMonomial { exps: out }
    }
}

/// Total order used for canonical forms: compare exponents variable by
/// variable in `Var` order, missing exponents count as zero.
impl PartialOrd for ExpMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExpMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.exps.get(i), other.exps.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some((v, e)), None) => {
                    return cmp_exp(*v, *e, QExp::zero()).then(Ordering::Greater);
                }
                (None, Some((w, f))) => {
                    return cmp_exp(*w, QExp::zero(), *f).then(Ordering::Less);
                }
                (Some((v, e)), Some((w, f))) => match v.cmp(w) {
                    Ordering::Less => match e.cmp(&QExp::zero()) {
                        Ordering::Equal => i += 1,
                        c => return c,
                    },
                    Ordering::Greater => match QExp::zero().cmp(f) {
                        Ordering::Equal => j += 1,
                        c => return c,
                    },
                    Ordering::Equal => match e.cmp(f) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        c => return c,
                    },
                },
            }
        }
    }
}

fn cmp_exp(_v: Var, e: QExp, f: QExp) -> Ordering {
    e.cmp(&f)
}

impl fmt::Display for ExpMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|(v, e)| {
                if e == &QExp::new(1, 1) {
                    v.name()
                } else {
                    format!("{}^{}", v.name(), qexp_string(e))
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qexp;

    #[test]
    fn product_adds_exponents() {
        let a = ExpMonomial::var(Var::Zeta, qexp(1, 2));
        let b = ExpMonomial::var(Var::Zeta, qexp(-3, 2)).mul(&ExpMonomial::var(Var::QW, qexp(2, 1)));
        let p = a.mul(&b);
        assert_eq!(p.exponent(Var::Zeta), qexp(-1, 1));
        assert_eq!(p.exponent(Var::QW), qexp(2, 1));
        assert!(a.mul(&a.inv()).is_one());
    }

    #[test]
    fn order_is_total_and_sane() {
        let one = ExpMonomial::one();
        let z = ExpMonomial::var(Var::Zeta, qexp(1, 1));
        let zinv = ExpMonomial::var(Var::Zeta, qexp(-1, 1));
        assert!(zinv < one);
        assert!(one < z);
        assert!(zinv < z);
    }
}
