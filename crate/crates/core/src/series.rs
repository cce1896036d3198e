//! Truncated Puiseux series in `q` with [`CoefFn`] coefficients.
//!
//! Exponents are exact rationals on a common denominator lattice; terms at
//! or beyond the truncation order `q_order` are absent and unknown. Ring
//! operations never report terms at or beyond the minimum of the operands'
//! truncation orders; division adjusts by the divisor's lowest exponent.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::coeffn::{CoefFn, Poly, SubstRule};
use crate::error::{Error, Result};
use crate::monomial::{ExpMonomial, Var};
use crate::scalar::{qexp_string, CycloOrder, QExp, Rat, Scalar};

#[derive(Clone, Debug)]
pub struct FourierSeries {
    order: CycloOrder,
    terms: BTreeMap<QExp, CoefFn>,
    q_order: QExp,
}

impl FourierSeries {
    pub fn zero(order: CycloOrder, q_order: QExp) -> Self {
        FourierSeries {
            order,
            terms: BTreeMap::new(),
            q_order,
        }
    }

    pub fn constant(c: CoefFn, q_order: QExp) -> Self {
        let order = c.order();
        let mut s = Self::zero(order, q_order);
        s.add_term(QExp::zero(), c);
        s
    }

    pub fn one(order: CycloOrder, q_order: QExp) -> Self {
        Self::constant(CoefFn::one(order), q_order)
    }

    pub fn from_scalar(c: Scalar, q_order: QExp) -> Self {
        Self::constant(CoefFn::from_scalar(c), q_order)
    }

    /// Single term `c * q^e`.
    pub fn monomial(e: QExp, c: CoefFn, q_order: QExp) -> Self {
        let order = c.order();
        let mut s = Self::zero(order, q_order);
        s.add_term(e, c);
        s
    }

    pub fn cyclo_order(&self) -> CycloOrder {
        self.order
    }

    pub fn q_order(&self) -> QExp {
        self.q_order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&QExp, &CoefFn)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lowest(&self) -> Option<(QExp, &CoefFn)> {
        self.terms.iter().next().map(|(e, c)| (*e, c))
    }

    pub fn coef(&self, e: QExp) -> Option<&CoefFn> {
        self.terms.get(&e)
    }

    pub fn add_term(&mut self, e: QExp, c: CoefFn) {
        if e >= self.q_order || c.is_zero() {
            return;
        }
        match self.terms.remove(&e) {
            None => {
                self.terms.insert(e, c);
            }
            Some(prev) => {
                let s = prev.add(&c);
                if !s.is_zero() {
                    self.terms.insert(e, s);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let q_order = self.q_order.min(other.q_order);
        let mut out = Self::zero(self.order, q_order);
        for (e, c) in &self.terms {
            out.add_term(*e, c.clone());
        }
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        FourierSeries {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.neg()))
                .collect(),
            q_order: self.q_order,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let q_order = self.q_order.min(other.q_order);
        let mut out = Self::zero(self.order, q_order);
        for (ea, ca) in &self.terms {
            if *ea >= q_order {
                break;
            }
            for (eb, cb) in &other.terms {
                let e = *ea + *eb;
                if e >= q_order {
                    break;
                }
                out.add_term(e, ca.mul(cb));
            }
        }
        out
    }

    /// Multiply by an exactly-known coefficient; truncation is preserved.
    pub fn mul_coef(&self, c: &CoefFn) -> Self {
        let mut out = Self::zero(self.order, self.q_order);
        for (e, x) in &self.terms {
            out.add_term(*e, x.mul(c));
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = Self::zero(self.order, self.q_order);
        for (e, x) in &self.terms {
            out.add_term(*e, x.scale(c));
        }
        out
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        self.scale(&Scalar::from_rat(self.order, r.clone()))
    }

    /// Multiply by the exact monomial `q^s`; truncation shifts with it.
    pub fn shift_q(&self, s: QExp) -> Self {
        FourierSeries {
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (*e + s, c.clone())).collect(),
            q_order: self.q_order + s,
        }
    }

    pub fn truncate(&self, q_order: QExp) -> Self {
        let mut out = self.clone();
        out.q_order = out.q_order.min(q_order);
        out.terms = out
            .terms
            .into_iter()
            .filter(|(e, _)| *e < q_order)
            .collect();
        out
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let (vb, b0) = other.lowest().ok_or(Error::DivisionByZeroSeries)?;
        let b0_inv = b0.inv()?;
        let va = self.lowest().map(|(e, _)| e).unwrap_or(self.q_order);
        let q_out = (self.q_order - vb).min(other.q_order - vb - vb + va);
        if q_out <= va - vb && self.is_zero() {
            // zero divided by unit: still fine, empty series
        } else if q_out <= va - vb {
            return Err(Error::EmptyTruncation(qexp_string(&q_out)));
        }
        let mut rem = self.clone();
        let mut out = Self::zero(self.order, q_out);
        while let Some((e, c)) = rem.lowest() {
            let oe = e - vb;
            if oe >= q_out {
                break;
            }
            let coef = c.mul(&b0_inv);
            out.add_term(oe, coef.clone());
            // rem -= coef * q^{oe} * other
            let mut sub = Self::zero(self.order, rem.q_order());
            for (eb, cb) in &other.terms {
                sub.add_term(oe + *eb, cb.mul(&coef));
            }
            rem = rem.sub(&sub);
        }
        Ok(out)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self::one(self.order, self.q_order));
        }
        let base = if e < 0 {
            Self::one(self.order, self.q_order).div(self)?
        } else {
            self.clone()
        };
        let mut n = e.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut cur = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => cur.clone(),
                    Some(a) => a.mul(&cur),
                });
            }
            n >>= 1;
            if n > 0 {
                cur = cur.mul(&cur);
            }
        }
        Ok(acc.unwrap())
    }

    /// `D_tau`: multiply each term by its `q`-exponent.
    pub fn derive_tau(&self) -> Self {
        let mut out = Self::zero(self.order, self.q_order);
        for (e, c) in &self.terms {
            if e.is_zero() {
                continue;
            }
            out.add_term(*e, c.scale(&Scalar::from_frac(self.order, *e.numer(), *e.denom())));
        }
        out
    }

    /// `D_v` on an exponential variable, through the quotient rule.
    pub fn derive(&self, v: Var) -> Self {
        let mut out = Self::zero(self.order, self.q_order);
        for (e, c) in &self.terms {
            out.add_term(*e, c.derive(v));
        }
        out
    }

    /// Substitution that moves no `q`-powers (`rule.qshift == 0`):
    /// exponent remaps, inversions, variable swaps. Truncation preserved.
    pub fn substitute_static(&self, rule: &SubstRule) -> Result<Self> {
        assert!(
            rule.qshift.is_zero(),
            "q-moving substitution requires an explicit output window"
        );
        let mut out = Self::zero(self.order, self.q_order);
        for (e, c) in &self.terms {
            let frags = c.substitute(rule, self.q_order - *e)?;
            for (off, cc) in frags.parts {
                debug_assert!(off.is_zero());
                out.add_term(*e + off, cc);
            }
        }
        Ok(out)
    }

    /// Substitution with a `q`-shift. The caller supplies the certified
    /// output order `window`: images of terms at or beyond the input
    /// truncation must provably land at or beyond it.
    pub fn substitute_shift(&self, rule: &SubstRule, window: QExp) -> Result<Self> {
        let mut out = Self::zero(self.order, window);
        for (e, c) in &self.terms {
            let frags = c.substitute(rule, window - *e)?;
            for (off, cc) in frags.parts {
                out.add_term(*e + off, cc);
            }
        }
        Ok(out)
    }

    pub fn swap_vars(&self, a: Var, b: Var) -> Self {
        FourierSeries {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.swap_vars(a, b)))
                .collect(),
            q_order: self.q_order,
        }
    }

    /// Exact coefficient of `mono * q^e`; 0 if absent, error past truncation
    /// or on a non-polynomial coefficient.
    pub fn extract(&self, e: QExp, mono: &ExpMonomial) -> Result<Scalar> {
        if e >= self.q_order {
            return Err(Error::BeyondTruncation {
                requested: qexp_string(&e),
                order: qexp_string(&self.q_order),
            });
        }
        match self.terms.get(&e) {
            None => Ok(Scalar::zero(self.order)),
            Some(c) => c.extract_monomial(mono),
        }
    }

    pub fn map_coefs(&self, f: impl Fn(&CoefFn) -> CoefFn) -> Self {
        let mut out = Self::zero(self.order, self.q_order);
        for (e, c) in &self.terms {
            out.add_term(*e, f(c));
        }
        out
    }

    /// Term-by-term equality below `upto` (clamped to both truncations).
    pub fn eq_to(&self, other: &Self, upto: QExp) -> bool {
        self.first_difference(other, upto).is_none()
    }

    /// First differing coefficient below `upto`, as a witness.
    pub fn first_difference(&self, other: &Self, upto: QExp) -> Option<(QExp, String, String)> {
        let upto = upto.min(self.q_order).min(other.q_order);
        let mut exps: Vec<QExp> = self
            .terms
            .keys()
            .chain(other.terms.keys())
            .copied()
            .filter(|e| *e < upto)
            .collect();
        exps.sort();
        exps.dedup();
        for e in exps {
            let zero = CoefFn::zero(self.order);
            let a = self.terms.get(&e).unwrap_or(&zero);
            let b = other.terms.get(&e).unwrap_or(&zero);
            if !a.eq(b) {
                return Some((e, a.to_string(), b.to_string()));
            }
        }
        None
    }

    /// Common denominator of all stored `q`-exponents and the order.
    pub fn qden(&self) -> i64 {
        let mut d: i64 = *self.q_order.denom();
        for e in self.terms.keys() {
            d = d.lcm(e.denom());
        }
        d
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = Vec::new();
        for c in self.terms.values() {
            for (m, _) in c.num().terms() {
                vs.extend(m.vars());
            }
            for (f, _) in c.den_factors() {
                vs.extend(f.mono.vars());
            }
        }
        vs.sort();
        vs.dedup();
        vs
    }

    /// Canonical JSON form; byte-identical for canonically equal values.
    pub fn to_json(&self) -> Value {
        let d = self.qden();
        let poly_json = |p: &Poly| -> Value {
            let mut items = Vec::new();
            for (m, c) in p.terms() {
                let coords: Vec<Value> = c
                    .coords()
                    .iter()
                    .map(|r| Value::String(crate::scalar::rat_string(r)))
                    .collect();
                let mut mono = Map::new();
                for (v, e) in m.exps() {
                    mono.insert(v.name(), Value::String(qexp_string(e)));
                }
                items.push(json!([coords, Value::Object(mono)]));
            }
            Value::Array(items)
        };
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            terms.push(json!({
                "q": qexp_string(e),
                "coef": {
                    "num": poly_json(c.num()),
                    "den": poly_json(&c.den_expanded()),
                },
            }));
        }
        json!({
            "qden": d,
            "q_order": qexp_string(&self.q_order),
            "vars": self.vars().iter().map(|v| v.name()).collect::<Vec<_>>(),
            "terms": terms,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("series serialization")
    }
}

impl fmt::Display for FourierSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            writeln!(f, "0 + O(q^{})", qexp_string(&self.q_order))?;
            return Ok(());
        }
        for (e, c) in &self.terms {
            if e.is_zero() {
                writeln!(f, "  {c}")?;
            } else if e.is_positive() && e.denom() == &1 && e.numer() == &1 {
                writeln!(f, "  q * ({c})")?;
            } else {
                writeln!(f, "  q^{} * ({c})", qexp_string(e))?;
            }
        }
        writeln!(f, "  + O(q^{})", qexp_string(&self.q_order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qexp;

    fn o() -> CycloOrder {
        CycloOrder(4)
    }

    fn q_poly(pairs: &[(i64, i64)], q_order: i64) -> FourierSeries {
        // integer-coefficient q-polynomial helper
        let mut s = FourierSeries::zero(o(), qexp(q_order, 1));
        for (e, c) in pairs {
            s.add_term(qexp(*e, 1), CoefFn::from_scalar(Scalar::from_i64(o(), *c)));
        }
        s
    }

    #[test]
    fn difference_of_squares() {
        // (1 + q)(1 - q) at Q=3 -> 1 - q^2
        let a = q_poly(&[(0, 1), (1, 1)], 3);
        let b = q_poly(&[(0, 1), (1, -1)], 3);
        let p = a.mul(&b);
        assert!(p.eq_to(&q_poly(&[(0, 1), (2, -1)], 3), qexp(3, 1)));
        assert_eq!(p.q_order(), qexp(3, 1));
    }

    #[test]
    fn unit_monomial_cancellation() {
        // q^{1/24}(1 - q) / q^{1/24} = 1 - q
        let pref = FourierSeries::monomial(qexp(1, 24), CoefFn::one(o()), qexp(3, 1));
        let a = q_poly(&[(0, 1), (1, -1)], 3).mul(&pref).shift_q(qexp(0, 1));
        let out = a.div(&pref).unwrap();
        assert!(out.eq_to(&q_poly(&[(0, 1), (1, -1)], 3), qexp(2, 1)));
    }

    #[test]
    fn division_by_zero_series() {
        let z = FourierSeries::zero(o(), qexp(5, 1));
        let a = q_poly(&[(0, 1)], 5);
        assert!(matches!(a.div(&z), Err(Error::DivisionByZeroSeries)));
    }

    #[test]
    fn division_roundtrip() {
        let a = q_poly(&[(0, 2), (1, -3), (4, 7)], 9);
        let b = q_poly(&[(0, 1), (1, 5), (2, 1)], 9);
        let q = a.div(&b).unwrap();
        let back = q.mul(&b);
        assert!(back.eq_to(&a, q.q_order()));
    }

    #[test]
    fn derive_tau_monomial_rule() {
        // D_tau(q^{1/8}) = (1/8) q^{1/8}
        let s = FourierSeries::monomial(qexp(1, 8), CoefFn::one(o()), qexp(2, 1));
        let d = s.derive_tau();
        let c = d.coef(qexp(1, 8)).unwrap();
        assert!(c.eq(&CoefFn::from_scalar(Scalar::from_frac(o(), 1, 8))));
    }

    #[test]
    fn json_is_deterministic() {
        let s = q_poly(&[(0, 1), (2, -1)], 4);
        assert_eq!(s.to_json_string(), s.to_json_string());
        assert!(s.to_json_string().contains("\"qden\":1"));
    }
}
