//! Finite Laurent expansions in the normalized variable `W = 2 pi i w`
//! with [`FourierSeries`] coefficients.
//!
//! All factors of `2 pi i` are absorbed into `W` and the normalized
//! derivative, so jet coefficients stay in the exact coefficient field.

use std::collections::BTreeMap;
use std::fmt;



use crate::error::{Error, Result};
use crate::monomial::Var;
use crate::scalar::{qexp, CycloOrder, QExp, Rat, Scalar};
use crate::series::FourierSeries;

#[derive(Clone, Debug)]
pub struct WJet {
    order: CycloOrder,
    terms: BTreeMap<i64, FourierSeries>,
    /// Exclusive bound: `W`-exponents `>= j_order` are unknown.
    j_order: i64,
    /// Common truncation of the coefficient series.
    q_order: QExp,
}

impl WJet {
    pub fn zero(order: CycloOrder, j_order: i64, q_order: QExp) -> Self {
        WJet {
            order,
            terms: BTreeMap::new(),
            j_order,
            q_order,
        }
    }

    pub fn from_coeffs(coeffs: Vec<(i64, FourierSeries)>, j_order: i64) -> Self {
        let order = coeffs
            .first()
            .map(|(_, s)| s.cyclo_order())
            .expect("nonempty jet");
        let q_order = coeffs
            .iter()
            .map(|(_, s)| s.q_order())
            .min()
            .unwrap();
        let mut jet = WJet::zero(order, j_order, q_order);
        for (k, s) in coeffs {
            jet.add_term(k, s);
        }
        jet
    }

    pub fn cyclo_order(&self) -> CycloOrder {
        self.order
    }

    pub fn j_order(&self) -> i64 {
        self.j_order
    }

    pub fn q_order(&self) -> QExp {
        self.q_order
    }

    pub fn coeff(&self, k: i64) -> Option<&FourierSeries> {
        self.terms.get(&k)
    }

    /// Coefficient of `W^k` as a series, zero when absent.
    pub fn coeff_or_zero(&self, k: i64) -> FourierSeries {
        self.terms
            .get(&k)
            .cloned()
            .unwrap_or_else(|| FourierSeries::zero(self.order, self.q_order))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &FourierSeries)> {
        self.terms.iter()
    }

    pub fn lowest(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn add_term(&mut self, k: i64, s: FourierSeries) {
        if k >= self.j_order || s.is_zero() {
            return;
        }
        let s = s.truncate(self.q_order);
        match self.terms.remove(&k) {
            None => {
                if !s.is_zero() {
                    self.terms.insert(k, s);
                }
            }
            Some(prev) => {
                let sum = prev.add(&s);
                if !sum.is_zero() {
                    self.terms.insert(k, sum);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = WJet::zero(
            self.order,
            self.j_order.min(other.j_order),
            self.q_order.min(other.q_order),
        );
        for (k, s) in &self.terms {
            out.add_term(*k, s.clone());
        }
        for (k, s) in &other.terms {
            out.add_term(*k, s.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        WJet {
            order: self.order,
            terms: self.terms.iter().map(|(k, s)| (*k, s.neg())).collect(),
            j_order: self.j_order,
            q_order: self.q_order,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        // valuation-aware: known below min(Ja + vb, Jb + va)
        let va = self.lowest().unwrap_or(self.j_order);
        let vb = other.lowest().unwrap_or(other.j_order);
        let j_order = (self.j_order + vb).min(other.j_order + va);
        let mut out = WJet::zero(self.order, j_order, self.q_order.min(other.q_order));
        for (ka, sa) in &self.terms {
            for (kb, sb) in &other.terms {
                if ka + kb >= j_order {
                    break;
                }
                out.add_term(ka + kb, sa.mul(sb));
            }
        }
        out
    }

    pub fn scale_series(&self, c: &FourierSeries) -> Self {
        let mut out = WJet::zero(self.order, self.j_order, self.q_order.min(c.q_order()));
        for (k, s) in &self.terms {
            out.add_term(*k, s.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        let mut out = WJet::zero(self.order, self.j_order, self.q_order);
        for (k, s) in &self.terms {
            out.add_term(*k, s.scale_rat(r));
        }
        out
    }

    /// Multiply by the exact monomial `W^k`.
    pub fn shift_w(&self, k: i64) -> Self {
        WJet {
            order: self.order,
            terms: self.terms.iter().map(|(j, s)| (*j + k, s.clone())).collect(),
            j_order: self.j_order + k,
            q_order: self.q_order,
        }
    }

    pub fn truncate_j(&self, j_order: i64) -> Self {
        let mut out = self.clone();
        out.j_order = out.j_order.min(j_order);
        out.terms = out.terms.into_iter().filter(|(k, _)| *k < j_order).collect();
        out
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let vb = other.lowest().ok_or(Error::DivisionByZeroSeries)?;
        let b0 = other.coeff(vb).unwrap().clone();
        let va = self.lowest().unwrap_or(self.j_order);
        let j_out = (self.j_order - vb).min(other.j_order - 2 * vb + va);
        let mut rem = self.clone();
        let mut out = WJet::zero(self.order, j_out, self.q_order.min(other.q_order));
        while let Some(e) = rem.lowest() {
            let oe = e - vb;
            if oe >= j_out {
                break;
            }
            let coef = rem.coeff(e).unwrap().div(&b0)?;
            out.add_term(oe, coef.clone());
            let mut sub = WJet::zero(self.order, rem.j_order, rem.q_order);
            for (kb, sb) in &other.terms {
                sub.add_term(oe + kb, sb.mul(&coef));
            }
            rem = rem.sub(&sub);
        }
        Ok(out)
    }

    /// `log(1 + u)` for a jet `1 + u` with `u` supported on `W >= 1`.
    pub fn log(&self) -> Result<Self> {
        if self.lowest().map_or(true, |v| v < 0) {
            return Err(Error::JetLogPole);
        }
        let c0 = self.coeff_or_zero(0);
        let one = FourierSeries::one(self.order, self.q_order);
        if c0.first_difference(&one, self.q_order).is_some() {
            return Err(Error::JetLogPole);
        }
        let mut u = self.clone();
        u.terms.remove(&0);
        // log(1+u) = sum_{j>=1} (-1)^{j-1} u^j / j
        let mut acc = WJet::zero(self.order, self.j_order, self.q_order);
        let mut upow = u.clone();
        let mut j = 1i64;
        while upow.lowest().is_some() && j < self.j_order.max(1) + 1 {
            let sign = if j % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&upow.scale_rat(&crate::scalar::rat_frac(sign, j)));
            upow = upow.mul(&u);
            j += 1;
        }
        acc.j_order = self.j_order;
        Ok(acc)
    }

    /// `exp(u)` for a jet supported on `W >= 1`.
    pub fn exp(&self) -> Result<Self> {
        if self.lowest().map_or(false, |v| v < 1) {
            return Err(Error::JetExpPole);
        }
        let mut acc = WJet::zero(self.order, self.j_order, self.q_order);
        acc.add_term(0, FourierSeries::one(self.order, self.q_order));
        let mut upow = self.clone();
        let mut fact = Rat::from_integer(1.into());
        let mut j = 1i64;
        while upow.lowest().is_some() && j <= self.j_order.max(1) {
            fact = fact * Rat::from_integer(j.into());
            acc = acc.add(&upow.scale_rat(&(Rat::from_integer(1.into()) / fact.clone())));
            upow = upow.mul(self);
            j += 1;
        }
        acc.j_order = self.j_order;
        Ok(acc)
    }

    /// `D_w`: jet derivative, `W^k -> k W^{k-1}`.
    pub fn derive_w(&self) -> Self {
        let mut out = WJet::zero(self.order, self.j_order - 1, self.q_order);
        for (k, s) in &self.terms {
            if *k == 0 {
                continue;
            }
            out.add_term(k - 1, s.scale_rat(&crate::scalar::rat_i64(*k)));
        }
        out
    }

    /// Coefficient-wise `D_tau` and `D_z`.
    pub fn derive_tau(&self) -> Self {
        self.map(|s| s.derive_tau())
    }

    pub fn derive_var(&self, v: Var) -> Self {
        self.map(|s| s.derive(v))
    }

    pub fn map(&self, f: impl Fn(&FourierSeries) -> FourierSeries) -> Self {
        let mut out = WJet::zero(self.order, self.j_order, self.q_order);
        for (k, s) in &self.terms {
            out.add_term(*k, f(s));
        }
        out
    }

    /// Jet of `e^{c W}` truncated at the ambient order.
    pub fn exp_linear(order: CycloOrder, c: &Rat, j_order: i64, q_order: QExp) -> Self {
        let mut out = WJet::zero(order, j_order, q_order);
        let mut coeff = Rat::from_integer(1.into());
        for k in 0..j_order.max(0) {
            out.add_term(
                k,
                FourierSeries::from_scalar(Scalar::from_rat(order, coeff.clone()), q_order),
            );
            coeff = coeff * c / Rat::from_integer((k + 1).into());
        }
        out
    }

    /// Re-expansion of `f(w + z)` as a jet in `W`: the `z`-dependence is
    /// carried by the series coefficients, `sum_j D_z^j(f) / j! W^j`.
    pub fn shift_argument(f: &FourierSeries, j_order: i64) -> Self {
        let order = f.cyclo_order();
        let mut out = WJet::zero(order, j_order, f.q_order());
        let mut cur = f.clone();
        let mut fact = Rat::from_integer(1.into());
        for j in 0..j_order.max(0) {
            if j > 0 {
                cur = cur.derive(Var::Zeta);
                fact = fact * Rat::from_integer(j.into());
            }
            out.add_term(j, cur.scale_rat(&(Rat::from_integer(1.into()) / fact.clone())));
        }
        out
    }

    pub fn eq_to(&self, other: &Self, j_upto: i64, q_upto: QExp) -> bool {
        self.first_difference(other, j_upto, q_upto).is_none()
    }

    pub fn first_difference(
        &self,
        other: &Self,
        j_upto: i64,
        q_upto: QExp,
    ) -> Option<(i64, QExp, String, String)> {
        let j_upto = j_upto.min(self.j_order).min(other.j_order);
        let mut ks: Vec<i64> = self
            .terms
            .keys()
            .chain(other.terms.keys())
            .copied()
            .filter(|k| *k < j_upto)
            .collect();
        ks.sort();
        ks.dedup();
        for k in ks {
            let a = self.coeff_or_zero(k);
            let b = other.coeff_or_zero(k);
            if let Some((e, x, y)) = a.first_difference(&b, q_upto) {
                return Some((k, e, x, y));
            }
        }
        None
    }
}

impl fmt::Display for WJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in &self.terms {
            writeln!(f, "W^{k} * [")?;
            write!(f, "{s}")?;
            writeln!(f, "]")?;
        }
        writeln!(f, "+ O(W^{})", self.j_order)
    }
}

pub fn qexp_int(n: i64) -> QExp {
    qexp(n, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o() -> CycloOrder {
        CycloOrder(4)
    }

    #[test]
    fn exp_log_inverse_pair() {
        // exp(log(1 + W)) = 1 + W to jet order
        let q = qexp(4, 1);
        let mut jet = WJet::zero(o(), 6, q);
        jet.add_term(0, FourierSeries::one(o(), q));
        jet.add_term(1, FourierSeries::one(o(), q));
        let lg = jet.log().unwrap();
        let back = lg.exp().unwrap();
        assert!(back.eq_to(&jet, 6, q));
        // and the other composition on an admissible jet
        let relog = back.log().unwrap();
        assert!(relog.eq_to(&lg, 6, q));
    }

    #[test]
    fn jet_division_shifts_order() {
        let q = qexp(4, 1);
        let mut w = WJet::zero(o(), 6, q);
        w.add_term(1, FourierSeries::one(o(), q));
        let mut a = WJet::zero(o(), 6, q);
        a.add_term(0, FourierSeries::one(o(), q));
        let inv = a.div(&w).unwrap();
        assert_eq!(inv.lowest(), Some(-1));
    }

    #[test]
    fn log_rejects_pole() {
        let q = qexp(4, 1);
        let mut w = WJet::zero(o(), 6, q);
        w.add_term(-1, FourierSeries::one(o(), q));
        assert!(matches!(w.log(), Err(Error::JetLogPole)));
    }
}
