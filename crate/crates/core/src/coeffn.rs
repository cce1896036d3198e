//! Rational coefficient functions in the exponential variables.
//!
//! A [`CoefFn`] is `num / prod_i (1 - s_i * m_i)^{e_i}` where `num` is a
//! finite scalar-weighted sum of [`ExpMonomial`]s, each `s_i` is a scalar
//! (a root of unity in practice) and each `m_i` a monomial kept `> 1` in the
//! canonical monomial order. This denominator shape covers every `q^0`
//! coefficient produced by the catalog; anything else is a construction
//! error, not a silent fallback.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::monomial::{ExpMonomial, Var};
use crate::scalar::{CycloOrder, QExp, Rat, Scalar};

/// Finite scalar-weighted sum of monomials, sorted, no zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    order: CycloOrder,
    terms: Vec<(ExpMonomial, Scalar)>,
}

impl Poly {
    pub fn zero(order: CycloOrder) -> Self {
        Poly {
            order,
            terms: Vec::new(),
        }
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::term(ExpMonomial::one(), c)
    }

    pub fn one(order: CycloOrder) -> Self {
        Poly::constant(Scalar::one(order))
    }

    pub fn term(m: ExpMonomial, c: Scalar) -> Self {
        let order = c.order();
        if c.is_zero() {
            return Poly::zero(order);
        }
        Poly {
            order,
            terms: vec![(m, c)],
        }
    }

    pub fn from_terms(order: CycloOrder, terms: Vec<(ExpMonomial, Scalar)>) -> Self {
        let mut map: BTreeMap<ExpMonomial, Scalar> = BTreeMap::new();
        for (m, c) in terms {
            merge_term(&mut map, m, c, order);
        }
        Poly {
            order,
            terms: map.into_iter().collect(),
        }
    }

    pub fn order(&self) -> CycloOrder {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(ExpMonomial, Scalar)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<ExpMonomial, Scalar> = self.terms.iter().cloned().collect();
        for (m, c) in &other.terms {
            merge_term(&mut map, m.clone(), c.clone(), self.order);
        }
        Poly {
            order: self.order,
            terms: map.into_iter().collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Poly {
            order: self.order,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<ExpMonomial, Scalar> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                merge_term(&mut map, ma.mul(mb), ca.mul(cb), self.order);
            }
        }
        Poly {
            order: self.order,
            terms: map.into_iter().collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Poly::zero(self.order);
        }
        Poly {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(m, x)| (m.clone(), x.mul(c)))
                .collect(),
        }
    }

    pub fn mul_mono(&self, m: &ExpMonomial) -> Self {
        Poly {
            order: self.order,
            terms: self.terms.iter().map(|(x, c)| (x.mul(m), c.clone())).collect(),
        }
    }

    /// `D_v`: multiply each term by its `v`-exponent.
    pub fn derive(&self, v: Var) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let e = m.exponent(v);
                if e.is_zero() {
                    None
                } else {
                    Some((m.clone(), c.mul_rat(&qexp_to_rat(e))))
                }
            })
            .collect();
        Poly {
            order: self.order,
            terms,
        }
    }

    pub fn swap_vars(&self, a: Var, b: Var) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut exps: Vec<(Var, QExp)> = m
                    .exps()
                    .iter()
                    .map(|(v, e)| {
                        let w = if *v == a {
                            b
                        } else if *v == b {
                            a
                        } else {
                            *v
                        };
                        (w, *e)
                    })
                    .collect();
                exps.sort_by_key(|(v, _)| *v);
                let mut mono = ExpMonomial::one();
                for (v, e) in exps {
                    mono = mono.mul(&ExpMonomial::var(v, e));
                }
                (mono, c.clone())
            })
            .collect::<Vec<_>>();
        Poly::from_terms(self.order, terms)
    }

    /// Componentwise-minimum monomial over all terms.
    pub fn content(&self) -> ExpMonomial {
        let mut it = self.terms.iter();
        let mut acc = match it.next() {
            Some((m, _)) => m.clone(),
            None => return ExpMonomial::one(),
        };
        for (m, _) in it {
            acc = acc.gcd(m);
        }
        acc
    }
}

pub fn qexp_to_rat(e: QExp) -> Rat {
    crate::scalar::rat_frac(*e.numer(), *e.denom())
}

fn merge_term(map: &mut BTreeMap<ExpMonomial, Scalar>, m: ExpMonomial, c: Scalar, _o: CycloOrder) {
    if c.is_zero() {
        return;
    }
    match map.remove(&m) {
        None => {
            map.insert(m, c);
        }
        Some(prev) => {
            let s = prev.add(&c);
            if !s.is_zero() {
                map.insert(m, s);
            }
        }
    }
}

/// Denominator factor `(1 - scale * mono)` with `mono > 1` canonically.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DenFactor {
    pub scale: Scalar,
    pub mono: ExpMonomial,
}

impl DenFactor {
    fn key(&self) -> (ExpMonomial, String) {
        (self.mono.clone(), self.scale.canonical_string())
    }

    fn as_poly(&self, order: CycloOrder) -> Poly {
        Poly::from_terms(
            order,
            vec![
                (ExpMonomial::one(), Scalar::one(order)),
                (self.mono.clone(), self.scale.neg()),
            ],
        )
    }
}

/// `num / prod (1 - s_i m_i)^{e_i}`, canonical and gcd-reduced.
#[derive(Clone, Debug)]
pub struct CoefFn {
    num: Poly,
    den: Vec<(DenFactor, u32)>,
}

impl CoefFn {
    pub fn zero(order: CycloOrder) -> Self {
        CoefFn {
            num: Poly::zero(order),
            den: Vec::new(),
        }
    }

    pub fn one(order: CycloOrder) -> Self {
        CoefFn {
            num: Poly::one(order),
            den: Vec::new(),
        }
    }

    pub fn from_scalar(c: Scalar) -> Self {
        CoefFn {
            num: Poly::constant(c),
            den: Vec::new(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        CoefFn {
            num: p,
            den: Vec::new(),
        }
    }

    pub fn term(m: ExpMonomial, c: Scalar) -> Self {
        CoefFn {
            num: Poly::term(m, c),
            den: Vec::new(),
        }
    }

    /// `num / (1 - mono)` with plain scale 1, normalized.
    pub fn over_binomial(num: Poly, mono: ExpMonomial) -> Self {
        let order = num.order();
        let mut out = CoefFn {
            num,
            den: Vec::new(),
        };
        out.push_den_factor(
            DenFactor {
                scale: Scalar::one(order),
                mono,
            },
            1,
        );
        out.reduce();
        out
    }

    pub fn order(&self) -> CycloOrder {
        self.num.order()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den_factors(&self) -> &[(DenFactor, u32)] {
        &self.den
    }

    pub fn den_expanded(&self) -> Poly {
        let order = self.order();
        let mut acc = Poly::one(order);
        for (f, e) in &self.den {
            let fp = f.as_poly(order);
            for _ in 0..*e {
                acc = acc.mul(&fp);
            }
        }
        acc
    }

    /// Canonical push of `(1 - s*m)^e`: flips `m < 1` into `-s*m*(1 - m^{-1}/s)`
    /// territory so stored monomials stay `> 1`. A unit factor `(1 - 1)` is
    /// rejected by the caller before reaching here.
    fn push_den_factor(&mut self, f: DenFactor, e: u32) {
        if e == 0 {
            return;
        }
        let order = self.order();
        let one_mono = ExpMonomial::one();
        let (f, extra_num) = if f.mono < one_mono {
            // 1 - s*m = (-s*m) * (1 - s^{-1} m^{-1})
            let sinv = f.scale.inv();
            let flipped = DenFactor {
                scale: sinv.clone(),
                mono: f.mono.inv(),
            };
            // divide num by (-s*m)^e: multiply by (-s^{-1})^e m^{-e}
            let minus_sinv = sinv.neg();
            let mut c = Scalar::one(order);
            for _ in 0..e {
                c = c.mul(&minus_sinv);
            }
            let shift = f.mono.inv().pow(QExp::new(e as i64, 1));
            (flipped, Some((shift, c)))
        } else {
            (f, None)
        };
        if let Some((shift, c)) = extra_num {
            self.num = self.num.mul_mono(&shift).scale(&c);
        }
        let key = f.key();
        for (g, p) in self.den.iter_mut() {
            if g.key() == key {
                *p += e;
                return;
            }
        }
        self.den.push((f, e));
        self.den.sort_by_key(|(g, _)| g.key());
    }

    /// Cancel denominator binomials dividing the numerator.
    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let mut new_den = Vec::new();
        for (f, mut e) in std::mem::take(&mut self.den) {
            while e > 0 {
                match divide_by_binomial(&self.num, &f.scale, &f.mono) {
                    Some(q) => {
                        self.num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e > 0 {
                new_den.push((f, e));
            }
        }
        self.den = new_den;
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order();
        // merged denominator: max powers over the union of factor keys
        let mut keys: BTreeMap<(ExpMonomial, String), (DenFactor, u32, u32)> = BTreeMap::new();
        for (f, e) in &self.den {
            keys.insert(f.key(), (f.clone(), *e, 0));
        }
        for (f, e) in &other.den {
            keys.entry(f.key())
                .and_modify(|v| v.2 = *e)
                .or_insert((f.clone(), 0, *e));
        }
        let mut mult_a = Poly::one(order);
        let mut mult_b = Poly::one(order);
        let mut den = Vec::new();
        for (_, (f, ea, eb)) in keys {
            let e = ea.max(eb);
            let fp = f.as_poly(order);
            for _ in ea..e {
                mult_a = mult_a.mul(&fp);
            }
            for _ in eb..e {
                mult_b = mult_b.mul(&fp);
            }
            den.push((f, e));
        }
        let mut out = CoefFn {
            num: self.num.mul(&mult_a).add(&other.num.mul(&mult_b)),
            den,
        };
        out.den.sort_by_key(|(g, _)| g.key());
        out.reduce();
        out
    }

    pub fn neg(&self) -> Self {
        CoefFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return CoefFn::zero(self.order());
        }
        let mut out = CoefFn {
            num: self.num.mul(&other.num),
            den: self.den.clone(),
        };
        for (f, e) in &other.den {
            out.push_den_factor(f.clone(), *e);
        }
        out.reduce();
        out
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return CoefFn::zero(self.order());
        }
        CoefFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul_mono(&self, m: &ExpMonomial) -> Self {
        CoefFn {
            num: self.num.mul_mono(m),
            den: self.den.clone(),
        }
    }

    /// Invert; the numerator must factor as monomial times binomials.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZeroSeries);
        }
        let _order = self.order();
        let (lead, content, factors) = factor_poly(&self.num)?;
        let mut num = self.den_expanded();
        num = num.mul_mono(&content.inv()).scale(&lead.inv());
        let mut out = CoefFn {
            num,
            den: Vec::new(),
        };
        for (f, e) in factors {
            out.push_den_factor(f, e);
        }
        out.reduce();
        Ok(out)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Equality decided exactly by cross-multiplication.
    pub fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den_expanded()) == other.num.mul(&self.den_expanded())
    }

    /// `D_v` through the quotient rule.
    pub fn derive(&self, v: Var) -> Self {
        let _order = self.order();
        // d(num)/den + num * sum_i e_i s_i deg_v(m_i) m_i / (den * (1 - s_i m_i))
        let mut out = CoefFn {
            num: self.num.derive(v),
            den: self.den.clone(),
        };
        for (i, (f, e)) in self.den.iter().enumerate() {
            let dm = f.mono.exponent(v);
            if dm.is_zero() {
                continue;
            }
            let coeff = f.scale.mul_rat(&qexp_to_rat(dm)).mul_rat(&Rat::from_integer((*e).into()));
            let mut piece = CoefFn {
                num: self.num.mul(&Poly::term(f.mono.clone(), coeff)),
                den: self.den.clone(),
            };
            piece.push_den_factor(self.den[i].0.clone(), 1);
            out = out.add(&piece);
        }
        out.reduce();
        out
    }

    pub fn swap_vars(&self, a: Var, b: Var) -> Self {
        let order = self.order();
        let mut out = CoefFn {
            num: self.num.swap_vars(a, b),
            den: Vec::new(),
        };
        for (f, e) in &self.den {
            let mono = Poly::term(f.mono.clone(), Scalar::one(order)).swap_vars(a, b);
            let mono = mono.terms()[0].0.clone();
            out.push_den_factor(
                DenFactor {
                    scale: f.scale.clone(),
                    mono,
                },
                *e,
            );
        }
        out.reduce();
        out
    }

    /// Coefficient of a monomial; requires a polynomial coefficient.
    pub fn extract_monomial(&self, m: &ExpMonomial) -> Result<Scalar> {
        if !self.is_polynomial() {
            return Err(Error::NonPolynomialCoefficient(self.to_string()));
        }
        Ok(self
            .num
            .terms()
            .iter()
            .find(|(x, _)| x == m)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| Scalar::zero(self.order())))
    }

    pub fn canonical_string(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for CoefFn {
    fn eq(&self, other: &Self) -> bool {
        CoefFn::eq(self, other)
    }
}

impl fmt::Display for CoefFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = poly_string(&self.num);
        if self.den.is_empty() {
            return write!(f, "{num}");
        }
        let mut den_parts = Vec::new();
        for (fac, e) in &self.den {
            let base = if fac.scale.is_one() {
                format!("(1-{})", fac.mono)
            } else {
                format!("(1-{}*{})", fac.scale, fac.mono)
            };
            if *e == 1 {
                den_parts.push(base);
            } else {
                den_parts.push(format!("{base}^{e}"));
            }
        }
        write!(f, "({num})/{}", den_parts.join(""))
    }
}

pub fn poly_string(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (m, c) in p.terms() {
        let cs = c.to_string();
        let piece = if m.is_one() {
            cs
        } else if c.is_one() {
            m.to_string()
        } else if cs == "-1" {
            format!("-{m}")
        } else {
            format!("{cs}*{m}")
        };
        parts.push(piece);
    }
    parts.join(" + ").replace("+ -", "- ")
}

/// Try exact division of `p` by `(1 - s*m)`.
///
/// Terms are grouped into cosets of the exponent lattice modulo integer
/// steps of `m`; within each coset the quotient is a univariate Laurent
/// division solved by the recursion `d_j = c_j + s d_{j-1}`.
pub fn divide_by_binomial(p: &Poly, s: &Scalar, m: &ExpMonomial) -> Option<Poly> {
    if p.is_zero() {
        return Some(p.clone());
    }
    if m.is_one() {
        return None;
    }
    let order = p.order();
    let dir_var = m.exps()[0].0;
    let dir_exp = m.exps()[0].1;
    // classes keyed by mono * m^{-j} with j = floor of the direction ratio
    let mut classes: BTreeMap<ExpMonomial, Vec<(i64, Scalar)>> = BTreeMap::new();
    for (mono, c) in p.terms() {
        let ratio = mono.exponent(dir_var) / dir_exp;
        if !ratio.is_integer() {
            // fractional offset: its own coset, cannot pair; still fine
        }
        let j = ratio.floor().to_integer();
        let base = mono.mul(&m.pow(QExp::new(-j, 1)));
        classes.entry(base).or_default().push((j, c.clone()));
    }
    let mut out: Vec<(ExpMonomial, Scalar)> = Vec::new();
    for (base, mut coeffs) in classes {
        coeffs.sort_by_key(|(j, _)| *j);
        let jmin = coeffs[0].0;
        let jmax = coeffs.last().unwrap().0;
        let span = (jmax - jmin) as usize;
        let mut dense = vec![Scalar::zero(order); span + 1];
        for (j, c) in coeffs {
            dense[(j - jmin) as usize] = c;
        }
        // (1 - s m) * g = f with g_j = f_j + s g_{j-1}; remainder must vanish
        let mut g = vec![Scalar::zero(order); span];
        let mut carry = Scalar::zero(order);
        for (idx, fj) in dense.iter().enumerate() {
            let val = fj.add(&carry.mul(s));
            if idx == span {
                if !val.is_zero() {
                    return None;
                }
            } else {
                g[idx] = val.clone();
                carry = val;
            }
        }
        if span == 0 {
            // single term cannot be divisible unless zero
            if !dense[0].is_zero() {
                return None;
            }
        }
        for (idx, c) in g.into_iter().enumerate() {
            if !c.is_zero() {
                out.push((base.mul(&m.pow(QExp::new(jmin + idx as i64, 1))), c));
            }
        }
    }
    Some(Poly::from_terms(order, out))
}

/// Factor a polynomial as `lead * content * prod (1 - s_i m_i)^{e_i}`.
pub fn factor_poly(p: &Poly) -> Result<(Scalar, ExpMonomial, Vec<(DenFactor, u32)>)> {
    if p.is_zero() {
        return Err(Error::NotFactorable("zero polynomial".into()));
    }
    let order = p.order();
    let content = p.content();
    let mut work = p.mul_mono(&content.inv());
    let mut factors: Vec<(DenFactor, u32)> = Vec::new();
    let mut guard = 0usize;
    while work.num_terms() > 1 {
        guard += 1;
        if guard > 256 {
            return Err(Error::NotFactorable(poly_string(p)));
        }
        // least monomial is the anchor; candidates step off it
        let (m0, c0) = work.terms()[0].clone();
        let mut found = false;
        let candidates: Vec<(ExpMonomial, Scalar)> = work.terms()[1..]
            .iter()
            .map(|(m, c)| (m.mul(&m0.inv()), c.clone()))
            .collect();
        for (step, c1) in candidates {
            // try s = -c1/(k c0) for small multiplicities k
            for k in 1..=8i64 {
                let s = c1
                    .div(&c0)
                    .neg()
                    .mul_rat(&crate::scalar::rat_frac(1, k));
                if s.is_zero() {
                    continue;
                }
                if let Some(q) = divide_by_binomial(&work, &s, &step) {
                    let f = DenFactor {
                        scale: s,
                        mono: step.clone(),
                    };
                    match factors.iter_mut().find(|(g, _)| g.key() == f.key()) {
                        Some((_, e)) => *e += 1,
                        None => factors.push((f, 1)),
                    }
                    work = q;
                    found = true;
                    break;
                }
            }
            if found {
                break;
            }
        }
        if !found {
            return Err(Error::NotFactorable(poly_string(p)));
        }
    }
    let (m_last, c_last) = work.terms()[0].clone();
    let content = content.mul(&m_last);
    factors.sort_by_key(|(g, _)| g.key());
    // normalize factors with mono < 1 into canonical shape via a scratch CoefFn
    let mut scratch = CoefFn {
        num: Poly::one(order),
        den: Vec::new(),
    };
    for (f, e) in factors {
        scratch.push_den_factor(f, e);
    }
    // scratch.num is (+-) monomial * scalar picked up by flips; fold it back:
    // factored p = lead * content * prod(...) means
    // p / (content * prod) = lead, and scratch.num is 1/(flip units).
    let (flip_mono, flip_scalar) = {
        let t = scratch.num.terms();
        debug_assert_eq!(t.len(), 1);
        (t[0].0.clone(), t[0].1.clone())
    };
    let lead = c_last.mul(&flip_scalar.inv());
    let content = content.mul(&flip_mono.inv());
    Ok((lead, content, scratch.den))
}

/// Substitution rule `var -> e^{2 pi i phase} * mono * q^{qshift}`.
#[derive(Clone, Debug)]
pub struct SubstRule {
    pub var: Var,
    pub phase: QExp,
    pub mono: ExpMonomial,
    pub qshift: QExp,
}

impl SubstRule {
    pub fn plain(var: Var, mono: ExpMonomial) -> Self {
        SubstRule {
            var,
            phase: QExp::zero(),
            mono,
            qshift: QExp::zero(),
        }
    }

    pub fn elliptic(var: Var, lambda: i64) -> Self {
        SubstRule {
            var,
            phase: QExp::zero(),
            mono: ExpMonomial::var(var, QExp::new(1, 1)),
            qshift: QExp::new(lambda, 1),
        }
    }

    pub fn power(var: Var, alpha: i64) -> Self {
        SubstRule::plain(var, ExpMonomial::var(var, QExp::new(alpha, 1)))
    }
}

/// Result fragments of substituting into a [`CoefFn`]: pairs of a relative
/// `q`-offset and a coefficient. Offsets below `rel_order` are exact.
pub struct SubstFragments {
    pub parts: Vec<(QExp, CoefFn)>,
}

impl CoefFn {
    /// Substitute into every numerator term and denominator factor; positive
    /// `q`-powers landing in denominators are re-expanded geometrically up to
    /// `rel_order` (exclusive, relative to the enclosing series term).
    pub fn substitute(&self, rule: &SubstRule, rel_order: QExp) -> Result<SubstFragments> {
        let order = self.order();
        // numerator: group substituted terms by their q-offset
        let mut by_offset: BTreeMap<QExp, Poly> = BTreeMap::new();
        for (m, c) in self.num.terms() {
            let e = m.exponent(rule.var);
            let (_, new_mono) = m.substitute_var(rule.var, &rule.mono);
            let mut coeff = c.clone();
            if !rule.phase.is_zero() && !e.is_zero() {
                coeff = coeff.mul(&Scalar::root_of_unity(order, rule.phase * e)?);
            }
            let off = rule.qshift * e;
            let entry = by_offset.entry(off).or_insert_with(|| Poly::zero(order));
            *entry = entry.add(&Poly::term(new_mono, coeff));
        }
        let mut parts: Vec<(QExp, CoefFn)> = by_offset
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(o, p)| (o, CoefFn::from_poly(p)))
            .collect();

        for (f, e) in &self.den {
            let em = f.mono.exponent(rule.var);
            let (_, new_mono) = f.mono.substitute_var(rule.var, &rule.mono);
            let mut scale = f.scale.clone();
            if !rule.phase.is_zero() && !em.is_zero() {
                scale = scale.mul(&Scalar::root_of_unity(order, rule.phase * em)?);
            }
            let b = rule.qshift * em;
            if b.is_zero() {
                if new_mono.is_one() && scale.is_one() {
                    return Err(Error::VanishingDenominator("1".into()));
                }
                if new_mono.is_one() {
                    // (1 - s) is a nonzero scalar
                    let unit = Scalar::one(order).sub(&scale);
                    if unit.is_zero() {
                        return Err(Error::VanishingDenominator(scale.to_string()));
                    }
                    let inv = unit.inv().pow_u32(*e);
                    for (_, c) in parts.iter_mut() {
                        *c = c.scale(&inv);
                    }
                } else {
                    for (_, c) in parts.iter_mut() {
                        let mut cc = c.clone();
                        cc.push_den_factor(
                            DenFactor {
                                scale: scale.clone(),
                                mono: new_mono.clone(),
                            },
                            *e,
                        );
                        cc.reduce();
                        *c = cc;
                    }
                }
            } else {
                // move the q-power out of the denominator and re-expand
                let (geom_scale, geom_mono, geom_b, prefactor) = if b > QExp::zero() {
                    (scale.clone(), new_mono.clone(), b, None)
                } else {
                    // 1/(1 - s m q^b) = (-s^{-1} m^{-1} q^{-b}) / (1 - s^{-1} m^{-1} q^{-b})
                    let sinv = scale.inv();
                    (
                        sinv.clone(),
                        new_mono.inv(),
                        -b,
                        Some((sinv.neg(), new_mono.inv(), -b)),
                    )
                };
                let mut new_parts: Vec<(QExp, CoefFn)> = Vec::new();
                for (off, c) in parts.iter() {
                    let mut base_off = *off;
                    let mut base = c.clone();
                    if let Some((pc, pm, pb)) = &prefactor {
                        let mut coeff = Scalar::one(order);
                        let mut mono = ExpMonomial::one();
                        for _ in 0..*e {
                            coeff = coeff.mul(pc);
                            mono = mono.mul(pm);
                        }
                        base = base.scale(&coeff).mul_mono(&mono);
                        base_off += *pb * QExp::new(*e as i64, 1);
                    }
                    // (1 - u)^{-e} = sum_j binom(j+e-1, e-1) u^j, u = s m q^b
                    let mut j = 0i64;
                    loop {
                        let term_off = base_off + geom_b * QExp::new(j, 1);
                        if term_off >= rel_order {
                            break;
                        }
                        let binom = crate::scalar::binomial(
                            (j as u64) + (*e as u64) - 1,
                            (*e as u64) - 1,
                        );
                        let coeff = geom_scale
                            .pow_u32(j as u32)
                            .mul_rat(&Rat::from_integer(binom));
                        let mono = geom_mono.pow(QExp::new(j, 1));
                        let piece = base.scale(&coeff).mul_mono(&mono);
                        if !piece.is_zero() {
                            new_parts.push((term_off, piece));
                        }
                        j += 1;
                        if j > 1_000_000 {
                            return Err(Error::InvalidParameter(
                                "geometric re-expansion depth exceeded".into(),
                            ));
                        }
                    }
                }
                parts = merge_fragments(new_parts, order);
            }
        }
        Ok(SubstFragments {
            parts: merge_fragments(parts, order),
        })
    }
}

fn merge_fragments(parts: Vec<(QExp, CoefFn)>, order: CycloOrder) -> Vec<(QExp, CoefFn)> {
    let mut map: BTreeMap<QExp, CoefFn> = BTreeMap::new();
    for (o, c) in parts {
        if c.is_zero() {
            continue;
        }
        match map.remove(&o) {
            None => {
                map.insert(o, c);
            }
            Some(prev) => {
                let s = prev.add(&c);
                if !s.is_zero() {
                    map.insert(o, s);
                }
            }
        }
    }
    let _ = order;
    map.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qexp;

    fn n4() -> CycloOrder {
        CycloOrder(4)
    }

    fn zeta_pow(e: i64, d: i64) -> ExpMonomial {
        ExpMonomial::var(Var::Zeta, qexp(e, d))
    }

    #[test]
    fn binomial_division_roundtrip() {
        let o = n4();
        let one = Scalar::one(o);
        // (1 - z)(1 + z + z^2) = 1 - z^3
        let p = Poly::from_terms(
            o,
            vec![
                (ExpMonomial::one(), one.clone()),
                (zeta_pow(3, 1), one.neg()),
            ],
        );
        let q = divide_by_binomial(&p, &one, &zeta_pow(1, 1)).expect("divisible");
        assert_eq!(q.num_terms(), 3);
        let back = q.mul(&Poly::from_terms(
            o,
            vec![(ExpMonomial::one(), one.clone()), (zeta_pow(1, 1), one.neg())],
        ));
        assert_eq!(back, p);
        // 1 - z^3 is not divisible by (1 - z^2)
        assert!(divide_by_binomial(&p, &one, &zeta_pow(2, 1)).is_none());
    }

    #[test]
    fn factoring_units_and_flips() {
        let o = n4();
        let one = Scalar::one(o);
        // zeta^{-1/2} * (zeta - 1) = zeta^{1/2} - zeta^{-1/2}
        let p = Poly::from_terms(
            o,
            vec![(zeta_pow(1, 2), one.clone()), (zeta_pow(-1, 2), one.neg())],
        );
        let c = CoefFn::from_poly(p.clone());
        let inv = c.inv().expect("invertible");
        let prod = c.mul(&inv);
        assert!(prod.eq(&CoefFn::one(o)));
    }

    #[test]
    fn quotient_rule_example() {
        // D_z(zeta/(1-zeta)) = zeta/(1-zeta)^2
        let o = n4();
        let one = Scalar::one(o);
        let c = CoefFn::over_binomial(Poly::term(zeta_pow(1, 1), one.clone()), zeta_pow(1, 1));
        let d = c.derive(Var::Zeta);
        let mut expected = CoefFn::term(zeta_pow(1, 1), one);
        expected.push_den_factor(
            DenFactor {
                scale: Scalar::one(o),
                mono: zeta_pow(1, 1),
            },
            2,
        );
        assert!(d.eq(&expected));
    }

    #[test]
    fn add_cancels_to_zero() {
        // zeta/(1-zeta) + 1/(1-zeta^{-1}) = zeta/(1-zeta) - zeta/(1-zeta) = 0
        let o = n4();
        let one = Scalar::one(o);
        let a = CoefFn::over_binomial(Poly::term(zeta_pow(1, 1), one.clone()), zeta_pow(1, 1));
        let b = CoefFn::over_binomial(Poly::term(ExpMonomial::one(), one), zeta_pow(-1, 1));
        assert!(a.add(&b).is_zero());
    }

    #[test]
    fn exponent_doubling_substitution() {
        // zeta/(1-zeta) under zeta -> zeta^2 gives zeta^2/(1-zeta^2)
        let o = n4();
        let one = Scalar::one(o);
        let c = CoefFn::over_binomial(Poly::term(zeta_pow(1, 1), one.clone()), zeta_pow(1, 1));
        let frags = c
            .substitute(&SubstRule::power(Var::Zeta, 2), qexp(10, 1))
            .unwrap();
        assert_eq!(frags.parts.len(), 1);
        let (off, img) = &frags.parts[0];
        assert!(off.is_zero());
        let expected = CoefFn::over_binomial(Poly::term(zeta_pow(2, 1), one), zeta_pow(2, 1));
        assert!(img.eq(&expected));
    }

    #[test]
    fn geometric_reexpansion() {
        // 1/(1-zeta) under zeta -> zeta q: fragments 1 + zeta q + zeta^2 q^2 + ...
        let o = n4();
        let c = CoefFn::over_binomial(Poly::one(o), zeta_pow(1, 1));
        let frags = c
            .substitute(&SubstRule::elliptic(Var::Zeta, 1), qexp(3, 1))
            .unwrap();
        assert_eq!(frags.parts.len(), 3);
        for (j, (off, val)) in frags.parts.iter().enumerate() {
            assert_eq!(*off, qexp(j as i64, 1));
            assert!(val.eq(&CoefFn::term(zeta_pow(j as i64, 1), Scalar::one(o))));
        }
        // and zeta -> zeta q^{-1} flips the factor before re-expanding
        let frags = c
            .substitute(&SubstRule::elliptic(Var::Zeta, -1), qexp(3, 1))
            .unwrap();
        // 1/(1 - zeta q^{-1}) = -zeta^{-1} q/(1 - zeta^{-1} q)
        assert_eq!(frags.parts[0].0, qexp(1, 1));
        assert!(frags.parts[0]
            .1
            .eq(&CoefFn::term(zeta_pow(-1, 1), Scalar::one(o).neg())));
    }

    #[test]
    fn vanishing_denominator_reported() {
        let o = n4();
        let c = CoefFn::over_binomial(Poly::one(o), ExpMonomial::var(Var::QZ, qexp(1, 1)));
        // q_z -> 1 makes (1 - q_z) vanish identically
        let r = c.substitute(
            &SubstRule::plain(Var::QZ, ExpMonomial::one()),
            qexp(4, 1),
        );
        assert!(matches!(r, Err(Error::VanishingDenominator(_))));
    }
}
