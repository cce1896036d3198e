//! Exact elements of a fixed cyclotomic field `Q(zeta_N)` in the power basis.
//!
//! A [`Scalar`] stores `phi(N)` rational coordinates with respect to
//! `1, z, z^2, ..., z^{phi(N)-1}` where `z = e^(2 pi i / N)`. Arithmetic
//! reduces modulo the `N`-th cyclotomic polynomial. The order `N` is a
//! per-computation configuration; mixing scalars of different orders panics.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

pub type Rat = BigRational;
/// Small exact rational used for exponents and orders.
pub type QExp = Ratio<i64>;

pub fn rat_i64(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn qexp(n: i64, d: i64) -> QExp {
    QExp::new(n, d)
}

/// Cyclotomic order together with the reduction data for its field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct CycloOrder(pub u32);

impl CycloOrder {
    pub fn phi(self) -> usize {
        euler_phi(self.0) as usize
    }
}

fn euler_phi(n: u32) -> u32 {
    let mut n = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Coefficients of the `N`-th cyclotomic polynomial, ascending degree,
/// monic of degree `phi(N)`.
fn cyclotomic_poly(n: u32) -> Vec<Rat> {
    // x^n - 1 = prod_{d | n} Phi_d; divide out the proper divisors.
    let mut num: Vec<Rat> = vec![Rat::zero(); n as usize + 1];
    num[0] = -Rat::one();
    num[n as usize] = Rat::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_cached(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    num
}

fn poly_div_exact(num: &[Rat], den: &[Rat]) -> Vec<Rat> {
    let mut rem: Vec<Rat> = num.to_vec();
    let dd = den.len() - 1;
    let nd = rem.len() - 1;
    let mut quot = vec![Rat::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd].clone() / den[dd].clone();
        if !c.is_zero() {
            for j in 0..=dd {
                let t = &c * &den[j];
                rem[k + j] -= t;
            }
        }
        quot[k] = c;
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()));
    quot
}

static CYCLO_CACHE: Lazy<Mutex<HashMap<u32, Vec<Rat>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn cyclotomic_cached(n: u32) -> Vec<Rat> {
    if let Some(p) = CYCLO_CACHE.lock().unwrap().get(&n) {
        return p.clone();
    }
    let p = cyclotomic_poly(n);
    CYCLO_CACHE.lock().unwrap().insert(n, p.clone());
    p
}

/// Exact element of the `N`-th cyclotomic field in the power basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    order: u32,
    coords: Vec<Rat>,
}

impl Scalar {
    pub fn zero(order: CycloOrder) -> Self {
        Scalar {
            order: order.0,
            coords: vec![Rat::zero(); order.phi()],
        }
    }

    pub fn one(order: CycloOrder) -> Self {
        Self::from_rat(order, Rat::one())
    }

    pub fn from_rat(order: CycloOrder, r: Rat) -> Self {
        let mut coords = vec![Rat::zero(); order.phi()];
        coords[0] = r;
        Scalar {
            order: order.0,
            coords,
        }
    }

    pub fn from_i64(order: CycloOrder, n: i64) -> Self {
        Self::from_rat(order, rat_i64(n))
    }

    pub fn from_frac(order: CycloOrder, n: i64, d: i64) -> Self {
        Self::from_rat(order, rat_frac(n, d))
    }

    /// `i`, available whenever `4 | N`.
    pub fn imaginary_unit(order: CycloOrder) -> Result<Self> {
        if order.0 % 4 != 0 {
            return Err(Error::RootNotInField("1/4".into(), order.0));
        }
        Ok(Self::root_of_unity_pow(order, order.0 as i64 / 4))
    }

    /// `e^(2 pi i k / N)` as a power-basis element.
    pub fn root_of_unity_pow(order: CycloOrder, k: i64) -> Self {
        let n = order.0 as i64;
        let k = k.rem_euclid(n) as usize;
        let phi = order.phi();
        if k < phi {
            let mut coords = vec![Rat::zero(); phi];
            coords[k] = Rat::one();
            return Scalar {
                order: order.0,
                coords,
            };
        }
        // Reduce x^k modulo Phi_N.
        let m = cyclotomic_cached(order.0);
        let mut poly = vec![Rat::zero(); k + 1];
        poly[k] = Rat::one();
        reduce_mod(&mut poly, &m);
        poly.resize(phi, Rat::zero());
        Scalar {
            order: order.0,
            coords: poly,
        }
    }

    /// `e^(2 pi i t)` for a rational `t` whose denominator divides `N`.
    pub fn root_of_unity(order: CycloOrder, t: QExp) -> Result<Self> {
        let n = order.0 as i64;
        let d = *t.denom();
        if n % d != 0 {
            return Err(Error::RootNotInField(t.to_string(), order.0));
        }
        Ok(Self::root_of_unity_pow(order, t.numer() * (n / d)))
    }

    pub fn order(&self) -> CycloOrder {
        CycloOrder(self.order)
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Option<&Rat> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    fn check_order(&self, other: &Self) {
        if self.order != other.order {
            panic!(
                "cyclotomic order mismatch: {} vs {} (construct all inputs at one order)",
                self.order, other.order
            );
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_order(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        Scalar {
            order: self.order,
            coords,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_order(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Scalar {
            order: self.order,
            coords,
        }
    }

    pub fn neg(&self) -> Self {
        Scalar {
            order: self.order,
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_order(other);
        if let Some(r) = self.as_rational() {
            if r.is_zero() {
                return Self::zero(self.order());
            }
            return Scalar {
                order: self.order,
                coords: other.coords.iter().map(|c| c * r).collect(),
            };
        }
        if let Some(r) = other.as_rational() {
            return Scalar {
                order: self.order,
                coords: self.coords.iter().map(|c| c * r).collect(),
            };
        }
        let phi = self.coords.len();
        let mut prod = vec![Rat::zero(); 2 * phi - 1];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] += a * b;
            }
        }
        let m = cyclotomic_cached(self.order);
        reduce_mod(&mut prod, &m);
        prod.resize(phi, Rat::zero());
        Scalar {
            order: self.order,
            coords: prod,
        }
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        Scalar {
            order: self.order,
            coords: self.coords.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in `Q[x]`.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of the zero scalar");
        if let Some(r) = self.as_rational() {
            return Self::from_rat(self.order(), r.recip());
        }
        let m = cyclotomic_cached(self.order);
        let (g, _, t) = poly_ext_gcd(&m, &self.coords);
        // g is a nonzero constant since Phi_N is irreducible over Q.
        debug_assert!(poly_deg(&g) == Some(0));
        let ginv = g[0].recip();
        let mut coords: Vec<Rat> = t.iter().map(|c| c * &ginv).collect();
        reduce_mod(&mut coords, &m);
        coords.resize(self.coords.len(), Rat::zero());
        Scalar {
            order: self.order,
            coords,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    pub fn pow_u32(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Canonical text form: rational coordinates joined on the power basis.
    pub fn canonical_string(&self) -> String {
        self.coords
            .iter()
            .map(rat_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn qexp_string(r: &QExp) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn poly_deg(p: &[Rat]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

fn reduce_mod(p: &mut Vec<Rat>, m: &[Rat]) {
    let dm = m.len() - 1;
    while let Some(dp) = poly_deg(p) {
        if dp < dm {
            break;
        }
        let c = p[dp].clone() / m[dm].clone();
        for j in 0..=dm {
            let t = &c * &m[j];
            p[dp - dm + j] -= t;
        }
    }
    p.resize(dm, Rat::zero());
}

/// Extended gcd of polynomials over Q: returns (g, s, t) with s*a + t*b = g.
fn poly_ext_gcd(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>, Vec<Rat>) {
    let mut r0: Vec<Rat> = a.to_vec();
    let mut r1: Vec<Rat> = b.to_vec();
    let mut s0 = vec![Rat::one()];
    let mut s1 = vec![Rat::zero()];
    let mut t0 = vec![Rat::zero()];
    let mut t1 = vec![Rat::one()];
    while poly_deg(&r1).is_some() {
        let (q, r) = poly_divmod(&r0, &r1);
        let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
        let t2 = poly_sub(&t0, &poly_mul(&q, &t1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s2;
        t0 = t1;
        t1 = t2;
    }
    (r0, s0, t0)
}

fn poly_divmod(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let db = poly_deg(b).expect("division by zero polynomial");
    let mut rem = a.to_vec();
    let da = match poly_deg(&rem) {
        Some(d) if d >= db => d,
        _ => return (vec![Rat::zero()], rem),
    };
    let mut quot = vec![Rat::zero(); da - db + 1];
    for k in (0..=da - db).rev() {
        let c = rem[k + db].clone() / b[db].clone();
        if !c.is_zero() {
            for j in 0..=db {
                let t = &c * &b[j];
                rem[k + j] -= t;
            }
        }
        quot[k] = c;
    }
    (quot, rem)
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    out
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar[N={}]({})", self.order, self.canonical_string())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{}", rat_string(r));
        }
        let mut parts = Vec::new();
        for (k, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let basis = if k == 0 {
                String::new()
            } else if k == 1 {
                format!("r{}", self.order)
            } else {
                format!("r{}^{}", self.order, k)
            };
            let cs = rat_string(c);
            if basis.is_empty() {
                parts.push(cs);
            } else if c.is_one() {
                parts.push(basis);
            } else if (-c.clone()).is_one() {
                parts.push(format!("-{basis}"));
            } else {
                parts.push(format!("{cs}*{basis}"));
            }
        }
        write!(f, "{}", parts.join("+").replace("+-", "-"))
    }
}

/// Exact Bernoulli numbers `B_0, ..., B_n` with the convention `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rat> {
    let mut b: Vec<Rat> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rat::one());
            continue;
        }
        // sum_{j=0}^{m} binom(m+1, j) B_j = 0
        let mut acc = Rat::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += Rat::from_integer(binomial(m as u64 + 1, j as u64)) * bj;
        }
        let denom = Rat::from_integer(BigInt::from(m as u64 + 1));
        b.push(-acc / denom);
    }
    b
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k.min(n - k) {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        // Phi_4 = x^2 + 1, Phi_12 = x^4 - x^2 + 1
        let p4 = cyclotomic_cached(4);
        assert_eq!(p4, vec![rat_i64(1), rat_i64(0), rat_i64(1)]);
        let p12 = cyclotomic_cached(12);
        assert_eq!(
            p12,
            vec![rat_i64(1), rat_i64(0), rat_i64(-1), rat_i64(0), rat_i64(1)]
        );
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        for n in [4u32, 8, 12, 24] {
            let i = Scalar::imaginary_unit(CycloOrder(n)).unwrap();
            let sq = i.mul(&i);
            assert_eq!(sq, Scalar::from_i64(CycloOrder(n), -1), "N = {n}");
        }
    }

    #[test]
    fn field_axioms_spot() {
        let n = CycloOrder(12);
        let a = Scalar::root_of_unity_pow(n, 1)
            .add(&Scalar::from_frac(n, 3, 7))
            .mul(&Scalar::root_of_unity_pow(n, 5));
        let b = Scalar::root_of_unity_pow(n, 7).add(&Scalar::from_i64(n, 2));
        // (a + b) - b = a, (a * b) / b = a
        assert_eq!(a.add(&b).sub(&b), a);
        assert_eq!(a.mul(&b).div(&b), a);
        // primitive 12th root has order 12
        let z = Scalar::root_of_unity_pow(n, 1);
        assert!(z.pow_u32(12).is_one());
        assert!(!z.pow_u32(6).is_one());
    }

    #[test]
    fn twelfth_root_contains_cube_root() {
        let n = CycloOrder(12);
        let w = Scalar::root_of_unity(n, qexp(1, 3)).unwrap();
        assert!(w.pow_u32(3).is_one());
        assert!(!w.is_one());
        // 1 + w + w^2 = 0
        let sum = Scalar::one(n).add(&w).add(&w.pow_u32(2));
        assert!(sum.is_zero());
    }

    #[test]
    fn bernoulli_table() {
        let b = bernoulli_numbers(8);
        assert_eq!(b[1], rat_frac(-1, 2));
        assert_eq!(b[2], rat_frac(1, 6));
        assert_eq!(b[3], rat_i64(0));
        assert_eq!(b[4], rat_frac(-1, 30));
        assert_eq!(b[6], rat_frac(1, 42));
        assert_eq!(b[8], rat_frac(-1, 30));
    }
}
