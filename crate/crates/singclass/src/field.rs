//! Exact coefficient fields: the rationals, prime fields F_p, and extensions
//! F_{p^k} = F_p[z]/(modulus).
//!
//! A [`Field`] is a cheap-to-clone handle; elements are plain data and all
//! arithmetic goes through the field handle.  Elements are kept canonical
//! (reduced fractions, reduced residues, reduced residue polynomials), so
//! structural equality is value equality.
//!
//! Extension moduli are found by a deterministic scan over monic polynomials
//! of the requested degree, each checked for irreducibility, so the same
//! `(p, k)` always yields the same field.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};

use crate::error::{Error, Result};

/// An element of one of the supported fields.  Canonical by construction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum FieldElem {
    /// Reduced fraction over Q.
    Rat(BigRational),
    /// Residue in 0..p.
    Mod(u64),
    /// Residue polynomial of degree < k, low coefficient first, length exactly k.
    Ext(Vec<u64>),
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Rat(r) => write!(f, "{r}"),
            FieldElem::Mod(a) => write!(f, "{a}"),
            FieldElem::Ext(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug)]
enum FieldRepr {
    Rationals,
    Prime {
        p: u64,
    },
    Extension {
        p: u64,
        k: usize,
        /// Monic modulus, low coefficient first, length k+1, last entry 1.
        modulus: Vec<u64>,
    },
}

struct FieldInner {
    repr: FieldRepr,
    /// Factorization of q - 1 for finite fields, filled lazily.
    unit_order_factors: OnceLock<Vec<(u64, u32)>>,
    primitive_root: OnceLock<FieldElem>,
}

impl fmt::Debug for FieldInner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.repr.fmt(f)
    }
}

/// Handle to a coefficient field.
#[derive(Clone, Debug)]
pub struct Field(Arc<FieldInner>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0.repr, &other.0.repr) {
            (FieldRepr::Rationals, FieldRepr::Rationals) => true,
            (FieldRepr::Prime { p: a }, FieldRepr::Prime { p: b }) => a == b,
            (
                FieldRepr::Extension { p: a, k: ka, modulus: ma },
                FieldRepr::Extension { p: b, k: kb, modulus: mb },
            ) => a == b && ka == kb && ma == mb,
            _ => false,
        }
    }
}
impl Eq for Field {}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d as u128 * d as u128 <= n as u128 {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // extended Euclid
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "not invertible");
    (t.rem_euclid(p as i128)) as u64
}

// ---- dense polynomial helpers over F_p (for modulus search and extension arithmetic) ----

fn poly_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_mul_fp(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + ai as u128 * bj as u128) % p as u128) as u64;
        }
    }
    poly_trim(&mut out);
    out
}

/// Remainder of `a` modulo monic `m` over F_p.
fn poly_rem_fp(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &mi) in m.iter().enumerate() {
                let idx = i + shift;
                let sub = (lead as u128 * mi as u128 % p as u128) as u64;
                r[idx] = (r[idx] + p - sub) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
    }
    r
}

fn poly_mulmod_fp(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    poly_rem_fp(&poly_mul_fp(a, b, p), m, p)
}

fn poly_powmod_fp(base: &[u64], mut exp: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = poly_rem_fp(base, m, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = poly_mulmod_fp(&acc, &b, m, p);
        }
        b = poly_mulmod_fp(&b, &b, m, p);
        exp >>= 1;
    }
    acc
}

fn poly_gcd_fp(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        // make b monic for the remainder step
        let inv = mod_inv(*b.last().unwrap(), p);
        let monic: Vec<u64> = b
            .iter()
            .map(|&c| (c as u128 * inv as u128 % p as u128) as u64)
            .collect();
        let r = poly_rem_fp(&a, &monic, p);
        a = b;
        b = r;
    }
    if let Some(&lead) = a.last() {
        let inv = mod_inv(lead, p);
        for c in a.iter_mut() {
            *c = (*c as u128 * inv as u128 % p as u128) as u64;
        }
    }
    a
}

/// Irreducibility over F_p of a monic polynomial, by the Frobenius criterion:
/// x^(p^k) = x mod f and gcd(x^(p^(k/l)) - x, f) = 1 for every prime l | k.
fn is_irreducible_fp(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    if f[0] == 0 {
        return false; // divisible by x
    }
    let x = vec![0u64, 1];
    // p^k fits in u64 for the desk-scale ranges we accept (checked at construction)
    let q = (p as u128).pow(k as u32);
    if q > u64::MAX as u128 {
        return false;
    }
    let xq = poly_powmod_fp(&x, q as u64, f, p);
    let mut diff = xq.clone();
    // diff -= x
    while diff.len() < 2 {
        diff.push(0);
    }
    diff[1] = (diff[1] + p - 1) % p;
    poly_trim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    for (l, _) in trial_factor(k as u64) {
        let e = (p as u128).pow((k as u64 / l) as u32) as u64;
        let xe = poly_powmod_fp(&x, e, f, p);
        let mut d = xe;
        while d.len() < 2 {
            d.push(0);
        }
        d[1] = (d[1] + p - 1) % p;
        poly_trim(&mut d);
        let g = poly_gcd_fp(&d, f, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl Field {
    pub fn rationals() -> Field {
        Field(Arc::new(FieldInner {
            repr: FieldRepr::Rationals,
            unit_order_factors: OnceLock::new(),
            primitive_root: OnceLock::new(),
        }))
    }

    pub fn prime(p: u64) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Field(Arc::new(FieldInner {
            repr: FieldRepr::Prime { p },
            unit_order_factors: OnceLock::new(),
            primitive_root: OnceLock::new(),
        })))
    }

    /// F_{p^k}, with the modulus found by deterministic scan.
    pub fn extension(p: u64, k: usize) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k == 0 {
            return Err(Error::Unsupported("extension degree 0".into()));
        }
        if k == 1 {
            return Field::prime(p);
        }
        if (p as u128).checked_pow(k as u32).map_or(true, |q| q > u64::MAX as u128) {
            return Err(Error::ExtensionBoundExceeded(k));
        }
        // scan lower coefficients as a base-p counter; first irreducible wins
        let total = (p as u128).pow(k as u32);
        let mut counter: u128 = 1; // constant term 0 is never irreducible for k >= 1
        while counter < total {
            let mut f = Vec::with_capacity(k + 1);
            let mut c = counter;
            for _ in 0..k {
                f.push((c % p as u128) as u64);
                c /= p as u128;
            }
            f.push(1);
            if is_irreducible_fp(&f, p) {
                return Ok(Field(Arc::new(FieldInner {
                    repr: FieldRepr::Extension { p, k, modulus: f },
                    unit_order_factors: OnceLock::new(),
                    primitive_root: OnceLock::new(),
                })));
            }
            counter += 1;
        }
        unreachable!("an irreducible polynomial of every degree exists over F_p")
    }

    /// Construct an extension with an explicit monic modulus (checked).
    pub fn extension_with_modulus(p: u64, modulus: Vec<u64>) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let k = modulus.len() - 1;
        if k < 1 || modulus.last() != Some(&1) || !is_irreducible_fp(&modulus, p) {
            return Err(Error::Unsupported("modulus must be monic irreducible".into()));
        }
        if k == 1 {
            return Field::prime(p);
        }
        Ok(Field(Arc::new(FieldInner {
            repr: FieldRepr::Extension { p, k, modulus },
            unit_order_factors: OnceLock::new(),
            primitive_root: OnceLock::new(),
        })))
    }

    pub fn characteristic(&self) -> u64 {
        match &self.0.repr {
            FieldRepr::Rationals => 0,
            FieldRepr::Prime { p } | FieldRepr::Extension { p, .. } => *p,
        }
    }

    /// Extension degree over the prime field (1 for F_p and Q).
    pub fn ext_degree(&self) -> usize {
        match &self.0.repr {
            FieldRepr::Extension { k, .. } => *k,
            _ => 1,
        }
    }

    pub fn modulus(&self) -> Option<&[u64]> {
        match &self.0.repr {
            FieldRepr::Extension { modulus, .. } => Some(modulus),
            _ => None,
        }
    }

    /// Number of elements for finite fields.
    pub fn size(&self) -> Option<u64> {
        match &self.0.repr {
            FieldRepr::Rationals => None,
            FieldRepr::Prime { p } => Some(*p),
            FieldRepr::Extension { p, k, .. } => Some((*p as u128).pow(*k as u32) as u64),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.size().is_some()
    }

    pub fn zero(&self) -> FieldElem {
        match &self.0.repr {
            FieldRepr::Rationals => FieldElem::Rat(BigRational::zero()),
            FieldRepr::Prime { .. } => FieldElem::Mod(0),
            FieldRepr::Extension { k, .. } => FieldElem::Ext(vec![0; *k]),
        }
    }

    pub fn one(&self) -> FieldElem {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> FieldElem {
        match &self.0.repr {
            FieldRepr::Rationals => FieldElem::Rat(BigRational::from(BigInt::from(n))),
            FieldRepr::Prime { p } => FieldElem::Mod(n.rem_euclid(*p as i64) as u64),
            FieldRepr::Extension { p, k, .. } => {
                let mut v = vec![0; *k];
                v[0] = n.rem_euclid(*p as i64) as u64;
                FieldElem::Ext(v)
            }
        }
    }

    /// num/den as a field element; fails when den is not invertible (e.g. 1/2 over F_2).
    pub fn from_ratio(&self, num: i64, den: i64) -> Result<FieldElem> {
        if den == 0 {
            return Err(Error::CoefficientNotInField(format!("{num}/{den}")));
        }
        match &self.0.repr {
            FieldRepr::Rationals => Ok(FieldElem::Rat(BigRational::new(
                BigInt::from(num),
                BigInt::from(den),
            ))),
            _ => {
                let d = self.from_int(den);
                if self.is_zero(&d) {
                    return Err(Error::CoefficientNotInField(format!("{num}/{den}")));
                }
                Ok(self.mul(&self.from_int(num), &self.inv(&d).unwrap()))
            }
        }
    }

    pub fn is_zero(&self, a: &FieldElem) -> bool {
        match a {
            FieldElem::Rat(r) => r.is_zero(),
            FieldElem::Mod(x) => *x == 0,
            FieldElem::Ext(v) => v.iter().all(|&c| c == 0),
        }
    }

    pub fn is_one(&self, a: &FieldElem) -> bool {
        *a == self.one()
    }

    fn p(&self) -> u64 {
        self.characteristic()
    }

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        match (a, b) {
            (FieldElem::Rat(x), FieldElem::Rat(y)) => FieldElem::Rat(x + y),
            (FieldElem::Mod(x), FieldElem::Mod(y)) => FieldElem::Mod((x + y) % self.p()),
            (FieldElem::Ext(x), FieldElem::Ext(y)) => {
                let p = self.p();
                FieldElem::Ext(x.iter().zip(y).map(|(&u, &v)| (u + v) % p).collect())
            }
            _ => panic!("field element kind mismatch"),
        }
    }

    pub fn neg(&self, a: &FieldElem) -> FieldElem {
        match a {
            FieldElem::Rat(x) => FieldElem::Rat(-x),
            FieldElem::Mod(x) => FieldElem::Mod((self.p() - x) % self.p()),
            FieldElem::Ext(v) => {
                let p = self.p();
                FieldElem::Ext(v.iter().map(|&c| (p - c) % p).collect())
            }
        }
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        match (a, b) {
            (FieldElem::Rat(x), FieldElem::Rat(y)) => FieldElem::Rat(x * y),
            (FieldElem::Mod(x), FieldElem::Mod(y)) => {
                FieldElem::Mod((*x as u128 * *y as u128 % self.p() as u128) as u64)
            }
            (FieldElem::Ext(x), FieldElem::Ext(y)) => {
                let (p, modulus) = match &self.0.repr {
                    FieldRepr::Extension { p, modulus, .. } => (*p, modulus),
                    _ => panic!("field element kind mismatch"),
                };
                let mut r = poly_mulmod_fp(x, y, modulus, p);
                r.resize(self.ext_degree(), 0);
                FieldElem::Ext(r)
            }
            _ => panic!("field element kind mismatch"),
        }
    }

    pub fn inv(&self, a: &FieldElem) -> Option<FieldElem> {
        if self.is_zero(a) {
            return None;
        }
        Some(match a {
            FieldElem::Rat(x) => FieldElem::Rat(x.recip()),
            FieldElem::Mod(x) => FieldElem::Mod(mod_inv(*x, self.p())),
            FieldElem::Ext(v) => {
                // extended Euclid in F_p[x] against the modulus
                let (p, modulus) = match &self.0.repr {
                    FieldRepr::Extension { p, modulus, .. } => (*p, modulus.clone()),
                    _ => unreachable!(),
                };
                let mut r0 = modulus;
                let mut r1 = v.clone();
                poly_trim(&mut r1);
                let mut s0: Vec<u64> = vec![];
                let mut s1: Vec<u64> = vec![1];
                while !r1.is_empty() {
                    // q, r = divmod(r0, r1)
                    let lead_inv = mod_inv(*r1.last().unwrap(), p);
                    let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
                    let mut rem = r0.clone();
                    while rem.len() >= r1.len() && !rem.is_empty() {
                        let coef =
                            (*rem.last().unwrap() as u128 * lead_inv as u128 % p as u128) as u64;
                        let shift = rem.len() - r1.len();
                        q[shift] = coef;
                        for (i, &c) in r1.iter().enumerate() {
                            let sub = (coef as u128 * c as u128 % p as u128) as u64;
                            rem[i + shift] = (rem[i + shift] + p - sub) % p;
                        }
                        poly_trim(&mut rem);
                    }
                    poly_trim(&mut q);
                    // s = s0 - q*s1
                    let qs1 = poly_mul_fp(&q, &s1, p);
                    let mut s = s0.clone();
                    if s.len() < qs1.len() {
                        s.resize(qs1.len(), 0);
                    }
                    for (i, &c) in qs1.iter().enumerate() {
                        s[i] = (s[i] + p - c) % p;
                    }
                    poly_trim(&mut s);
                    r0 = std::mem::replace(&mut r1, rem);
                    s0 = std::mem::replace(&mut s1, s);
                }
                // r0 = gcd (a constant, nonzero); scale s0 by its inverse
                debug_assert_eq!(r0.len(), 1);
                let scale = mod_inv(r0[0], p);
                let mut out: Vec<u64> =
                    s0.iter().map(|&c| (c as u128 * scale as u128 % p as u128) as u64).collect();
                out.resize(self.ext_degree(), 0);
                FieldElem::Ext(out)
            }
        })
    }

    pub fn div(&self, a: &FieldElem, b: &FieldElem) -> Option<FieldElem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    pub fn pow(&self, a: &FieldElem, e: i64) -> FieldElem {
        if e < 0 {
            let inv = self.inv(a).expect("pow of zero with negative exponent");
            return self.pow_u(&inv, (-e) as u64);
        }
        self.pow_u(a, e as u64)
    }

    pub fn pow_u(&self, a: &FieldElem, mut e: u64) -> FieldElem {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Total order on elements used whenever a canonical representative must
    /// be picked (root choices, sampling).  Q: by value; F_p: by residue;
    /// F_{p^k}: lexicographic on the coefficient vector.
    pub fn canonical_cmp(&self, a: &FieldElem, b: &FieldElem) -> Ordering {
        match (a, b) {
            (FieldElem::Rat(x), FieldElem::Rat(y)) => x.cmp(y),
            (FieldElem::Mod(x), FieldElem::Mod(y)) => x.cmp(y),
            (FieldElem::Ext(x), FieldElem::Ext(y)) => x.cmp(y),
            _ => panic!("field element kind mismatch"),
        }
    }

    /// The i-th element in the canonical enumeration (for sampling and scans).
    /// Q: 0, 1, -1, 2, -2, ...; finite fields: counter in base p.
    pub fn nth_element(&self, i: u64) -> FieldElem {
        match &self.0.repr {
            FieldRepr::Rationals => {
                let half = i.div_ceil(2) as i64;
                self.from_int(if i % 2 == 0 { -half } else { half })
            }
            FieldRepr::Prime { p } => FieldElem::Mod(i % p),
            FieldRepr::Extension { p, k, .. } => {
                let mut v = Vec::with_capacity(*k);
                let mut c = i as u128 % (self.size().unwrap() as u128);
                for _ in 0..*k {
                    v.push((c % *p as u128) as u64);
                    c /= *p as u128;
                }
                FieldElem::Ext(v)
            }
        }
    }

    fn unit_order_factors(&self) -> &[(u64, u32)] {
        self.0
            .unit_order_factors
            .get_or_init(|| trial_factor(self.size().expect("finite field") - 1))
    }

    /// A generator of the multiplicative group of a finite field.
    pub fn primitive_root(&self) -> &FieldElem {
        self.0.primitive_root.get_or_init(|| {
            let q = self.size().expect("finite field");
            let factors: Vec<u64> = self.unit_order_factors().iter().map(|&(l, _)| l).collect();
            let mut i = 1u64;
            loop {
                let g = self.nth_element(i);
                i += 1;
                if self.is_zero(&g) {
                    continue;
                }
                if factors.iter().all(|&l| !self.is_one(&self.pow_u(&g, (q - 1) / l))) {
                    return g;
                }
            }
        })
    }

    /// Multiplicative order of a nonzero element of a finite field.
    pub fn mult_order(&self, a: &FieldElem) -> u64 {
        assert!(!self.is_zero(a));
        let q = self.size().expect("finite field");
        let mut ord = q - 1;
        for &(l, e) in self.unit_order_factors() {
            for _ in 0..e {
                if self.is_one(&self.pow_u(a, ord / l)) {
                    ord /= l;
                } else {
                    break;
                }
            }
        }
        ord
    }

    /// Baby-step giant-step discrete log with respect to the primitive root.
    fn discrete_log(&self, a: &FieldElem) -> u64 {
        let q = self.size().expect("finite field");
        let g = self.primitive_root().clone();
        let n = q - 1;
        let m = (n as f64).sqrt().ceil() as u64 + 1;
        let mut table: HashMap<FieldElem, u64> = HashMap::with_capacity(m as usize);
        let mut cur = self.one();
        for j in 0..m {
            table.entry(cur.clone()).or_insert(j);
            cur = self.mul(&cur, &g);
        }
        let giant = self.inv(&self.pow_u(&g, m)).unwrap();
        let mut y = a.clone();
        for i in 0..=m {
            if let Some(&j) = table.get(&y) {
                return (i * m + j) % n;
            }
            y = self.mul(&y, &giant);
        }
        unreachable!("discrete log must exist in a cyclic group")
    }

    /// All m-th roots of unity in the field (canonical order).
    pub fn unity_roots(&self, m: usize) -> Vec<FieldElem> {
        match &self.0.repr {
            FieldRepr::Rationals => {
                if m % 2 == 0 {
                    vec![self.from_int(-1), self.one()]
                } else {
                    vec![self.one()]
                }
            }
            _ => {
                let q = self.size().unwrap();
                let d = num::integer::gcd(m as u64, q - 1);
                let g = self.primitive_root().clone();
                let step = self.pow_u(&g, (q - 1) / d);
                let mut out = Vec::with_capacity(d as usize);
                let mut cur = self.one();
                for _ in 0..d {
                    out.push(cur.clone());
                    cur = self.mul(&cur, &step);
                }
                out.sort_by(|a, b| self.canonical_cmp(a, b));
                out
            }
        }
    }

    /// An m-th root of `a` within this field, canonical choice, or None.
    pub fn nth_root(&self, a: &FieldElem, m: usize) -> Option<FieldElem> {
        assert!(m >= 1);
        if self.is_zero(a) {
            return Some(self.zero());
        }
        if m == 1 {
            return Some(a.clone());
        }
        match a {
            FieldElem::Rat(r) => {
                let neg = r.is_negative();
                if neg && m % 2 == 0 {
                    return None;
                }
                let num = r.numer().abs();
                let den = r.denom().abs();
                let rn = num.nth_root(m as u32);
                let rd = den.nth_root(m as u32);
                if num::pow(rn.clone(), m) != num || num::pow(rd.clone(), m) != den {
                    return None;
                }
                let mut root = BigRational::new(rn, rd);
                if neg {
                    root = -root;
                }
                Some(FieldElem::Rat(root))
            }
            _ => {
                let q = self.size().unwrap();
                let n = q - 1;
                let d = num::integer::gcd(m as u64, n);
                if !self.is_one(&self.pow_u(a, n / d)) {
                    return None;
                }
                // brute scan for small fields, discrete log otherwise
                if q <= 1 << 14 {
                    let mut best: Option<FieldElem> = None;
                    for i in 0..q {
                        let x = self.nth_element(i);
                        if self.is_zero(&x) {
                            continue;
                        }
                        if self.pow_u(&x, m as u64) == *a {
                            best = match best {
                                None => Some(x),
                                Some(b) => {
                                    if self.canonical_cmp(&x, &b) == Ordering::Less {
                                        Some(x)
                                    } else {
                                        Some(b)
                                    }
                                }
                            };
                        }
                    }
                    best
                } else {
                    let l = self.discrete_log(a);
                    // solve m*z = l (mod n)
                    let (g, z0) = solve_linear_congruence(m as u64 % n, l, n)?;
                    let g_elem = self.primitive_root().clone();
                    let step = n / g;
                    let mut best: Option<FieldElem> = None;
                    for i in 0..g.min(64) {
                        let cand = self.pow_u(&g_elem, (z0 + i * step) % n);
                        debug_assert_eq!(self.pow_u(&cand, m as u64), *a);
                        best = match best {
                            None => Some(cand),
                            Some(b) => {
                                if self.canonical_cmp(&cand, &b) == Ordering::Less {
                                    Some(cand)
                                } else {
                                    Some(b)
                                }
                            }
                        };
                    }
                    best
                }
            }
        }
    }

    /// All m-th roots of `a` in this field (canonical order).
    pub fn nth_roots_all(&self, a: &FieldElem, m: usize) -> Vec<FieldElem> {
        match self.nth_root(a, m) {
            None => vec![],
            Some(r0) => {
                if self.is_zero(&r0) {
                    return vec![r0];
                }
                let mut out: Vec<FieldElem> = self
                    .unity_roots(m)
                    .into_iter()
                    .map(|z| self.mul(&r0, &z))
                    .collect();
                out.sort_by(|x, y| self.canonical_cmp(x, y));
                out.dedup();
                out
            }
        }
    }

    /// Pretty-print an element.
    pub fn format_elem(&self, a: &FieldElem) -> String {
        match a {
            FieldElem::Rat(r) => format!("{r}"),
            FieldElem::Mod(x) => format!("{x}"),
            FieldElem::Ext(v) => {
                let mut parts = Vec::new();
                for (i, &c) in v.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let m = match i {
                        0 => format!("{c}"),
                        1 => {
                            if c == 1 {
                                "z".to_string()
                            } else {
                                format!("{c}*z")
                            }
                        }
                        _ => {
                            if c == 1 {
                                format!("z^{i}")
                            } else {
                                format!("{c}*z^{i}")
                            }
                        }
                    };
                    parts.push(m);
                }
                if parts.is_empty() {
                    "0".into()
                } else {
                    parts.join(" + ")
                }
            }
        }
    }
}

/// Solve a*z = b (mod n).  Returns (gcd, smallest solution) when solvable.
fn solve_linear_congruence(a: u64, b: u64, n: u64) -> Option<(u64, u64)> {
    let g = num::integer::gcd(a, n);
    if b % g != 0 {
        return None;
    }
    let (a1, b1, n1) = (a / g, b / g, n / g);
    let z = (b1 as u128 * mod_inv(a1 % n1, n1) as u128 % n1 as u128) as u64;
    Some((g, z))
}

/// A field embedding, recorded when a computation had to enlarge its field.
#[derive(Clone, Debug)]
pub struct FieldHom {
    pub src: Field,
    pub dst: Field,
    /// Image of the source extension generator; None when the source is prime or Q.
    pub gen_image: Option<FieldElem>,
}

impl FieldHom {
    pub fn identity(field: &Field) -> FieldHom {
        FieldHom { src: field.clone(), dst: field.clone(), gen_image: None }
    }

    pub fn is_identity(&self) -> bool {
        self.src == self.dst
    }

    pub fn map(&self, a: &FieldElem) -> FieldElem {
        if self.src == self.dst {
            return a.clone();
        }
        match a {
            FieldElem::Rat(_) => a.clone(),
            FieldElem::Mod(x) => {
                let mut v = vec![0; self.dst.ext_degree()];
                v[0] = *x;
                FieldElem::Ext(v)
            }
            FieldElem::Ext(v) => {
                let g = self.gen_image.as_ref().expect("embedding needs a generator image");
                let mut acc = self.dst.zero();
                for &c in v.iter().rev() {
                    acc = self.dst.mul(&acc, g);
                    let mut cv = vec![0; self.dst.ext_degree()];
                    cv[0] = c;
                    acc = self.dst.add(&acc, &FieldElem::Ext(cv));
                }
                acc
            }
        }
    }
}

/// Cap on brute-force scans when searching for a subfield generator image.
const EMBED_SCAN_CAP: u64 = 1 << 21;

/// Find an m-th root of `a`, extending the field if necessary.
///
/// Returns the (possibly identity) embedding into the field where the root
/// lives, together with the root.  Over Q no extension is attempted.
pub fn field_root(
    field: &Field,
    a: &FieldElem,
    m: usize,
    max_ext_degree: usize,
) -> Result<(FieldHom, FieldElem)> {
    assert!(m >= 1);
    if field.is_zero(a) {
        return Err(Error::Unsupported("root of zero requested".into()));
    }
    if let Some(r) = field.nth_root(a, m) {
        return Ok((FieldHom::identity(field), r));
    }
    if field.characteristic() == 0 {
        return Err(Error::NoRationalRoot(m));
    }
    let p = field.characteristic();
    let k = field.ext_degree();
    let ord_a = field.mult_order(a);
    let mut k2 = k;
    loop {
        k2 += k;
        if k2 > max_ext_degree {
            return Err(Error::ExtensionBoundExceeded(max_ext_degree));
        }
        let q2 = match (p as u128).checked_pow(k2 as u32) {
            Some(q) if q <= u64::MAX as u128 => q as u64,
            _ => return Err(Error::ExtensionBoundExceeded(max_ext_degree)),
        };
        let n2 = q2 - 1;
        let d = num::integer::gcd(m as u64, n2);
        if (n2 / d) % ord_a != 0 {
            continue;
        }
        // root exists in F_{p^k2}
        let big = Field::extension(p, k2)?;
        let hom = embed(field, &big)?;
        let a2 = hom.map(a);
        let root = big
            .nth_root(&a2, m)
            .expect("solvability condition certified the root's existence");
        return Ok((hom, root));
    }
}

/// Smallest extension degree (multiple of the current degree) containing an
/// m-th root of `a`, within the bound.  Used for error payloads.
pub fn min_ext_degree_for_root(
    field: &Field,
    a: &FieldElem,
    m: usize,
    max_ext_degree: usize,
) -> Option<usize> {
    if field.is_zero(a) || field.characteristic() == 0 {
        return None;
    }
    if field.nth_root(a, m).is_some() {
        return Some(field.ext_degree());
    }
    let p = field.characteristic();
    let k = field.ext_degree();
    let ord_a = field.mult_order(a);
    let mut k2 = k;
    while k2 + k <= max_ext_degree {
        k2 += k;
        let q2 = (p as u128).checked_pow(k2 as u32)?;
        if q2 > u64::MAX as u128 {
            return None;
        }
        let n2 = q2 as u64 - 1;
        let d = num::integer::gcd(m as u64, n2);
        if (n2 / d) % ord_a == 0 {
            return Some(k2);
        }
    }
    None
}

/// Embedding of one finite field into a larger one whose degree it divides.
pub fn embed(small: &Field, big: &Field) -> Result<FieldHom> {
    if small == big {
        return Ok(FieldHom::identity(small));
    }
    if small.characteristic() != big.characteristic() || small.characteristic() == 0 {
        return Err(Error::FieldMismatch);
    }
    let j = small.ext_degree();
    let k = big.ext_degree();
    if k % j != 0 {
        return Err(Error::FieldMismatch);
    }
    if j == 1 {
        return Ok(FieldHom { src: small.clone(), dst: big.clone(), gen_image: None });
    }
    let modulus = small.modulus().unwrap().to_vec();
    let eval = |x: &FieldElem| -> FieldElem {
        let mut acc = big.zero();
        for &c in modulus.iter().rev() {
            acc = big.mul(&acc, x);
            acc = big.add(&acc, &big.from_int(c as i64));
        }
        acc
    };
    let q_big = big.size().unwrap();
    // small fields: direct scan
    if q_big <= EMBED_SCAN_CAP {
        for i in 0..q_big {
            let x = big.nth_element(i);
            if big.is_zero(&eval(&x)) {
                return Ok(FieldHom { src: small.clone(), dst: big.clone(), gen_image: Some(x) });
            }
        }
        return Err(Error::Unsupported("generator image not found".into()));
    }
    // otherwise scan the subfield of order p^j via a primitive-root power
    let q_small = small.size().unwrap();
    if q_small > EMBED_SCAN_CAP {
        return Err(Error::ExtensionBoundExceeded(k));
    }
    let g = big.primitive_root().clone();
    let b = big.pow_u(&g, (q_big - 1) / (q_small - 1));
    let mut cur = big.one();
    for _ in 0..q_small - 1 {
        if big.is_zero(&eval(&cur)) {
            return Ok(FieldHom { src: small.clone(), dst: big.clone(), gen_image: Some(cur) });
        }
        cur = big.mul(&cur, &b);
    }
    Err(Error::Unsupported("generator image not found".into()))
}
