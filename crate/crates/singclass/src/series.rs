//! Univariate truncated power series with explicit, conservative truncation.
//!
//! `trunc = Some(N)` means coefficients are certified through exponent N and
//! unknown beyond; `trunc = None` means the series is an exact polynomial
//! (all higher coefficients are exactly zero).  Every operation returns the
//! largest truncation it can certify; nothing is silently padded with zeros.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};

#[derive(Clone, PartialEq, Eq)]
pub struct TruncSeries {
    field: Field,
    /// Dense coefficients from exponent 0; may be shorter than trunc+1
    /// (missing entries are certified zeros).  Trailing zeros are trimmed.
    coeffs: Vec<FieldElem>,
    trunc: Option<usize>,
}

/// Order of a series as far as the truncation can certify it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOrder {
    Known(usize),
    /// No nonzero coefficient stored; for exact polynomials this means the
    /// series is exactly zero, otherwise only "order > trunc" is certified.
    AboveTruncation { trunc: Option<usize> },
}

impl SeriesOrder {
    pub fn known(&self) -> Option<usize> {
        match self {
            SeriesOrder::Known(o) => Some(*o),
            SeriesOrder::AboveTruncation { .. } => None,
        }
    }
}

/// Effectively-infinite bound used internally when combining truncations.
const INF: usize = usize::MAX / 4;

fn opt_min(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (None, x) => x,
        (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

impl TruncSeries {
    pub fn new(field: Field, coeffs: Vec<FieldElem>, trunc: Option<usize>) -> TruncSeries {
        let mut s = TruncSeries { field, coeffs, trunc };
        if let Some(n) = s.trunc {
            s.coeffs.truncate(n + 1);
        }
        s.trim();
        s
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| self.field.is_zero(c)) {
            self.coeffs.pop();
        }
    }

    pub fn zero(field: &Field, trunc: Option<usize>) -> TruncSeries {
        TruncSeries { field: field.clone(), coeffs: vec![], trunc }
    }

    /// c * t^e as an exact polynomial.
    pub fn monomial(field: &Field, c: FieldElem, e: usize) -> TruncSeries {
        if field.is_zero(&c) {
            return Self::zero(field, None);
        }
        let mut coeffs = vec![field.zero(); e + 1];
        coeffs[e] = c;
        TruncSeries { field: field.clone(), coeffs, trunc: None }
    }

    /// The identity series t (exact).
    pub fn t(field: &Field) -> TruncSeries {
        Self::monomial(field, field.one(), 1)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn trunc(&self) -> Option<usize> {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    fn trunc_or_inf(&self) -> usize {
        self.trunc.unwrap_or(INF)
    }

    /// Coefficient of t^e; certified only for e <= trunc.
    pub fn coeff(&self, e: usize) -> FieldElem {
        debug_assert!(e <= self.trunc_or_inf(), "coefficient beyond certified truncation");
        self.coeffs.get(e).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    /// Degree of the stored part (exact polynomials: the honest degree).
    pub fn stored_degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn order(&self) -> SeriesOrder {
        for (e, c) in self.coeffs.iter().enumerate() {
            if !self.field.is_zero(c) {
                return SeriesOrder::Known(e);
            }
        }
        SeriesOrder::AboveTruncation { trunc: self.trunc }
    }

    /// A lower bound on the order, usable in truncation bookkeeping.
    pub fn order_lower_bound(&self) -> usize {
        match self.order() {
            SeriesOrder::Known(o) => o,
            SeriesOrder::AboveTruncation { trunc: Some(n) } => n + 1,
            SeriesOrder::AboveTruncation { trunc: None } => INF,
        }
    }

    /// True when every stored coefficient vanishes (exact zero if also exact).
    pub fn is_zero_within_trunc(&self) -> bool {
        self.coeffs.iter().all(|c| self.field.is_zero(c))
    }

    pub fn is_exactly_zero(&self) -> bool {
        self.is_exact() && self.is_zero_within_trunc()
    }

    pub fn leading_coeff(&self) -> Option<FieldElem> {
        self.order().known().map(|o| self.coeff(o))
    }

    /// Restrict certification to exponent k (jet).  Errors when k exceeds the
    /// already-certified truncation.
    pub fn jet(&self, k: usize) -> Result<TruncSeries> {
        if k > self.trunc_or_inf() {
            return Err(Error::JetExceedsTruncation {
                requested: k,
                available: self.trunc.unwrap_or(usize::MAX),
            });
        }
        Ok(TruncSeries::new(self.field.clone(), self.coeffs[..self.coeffs.len().min(k + 1)].to_vec(), Some(k)))
    }

    /// Like `jet` but never widens: min(current trunc, k).
    pub fn clip(&self, k: usize) -> TruncSeries {
        let k = k.min(self.trunc_or_inf());
        TruncSeries::new(
            self.field.clone(),
            self.coeffs[..self.coeffs.len().min(k + 1)].to_vec(),
            Some(k),
        )
    }

    pub fn add(&self, other: &TruncSeries) -> TruncSeries {
        assert_eq!(self.field, other.field, "field mismatch");
        let trunc = opt_min(self.trunc, other.trunc);
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for e in 0..len {
            let a = self.coeffs.get(e).cloned().unwrap_or_else(|| self.field.zero());
            let b = other.coeffs.get(e).cloned().unwrap_or_else(|| self.field.zero());
            coeffs.push(self.field.add(&a, &b));
        }
        TruncSeries::new(self.field.clone(), coeffs, trunc)
    }

    pub fn neg(&self) -> TruncSeries {
        TruncSeries {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|c| self.field.neg(c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn sub(&self, other: &TruncSeries) -> TruncSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &FieldElem) -> TruncSeries {
        TruncSeries::new(
            self.field.clone(),
            self.coeffs.iter().map(|a| self.field.mul(a, c)).collect(),
            self.trunc,
        )
    }

    pub fn mul(&self, other: &TruncSeries) -> TruncSeries {
        assert_eq!(self.field, other.field, "field mismatch");
        if self.is_exactly_zero() || other.is_exactly_zero() {
            return TruncSeries::zero(&self.field, None);
        }
        // certified through min(Na + ord(b), Nb + ord(a))
        let ta = self.trunc_or_inf().saturating_add(other.order_lower_bound());
        let tb = other.trunc_or_inf().saturating_add(self.order_lower_bound());
        let bound = ta.min(tb);
        let trunc = if bound >= INF { None } else { Some(bound) };
        let full = self.coeffs.len() + other.coeffs.len();
        let cap = match trunc {
            None => full.max(1),
            Some(n) => (n + 1).min(full.max(1)),
        };
        let mut out = vec![self.field.zero(); cap];
        for (i, a) in self.coeffs.iter().enumerate() {
            if self.field.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let e = i + j;
                if e >= cap {
                    break;
                }
                let prod = self.field.mul(a, b);
                out[e] = self.field.add(&out[e], &prod);
            }
        }
        TruncSeries::new(self.field.clone(), out, trunc)
    }

    /// Integer power by repeated multiplication (exponents are small here).
    pub fn pow(&self, e: usize) -> TruncSeries {
        let mut acc = TruncSeries::monomial(&self.field, self.field.one(), 0);
        let mut base = self.clone();
        let mut e = e;
        loop {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        acc
    }

    /// Substitution s(phi) for phi of order >= 1, with certified truncation
    ///
    ///   min( (N_s + 1) * ord(phi) - 1,  (e_min - 1) * ord(phi) + N_phi )
    ///
    /// where e_min is the smallest positive exponent with nonzero coefficient
    /// in s.  Rejects order(phi) = 0.
    pub fn compose(&self, phi: &TruncSeries) -> Result<TruncSeries> {
        assert_eq!(self.field, phi.field, "field mismatch");
        let o = phi.order_lower_bound();
        if o == 0 {
            return Err(Error::NotLocal);
        }
        let bound1 = if self.is_exact() {
            INF
        } else {
            (self.trunc_or_inf().saturating_add(1)).saturating_mul(o).saturating_sub(1)
        };
        let e_min = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, c)| !self.field.is_zero(c))
            .map(|(e, _)| e);
        let bound2 = if phi.is_exact() {
            INF
        } else {
            match e_min {
                Some(e) => (e - 1).saturating_mul(o).saturating_add(phi.trunc_or_inf()),
                None => INF, // constant-only visible part: phi tail enters only via s tail
            }
        };
        let bound = bound1.min(bound2);
        let trunc = if bound >= INF { None } else { Some(bound) };
        // Horner from the top of the stored coefficients
        let cap = |s: TruncSeries| -> TruncSeries {
            match trunc {
                Some(n) => s.clip(n),
                None => s,
            }
        };
        let mut acc = TruncSeries::zero(&self.field, trunc);
        for c in self.coeffs.iter().rev() {
            acc = cap(acc.mul(phi));
            acc = acc.add(&TruncSeries::monomial(&self.field, c.clone(), 0));
        }
        let mut acc = cap(acc);
        // re-attach the certified truncation (operations above may have
        // tightened it using intermediate zero orders pessimistically)
        acc.trunc = trunc;
        if let Some(n) = trunc {
            acc.coeffs.truncate(n + 1);
        }
        acc.trim();
        Ok(acc)
    }

    /// Divide by t^m; requires that the m lowest certified coefficients vanish.
    pub fn shr(&self, m: usize) -> TruncSeries {
        for e in 0..m.min(self.coeffs.len()) {
            debug_assert!(self.field.is_zero(&self.coeffs[e]), "shr would drop nonzero terms");
        }
        let coeffs = if self.coeffs.len() > m { self.coeffs[m..].to_vec() } else { vec![] };
        TruncSeries::new(self.field.clone(), coeffs, self.trunc.map(|n| n.saturating_sub(m)))
    }

    /// Multiply by t^m.
    pub fn shl(&self, m: usize) -> TruncSeries {
        let mut coeffs = vec![self.field.zero(); m];
        coeffs.extend(self.coeffs.iter().cloned());
        TruncSeries::new(self.field.clone(), coeffs, self.trunc.map(|n| n + m))
    }

    /// m-th root of a unit series, to `prec` (or the input truncation if
    /// tighter).  Requires order 0, p not dividing m, and an m-th root of the
    /// constant term in the field.
    pub fn nth_root(&self, m: usize, prec: usize) -> Result<TruncSeries> {
        if self.order() != SeriesOrder::Known(0) {
            return Err(Error::NotLocal);
        }
        let p = self.field.characteristic();
        if p != 0 && m as u64 % p == 0 {
            return Err(Error::CharacteristicDividesM { p, m });
        }
        let u0 = self.coeff(0);
        let r0 = self.field.nth_root(&u0, m).ok_or(Error::NoRootInField {
            m,
            min_ext_degree: crate::field::min_ext_degree_for_root(&self.field, &u0, m, 16),
        })?;
        let out_trunc = prec.min(self.trunc_or_inf());
        let m_elem = self.field.from_int(m as i64);
        let denom = self
            .field
            .inv(&self.field.mul(&m_elem, &self.field.pow_u(&r0, m as u64 - 1)))
            .expect("m and r0 are units");
        let mut v = TruncSeries::monomial(&self.field, r0, 0).clip(out_trunc);
        for e in 1..=out_trunc {
            // only the coefficient at e is needed; work at truncation e
            let ve = v.clip(e).pow(m).clip(e).coeff(e);
            let target = if e <= self.trunc_or_inf() { self.coeff(e) } else { self.field.zero() };
            let delta = self.field.mul(&self.field.sub(&target, &ve), &denom);
            if !self.field.is_zero(&delta) {
                v = v.add(&TruncSeries::monomial(&self.field, delta, e)).clip(out_trunc);
            }
        }
        let trunc = if self.is_exact() && prec >= INF { None } else { Some(out_trunc) };
        Ok(TruncSeries::new(self.field.clone(), v.coeffs, trunc))
    }

    /// Compositional inverse of an order-1 series with unit linear
    /// coefficient, to `prec`.  Valid in every characteristic.
    pub fn reversion(&self, prec: usize) -> Result<TruncSeries> {
        if self.order() != SeriesOrder::Known(1) {
            return Err(Error::NotLocal);
        }
        let s1 = self.coeff(1);
        let s1_inv = self.field.inv(&s1).ok_or(Error::NotLocal)?;
        let out_trunc = prec.min(self.trunc_or_inf());
        let mut phi = TruncSeries::monomial(&self.field, s1_inv.clone(), 1).clip(out_trunc);
        for e in 2..=out_trunc {
            // s(phi) should be t; correct the coefficient at e, working at
            // truncation e since lower coefficients are already settled
            let val = self.clip(e).compose(&phi.clip(e))?.clip(e).coeff(e);
            let delta = self.field.neg(&self.field.mul(&val, &s1_inv));
            if !self.field.is_zero(&delta) {
                phi = phi.add(&TruncSeries::monomial(&self.field, delta, e)).clip(out_trunc);
            }
        }
        Ok(phi)
    }

    /// Map all coefficients through a field embedding.
    pub fn map_field(&self, hom: &crate::field::FieldHom) -> TruncSeries {
        TruncSeries::new(
            hom.dst.clone(),
            self.coeffs.iter().map(|c| hom.map(c)).collect(),
            self.trunc,
        )
    }

    /// Structural equality of the jointly certified part.
    pub fn agrees_with(&self, other: &TruncSeries) -> bool {
        let bound = opt_min(self.trunc, other.trunc);
        let len = match bound {
            None => self.coeffs.len().max(other.coeffs.len()),
            Some(n) => (n + 1).min(self.coeffs.len().max(other.coeffs.len())),
        };
        for e in 0..len {
            let a = self.coeffs.get(e).cloned().unwrap_or_else(|| self.field.zero());
            let b = other.coeffs.get(e).cloned().unwrap_or_else(|| self.field.zero());
            if a != b {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (e, c) in self.coeffs.iter().enumerate() {
            if self.field.is_zero(c) {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            let cs = self.field.format_elem(c);
            let needs_parens = cs.contains('+') || cs.contains(' ');
            match e {
                0 => write!(f, "{cs}")?,
                _ => {
                    if self.field.is_one(c) {
                        // bare monomial
                    } else if needs_parens {
                        write!(f, "({cs})*")?;
                    } else {
                        write!(f, "{cs}*")?;
                    }
                    if e == 1 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "t^{e}")?;
                    }
                }
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        if let Some(n) = self.trunc {
            write!(f, " + O(t^{})", n + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Field {
        Field::rationals()
    }

    fn poly(field: &Field, terms: &[(i64, usize)]) -> TruncSeries {
        let mut s = TruncSeries::zero(field, None);
        for &(c, e) in terms {
            s = s.add(&TruncSeries::monomial(field, field.from_int(c), e));
        }
        s
    }

    #[test]
    fn order_by_inspection() {
        let s = poly(&q(), &[(1, 2), (1, 5)]);
        assert_eq!(s.order(), SeriesOrder::Known(2));
    }

    #[test]
    fn order_of_zero_series_at_truncation() {
        let s = TruncSeries::zero(&q(), Some(10));
        assert_eq!(s.order(), SeriesOrder::AboveTruncation { trunc: Some(10) });
    }

    #[test]
    fn order_of_vanishing_coefficient_mod_three() {
        // 3 t^7 over F_3 is the zero polynomial
        let f3 = Field::prime(3).unwrap();
        let s = poly(&f3, &[(3, 7)]);
        assert_eq!(s.order(), SeriesOrder::AboveTruncation { trunc: None });
    }

    #[test]
    fn compose_identity_is_identity() {
        let s = poly(&q(), &[(1, 2), (-3, 4), (7, 9)]);
        let t = TruncSeries::t(&q());
        assert_eq!(s.compose(&t).unwrap(), s);
    }

    #[test]
    fn compose_char_two_square() {
        // (t + t^3)^2 = t^2 + t^6 over F_2
        let f2 = Field::prime(2).unwrap();
        let s = poly(&f2, &[(1, 2)]);
        let phi = poly(&f2, &[(1, 1), (1, 3)]);
        let r = s.compose(&phi).unwrap();
        assert_eq!(r, poly(&f2, &[(1, 2), (1, 6)]));
    }

    #[test]
    fn compose_square_with_cubic_quartic_tail() {
        // s = t^2, phi = t + c t^3 + c t^4:
        // s(phi) = t^2 + 2c t^4 + 2c t^5 + c^2 t^6 + 2c^2 t^7 + c^2 t^8
        for c in [1i64, 2, 5] {
            let f = q();
            let phi = poly(&f, &[(1, 1), (c, 3), (c, 4)]);
            let s = poly(&f, &[(1, 2)]);
            let got = s.compose(&phi).unwrap();
            let want = poly(
                &f,
                &[(1, 2), (2 * c, 4), (2 * c, 5), (c * c, 6), (2 * c * c, 7), (c * c, 8)],
            );
            assert_eq!(got, want, "c = {c}");
        }
    }

    #[test]
    fn compose_rejects_unit_substitution() {
        let s = poly(&q(), &[(1, 1)]);
        let phi = poly(&q(), &[(1, 0), (1, 1)]);
        assert!(matches!(s.compose(&phi), Err(Error::NotLocal)));
    }

    #[test]
    fn truncation_propagates_through_compose() {
        // s known to 3, phi = t known exactly: result certified to 3 only
        let s = poly(&q(), &[(1, 2)]).clip(3);
        let r = s.compose(&TruncSeries::t(&q())).unwrap();
        assert_eq!(r.trunc(), Some(3));
        // phi of order 2 stretches certification: (3+1)*2-1 = 7
        let phi = poly(&q(), &[(1, 2)]);
        let r = s.compose(&phi).unwrap();
        assert_eq!(r.trunc(), Some(7));
    }

    #[test]
    fn mul_order_adds() {
        let a = poly(&q(), &[(2, 3), (1, 5)]);
        let b = poly(&q(), &[(1, 4), (1, 6)]);
        let p = a.mul(&b);
        assert_eq!(p.order(), SeriesOrder::Known(7));
    }

    #[test]
    fn mul_truncation_rule() {
        let a = poly(&q(), &[(1, 2)]).clip(6); // order 2, trunc 6
        let b = poly(&q(), &[(1, 3)]).clip(9); // order 3, trunc 9
        let p = a.mul(&b);
        // min(6+3, 9+2) = 9
        assert_eq!(p.trunc(), Some(9));
    }

    #[test]
    fn perfect_square_root() {
        let u = poly(&q(), &[(1, 0), (2, 1), (1, 2)]);
        let v = u.nth_root(2, 10).unwrap();
        assert!(v.agrees_with(&poly(&q(), &[(1, 0), (1, 1)])));
    }

    #[test]
    fn root_of_one_is_one() {
        for m in 2..6 {
            let u = poly(&q(), &[(1, 0)]);
            let v = u.nth_root(m, 8).unwrap();
            assert!(v.agrees_with(&poly(&q(), &[(1, 0)])));
        }
    }

    #[test]
    fn cube_root_binomial_series() {
        // (1+t)^(1/3) = 1 + t/3 - t^2/9 + 5 t^3/81 - ...
        let f = q();
        let u = poly(&f, &[(1, 0), (1, 1)]);
        let v = u.nth_root(3, 3).unwrap();
        assert_eq!(v.coeff(0), f.one());
        assert_eq!(v.coeff(1), f.from_ratio(1, 3).unwrap());
        assert_eq!(v.coeff(2), f.from_ratio(-1, 9).unwrap());
        assert_eq!(v.coeff(3), f.from_ratio(5, 81).unwrap());
    }

    #[test]
    fn root_rejected_when_char_divides_index() {
        let f2 = Field::prime(2).unwrap();
        let u = poly(&f2, &[(1, 0), (1, 1)]);
        assert!(matches!(u.nth_root(2, 5), Err(Error::CharacteristicDividesM { p: 2, m: 2 })));
    }

    #[test]
    fn root_cubed_reproduces_input() {
        let f5 = Field::prime(5).unwrap();
        let u = poly(&f5, &[(2, 0), (1, 1), (3, 2), (4, 4)]);
        let v = u.nth_root(3, 12).unwrap();
        assert!(v.pow(3).clip(12).agrees_with(&u.clip(12)));
    }

    #[test]
    fn reversion_inverts_composition() {
        let f = q();
        let s = poly(&f, &[(1, 1), (3, 2), (-2, 3), (1, 5)]);
        let phi = s.reversion(10).unwrap();
        let id = s.compose(&phi).unwrap().clip(10);
        assert!(id.agrees_with(&TruncSeries::t(&f)));
    }

    #[test]
    fn reversion_in_char_two() {
        let f2 = Field::prime(2).unwrap();
        let s = poly(&f2, &[(1, 1), (1, 2), (1, 4)]);
        let phi = s.reversion(9).unwrap();
        let id = s.compose(&phi).unwrap().clip(9);
        assert!(id.agrees_with(&TruncSeries::t(&f2)));
    }

    #[test]
    fn jet_beyond_truncation_errors() {
        let s = poly(&q(), &[(1, 2)]).clip(4);
        assert!(matches!(s.jet(6), Err(Error::JetExceedsTruncation { .. })));
        assert!(s.jet(4).is_ok());
    }
}
