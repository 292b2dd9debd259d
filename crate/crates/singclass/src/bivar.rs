//! Bivariate polynomials over a coefficient field, with an optional
//! total-degree cap, substitution of series coordinates, and a Sylvester
//! resultant computed by fraction-free (Bareiss) elimination.
//!
//! Coordinate changes of the plane live here as pairs of polynomials; the
//! total-degree cap keeps compositions bounded.  A cap of D is sound for our
//! uses because substituted coordinates always have order >= 1, so dropped
//! terms of total degree > D only affect series orders > D.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::series::TruncSeries;

#[derive(Clone, PartialEq, Eq)]
pub struct BivarPoly {
    field: Field,
    /// (i, j) -> coefficient of x^i y^j; zeros are never stored.
    terms: BTreeMap<(usize, usize), FieldElem>,
    /// Terms of total degree > cap are unknown/dropped; None = exact.
    deg_cap: Option<usize>,
}

impl BivarPoly {
    pub fn zero(field: &Field) -> BivarPoly {
        BivarPoly { field: field.clone(), terms: BTreeMap::new(), deg_cap: None }
    }

    pub fn monomial(field: &Field, c: FieldElem, i: usize, j: usize) -> BivarPoly {
        let mut terms = BTreeMap::new();
        if !field.is_zero(&c) {
            terms.insert((i, j), c);
        }
        BivarPoly { field: field.clone(), terms, deg_cap: None }
    }

    pub fn x(field: &Field) -> BivarPoly {
        Self::monomial(field, field.one(), 1, 0)
    }

    pub fn y(field: &Field) -> BivarPoly {
        Self::monomial(field, field.one(), 0, 1)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &FieldElem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn deg_cap(&self) -> Option<usize> {
        self.deg_cap
    }

    pub fn with_cap(mut self, cap: Option<usize>) -> BivarPoly {
        self.deg_cap = match (self.deg_cap, cap) {
            (None, c) => c,
            (c, None) => c,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        if let Some(d) = self.deg_cap {
            self.terms.retain(|&(i, j), _| i + j <= d);
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: usize, j: usize) -> FieldElem {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(|| self.field.zero())
    }

    /// Minimal total degree of a stored term (the multiplicity mt).
    pub fn min_total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|&(i, j)| i + j).min()
    }

    pub fn max_total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    pub fn degree_x(&self) -> Option<usize> {
        self.terms.keys().map(|&(i, _)| i).max()
    }

    pub fn degree_y(&self) -> Option<usize> {
        self.terms.keys().map(|&(_, j)| j).max()
    }

    /// Coefficients of the linear part (x-coefficient, y-coefficient).
    pub fn linear_part(&self) -> (FieldElem, FieldElem) {
        (self.coeff(1, 0), self.coeff(0, 1))
    }

    pub fn constant_term(&self) -> FieldElem {
        self.coeff(0, 0)
    }

    fn join_cap(&self, other: &BivarPoly) -> Option<usize> {
        match (self.deg_cap, other.deg_cap) {
            (None, c) | (c, None) => c,
            (Some(a), Some(b)) => Some(a.min(b)),
        }
    }

    pub fn add(&self, other: &BivarPoly) -> BivarPoly {
        assert_eq!(self.field, other.field);
        let mut terms = self.terms.clone();
        for (&k, c) in &other.terms {
            let cur = terms.remove(&k).unwrap_or_else(|| self.field.zero());
            let s = self.field.add(&cur, c);
            if !self.field.is_zero(&s) {
                terms.insert(k, s);
            }
        }
        BivarPoly { field: self.field.clone(), terms, deg_cap: self.join_cap(other) }
            .with_cap(None)
    }

    pub fn neg(&self) -> BivarPoly {
        BivarPoly {
            field: self.field.clone(),
            terms: self.terms.iter().map(|(&k, c)| (k, self.field.neg(c))).collect(),
            deg_cap: self.deg_cap,
        }
    }

    pub fn sub(&self, other: &BivarPoly) -> BivarPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &FieldElem) -> BivarPoly {
        if self.field.is_zero(c) {
            return BivarPoly::zero(&self.field).with_cap(self.deg_cap);
        }
        BivarPoly {
            field: self.field.clone(),
            terms: self.terms.iter().map(|(&k, a)| (k, self.field.mul(a, c))).collect(),
            deg_cap: self.deg_cap,
        }
    }

    pub fn mul(&self, other: &BivarPoly) -> BivarPoly {
        assert_eq!(self.field, other.field);
        let cap = self.join_cap(other);
        let mut terms: BTreeMap<(usize, usize), FieldElem> = BTreeMap::new();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &other.terms {
                let key = (i1 + i2, j1 + j2);
                if let Some(d) = cap {
                    if key.0 + key.1 > d {
                        continue;
                    }
                }
                let prod = self.field.mul(c1, c2);
                let cur = terms.remove(&key).unwrap_or_else(|| self.field.zero());
                let s = self.field.add(&cur, &prod);
                if !self.field.is_zero(&s) {
                    terms.insert(key, s);
                }
            }
        }
        BivarPoly { field: self.field.clone(), terms, deg_cap: cap }
    }

    pub fn pow(&self, e: usize) -> BivarPoly {
        let mut acc = BivarPoly::monomial(&self.field, self.field.one(), 0, 0)
            .with_cap(self.deg_cap);
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

    /// Substitute series coordinates: g(x(t), y(t)).
    ///
    /// Truncation combines the native series propagation with the cap bound:
    /// dropped terms of total degree > D contribute only at orders
    /// >= (D+1) * min(ord x, ord y).
    pub fn substitute(&self, x: &TruncSeries, y: &TruncSeries) -> TruncSeries {
        assert_eq!(self.field, *x.field());
        assert_eq!(self.field, *y.field());
        let cap_bound = match self.deg_cap {
            None => None,
            Some(d) => {
                let mo = x.order_lower_bound().min(y.order_lower_bound());
                Some((d + 1).saturating_mul(mo).saturating_sub(1))
            }
        };
        // cache powers
        let dx = self.degree_x().unwrap_or(0);
        let dy = self.degree_y().unwrap_or(0);
        let mut xp: Vec<TruncSeries> = Vec::with_capacity(dx + 1);
        let mut yp: Vec<TruncSeries> = Vec::with_capacity(dy + 1);
        let one = TruncSeries::monomial(&self.field, self.field.one(), 0);
        xp.push(one.clone());
        for i in 1..=dx {
            let prev = xp[i - 1].clone();
            xp.push(prev.mul(x));
        }
        yp.push(one);
        for j in 1..=dy {
            let prev = yp[j - 1].clone();
            yp.push(prev.mul(y));
        }
        let mut acc: Option<TruncSeries> = None;
        for (&(i, j), c) in &self.terms {
            let term = xp[i].mul(&yp[j]).scale(c);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        let mut out = acc.unwrap_or_else(|| TruncSeries::zero(&self.field, None));
        if let Some(b) = cap_bound {
            out = out.clip(b);
        }
        out
    }

    /// Substitute polynomial coordinates: g(X(x,y), Y(x,y)).
    pub fn substitute_poly(&self, x_image: &BivarPoly, y_image: &BivarPoly) -> BivarPoly {
        let cap = match (self.deg_cap, x_image.join_cap(y_image)) {
            (None, c) | (c, None) => c,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        let mut acc = BivarPoly::zero(&self.field).with_cap(cap);
        let dx = self.degree_x().unwrap_or(0);
        let dy = self.degree_y().unwrap_or(0);
        let one = BivarPoly::monomial(&self.field, self.field.one(), 0, 0).with_cap(cap);
        let mut xp = vec![one.clone()];
        for i in 1..=dx {
            let prev = xp[i - 1].clone();
            xp.push(prev.mul(x_image));
        }
        let mut yp = vec![one];
        for j in 1..=dy {
            let prev = yp[j - 1].clone();
            yp.push(prev.mul(y_image));
        }
        for (&(i, j), c) in &self.terms {
            acc = acc.add(&xp[i].mul(&yp[j]).scale(c));
        }
        acc
    }

    /// Exact division by a factor (lexicographic leading-term elimination).
    /// Panics if the division is not exact; used only where exactness is
    /// guaranteed (Bareiss pivots).
    fn exact_div(&self, divisor: &BivarPoly) -> BivarPoly {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let lead = |p: &BivarPoly| -> ((usize, usize), FieldElem) {
            let (&k, c) = p.terms.iter().next_back().unwrap();
            (k, c.clone())
        };
        let (dk, dc) = lead(divisor);
        let dc_inv = self.field.inv(&dc).unwrap();
        let mut rem = self.clone();
        let mut quot = BivarPoly::zero(&self.field);
        while !rem.is_zero() {
            let (rk, rc) = lead(&rem);
            assert!(rk.0 >= dk.0 && rk.1 >= dk.1, "inexact polynomial division");
            let mk = (rk.0 - dk.0, rk.1 - dk.1);
            let mc = self.field.mul(&rc, &dc_inv);
            let mono = BivarPoly::monomial(&self.field, mc, mk.0, mk.1);
            quot = quot.add(&mono);
            rem = rem.sub(&mono.mul(divisor));
        }
        quot
    }

    /// Normalize so the lexicographically-last term has coefficient 1.
    pub fn monic_normalize(&self) -> BivarPoly {
        match self.terms.iter().next_back() {
            None => self.clone(),
            Some((_, c)) => self.scale(&self.field.inv(c).unwrap()),
        }
    }

    pub fn map_field(&self, hom: &crate::field::FieldHom) -> BivarPoly {
        BivarPoly {
            field: hom.dst.clone(),
            terms: self.terms.iter().map(|(&k, c)| (k, hom.map(c))).collect(),
            deg_cap: self.deg_cap,
        }
    }
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // print in a stable, human order: by total degree, then x-degree
        let mut keys: Vec<&(usize, usize)> = self.terms.keys().collect();
        keys.sort_by_key(|&&(i, j)| (i + j, std::cmp::Reverse(i)));
        for &&(i, j) in &keys {
            let c = &self.terms[&(i, j)];
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = self.field.format_elem(c);
            let needs_parens = cs.contains('+') || cs.contains(' ');
            let mono = match (i, j) {
                (0, 0) => String::new(),
                (i, 0) => {
                    if i == 1 {
                        "x".into()
                    } else {
                        format!("x^{i}")
                    }
                }
                (0, j) => {
                    if j == 1 {
                        "y".into()
                    } else {
                        format!("y^{j}")
                    }
                }
                (i, j) => {
                    let xs = if i == 1 { "x".into() } else { format!("x^{i}") };
                    let ys = if j == 1 { "y".into() } else { format!("y^{j}") };
                    format!("{xs}*{ys}")
                }
            };
            if mono.is_empty() {
                write!(f, "{cs}")?;
            } else if self.field.is_one(c) {
                write!(f, "{mono}")?;
            } else if needs_parens {
                write!(f, "({cs})*{mono}")?;
            } else {
                write!(f, "{cs}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A polynomial in the eliminated variable t with BivarPoly coefficients,
/// low degree first.
pub type TPoly = Vec<BivarPoly>;

fn tpoly_degree(f: &TPoly) -> Option<usize> {
    f.iter().rposition(|c| !c.is_zero())
}

/// Resultant of f and g with respect to t, as the determinant of the
/// Sylvester matrix, computed exactly by fraction-free elimination.
pub fn resultant_t(f: &TPoly, g: &TPoly, field: &Field) -> Result<BivarPoly> {
    let df = tpoly_degree(f).ok_or(Error::ZeroDegreeInput)?;
    let dg = tpoly_degree(g).ok_or(Error::ZeroDegreeInput)?;
    if df == 0 || dg == 0 {
        return Err(Error::ZeroDegreeInput);
    }
    let n = df + dg;
    // Sylvester matrix: dg rows of f's coefficients, df rows of g's
    let zero = BivarPoly::zero(field);
    let mut m: Vec<Vec<BivarPoly>> = vec![vec![zero.clone(); n]; n];
    for row in 0..dg {
        for (i, c) in f.iter().enumerate().take(df + 1) {
            m[row][row + df - i] = c.clone();
        }
    }
    for row in 0..df {
        for (i, c) in g.iter().enumerate().take(dg + 1) {
            m[dg + row][row + dg - i] = c.clone();
        }
    }
    bareiss_determinant(m, field)
}

/// Fraction-free determinant of a matrix of polynomials.
fn bareiss_determinant(mut m: Vec<Vec<BivarPoly>>, field: &Field) -> Result<BivarPoly> {
    let n = m.len();
    if n == 0 {
        return Ok(BivarPoly::monomial(field, field.one(), 0, 0));
    }
    let mut sign_flip = false;
    let mut prev_pivot = BivarPoly::monomial(field, field.one(), 0, 0);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign_flip = !sign_flip;
                }
                None => return Ok(BivarPoly::zero(field)),
            }
        }
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let a = pivot.mul(&m[i][j]);
                let b = m[i][k].mul(&m[k][j]);
                m[i][j] = a.sub(&b).exact_div(&prev_pivot);
            }
            m[i][k] = BivarPoly::zero(field);
        }
        prev_pivot = pivot;
    }
    let mut det = m[n - 1][n - 1].clone();
    if sign_flip {
        det = det.neg();
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Field {
        Field::rationals()
    }

    /// t^e with integer coefficient, as a TPoly entry helper.
    fn tpoly_from(field: &Field, coeffs: &[BivarPoly]) -> TPoly {
        let _ = field;
        coeffs.to_vec()
    }

    /// Independent oracle: determinant by cofactor expansion (small matrices).
    fn cofactor_det(m: &[Vec<BivarPoly>], field: &Field) -> BivarPoly {
        let n = m.len();
        if n == 0 {
            return BivarPoly::monomial(field, field.one(), 0, 0);
        }
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = BivarPoly::zero(field);
        for (col, entry) in m[0].iter().enumerate() {
            if entry.is_zero() {
                continue;
            }
            let minor: Vec<Vec<BivarPoly>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != col)
                        .map(|(_, e)| e.clone())
                        .collect()
                })
                .collect();
            let sub = cofactor_det(&minor, field);
            let term = entry.mul(&sub);
            acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    fn sylvester(f: &TPoly, g: &TPoly, field: &Field) -> Vec<Vec<BivarPoly>> {
        let df = tpoly_degree(f).unwrap();
        let dg = tpoly_degree(g).unwrap();
        let n = df + dg;
        let zero = BivarPoly::zero(field);
        let mut m = vec![vec![zero; n]; n];
        for row in 0..dg {
            for (i, c) in f.iter().enumerate().take(df + 1) {
                m[row][row + df - i] = c.clone();
            }
        }
        for row in 0..df {
            for (i, c) in g.iter().enumerate().take(dg + 1) {
                m[dg + row][row + dg - i] = c.clone();
            }
        }
        m
    }

    fn up_to_sign_eq(a: &BivarPoly, b: &BivarPoly) -> bool {
        *a == *b || *a == b.neg()
    }

    #[test]
    fn resultant_cusp_implicitization() {
        // Res_t(x - t^2, y - t^3) = +-(y^2 - x^3); 5x5 determinant checked
        // against the cofactor-expansion oracle.
        let f = q();
        let x = BivarPoly::x(&f);
        let y = BivarPoly::y(&f);
        let neg1 = BivarPoly::monomial(&f, f.from_int(-1), 0, 0);
        let zero = BivarPoly::zero(&f);
        // x - t^2 : [x, 0, -1]
        let fx = tpoly_from(&f, &[x.clone(), zero.clone(), neg1.clone()]);
        // y - t^3 : [y, 0, 0, -1]
        let gy = tpoly_from(&f, &[y.clone(), zero.clone(), zero.clone(), neg1.clone()]);
        let res = resultant_t(&fx, &gy, &f).unwrap();
        let oracle = cofactor_det(&sylvester(&fx, &gy, &f), &f);
        assert_eq!(res, oracle);
        let expected = y.pow(2).sub(&x.pow(3));
        assert!(up_to_sign_eq(&res, &expected), "got {res}");
    }

    #[test]
    fn resultant_linear_elimination() {
        let f = q();
        let x = BivarPoly::x(&f);
        let y = BivarPoly::y(&f);
        let neg1 = BivarPoly::monomial(&f, f.from_int(-1), 0, 0);
        let fx = vec![x.clone(), neg1.clone()];
        let gy = vec![y.clone(), neg1.clone()];
        let res = resultant_t(&fx, &gy, &f).unwrap();
        let expected = y.sub(&x);
        assert!(up_to_sign_eq(&res, &expected), "got {res}");
    }

    #[test]
    fn resultant_e6_implicitization() {
        // Res_t(x - t^3, y - t^4) = +-(y^3 - x^4); 7x7 oracle cross-check.
        let f = q();
        let x = BivarPoly::x(&f);
        let y = BivarPoly::y(&f);
        let neg1 = BivarPoly::monomial(&f, f.from_int(-1), 0, 0);
        let zero = BivarPoly::zero(&f);
        let fx = vec![x.clone(), zero.clone(), zero.clone(), neg1.clone()];
        let gy = vec![y.clone(), zero.clone(), zero.clone(), zero.clone(), neg1.clone()];
        let res = resultant_t(&fx, &gy, &f).unwrap();
        let oracle = cofactor_det(&sylvester(&fx, &gy, &f), &f);
        assert_eq!(res, oracle);
        let expected = y.pow(3).sub(&x.pow(4));
        assert!(up_to_sign_eq(&res, &expected), "got {res}");
    }

    #[test]
    fn resultant_vanishes_on_common_factor() {
        // (t - x)*(t - 1) and (t - x)*(t - 2) share the factor t - x.
        let f = q();
        let x = BivarPoly::x(&f);
        let one = BivarPoly::monomial(&f, f.one(), 0, 0);
        let c = |n: i64| BivarPoly::monomial(&f, f.from_int(n), 0, 0);
        // (t - x)(t - a) = t^2 - (x + a) t + a x
        let make = |a: i64| {
            vec![x.scale(&f.from_int(a)), x.neg().sub(&c(a)), one.clone()]
        };
        let res = resultant_t(&make(1), &make(2), &f).unwrap();
        assert!(res.is_zero(), "got {res}");
    }

    #[test]
    fn resultant_rejects_degree_zero() {
        let f = q();
        let x = BivarPoly::x(&f);
        let fx = vec![x.clone()];
        let gy = vec![BivarPoly::y(&f), BivarPoly::monomial(&f, f.from_int(-1), 0, 0)];
        assert!(matches!(resultant_t(&fx, &gy, &f), Err(Error::ZeroDegreeInput)));
    }

    #[test]
    fn substitute_along_cusp() {
        // y^2 - x^3 vanishes exactly on (t^2, t^3)
        let f = q();
        let g = BivarPoly::y(&f).pow(2).sub(&BivarPoly::x(&f).pow(3));
        let x = TruncSeries::monomial(&f, f.one(), 2);
        let y = TruncSeries::monomial(&f, f.one(), 3);
        let s = g.substitute(&x, &y);
        assert!(s.is_exactly_zero());
    }

    #[test]
    fn substitute_reads_order() {
        // x - y^5 along (t^3, t) has order 3
        let f = q();
        let g = BivarPoly::x(&f).sub(&BivarPoly::y(&f).pow(5));
        let x = TruncSeries::monomial(&f, f.one(), 3);
        let y = TruncSeries::monomial(&f, f.one(), 1);
        let s = g.substitute(&x, &y);
        assert_eq!(s.order().known(), Some(3));
        assert_eq!(s.coeff(3), f.one());
        assert_eq!(s.coeff(5), f.from_int(-1));
    }

    #[test]
    fn cap_drops_high_terms_but_tracks_truncation() {
        let f = q();
        let g = BivarPoly::x(&f).pow(3).add(&BivarPoly::y(&f)).with_cap(Some(2));
        // x^3 has total degree 3 > 2: dropped
        assert_eq!(g.num_terms(), 1);
        let x = TruncSeries::monomial(&f, f.one(), 2);
        let y = TruncSeries::monomial(&f, f.one(), 3);
        let s = g.substitute(&x, &y);
        // dropped terms enter at order >= (2+1)*2 = 6, so certified through 5
        assert_eq!(s.trunc(), Some(5));
    }
}
