//! Value semigroup of a branch: the set of orders ord g(x(t), y(t)) achieved
//! by the local ring, with conductor, delta invariant, and minimal
//! generators.
//!
//! The computation maintains an order-reduced basis of the subalgebra
//! generated by x(t) and y(t): pairwise products are reduced against the
//! basis by scalar elimination of matching leading orders, and every new
//! order is adopted.  When no reduction ever discarded a nonzero remainder
//! the member set is complete; otherwise the conductor is accepted only once
//! (a) the members contain a run of consecutive integers of length equal to
//! the smallest generator ending just above the conductor, (b) recomputation
//! at doubled truncation gives the same answer, and (c) the symmetry c = 2*delta
//! holds.

use std::collections::BTreeMap;

use crate::bivar::BivarPoly;
use crate::error::{Error, Result};
use crate::param::Branch;
use crate::series::TruncSeries;

/// One element of the order-reduced subalgebra basis.
#[derive(Clone, Debug)]
pub struct BasisElem {
    /// Monic series of order `order`.
    pub series: TruncSeries,
    /// Polynomial expression of the element in the branch coordinates.
    pub rep: BivarPoly,
    pub order: usize,
}

/// Order-reduced basis of the coordinate subalgebra, up to a truncation.
#[derive(Clone, Debug)]
pub struct OrderBasis {
    pub elems: BTreeMap<usize, BasisElem>,
    /// Orders certified: every achieved order <= trunc appears in `elems`
    /// unless `lossy` is set.
    pub trunc: usize,
    /// A nonzero reduction remainder escaped beyond the truncation.
    pub lossy: bool,
}

impl OrderBasis {
    pub fn orders(&self) -> Vec<usize> {
        self.elems.keys().copied().collect()
    }

    pub fn element_of_order(&self, order: usize) -> Option<&BasisElem> {
        self.elems.get(&order)
    }
}

/// Build the order-reduced basis up to `trunc`.
pub fn order_basis(branch: &Branch, trunc: usize) -> OrderBasis {
    let field = branch.field().clone();
    let mut basis: BTreeMap<usize, BasisElem> = BTreeMap::new();
    let mut lossy = false;
    // insertion queue of (series, representation) products to reduce
    let x = branch.x.clip(trunc);
    let y = branch.y.clip(trunc);
    let mut queue: Vec<(TruncSeries, BivarPoly)> = vec![
        (x.clone(), BivarPoly::x(&field)),
        (y.clone(), BivarPoly::y(&field)),
    ];
    let mut present = vec![false; trunc + 1];
    // skip products that can only land in a fully saturated tail: they
    // reduce against existing orders and cannot contribute new ones
    let saturated_from = |present: &[bool], s: usize| -> bool {
        (s..=trunc).all(|o| present[o])
    };
    while let Some((mut s, mut rep)) = queue.pop() {
        // reduce against the basis
        let order = loop {
            match s.order().known() {
                None => {
                    if !s.is_exactly_zero() {
                        // remainder invisible within truncation
                        lossy = true;
                    }
                    break None;
                }
                Some(o) if o > trunc => {
                    lossy = true;
                    break None;
                }
                Some(o) => match basis.get(&o) {
                    Some(b) => {
                        let lc = s.coeff(o);
                        s = s.sub(&b.series.scale(&lc));
                        rep = rep.sub(&b.rep.scale(&lc));
                    }
                    None => break Some(o),
                },
            }
        };
        let Some(order) = order else { continue };
        // normalize monic
        let lc = s.coeff(order);
        let inv = field.inv(&lc).unwrap();
        let s = s.scale(&inv).clip(trunc);
        let rep = rep.scale(&inv);
        // enqueue products with everything already present (including self)
        for b in basis.values() {
            if order + b.order <= trunc && !saturated_from(&present, order + b.order) {
                queue.push((s.mul(&b.series).clip(trunc), rep.mul(&b.rep)));
            }
        }
        if 2 * order <= trunc && !saturated_from(&present, 2 * order) {
            queue.push((s.mul(&s).clip(trunc), rep.mul(&rep)));
        }
        present[order] = true;
        basis.insert(order, BasisElem { series: s, rep, order });
    }
    OrderBasis { elems: basis, trunc, lossy }
}

/// The value semigroup of a branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueSemigroup {
    /// Achieved orders from 0 through conductor + multiplicity.
    pub members: Vec<usize>,
    pub conductor: usize,
    /// Number of gaps; equals conductor/2 for a plane branch.
    pub delta: usize,
    pub generators: Vec<usize>,
    /// Smallest nonzero member.
    pub multiplicity: usize,
}

impl ValueSemigroup {
    pub fn contains(&self, v: usize) -> bool {
        v >= self.conductor || self.members.binary_search(&v).is_ok()
    }

    pub fn gaps(&self) -> Vec<usize> {
        (0..self.conductor).filter(|&v| !self.contains(v)).collect()
    }
}

struct Attempt {
    members: Vec<usize>,
    conductor: Option<usize>,
    gcd: usize,
    lossy: bool,
}

fn attempt(branch: &Branch, trunc: usize) -> Attempt {
    let basis = order_basis(branch, trunc);
    let mut members: Vec<usize> = vec![0];
    members.extend(basis.orders());
    let gcd = members.iter().skip(1).fold(0usize, |g, &m| num::integer::gcd(g, m));
    // candidate conductor: smallest member c <= trunc with c-1 absent and a
    // run c..c+gmin-1 in the semigroup.  Members below the truncation are
    // exact; beyond it the run may use sums forced by additivity.
    let gmin = members.get(1).copied().unwrap_or(0);
    let mut conductor = None;
    if gmin >= 1 {
        let ext_bound = trunc + 2 * gmin + 2;
        let mut forced = vec![false; ext_bound + 1];
        for &m in &members {
            forced[m] = true;
        }
        for v in 1..=ext_bound {
            if forced[v] {
                continue;
            }
            for &m in members.iter().skip(1) {
                if m <= v && forced[v - m] {
                    forced[v] = true;
                    break;
                }
            }
        }
        let exact = |v: usize| members.binary_search(&v).is_ok();
        'outer: for &c in &members {
            if c > trunc {
                break;
            }
            if c > 0 && exact(c - 1) {
                continue;
            }
            for v in c..c + gmin {
                if !forced[v] {
                    continue 'outer;
                }
            }
            conductor = Some(c);
            break;
        }
    }
    Attempt { members, conductor, gcd, lossy: basis.lossy }
}

/// Compute the value semigroup of a branch.
///
/// `hint` suggests an initial truncation.  For exact polynomial inputs the
/// truncation doubles automatically until the conductor is certified; for
/// truncated inputs the available precision is the ceiling.
pub fn value_semigroup(branch: &Branch, hint: Option<usize>) -> Result<ValueSemigroup> {
    let input_cap = branch.x.trunc().into_iter().chain(branch.y.trunc()).min();
    // start from a small window and escalate: the conductor is intrinsic and
    // usually far below the coordinate degrees
    let start = hint
        .or(input_cap)
        .unwrap_or_else(|| {
            (2 * (branch.x.stored_degree().unwrap_or(1)
                + branch.y.stored_degree().unwrap_or(1))
                + 8)
                .min(24)
        })
        .max(4);
    // Hard cap against non-primitive runaways on exact inputs.  Orders below
    // the cap are computed exactly, so a primitive branch whose conductor
    // region fits under the cap always certifies; the cap only bounds how
    // far we search before declaring a shared order factor structural.
    let dx = branch.x.stored_degree().unwrap_or(1);
    let dy = branch.y.stored_degree().unwrap_or(1);
    let hard_cap = match input_cap {
        Some(t) => t,
        None => (2 * (dx + 1) * (dy + 1)).max(start).max(64),
    };

    let mut trunc = start.min(hard_cap);
    loop {
        let a = attempt(branch, trunc);
        if a.members.len() == 1 {
            // no finite orders at all: the branch maps into t^{>trunc}
            return Err(Error::TruncationTooSmall { suggested: trunc * 2 });
        }
        if !a.lossy && a.gcd > 1 {
            // complete member list with gcd > 1: certified non-primitive
            return Err(Error::NotPrimitive { gcd: a.gcd });
        }
        if a.gcd > 1 {
            // inconclusive: orders found so far share a factor
            if trunc < hard_cap {
                trunc = (trunc * 2).min(hard_cap);
                continue;
            }
            // a truncated input cannot certify non-primitivity
            return match input_cap {
                None => Err(Error::NotPrimitive { gcd: a.gcd }),
                Some(t) => Err(Error::TruncationTooSmall { suggested: 2 * t.max(1) }),
            };
        }
        if let Some(c) = a.conductor {
            // The member window below the truncation is exact (reductions
            // only ever raise orders, so orders <= trunc are all witnessed
            // once every product with order sum <= trunc is processed).
            // Certification therefore asks for the conductor run, closure
            // under addition within the window, and the symmetry checksum.
            let closed = {
                let win = &a.members;
                win.iter().all(|&x| {
                    win.iter().all(|&y| {
                        x + y > trunc || win.binary_search(&(x + y)).is_ok()
                    })
                })
            };
            let certified = closed;
            if certified {
                let members: Vec<usize> = a.members;
                let gmin = members[1];
                let delta = (0..c).filter(|v| members.binary_search(v).is_err()).count();
                if c != 2 * delta {
                    // the symmetry checksum failed: data was insufficient
                    if trunc < hard_cap {
                        trunc = (trunc * 2).min(hard_cap);
                        continue;
                    }
                    return Err(Error::TruncationTooSmall { suggested: trunc * 2 });
                }
                // window through c + gmin, completing the certified tail
                let window: Vec<usize> = (0..=c + gmin)
                    .filter(|&v| v >= c || members.binary_search(&v).is_ok())
                    .collect();
                let generators = minimal_generators(&window, c);
                return Ok(ValueSemigroup {
                    members: window,
                    conductor: c,
                    delta,
                    generators,
                    multiplicity: gmin,
                });
            }
        }
        if trunc >= hard_cap {
            return Err(Error::TruncationTooSmall { suggested: hard_cap * 2 });
        }
        trunc = (trunc * 2).min(hard_cap);
    }
}

/// Minimal generating set of a numerical semigroup given its members up to
/// the conductor region.
fn minimal_generators(members: &[usize], conductor: usize) -> Vec<usize> {
    let mut gens: Vec<usize> = Vec::new();
    let bound = conductor + members.get(1).copied().unwrap_or(1);
    let mut generated = vec![false; bound + 1];
    generated[0] = true;
    for &m in members.iter().skip(1) {
        if m > bound {
            break;
        }
        if !generated[m] {
            gens.push(m);
            // re-sieve
            let mut reach = vec![false; bound + 1];
            reach[0] = true;
            for v in 0..=bound {
                if reach[v] {
                    for &g in &gens {
                        if v + g <= bound {
                            reach[v + g] = true;
                        }
                    }
                }
            }
            generated = reach;
        }
    }
    gens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

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

    fn branch(field: &Field, x: &[(i64, usize)], y: &[(i64, usize)]) -> Branch {
        Branch::new(poly(field, x), poly(field, y)).unwrap()
    }

    /// Independent oracle: achieved orders as pivot positions of the matrix
    /// of monomial evaluations, by exact Gaussian elimination.
    fn orders_by_rank_oracle(b: &Branch, bound: usize) -> Vec<usize> {
        let field = b.field().clone();
        let x = b.x.clip(bound);
        let y = b.y.clip(bound);
        // all monomials x^i y^j with image order <= bound
        let mut rows: Vec<Vec<crate::field::FieldElem>> = Vec::new();
        let ox = x.order_lower_bound().max(1);
        let oy = y.order_lower_bound().max(1);
        for i in 0..=bound / ox {
            for j in 0..=bound / oy {
                if i * ox + j * oy > bound {
                    continue;
                }
                let s = x.pow(i).mul(&y.pow(j)).clip(bound);
                rows.push((0..=bound).map(|e| s.coeff(e)).collect());
            }
        }
        // row echelon; record pivot columns
        let mut pivots = Vec::new();
        let mut used = vec![false; rows.len()];
        for col in 0..=bound {
            let mut found = None;
            for (r, row) in rows.iter().enumerate() {
                if !used[r] && !field.is_zero(&row[col]) && row[..col].iter().all(|c| field.is_zero(c)) {
                    found = Some(r);
                    break;
                }
            }
            if let Some(r) = found {
                used[r] = true;
                pivots.push(col);
                let lead = rows[r][col].clone();
                let inv = field.inv(&lead).unwrap();
                let base: Vec<_> = rows[r].iter().map(|c| field.mul(c, &inv)).collect();
                for (r2, row2) in rows.iter_mut().enumerate() {
                    if r2 != r && !field.is_zero(&row2[col]) {
                        let f = row2[col].clone();
                        for (c2, bc) in row2.iter_mut().zip(&base) {
                            *c2 = field.sub(c2, &field.mul(bc, &f));
                        }
                    }
                }
            }
        }
        pivots
    }

    #[test]
    fn cusp_semigroup() {
        let sg = value_semigroup(&branch(&q(), &[(1, 2)], &[(1, 3)]), None).unwrap();
        assert_eq!(sg.conductor, 2);
        assert_eq!(sg.delta, 1);
        assert_eq!(sg.gaps(), vec![1]);
        assert_eq!(sg.generators, vec![2, 3]);
    }

    #[test]
    fn quartic_sextic_branch_semigroup() {
        // (t^4, t^6 + t^7): the order-13 element comes from y^2 - x^3
        let sg = value_semigroup(&branch(&q(), &[(1, 4)], &[(1, 6), (1, 7)]), None).unwrap();
        assert_eq!(sg.conductor, 16);
        assert_eq!(sg.delta, 8);
        let expect: Vec<usize> = vec![0, 4, 6, 8, 10, 12, 13, 14, 16, 17, 18, 19, 20];
        assert_eq!(sg.members, expect);
        assert_eq!(sg.generators, vec![4, 6, 13]);
        // cross-check the members against the rank oracle
        let oracle = orders_by_rank_oracle(&branch(&q(), &[(1, 4)], &[(1, 6), (1, 7)]), 17);
        let got: Vec<usize> = sg.members.iter().copied().filter(|&v| v <= 17).collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn smooth_branch_semigroup() {
        let sg = value_semigroup(&branch(&q(), &[(1, 1)], &[(1, 7)]), None).unwrap();
        assert_eq!(sg.conductor, 0);
        assert_eq!(sg.delta, 0);
        assert_eq!(sg.multiplicity, 1);
    }

    #[test]
    fn semigroup_of_translated_smooth_branch() {
        // (t + t^2, t^3): smooth in disguise
        let sg = value_semigroup(&branch(&q(), &[(1, 1), (1, 2)], &[(1, 3)]), None).unwrap();
        assert_eq!(sg.conductor, 0);
        assert_eq!(sg.delta, 0);
    }

    #[test]
    fn non_primitive_rejected() {
        match value_semigroup(&branch(&q(), &[(1, 2)], &[(1, 4)]), None) {
            Err(Error::NotPrimitive { gcd: 2 }) => {}
            other => panic!("expected NotPrimitive, got {other:?}"),
        }
    }

    #[test]
    fn non_primitive_with_unit_tail_rejected() {
        // (t^2 + t^3, t^4 + 2 t^5 + t^6) = (s, s^2) for s = t^2 + t^3
        let sg = value_semigroup(
            &branch(&q(), &[(1, 2), (1, 3)], &[(1, 4), (2, 5), (1, 6)]),
            None,
        );
        match sg {
            Err(Error::NotPrimitive { gcd: 2 }) => {}
            other => panic!("expected NotPrimitive, got {other:?}"),
        }
    }

    #[test]
    fn char_two_a4_semigroup() {
        let f2 = Field::prime(2).unwrap();
        let sg = value_semigroup(&branch(&f2, &[(1, 2), (1, 3)], &[(1, 5)]), None).unwrap();
        assert_eq!(sg.conductor, 4);
        assert_eq!(sg.generators, vec![2, 5]);
        assert_eq!(sg.delta, 2);
    }

    #[test]
    fn semigroup_symmetry_on_table_shapes() {
        // c = 2*delta is asserted internally; touching several shapes here
        for (xs, ys) in [
            (vec![(1i64, 2usize)], vec![(1i64, 9usize)]),
            (vec![(1, 3)], vec![(1, 5), (1, 7)]),
            (vec![(1, 4)], vec![(1, 5), (1, 6)]),
            (vec![(1, 4)], vec![(1, 7), (1, 9)]),
            (vec![(1, 4)], vec![(1, 6), (1, 9)]),
        ] {
            let sg = value_semigroup(&branch(&q(), &xs, &ys), None).unwrap();
            assert_eq!(sg.conductor, 2 * sg.delta, "branch {xs:?} {ys:?}");
        }
    }

    #[test]
    fn truncated_input_insufficient_data_errors() {
        let f = q();
        let b = Branch::new(
            poly(&f, &[(1, 4)]).clip(5),
            poly(&f, &[(1, 6), (1, 7)]).clip(5),
        )
        .unwrap();
        assert!(matches!(
            value_semigroup(&b, None),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn order_basis_reps_evaluate_to_their_series() {
        let b = branch(&q(), &[(1, 4)], &[(1, 6), (1, 7)]);
        let basis = order_basis(&b, 20);
        for elem in basis.elems.values() {
            let eval = elem.rep.substitute(&b.x, &b.y).clip(20);
            assert!(eval.agrees_with(&elem.series), "order {}", elem.order);
        }
        assert!(basis.element_of_order(13).is_some());
    }
}
