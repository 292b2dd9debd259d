//! Numerical invariants of reduced parametrized germs: intersection
//! multiplicities, the per-branch conductor vector, the total delta
//! invariant, maximal contact multiplicity, and the determinacy bound.
//!
//! Conventions: for branches f_i, f_j with implicit equations g_i, g_j,
//!   i(f_i, f_j) = ord g_j(x_i(t), y_i(t)),
//! the conductor vector satisfies c_i = c(f_i) + sum_{j != i} i(f_i, f_j),
//! and |c| = 2 * delta.

use crate::classify::implicitize;
use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::param::{Branch, Parametrization};
use crate::semigroup::value_semigroup;
use crate::series::TruncSeries;

/// Intersection multiplicity of two distinct polynomial branches.
pub fn intersection_multiplicity(bi: &Branch, bj: &Branch) -> Result<usize> {
    if !bi.is_polynomial() || !bj.is_polynomial() {
        let t = bi
            .x
            .trunc()
            .into_iter()
            .chain(bi.y.trunc())
            .chain(bj.x.trunc())
            .chain(bj.y.trunc())
            .min()
            .unwrap_or(0);
        return Err(Error::TruncationTooSmall { suggested: 2 * t.max(32) });
    }
    let gj = implicitize(bj)?;
    let along = gj.substitute(&bi.x, &bi.y);
    match along.order().known() {
        Some(o) => Ok(o),
        None => {
            if along.is_exactly_zero() {
                Err(Error::BranchesCoincide)
            } else {
                Err(Error::TruncationTooSmall {
                    suggested: along.trunc().map(|t| 2 * t.max(1)).unwrap_or(64),
                })
            }
        }
    }
}

/// Per-branch conductors of a reduced multi-branch parametrization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConductorVector {
    pub per_branch: Vec<usize>,
    pub total: usize,
    /// |c| / 2.
    pub delta_total: usize,
}

pub fn conductor_vector(psi: &Parametrization) -> Result<ConductorVector> {
    let branches = psi.branches();
    let r = branches.len();
    let mut per_branch = Vec::with_capacity(r);
    for (i, bi) in branches.iter().enumerate() {
        let own = value_semigroup(bi, None)?.conductor;
        let mut c = own;
        for (j, bj) in branches.iter().enumerate() {
            if i != j {
                c += intersection_multiplicity(bi, bj)?;
            }
        }
        per_branch.push(c);
    }
    let total: usize = per_branch.iter().sum();
    if total % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "conductor total {total} is odd; input is not reduced"
        )));
    }
    Ok(ConductorVector { per_branch, total, delta_total: total / 2 })
}

/// Delta invariant by linear algebra: the codimension of the coordinate
/// subalgebra inside the product of truncated power series rings.
///
/// Independent of the semigroup closure and of the conductor formula; used
/// as a cross-check oracle.  `bound` must be at least the largest per-branch
/// conductor for the count to have stabilized.
pub fn delta_by_dimension_count(psi: &Parametrization, bound: usize) -> Result<usize> {
    let field = psi.field().clone();
    let branches = psi.branches();
    let r = branches.len();
    let width = r * bound;
    // image vectors of monomials x^a y^b, coordinates = concatenated
    // t-coefficients 0..bound per branch
    let min_ord: usize = branches
        .iter()
        .map(|b| b.multiplicity().max(1))
        .min()
        .unwrap_or(1);
    let amax = bound / min_ord + 1;
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    let xpows: Vec<Vec<TruncSeries>> = branches
        .iter()
        .map(|b| {
            let mut v = vec![TruncSeries::monomial(&field, field.one(), 0)];
            for a in 1..=amax {
                let nxt = v[a - 1].mul(&b.x).clip(bound);
                v.push(nxt);
            }
            v
        })
        .collect();
    let ypows: Vec<Vec<TruncSeries>> = branches
        .iter()
        .map(|b| {
            let mut v = vec![TruncSeries::monomial(&field, field.one(), 0)];
            for a in 1..=amax {
                let nxt = v[a - 1].mul(&b.y).clip(bound);
                v.push(nxt);
            }
            v
        })
        .collect();
    for a in 0..=amax {
        for b in 0..=amax {
            if a + b == 0 {
                continue; // constants act through the diagonal; handled below
            }
            let mut row = Vec::with_capacity(width);
            let mut nonzero = false;
            for i in 0..r {
                let s = xpows[i][a].mul(&ypows[i][b]).clip(bound.saturating_sub(1));
                for e in 0..bound {
                    let c = if e <= s.trunc().unwrap_or(usize::MAX) {
                        s.coeff(e)
                    } else {
                        field.zero()
                    };
                    if !field.is_zero(&c) {
                        nonzero = true;
                    }
                    row.push(c);
                }
            }
            if nonzero {
                rows.push(row);
            }
        }
    }
    // the constants contribute the all-ones diagonal vector
    let mut const_row = Vec::with_capacity(width);
    for _ in 0..r {
        const_row.push(field.one());
        for _ in 1..bound {
            const_row.push(field.zero());
        }
    }
    rows.push(const_row);
    let rank = row_rank(&field, rows, width);
    Ok(width - rank)
}

fn row_rank(field: &crate::field::Field, mut rows: Vec<Vec<FieldElem>>, width: usize) -> usize {
    let mut rank = 0;
    let mut pivot_row = 0;
    for col in 0..width {
        let mut sel = None;
        for (ri, row) in rows.iter().enumerate().skip(pivot_row) {
            if !field.is_zero(&row[col]) {
                sel = Some(ri);
                break;
            }
        }
        let Some(sel) = sel else { continue };
        rows.swap(pivot_row, sel);
        let inv = field.inv(&rows[pivot_row][col]).unwrap();
        for c in col..width {
            rows[pivot_row][c] = field.mul(&rows[pivot_row][c], &inv);
        }
        let pivot = rows[pivot_row].clone();
        for (ri, row) in rows.iter_mut().enumerate() {
            if ri != pivot_row && !field.is_zero(&row[col]) {
                let f = row[col].clone();
                for (c, pc) in row.iter_mut().zip(&pivot).skip(col) {
                    *c = field.sub(c, &field.mul(pc, &f));
                }
            }
        }
        rank += 1;
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rank
}

/// Maximal contact multiplicity: the best min-contact a regular curve can
/// have with all branches, found greedily over graphs y = a(x) and x = b(y).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxContact {
    Finite(usize),
    /// The greedy search exceeded the cap max(c_i) + 1 without obstruction
    /// (happens for a single smooth branch, where the sup is infinite).
    AtLeast(usize),
}

impl MaxContact {
    pub fn value(&self) -> usize {
        match self {
            MaxContact::Finite(v) | MaxContact::AtLeast(v) => *v,
        }
    }
}

pub fn max_contact(psi: &Parametrization) -> Result<MaxContact> {
    let branches = psi.branches();
    // cap: contacts relevant to the conductor comparisons are <= max c_i + 1
    let cap = if branches.len() == 1 {
        value_semigroup(&branches[0], None)?.conductor + 1
    } else {
        conductor_vector(psi)?.per_branch.into_iter().max().unwrap_or(0) + 1
    };
    let cap = cap.max(2);
    let a = greedy_family(branches, cap, false)?;
    let b = greedy_family(branches, cap, true)?;
    let best = match (a, b) {
        (MaxContact::AtLeast(x), _) | (_, MaxContact::AtLeast(x)) => {
            return Ok(MaxContact::AtLeast(x))
        }
        (MaxContact::Finite(x), MaxContact::Finite(y)) => x.max(y),
    };
    Ok(MaxContact::Finite(best))
}

/// Greedy construction within the family y - a(x) (or x - a(y) when
/// `swapped`): coefficients of a are chosen order by order to push up the
/// minimal contact, as long as a single coefficient can cancel the leading
/// obstruction in every bottleneck branch without disturbing the others.
fn greedy_family(branches: &[Branch], cap: usize, swapped: bool) -> Result<MaxContact> {
    let field = branches[0].field().clone();
    // residual_i = v_i - a(u_i), contact_i = ord(residual_i)
    let coords: Vec<(TruncSeries, TruncSeries)> = branches
        .iter()
        .map(|b| {
            if swapped {
                (b.y.clip(cap + 1), b.x.clip(cap + 1))
            } else {
                (b.x.clip(cap + 1), b.y.clip(cap + 1))
            }
        })
        .collect();
    let mut residuals: Vec<TruncSeries> = coords.iter().map(|(_, v)| v.clone()).collect();
    let ords: Vec<usize> = coords.iter().map(|(u, _)| u.order_lower_bound().max(1)).collect();
    let upow = |i: usize, e: usize| coords[i].0.pow(e).clip(cap + 1);
    loop {
        let contact = residuals
            .iter()
            .map(|r| r.order_lower_bound())
            .min()
            .unwrap_or(cap + 1);
        if contact > cap {
            return Ok(MaxContact::AtLeast(cap + 1));
        }
        let level = contact;
        // the coefficient a_e acts on branch i at order e * ord(u_i)
        // (to leading order); all bottleneck branches must agree on one a_e
        let mut exponent = None;
        for (i, r) in residuals.iter().enumerate() {
            if r.order_lower_bound() == level {
                if level % ords[i] != 0 {
                    return Ok(MaxContact::Finite(level));
                }
                let e = level / ords[i];
                if e == 0 {
                    return Ok(MaxContact::Finite(level));
                }
                match exponent {
                    None => exponent = Some(e),
                    Some(e0) if e0 != e => return Ok(MaxContact::Finite(level)),
                    _ => {}
                }
            }
        }
        let e = exponent.expect("some branch attains the minimum");
        // solve for a_e on the bottleneck branches and check consistency
        let mut a_e: Option<FieldElem> = None;
        for (i, r) in residuals.iter().enumerate() {
            let kappa = upow(i, e).coeff(level);
            let rho = if r.order_lower_bound() == level { r.coeff(level) } else { field.zero() };
            if field.is_zero(&kappa) {
                if field.is_zero(&rho) {
                    continue;
                }
                return Ok(MaxContact::Finite(level));
            }
            let cand = field.div(&rho, &kappa).unwrap();
            match &a_e {
                None => a_e = Some(cand),
                Some(prev) if *prev != cand => return Ok(MaxContact::Finite(level)),
                _ => {}
            }
        }
        let Some(a_e) = a_e else {
            return Ok(MaxContact::Finite(level));
        };
        if field.is_zero(&a_e) {
            return Ok(MaxContact::Finite(level));
        }
        for (i, r) in residuals.iter_mut().enumerate() {
            *r = r.sub(&upow(i, e).scale(&a_e));
        }
    }
}

/// Case split of the determinacy bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeterminacyCase {
    /// mt = 1: bound 1.
    Mt1,
    /// mt = 2, one branch: bound c + 1.
    Mt2R1,
    /// mt = 2, two branches: bound c.
    Mt2R2,
    /// mt > 2: bound c - 1 componentwise.
    MtBig,
}

impl DeterminacyCase {
    pub fn label(&self) -> &'static str {
        match self {
            DeterminacyCase::Mt1 => "mt1",
            DeterminacyCase::Mt2R1 => "mt2-r1",
            DeterminacyCase::Mt2R2 => "mt2-r2",
            DeterminacyCase::MtBig => "mtBig",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminacyBound {
    pub per_branch: Vec<usize>,
    pub case: DeterminacyCase,
}

/// The determinacy bound: jets at these levels already pin the equivalence
/// class.  1 for smooth germs; c+1, c, or c-1 depending on multiplicity and
/// branch count.
pub fn determinacy_bound(psi: &Parametrization) -> Result<DeterminacyBound> {
    let mt = psi.multiplicity();
    let r = psi.num_branches();
    let conductors: Vec<usize> = if r == 1 {
        vec![value_semigroup(&psi.branches()[0], None)?.conductor]
    } else {
        conductor_vector(psi)?.per_branch
    };
    let (case, per_branch) = if mt == 1 {
        (DeterminacyCase::Mt1, vec![1])
    } else if mt == 2 && r == 1 {
        (DeterminacyCase::Mt2R1, vec![conductors[0] + 1])
    } else if mt == 2 && r == 2 {
        (DeterminacyCase::Mt2R2, conductors)
    } else {
        (
            DeterminacyCase::MtBig,
            conductors.iter().map(|&c| c.saturating_sub(1)).collect(),
        )
    };
    Ok(DeterminacyBound { per_branch, case })
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

    #[test]
    fn intersection_of_tangent_smooth_pair() {
        // (t^3, t) and (t^5, t): contact order 3
        let f = q();
        let b1 = branch(&f, &[(1, 3)], &[(1, 1)]);
        let b2 = branch(&f, &[(1, 5)], &[(1, 1)]);
        assert_eq!(intersection_multiplicity(&b1, &b2).unwrap(), 3);
        assert_eq!(intersection_multiplicity(&b2, &b1).unwrap(), 3);
    }

    #[test]
    fn intersection_of_transversal_lines() {
        let f = q();
        let b1 = branch(&f, &[(1, 1)], &[]);
        let b2 = Branch::new(poly(&f, &[]), poly(&f, &[(1, 1)])).unwrap();
        assert_eq!(intersection_multiplicity(&b1, &b2).unwrap(), 1);
    }

    #[test]
    fn intersection_of_cusp_with_line() {
        let f = q();
        let cusp = branch(&f, &[(1, 2)], &[(1, 3)]);
        let line = branch(&f, &[(1, 1)], &[]);
        assert_eq!(intersection_multiplicity(&cusp, &line).unwrap(), 3);
        assert_eq!(intersection_multiplicity(&line, &cusp).unwrap(), 3);
    }

    #[test]
    fn coincident_branches_detected() {
        let f = q();
        let b1 = branch(&f, &[(1, 2)], &[(1, 3)]);
        assert!(matches!(
            intersection_multiplicity(&b1, &b1),
            Err(Error::BranchesCoincide)
        ));
    }

    #[test]
    fn conductor_vector_of_tangent_lines() {
        let f = q();
        let psi = Parametrization::new(vec![
            branch(&f, &[(1, 3)], &[(1, 1)]),
            branch(&f, &[(1, 5)], &[(1, 1)]),
        ])
        .unwrap();
        let cv = conductor_vector(&psi).unwrap();
        assert_eq!(cv.per_branch, vec![3, 3]);
        assert_eq!(cv.delta_total, 3);
    }

    #[test]
    fn conductor_of_single_a4_branch() {
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 5)]));
        let cv = conductor_vector(&psi).unwrap();
        assert_eq!(cv.per_branch, vec![4]);
        assert_eq!(cv.delta_total, 2);
    }

    #[test]
    fn conductor_vector_of_three_lines() {
        let f = q();
        let psi = Parametrization::new(vec![
            branch(&f, &[(1, 1)], &[]),
            Branch::new(poly(&f, &[]), poly(&f, &[(1, 1)])).unwrap(),
            branch(&f, &[(1, 1)], &[(1, 1)]),
        ])
        .unwrap();
        let cv = conductor_vector(&psi).unwrap();
        assert_eq!(cv.per_branch, vec![2, 2, 2]);
        assert_eq!(cv.delta_total, 3);
        // cross-check 2*delta by the dimension-count oracle
        let delta = delta_by_dimension_count(&psi, 4).unwrap();
        assert_eq!(delta, 3);
    }

    #[test]
    fn delta_count_matches_semigroup_for_branches() {
        let f = q();
        for (xs, ys) in [
            (vec![(1i64, 2usize)], vec![(1i64, 3usize)]),
            (vec![(1, 2)], vec![(1, 5)]),
            (vec![(1, 4)], vec![(1, 6), (1, 7)]),
        ] {
            let b = branch(&f, &xs, &ys);
            let sg = value_semigroup(&b, None).unwrap();
            let psi = Parametrization::single(b);
            let delta = delta_by_dimension_count(&psi, sg.conductor.max(1)).unwrap();
            assert_eq!(delta, sg.delta, "branch {xs:?} {ys:?}");
        }
    }

    #[test]
    fn max_contact_of_smooth_tangent_pair_is_intersection() {
        let f = q();
        let psi = Parametrization::new(vec![
            branch(&f, &[(1, 3)], &[(1, 1)]),
            branch(&f, &[(1, 5)], &[(1, 1)]),
        ])
        .unwrap();
        assert_eq!(max_contact(&psi).unwrap(), MaxContact::Finite(3));
    }

    #[test]
    fn max_contact_of_odd_a_series() {
        // (t^2, t^{2k+1}): contact 2k+1 = c + 1
        let f = q();
        for k in 1..4usize {
            let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 2 * k + 1)]));
            assert_eq!(max_contact(&psi).unwrap(), MaxContact::Finite(2 * k + 1), "k={k}");
        }
    }

    #[test]
    fn max_contact_of_e6() {
        // (t^3, t^4): best smooth contact 4, strictly below c = 6
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 3)], &[(1, 4)]));
        assert_eq!(max_contact(&psi).unwrap(), MaxContact::Finite(4));
    }

    #[test]
    fn determinacy_bound_cases() {
        let f = q();
        // mt = 2, r = 1: d = c + 1
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 5)]));
        let d = determinacy_bound(&psi).unwrap();
        assert_eq!(d.per_branch, vec![5]);
        assert_eq!(d.case, DeterminacyCase::Mt2R1);
        // mt = 2, r = 2: d = c
        let psi = Parametrization::new(vec![
            branch(&f, &[(1, 3)], &[(1, 1)]),
            branch(&f, &[(1, 5)], &[(1, 1)]),
        ])
        .unwrap();
        let d = determinacy_bound(&psi).unwrap();
        assert_eq!(d.per_branch, vec![3, 3]);
        assert_eq!(d.case, DeterminacyCase::Mt2R2);
        // mt > 2: d = c - 1
        let psi = Parametrization::single(branch(&f, &[(1, 3)], &[(1, 4)]));
        let d = determinacy_bound(&psi).unwrap();
        assert_eq!(d.per_branch, vec![5]);
        assert_eq!(d.case, DeterminacyCase::MtBig);
        // mt 1
        let psi = Parametrization::single(branch(&f, &[(1, 1)], &[(1, 3)]));
        let d = determinacy_bound(&psi).unwrap();
        assert_eq!(d.per_branch, vec![1]);
        assert_eq!(d.case, DeterminacyCase::Mt1);
    }
}
