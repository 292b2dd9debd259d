//! Parametrizations of plane curve germs, the left-right moves acting on
//! them, move transcripts, jets, and reduction to normal position.
//!
//! A parametrization is a tuple of branches (x_i(t), y_i(t)) mapping into the
//! maximal ideal.  A right move reparametrizes each branch source; a left
//! move is a coordinate change of the plane.  Applying a pair gives
//! branchwise  left(x_i(phi_i), y_i(phi_i)).

use std::fmt;

use crate::bivar::BivarPoly;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem, FieldHom};
use crate::series::{SeriesOrder, TruncSeries};

/// One branch (x(t), y(t)).
#[derive(Clone, PartialEq, Debug)]
pub struct Branch {
    pub x: TruncSeries,
    pub y: TruncSeries,
}

impl Branch {
    pub fn new(x: TruncSeries, y: TruncSeries) -> Result<Branch> {
        if x.field() != y.field() {
            return Err(Error::FieldMismatch);
        }
        let ok = |s: &TruncSeries| s.order_lower_bound() >= 1;
        if !ok(&x) || !ok(&y) {
            return Err(Error::NotLocal);
        }
        Ok(Branch { x, y })
    }

    pub fn field(&self) -> &Field {
        self.x.field()
    }

    /// min(ord x, ord y); the multiplicity for a single branch.
    pub fn multiplicity(&self) -> usize {
        self.x.order_lower_bound().min(self.y.order_lower_bound())
    }

    pub fn is_polynomial(&self) -> bool {
        self.x.is_exact() && self.y.is_exact()
    }

    pub fn jet(&self, k: usize) -> Result<Branch> {
        Ok(Branch { x: self.x.jet(k)?, y: self.y.jet(k)? })
    }

    pub fn clip(&self, k: usize) -> Branch {
        Branch { x: self.x.clip(k), y: self.y.clip(k) }
    }

    pub fn map_field(&self, hom: &FieldHom) -> Branch {
        Branch { x: self.x.map_field(hom), y: self.y.map_field(hom) }
    }

    pub fn swap_coords(&self) -> Branch {
        Branch { x: self.y.clone(), y: self.x.clone() }
    }

    pub fn agrees_with(&self, other: &Branch) -> bool {
        self.x.agrees_with(&other.x) && self.y.agrees_with(&other.y)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A multi-branch parametrization.
#[derive(Clone, PartialEq, Debug)]
pub struct Parametrization {
    branches: Vec<Branch>,
    field: Field,
}

impl Parametrization {
    pub fn new(branches: Vec<Branch>) -> Result<Parametrization> {
        let field = branches
            .first()
            .map(|b| b.field().clone())
            .ok_or_else(|| Error::Unsupported("empty parametrization".into()))?;
        for b in &branches {
            if *b.field() != field {
                return Err(Error::FieldMismatch);
            }
        }
        Ok(Parametrization { branches, field })
    }

    pub fn single(branch: Branch) -> Parametrization {
        let field = branch.field().clone();
        Parametrization { branches: vec![branch], field }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    /// Sum of branch multiplicities = multiplicity of a defining equation.
    pub fn multiplicity(&self) -> usize {
        self.branches.iter().map(|b| b.multiplicity()).sum()
    }

    /// Componentwise jet; `levels` must have one entry per branch, or one
    /// entry applied to all.
    pub fn jet(&self, levels: &[usize]) -> Result<Parametrization> {
        let levels: Vec<usize> = if levels.len() == 1 {
            vec![levels[0]; self.branches.len()]
        } else if levels.len() == self.branches.len() {
            levels.to_vec()
        } else {
            return Err(Error::Unsupported("jet level count mismatch".into()));
        };
        let branches = self
            .branches
            .iter()
            .zip(&levels)
            .map(|(b, &k)| b.jet(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Parametrization { branches, field: self.field.clone() })
    }

    pub fn map_field(&self, hom: &FieldHom) -> Parametrization {
        Parametrization {
            branches: self.branches.iter().map(|b| b.map_field(hom)).collect(),
            field: hom.dst.clone(),
        }
    }

    pub fn apply(&self, right: &RightMove, left: &LeftMove) -> Result<Parametrization> {
        if right.phis.len() != self.branches.len() {
            return Err(Error::Unsupported("right move branch count mismatch".into()));
        }
        let branches = self
            .branches
            .iter()
            .zip(&right.phis)
            .map(|(b, phi)| apply_branch(b, phi, left))
            .collect::<Result<Vec<_>>>()?;
        Ok(Parametrization { branches, field: self.field.clone() })
    }
}

impl fmt::Display for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.branches.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(" (+) "))
    }
}

/// Per-branch source reparametrizations phi_i with ord = 1 and unit leading
/// coefficient.
#[derive(Clone, Debug)]
pub struct RightMove {
    pub phis: Vec<TruncSeries>,
}

impl RightMove {
    pub fn new(phis: Vec<TruncSeries>) -> Result<RightMove> {
        for phi in &phis {
            if phi.order() != SeriesOrder::Known(1) {
                return Err(Error::NotInvertible("right move must have order 1".into()));
            }
        }
        Ok(RightMove { phis })
    }

    pub fn identity(field: &Field, branches: usize) -> RightMove {
        RightMove { phis: vec![TruncSeries::t(field); branches] }
    }

    pub fn single(phi: TruncSeries) -> Result<RightMove> {
        RightMove::new(vec![phi])
    }

    /// Composition: applying `self` then `then` equals applying the result.
    /// (Branchwise phi_self(phi_then(t)).)
    pub fn compose(&self, then: &RightMove) -> Result<RightMove> {
        let phis = self
            .phis
            .iter()
            .zip(&then.phis)
            .map(|(a, b)| a.compose(b))
            .collect::<Result<Vec<_>>>()?;
        RightMove::new(phis)
    }

    pub fn inverse(&self, prec: usize) -> Result<RightMove> {
        let phis = self
            .phis
            .iter()
            .map(|phi| phi.reversion(prec))
            .collect::<Result<Vec<_>>>()?;
        RightMove::new(phis)
    }

    pub fn map_field(&self, hom: &FieldHom) -> RightMove {
        RightMove { phis: self.phis.iter().map(|s| s.map_field(hom)).collect() }
    }
}

/// Coordinate change of the plane: (x, y) -> (X(x,y), Y(x,y)) with zero
/// constant terms and invertible linear part.
#[derive(Clone, Debug)]
pub struct LeftMove {
    pub x_image: BivarPoly,
    pub y_image: BivarPoly,
}

impl LeftMove {
    pub fn new(x_image: BivarPoly, y_image: BivarPoly) -> Result<LeftMove> {
        let field = x_image.field().clone();
        if !field.is_zero(&x_image.constant_term()) || !field.is_zero(&y_image.constant_term()) {
            return Err(Error::NotInvertible("left move must fix the origin".into()));
        }
        let (a, b) = x_image.linear_part();
        let (c, d) = y_image.linear_part();
        let det = field.sub(&field.mul(&a, &d), &field.mul(&b, &c));
        if field.is_zero(&det) {
            return Err(Error::NotInvertible("left move has singular linear part".into()));
        }
        Ok(LeftMove { x_image, y_image })
    }

    pub fn identity(field: &Field) -> LeftMove {
        LeftMove { x_image: BivarPoly::x(field), y_image: BivarPoly::y(field) }
    }

    pub fn swap(field: &Field) -> LeftMove {
        LeftMove { x_image: BivarPoly::y(field), y_image: BivarPoly::x(field) }
    }

    pub fn scaling(field: &Field, sx: &FieldElem, sy: &FieldElem) -> Result<LeftMove> {
        LeftMove::new(
            BivarPoly::x(field).scale(sx),
            BivarPoly::y(field).scale(sy),
        )
    }

    pub fn field(&self) -> &Field {
        self.x_image.field()
    }

    /// Composition: applying `self` then `then` (then ∘ self as maps).
    pub fn compose(&self, then: &LeftMove, cap: Option<usize>) -> Result<LeftMove> {
        let x_image = then.x_image.substitute_poly(&self.x_image, &self.y_image).with_cap(cap);
        let y_image = then.y_image.substitute_poly(&self.x_image, &self.y_image).with_cap(cap);
        LeftMove::new(x_image, y_image)
    }

    /// Formal inverse to total degree `cap`, built degree by degree.
    pub fn inverse(&self, cap: usize) -> Result<LeftMove> {
        let field = self.field().clone();
        // invert the linear part
        let (a, b) = self.x_image.linear_part();
        let (c, d) = self.y_image.linear_part();
        let det = field.sub(&field.mul(&a, &d), &field.mul(&b, &c));
        let det_inv = field.inv(&det).ok_or_else(|| Error::NotInvertible("singular".into()))?;
        // L^{-1} = 1/det * [d, -b; -c, a]
        let lin = |p: &FieldElem, q: &FieldElem| -> BivarPoly {
            BivarPoly::x(&field)
                .scale(&field.mul(p, &det_inv))
                .add(&BivarPoly::y(&field).scale(&field.mul(q, &det_inv)))
        };
        let mut xi = lin(&d, &field.neg(&b));
        let mut yi = lin(&field.neg(&c), &a);
        // Newton-style correction: subtract L^{-1} of the deviation
        for _ in 0..cap {
            let ex = self.x_image.substitute_poly(&xi, &yi).with_cap(Some(cap));
            let ey = self.y_image.substitute_poly(&xi, &yi).with_cap(Some(cap));
            let dx = ex.sub(&BivarPoly::x(&field));
            let dy = ey.sub(&BivarPoly::y(&field));
            if dx.is_zero() && dy.is_zero() {
                break;
            }
            // (xi, yi) -= L^{-1}(dx, dy)
            let cx = dx
                .scale(&field.mul(&d, &det_inv))
                .sub(&dy.scale(&field.mul(&b, &det_inv)));
            let cy = dy
                .scale(&field.mul(&a, &det_inv))
                .sub(&dx.scale(&field.mul(&c, &det_inv)));
            xi = xi.sub(&cx).with_cap(Some(cap));
            yi = yi.sub(&cy).with_cap(Some(cap));
        }
        LeftMove::new(xi, yi)
    }

    pub fn map_field(&self, hom: &FieldHom) -> LeftMove {
        LeftMove { x_image: self.x_image.map_field(hom), y_image: self.y_image.map_field(hom) }
    }
}

fn apply_branch(b: &Branch, phi: &TruncSeries, left: &LeftMove) -> Result<Branch> {
    let xr = b.x.compose(phi)?;
    let yr = b.y.compose(phi)?;
    let nx = left.x_image.substitute(&xr, &yr);
    let ny = left.y_image.substitute(&xr, &yr);
    Branch::new(nx, ny)
}

/// Apply a single-branch move pair.
pub fn apply_single(b: &Branch, phi: &TruncSeries, left: &LeftMove) -> Result<Branch> {
    apply_branch(b, phi, left)
}

/// One recorded move of a reduction or normalization.
#[derive(Clone, Debug)]
pub enum MoveStep {
    Right(RightMove),
    Left(LeftMove),
}

/// A stage of moves over one field; a new stage starts when the computation
/// had to extend the field.
#[derive(Clone, Debug)]
pub struct TranscriptStage {
    /// Embedding from the previous stage's field (None for the first stage).
    pub hom: Option<FieldHom>,
    pub steps: Vec<MoveStep>,
}

/// Auditable sequence of moves; replaying it on the original input
/// reproduces the output.
#[derive(Clone, Debug, Default)]
pub struct Transcript {
    pub stages: Vec<TranscriptStage>,
}

impl Transcript {
    pub fn new() -> Transcript {
        Transcript { stages: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.stages.iter().all(|s| s.steps.is_empty() && s.hom.is_none())
    }

    pub fn num_steps(&self) -> usize {
        self.stages.iter().map(|s| s.steps.len()).sum()
    }

    fn last_stage(&mut self) -> &mut TranscriptStage {
        if self.stages.is_empty() {
            self.stages.push(TranscriptStage { hom: None, steps: vec![] });
        }
        self.stages.last_mut().unwrap()
    }

    pub fn push(&mut self, step: MoveStep) {
        self.last_stage().steps.push(step);
    }

    pub fn push_hom(&mut self, hom: FieldHom) {
        self.stages.push(TranscriptStage { hom: Some(hom), steps: vec![] });
    }

    pub fn extend(&mut self, other: &Transcript) {
        for stage in &other.stages {
            match &stage.hom {
                Some(h) => self.push_hom(h.clone()),
                None => {}
            }
            for s in &stage.steps {
                self.push(s.clone());
            }
        }
    }

    /// Replay on a single branch.
    pub fn replay(&self, input: &Branch) -> Result<Branch> {
        let mut cur = input.clone();
        for stage in &self.stages {
            if let Some(hom) = &stage.hom {
                if *cur.field() != hom.dst {
                    cur = cur.map_field(hom);
                }
            }
            for step in &stage.steps {
                cur = match step {
                    MoveStep::Right(r) => apply_branch(&cur, &r.phis[0], &LeftMove::identity(cur.field()))?,
                    MoveStep::Left(l) => apply_branch(&cur, &TruncSeries::t(cur.field()), l)?,
                };
            }
        }
        Ok(cur)
    }

    /// Collapse into a single (right, left) pair over the final field.
    /// Right moves compose among themselves and so do left moves, because
    /// applying (r1, l1) then (r2, l2) equals applying (r1 ∘ r2, l2 ∘ l1).
    pub fn collapse(&self, field: &Field, prec: usize) -> Result<(RightMove, LeftMove)> {
        let mut right = RightMove::identity(field, 1);
        let mut left = LeftMove::identity(field);
        for stage in &self.stages {
            for step in &stage.steps {
                match step {
                    MoveStep::Right(r) => {
                        let r = if *r.phis[0].field() != *field {
                            return Err(Error::FieldMismatch);
                        } else {
                            r.clone()
                        };
                        right = right.compose(&r)?;
                    }
                    MoveStep::Left(l) => {
                        left = left.compose(l, Some(prec))?;
                    }
                }
            }
        }
        Ok((right, left))
    }

    /// The field in which the final stage's moves live.
    pub fn final_hom_chain(&self) -> Vec<FieldHom> {
        self.stages.iter().filter_map(|s| s.hom.clone()).collect()
    }
}

/// Which coordinate was normalized to an exact power of t.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// x = t^m exactly (possible when p does not divide m).
    XNormalized,
    /// y = t^n exactly (used when p | m but p does not divide n).
    YNormalized,
}

/// A branch brought to normal position.
#[derive(Clone, Debug)]
pub struct NormalPosition {
    pub branch: Branch,
    /// Multiplicity m = ord x.
    pub m: usize,
    /// n = min(value semigroup \ mZ); None for smooth branches.
    pub n: Option<usize>,
    pub orientation: Orientation,
    /// True when the input coordinates were swapped to put the smaller
    /// order first.
    pub swapped: bool,
    pub transcript: Transcript,
    pub field: Field,
}

/// Options controlling field extension in root extractions.
#[derive(Clone, Copy, Debug)]
pub struct ExtensionPolicy {
    pub allow: bool,
    pub max_degree: usize,
}

impl Default for ExtensionPolicy {
    fn default() -> Self {
        ExtensionPolicy { allow: true, max_degree: 12 }
    }
}

/// Bring a branch to normal position:
///  1. swap/shear so ord x = m = multiplicity < ord y,
///  2. subtract polynomials in x from y until ord y is not a multiple of m,
///  3. reparametrize so that the coordinate whose order is prime to the
///     characteristic becomes an exact power of t, and make the other
///     coordinate monic.
///
/// All series work is carried out at a working precision: the input
/// truncation when present, a degree-based default otherwise.
pub fn normal_position(input: &Branch, policy: ExtensionPolicy) -> Result<NormalPosition> {
    let default_prec = 2 * (input.x.stored_degree().unwrap_or(1)
        + input.y.stored_degree().unwrap_or(1))
        + 8;
    let prec = input
        .x
        .trunc()
        .into_iter()
        .chain(input.y.trunc())
        .min()
        .unwrap_or(default_prec);
    normal_position_with_prec(input, policy, prec)
}

/// `normal_position` at an explicit working precision.
pub fn normal_position_with_prec(
    input: &Branch,
    policy: ExtensionPolicy,
    prec: usize,
) -> Result<NormalPosition> {
    let mut field = input.field().clone();
    let mut transcript = Transcript::new();
    let mut b = input.clone();

    // Step 1: smaller order into the x slot.
    let ox = b.x.order_lower_bound();
    let oy = b.y.order_lower_bound();
    let mut swapped = false;
    if oy < ox {
        b = b.swap_coords();
        swapped = true;
        let step = LeftMove::swap(&field);
        transcript.push(MoveStep::Left(step));
    }
    // equal orders: shear y -= (lc_y / lc_x) x
    if b.x.order_lower_bound() == b.y.order_lower_bound() {
        if let (Some(lx), Some(ly)) = (b.x.leading_coeff(), b.y.leading_coeff()) {
            let c = field.div(&ly, &lx).unwrap();
            let left = LeftMove::new(
                BivarPoly::x(&field),
                BivarPoly::y(&field).sub(&BivarPoly::x(&field).scale(&c)),
            )?;
            b = apply_branch(&b, &TruncSeries::t(&field), &left)?;
            transcript.push(MoveStep::Left(left));
        }
    }
    let m = b.x.order_lower_bound();
    if m == 0 || b.x.order().known().is_none() {
        return Err(Error::NotLocal);
    }

    // Step 2: strip multiples of m from ord y.  The strip is capped at the
    // working precision: a y-coordinate lying in K[[x]] deeper than that is
    // indistinguishable from zero there, which is exactly what the
    // truncation contract expresses.
    loop {
        match b.y.order() {
            SeriesOrder::Known(oy) if oy % m == 0 && oy <= prec => {
                let k = oy / m;
                let lx = b.x.leading_coeff().unwrap();
                let ly = b.y.leading_coeff().unwrap();
                let c = field.div(&ly, &field.pow_u(&lx, k as u64)).unwrap();
                let left = LeftMove::new(
                    BivarPoly::x(&field),
                    BivarPoly::y(&field).sub(&BivarPoly::x(&field).pow(k).scale(&c)),
                )?;
                b = apply_branch(&b, &TruncSeries::t(&field), &left)?;
                transcript.push(MoveStep::Left(left));
            }
            _ => break,
        }
    }
    if b.y.order().known().map_or(false, |o| o > prec) {
        b.y = b.y.clip(prec);
    }

    let n = b.y.order().known();
    // Smooth branch: m = 1 and everything in y was eliminated (or will be
    // meaningless); n stays as whatever is left, possibly None.
    if m == 1 {
        // y is reducible to zero within truncation for a smooth branch
        let b = finalize_normalization(&mut field, &mut transcript, b, 1, policy, prec)?;
        return Ok(NormalPosition {
            branch: b,
            m: 1,
            n: None,
            orientation: Orientation::XNormalized,
            swapped,
            transcript,
            field,
        });
    }
    let n = match n {
        Some(n) => n,
        None => {
            if b.y.is_exactly_zero() {
                // x = t^m unit with m >= 2: not primitive
                return Err(Error::NotPrimitive { gcd: m });
            }
            return Err(Error::TruncationTooSmall { suggested: 2 * prec.max(1) });
        }
    };

    let p = field.characteristic();
    let orientation = if p == 0 || m as u64 % p != 0 {
        Orientation::XNormalized
    } else if n as u64 % p != 0 {
        Orientation::YNormalized
    } else {
        return Err(Error::BothOrdersDivisibleByP { m, n, p });
    };

    let mu = match orientation {
        Orientation::XNormalized => m,
        Orientation::YNormalized => n,
    };
    let b = finalize_normalization(&mut field, &mut transcript, b, mu, policy, prec)?;
    Ok(NormalPosition { branch: b, m, n: Some(n), orientation, swapped, transcript, field })
}

/// Reparametrize so the coordinate of order `mu` becomes exactly t^mu and
/// scale the other coordinate monic.  Extends the field if the needed root
/// of the leading coefficient is missing and the policy allows it.
fn finalize_normalization(
    field: &mut Field,
    transcript: &mut Transcript,
    b: Branch,
    mu: usize,
    policy: ExtensionPolicy,
    prec: usize,
) -> Result<Branch> {
    let x_is_target = b.x.order_lower_bound() == mu && b.x.order().known() == Some(mu);
    let mut b = b.clone();
    // Field extension for the leading-coefficient root when required.
    let lead = if x_is_target { &b.x } else { &b.y }.leading_coeff().unwrap();
    if field.nth_root(&field.inv(&lead).unwrap(), mu).is_none() {
        if !policy.allow || field.characteristic() == 0 {
            // fall back: scale the target coordinate monic by a left move
            // and keep t^mu inexact only when the unit has higher terms
        } else {
            let (hom, _) = crate::field::field_root(
                field,
                &field.inv(&lead).unwrap(),
                mu,
                policy.max_degree,
            )?;
            if !hom.is_identity() {
                b = b.map_field(&hom);
                transcript.push_hom(hom.clone());
                *field = hom.dst.clone();
            }
        }
    }

    let (target, _) = if x_is_target { (&b.x, &b.y) } else { (&b.y, &b.x) };
    let unit = target.shr(mu);
    match unit.nth_root(mu, prec) {
        Ok(root) => {
            // s = t * root has s^mu = target; sigma = s^{-1} reparametrizes
            let s = root.shl(1);
            let sigma = s.reversion(prec)?;
            let right = RightMove::single(sigma)?;
            b = apply_branch(&b, &right.phis[0], &LeftMove::identity(field))?;
            transcript.push(MoveStep::Right(right));
        }
        Err(Error::NoRootInField { .. }) | Err(Error::CharacteristicDividesM { .. }) => {
            // leave the unit; scale leading coefficient to 1 by a left move
            let lc = target.leading_coeff().unwrap();
            let inv = field.inv(&lc).unwrap();
            let left = if x_is_target {
                LeftMove::scaling(field, &inv, &field.one())?
            } else {
                LeftMove::scaling(field, &field.one(), &inv)?
            };
            b = apply_branch(&b, &TruncSeries::t(field), &left)?;
            transcript.push(MoveStep::Left(left));
        }
        Err(e) => return Err(e),
    }

    // Make the other coordinate monic.
    let (_, other) = if x_is_target { (&b.x, &b.y) } else { (&b.y, &b.x) };
    if let Some(lc) = other.leading_coeff() {
        if !field.is_one(&lc) {
            let inv = field.inv(&lc).unwrap();
            let left = if x_is_target {
                LeftMove::scaling(field, &field.one(), &inv)?
            } else {
                LeftMove::scaling(field, &inv, &field.one())?
            };
            b = apply_branch(&b, &TruncSeries::t(field), &left)?;
            transcript.push(MoveStep::Left(left));
        }
    }
    Ok(b)
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

    fn branch(field: &Field, x: &[(i64, usize)], y: &[(i64, usize)]) -> Branch {
        Branch::new(poly(field, x), poly(field, y)).unwrap()
    }

    #[test]
    fn multiplicity_of_cusp() {
        let b = branch(&q(), &[(1, 2)], &[(1, 3)]);
        assert_eq!(b.multiplicity(), 2);
    }

    #[test]
    fn multiplicity_of_quartic_branch() {
        let b = branch(&q(), &[(1, 4)], &[(1, 6), (1, 7)]);
        assert_eq!(b.multiplicity(), 4);
    }

    #[test]
    fn multiplicity_adds_over_branches() {
        let f = q();
        let psi = Parametrization::new(vec![
            branch(&f, &[(1, 3)], &[(1, 1)]),
            branch(&f, &[(1, 5)], &[(1, 1)]),
        ])
        .unwrap();
        assert_eq!(psi.multiplicity(), 2);
    }

    #[test]
    fn identity_moves_fix_parametrization() {
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 3)]));
        let out = psi
            .apply(&RightMove::identity(&f, 1), &LeftMove::identity(&f))
            .unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn left_swap_swaps() {
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 3)]));
        let out = psi.apply(&RightMove::identity(&f, 1), &LeftMove::swap(&f)).unwrap();
        assert_eq!(out.branches()[0].x.order().known(), Some(3));
        assert_eq!(out.branches()[0].y.order().known(), Some(2));
    }

    #[test]
    fn jet_drops_high_terms() {
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 5)]));
        let j = psi.jet(&[4]).unwrap();
        let b = &j.branches()[0];
        assert_eq!(b.x.order().known(), Some(2));
        assert!(b.y.is_zero_within_trunc());
        assert_eq!(b.y.trunc(), Some(4));
    }

    #[test]
    fn jet_of_polynomial_is_identity_at_full_level() {
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 3)], &[(1, 4), (1, 6)]));
        let j = psi.jet(&[6]).unwrap();
        assert!(j.branches()[0].agrees_with(&psi.branches()[0]));
    }

    #[test]
    fn jet_truncates_tail() {
        let f = q();
        let b = branch(&f, &[(1, 3)], &[(1, 4), (1, 6)]);
        let j = b.jet(5).unwrap();
        assert!(j.y.agrees_with(&poly(&f, &[(1, 4)]).clip(5)));
    }

    #[test]
    fn right_move_requires_order_one() {
        let f = q();
        assert!(RightMove::single(poly(&f, &[(1, 2)])).is_err());
        assert!(RightMove::single(poly(&f, &[(1, 1), (4, 3)])).is_ok());
    }

    #[test]
    fn left_move_requires_invertible_linear_part() {
        let f = q();
        let x = BivarPoly::x(&f);
        assert!(LeftMove::new(x.clone(), x.clone()).is_err());
        let y2 = BivarPoly::y(&f).pow(2);
        assert!(LeftMove::new(x.clone(), y2).is_err());
    }

    #[test]
    fn left_inverse_composes_to_identity() {
        let f = q();
        let x = BivarPoly::x(&f);
        let y = BivarPoly::y(&f);
        let l = LeftMove::new(
            x.add(&y.pow(2).scale(&f.from_int(3))),
            y.sub(&x.pow(2)).add(&x.scale(&f.from_int(2))),
        )
        .unwrap();
        let li = l.inverse(8).unwrap();
        let comp = l.compose(&li, Some(8)).unwrap();
        assert_eq!(comp.x_image.with_cap(Some(8)), BivarPoly::x(&f).with_cap(Some(8)));
        assert_eq!(comp.y_image.with_cap(Some(8)), BivarPoly::y(&f).with_cap(Some(8)));
    }

    #[test]
    fn normal_position_swaps_and_eliminates() {
        // (t^3 + t^4, t^3): equal orders, shear then reparametrize to t^3
        let f = q();
        let b = branch(&f, &[(1, 3), (1, 4)], &[(1, 3)]);
        let np = normal_position(&b, ExtensionPolicy::default()).unwrap();
        assert_eq!(np.m, 3);
        assert!(np.n.unwrap() >= 4);
        assert_eq!(np.orientation, Orientation::XNormalized);
        // x must be exactly t^3
        assert!(np.branch.x.agrees_with(&poly(&np.field, &[(1, 3)])));
        // transcript replays
        let replay = np.transcript.replay(&b).unwrap();
        assert!(replay.agrees_with(&np.branch));
    }

    #[test]
    fn normal_position_strips_powers_of_x() {
        // (t^4, t^8 + t^9): t^8 = (t^4)^2 eliminated, n = 9
        let f = q();
        let b = branch(&f, &[(1, 4)], &[(1, 8), (1, 9)]);
        let np = normal_position(&b, ExtensionPolicy::default()).unwrap();
        assert_eq!(np.m, 4);
        assert_eq!(np.n, Some(9));
        let replay = np.transcript.replay(&b).unwrap();
        assert!(replay.agrees_with(&np.branch));
    }

    #[test]
    fn normal_position_char_two_normalizes_y() {
        // p = 2, (t^5, t^2 + t^3): internal order puts t^2 first; p | 2 so the
        // order-5 coordinate is normalized instead and t^3 survives.
        let f2 = Field::prime(2).unwrap();
        let b = branch(&f2, &[(1, 5)], &[(1, 2), (1, 3)]);
        let np = normal_position(&b, ExtensionPolicy::default()).unwrap();
        assert_eq!(np.m, 2);
        assert_eq!(np.n, Some(5));
        assert_eq!(np.orientation, Orientation::YNormalized);
        assert!(np.swapped);
        assert!(np.branch.y.agrees_with(&poly(&f2, &[(1, 5)])));
        assert_eq!(np.branch.x.coeff(3), f2.one());
        let replay = np.transcript.replay(&b).unwrap();
        assert!(replay.agrees_with(&np.branch));
    }

    #[test]
    fn normal_position_rejects_double_divisibility() {
        let f2 = Field::prime(2).unwrap();
        // m = 6, n = 10, both even in char 2 (primitive thanks to t^15)
        let b = branch(&f2, &[(1, 6)], &[(1, 10), (1, 15)]);
        match normal_position(&b, ExtensionPolicy::default()) {
            Err(Error::BothOrdersDivisibleByP { m: 6, n: 10, p: 2 }) => {}
            other => panic!("expected BothOrdersDivisibleByP, got {other:?}"),
        }
    }

    #[test]
    fn normal_position_extends_field_for_leading_root() {
        // x = 3 t^2 + ... over F_5: 1/3 = 2 is not a square mod 5, so the
        // reparametrization needs F_25.
        let f5 = Field::prime(5).unwrap();
        let b = branch(&f5, &[(3, 2)], &[(1, 5)]);
        let np = normal_position(&b, ExtensionPolicy::default()).unwrap();
        assert_eq!(np.field.size(), Some(25));
        assert!(np.branch.x.agrees_with(&TruncSeries::monomial(&np.field, np.field.one(), 2)));
        let replay = np.transcript.replay(&b).unwrap();
        assert!(replay.agrees_with(&np.branch));
    }

    #[test]
    fn apply_is_group_action_on_samples() {
        // apply(apply(psi, g), h) = apply(psi, h.g) within certified truncation
        let f = q();
        let psi = Parametrization::single(branch(&f, &[(1, 2)], &[(1, 3), (2, 5)]));
        let r1 = RightMove::single(poly(&f, &[(1, 1), (1, 2)])).unwrap();
        let r2 = RightMove::single(poly(&f, &[(2, 1), (0, 2), (3, 3)])).unwrap();
        let l1 = LeftMove::new(
            BivarPoly::x(&f).add(&BivarPoly::y(&f).pow(2)),
            BivarPoly::y(&f),
        )
        .unwrap();
        let l2 = LeftMove::new(
            BivarPoly::x(&f),
            BivarPoly::y(&f).add(&BivarPoly::x(&f).scale(&f.from_int(4))),
        )
        .unwrap();
        let step = psi
            .apply(&r1, &l1)
            .unwrap()
            .apply(&r2, &l2)
            .unwrap();
        let rr = r1.compose(&r2).unwrap();
        let ll = l1.compose(&l2, None).unwrap();
        let joint = psi.apply(&rr, &ll).unwrap();
        let a = &step.branches()[0];
        let bb = &joint.branches()[0];
        assert!(a.x.clip(10).agrees_with(&bb.x.clip(10)));
        assert!(a.y.clip(10).agrees_with(&bb.y.clip(10)));
    }
}
