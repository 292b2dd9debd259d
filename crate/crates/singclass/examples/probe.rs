use singclass::*;
use singclass::bivar::BivarPoly;
use std::time::Instant;

fn poly(field: &Field, terms: &[(i64, usize)]) -> TruncSeries {
    let mut s = TruncSeries::zero(field, None);
    for &(c, e) in terms {
        s = s.add(&TruncSeries::monomial(field, field.from_int(c), e));
    }
    s
}

fn main() {
    eprintln!("start");
    let f = Field::rationals();
    let b = Branch::new(poly(&f, &[(1, 2)]), poly(&f, &[(1, 5)])).unwrap();
    let phi = poly(&f, &[(1, 1), (2, 2), (-1, 3)]);
    let lm = LeftMove::new(
        BivarPoly::x(&f).add(&BivarPoly::y(&f).pow(2).scale(&f.from_int(3))),
        BivarPoly::y(&f).add(&BivarPoly::x(&f).pow(2)),
    )
    .unwrap();
    let t0 = Instant::now();
    let moved = singclass::param::apply_single(&b, &phi, &lm).unwrap();
    eprintln!("apply: {:?}", t0.elapsed());
    eprintln!("moved degrees: {:?} {:?}", moved.x.stored_degree(), moved.y.stored_degree());
    let t0 = Instant::now();
    let sg = value_semigroup(&moved, None).unwrap();
    eprintln!("semigroup: {:?}  c={} d={}", t0.elapsed(), sg.conductor, sg.delta);
    let t0 = Instant::now();
    let r = reduce(&moved, ReduceOptions::default()).unwrap();
    eprintln!("reduce: {:?} residuals {:?}", t0.elapsed(), r.residuals.len());
    let t0 = Instant::now();
    let e = are_equivalent(&b, &moved).unwrap();
    eprintln!("equiv: {:?} -> {} cert={}", t0.elapsed(), e.equivalent, e.certificate.is_some());
}
