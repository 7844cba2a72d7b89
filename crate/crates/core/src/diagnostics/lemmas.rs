use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::Verdict;
use crate::exactnum::{cmp_root_power, QuadraticNumber};
use crate::geometry::{approximation_gap, intersect, lattice_residue, Line, RationalPoint};
use crate::sieve::{Params, SieveError};

fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

/// Compares a positive quadratic number with `R^exp`.
pub(crate) fn cmp_quad_power(x: &QuadraticNumber, r: &BigUint, exp: &BigRational) -> Ordering {
    let one = QuadraticNumber::from_integer(1, x);
    cmp_root_power(x, 1, &one, 1, r, exp)
}

/// Pairs of lines sharing a slope.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParallelReport {
    pub lines: usize,
    pub violations: Vec<(Line, Line)>,
}

impl ParallelReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_no_parallel(lines: &[Line]) -> ParallelReport {
    let mut violations = Vec::new();
    for (i, l1) in lines.iter().enumerate() {
        for l2 in &lines[i + 1..] {
            if l1.is_parallel_to(l2) {
                violations.push((*l1, *l2));
            }
        }
    }
    ParallelReport {
        lines: lines.len(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommonPoint {
    NotApplicable,
    Point {
        point: RationalPoint,
    },
    Parallel {
        first: Line,
        second: Line,
    },
    /// Three lines with a non-vanishing determinant, so no shared point.
    Violation {
        lines: [Line; 3],
        determinant: String,
    },
}

impl CommonPoint {
    pub fn point(&self) -> Option<&RationalPoint> {
        match self {
            CommonPoint::Point { point } => Some(point),
            _ => None,
        }
    }
}

/// Determinant of the rows `(A, −B, C)`.
pub fn determinant(l1: &Line, l2: &Line, l3: &Line) -> BigInt {
    let row = |l: &Line| [BigInt::from(l.a), BigInt::from(-l.b), BigInt::from(l.c)];
    let [a, b, c] = [row(l1), row(l2), row(l3)];
    &a[0] * (&b[1] * &c[2] - &b[2] * &c[1]) - &a[1] * (&b[0] * &c[2] - &b[2] * &c[0])
        + &a[2] * (&b[0] * &c[1] - &b[1] * &c[0])
}

pub fn check_common_point(lines: &[Line]) -> CommonPoint {
    if lines.len() < 2 {
        return CommonPoint::NotApplicable;
    }
    let (l1, l2) = (&lines[0], &lines[1]);
    let point = match intersect(l1, l2) {
        Ok(p) => p,
        Err(_) => {
            return CommonPoint::Parallel {
                first: *l1,
                second: *l2,
            }
        }
    };
    for l3 in &lines[2..] {
        if l3.is_parallel_to(l1) {
            return CommonPoint::Parallel {
                first: *l1,
                second: *l3,
            };
        }
        if !point.on_line(l3) {
            let d = determinant(l1, l2, l3);
            debug_assert!(!d.is_zero());
            return CommonPoint::Violation {
                lines: [*l1, *l2, *l3],
                determinant: d.to_string(),
            };
        }
    }
    CommonPoint::Point { point }
}

/// Lines whose ordinate at θ lies within `ω` of `r/q` (the first
/// collection) and the rest, with `ω` given through its fourth power.
pub fn split_collections(
    lines: &[Line],
    point: &RationalPoint,
    omega_pow4: &QuadraticNumber,
    theta: &QuadraticNumber,
) -> (Vec<Line>, Vec<Line>) {
    let y = point.y();
    lines.iter().partition(|line| {
        let dist = line.ordinate(theta).sub_rational(&y).abs();
        dist.pow(4) <= *omega_pow4
    })
}

/// Quantities attached to a common point in dyadic class `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassQuantities {
    pub d_k: BigUint,
    /// `(2κ/d_k)·(2^k/R)`.
    pub c0: BigRational,
    /// `|qθ − p|`.
    pub gap: QuadraticNumber,
    pub sigma: QuadraticNumber,
    pub w: BigUint,
    pub omega_pow4: QuadraticNumber,
    pub v_pow4: QuadraticNumber,
}

/// `None` when `d_k = 0`.
pub fn class_quantities(
    params: &Params,
    theta: &QuadraticNumber,
    point: &RationalPoint,
    k: u32,
    n: u32,
) -> Result<Option<ClassQuantities>, SieveError> {
    let d_k = params.derived_dk(k)?;
    if d_k.is_zero() {
        return Ok(None);
    }
    let two_k = BigInt::one() << k as usize;
    let r = rat(BigInt::from(params.r().clone()));
    let c0 = rat(2) * params.kappa() / rat(BigInt::from(d_k.clone())) * rat(two_k.clone()) / &r;
    let gap = approximation_gap(theta, point);
    let sigma = gap.recip().expect("θ irrational").mul_rational(&c0);
    let w = BigUint::try_from(two_k).expect("positive") * params.r_pow(n - 1);
    let wq = rat(BigInt::from(w.clone()));
    let q4 = rat(BigInt::from(point.q).pow(4));
    let c03 = num_traits::pow(c0.clone(), 3);
    let omega_pow4 = gap.mul_rational(&(&c03 / (&q4 * &wq)));
    let v_pow4 = sigma.pow(3).mul_rational(&wq.recip());
    Ok(Some(ClassQuantities {
        d_k,
        c0,
        gap,
        sigma,
        w,
        omega_pow4,
        v_pow4,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PigeonholeReport {
    pub verdict: Verdict,
    pub box_size: String,
    /// First `(A, B, C)` with `Ap − Br + Cq = 0`, in order of `B`, then `|A|`.
    pub witness: Option<(i64, i64, i64)>,
}

/// Exhaustive search over `max(|A|, B) ≤ √q`, `B ≥ 0`, `(A, B) ≠ 0`.
pub fn pigeonhole_search(point: &RationalPoint, cap: u128) -> PigeonholeReport {
    let q = point.q;
    let s = Roots::sqrt(&q);
    let box_size = (2 * s as u128 + 1) * (s as u128 + 1);
    if box_size > cap {
        return PigeonholeReport {
            verdict: Verdict::NotEvaluated,
            box_size: box_size.to_string(),
            witness: None,
        };
    }
    let mut witness = None;
    'search: for b in 0..=s {
        for mag in 0..=s {
            for a in [-mag, mag] {
                if (a, b) == (0, 0) || (mag == 0 && a != 0) {
                    continue;
                }
                let t = a * point.p - b * point.r;
                if t.rem_euclid(q) == 0 {
                    witness = Some((a as i64, b as i64, (-t / q) as i64));
                    break 'search;
                }
            }
        }
    }
    PigeonholeReport {
        verdict: verdict(witness.is_some()),
        box_size: box_size.to_string(),
        witness,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrincipalReport {
    pub collection_a: usize,
    pub d_k: String,
    /// `q·d_k ≤ 12σ_k²`, gated on `#𝔄 ≥ 2d_k`.
    pub first_principal: Verdict,
    /// `|qθ − p|² d_k³ q ≤ 48κ²(2^k/R)²`.
    pub gap_bound: Verdict,
    /// `ω_k⁸ ≤ 2⁸·12·κ⁸(2^k/R)⁶ / (d_k⁹ q⁹ R^{2n})`.
    pub omega_upper: Verdict,
    /// `ω_k ≥ δ/(2q^{3/2})`, additionally gated on `q³ < R^{2(n−1)}`.
    pub second_principal: Verdict,
    /// Every line of the first collection has `Ap − Br ≡ 0 (mod q)`.
    pub lattice: Verdict,
    pub pigeonhole: PigeonholeReport,
}

pub fn principal_inequalities(
    collection_a: &[Line],
    point: &RationalPoint,
    quantities: &ClassQuantities,
    k: u32,
    n: u32,
    params: &Params,
    pigeonhole_cap: u128,
) -> PrincipalReport {
    let q = BigInt::from(point.q);
    let qr = rat(q.clone());
    let d = rat(BigInt::from(quantities.d_k.clone()));
    let kappa = params.kappa();
    let t = rat(BigInt::one() << k as usize) / rat(BigInt::from(params.r().clone()));
    let gap2 = quantities.gap.pow(2);
    let gated = BigInt::from(collection_a.len())
        >= BigInt::from(2u8) * BigInt::from(quantities.d_k.clone());

    let (first, gap_bound, omega_upper) = if gated {
        let first = gap2
            .mul_rational(&(&qr * &d))
            .cmp_rational(&(rat(12) * num_traits::pow(quantities.c0.clone(), 2)));
        let rhs8 = rat(48) * kappa * kappa * &t * &t;
        let gap_bound = gap2
            .mul_rational(&(num_traits::pow(d.clone(), 3) * &qr))
            .cmp_rational(&rhs8);
        let r2n = rat(BigInt::from(params.r_pow(2 * n)));
        let rhs_q2 = rat(3072) * num_traits::pow(kappa.clone(), 8) * num_traits::pow(t.clone(), 6)
            / (num_traits::pow(d.clone(), 9) * num_traits::pow(qr.clone(), 9) * r2n);
        let q2 = quantities.omega_pow4.pow(2).cmp_rational(&rhs_q2);
        // ω⁸ ≤ … is an algebraic rewrite of the gap bound
        assert!(
            gap_bound == Ordering::Greater || q2 != Ordering::Greater,
            "gap bound holds but the derived ω bound does not"
        );
        (
            verdict(first != Ordering::Greater),
            verdict(gap_bound != Ordering::Greater),
            verdict(q2 != Ordering::Greater),
        )
    } else {
        (
            Verdict::NotApplicable,
            Verdict::NotApplicable,
            Verdict::NotApplicable,
        )
    };

    let small_q = num_traits::pow(q.clone(), 3) < BigInt::from(params.r_pow(2 * (n - 1)));
    let second = if gated && small_q {
        let delta4 = num_traits::pow(params.delta().clone(), 4);
        let rhs = delta4 / (rat(16) * num_traits::pow(qr.clone(), 6));
        verdict(quantities.omega_pow4.cmp_rational(&rhs) != Ordering::Less)
    } else {
        Verdict::NotApplicable
    };

    let lattice = if collection_a.is_empty() {
        Verdict::NotApplicable
    } else {
        verdict(collection_a.iter().all(|l| lattice_residue(l, point) == 0))
    };

    PrincipalReport {
        collection_a: collection_a.len(),
        d_k: quantities.d_k.to_string(),
        first_principal: first,
        gap_bound,
        omega_upper,
        second_principal: second,
        lattice,
        pigeonhole: pigeonhole_search(point, pigeonhole_cap),
    }
}

/// Violation of the unconditional intersection bounds for two lines
/// crossing a segment of length `len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntersectionBound {
    /// `|qθ − p| > |I|·B₁B₂`.
    Gap,
    /// `q > 2·max(|A₁|, |A₂|)·max(B₁, B₂)`.
    Denominator,
}

pub fn check_intersection_bounds(
    l1: &Line,
    l2: &Line,
    theta: &QuadraticNumber,
    len: &BigRational,
) -> Result<Option<RationalPoint>, IntersectionBound> {
    let Ok(point) = intersect(l1, l2) else {
        return Ok(None);
    };
    let bb = rat(BigInt::from(l1.b) * BigInt::from(l2.b));
    if approximation_gap(theta, &point).cmp_rational(&(len * bb)) == Ordering::Greater {
        return Err(IntersectionBound::Gap);
    }
    let amax = l1.a.unsigned_abs().max(l2.a.unsigned_abs()) as i128;
    let bmax = l1.b.max(l2.b) as i128;
    if point.q > 2 * amax * bmax {
        return Err(IntersectionBound::Denominator);
    }
    Ok(Some(point))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlopeBoundReport {
    pub verdict: Verdict,
    /// `|A|/B` equals `(σ³/W)^{1/4}`.
    pub attained: bool,
}

/// `|A|/B ≤ (σ³/W)^{1/4}` given `B ≤ σ`, `A² ≤ σB`, `B·max(A², B²) ≥ W`.
pub fn slope_bound_check(
    sigma: &BigRational,
    w: &BigRational,
    a: &BigRational,
    b: &BigRational,
) -> SlopeBoundReport {
    let a = a.abs();
    let h = b * std::cmp::max(&a * &a, b * b);
    let premises = b.is_positive()
        && sigma.is_positive()
        && w.is_positive()
        && b <= sigma
        && &a * &a <= sigma * b
        && &h >= w;
    if !premises {
        return SlopeBoundReport {
            verdict: Verdict::NotApplicable,
            attained: false,
        };
    }
    let lhs = num_traits::pow(a, 4) * w;
    let rhs = num_traits::pow(sigma.clone(), 3) * num_traits::pow(b.clone(), 4);
    SlopeBoundReport {
        verdict: verdict(lhs <= rhs),
        attained: lhs == rhs,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StarredReport {
    pub l: u32,
    pub lines: usize,
    pub common_point: CommonPoint,
    pub sigma: Option<String>,
    pub omega_pow4: Option<String>,
    pub v_pow4: Option<String>,
    pub collection_a: Option<usize>,
    pub collection_b: Option<usize>,
    /// `#𝔅_l = 1`.
    pub single_b: Verdict,
    /// `|qθ − p| ≤ κR^{−n/3 − (2λ−1)l}`.
    pub gap_bound: Verdict,
    /// `B₁ ≤ σ(l)` and `A₁² ≤ σ(l)B₁` for all but the smallest `B`.
    pub coefficient_bounds: Verdict,
    /// `(|A|/B)⁴ ≤ σ(l)³/R^{n−1}` for all but the smallest `B`.
    pub slope_bound: Verdict,
    /// `ω(l)⁴ ≤ κ⁴q⁻⁴R^{(−220n − 1081l + 165)/165}`.
    pub omega_first: Verdict,
    /// `q³ ≥ R^{2(n−l−1)}`.
    pub denominator_floor: Verdict,
    /// `ω(l)⁴ ≤ κ⁴R^{−4n}R^{(−641l + 605)/165}`.
    pub omega_second: Verdict,
}

/// Checks for the slope class `l ≥ 1` at level `n`, over lines crossing
/// the level-`(n − l)` ancestor segment.
pub fn starred_checks(
    lines: &[Line],
    l: u32,
    n: u32,
    params: &Params,
    theta: &QuadraticNumber,
) -> StarredReport {
    let na = Verdict::NotApplicable;
    let mut report = StarredReport {
        l,
        lines: lines.len(),
        common_point: check_common_point(lines),
        sigma: None,
        omega_pow4: None,
        v_pow4: None,
        collection_a: None,
        collection_b: None,
        single_b: na,
        gap_bound: na,
        coefficient_bounds: na,
        slope_bound: na,
        omega_first: na,
        denominator_floor: na,
        omega_second: na,
    };
    if lines.len() == 1 {
        report.collection_b = Some(1);
        report.collection_a = Some(0);
        report.single_b = Verdict::Holds;
        return report;
    }
    let Some(point) = report.common_point.point().cloned() else {
        return report;
    };
    let r = params.r();
    let rq = |e: u32| rat(BigInt::from(params.r_pow(e)));
    let kappa = params.kappa();
    let q = rat(BigInt::from(point.q));
    let gap = approximation_gap(theta, &point);
    let kr_l = kappa * rq(l);
    let sigma = gap.recip().expect("θ irrational").mul_rational(&kr_l);
    let v_pow4 = sigma.pow(3).mul_rational(&rq(n - 1).recip());
    let omega_pow4 = gap.mul_rational(
        &(num_traits::pow(kappa.clone(), 3) * rq(3 * l)
            / (num_traits::pow(q.clone(), 4) * rq(n - 1))),
    );

    let (a_set, b_set) = split_collections(lines, &point, &omega_pow4, theta);
    report.collection_a = Some(a_set.len());
    report.collection_b = Some(b_set.len());
    report.single_b = verdict(b_set.len() == 1);

    let frac = |num: i64, den: i64| BigRational::new(num.into(), den.into());
    let ni = i64::from(n);
    let li = i64::from(l);
    // |qθ − p|/κ against R^{(−110n − 3152l)/330}
    let scaled_gap = gap.mul_rational(&kappa.recip());
    report.gap_bound = verdict(
        cmp_quad_power(&scaled_gap, r, &frac(-110 * ni - 3152 * li, 330)) != Ordering::Greater,
    );

    let min_b = lines.iter().map(|x| x.b).min().expect("non-empty");
    let mut skipped = false;
    let mut coeff_ok = true;
    let mut slope_ok = true;
    for line in lines {
        if line.b == min_b && !skipped {
            skipped = true;
            continue;
        }
        let a = rat(line.a);
        let b = rat(line.b);
        // B·|qθ − p| ≤ κR^l and A²·|qθ − p| ≤ κR^l·B
        coeff_ok &= gap.mul_rational(&b).cmp_rational(&kr_l) != Ordering::Greater
            && gap.mul_rational(&(&a * &a)).cmp_rational(&(&kr_l * &b)) != Ordering::Greater;
        let lhs = num_traits::pow(a.clone(), 4);
        let ratio = &lhs / num_traits::pow(b, 4);
        slope_ok &= v_pow4.cmp_rational(&ratio) != Ordering::Less;
    }
    report.coefficient_bounds = verdict(coeff_ok);
    report.slope_bound = verdict(slope_ok);

    let kappa4 = num_traits::pow(kappa.clone(), 4);
    let q4 = num_traits::pow(q.clone(), 4);
    let scaled = omega_pow4.mul_rational(&(&q4 / &kappa4));
    report.omega_first = verdict(
        cmp_quad_power(&scaled, r, &frac(-220 * ni - 1081 * li + 165, 165)) != Ordering::Greater,
    );
    report.denominator_floor = if n > l {
        let q3 = num_traits::pow(BigInt::from(point.q), 3);
        verdict(q3 >= BigInt::from(params.r_pow(2 * (n - l - 1))))
    } else {
        Verdict::NotApplicable
    };
    let scaled = omega_pow4.mul_rational(&(rq(4 * n) / &kappa4));
    report.omega_second =
        verdict(cmp_quad_power(&scaled, r, &frac(-641 * li + 605, 165)) != Ordering::Greater);

    report.sigma = Some(sigma.to_spec_string());
    report.omega_pow4 = Some(omega_pow4.to_spec_string());
    report.v_pow4 = Some(v_pow4.to_spec_string());
    report
}
