//! Independent oracles: badness of the extracted ξ interval, condition (0)
//! on θ, and a brute-force re-derivation of the sieve's survivor cells.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use crate::exactnum::{check_homogeneous, ContinuedFraction, QuadraticIrrational, QuadraticNumber};
use crate::geometry::{forbidden_interval, Line};
use crate::sieve::Params;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("grid oracle needs about {estimate} interval tests, above the cap {cap}")]
    OverCap { estimate: u128, cap: u128 },
    #[error("depth {0} is outside the oracle's range")]
    BadDepth(u32),
    #[error("R = {0} is too large for the grid oracle")]
    BranchingTooLarge(String),
}

/// The pair `(A, B)` and integer `C` attaining a worst case, with the
/// exact value of `||Aθ − Bξ||·max(A², B²)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Worst {
    pub a: i64,
    pub b: i64,
    pub c: BigInt,
    pub value: QuadraticNumber,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadnessReport {
    pub h_max: u128,
    /// Minimum over all pairs with `B ≥ 0` (both signs covered by symmetry).
    pub worst: Worst,
    /// Minimum over pairs with `B > 0` only.
    pub worst_positive_b: Worst,
    pub pairs_checked: u64,
    pub pass: bool,
    pub pass_positive_b: bool,
}

fn tie_key(w: &Worst) -> (i64, i64, BigInt) {
    (w.b, w.a.abs(), w.c.clone())
}

fn better(candidate: &Worst, incumbent: &Option<Worst>) -> bool {
    match incumbent {
        None => true,
        Some(cur) => match candidate.value.cmp(&cur.value) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => tie_key(candidate) < tie_key(cur),
        },
    }
}

/// Worst case of `||Aθ − Bξ||` for `ξ ∈ [lo, hi]`, with the integer `C`
/// nearest to `−(Aθ − Bξ)` at the worst point.
fn worst_distance(
    theta: &QuadraticNumber,
    a: i64,
    b: i64,
    lo: &BigRational,
    hi: &BigRational,
) -> (QuadraticNumber, BigInt) {
    let at = |xi: &BigRational| {
        theta
            .mul_int(&BigInt::from(a))
            .sub_rational(&(xi * BigRational::from_integer(b.into())))
    };
    // Aθ − Bξ is monotone in ξ; with B ≥ 0 the left end is at ξ = hi
    let x1 = at(hi);
    let x2 = at(lo);
    let first_int = x1.ceil();
    if x2.cmp_rational(&BigRational::from_integer(first_int.clone())) != Ordering::Less {
        return (QuadraticNumber::zero_in(theta), -first_int);
    }
    let (d1, d2) = (x1.nearest_int_dist(), x2.nearest_int_dist());
    if d1 <= d2 {
        (d1, -x1.round_nearest())
    } else {
        (d2, -x2.round_nearest())
    }
}

/// Minimum of `||Aθ − Bξ||·max(A², B²)` over every integer pair with
/// `B·max(A², B²) ≤ h_max` (plus `B = 0`, `A² ≤ h_max`) and every `ξ` in
/// `[lo, hi]`.
pub fn verify_bad(
    theta: &QuadraticNumber,
    lo: &BigRational,
    hi: &BigRational,
    delta: &BigRational,
    h_max: u128,
) -> BadnessReport {
    assert!(lo <= hi, "empty ξ interval");
    assert!(h_max >= 1, "H_max must be at least 1");
    let mut best: Option<Worst> = None;
    let mut best_pos: Option<Worst> = None;
    let mut pairs = 0u64;
    let consider = |a: i64, b: i64, best: &mut Option<Worst>, best_pos: &mut Option<Worst>| {
        let (dist, c) = worst_distance(theta, a, b, lo, hi);
        let scale = (a.unsigned_abs() as u128).pow(2).max((b as u128).pow(2));
        let w = Worst {
            a,
            b,
            c,
            value: dist.mul_int(&BigInt::from(scale)),
        };
        if b > 0 && better(&w, best_pos) {
            *best_pos = Some(w.clone());
        }
        if better(&w, best) {
            *best = Some(w);
        }
    };
    // B = 0: only A > 0 is needed, ||−x|| = ||x||
    let mut a: i64 = 1;
    while (a as u128).pow(2) <= h_max {
        consider(a, 0, &mut best, &mut best_pos);
        pairs += 1;
        a += 1;
    }
    let mut b: i64 = 1;
    while (b as u128).pow(3) <= h_max {
        let a_max = Roots::sqrt(&(h_max / b as u128)).max(b as u128) as i64;
        for a in -a_max..=a_max {
            let h = (b as u128) * (a.unsigned_abs() as u128).pow(2).max((b as u128).pow(2));
            if h <= h_max {
                consider(a, b, &mut best, &mut best_pos);
                pairs += 1;
            }
        }
        b += 1;
    }
    let worst = best.expect("h_max ≥ 1 admits (0, 1)");
    let worst_positive_b = best_pos.expect("h_max ≥ 1 admits (0, 1)");
    let pass = worst.value.cmp_rational(delta) != Ordering::Less;
    let pass_positive_b = worst_positive_b.value.cmp_rational(delta) != Ordering::Less;
    BadnessReport {
        h_max,
        worst,
        worst_positive_b,
        pairs_checked: pairs,
        pass,
        pass_positive_b,
    }
}

/// Permitted cells of the level-`depth` grid over `[start, start + κ/R]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridOracle {
    pub depth: u32,
    pub cells: Vec<(BigRational, BigRational)>,
    /// Primitive triples with `H < R^{depth−1}` whose interval meets the window.
    pub triples: usize,
}

/// Brute-force survivor set.
///
/// A level-`depth` cell is permitted iff for every `m` in `2..=depth`, its
/// level-`m` ancestor cell meets no closed forbidden interval with
/// `R^{m−2} ≤ H < R^{m−1}`. Triples come from a plain loop over `(A, B)`
/// with candidate `C` located through a float-free rational enclosure of θ.
pub fn grid_oracle(
    theta: &QuadraticNumber,
    params: &Params,
    start: &BigRational,
    depth: u32,
    cap: u128,
) -> Result<GridOracle, VerifyError> {
    if depth == 0 || depth > 8 {
        return Err(VerifyError::BadDepth(depth));
    }
    let r = params
        .r_small()
        .filter(|&r| r <= 1 << 12)
        .ok_or_else(|| VerifyError::BranchingTooLarge(params.r().to_string()))? as u128;
    let delta = params.delta();
    let kappa = params.kappa();
    let rpow = |e: u32| r.pow(e);
    let h_limit = rpow(depth - 1);
    let window_lo = start.clone();
    let window_hi = start + kappa / BigRational::from_integer(r.into());

    let tol = BigRational::new(BigInt::one(), BigInt::one() << 64usize);
    let enc = theta.enclosure(&tol);
    let mut lines: Vec<Line> = Vec::new();
    let mut b: u128 = 1;
    while b * b * b < h_limit {
        let a_bound = Roots::sqrt(&(h_limit / b)) + 1;
        for a in -(a_bound as i128)..=(a_bound as i128) {
            let h = b * (a.unsigned_abs()).pow(2).max(b * b);
            if h >= h_limit {
                continue;
            }
            let bq = BigRational::from_integer(BigInt::from(b));
            let aq = BigRational::from_integer(BigInt::from(a));
            // C ∈ [B·lo − Aθ − Bδ, B·hi − Aθ + Bδ], widened by the enclosure
            let (t_lo, t_hi) = if a >= 0 {
                (&aq * &enc.lo, &aq * &enc.hi)
            } else {
                (&aq * &enc.hi, &aq * &enc.lo)
            };
            let c_from =
                (&bq * &window_lo - t_hi - &bq * delta).floor().to_integer() - BigInt::one();
            let c_to = (&bq * &window_hi - t_lo + &bq * delta).ceil().to_integer() + BigInt::one();
            let mut c = c_from;
            while c <= c_to {
                let ci = c.to_i64().expect("C fits in i64");
                let g = (a.unsigned_abs() as u64)
                    .gcd(&(b as u64))
                    .gcd(&ci.unsigned_abs());
                if g == 1 {
                    let line = Line {
                        a: a as i64,
                        b: b as i64,
                        c: ci,
                    };
                    if forbidden_interval(&line, theta, delta).meets(&window_lo, &window_hi) {
                        lines.push(line);
                    }
                }
                c += BigInt::one();
            }
        }
        b += 1;
    }

    let cells_final = rpow(depth - 1);
    let work: u128 = (2..=depth).map(|m| rpow(m - 1)).sum::<u128>() * (lines.len() as u128 + 1);
    if work > cap {
        return Err(VerifyError::OverCap {
            estimate: work,
            cap,
        });
    }

    // flagged[m] marks level-m cells (index 0..R^{m−1}) hit at their own level
    let mut flagged: Vec<Vec<bool>> = vec![Vec::new(); depth as usize + 1];
    for m in 2..=depth {
        let count = rpow(m - 1) as usize;
        let len = kappa / BigRational::from_integer(BigInt::from(rpow(m)));
        let (h_lo, h_hi) = (rpow(m - 2), rpow(m - 1));
        let mut marks = vec![false; count];
        for line in lines.iter().filter(|l| {
            let h = l.height();
            h >= h_lo && h < h_hi
        }) {
            let fi = forbidden_interval(line, theta, delta);
            for (i, mark) in marks.iter_mut().enumerate() {
                if *mark {
                    continue;
                }
                let lo = start + &len * BigRational::from_integer(i.into());
                let hi = &lo + &len;
                if fi.meets(&lo, &hi) {
                    *mark = true;
                }
            }
        }
        flagged[m as usize] = marks;
    }
    let len = kappa / BigRational::from_integer(BigInt::from(rpow(depth)));
    let mut cells = Vec::new();
    for j in 0..cells_final {
        let blocked = (2..=depth).any(|m| {
            let ancestor = j / rpow(depth - m);
            flagged[m as usize][ancestor as usize]
        });
        if !blocked {
            let lo = start + &len * BigRational::from_integer(BigInt::from(j));
            let hi = &lo + &len;
            cells.push((lo, hi));
        }
    }
    Ok(GridOracle {
        depth,
        cells,
        triples: lines.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition0Report {
    pub q_max: u64,
    pub argmin_q: u64,
    /// `min q²·||qθ||` over `q ≤ q_max`, exact.
    pub minimum: QuadraticNumber,
    /// `minimum − δ`.
    pub margin: QuadraticNumber,
    pub pass: bool,
    /// Largest partial quotient `a_i`, `i ≥ 1`, of θ's expansion.
    pub max_partial_quotient: BigInt,
    /// `1/(a_max + 2)`, a lower bound for `q·||qθ||` at every `q`.
    pub cf_bound: BigRational,
    /// Whether the finite check plus the bound covers every `q`.
    pub extends_to_all_q: bool,
}

pub fn certify_condition0(
    theta: &QuadraticIrrational,
    delta: &BigRational,
    q_max: u64,
) -> Condition0Report {
    let m = check_homogeneous(theta, delta, q_max);
    let cf = ContinuedFraction::from_quadratic(theta.value())
        .expect("quadratic irrationals have periodic expansions");
    let a_max = cf.max_partial_quotient().unwrap_or_else(BigInt::one);
    let cf_bound = BigRational::new(BigInt::one(), &a_max + BigInt::from(2));
    // q > q_max gives q²||qθ|| ≥ q/(a_max + 2) > q_max/(a_max + 2)
    let tail = &cf_bound * BigRational::from_integer(q_max.into());
    let pass = m.meets_delta || !delta.is_positive();
    let extends_to_all_q = pass && (tail >= *delta || !delta.is_positive());
    Condition0Report {
        q_max,
        argmin_q: m.q,
        margin: m.value.sub_rational(delta),
        minimum: m.value,
        pass,
        max_partial_quotient: a_max,
        cf_bound,
        extends_to_all_q,
    }
}

/// Whether `||Aθ − Bξ||·max(A², B²)` for a specific triple equals `value`;
/// used to recheck a reported minimizer.
pub fn recheck_worst(
    theta: &QuadraticNumber,
    lo: &BigRational,
    hi: &BigRational,
    w: &Worst,
) -> bool {
    let (dist, _) = worst_distance(theta, w.a, w.b, lo, hi);
    let scale = (w.a.unsigned_abs() as u128)
        .pow(2)
        .max((w.b.unsigned_abs() as u128).pow(2));
    dist.mul_int(&BigInt::from(scale)) == w.value
}
