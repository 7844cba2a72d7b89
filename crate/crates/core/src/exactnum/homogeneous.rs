use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use super::{QuadraticIrrational, QuadraticNumber};

/// Coefficient bound for the machine-integer scan.
const SMALL_COEFF: i128 = 1 << 16;
/// Largest `q_max` accepted by the machine-integer scan.
const SMALL_QMAX: u64 = 1 << 24;
/// Float estimates are trusted to this relative accuracy when skipping
/// exact comparisons.
const ESTIMATE_SLACK: f64 = 1e-9;

/// Minimum of `q²·||qθ||` over `1 ≤ q ≤ q_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneousMinimum {
    /// Smallest minimizing `q`.
    pub q: u64,
    /// Exact value `q²·||qθ||`.
    pub value: QuadraticNumber,
    /// Whether `value ≥ δ`.
    pub meets_delta: bool,
}

/// Scans `q = 1..=q_max` for the minimum of `q²·||qθ||`.
///
/// Small coefficients take a machine-integer path that only falls back to
/// exact big-integer comparison when a candidate's float estimate is within
/// `1e-9` of the running minimum; everything else is exact throughout.
pub fn check_homogeneous(
    theta: &QuadraticIrrational,
    delta: &BigRational,
    q_max: u64,
) -> HomogeneousMinimum {
    assert!(q_max >= 1, "q_max must be at least 1");
    let (q, value) = match small_coefficients(theta.value(), q_max) {
        Some(small) => scan_small(&small, theta.value(), q_max),
        None => scan_exact(theta.value(), q_max),
    };
    let meets_delta = value.cmp_rational(delta) != std::cmp::Ordering::Less;
    HomogeneousMinimum {
        q,
        value,
        meets_delta,
    }
}

fn term(theta: &QuadraticNumber, q: u64) -> QuadraticNumber {
    let qb = BigInt::from(q);
    theta.mul_int(&qb).nearest_int_dist().mul_int(&(&qb * &qb))
}

pub(crate) fn scan_exact(theta: &QuadraticNumber, q_max: u64) -> (u64, QuadraticNumber) {
    let mut best = (1, term(theta, 1));
    for q in 2..=q_max {
        let v = term(theta, q);
        if v < best.1 {
            best = (q, v);
        }
    }
    best
}

struct Small {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
    sqrt_d: f64,
}

fn small_coefficients(theta: &QuadraticNumber, q_max: u64) -> Option<Small> {
    if q_max > SMALL_QMAX {
        return None;
    }
    let conv = |x: &BigInt| x.to_i128().filter(|v| v.abs() <= SMALL_COEFF);
    let d = conv(theta.d())?;
    Some(Small {
        a: conv(theta.a())?,
        b: conv(theta.b())?,
        c: conv(theta.c())?,
        d,
        sqrt_d: (d as f64).sqrt(),
    })
}

fn sign_small(u: i128, v: i128, d: i128) -> i32 {
    let su = u.signum() as i32;
    let sv = v.signum() as i32;
    if sv == 0 {
        return su;
    }
    if su == 0 || su == sv {
        return sv;
    }
    if u * u > v * v * d {
        su
    } else {
        sv
    }
}

fn scan_small(s: &Small, theta: &QuadraticNumber, q_max: u64) -> (u64, QuadraticNumber) {
    let mut best_q = 1;
    let mut best = term(theta, 1);
    let mut best_est = best.to_f64();
    for q in 2..=q_max {
        let qi = q as i128;
        let (num_a, num_b) = (qi * s.a, qi * s.b);
        let root = Roots::sqrt(&((num_b * num_b * s.d) as u128)) as i128;
        let m = if num_b > 0 {
            Integer::div_floor(&(num_a + root), &s.c)
        } else {
            Integer::div_floor(&(num_a - root - 1), &s.c)
        };
        // frac(qθ) = (alpha + beta·√d)/c
        let (mut alpha, mut beta) = (num_a - m * s.c, num_b);
        if sign_small(2 * alpha - s.c, 2 * beta, s.d) > 0 {
            alpha = s.c - alpha;
            beta = -beta;
        }
        let magnitude = if alpha.signum() * beta.signum() < 0 {
            let norm = (alpha * alpha - beta * beta * s.d).abs() as f64;
            norm / (alpha.abs() as f64 + beta.abs() as f64 * s.sqrt_d)
        } else {
            alpha.abs() as f64 + beta.abs() as f64 * s.sqrt_d
        };
        let est = (qi * qi) as f64 * magnitude / s.c as f64;
        if est < best_est * (1.0 + ESTIMATE_SLACK) {
            let value = term(theta, q);
            if value < best {
                best = value;
                best_q = q;
                best_est = est.min(best_est);
            }
        }
    }
    (best_q, best)
}
