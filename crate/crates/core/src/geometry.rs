//! Integer lines `Ax − By + C = 0`, their heights, and the forbidden
//! intervals they cut out of the vertical fiber `x = θ`.

use std::cmp::Ordering;
use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::QuadraticNumber;

/// Heights above this are refused by the enumerator.
pub const MAX_ENUM_HEIGHT: u128 = 1 << 120;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("B must be positive, got {0}")]
    NonPositiveB(i64),
    #[error("triple ({a}, {b}, {c}) is not primitive")]
    NotPrimitive { a: i64, b: i64, c: i64 },
    #[error("height of ({a}, {b}) overflows 128 bits")]
    Overflow { a: i64, b: i64 },
    #[error("lines {0} and {1} are parallel")]
    Parallel(Line, Line),
    #[error("height bound {0} exceeds the enumeration limit 2^120")]
    HeightTooLarge(u128),
}

/// `H(A, B) = B·max(A², B²)`.
pub fn height(a: i64, b: i64) -> Result<u128, GeometryError> {
    if b <= 0 {
        return Err(GeometryError::NonPositiveB(b));
    }
    let a2 = (a.unsigned_abs() as u128).pow(2);
    let b2 = (b as u128).pow(2);
    a2.max(b2)
        .checked_mul(b as u128)
        .ok_or(GeometryError::Overflow { a, b })
}

/// The line `Ax − By + C = 0` with `B > 0` and `gcd(A, B, C) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Line {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Line {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self, GeometryError> {
        if b <= 0 {
            return Err(GeometryError::NonPositiveB(b));
        }
        let g = a
            .unsigned_abs()
            .gcd(&b.unsigned_abs())
            .gcd(&c.unsigned_abs());
        if g != 1 {
            return Err(GeometryError::NotPrimitive { a, b, c });
        }
        height(a, b)?;
        Ok(Line { a, b, c })
    }

    pub fn height(&self) -> u128 {
        height(self.a, self.b).expect("validated at construction")
    }

    /// Ordinate `(Aθ + C)/B` where the line crosses `x = θ`.
    pub fn ordinate(&self, theta: &QuadraticNumber) -> QuadraticNumber {
        theta
            .mul_int(&BigInt::from(self.a))
            .add_rational(&BigRational::from_integer(self.c.into()))
            .mul_rational(&BigRational::new(BigInt::one(), self.b.into()))
    }

    /// Whether the line crosses the fiber inside `[lo, hi]`.
    pub fn crosses(&self, theta: &QuadraticNumber, lo: &BigRational, hi: &BigRational) -> bool {
        let y = self.ordinate(theta);
        y.cmp_rational(lo) != Ordering::Less && y.cmp_rational(hi) != Ordering::Greater
    }

    pub fn is_parallel_to(&self, other: &Line) -> bool {
        (self.a as i128) * (other.b as i128) == (other.a as i128) * (self.b as i128)
    }
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// `Δ(A,B,C)`: ordinates within `δ/H` of `(Aθ+C)/B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenInterval {
    pub center: QuadraticNumber,
    pub half_width: BigRational,
    pub source: Line,
    pub height: u128,
}

impl ForbiddenInterval {
    pub fn lo(&self) -> QuadraticNumber {
        self.center.sub_rational(&self.half_width)
    }

    pub fn hi(&self) -> QuadraticNumber {
        self.center.add_rational(&self.half_width)
    }

    pub fn length(&self) -> BigRational {
        &self.half_width * BigRational::from_integer(2.into())
    }

    /// Closed intersection test against `[lo, hi]`; touching counts.
    pub fn meets(&self, lo: &BigRational, hi: &BigRational) -> bool {
        self.center.cmp_rational(&(hi + &self.half_width)) != Ordering::Greater
            && self.center.cmp_rational(&(lo - &self.half_width)) != Ordering::Less
    }
}

pub fn forbidden_interval(
    line: &Line,
    theta: &QuadraticNumber,
    delta: &BigRational,
) -> ForbiddenInterval {
    let h = line.height();
    ForbiddenInterval {
        center: line.ordinate(theta),
        half_width: delta / BigRational::from_integer(BigInt::from(h)),
        source: *line,
        height: h,
    }
}

/// The point `(p/q, r/q)` with `q > 0` and `gcd(p, r, q) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    pub p: i128,
    pub r: i128,
    pub q: i128,
}

impl RationalPoint {
    pub fn new(p: i128, r: i128, q: i128) -> Self {
        assert!(q != 0, "zero denominator");
        let s = if q < 0 { -1 } else { 1 };
        let g = p
            .unsigned_abs()
            .gcd(&r.unsigned_abs())
            .gcd(&q.unsigned_abs()) as i128;
        RationalPoint {
            p: s * p / g,
            r: s * r / g,
            q: s * q / g,
        }
    }

    /// Whether `line` passes through the point: `Ap − Br + Cq = 0`.
    pub fn on_line(&self, line: &Line) -> bool {
        (line.a as i128) * self.p - (line.b as i128) * self.r + (line.c as i128) * self.q == 0
    }

    pub fn x(&self) -> BigRational {
        BigRational::new(self.p.into(), self.q.into())
    }

    pub fn y(&self) -> BigRational {
        BigRational::new(self.r.into(), self.q.into())
    }
}

/// Intersection of two lines together with the scale `s` relating the
/// reduced point to the raw determinants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Intersection {
    pub point: RationalPoint,
    /// `s·q = A₁B₂ − A₂B₁`, `s·p = B₁C₂ − B₂C₁`, `s·r = A₁C₂ − A₂C₁`.
    pub s: i128,
}

pub fn intersect_scaled(l1: &Line, l2: &Line) -> Result<Intersection, GeometryError> {
    let (a1, b1, c1) = (l1.a as i128, l1.b as i128, l1.c as i128);
    let (a2, b2, c2) = (l2.a as i128, l2.b as i128, l2.c as i128);
    let sq = a1 * b2 - a2 * b1;
    if sq == 0 {
        return Err(GeometryError::Parallel(*l1, *l2));
    }
    let sp = b1 * c2 - b2 * c1;
    let sr = a1 * c2 - a2 * c1;
    let point = RationalPoint::new(sp, sr, sq);
    Ok(Intersection {
        point,
        s: sq / point.q,
    })
}

pub fn intersect(l1: &Line, l2: &Line) -> Result<RationalPoint, GeometryError> {
    intersect_scaled(l1, l2).map(|i| i.point)
}

/// `(A·p − B·r) mod q`, zero exactly when `(A, B)` lies in the lattice of
/// directions through the point.
pub fn lattice_residue(line: &Line, point: &RationalPoint) -> i128 {
    ((line.a as i128) * point.p - (line.b as i128) * point.r).rem_euclid(point.q)
}

/// Primitive triples with `h_min ≤ H < h_max` whose closed forbidden
/// interval meets `[y_lo, y_hi]`.
///
/// Order: `B` ascending, then `|A|` ascending with the negative value
/// first, then `C` ascending.
pub fn enumerate_triples(
    h_min: u128,
    h_max: u128,
    y_lo: &BigRational,
    y_hi: &BigRational,
    theta: &QuadraticNumber,
    delta: &BigRational,
) -> Result<TripleIter, GeometryError> {
    if h_max > MAX_ENUM_HEIGHT {
        return Err(GeometryError::HeightTooLarge(h_max));
    }
    let empty = h_min.max(1) >= h_max || y_lo > y_hi;
    Ok(TripleIter {
        h_min: h_min.max(1),
        h_max,
        y_lo: y_lo.clone(),
        y_hi: y_hi.clone(),
        theta: theta.clone(),
        delta: delta.clone(),
        b: 1,
        a_abs: None,
        buffer: VecDeque::new(),
        done: empty,
    })
}

pub struct TripleIter {
    h_min: u128,
    h_max: u128,
    y_lo: BigRational,
    y_hi: BigRational,
    theta: QuadraticNumber,
    delta: BigRational,
    b: u128,
    /// Next `|A|` to examine for the current `B`; `None` before the first.
    a_abs: Option<u128>,
    buffer: VecDeque<Line>,
    done: bool,
}

fn ceil_sqrt(x: u128) -> u128 {
    let s = Roots::sqrt(&x);
    if s * s == x {
        s
    } else {
        s + 1
    }
}

impl TripleIter {
    /// Largest `|A|` admissible for the current `B`.
    fn a_max(&self) -> u128 {
        let b = self.b;
        if b * b * b >= self.h_max {
            return 0;
        }
        // B·A² < h_max with |A| > B, or any |A| ≤ B
        let bound = Roots::sqrt(&((self.h_max - 1) / b));
        bound.max(b)
    }

    /// First `|A|` for the current `B` meeting the lower height bound.
    fn a_min(&self) -> u128 {
        let b = self.b;
        if b * b * b >= self.h_min {
            0
        } else {
            ceil_sqrt(self.h_min.div_ceil(b)).max(b + 1)
        }
    }

    fn fill(&mut self, a: i64, b: i64, h: u128) {
        let hw = &self.delta / BigRational::from_integer(BigInt::from(h));
        let bb = BigRational::from_integer(b.into());
        let shift = self.theta.mul_int(&BigInt::from(-a));
        let c_lo = shift.add_rational(&(&bb * (&self.y_lo - &hw))).ceil();
        let c_hi = shift.add_rational(&(&bb * (&self.y_hi + &hw))).floor();
        let g = a.unsigned_abs().gcd(&b.unsigned_abs());
        let mut c = c_lo;
        while c <= c_hi {
            let ci: i64 = (&c).try_into().expect("C fits in i64");
            if g.gcd(&ci.unsigned_abs()) == 1 {
                self.buffer.push_back(Line { a, b, c: ci });
            }
            c += 1;
        }
    }

    fn advance(&mut self) {
        loop {
            let b = self.b;
            if b * b * b >= self.h_max {
                self.done = true;
                return;
            }
            let next = match self.a_abs {
                None => self.a_min(),
                Some(x) => x + 1,
            };
            if next > self.a_max() {
                self.b += 1;
                self.a_abs = None;
                continue;
            }
            self.a_abs = Some(next);
            let h = b * b.max(next) * b.max(next);
            if h < self.h_min || h >= self.h_max {
                continue;
            }
            let (ai, bi) = (next as i64, b as i64);
            if next == 0 {
                self.fill(0, bi, h);
            } else {
                self.fill(-ai, bi, h);
                self.fill(ai, bi, h);
            }
            if !self.buffer.is_empty() {
                return;
            }
        }
    }
}

impl Iterator for TripleIter {
    type Item = Line;

    fn next(&mut self) -> Option<Line> {
        if self.buffer.is_empty() && !self.done {
            self.advance();
        }
        self.buffer.pop_front()
    }
}

/// Whether `[lo, hi]` and the closed forbidden interval of `line` overlap.
pub fn line_meets_window(
    line: &Line,
    theta: &QuadraticNumber,
    delta: &BigRational,
    lo: &BigRational,
    hi: &BigRational,
) -> bool {
    forbidden_interval(line, theta, delta).meets(lo, hi)
}

/// `|qθ − p|` for a rational point.
pub fn approximation_gap(theta: &QuadraticNumber, point: &RationalPoint) -> QuadraticNumber {
    theta
        .mul_int(&BigInt::from(point.q))
        .sub_rational(&BigRational::from_integer(point.p.into()))
        .abs()
}
