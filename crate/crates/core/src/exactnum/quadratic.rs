use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ExactError;

/// Largest prime examined when pulling square factors out of a radicand.
const SQUAREFREE_TRIAL_LIMIT: u64 = 1 << 20;

/// An element `(a + b√d)/c` of the real quadratic field `Q(√d)`.
///
/// Canonical form: `c > 0`, `gcd(a, b, c) = 1`, and `d` has had its small
/// square factors moved into `b`. `b = 0` is allowed, which lets rational
/// values (interval endpoints, distances) live in the same field as θ.
/// Binary operations require both operands to share `d` and panic otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticNumber {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

/// A closed rational interval `[lo, hi]` known to contain a real value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Enclosure {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigInt::from(2)
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

fn squarefree_split(d: &BigInt) -> (BigInt, BigInt) {
    // returns (s, d') with d = s^2 d'
    let mut rest = d.clone();
    let mut s = BigInt::one();
    let mut p: u64 = 2;
    while p <= SQUAREFREE_TRIAL_LIMIT {
        let pb = BigInt::from(p);
        let p2 = &pb * &pb;
        if p2 > rest {
            break;
        }
        while (&rest % &p2).is_zero() {
            rest /= &p2;
            s *= &pb;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, rest)
}

fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

impl QuadraticNumber {
    /// Builds `(a + b√d)/c`, validating `d` and normalizing.
    pub fn new(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
        d: impl Into<BigInt>,
    ) -> Result<Self, ExactError> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        if c.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        if d <= BigInt::one() || is_perfect_square(&d) {
            return Err(ExactError::BadRadicand(d));
        }
        let (s, d) = squarefree_split(&d);
        Ok(Self::raw(a, b * s, c, d))
    }

    /// Embeds a rational into `Q(√d)`; `d` is taken from `field`.
    pub fn from_rational(x: &BigRational, field: &QuadraticNumber) -> Self {
        Self::raw(
            x.numer().clone(),
            BigInt::zero(),
            x.denom().clone(),
            field.d.clone(),
        )
    }

    pub fn from_integer(n: impl Into<BigInt>, field: &QuadraticNumber) -> Self {
        Self::raw(n.into(), BigInt::zero(), BigInt::one(), field.d.clone())
    }

    pub fn zero_in(field: &QuadraticNumber) -> Self {
        Self::from_integer(0, field)
    }

    fn raw(mut a: BigInt, mut b: BigInt, mut c: BigInt, d: BigInt) -> Self {
        debug_assert!(!c.is_zero());
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = super::gcd3(&a, &b, &c);
        if !g.is_one() && !g.is_zero() {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        QuadraticNumber { a, b, c, d }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        self.is_rational()
            .then(|| BigRational::new(self.a.clone(), self.c.clone()))
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(
            self.d, other.d,
            "quadratic numbers from different fields Q(√{}) and Q(√{})",
            self.d, other.d
        );
    }

    /// Sign of the value, decided by integer arithmetic alone.
    pub fn signum(&self) -> Ordering {
        sign_of(&self.a, &self.b, &self.d)
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    pub fn conj(&self) -> Self {
        Self::raw(self.a.clone(), -&self.b, self.c.clone(), self.d.clone())
    }

    /// Field norm `(a² − b²d)/c²`.
    pub fn norm(&self) -> BigRational {
        BigRational::new(
            &self.a * &self.a - &self.b * &self.b * &self.d,
            &self.c * &self.c,
        )
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        self.same_field(rhs);
        if rhs.is_zero() {
            return None;
        }
        let n = &rhs.a * &rhs.a - &rhs.b * &rhs.b * &rhs.d;
        let a = (&self.a * &rhs.a - &self.b * &rhs.b * &self.d) * &rhs.c;
        let b = (&self.b * &rhs.a - &self.a * &rhs.b) * &rhs.c;
        Some(Self::raw(a, b, &self.c * n, self.d.clone()))
    }

    pub fn recip(&self) -> Option<Self> {
        Self::from_integer(1, self).checked_div(self)
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::from_integer(1, self);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn add_rational(&self, x: &BigRational) -> Self {
        let (u, v) = (x.numer(), x.denom());
        Self::raw(
            &self.a * v + u * &self.c,
            &self.b * v,
            &self.c * v,
            self.d.clone(),
        )
    }

    pub fn sub_rational(&self, x: &BigRational) -> Self {
        self.add_rational(&-x)
    }

    pub fn mul_rational(&self, x: &BigRational) -> Self {
        Self::raw(
            &self.a * x.numer(),
            &self.b * x.numer(),
            &self.c * x.denom(),
            self.d.clone(),
        )
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Self::raw(&self.a * k, &self.b * k, self.c.clone(), self.d.clone())
    }

    /// Exact comparison with a rational.
    pub fn cmp_rational(&self, x: &BigRational) -> Ordering {
        let (u, v) = (x.numer(), x.denom());
        sign_of(&(&self.a * v - u * &self.c), &(&self.b * v), &self.d)
    }

    /// `⌊x⌋`, using one integer square root.
    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.div_floor(&self.c);
        }
        let s = (&self.b * &self.b * &self.d).sqrt();
        if self.b.is_positive() {
            (&self.a + s).div_floor(&self.c)
        } else {
            (&self.a - s - BigInt::one()).div_floor(&self.c)
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    /// `||x||` as an exact element of the same field.
    pub fn nearest_int_dist(&self) -> Self {
        let m = self.floor();
        let frac = self.sub_rational(&BigRational::from_integer(m));
        // frac ≤ 1/2  ⇔  2·frac − 1 ≤ 0
        let twice = frac
            .mul_int(&BigInt::from(2))
            .sub_rational(&BigRational::one());
        if twice.signum() != Ordering::Greater {
            frac
        } else {
            (-&frac).add_rational(&BigRational::one())
        }
    }

    /// The nearest integer, ties broken downward.
    pub fn round_nearest(&self) -> BigInt {
        let m = self.floor();
        let frac = self.sub_rational(&BigRational::from_integer(m.clone()));
        let twice = frac
            .mul_int(&BigInt::from(2))
            .sub_rational(&BigRational::one());
        if twice.signum() == Ordering::Greater {
            m + 1
        } else {
            m
        }
    }

    /// Rational enclosure `[lo, hi]` with `hi − lo ≤ tol`.
    pub fn enclosure(&self, tol: &BigRational) -> Enclosure {
        if self.b.is_zero() {
            let x = BigRational::new(self.a.clone(), self.c.clone());
            return Enclosure {
                lo: x.clone(),
                hi: x,
            };
        }
        assert!(tol.is_positive(), "enclosure tolerance must be positive");
        // need 1/(c·2^k) ≤ tol
        let need = (tol.recip() / BigRational::from_integer(self.c.clone()))
            .ceil()
            .to_integer();
        let k = need.bits();
        let scale = BigInt::one() << k;
        let s = (&self.b * &self.b * &self.d * &scale * &scale).sqrt();
        let base = &self.a * &scale;
        let den = &self.c * &scale;
        let (lo, hi) = if self.b.is_positive() {
            (&base + &s, &base + &s + 1)
        } else {
            (&base - &s - 1, &base - &s)
        };
        Enclosure {
            lo: BigRational::new(lo, den.clone()),
            hi: BigRational::new(hi, den),
        }
    }

    /// Floating approximation for display and heuristics only.
    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return BigRational::new(self.a.clone(), self.c.clone())
                .to_f64()
                .unwrap_or(f64::NAN);
        }
        // refine until the width is small relative to the value, which is
        // nonzero because it is irrational
        let mut bits = 80usize;
        loop {
            let tol = BigRational::new(BigInt::one(), BigInt::one() << bits);
            let enc = self.enclosure(&tol);
            let rel = BigRational::new(BigInt::one(), BigInt::one() << 64);
            if enc.lo.signum() == enc.hi.signum() && enc.width() <= enc.lo.abs() * rel {
                return enc.midpoint().to_f64().unwrap_or(f64::NAN);
            }
            bits += 64;
        }
    }

    /// `quad:a,b,c,d`, the round-trippable textual form.
    pub fn to_spec_string(&self) -> String {
        format!("quad:{},{},{},{}", self.a, self.b, self.c, self.d)
    }

    /// Parses `quad:a,b,c,d` (the `quad:` prefix is optional).
    pub fn parse_spec(input: &str) -> Result<Self, ExactError> {
        let err = || ExactError::Parse {
            what: "quadratic number",
            input: input.to_string(),
        };
        let body = input.trim();
        let body = body.strip_prefix("quad:").unwrap_or(body);
        let parts: Vec<BigInt> = body
            .split(',')
            .map(|p| p.trim().parse::<BigInt>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        match parts.as_slice() {
            [a, b, c, d] => Self::new(a.clone(), b.clone(), c.clone(), d.clone()),
            _ => Err(err()),
        }
    }
}

fn sign_of(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let sa = a.sign();
    let sb = b.sign();
    match (sa, sb) {
        (Sign::NoSign, Sign::NoSign) => Ordering::Equal,
        (_, Sign::NoSign) => sign_to_ordering(sa),
        (Sign::NoSign, _) => sign_to_ordering(sb),
        _ if sa == sb => sign_to_ordering(sa),
        _ => {
            // opposite signs: the larger of a² and b²d wins; they never tie
            let lhs = a * a;
            let rhs = b * b * d;
            match lhs.cmp(&rhs) {
                Ordering::Greater => sign_to_ordering(sa),
                Ordering::Less => sign_to_ordering(sb),
                Ordering::Equal => Ordering::Equal,
            }
        }
    }
}

fn sign_to_ordering(s: Sign) -> Ordering {
    match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

impl PartialOrd for QuadraticNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadraticNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl Neg for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn neg(self) -> QuadraticNumber {
        QuadraticNumber {
            a: -&self.a,
            b: -&self.b,
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }
}

impl Neg for QuadraticNumber {
    type Output = QuadraticNumber;
    fn neg(self) -> QuadraticNumber {
        -&self
    }
}

impl Add for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn add(self, rhs: &QuadraticNumber) -> QuadraticNumber {
        self.same_field(rhs);
        if self.c == rhs.c {
            return QuadraticNumber::raw(
                &self.a + &rhs.a,
                &self.b + &rhs.b,
                self.c.clone(),
                self.d.clone(),
            );
        }
        QuadraticNumber::raw(
            &self.a * &rhs.c + &rhs.a * &self.c,
            &self.b * &rhs.c + &rhs.b * &self.c,
            &self.c * &rhs.c,
            self.d.clone(),
        )
    }
}

impl Sub for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn sub(self, rhs: &QuadraticNumber) -> QuadraticNumber {
        self + &(-rhs)
    }
}

impl Mul for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn mul(self, rhs: &QuadraticNumber) -> QuadraticNumber {
        self.same_field(rhs);
        QuadraticNumber::raw(
            &self.a * &rhs.a + &self.b * &rhs.b * &self.d,
            &self.a * &rhs.b + &self.b * &rhs.a,
            &self.c * &rhs.c,
            self.d.clone(),
        )
    }
}

impl fmt::Display for QuadraticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            if self.c.is_one() {
                return write!(f, "{}", self.a);
            }
            return write!(f, "{}/{}", self.a, self.c);
        }
        let sign = if self.b.is_negative() { '-' } else { '+' };
        write!(
            f,
            "({} {} {}√{})/{}",
            self.a,
            sign,
            self.b.abs(),
            self.d,
            self.c
        )
    }
}

/// A quadratic number known to be irrational (`b ≠ 0`).
///
/// This is the type of θ; rational inputs cannot be constructed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticIrrational(QuadraticNumber);

impl QuadraticIrrational {
    pub fn new(x: QuadraticNumber) -> Result<Self, ExactError> {
        if x.is_rational() {
            Err(ExactError::Rational)
        } else {
            Ok(Self(x))
        }
    }

    /// `(√5 − 1)/2 = [0; 1, 1, 1, …]`, the default golden-type θ.
    pub fn golden() -> Self {
        Self(QuadraticNumber::new(-1, 1, 2, 5).expect("valid literal"))
    }

    pub fn value(&self) -> &QuadraticNumber {
        &self.0
    }

    pub fn into_inner(self) -> QuadraticNumber {
        self.0
    }

    /// Parses `quad:a,b,c,d` or `cf:a0,a1,...~s`.
    pub fn parse(input: &str) -> Result<Self, ExactError> {
        let s = input.trim();
        if s.starts_with("cf:") {
            let cf = super::ContinuedFraction::parse_spec(s)?;
            return Self::new(cf.to_quadratic()?);
        }
        Self::new(QuadraticNumber::parse_spec(s)?)
    }
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
