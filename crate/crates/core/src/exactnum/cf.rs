use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ExactError, QuadraticNumber};

/// Upper bound on expansion steps when searching for a period.
const PERIOD_SEARCH_LIMIT: usize = 200_000;

/// A simple continued fraction `[a_0; a_1, a_2, …]`, finite or eventually
/// periodic.
///
/// `period_start = Some(s)` means `terms[s..]` repeats forever; `s ≥ 1`
/// after normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    terms: Vec<BigInt>,
    period_start: Option<usize>,
}

impl ContinuedFraction {
    pub fn new(terms: Vec<BigInt>, period_start: Option<usize>) -> Result<Self, ExactError> {
        if terms.is_empty() {
            return Err(ExactError::Parse {
                what: "continued fraction",
                input: String::new(),
            });
        }
        for (i, t) in terms.iter().enumerate().skip(1) {
            if t < &BigInt::one() {
                return Err(ExactError::BadPartialQuotient {
                    index: i,
                    value: t.clone(),
                });
            }
        }
        let mut terms = terms;
        let period_start = match period_start {
            Some(s) if s >= terms.len() => {
                return Err(ExactError::Parse {
                    what: "continued fraction period start",
                    input: s.to_string(),
                })
            }
            Some(0) => {
                if terms[0] < BigInt::one() {
                    return Err(ExactError::BadPartialQuotient {
                        index: 0,
                        value: terms[0].clone(),
                    });
                }
                // [(a0 … ak)] = [a0; (a1 … ak a0)]
                terms.push(terms[0].clone());
                Some(1)
            }
            other => other,
        };
        Ok(Self {
            terms,
            period_start,
        })
    }

    pub fn finite(terms: Vec<BigInt>) -> Result<Self, ExactError> {
        Self::new(terms, None)
    }

    pub fn terms(&self) -> &[BigInt] {
        &self.terms
    }

    pub fn period_start(&self) -> Option<usize> {
        self.period_start
    }

    pub fn is_periodic(&self) -> bool {
        self.period_start.is_some()
    }

    /// Partial quotients in order; infinite when periodic.
    pub fn partial_quotients(&self) -> impl Iterator<Item = &BigInt> + '_ {
        let head = self.terms.iter();
        let tail = self
            .period_start
            .map(|s| self.terms[s..].iter().cycle())
            .into_iter()
            .flatten();
        // periodic: emit the prefix once, then cycle the period
        let prefix_len = self.period_start.unwrap_or(self.terms.len());
        head.take(prefix_len).chain(tail)
    }

    /// Largest partial quotient among `a_1, a_2, …`.
    pub fn max_partial_quotient(&self) -> Option<BigInt> {
        self.terms.iter().skip(1).max().cloned()
    }

    pub fn convergents(&self, count: usize) -> Vec<(BigInt, BigInt)> {
        cf_convergents(self, count)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if self.is_periodic() {
            return None;
        }
        let (p, q) = self.convergents(self.terms.len()).pop()?;
        Some(BigRational::new(p, q))
    }

    /// Closed form of a periodic expansion as a quadratic irrational.
    pub fn to_quadratic(&self) -> Result<QuadraticNumber, ExactError> {
        let s = self.period_start.ok_or(ExactError::Rational)?;
        let block = &self.terms[s..];
        // ζ = [block; ζ] = (P ζ + P')/(Q ζ + Q')
        let (mut p, mut p_prev) = (BigInt::one(), BigInt::zero());
        let (mut q, mut q_prev) = (BigInt::zero(), BigInt::one());
        for a in block {
            let pn = a * &p + &p_prev;
            let qn = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, pn);
            q_prev = std::mem::replace(&mut q, qn);
        }
        // Q ζ² + (Q' − P) ζ − P' = 0, positive root
        let lin = &q_prev - &p;
        let disc = &lin * &lin + BigInt::from(4) * &q * &p_prev;
        let zeta = QuadraticNumber::new(-lin, 1, BigInt::from(2) * &q, disc)?;
        // θ = (p_{s−1} ζ + p_{s−2})/(q_{s−1} ζ + q_{s−2})
        let (mut p, mut p_prev) = (BigInt::one(), BigInt::zero());
        let (mut q, mut q_prev) = (BigInt::zero(), BigInt::one());
        for a in &self.terms[..s] {
            let pn = a * &p + &p_prev;
            let qn = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, pn);
            q_prev = std::mem::replace(&mut q, qn);
        }
        let num = &zeta.mul_int(&p) + &QuadraticNumber::from_integer(p_prev, &zeta);
        let den = &zeta.mul_int(&q) + &QuadraticNumber::from_integer(q_prev, &zeta);
        Ok(num
            .checked_div(&den)
            .expect("denominator of a convergent map is positive"))
    }

    /// Expands a quadratic irrational, detecting its period exactly.
    pub fn from_quadratic(x: &QuadraticNumber) -> Result<Self, ExactError> {
        if x.is_rational() {
            return Err(ExactError::NotPeriodic);
        }
        // x = (P + √D)/Q with Q | D − P²
        let (mut p, mut q) = if x.b().is_positive() {
            (x.a().clone(), x.c().clone())
        } else {
            (-x.a(), -x.c())
        };
        let mut disc = x.b() * x.b() * x.d();
        if !(&disc - &p * &p).is_multiple_of(&q) {
            let qa = q.abs();
            p *= &qa;
            disc *= &q * &q;
            q *= &qa;
        }
        let root = disc.sqrt();
        let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
        let mut terms = Vec::new();
        for i in 0..PERIOD_SEARCH_LIMIT {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                return Self::new(terms, Some(start));
            }
            seen.insert((p.clone(), q.clone()), i);
            let a = if q.is_positive() {
                (&p + &root).div_floor(&q)
            } else {
                (&p + &root + BigInt::one()).div_floor(&q)
            };
            p = &a * &q - &p;
            q = (&disc - &p * &p) / &q;
            terms.push(a);
        }
        Err(ExactError::PeriodLimit(PERIOD_SEARCH_LIMIT))
    }

    /// Parses `cf:a0,a1,…,ak` optionally followed by `~s`, where `s` is the
    /// index of the first repeating term.
    pub fn parse_spec(input: &str) -> Result<Self, ExactError> {
        let err = || ExactError::Parse {
            what: "continued fraction",
            input: input.to_string(),
        };
        let body = input.trim();
        let body = body.strip_prefix("cf:").unwrap_or(body);
        let (list, period) = match body.split_once('~') {
            Some((l, s)) => (l, Some(s.trim().parse::<usize>().map_err(|_| err())?)),
            None => (body, None),
        };
        let terms: Vec<BigInt> = list
            .split(',')
            .map(|t| t.trim().parse::<BigInt>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        Self::new(terms, period)
    }

    pub fn to_spec_string(&self) -> String {
        let list: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        match self.period_start {
            Some(s) => format!("cf:{}~{}", list.join(","), s),
            None => format!("cf:{}", list.join(",")),
        }
    }
}

/// First `count` convergents `p_k/q_k` (fewer if the expansion is finite).
pub fn cf_convergents(cf: &ContinuedFraction, count: usize) -> Vec<(BigInt, BigInt)> {
    let (mut p, mut p_prev) = (BigInt::one(), BigInt::zero());
    let (mut q, mut q_prev) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::with_capacity(count);
    for a in cf.partial_quotients().take(count) {
        let pn = a * &p + &p_prev;
        let qn = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, pn);
        q_prev = std::mem::replace(&mut q, qn);
        out.push((p.clone(), q.clone()));
    }
    out
}
