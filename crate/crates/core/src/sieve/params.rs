use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::SieveError;
use crate::exactnum::{cmp_with_power, rational_to_string};

/// Lower bound on `R` in the strict regime, as a power of two.
pub const STRICT_R_LOG2: u64 = 422;
/// `δ ≤ 2^-1622` in the strict regime.
pub const STRICT_DELTA_LOG2: u64 = 1622;

/// Where `κ` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSource {
    /// `κ = δ·R^{6/5}` exactly.
    Canonical,
    /// `R^{6/5}` is irrational; `κ = δ·⌊R^{6/5}⌋`.
    CanonicalFloor,
    /// Supplied by the caller.
    Explicit,
}

/// Which of the strict-regime hypotheses hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RegimeFlags {
    pub r_large: bool,
    pub delta_small: bool,
    pub kappa_small: bool,
}

impl RegimeFlags {
    pub fn all(&self) -> bool {
        self.r_large && self.delta_small && self.kappa_small
    }
}

/// Slope stratification of a line by its `B` coefficient at level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeClass {
    /// `B > R^{n/3 − λ}`.
    Bounded,
    /// `R^{n/3 − λ(l+1)} ≤ B ≤ R^{n/3 − λl}`.
    Steep(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    r: BigUint,
    delta: BigRational,
    kappa: BigRational,
    lambda: BigRational,
    strict: bool,
    kappa_source: KappaSource,
}

fn default_lambda() -> BigRational {
    BigRational::new(1741.into(), 330.into())
}

impl Params {
    /// Parameters with `κ = δ·R^{6/5}` (floored when irrational).
    pub fn canonical(
        r: impl Into<BigUint>,
        delta: BigRational,
        strict: bool,
    ) -> Result<Self, SieveError> {
        let r = r.into();
        let r6 = num_traits::pow(r.clone(), 6);
        let root = r6.nth_root(5);
        let source = if num_traits::pow(root.clone(), 5) == r6 {
            KappaSource::Canonical
        } else {
            KappaSource::CanonicalFloor
        };
        let kappa = &delta * BigRational::from_integer(BigInt::from(root));
        Self::build(r, delta, kappa, strict, source)
    }

    pub fn with_kappa(
        r: impl Into<BigUint>,
        delta: BigRational,
        kappa: BigRational,
        strict: bool,
    ) -> Result<Self, SieveError> {
        Self::build(r.into(), delta, kappa, strict, KappaSource::Explicit)
    }

    fn build(
        r: BigUint,
        delta: BigRational,
        kappa: BigRational,
        strict: bool,
        kappa_source: KappaSource,
    ) -> Result<Self, SieveError> {
        if r < BigUint::from(2u32) {
            return Err(SieveError::InvalidParams(format!(
                "R must be at least 2, got {r}"
            )));
        }
        if !delta.is_positive() {
            return Err(SieveError::InvalidParams("δ must be positive".into()));
        }
        if !kappa.is_positive() {
            return Err(SieveError::InvalidParams("κ must be positive".into()));
        }
        let params = Params {
            r,
            delta,
            kappa,
            lambda: default_lambda(),
            strict,
            kappa_source,
        };
        if strict {
            let flags = params.regime();
            let mut failed = Vec::new();
            if !flags.r_large {
                failed.push(format!("R ≥ 2^{STRICT_R_LOG2}"));
            }
            if !flags.delta_small {
                failed.push(format!("δ ≤ 2^-{STRICT_DELTA_LOG2}"));
            }
            if !flags.kappa_small {
                failed.push("κ ≤ 1/(3R^{λ/2})".to_string());
            }
            if !failed.is_empty() {
                return Err(SieveError::Strict(failed));
            }
        }
        Ok(params)
    }

    pub fn r(&self) -> &BigUint {
        &self.r
    }

    /// `R` as a machine integer, for child indexing.
    pub fn r_small(&self) -> Option<u32> {
        u32::try_from(&self.r).ok()
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn kappa(&self) -> &BigRational {
        &self.kappa
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn kappa_source(&self) -> KappaSource {
        self.kappa_source
    }

    pub fn r_pow(&self, n: u32) -> BigUint {
        num_traits::pow(self.r.clone(), n as usize)
    }

    /// `⌊log₂ R⌋`, the largest admissible dyadic index.
    pub fn max_k(&self) -> u32 {
        (self.r.bits() - 1) as u32
    }

    pub fn regime(&self) -> RegimeFlags {
        let r_large = self.r.bits() > STRICT_R_LOG2;
        let delta_bound =
            BigRational::new(BigInt::one(), BigInt::one() << STRICT_DELTA_LOG2 as usize);
        let delta_small = self.delta <= delta_bound;
        // 3κR^{λ/2} ≤ 1  ⇔  (3κ)^{660} R^{1741} ≤ 1
        let three_kappa = &self.kappa * BigRational::from_integer(3.into());
        let half_lambda = &self.lambda / BigRational::from_integer(2.into());
        let kappa_small =
            cmp_with_power(&three_kappa.recip(), &self.r, &half_lambda) != Ordering::Less;
        RegimeFlags {
            r_large,
            delta_small,
            kappa_small,
        }
    }

    fn check_k(&self, k: u32) -> Result<(), SieveError> {
        if k > self.max_k() {
            Err(SieveError::KOutOfRange {
                k,
                max: self.max_k(),
            })
        } else {
            Ok(())
        }
    }

    /// `d_k = ⌊(κ/δ · 2^k/R)^{2/3} · R^{2/165}⌋`, evaluated exactly.
    pub fn derived_dk(&self, k: u32) -> Result<BigUint, SieveError> {
        self.check_k(k)?;
        let x = &self.kappa / &self.delta * BigRational::from_integer(BigInt::one() << k as usize)
            / BigRational::from_integer(self.r.clone().into());
        // d_k^{165} ≤ x^{110}·R² < (d_k + 1)^{165}
        let num = num_traits::pow(x.numer().magnitude().clone(), 110) * &self.r * &self.r;
        let den = num_traits::pow(x.denom().magnitude().clone(), 110);
        Ok((num / den).nth_root(165))
    }

    /// `K_k = (δ/κ)·R²/2^k`.
    pub fn derived_kk(&self, k: u32) -> Result<BigRational, SieveError> {
        self.check_k(k)?;
        let r = BigRational::from_integer(self.r.clone().into());
        Ok(&self.delta / &self.kappa * &r * &r
            / BigRational::from_integer(BigInt::one() << k as usize))
    }

    /// Slope class of a line with coefficient `B` at level `n`.
    pub fn slope_class(&self, b: u64, n: u32) -> SlopeClass {
        assert!(b >= 1, "B must be positive");
        let bq = BigRational::from_integer(b.into());
        let third = BigRational::new(BigInt::from(n), 3.into());
        let exponent = |m: u32| &third - &self.lambda * BigRational::from_integer(m.into());
        if cmp_with_power(&bq, &self.r, &exponent(1)) == Ordering::Greater {
            return SlopeClass::Bounded;
        }
        let mut l = 1;
        while cmp_with_power(&bq, &self.r, &exponent(l + 1)) == Ordering::Less {
            l += 1;
        }
        SlopeClass::Steep(l)
    }

    /// Human-readable echo used in certificates.
    pub fn describe(&self) -> ParamsEcho {
        ParamsEcho {
            r: self.r.to_string(),
            delta: rational_to_string(&self.delta),
            kappa: rational_to_string(&self.kappa),
            lambda: rational_to_string(&self.lambda),
            kappa_source: self.kappa_source,
            strict: self.strict,
            regime: self.regime(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamsEcho {
    pub r: String,
    pub delta: String,
    pub kappa: String,
    pub lambda: String,
    pub kappa_source: KappaSource,
    pub strict: bool,
    pub regime: RegimeFlags,
}

/// The dyadic index `k` with `2^k R^{n−1} ≤ H < 2^{k+1} R^{n−1}`.
pub fn dyadic_class(h: &BigUint, n: u32, r: &BigUint) -> Result<u32, SieveError> {
    if n == 0 {
        return Err(SieveError::HeightOutOfRange { n });
    }
    let lower = num_traits::pow(r.clone(), (n - 1) as usize);
    let upper = &lower * r;
    if h < &lower || h >= &upper {
        return Err(SieveError::HeightOutOfRange { n });
    }
    let ratio = h / lower;
    debug_assert!(!ratio.is_zero());
    Ok((ratio.bits() - 1) as u32)
}
