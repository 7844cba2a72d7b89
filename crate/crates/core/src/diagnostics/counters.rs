use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::Verdict;
use crate::exactnum::{ln_enclosure, pow_enclosure, rational_to_string, Enclosure};
use crate::sieve::{Bucket, SieveState, StepLedger};

const BITS: u32 = 64;

/// `γ·R^{52/55}·ln R` (or without the log), as a certified enclosure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ceiling {
    pub lo: String,
    pub hi: String,
    /// The ceiling is at least `R`, so it rules nothing out.
    pub vacuous: bool,
}

fn ceiling_enclosure(r: &BigUint, gamma: u64, with_log: bool) -> Enclosure {
    let p = pow_enclosure(r, &BigRational::new(52.into(), 55.into()), BITS);
    let g = BigRational::from_integer(gamma.into());
    let (mut lo, mut hi) = (&p.lo * &g, &p.hi * &g);
    if with_log {
        let ln = ln_enclosure(&BigRational::from_integer(BigInt::from(r.clone())), BITS);
        lo *= ln.lo;
        hi *= ln.hi;
    }
    Enclosure { lo, hi }
}

fn ceiling(enc: &Enclosure, r: &BigUint) -> Ceiling {
    Ceiling {
        lo: rational_to_string(&enc.lo),
        hi: rational_to_string(&enc.hi),
        vacuous: enc.lo >= BigRational::from_integer(BigInt::from(r.clone())),
    }
}

fn compare_count(count: u64, enc: &Enclosure) -> Verdict {
    let c = BigRational::from_integer(count.into());
    if c <= enc.lo {
        Verdict::Holds
    } else if c > enc.hi {
        Verdict::Fails
    } else {
        Verdict::NotEvaluated
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FundamentalCounters {
    pub from_level: u32,
    /// Per-parent ceiling on children hit by bounded-slope intervals.
    pub bounded_ceiling: Ceiling,
    pub bounded_max: u32,
    pub bounded: Verdict,
    /// Per-ancestor ceiling on children hit within one steep class.
    pub steep_ceiling: Ceiling,
    /// `l → (ancestors examined, largest count)`.
    pub steep_max: BTreeMap<u32, (usize, u32)>,
    pub steep: Verdict,
    /// Largest per-parent removal; never above `R`.
    pub removed_max: u32,
    /// `T_{n+1} ≥ T_n·(R − 2^{14}R^{52/55} ln R)`.
    pub recursion_factor: Ceiling,
    pub recursion: Verdict,
}

pub fn fundamental_counters(state: &SieveState, ledger: &StepLedger) -> FundamentalCounters {
    let params = state.params();
    let r = params.r();
    let n = ledger.from_level;
    let fl1 = ceiling_enclosure(r, 1 << 13, true);
    let fl2 = ceiling_enclosure(r, 8, false);

    let bounded_max = ledger
        .tallies
        .iter()
        .map(|t| t.hit_bounded)
        .max()
        .unwrap_or(0);
    let bounded = worst(
        ledger
            .tallies
            .iter()
            .map(|t| compare_count(t.hit_bounded.into(), &fl1)),
    );

    // children hit per (l, ancestor at level n − l)
    let parents = state.survivors(n);
    let mut per_ancestor: BTreeMap<(u32, Vec<u32>), u32> = BTreeMap::new();
    for (pi, tally) in ledger.tallies.iter().enumerate() {
        for (&l, &count) in &tally.hit_steep {
            let level = n.saturating_sub(l).max(1);
            let key = (l, parents[pi].ancestor(level).lineage);
            *per_ancestor.entry(key).or_default() += count;
        }
    }
    let mut steep_max: BTreeMap<u32, (usize, u32)> = BTreeMap::new();
    for ((l, _), count) in &per_ancestor {
        let e = steep_max.entry(*l).or_default();
        e.0 += 1;
        e.1 = e.1.max(*count);
    }
    let steep = worst(
        per_ancestor
            .values()
            .map(|&c| compare_count(c.into(), &fl2)),
    );

    let removed_max = ledger.tallies.iter().map(|t| t.removed).max().unwrap_or(0);
    let rq = BigRational::from_integer(BigInt::from(r.clone()));
    let twice = ceiling_enclosure(r, 1 << 14, true);
    let factor = Enclosure {
        lo: &rq - &twice.hi,
        hi: &rq - &twice.lo,
    };
    let t_n = BigRational::from_integer(ledger.parents.into());
    let t_next = BigRational::from_integer(ledger.survivors.into());
    let recursion = if t_next >= &t_n * &factor.hi {
        Verdict::Holds
    } else if t_next < &t_n * &factor.lo {
        Verdict::Fails
    } else {
        Verdict::NotEvaluated
    };
    let recursion_factor = Ceiling {
        lo: rational_to_string(&factor.lo),
        hi: rational_to_string(&factor.hi),
        vacuous: factor.hi <= BigRational::zero(),
    };

    FundamentalCounters {
        from_level: n,
        bounded_ceiling: ceiling(&fl1, r),
        bounded_max,
        bounded,
        steep_ceiling: ceiling(&fl2, r),
        steep_max,
        steep,
        removed_max,
        recursion_factor,
        recursion,
    }
}

/// Fails beats not-evaluated beats holds; an empty sequence is not applicable.
fn worst(verdicts: impl Iterator<Item = Verdict>) -> Verdict {
    verdicts.fold(Verdict::NotApplicable, |acc, v| match (acc, v) {
        (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
        (Verdict::NotEvaluated, _) | (_, Verdict::NotEvaluated) => Verdict::NotEvaluated,
        _ => Verdict::Holds,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attribution {
    pub from_level: u32,
    pub parents: usize,
    pub removed: usize,
    /// Bucket label → removed children, recomputed from the raw hits.
    pub buckets: BTreeMap<String, usize>,
    pub buckets_match_ledger: bool,
    pub bucket_sum_matches: bool,
    /// `R·T_n − removed`.
    pub predicted: usize,
    /// Length of the recorded next-level survivor list.
    pub recounted: usize,
    pub consistent: bool,
}

/// Re-derives each removed child's bucket from the ledger's raw hits.
pub fn attribution(state: &SieveState, ledger: &StepLedger) -> Attribution {
    let r = state.root().r as usize;
    let mut recomputed: BTreeMap<Bucket, usize> = BTreeMap::new();
    let mut removed = 0usize;
    let mut per_parent: Vec<Vec<Option<Bucket>>> = vec![vec![None; r]; ledger.parents];
    for hit in &ledger.hits {
        let b = hit.bucket();
        for mu in hit.first_child..=hit.last_child {
            let slot = &mut per_parent[hit.parent][(mu - 1) as usize];
            *slot = Some(match *slot {
                Some(cur) if cur <= b => cur,
                _ => b,
            });
        }
    }
    for slots in &per_parent {
        for b in slots.iter().flatten() {
            *recomputed.entry(*b).or_default() += 1;
            removed += 1;
        }
    }
    let bucket_sum: usize = ledger.buckets.values().sum();
    let predicted = (r * ledger.parents).saturating_sub(ledger.removed);
    let recounted = state.survivors(ledger.from_level + 1).len();
    let tally_sum: usize = ledger.tallies.iter().map(|t| t.removed as usize).sum();
    let buckets_match_ledger = recomputed == ledger.buckets && removed == ledger.removed;
    let bucket_sum_matches = bucket_sum == ledger.removed && tally_sum == ledger.removed;
    Attribution {
        from_level: ledger.from_level,
        parents: ledger.parents,
        removed: ledger.removed,
        buckets: recomputed.iter().map(|(b, c)| (b.label(), *c)).collect(),
        buckets_match_ledger,
        bucket_sum_matches,
        predicted,
        recounted,
        consistent: buckets_match_ledger
            && bucket_sum_matches
            && predicted == recounted
            && ledger.survivors == recounted,
    }
}
