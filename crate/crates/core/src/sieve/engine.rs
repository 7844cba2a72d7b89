use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::params::{dyadic_class, Params, SlopeClass};
use super::SieveError;
use crate::exactnum::QuadraticNumber;
use crate::geometry::{enumerate_triples, forbidden_interval, ForbiddenInterval, Line};

/// Largest `R` the engine will subdivide by.
pub const MAX_BRANCHING: u32 = 1 << 16;

/// A survivor interval, stored by its path of 1-based child indices from
/// the level-1 segment. Level is `lineage.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Segment {
    pub lineage: Vec<u32>,
}

impl Segment {
    pub fn root() -> Self {
        Segment {
            lineage: Vec::new(),
        }
    }

    pub fn level(&self) -> u32 {
        self.lineage.len() as u32 + 1
    }

    pub fn child(&self, mu: u32) -> Segment {
        let mut lineage = self.lineage.clone();
        lineage.push(mu);
        Segment { lineage }
    }

    /// Ancestor at `level` (which must not exceed this segment's level).
    pub fn ancestor(&self, level: u32) -> Segment {
        assert!(level >= 1 && level <= self.level());
        Segment {
            lineage: self.lineage[..(level - 1) as usize].to_vec(),
        }
    }

    pub fn lineage_string(&self) -> String {
        self.lineage
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Geometry of the level-1 segment: `[start, start + κ/R]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Root {
    pub start: BigRational,
    pub kappa: BigRational,
    pub r: u32,
}

impl Root {
    /// `κ/R^n`.
    pub fn length(&self, level: u32) -> BigRational {
        &self.kappa
            / BigRational::from_integer(num_traits::pow(BigInt::from(self.r), level as usize))
    }

    /// Exact `[left, right]` of a segment.
    pub fn extent(&self, seg: &Segment) -> (BigRational, BigRational) {
        let r = BigInt::from(self.r);
        let mut idx = BigInt::zero();
        for &mu in &seg.lineage {
            idx = idx * &r + BigInt::from(mu - 1);
        }
        let len = self.length(seg.level());
        let left = &self.start + &len * BigRational::from_integer(idx);
        let right = &left + &len;
        (left, right)
    }
}

/// Removal bucket: one per (dyadic class) for bounded-slope lines, one per
/// slope level otherwise. Ordering decides attribution when several
/// forbidden intervals hit the same child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Bounded { k: u32 },
    Steep { l: u32 },
}

impl Bucket {
    pub fn label(&self) -> String {
        match self {
            Bucket::Bounded { k } => format!("k={k}"),
            Bucket::Steep { l } => format!("l={l}"),
        }
    }
}

/// One forbidden interval meeting one parent segment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaHit {
    /// Index of the parent among the level's survivors.
    pub parent: usize,
    pub line: Line,
    pub height: u128,
    pub k: u32,
    pub slope: SlopeClass,
    /// Inclusive range of 1-based child indices meeting the interval.
    pub first_child: u32,
    pub last_child: u32,
    /// Whether the line itself crosses the fiber inside the parent.
    pub crosses_parent: bool,
}

impl DeltaHit {
    pub fn count(&self) -> u32 {
        self.last_child + 1 - self.first_child
    }

    pub fn bucket(&self) -> Bucket {
        match self.slope {
            SlopeClass::Bounded => Bucket::Bounded { k: self.k },
            SlopeClass::Steep(l) => Bucket::Steep { l },
        }
    }
}

/// Per-parent removal tallies. Each child counts once per field even when
/// several intervals hit it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParentTally {
    pub removed: u32,
    /// Children meeting at least one bounded-slope interval.
    pub hit_bounded: u32,
    /// Children meeting at least one interval of slope level `l`.
    pub hit_steep: BTreeMap<u32, u32>,
}

/// Record of the step from level `from_level` to `from_level + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepLedger {
    pub from_level: u32,
    pub parents: usize,
    pub children: usize,
    pub removed: usize,
    pub survivors: usize,
    /// Exclusive attribution of removed children.
    pub buckets: BTreeMap<Bucket, usize>,
    pub hits: Vec<DeltaHit>,
    pub tallies: Vec<ParentTally>,
}

#[derive(Clone, Debug)]
pub struct SieveState {
    params: Params,
    theta: QuadraticNumber,
    root: Root,
    levels: Vec<Vec<Segment>>,
    ledgers: Vec<StepLedger>,
}

/// Chooses which final survivor to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainPolicy {
    Leftmost,
    /// Greedy descent into the child with the most final-level
    /// descendants; ties go left.
    DensestSubtree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedInterval {
    pub segment: Segment,
    pub lo: BigRational,
    pub hi: BigRational,
}

/// Start the construction with `J₁ = [start, start + κ/R]`.
pub fn init(
    params: &Params,
    theta: &QuadraticNumber,
    start: &BigRational,
) -> Result<SieveState, SieveError> {
    let r = params
        .r_small()
        .filter(|&r| r <= MAX_BRANCHING)
        .ok_or_else(|| SieveError::BranchingTooLarge(params.r().clone()))?;
    let root = Root {
        start: start.clone(),
        kappa: params.kappa().clone(),
        r,
    };
    let (lo, hi) = root.extent(&Segment::root());
    if lo.is_negative() || hi > BigRational::one() {
        return Err(SieveError::OutsideUnit);
    }
    Ok(SieveState {
        params: params.clone(),
        theta: theta.clone(),
        root,
        levels: vec![vec![Segment::root()]],
        ledgers: Vec::new(),
    })
}

/// The `R` equal children of a segment, left to right.
pub fn subdivide(segment: &Segment, r: u32) -> Vec<Segment> {
    (1..=r).map(|mu| segment.child(mu)).collect()
}

fn to_u128(x: &BigUint) -> Result<u128, SieveError> {
    x.to_u128()
        .ok_or_else(|| SieveError::HeightTooLarge(x.clone()))
}

impl SieveState {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn theta(&self) -> &QuadraticNumber {
        &self.theta
    }

    pub fn root(&self) -> &Root {
        &self.root
    }

    pub fn level(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Survivors at `level` (1-based), left to right.
    pub fn survivors(&self, level: u32) -> &[Segment] {
        &self.levels[(level - 1) as usize]
    }

    pub fn final_survivors(&self) -> &[Segment] {
        self.levels.last().expect("at least level 1")
    }

    /// `T_1, …, T_n`.
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn ledgers(&self) -> &[StepLedger] {
        &self.ledgers
    }

    pub fn extent(&self, seg: &Segment) -> (BigRational, BigRational) {
        self.root.extent(seg)
    }

    /// Advance one level, returning the new state.
    pub fn step(&self) -> Result<SieveState, SieveError> {
        let mut next = self.clone();
        next.step_in_place()?;
        Ok(next)
    }

    pub fn step_in_place(&mut self) -> Result<(), SieveError> {
        let n = self.level();
        let r = self.root.r;
        let h_min = to_u128(&self.params.r_pow(n - 1))?;
        let h_max = to_u128(&self.params.r_pow(n))?;
        let child_len = self.root.length(n + 1);
        let parents = self.final_survivors().to_vec();
        let mut ledger = StepLedger {
            from_level: n,
            parents: parents.len(),
            children: parents.len() * r as usize,
            removed: 0,
            survivors: 0,
            buckets: BTreeMap::new(),
            hits: Vec::new(),
            tallies: Vec::with_capacity(parents.len()),
        };
        let mut slope_cache: HashMap<i64, SlopeClass> = HashMap::new();
        let mut next_level = Vec::new();
        for (pi, parent) in parents.iter().enumerate() {
            let (lo, hi) = self.extent(parent);
            let mut best: Vec<Option<Bucket>> = vec![None; r as usize];
            let mut bounded = vec![false; r as usize];
            let mut steep: BTreeMap<u32, Vec<bool>> = BTreeMap::new();
            let lines =
                enumerate_triples(h_min, h_max, &lo, &hi, &self.theta, self.params.delta())?;
            for line in lines {
                let fi = forbidden_interval(&line, &self.theta, self.params.delta());
                let Some((first, last)) = child_range(&fi, &lo, &child_len, r) else {
                    continue;
                };
                let k = dyadic_class(&BigUint::from(fi.height), n, self.params.r())?;
                let slope = *slope_cache
                    .entry(line.b)
                    .or_insert_with(|| self.params.slope_class(line.b as u64, n));
                let hit = DeltaHit {
                    parent: pi,
                    line,
                    height: fi.height,
                    k,
                    slope,
                    first_child: first,
                    last_child: last,
                    crosses_parent: line.crosses(&self.theta, &lo, &hi),
                };
                let bucket = hit.bucket();
                for mu in first..=last {
                    let slot = &mut best[(mu - 1) as usize];
                    *slot = Some(slot.map_or(bucket, |b| b.min(bucket)));
                    match slope {
                        SlopeClass::Bounded => bounded[(mu - 1) as usize] = true,
                        SlopeClass::Steep(l) => {
                            steep.entry(l).or_insert_with(|| vec![false; r as usize])
                                [(mu - 1) as usize] = true
                        }
                    }
                }
                ledger.hits.push(hit);
            }
            let mut tally = ParentTally {
                hit_bounded: bounded.iter().filter(|&&b| b).count() as u32,
                hit_steep: steep
                    .into_iter()
                    .map(|(l, v)| (l, v.iter().filter(|&&b| b).count() as u32))
                    .collect(),
                ..ParentTally::default()
            };
            for (i, slot) in best.iter().enumerate() {
                match slot {
                    Some(b) => {
                        *ledger.buckets.entry(*b).or_default() += 1;
                        tally.removed += 1;
                    }
                    None => next_level.push(parent.child(i as u32 + 1)),
                }
            }
            ledger.removed += tally.removed as usize;
            ledger.tallies.push(tally);
        }
        ledger.survivors = next_level.len();
        self.levels.push(next_level);
        self.ledgers.push(ledger);
        Ok(())
    }

    /// Pick a final-level survivor.
    pub fn extract_point(&self, policy: ChainPolicy) -> Result<ExtractedInterval, SieveError> {
        let finals = self.final_survivors();
        if finals.is_empty() {
            return Err(SieveError::Empty);
        }
        let segment = match policy {
            ChainPolicy::Leftmost => finals[0].clone(),
            ChainPolicy::DensestSubtree => densest_chain(finals),
        };
        let (lo, hi) = self.extent(&segment);
        Ok(ExtractedInterval { segment, lo, hi })
    }
}

fn densest_chain(finals: &[Segment]) -> Segment {
    let depth = finals[0].lineage.len();
    let mut weight: HashMap<&[u32], usize> = HashMap::new();
    for seg in finals {
        for cut in 0..=depth {
            *weight.entry(&seg.lineage[..cut]).or_default() += 1;
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(depth);
    for cut in 1..=depth {
        let best = finals
            .iter()
            .filter(|s| s.lineage[..cut - 1] == chosen[..])
            .map(|s| s.lineage[cut - 1])
            .fold(None::<(usize, u32)>, |acc, mu| {
                let mut key = chosen.clone();
                key.push(mu);
                let w = weight[&key[..]];
                match acc {
                    Some((bw, bmu)) if bw > w || (bw == w && bmu <= mu) => Some((bw, bmu)),
                    _ => Some((w, mu)),
                }
            })
            .expect("a survivor extends every chosen prefix");
        chosen.push(best.1);
    }
    Segment { lineage: chosen }
}

/// Inclusive range of child indices whose closed extent meets the closed
/// forbidden interval, if any.
pub fn child_range(
    fi: &ForbiddenInterval,
    parent_lo: &BigRational,
    child_len: &BigRational,
    r: u32,
) -> Option<(u32, u32)> {
    let inv = child_len.recip();
    // child μ = [lo + (μ−1)s, lo + μs]
    let first = fi.lo().sub_rational(parent_lo).mul_rational(&inv).ceil();
    let last = fi.hi().sub_rational(parent_lo).mul_rational(&inv).floor() + BigInt::one();
    let first = first.max(BigInt::one());
    let last = last.min(BigInt::from(r));
    if first > last {
        return None;
    }
    Some((first.to_u32()?, last.to_u32()?))
}

/// Number of the `r` children of `[lo, lo + r·s]` meeting the interval,
/// by direct endpoint comparison.
pub fn count_children_meeting(
    fi: &ForbiddenInterval,
    parent_lo: &BigRational,
    child_len: &BigRational,
    r: u32,
) -> u32 {
    (0..r)
        .filter(|&i| {
            let lo = parent_lo + child_len * BigRational::from_integer(i.into());
            let hi = &lo + child_len;
            fi.meets(&lo, &hi)
        })
        .count() as u32
}

/// Outcome of re-counting every recorded (interval, parent) pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CountBoundReport {
    pub pairs: usize,
    /// Recount differs from the ledger's range.
    pub ledger_mismatches: usize,
    /// Count above `|Δ|/|I| + 2`.
    pub length_bound_violations: usize,
    /// Count above `2K_k + 2`.
    pub class_bound_violations: usize,
    pub max_count: u32,
}

impl CountBoundReport {
    pub fn clean(&self) -> bool {
        self.ledger_mismatches == 0
            && self.length_bound_violations == 0
            && self.class_bound_violations == 0
    }
}

pub fn count_bound_check(state: &SieveState) -> Result<CountBoundReport, SieveError> {
    let mut report = CountBoundReport::default();
    let params = state.params();
    let r = state.root().r;
    for ledger in state.ledgers() {
        let n = ledger.from_level;
        let parents = state.survivors(n);
        let child_len = state.root().length(n + 1);
        for hit in &ledger.hits {
            let (lo, _) = state.extent(&parents[hit.parent]);
            let fi = forbidden_interval(&hit.line, state.theta(), params.delta());
            let count = count_children_meeting(&fi, &lo, &child_len, r);
            report.pairs += 1;
            report.max_count = report.max_count.max(count);
            if count != hit.count() {
                report.ledger_mismatches += 1;
            }
            let c = BigRational::from_integer(count.into());
            let two = BigRational::from_integer(2.into());
            if &c * &child_len > fi.length() + &two * &child_len {
                report.length_bound_violations += 1;
            }
            if c > &two * params.derived_kk(hit.k)? + &two {
                report.class_bound_violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::QuadraticIrrational;
    use crate::geometry::Line;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn golden() -> QuadraticNumber {
        QuadraticIrrational::golden().into_inner()
    }

    #[test]
    fn init_bounds() {
        let p = Params::with_kappa(4u32, q(1, 10_000), q(1, 128), false).unwrap();
        let s = init(&p, &golden(), &q(0, 1)).unwrap();
        assert_eq!(s.counts(), vec![1]);
        assert_eq!(s.extent(&Segment::root()), (q(0, 1), q(1, 512)));
        assert!(matches!(
            init(&p, &golden(), &q(1, 1)),
            Err(SieveError::OutsideUnit)
        ));
        let half = init(&p, &golden(), &q(1, 2)).unwrap();
        assert_eq!(half.extent(&Segment::root()), (q(1, 2), q(257, 512)));
    }

    #[test]
    fn subdivision_is_exact() {
        let p = Params::with_kappa(4u32, q(1, 10_000), q(1, 256), false).unwrap();
        let s = init(&p, &golden(), &q(0, 1)).unwrap();
        let kids = subdivide(&Segment::root(), 4);
        let extents: Vec<_> = kids.iter().map(|k| s.extent(k)).collect();
        assert_eq!(extents[0], (q(0, 1), q(1, 4096)));
        assert_eq!(extents[3].0, q(3, 4096));
        assert_eq!(extents[3].1, s.extent(&Segment::root()).1);
        assert!(extents.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn child_counts_match_ranges() {
        let theta = golden();
        let fi = forbidden_interval(&Line::new(0, 1, 0).unwrap(), &theta, &q(17, 1000));
        // |Δ| = 34/1000 and |I| = 1/100: at most 5 children
        let lo = q(-1, 20);
        let len = q(1, 100);
        let count = count_children_meeting(&fi, &lo, &len, 20);
        assert!(count <= 5);
        let (a, b) = child_range(&fi, &lo, &len, 20).unwrap();
        assert_eq!(b + 1 - a, count);
    }

    #[test]
    fn vacuous_first_step_keeps_all() {
        // J₁ sits strictly between the H = 1 intervals around 0 and 1
        let p = Params::with_kappa(4u32, q(1, 10_000), q(1, 100), false).unwrap();
        let s = init(&p, &golden(), &q(1, 2)).unwrap();
        let s2 = s.step().unwrap();
        assert_eq!(s2.counts(), vec![1, 4]);
        assert_eq!(s2.ledgers()[0].removed, 0);
    }

    #[test]
    fn densest_prefers_heavier_branch() {
        let finals = vec![
            Segment {
                lineage: vec![1, 1],
            },
            Segment {
                lineage: vec![2, 1],
            },
            Segment {
                lineage: vec![2, 3],
            },
        ];
        assert_eq!(densest_chain(&finals).lineage, vec![2, 1]);
    }
}
