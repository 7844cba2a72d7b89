//! Read-only checks of the counting argument against live sieve data.
//!
//! For every step `n → n+1` the lines crossing each parent segment are
//! grouped by dyadic class (bounded slopes) or by slope level (steep
//! slopes). Each group gets its common point, the split into the two
//! collections, and the inequalities the counting argument relies on.
//! Outside the strict regime those inequalities may fail; failures are
//! recorded, not raised. The intersection bounds and the removal ledger
//! are unconditional and are returned as errors when violated.

mod counters;
mod lemmas;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use counters::{attribution, fundamental_counters, Attribution, Ceiling, FundamentalCounters};
pub use lemmas::{
    check_common_point, check_intersection_bounds, check_no_parallel, class_quantities,
    determinant, pigeonhole_search, principal_inequalities, slope_bound_check, split_collections,
    starred_checks, ClassQuantities, CommonPoint, IntersectionBound, ParallelReport,
    PigeonholeReport, PrincipalReport, SlopeBoundReport, StarredReport,
};

use crate::geometry::Line;
use crate::sieve::{SieveError, SieveState, SlopeClass};

/// Outcome of one inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// Hypotheses unmet.
    NotApplicable,
    /// Too expensive, or the enclosure could not decide.
    NotEvaluated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub holds: usize,
    pub fails: usize,
    pub not_applicable: usize,
    pub not_evaluated: usize,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Holds => self.holds += 1,
            Verdict::Fails => self.fails += 1,
            Verdict::NotApplicable => self.not_applicable += 1,
            Verdict::NotEvaluated => self.not_evaluated += 1,
        }
    }

    fn merge(&mut self, other: &VerdictCounts) {
        self.holds += other.holds;
        self.fails += other.fails;
        self.not_applicable += other.not_applicable;
        self.not_evaluated += other.not_evaluated;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticsError {
    #[error("intersection bound {kind:?} violated by {first} and {second} on segment {lineage}")]
    IntersectionBound {
        kind: IntersectionBound,
        first: Line,
        second: Line,
        lineage: String,
    },
    #[error("removal attribution inconsistent at level {0}")]
    Attribution(u32),
    #[error("{check} fails in the strict regime at level {level}")]
    StrictViolation { check: &'static str, level: u32 },
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagOptions {
    /// Largest box searched for the pigeonhole witness.
    pub pigeonhole_cap: u128,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions {
            pigeonhole_cap: 1_000_000,
        }
    }
}

/// One (parent segment, dyadic class) group of bounded-slope lines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassGroup {
    pub lineage: String,
    pub k: u32,
    /// Lines crossing the parent segment.
    pub lines: Vec<Line>,
    /// Hits in this class whose line misses the segment itself.
    pub overhanging: usize,
    pub parallel: ParallelReport,
    pub common_point: CommonPoint,
    pub sigma: Option<String>,
    pub omega_pow4: Option<String>,
    pub w: Option<String>,
    pub v_pow4: Option<String>,
    pub collection_a: Option<usize>,
    pub collection_b: Option<usize>,
    /// `#𝔅 ≤ d_k`.
    pub collection_b_bound: Verdict,
    /// Lines whose `(|A|/B)⁴` exceeds `σ_k³/W_k`.
    pub slope_excess: usize,
    pub principal: Option<PrincipalReport>,
}

/// One (ancestor segment, slope level) group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SteepGroup {
    pub ancestor: String,
    pub report: StarredReport,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelSummary {
    pub class_groups: usize,
    pub steep_groups: usize,
    pub parallel_pairs: usize,
    pub common_point_failures: usize,
    pub collection_b_bound: VerdictCounts,
    pub first_principal: VerdictCounts,
    pub gap_bound: VerdictCounts,
    pub omega_upper: VerdictCounts,
    pub second_principal: VerdictCounts,
    pub lattice: VerdictCounts,
    pub pigeonhole: VerdictCounts,
    pub starred: BTreeMap<String, VerdictCounts>,
    /// Pairs checked against the unconditional intersection bounds.
    pub intersection_pairs: usize,
}

impl LevelSummary {
    fn merge(&mut self, other: &LevelSummary) {
        self.class_groups += other.class_groups;
        self.steep_groups += other.steep_groups;
        self.parallel_pairs += other.parallel_pairs;
        self.common_point_failures += other.common_point_failures;
        self.collection_b_bound.merge(&other.collection_b_bound);
        self.first_principal.merge(&other.first_principal);
        self.gap_bound.merge(&other.gap_bound);
        self.omega_upper.merge(&other.omega_upper);
        self.second_principal.merge(&other.second_principal);
        self.lattice.merge(&other.lattice);
        self.pigeonhole.merge(&other.pigeonhole);
        for (k, v) in &other.starred {
            self.starred.entry(k.clone()).or_default().merge(v);
        }
        self.intersection_pairs += other.intersection_pairs;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelDiagnostics {
    pub from_level: u32,
    pub summary: LevelSummary,
    pub counters: FundamentalCounters,
    pub attribution: Attribution,
    pub class_groups: Vec<ClassGroup>,
    pub steep_groups: Vec<SteepGroup>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub asymptotic_regime: bool,
    pub totals: LevelSummary,
    pub levels: Vec<LevelDiagnostics>,
}

impl Diagnostics {
    /// Drops the per-group records, keeping counts and counters.
    pub fn summarized(mut self) -> Self {
        for level in &mut self.levels {
            level.class_groups.clear();
            level.steep_groups.clear();
        }
        self
    }
}

fn class_group(
    state: &SieveState,
    n: u32,
    lineage: String,
    k: u32,
    lines: Vec<Line>,
    overhanging: usize,
    options: &DiagOptions,
) -> Result<ClassGroup, SieveError> {
    let params = state.params();
    let theta = state.theta();
    let parallel = check_no_parallel(&lines);
    let common_point = check_common_point(&lines);
    let mut group = ClassGroup {
        lineage,
        k,
        overhanging,
        parallel,
        common_point,
        sigma: None,
        omega_pow4: None,
        w: None,
        v_pow4: None,
        collection_a: None,
        collection_b: None,
        collection_b_bound: Verdict::NotApplicable,
        slope_excess: 0,
        principal: None,
        lines,
    };
    let Some(point) = group.common_point.point().cloned() else {
        return Ok(group);
    };
    let Some(cq) = class_quantities(params, theta, &point, k, n)? else {
        return Ok(group);
    };
    let (a_set, b_set) = split_collections(&group.lines, &point, &cq.omega_pow4, theta);
    group.collection_a = Some(a_set.len());
    group.collection_b = Some(b_set.len());
    group.collection_b_bound = if num_bigint::BigUint::from(b_set.len()) <= cq.d_k {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    group.slope_excess = group
        .lines
        .iter()
        .filter(|l| {
            let ratio = num_rational::BigRational::new(l.a.into(), l.b.into());
            cq.v_pow4.cmp_rational(&num_traits::pow(ratio, 4)).is_lt()
        })
        .count();
    group.principal = Some(principal_inequalities(
        &a_set,
        &point,
        &cq,
        k,
        n,
        params,
        options.pigeonhole_cap,
    ));
    group.sigma = Some(cq.sigma.to_spec_string());
    group.omega_pow4 = Some(cq.omega_pow4.to_spec_string());
    group.w = Some(cq.w.to_string());
    group.v_pow4 = Some(cq.v_pow4.to_spec_string());
    Ok(group)
}

/// Inside the strict regime a failed inequality is a bug, not an observation.
fn strict_guard(v: Verdict, check: &'static str, level: u32) -> Result<(), DiagnosticsError> {
    if v == Verdict::Fails {
        Err(DiagnosticsError::StrictViolation { check, level })
    } else {
        Ok(())
    }
}

pub fn diagnose(
    state: &SieveState,
    options: &DiagOptions,
) -> Result<Diagnostics, DiagnosticsError> {
    let params = state.params();
    let theta = state.theta();
    let asymptotic_regime = params.regime().all();
    let mut levels = Vec::new();
    let mut totals = LevelSummary::default();
    for ledger in state.ledgers() {
        let n = ledger.from_level;
        let parents = state.survivors(n);
        let seg_len = state.root().length(n);
        let mut summary = LevelSummary::default();

        // crossing lines per parent, split by bucket
        let mut bounded: BTreeMap<(usize, u32), (Vec<Line>, usize)> = BTreeMap::new();
        let mut steep: BTreeMap<(u32, Vec<u32>), Vec<Line>> = BTreeMap::new();
        let mut crossing: BTreeMap<usize, Vec<Line>> = BTreeMap::new();
        for hit in &ledger.hits {
            match hit.slope {
                SlopeClass::Bounded => {
                    let e = bounded.entry((hit.parent, hit.k)).or_default();
                    if hit.crosses_parent {
                        e.0.push(hit.line);
                    } else {
                        e.1 += 1;
                    }
                }
                SlopeClass::Steep(l) => {
                    let anc = parents[hit.parent].ancestor(n.saturating_sub(l).max(1));
                    let (lo, hi) = state.extent(&anc);
                    let lines = steep.entry((l, anc.lineage)).or_default();
                    if hit.line.crosses(theta, &lo, &hi) && !lines.contains(&hit.line) {
                        lines.push(hit.line);
                    }
                }
            }
            if hit.crosses_parent {
                crossing.entry(hit.parent).or_default().push(hit.line);
            }
        }

        for (pi, lines) in &crossing {
            for (i, l1) in lines.iter().enumerate() {
                for l2 in &lines[i + 1..] {
                    summary.intersection_pairs += 1;
                    if let Err(kind) = check_intersection_bounds(l1, l2, theta, &seg_len) {
                        return Err(DiagnosticsError::IntersectionBound {
                            kind,
                            first: *l1,
                            second: *l2,
                            lineage: parents[*pi].lineage_string(),
                        });
                    }
                }
            }
        }

        let mut class_groups = Vec::new();
        for ((pi, k), (lines, overhanging)) in bounded {
            if lines.is_empty() {
                continue;
            }
            let g = class_group(
                state,
                n,
                parents[pi].lineage_string(),
                k,
                lines,
                overhanging,
                options,
            )?;
            summary.class_groups += 1;
            summary.parallel_pairs += g.parallel.violations.len();
            if matches!(
                g.common_point,
                CommonPoint::Violation { .. } | CommonPoint::Parallel { .. }
            ) {
                summary.common_point_failures += 1;
            }
            summary.collection_b_bound.add(g.collection_b_bound);
            if let Some(p) = &g.principal {
                summary.first_principal.add(p.first_principal);
                summary.gap_bound.add(p.gap_bound);
                summary.omega_upper.add(p.omega_upper);
                summary.second_principal.add(p.second_principal);
                summary.lattice.add(p.lattice);
                summary.pigeonhole.add(p.pigeonhole.verdict);
                if asymptotic_regime {
                    strict_guard(p.first_principal, "first principal inequality", n)?;
                    strict_guard(p.second_principal, "second principal inequality", n)?;
                }
            }
            if asymptotic_regime {
                strict_guard(g.collection_b_bound, "second collection bound", n)?;
            }
            class_groups.push(g);
        }

        let mut steep_groups = Vec::new();
        for ((l, anc), lines) in steep {
            if lines.is_empty() {
                continue;
            }
            let report = starred_checks(&lines, l, n, params, theta);
            summary.steep_groups += 1;
            let fields = [
                ("single_b", report.single_b),
                ("gap_bound", report.gap_bound),
                ("coefficient_bounds", report.coefficient_bounds),
                ("slope_bound", report.slope_bound),
                ("omega_first", report.omega_first),
                ("denominator_floor", report.denominator_floor),
                ("omega_second", report.omega_second),
            ];
            for (name, v) in fields {
                summary.starred.entry(name.to_string()).or_default().add(v);
            }
            let ancestor = crate::sieve::Segment { lineage: anc }.lineage_string();
            steep_groups.push(SteepGroup { ancestor, report });
        }

        let counters = fundamental_counters(state, ledger);
        let attr = attribution(state, ledger);
        if !attr.consistent {
            return Err(DiagnosticsError::Attribution(n));
        }
        totals.merge(&summary);
        levels.push(LevelDiagnostics {
            from_level: n,
            summary,
            counters,
            attribution: attr,
            class_groups,
            steep_groups,
        });
    }
    Ok(Diagnostics {
        asymptotic_regime,
        totals,
        levels,
    })
}
