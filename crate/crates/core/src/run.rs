//! End-to-end driver: configuration, orchestration, certificate and
//! interval-file output, and an independent certificate re-check.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::diagnostics::{diagnose, DiagOptions, Diagnostics, DiagnosticsError};
use crate::exactnum::{
    parse_rational, rational_to_string, ExactError, QuadraticIrrational, QuadraticNumber,
};
use crate::sieve::{
    count_bound_check, init, ChainPolicy, CountBoundReport, Params, ParamsEcho, SieveError,
    SieveState,
};
use crate::verify::{certify_condition0, verify_bad, BadnessReport, Worst};

pub const DEFAULT_THETA: &str = "quad:-1,1,2,5";
pub const DEFAULT_CAP: u128 = 100_000_000;
pub const DEFAULT_Q_MAX: u64 = 1_000_000;
pub const CERTIFICATE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagLevel {
    Off,
    Summary,
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub theta: String,
    /// A decimal integer or `2^k`.
    pub r: String,
    pub delta: String,
    /// `canonical` or a rational.
    pub kappa: String,
    /// Final level; `0` stops after the condition (0) report.
    pub depth: u32,
    pub start: String,
    pub strict: bool,
    /// Height bound for the badness check; defaults to `R^{depth−1}`.
    pub h_max: Option<String>,
    pub cap: u128,
    pub q_max: u64,
    pub diag: DiagLevel,
    pub policy: ChainPolicy,
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta: DEFAULT_THETA.into(),
            r: "16".into(),
            delta: "1/10000".into(),
            kappa: "canonical".into(),
            depth: 3,
            start: "0".into(),
            strict: false,
            h_max: None,
            cap: DEFAULT_CAP,
            q_max: DEFAULT_Q_MAX,
            diag: DiagLevel::Summary,
            policy: ChainPolicy::Leftmost,
            timings: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("estimated {estimate} interval tests exceed the cap {cap}")]
    Infeasible { estimate: u128, cap: u128 },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("certificate: {0}")]
    Certificate(String),
}

impl RunError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Exact(_) | RunError::Infeasible { .. } => 3,
            RunError::Sieve(e) => match e {
                SieveError::Geometry(_) | SieveError::Empty => 1,
                _ => 3,
            },
            _ => 1,
        }
    }
}

/// Parses `R` as a decimal integer or `2^k`.
pub fn parse_r(input: &str) -> Result<BigUint, RunError> {
    let s = input.trim();
    let bad = || RunError::Config(format!("cannot parse R = {input:?}"));
    if let Some((base, exp)) = s.split_once('^') {
        let base: BigUint = base.trim().parse().map_err(|_| bad())?;
        let exp: usize = exp.trim().parse().map_err(|_| bad())?;
        return Ok(num_traits::pow(base, exp));
    }
    s.parse().map_err(|_| bad())
}

/// Resolved inputs.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub theta: QuadraticIrrational,
    pub params: Params,
    pub start: BigRational,
    pub h_max: u128,
}

pub fn resolve(config: &RunConfig) -> Result<Resolved, RunError> {
    let theta = QuadraticIrrational::parse(&config.theta)?;
    let tv = theta.value();
    if tv.signum().is_lt() || tv.cmp_rational(&BigRational::one()).is_gt() {
        return Err(RunError::Config("θ must lie in [0, 1]".into()));
    }
    let r = parse_r(&config.r)?;
    if r < BigUint::from(2u8) {
        return Err(RunError::Config("R must be at least 2".into()));
    }
    let delta = parse_rational(&config.delta)?;
    if delta <= BigRational::zero() {
        return Err(RunError::Config("δ must be positive".into()));
    }
    let params = if config.kappa.trim() == "canonical" {
        Params::canonical(r, delta, config.strict)?
    } else {
        Params::with_kappa(r, delta, parse_rational(&config.kappa)?, config.strict)?
    };
    let start = parse_rational(&config.start)?;
    let h_max = match &config.h_max {
        Some(s) => s
            .trim()
            .parse::<u128>()
            .map_err(|_| RunError::Config(format!("cannot parse H_max = {s:?}")))?,
        None => params
            .r_pow(config.depth.saturating_sub(1))
            .to_u128()
            .ok_or_else(|| RunError::Config("R^{depth−1} does not fit the height range".into()))?,
    };
    if h_max == 0 {
        return Err(RunError::Config("H_max must be at least 1".into()));
    }
    Ok(Resolved {
        theta,
        params,
        start,
        h_max,
    })
}

/// Heuristic count of interval tests: the level-`n` step examines up to
/// `R^{n−1}` parents against about `4R^{2n/3}` slope pairs each, and the
/// badness check visits about `4H^{2/3}` pairs.
pub fn feasibility_estimate(params: &Params, depth: u32, h_max: u128) -> u128 {
    let r = params.r().to_f64().unwrap_or(f64::INFINITY);
    let mut total = 4.0 * (h_max as f64).powf(2.0 / 3.0);
    for n in 1..depth {
        let n = f64::from(n);
        total += r.powf(n - 1.0) * 4.0 * r.powf(2.0 * n / 3.0);
    }
    if total.is_finite() && total < u128::MAX as f64 {
        total.ceil() as u128
    } else {
        u128::MAX
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub theta: String,
    pub theta_exact: String,
    pub r: String,
    pub delta: String,
    pub kappa: String,
    pub depth: u32,
    pub start: String,
    pub strict: bool,
    pub h_max: String,
    pub cap: String,
    pub q_max: u64,
    pub policy: ChainPolicy,
    pub diag: DiagLevel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    /// Rational enclosure `[lo, hi]` of width at most `2^-64`.
    pub lo: String,
    pub hi: String,
}

impl ExactValue {
    fn of(x: &QuadraticNumber) -> Self {
        let tol = BigRational::new(BigInt::one(), BigInt::one() << 64usize);
        let e = x.enclosure(&tol);
        ExactValue {
            exact: x.to_spec_string(),
            lo: rational_to_string(&e.lo),
            hi: rational_to_string(&e.hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condition0Echo {
    pub q_max: u64,
    pub argmin_q: u64,
    pub minimum: ExactValue,
    pub margin: ExactValue,
    pub pass: bool,
    pub max_partial_quotient: String,
    pub cf_bound: String,
    pub extends_to_all_q: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalEcho {
    pub lineage: String,
    pub lo: String,
    pub hi: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelEcho {
    pub level: u32,
    pub survivors: usize,
    /// Children removed on the way into this level.
    pub removed: usize,
    pub buckets: std::collections::BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorstEcho {
    pub a: i64,
    pub b: i64,
    pub c: String,
    pub value: ExactValue,
}

impl WorstEcho {
    fn of(w: &Worst) -> Self {
        WorstEcho {
            a: w.a,
            b: w.b,
            c: w.c.to_string(),
            value: ExactValue::of(&w.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BadnessEcho {
    pub h_max: String,
    pub pairs_checked: u64,
    pub minimum: WorstEcho,
    pub pass: bool,
    pub minimum_positive_b: WorstEcho,
    pub pass_positive_b: bool,
}

impl BadnessEcho {
    fn of(b: &BadnessReport) -> Self {
        BadnessEcho {
            h_max: b.h_max.to_string(),
            pairs_checked: b.pairs_checked,
            minimum: WorstEcho::of(&b.worst),
            pass: b.pass,
            minimum_positive_b: WorstEcho::of(&b.worst_positive_b),
            pass_positive_b: b.pass_positive_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub sieve_ms: u128,
    pub diagnostics_ms: u128,
    pub verify_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub version: u32,
    pub config: ConfigEcho,
    pub params: ParamsEcho,
    pub feasibility_estimate: String,
    pub condition0: Condition0Echo,
    pub root: IntervalEcho,
    pub levels: Vec<LevelEcho>,
    pub survivors: Vec<IntervalEcho>,
    pub extracted: Option<IntervalEcho>,
    pub badness: Option<BadnessEcho>,
    pub count_bounds: Option<CountBoundReport>,
    pub diagnostics: Option<Diagnostics>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Certificate {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail | Status::Empty => 2,
        }
    }
}

pub struct RunOutput {
    pub certificate: Certificate,
    pub state: SieveState,
}

fn interval_echo(state: &SieveState, seg: &crate::sieve::Segment) -> IntervalEcho {
    let (lo, hi) = state.extent(seg);
    IntervalEcho {
        lineage: seg.lineage_string(),
        lo: rational_to_string(&lo),
        hi: rational_to_string(&hi),
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let resolved = resolve(config)?;
    let Resolved {
        theta,
        params,
        start,
        h_max,
    } = resolved;
    let estimate = feasibility_estimate(&params, config.depth, h_max);
    if estimate > config.cap {
        return Err(RunError::Infeasible {
            estimate,
            cap: config.cap,
        });
    }

    let c0 = certify_condition0(&theta, params.delta(), config.q_max);
    let condition0 = Condition0Echo {
        q_max: c0.q_max,
        argmin_q: c0.argmin_q,
        minimum: ExactValue::of(&c0.minimum),
        margin: ExactValue::of(&c0.margin),
        pass: c0.pass,
        max_partial_quotient: c0.max_partial_quotient.to_string(),
        cf_bound: rational_to_string(&c0.cf_bound),
        extends_to_all_q: c0.extends_to_all_q,
    };

    let clock = Instant::now();
    let mut state = init(&params, theta.value(), &start)?;
    for _ in 1..config.depth {
        if state.final_survivors().is_empty() {
            break;
        }
        state.step_in_place()?;
    }
    let sieve_ms = clock.elapsed().as_millis();

    let root = interval_echo(&state, &crate::sieve::Segment::root());
    let mut levels = vec![LevelEcho {
        level: 1,
        survivors: 1,
        removed: 0,
        buckets: Default::default(),
    }];
    for ledger in state.ledgers() {
        levels.push(LevelEcho {
            level: ledger.from_level + 1,
            survivors: ledger.survivors,
            removed: ledger.removed,
            buckets: ledger
                .buckets
                .iter()
                .map(|(b, c)| (b.label(), *c))
                .collect(),
        });
    }

    let mut certificate = Certificate {
        version: CERTIFICATE_VERSION,
        config: ConfigEcho {
            theta: config.theta.clone(),
            theta_exact: theta.value().to_spec_string(),
            r: params.r().to_string(),
            delta: rational_to_string(params.delta()),
            kappa: config.kappa.clone(),
            depth: config.depth,
            start: rational_to_string(&start),
            strict: config.strict,
            h_max: h_max.to_string(),
            cap: config.cap.to_string(),
            q_max: config.q_max,
            policy: config.policy,
            diag: config.diag,
        },
        params: params.describe(),
        feasibility_estimate: estimate.to_string(),
        condition0,
        root,
        levels,
        survivors: Vec::new(),
        extracted: None,
        badness: None,
        count_bounds: None,
        diagnostics: None,
        status: if c0.pass { Status::Pass } else { Status::Fail },
        timings: None,
    };
    if config.depth == 0 {
        return Ok(RunOutput { certificate, state });
    }

    let clock = Instant::now();
    certificate.count_bounds = Some(count_bound_check(&state)?);
    let diagnostics = match config.diag {
        DiagLevel::Off => None,
        DiagLevel::Summary => Some(diagnose(&state, &DiagOptions::default())?.summarized()),
        DiagLevel::Full => Some(diagnose(&state, &DiagOptions::default())?),
    };
    certificate.diagnostics = diagnostics;
    let diagnostics_ms = clock.elapsed().as_millis();

    let clock = Instant::now();
    let complete = state.level() == config.depth.max(1);
    certificate.survivors = state
        .final_survivors()
        .iter()
        .map(|s| interval_echo(&state, s))
        .collect();
    if !complete || state.final_survivors().is_empty() {
        certificate.status = Status::Empty;
    } else {
        let ex = state.extract_point(config.policy)?;
        let report = verify_bad(theta.value(), &ex.lo, &ex.hi, params.delta(), h_max);
        certificate.extracted = Some(IntervalEcho {
            lineage: ex.segment.lineage_string(),
            lo: rational_to_string(&ex.lo),
            hi: rational_to_string(&ex.hi),
        });
        if !report.pass {
            certificate.status = Status::Fail;
        }
        certificate.badness = Some(BadnessEcho::of(&report));
    }
    let verify_ms = clock.elapsed().as_millis();
    if config.timings {
        certificate.timings = Some(Timings {
            sieve_ms,
            diagnostics_ms,
            verify_ms,
        });
    }
    Ok(RunOutput { certificate, state })
}

pub const INTERVALS_HEADER: &str = "level,lineage,left_num,left_den,length_num,length_den";

/// Survivors at every level as CSV.
pub fn intervals_csv(state: &SieveState) -> String {
    let mut out = String::new();
    out.push_str(INTERVALS_HEADER);
    out.push('\n');
    for level in 1..=state.level() {
        let len = state.root().length(level);
        for seg in state.survivors(level) {
            let (lo, _) = state.extent(seg);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                level,
                seg.lineage_string(),
                lo.numer(),
                lo.denom(),
                len.numer(),
                len.denom()
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn emit_intervals(state: &SieveState, path: &Path) -> Result<(), RunError> {
    std::fs::write(path, intervals_csv(state)).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalRow {
    pub level: u32,
    pub lineage: Vec<u32>,
    pub left: BigRational,
    pub length: BigRational,
}

pub fn parse_intervals(text: &str) -> Result<Vec<IntervalRow>, RunError> {
    let mut lines = text.lines();
    if lines.next() != Some(INTERVALS_HEADER) {
        return Err(RunError::Certificate(
            "interval file header mismatch".into(),
        ));
    }
    let bad = |l: &str| RunError::Certificate(format!("malformed interval row {l:?}"));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            let int = |s: &str| s.parse::<BigInt>().map_err(|_| bad(line));
            let lineage = if f[1].is_empty() {
                Vec::new()
            } else {
                f[1].split('.')
                    .map(|x| x.parse::<u32>().map_err(|_| bad(line)))
                    .collect::<Result<_, _>>()?
            };
            Ok(IntervalRow {
                level: f[0].parse().map_err(|_| bad(line))?,
                lineage,
                left: BigRational::new(int(f[2])?, int(f[3])?),
                length: BigRational::new(int(f[4])?, int(f[5])?),
            })
        })
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Result of re-verifying a certificate from its own contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub badness_rechecked: bool,
    pub minimum_matches: bool,
    pub pass_matches: bool,
    pub counts_consistent: bool,
    pub recomputed_minimum: Option<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.minimum_matches && self.pass_matches && self.counts_consistent
    }
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, RunError> {
    let mut cur = v;
    for key in path {
        cur = cur
            .get(*key)
            .ok_or_else(|| RunError::Certificate(format!("missing field {}", path.join("."))))?;
    }
    Ok(cur)
}

fn str_field(v: &Value, path: &[&str]) -> Result<String, RunError> {
    field(v, path)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| RunError::Certificate(format!("field {} is not a string", path.join("."))))
}

/// Recomputes the badness minimum for the certificate's ξ interval and
/// height bound, and checks that level counts agree with the ledger.
pub fn check_certificate(json: &str) -> Result<CheckReport, RunError> {
    let v: Value = serde_json::from_str(json).map_err(|e| RunError::Certificate(e.to_string()))?;
    let theta = QuadraticNumber::parse_spec(&str_field(&v, &["config", "theta_exact"])?)?;
    let delta = parse_rational(&str_field(&v, &["params", "delta"])?)?;

    let levels = field(&v, &["levels"])?
        .as_array()
        .ok_or_else(|| RunError::Certificate("levels is not an array".into()))?;
    let r: u64 = str_field(&v, &["params", "r"])?
        .parse()
        .map_err(|_| RunError::Certificate("R too large to recount".into()))?;
    let mut counts_consistent = true;
    let mut prev: Option<u64> = None;
    for level in levels {
        let t = level["survivors"].as_u64().unwrap_or(u64::MAX);
        let removed = level["removed"].as_u64().unwrap_or(u64::MAX);
        let bucket_sum: u64 = level["buckets"]
            .as_object()
            .map(|m| m.values().filter_map(Value::as_u64).sum())
            .unwrap_or(0);
        if let Some(p) = prev {
            counts_consistent &= p * r == t + removed && bucket_sum == removed;
        }
        prev = Some(t);
    }
    let survivors = field(&v, &["survivors"])?.as_array().map_or(0, Vec::len) as u64;
    if levels.len() > 1 {
        counts_consistent &= prev == Some(survivors);
    }

    let (Some(extracted), Some(badness)) = (
        v.get("extracted").filter(|x| !x.is_null()),
        v.get("badness").filter(|x| !x.is_null()),
    ) else {
        return Ok(CheckReport {
            badness_rechecked: false,
            minimum_matches: true,
            pass_matches: true,
            counts_consistent,
            recomputed_minimum: None,
        });
    };
    let lo = parse_rational(&str_field(extracted, &["lo"])?)?;
    let hi = parse_rational(&str_field(extracted, &["hi"])?)?;
    let h_max: u128 = str_field(badness, &["h_max"])?
        .parse()
        .map_err(|_| RunError::Certificate("bad h_max".into()))?;
    let report = verify_bad(&theta, &lo, &hi, &delta, h_max);
    let recomputed = report.worst.value.to_spec_string();
    let stated = str_field(badness, &["minimum", "value", "exact"])?;
    let stated_pass = field(badness, &["pass"])?.as_bool();
    Ok(CheckReport {
        badness_rechecked: true,
        minimum_matches: recomputed == stated,
        pass_matches: stated_pass == Some(report.pass),
        counts_consistent,
        recomputed_minimum: Some(recomputed),
    })
}
