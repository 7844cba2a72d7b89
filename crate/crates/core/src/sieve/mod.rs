//! Level-by-level interval sieve on the fiber `x = θ`.

mod engine;
mod params;

pub use engine::{
    child_range, count_bound_check, count_children_meeting, init, subdivide, Bucket, ChainPolicy,
    CountBoundReport, DeltaHit, ExtractedInterval, ParentTally, Root, Segment, SieveState,
    StepLedger, MAX_BRANCHING,
};
pub use params::{
    dyadic_class, KappaSource, Params, ParamsEcho, RegimeFlags, SlopeClass, STRICT_DELTA_LOG2,
    STRICT_R_LOG2,
};

use num_bigint::BigUint;
use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SieveError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("strict mode requires {}", .0.join(", "))]
    Strict(Vec<String>),
    #[error("dyadic index {k} outside 0..={max}")]
    KOutOfRange { k: u32, max: u32 },
    #[error("height outside the level-{n} window")]
    HeightOutOfRange { n: u32 },
    #[error("height bound {0} is too large to enumerate")]
    HeightTooLarge(BigUint),
    #[error("R = {0} is too large to subdivide")]
    BranchingTooLarge(BigUint),
    #[error("initial segment is not inside [0, 1]")]
    OutsideUnit,
    #[error("no survivors at the final level")]
    Empty,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
