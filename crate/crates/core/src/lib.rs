//! Effective interval sieve producing ξ with (θ, ξ) badly approximable in
//! the dual `||Aθ − Bξ||·max(A², B²) ≥ δ` sense, with exact verification.
//!
//! Module map:
//! - [`exactnum`]: rationals, quadratic irrationals, continued fractions.
//! - [`geometry`]: integer lines, heights, forbidden intervals, intersections.
//! - [`sieve`]: parameters and the level-by-level construction.
//! - [`diagnostics`]: executable checks of the counting lemmas on live data.
//! - [`verify`]: independent oracles for the final certificate.
//! - [`run`]: configuration, orchestration, certificate and CSV output.

pub mod diagnostics;
pub mod exactnum;
pub mod geometry;
pub mod run;
pub mod sieve;
pub mod verify;
