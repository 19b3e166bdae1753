//! Exact thickness, Minkowski sums of interval unions, relative variation of
//! monotone functions, and certified half-line verdicts for sums of images of
//! fragmented semibounded closed sets.
//!
//! All set geometry is exact rational arithmetic. Values of transcendental
//! functions are handled through outward-rounded enclosures, and every
//! comparison that decides a verdict is either resolved by an enclosure or
//! reported as inconclusive.

pub mod error;
pub mod fragmentation;
pub mod functions;
pub mod halfline;
pub mod interval;
pub mod json;
pub mod numeric;
pub mod rational;
pub mod selftest;
pub mod thickness;

pub use error::{Error, ParseError, Result};
pub use fragmentation::{Fragmentation, SparsityCertificate, TailRule, ThicknessCertificate};
pub use functions::{AdmissibleFunction, Classification, LambdaEstimate, Pwa, PwaTail};
pub use halfline::{HalfLineVerdict, Verdict};
pub use interval::{Interval, IntervalUnion};
pub use numeric::{Enclosure, LogAffine};
pub use rational::{format_rational, parse_rational, Extended, Rational};
pub use thickness::{GapPresentation, ThicknessValue};
