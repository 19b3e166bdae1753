//! Certifying or refuting that a self-sum of an image set contains a half-line.
//!
//! [`chain_certify`] builds the overlapping chain `J_n = K̃_n + K̃_n`,
//! `J'_n = K̃_n + K̃_{n+1}` of image fragments; [`stratum_refute`] exhibits an
//! infinite sequence of gaps in a `d`-fold sum; [`sum_coverage_upto`] is the
//! exact finite oracle both are cross-checked against; [`phase_scan`] runs the
//! two engines over a grid for `g = e^{rx}` on `F(A, a)`.

mod chain;
mod coverage;
mod phase;
mod stratum;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functions::{eval_bits, AdmissibleFunction};
use crate::interval::Interval;
use crate::numeric::{refine, Enclosure, LogAffine, DEFAULT_BITS};
use crate::rational::{serde_rational, Rational};

pub use chain::{
    chain_certify, chain_certify_bigtau, image_fragment, pair_holds, run_chain, BigTauParams,
    ChainParams, ImageFragment, TailKind, TailProof, ThresholdReport,
};
pub use coverage::{image_prefix_for_horizon, sum_coverage_upto, CoverageKind, CoverageReport};
pub use phase::{alarge_condition, phase_scan, PhaseCell, ScanRow};
pub use stratum::{
    envelopes_for, faa_exp_envelope, stratum_refute, EnvelopeData, FactorEnvelope, GeometricTail,
    MAX_FOLD,
};

/// A real number that can be enclosed to any precision.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    /// `e^v`.
    Exp(LogAffine),
    /// `g(x)`.
    Image(Arc<AdmissibleFunction>, Rational),
}

impl Scalar {
    pub fn enclose(&self, bits: u32) -> Result<Enclosure> {
        match self {
            Scalar::Exact(q) => Ok(Enclosure::exact(q.clone())),
            Scalar::Exp(v) => Ok(v.exp(bits)),
            Scalar::Image(g, x) => eval_bits(g, x, bits),
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => f.write_str(&crate::rational::format_rational(q)),
            Scalar::Exp(v) => write!(f, "exp({v})"),
            Scalar::Image(_, x) => write!(f, "g({})", crate::rational::format_rational(x)),
        }
    }
}

fn sum_enclosure(terms: &[&Scalar], bits: u32) -> Result<Enclosure> {
    let mut acc = Enclosure::exact(Rational::from_integer(0.into()));
    for t in terms {
        acc = acc.add(&t.enclose(bits)?);
    }
    Ok(acc)
}

/// Certified comparison of `Σ lhs` against `Σ rhs`, refining precision until
/// the enclosures separate. `None` when they never do (e.g. equality).
pub fn compare_sums(lhs: &[&Scalar], rhs: &[&Scalar]) -> Option<Ordering> {
    let exact = |xs: &[&Scalar]| {
        xs.iter()
            .map(|s| s.as_exact().cloned())
            .sum::<Option<Rational>>()
    };
    if let (Some(l), Some(r)) = (exact(lhs), exact(rhs)) {
        return Some(l.cmp(&r));
    }
    refine(DEFAULT_BITS, |bits| {
        let l = sum_enclosure(lhs, bits).ok()?;
        let r = sum_enclosure(rhs, bits).ok()?;
        l.certain_cmp(&r)
    })
}

/// `Σ lhs >= Σ rhs` certified.
pub fn certainly_ge(lhs: &[&Scalar], rhs: &[&Scalar]) -> bool {
    matches!(
        compare_sums(lhs, rhs),
        Some(Ordering::Greater | Ordering::Equal)
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonKind {
    /// A hypothesis of the engine (thickness, `τ > R⁷`, ...) does not hold.
    Precondition,
    /// The explicit threshold cannot hold and the direct checks failed too.
    Threshold,
    /// A chain or stratum inequality fails or could not be resolved.
    Inequality,
    /// Checks pass on the prefix but no tail argument is available.
    NoTail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub kind: ReasonKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub detail: String,
}

impl Reason {
    pub fn new(kind: ReasonKind, index: Option<usize>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            index,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Verdict {
    /// `[from, ∞)` lies in the sum.
    CertifiedHalfLine {
        #[serde(with = "serde_rational")]
        from: Rational,
        n0: usize,
    },
    /// The open intervals `G_n`, `n >= n0`, miss the sum; the listed ones are
    /// the first few.
    CertifiedNoHalfLine {
        n0: usize,
        gap_witnesses: Vec<Interval>,
    },
    /// `[from, to]` lies in the sum; nothing is claimed past `to`.
    CoveredUpToHorizon {
        #[serde(with = "serde_rational")]
        from: Rational,
        #[serde(with = "serde_rational")]
        to: Rational,
    },
    Inconclusive {
        reason: Reason,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::CertifiedHalfLine { .. } => "CertifiedHalfLine",
            Verdict::CertifiedNoHalfLine { .. } => "CertifiedNoHalfLine",
            Verdict::CoveredUpToHorizon { .. } => "CoveredUpToHorizon",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(
            self,
            Verdict::CertifiedHalfLine { .. } | Verdict::CertifiedNoHalfLine { .. }
        )
    }

    pub fn inconclusive(kind: ReasonKind, index: Option<usize>, detail: impl Into<String>) -> Self {
        Verdict::Inconclusive {
            reason: Reason::new(kind, index, detail),
        }
    }
}

/// Inner enclosures of `J_n` and `J'_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub n: usize,
    pub j: Interval,
    pub j_next: Interval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfLineVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<ChainLink>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_proof: Option<TailProof>,
}

impl HalfLineVerdict {
    pub fn bare(verdict: Verdict) -> Self {
        Self {
            verdict,
            chain: None,
            threshold: None,
            tail_proof: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn comparisons_refine_until_separated() {
        let two = Scalar::Exact(int(2));
        let e_ln2 = Scalar::Exp(LogAffine::ln2_multiple(int(1)));
        assert_eq!(compare_sums(&[&two], &[&e_ln2]), Some(Ordering::Equal));
        let near = Scalar::Exp(LogAffine::rational(ratio(693_147, 1_000_000)));
        assert_eq!(compare_sums(&[&near], &[&two]), Some(Ordering::Less));
        let g = Arc::new(AdmissibleFunction::exp(int(1)).unwrap());
        let img = Scalar::Image(g, ratio(693_148, 1_000_000));
        assert_eq!(compare_sums(&[&img], &[&two]), Some(Ordering::Greater));
        assert!(certainly_ge(&[&two, &two], &[&e_ln2, &near]));
    }

    #[test]
    fn verdict_json_round_trips() {
        let v = HalfLineVerdict::bare(Verdict::CertifiedNoHalfLine {
            n0: 3,
            gap_witnesses: vec![Interval::new(ratio(1, 3), int(2)).unwrap()],
        });
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"status\":\"CertifiedNoHalfLine\""));
        assert_eq!(serde_json::from_str::<HalfLineVerdict>(&s).unwrap(), v);
    }
}
