use std::cmp::Ordering;
use std::time::Instant;

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{chain_certify, run_chain, ChainParams, ImageFragment, TailKind, TailProof};
use super::stratum::{envelopes_for, faa_exp_envelope, stratum_refute, EnvelopeData};
use super::{compare_sums, Scalar, Verdict};
use crate::error::Result;
use crate::fragmentation::make_faa;
use crate::functions::AdmissibleFunction;
use crate::numeric::{LogAffine, DEFAULT_BITS};
use crate::rational::{format_rational, int, Extended, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseCell {
    pub r: Rational,
    pub a: LogAffine,
}

/// One grid cell of the scan. Numbers are exact strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r: String,
    pub a: String,
    pub ra: String,
    pub ra_lo: String,
    pub ra_hi: String,
    pub verdict: String,
    #[serde(rename = "n0_or_N0")]
    pub n0: Option<usize>,
    pub first_gap: Option<String>,
    /// `e^{−rA} + e^{ra} < 2 < e^{−ra} + e^{rA}`, when decidable.
    pub alarge: Option<bool>,
    pub runtime_ms: u64,
}

fn exp_of(v: LogAffine) -> Scalar {
    Scalar::Exp(v)
}

/// `e^{−rA} + e^{ra} < 2` and `e^{−ra} + e^{rA} > 2`.
pub fn alarge_condition(r: &Rational, big_a: &Rational, a: &LogAffine) -> Option<bool> {
    let ra = a.scale(r);
    let ra_big = LogAffine::rational(r * big_a);
    let two = Scalar::Exact(int(2));
    let first = compare_sums(
        &[
            &exp_of(ra_big.scale(&-Rational::one())),
            &exp_of(ra.clone()),
        ],
        &[&two],
    )?;
    let second = compare_sums(
        &[&exp_of(ra.scale(&-Rational::one())), &exp_of(ra_big)],
        &[&two],
    )?;
    Some(first == Ordering::Less && second == Ordering::Greater)
}

fn refute(r: &Rational, big_a: &Rational, a: &LogAffine, horizon: usize) -> Result<Verdict> {
    let env = match a.as_rational() {
        Some(q) => envelopes_for(
            &make_faa(big_a, q, 1)?,
            &AdmissibleFunction::exp(r.clone())?,
            2,
            horizon,
        )?,
        None => EnvelopeData::replicate(faa_exp_envelope(r, big_a, a), 2),
    };
    Ok(stratum_refute(&env, 1)?.verdict)
}

fn certify(r: &Rational, big_a: &Rational, a: &LogAffine, horizon: usize) -> Result<Verdict> {
    if let Some(q) = a.as_rational() {
        let f = make_faa(big_a, q, 1)?;
        // dist(K_n, K_{n+1}) = a exactly, so any a' > a witnesses the strict bound.
        let p = ChainParams {
            big_a: big_a.clone(),
            a: q * int(2),
            eps: Rational::one(),
            skip: 0,
        };
        return Ok(chain_certify(&f, &AdmissibleFunction::exp(r.clone())?, &p, horizon)?.verdict);
    }
    let step = LogAffine::rational(big_a.clone()).add(a);
    let frags = (0..2)
        .map(|n| {
            let lo = step.scale(&int(n)).scale(r);
            let hi = lo.add(&LogAffine::rational(r * big_a));
            ImageFragment {
                lo: Scalar::Exp(lo),
                hi: Scalar::Exp(hi),
                tau: Extended::Infinite,
                gap: Rational::from_integer(0.into()),
            }
        })
        .collect::<Vec<_>>();
    Ok(run_chain(
        &frags,
        Some(TailProof {
            kind: TailKind::ScaleInvariant,
            from: 0,
        }),
    )?
    .verdict)
}

fn scan_cell(big_a: &Rational, cell: &PhaseCell, horizon: usize) -> Result<ScanRow> {
    let start = Instant::now();
    let (r, a) = (&cell.r, &cell.a);
    let ra = a.scale(r);
    let enc = ra.enclosure(DEFAULT_BITS);
    let refuted = refute(r, big_a, a, horizon)?;
    let certified = certify(r, big_a, a, horizon)?;
    let (verdict, n0, first_gap) = match (&refuted, &certified) {
        (Verdict::CertifiedNoHalfLine { .. }, Verdict::CertifiedHalfLine { .. }) => {
            ("Conflict".to_string(), None, None)
        }
        (Verdict::CertifiedNoHalfLine { n0, gap_witnesses }, _) => (
            refuted.name().to_string(),
            Some(*n0),
            gap_witnesses
                .first()
                .map(|w| format!("({}, {})", format_rational(w.lo()), format_rational(w.hi()))),
        ),
        (_, Verdict::CertifiedHalfLine { n0, .. }) => {
            (certified.name().to_string(), Some(*n0), None)
        }
        _ => ("Inconclusive".to_string(), None, None),
    };
    Ok(ScanRow {
        r: format_rational(r),
        a: a.to_string(),
        ra: ra.to_string(),
        ra_lo: format_rational(enc.lo()),
        ra_hi: format_rational(enc.hi()),
        verdict,
        n0,
        first_gap,
        alarge: alarge_condition(r, big_a, a),
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

fn cmp_log_affine(x: &LogAffine, y: &LogAffine) -> Ordering {
    x.cmp_value(y).unwrap_or_else(|| {
        x.enclosure(DEFAULT_BITS)
            .midpoint_f64()
            .total_cmp(&y.enclosure(DEFAULT_BITS).midpoint_f64())
    })
}

/// Runs both engines for `g = e^{rx}` on `F(A, a)` over the grid. Rows are
/// sorted by `(r, a)` regardless of execution order.
pub fn phase_scan(
    big_a: &Rational,
    r_grid: &[Rational],
    a_grid: &[LogAffine],
    horizon: usize,
) -> Result<Vec<ScanRow>> {
    let mut rs = r_grid.to_vec();
    rs.sort();
    rs.dedup();
    let mut as_ = a_grid.to_vec();
    as_.sort_by(cmp_log_affine);
    as_.dedup();
    let cells: Vec<PhaseCell> = rs
        .iter()
        .flat_map(|r| {
            as_.iter().map(move |a| PhaseCell {
                r: r.clone(),
                a: a.clone(),
            })
        })
        .collect();
    cells
        .par_iter()
        .map(|c| scan_cell(big_a, c, horizon))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn row(r: Rational, a: LogAffine) -> ScanRow {
        phase_scan(&int(10), &[r], &[a], 4).unwrap().remove(0)
    }

    #[test]
    fn both_sides_of_the_boundary() {
        assert_eq!(
            row(ratio(1, 2), LogAffine::rational(int(1))).verdict,
            "CertifiedHalfLine"
        );
        assert_eq!(
            row(int(2), LogAffine::rational(int(1))).verdict,
            "CertifiedNoHalfLine"
        );
        assert_eq!(
            row(int(1), LogAffine::ln2_multiple(int(1))).verdict,
            "CertifiedNoHalfLine"
        );
        let below = row(int(1), LogAffine::ln2_multiple(ratio(9, 10)));
        assert_eq!(below.verdict, "CertifiedHalfLine");
        assert_eq!(below.alarge, Some(true));
    }

    #[test]
    fn rows_are_sorted() {
        let rows = phase_scan(
            &int(10),
            &[int(2), ratio(1, 2)],
            &[int(1), ratio(1, 2)].map(LogAffine::rational),
            4,
        )
        .unwrap();
        let keys: Vec<(String, String)> = rows.iter().map(|r| (r.r.clone(), r.a.clone())).collect();
        assert_eq!(
            keys,
            vec![
                ("1/2".into(), "1/2".into()),
                ("1/2".into(), "1".into()),
                ("2".into(), "1/2".into()),
                ("2".into(), "1".into())
            ]
        );
    }
}
