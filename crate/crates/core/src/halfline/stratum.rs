use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;

use super::{compare_sums, HalfLineVerdict, ReasonKind, Scalar, Verdict};
use crate::error::{Error, Result};
use crate::fragmentation::Fragmentation;
use crate::functions::{eval_exact, AdmissibleFunction};
use crate::interval::Interval;
use crate::numeric::{refine, Enclosure, LogAffine, DEFAULT_BITS};
use crate::rational::{int, Rational};

/// Largest number of summands supported.
pub const MAX_FOLD: usize = 4;

/// `x_n = e^{lx + (n−start)c}`, `y_n = e^{ly + (n−start)c}` for `n >= start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricTail {
    pub start: usize,
    pub lx: LogAffine,
    pub ly: LogAffine,
    pub c: LogAffine,
}

impl GeometricTail {
    fn shifted(&self, to: usize) -> (LogAffine, LogAffine) {
        let k = Rational::from_integer(((to - self.start) as i64).into());
        (
            self.lx.add(&self.c.scale(&k)),
            self.ly.add(&self.c.scale(&k)),
        )
    }
}

/// Hull envelopes `[x_n, y_n]` of one summand's fragments.
#[derive(Clone, Debug)]
pub struct FactorEnvelope {
    /// `(x_n, y_n)` for `n` below the tail start, or for every known `n`.
    pub prefix: Vec<(Scalar, Scalar)>,
    pub tail: Option<GeometricTail>,
}

impl FactorEnvelope {
    fn known(&self) -> Option<usize> {
        match &self.tail {
            Some(_) => None,
            None => Some(self.prefix.len()),
        }
    }

    fn at(&self, n: usize) -> Option<(Scalar, Scalar)> {
        match &self.tail {
            Some(t) if n >= t.start => {
                let (lx, ly) = t.shifted(n);
                Some((Scalar::Exp(lx), Scalar::Exp(ly)))
            }
            _ => self.prefix.get(n).cloned(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = &self.tail {
            if self.prefix.len() < t.start {
                return Err(Error::Domain(format!(
                    "envelope prefix has {} entries, tail starts at {}",
                    self.prefix.len(),
                    t.start
                )));
            }
        } else if self.prefix.is_empty() {
            return Err(Error::Domain("envelope is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EnvelopeData {
    pub factors: Vec<FactorEnvelope>,
}

impl EnvelopeData {
    pub fn replicate(factor: FactorEnvelope, d: usize) -> Self {
        Self {
            factors: vec![factor; d],
        }
    }
}

/// Envelopes of `g[F]` for each of `d` summands: geometric when `g = e^{rx}`
/// and `F` has a translation tail, otherwise the first `horizon` fragments.
pub fn envelopes_for(
    f: &Fragmentation,
    g: &AdmissibleFunction,
    d: usize,
    horizon: usize,
) -> Result<EnvelopeData> {
    if let (Some(r), Some(period), Some(t)) = (g.exp_rate(), f.period(), f.translate_start(f.len()))
    {
        let at = |q: &Rational| LogAffine::rational(r * q);
        let prefix = f
            .prefix(t)?
            .iter()
            .map(|k| (Scalar::Exp(at(k.min())), Scalar::Exp(at(k.max()))))
            .collect();
        let kt = f.fragment(t)?;
        let tail = GeometricTail {
            start: t,
            lx: at(kt.min()),
            ly: at(kt.max()),
            c: at(period),
        };
        return Ok(EnvelopeData::replicate(
            FactorEnvelope {
                prefix,
                tail: Some(tail),
            },
            d,
        ));
    }
    let count = if f.period().is_some() {
        horizon.max(2)
    } else {
        f.len()
    };
    let shared = Arc::new(g.clone());
    let scalar = |x: &Rational| -> Result<Scalar> {
        Ok(if g.is_exact() {
            Scalar::Exact(eval_exact(g, x)?)
        } else if let Some(r) = g.exp_rate() {
            Scalar::Exp(LogAffine::rational(r * x))
        } else {
            Scalar::Image(shared.clone(), x.clone())
        })
    };
    let prefix = f
        .prefix(count)?
        .iter()
        .map(|k| Ok((scalar(k.min())?, scalar(k.max())?)))
        .collect::<Result<_>>()?;
    Ok(EnvelopeData::replicate(
        FactorEnvelope { prefix, tail: None },
        d,
    ))
}

/// Envelope of `e^{rx}` on `F(A, a)` with `a` possibly involving `ln 2`:
/// `x_n = e^{rn(A+a)}`, `y_n = e^{r(n(A+a)+A)}`.
pub fn faa_exp_envelope(r: &Rational, big_a: &Rational, a: &LogAffine) -> FactorEnvelope {
    let tail = GeometricTail {
        start: 0,
        lx: LogAffine::zero(),
        ly: LogAffine::rational(r * big_a),
        c: LogAffine::rational(big_a.clone()).add(a).scale(r),
    };
    FactorEnvelope {
        prefix: Vec::new(),
        tail: Some(tail),
    }
}

struct Stratum {
    ys: Vec<Scalar>,
    /// One right-hand side per `k`: `x_{n+1,k} + Σ_{j≠k} x_{0,j}`.
    rhs: Vec<Vec<Scalar>>,
}

fn stratum(env: &EnvelopeData, x0: &[Scalar], n: usize) -> Option<Stratum> {
    let mut ys = Vec::with_capacity(env.factors.len());
    let mut rhs = Vec::with_capacity(env.factors.len());
    for f in &env.factors {
        ys.push(f.at(n)?.1);
    }
    for (k, f) in env.factors.iter().enumerate() {
        let mut side = vec![f.at(n + 1)?.0];
        side.extend(
            x0.iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, x)| x.clone()),
        );
        rhs.push(side);
    }
    Some(Stratum { ys, rhs })
}

fn refs(v: &[Scalar]) -> Vec<&Scalar> {
    v.iter().collect()
}

fn stratum_holds(s: &Stratum) -> bool {
    let ys = refs(&s.ys);
    s.rhs
        .iter()
        .all(|side| compare_sums(&ys, &refs(side)) == Some(Ordering::Less))
}

fn sum_at(v: &[Scalar], bits: u32) -> Option<Enclosure> {
    let mut acc = Enclosure::exact(Rational::zero());
    for s in v {
        acc = acc.add(&s.enclose(bits).ok()?);
    }
    Some(acc)
}

/// `G_n = (Σ y_{n,j}, min_k (x_{n+1,k} + Σ_{j≠k} x_{0,j}))` with rational ends inside.
fn witness(s: &Stratum) -> Option<Interval> {
    refine(DEFAULT_BITS, |bits| {
        let lo = sum_at(&s.ys, bits)?.hi().clone();
        let mut hi: Option<Rational> = None;
        for side in &s.rhs {
            let v = sum_at(side, bits)?.lo().clone();
            hi = Some(hi.map_or(v.clone(), |h: Rational| h.min(v)));
        }
        let hi = hi?;
        (lo < hi).then(|| Interval::new(lo, hi).expect("ordered"))
    })
}

/// `Σ_j e^{ly_j} <= min_k e^{lx_k + c}` for the tails normalized to a common start.
fn tail_condition(tails: &[&GeometricTail], start: usize) -> bool {
    let c = &tails[0].c;
    if tails.iter().any(|t| &t.c != c) {
        return false;
    }
    let shifted: Vec<(LogAffine, LogAffine)> = tails.iter().map(|t| t.shifted(start)).collect();
    let ys: Vec<Scalar> = shifted
        .iter()
        .map(|(_, ly)| Scalar::Exp(ly.clone()))
        .collect();
    let symbolic = symbolic_sum(&shifted);
    shifted.iter().all(|(lx, _)| {
        let target = lx.add(c);
        let order = match &symbolic {
            Some(lhs) => lhs.cmp_value(&target),
            None => compare_sums(&refs(&ys), &[&Scalar::Exp(target)]),
        };
        matches!(order, Some(Ordering::Less | Ordering::Equal))
    })
}

/// With equal `ly` and `d ∈ {1, 2, 4}`, `Σ_j e^{ly_j} = e^{ly + log2(d) ln 2}`,
/// which compares exactly even on the boundary.
fn symbolic_sum(shifted: &[(LogAffine, LogAffine)]) -> Option<LogAffine> {
    let ly = &shifted[0].1;
    if shifted.iter().any(|(_, l)| l != ly) {
        return None;
    }
    let log2d = match shifted.len() {
        1 => 0,
        2 => 1,
        4 => 2,
        _ => return None,
    };
    Some(ly.add(&LogAffine::ln2_multiple(int(log2d))))
}

/// Refutes half-line containment of a `d`-fold sum with the stratum
/// inequality `Σ_j y_{n,j} < min_k (x_{n+1,k} + Σ_{j≠k} x_{0,j})` for all
/// `n >= N0`. The first `horizon` witnesses `G_n` are listed.
pub fn stratum_refute(env: &EnvelopeData, horizon: usize) -> Result<HalfLineVerdict> {
    let d = env.factors.len();
    if !(2..=MAX_FOLD).contains(&d) {
        return Err(Error::Domain(format!(
            "number of summands must be between 2 and {MAX_FOLD}, got {d}"
        )));
    }
    for f in &env.factors {
        f.validate()?;
    }
    let x0: Vec<Scalar> = env
        .factors
        .iter()
        .map(|f| f.at(0).expect("validated").0)
        .collect();
    // The tail gives `Σ y <= x_{n+1,k}`; positive `x_0` makes it strict.
    let zero = Scalar::Exact(Rational::zero());
    let x0_positive = x0
        .iter()
        .all(|x| compare_sums(&[x], &[&zero]) == Some(Ordering::Greater));
    let tails: Option<Vec<&GeometricTail>> = env.factors.iter().map(|f| f.tail.as_ref()).collect();
    let tail_start = tails
        .as_ref()
        .map(|t| t.iter().map(|t| t.start).max().unwrap_or(0));
    let tail_ok = match (&tails, tail_start) {
        (Some(t), Some(s)) => x0_positive && tail_condition(t, s),
        _ => false,
    };
    // Strata with a known right-hand side.
    let last = match tail_start {
        Some(s) if tail_ok => s,
        Some(s) => s.max(horizon),
        None => env
            .factors
            .iter()
            .filter_map(|f| f.known())
            .min()
            .unwrap_or(1)
            .saturating_sub(1),
    };
    let checks: Vec<bool> = (0..last)
        .into_par_iter()
        .map(|n| stratum(env, &x0, n).is_some_and(|s| stratum_holds(&s)))
        .collect();
    let n0 = (0..last).rev().find(|&n| !checks[n]).map_or(0, |n| n + 1);

    if tail_ok {
        let mut gap_witnesses = Vec::with_capacity(horizon);
        for n in n0..n0 + horizon {
            let s = stratum(env, &x0, n).expect("tails give every stratum");
            gap_witnesses.push(witness(&s).ok_or(Error::PrecisionExhausted)?);
        }
        return Ok(HalfLineVerdict::bare(Verdict::CertifiedNoHalfLine {
            n0,
            gap_witnesses,
        }));
    }
    let verdict = if last == 0 || !checks[last - 1] {
        Verdict::inconclusive(
            ReasonKind::Inequality,
            last.checked_sub(1),
            "stratum inequality fails at the last checked index",
        )
    } else {
        Verdict::inconclusive(
            ReasonKind::NoTail,
            Some(n0),
            format!(
                "stratum inequality holds for {n0} <= n < {last} but no tail argument sustains it"
            ),
        )
    };
    Ok(HalfLineVerdict::bare(verdict))
}
