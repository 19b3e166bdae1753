//! JSON encodings of admissible functions.
//!
//! ```json
//! {"kind": "power", "m": "3/2"}
//! {"kind": "exp", "r": "1/10"}
//! {"kind": "stretched_exp", "a": "1", "b": "1/2"}
//! {"kind": "pwa", "points": [["0", "0"], ["1", "2"]], "final_slope": "1"}
//! {"kind": "pwa", "points": [...], "periodic_from": 0}
//! {"kind": "sum", "terms": [{"coeff": "2", "fn": {...}}, ...]}
//! {"kind": "product", "factors": [{...}, {...}]}
//! ```
//!
//! A `pwa` with neither `final_slope` nor `periodic_from` has an undeclared tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{AdmissibleFunction, Pwa, PwaTail};
use crate::rational::{
    format_rational, parse_rational, serde_rational, serde_rational_opt, Rational,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpec {
    #[serde(with = "serde_rational")]
    pub coeff: Rational,
    #[serde(rename = "fn")]
    pub function: FunctionSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Power {
        #[serde(with = "serde_rational")]
        m: Rational,
    },
    Exp {
        #[serde(with = "serde_rational")]
        r: Rational,
    },
    StretchedExp {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
    },
    Pwa {
        points: Vec<[String; 2]>,
        #[serde(
            default,
            with = "serde_rational_opt",
            skip_serializing_if = "Option::is_none"
        )]
        final_slope: Option<Rational>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        periodic_from: Option<usize>,
    },
    Sum {
        terms: Vec<TermSpec>,
    },
    Product {
        factors: Box<[FunctionSpec; 2]>,
    },
}

impl TryFrom<FunctionSpec> for AdmissibleFunction {
    type Error = Error;

    fn try_from(spec: FunctionSpec) -> Result<Self> {
        Ok(match spec {
            FunctionSpec::Power { m } => AdmissibleFunction::power(m)?,
            FunctionSpec::Exp { r } => AdmissibleFunction::exp(r)?,
            FunctionSpec::StretchedExp { a, b } => AdmissibleFunction::stretched_exp(a, b)?,
            FunctionSpec::Pwa {
                points,
                final_slope,
                periodic_from,
            } => {
                let points = points
                    .iter()
                    .map(|[x, y]| Ok((parse_rational(x)?, parse_rational(y)?)))
                    .collect::<Result<Vec<_>>>()?;
                let tail = match (final_slope, periodic_from) {
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidFunction(
                            "give at most one of final_slope and periodic_from".into(),
                        ))
                    }
                    (Some(s), None) => PwaTail::FinalSlope(s),
                    (None, Some(from_index)) => PwaTail::Periodic { from_index },
                    (None, None) => PwaTail::Unknown,
                };
                AdmissibleFunction::PiecewiseAffine(Pwa::new(points, tail)?)
            }
            FunctionSpec::Sum { terms } => AdmissibleFunction::scaled_sum(
                terms
                    .into_iter()
                    .map(|t| Ok((t.coeff, t.function.try_into()?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            FunctionSpec::Product { factors } => {
                let [f, g] = *factors;
                AdmissibleFunction::product(f.try_into()?, g.try_into()?)
            }
        })
    }
}

impl From<&AdmissibleFunction> for FunctionSpec {
    fn from(g: &AdmissibleFunction) -> Self {
        match g {
            AdmissibleFunction::Power(m) => FunctionSpec::Power { m: m.clone() },
            AdmissibleFunction::Exp(r) => FunctionSpec::Exp { r: r.clone() },
            AdmissibleFunction::StretchedExp { a, b } => FunctionSpec::StretchedExp {
                a: a.clone(),
                b: b.clone(),
            },
            AdmissibleFunction::PiecewiseAffine(p) => {
                let points = p
                    .points()
                    .iter()
                    .map(|(x, y)| [format_rational(x), format_rational(y)])
                    .collect();
                let (final_slope, periodic_from) = match p.tail() {
                    PwaTail::FinalSlope(s) => (Some(s.clone()), None),
                    PwaTail::Periodic { from_index } => (None, Some(*from_index)),
                    PwaTail::Unknown => (None, None),
                };
                FunctionSpec::Pwa {
                    points,
                    final_slope,
                    periodic_from,
                }
            }
            AdmissibleFunction::ScaledSum(terms) => FunctionSpec::Sum {
                terms: terms
                    .iter()
                    .map(|(c, h)| TermSpec {
                        coeff: c.clone(),
                        function: h.into(),
                    })
                    .collect(),
            },
            AdmissibleFunction::Product(pair) => FunctionSpec::Product {
                factors: Box::new([(&pair.0).into(), (&pair.1).into()]),
            },
        }
    }
}

impl Serialize for AdmissibleFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AdmissibleFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FunctionSpec::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn documented_forms_parse() {
        let g: AdmissibleFunction = serde_json::from_str(r#"{"kind":"power","m":"3/2"}"#).unwrap();
        assert_eq!(g, AdmissibleFunction::power(ratio(3, 2)).unwrap());
        let g: AdmissibleFunction = serde_json::from_str(r#"{"kind":"exp","r":"0.1"}"#).unwrap();
        assert_eq!(g, AdmissibleFunction::exp(ratio(1, 10)).unwrap());
        let g: AdmissibleFunction = serde_json::from_str(
            r#"{"kind":"pwa","points":[["0","0"],["1","2"]],"final_slope":"1"}"#,
        )
        .unwrap();
        assert_eq!(g.as_pwa().unwrap().tail(), &PwaTail::FinalSlope(int(1)));
        let g: AdmissibleFunction = serde_json::from_str(
            r#"{"kind":"sum","terms":[{"coeff":"2","fn":{"kind":"power","m":"1"}},{"coeff":"1","fn":{"kind":"product","factors":[{"kind":"exp","r":"1"},{"kind":"power","m":"2"}]}}]}"#,
        )
        .unwrap();
        assert!(matches!(g, AdmissibleFunction::ScaledSum(ref t) if t.len() == 2));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(
            serde_json::from_str::<AdmissibleFunction>(r#"{"kind":"power","m":"-1"}"#).is_err()
        );
        assert!(
            serde_json::from_str::<AdmissibleFunction>(r#"{"kind":"power","m":"1","x":"2"}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<AdmissibleFunction>(
            r#"{"kind":"pwa","points":[["0","1"],["1","0"]]}"#
        )
        .is_err());
    }

    #[test]
    fn round_trip() {
        let g = AdmissibleFunction::product(
            AdmissibleFunction::stretched_exp(int(1), ratio(1, 2)).unwrap(),
            AdmissibleFunction::PiecewiseAffine(
                Pwa::new(
                    vec![(int(0), int(0)), (int(1), int(1)), (int(2), int(4))],
                    PwaTail::Periodic { from_index: 0 },
                )
                .unwrap(),
            ),
        );
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<AdmissibleFunction>(&s).unwrap(), g);
    }
}
