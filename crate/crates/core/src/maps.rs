//! Concrete endomorphism families used as semigroup generators: piecewise
//! linear maps of the real line, affine maps, finite label tables, and
//! ordered compositions of those.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{SpacePoint, EXACT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndomorphismSpec {
    /// Two affine branches split at the origin: `a*x + c` for `x <= 0`,
    /// `b*x + d` for `x > 0`. The left branch wins on the boundary.
    PiecewisePsi { a: f64, b: f64, c: f64, d: f64 },
    Affine { slope: f64, intercept: f64 },
    /// Image label per label of a finite space.
    FiniteTable { images: BTreeMap<String, String> },
    /// Components applied left to right: `components[0]` acts first.
    CompositionWord { components: Vec<EndomorphismSpec> },
}

impl EndomorphismSpec {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        EndomorphismSpec::Affine { slope, intercept }
    }

    pub fn psi(a: f64, b: f64, c: f64, d: f64) -> Self {
        EndomorphismSpec::PiecewisePsi { a, b, c, d }
    }

    pub fn table<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        EndomorphismSpec::FiniteTable {
            images: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn apply(&self, x: &SpacePoint) -> Result<SpacePoint> {
        match (self, x) {
            (EndomorphismSpec::PiecewisePsi { a, b, c, d }, SpacePoint::Real(v)) => {
                let y = if *v <= 0.0 { a * v + c } else { b * v + d };
                Ok(SpacePoint::Real(y))
            }
            (EndomorphismSpec::Affine { slope, intercept }, SpacePoint::Real(v)) => {
                Ok(SpacePoint::Real(slope * v + intercept))
            }
            (EndomorphismSpec::FiniteTable { images }, SpacePoint::Label(l)) => images
                .get(l)
                .map(|im| SpacePoint::label(im.clone()))
                .ok_or_else(|| Error::Domain(format!("label {l} not in table"))),
            (EndomorphismSpec::CompositionWord { components }, _) => {
                let mut p = x.clone();
                for c in components {
                    p = c.apply(&p)?;
                }
                Ok(p)
            }
            _ => Err(Error::Domain(format!("map cannot act on point {x}"))),
        }
    }

    /// All `p` with `apply(p) = y`. Empty when `y` has no preimage. A
    /// zero-slope branch whose constant matches `y` has a whole interval
    /// of preimages, which is reported as an unsupported domain.
    pub fn preimages(&self, y: &SpacePoint) -> Result<Vec<SpacePoint>> {
        match (self, y) {
            (EndomorphismSpec::Affine { slope, intercept }, SpacePoint::Real(v)) => {
                if *slope != 0.0 {
                    Ok(vec![SpacePoint::Real((v - intercept) / slope)])
                } else if (v - intercept).abs() <= EXACT_TOL {
                    Err(Error::Unsupported(
                        "constant map: preimage is the whole line".into(),
                    ))
                } else {
                    Ok(vec![])
                }
            }
            (EndomorphismSpec::PiecewisePsi { a, b, c, d }, SpacePoint::Real(v)) => {
                let mut out = Vec::new();
                if *a != 0.0 {
                    let x = (v - c) / a;
                    if x <= 0.0 {
                        out.push(x);
                    }
                } else if (v - c).abs() <= EXACT_TOL {
                    return Err(Error::Unsupported(
                        "flat left branch: interval preimage".into(),
                    ));
                }
                if *b != 0.0 {
                    let x = (v - d) / b;
                    if x > 0.0 {
                        out.push(x);
                    }
                } else if (v - d).abs() <= EXACT_TOL {
                    return Err(Error::Unsupported(
                        "flat right branch: interval preimage".into(),
                    ));
                }
                out.sort_by(f64::total_cmp);
                out.dedup_by(|u, w| (*u - *w).abs() <= EXACT_TOL);
                Ok(out.into_iter().map(SpacePoint::Real).collect())
            }
            (EndomorphismSpec::FiniteTable { images }, SpacePoint::Label(l)) => Ok(images
                .iter()
                .filter(|(_, im)| *im == l)
                .map(|(k, _)| SpacePoint::label(k.clone()))
                .collect()),
            (EndomorphismSpec::CompositionWord { components }, _) => {
                let mut layer = vec![y.clone()];
                for c in components.iter().rev() {
                    let mut next = Vec::new();
                    for p in &layer {
                        next.extend(c.preimages(p)?);
                    }
                    dedupe_points(&mut next);
                    layer = next;
                    if layer.is_empty() {
                        break;
                    }
                }
                Ok(layer)
            }
            _ => Err(Error::Domain(format!("map cannot act on point {y}"))),
        }
    }

    /// Whether the map is a bijection of its space. For the two-branch
    /// family this requires slopes of equal sign and a continuous join
    /// (`c = d`), so the branch ranges partition the line.
    pub fn invertible(&self) -> bool {
        match self {
            EndomorphismSpec::Affine { slope, .. } => *slope != 0.0,
            EndomorphismSpec::PiecewisePsi { a, b, c, d } => a * b > 0.0 && c == d,
            EndomorphismSpec::FiniteTable { images } => {
                let mut seen: Vec<&String> = images.values().collect();
                seen.sort();
                seen.dedup();
                seen.len() == images.len()
                    && images.keys().all(|k| images.values().any(|v| v == k))
            }
            EndomorphismSpec::CompositionWord { components } => {
                !components.is_empty() && components.iter().all(|c| c.invertible())
            }
        }
    }

    pub fn inverse(&self) -> Result<EndomorphismSpec> {
        if !self.invertible() {
            return Err(Error::Domain("map is not invertible".into()));
        }
        match self {
            EndomorphismSpec::Affine { slope, intercept } => Ok(EndomorphismSpec::Affine {
                slope: 1.0 / slope,
                intercept: -intercept / slope,
            }),
            EndomorphismSpec::PiecewisePsi { a, b, c, .. } => {
                if *a < 0.0 {
                    // negative slopes swap the branch ranges; the inverse
                    // is not expressible inside the family
                    return Err(Error::Unsupported(
                        "inverse of negative-slope branch pair".into(),
                    ));
                }
                let core = EndomorphismSpec::PiecewisePsi {
                    a: 1.0 / a,
                    b: 1.0 / b,
                    c: 0.0,
                    d: 0.0,
                };
                if *c == 0.0 {
                    Ok(core)
                } else {
                    Ok(EndomorphismSpec::CompositionWord {
                        components: vec![EndomorphismSpec::affine(1.0, -c), core],
                    })
                }
            }
            EndomorphismSpec::FiniteTable { images } => Ok(EndomorphismSpec::FiniteTable {
                images: images
                    .iter()
                    .map(|(k, v)| (v.clone(), k.clone()))
                    .collect(),
            }),
            EndomorphismSpec::CompositionWord { components } => {
                let mut inv = Vec::with_capacity(components.len());
                for c in components.iter().rev() {
                    inv.push(c.inverse()?);
                }
                Ok(EndomorphismSpec::CompositionWord { components: inv })
            }
        }
    }
}

pub(crate) fn dedupe_points(points: &mut Vec<SpacePoint>) {
    let mut kept: Vec<SpacePoint> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        let dup = kept.iter().any(|q| match (q, &p) {
            (SpacePoint::Real(x), SpacePoint::Real(y)) => (x - y).abs() <= EXACT_TOL,
            (SpacePoint::Label(x), SpacePoint::Label(y)) => x == y,
            _ => false,
        });
        if !dup {
            kept.push(p);
        }
    }
    *points = kept;
}
