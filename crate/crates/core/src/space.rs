//! Metric spaces and points: the real line with `|x - y|`, finite label
//! sets with the 0/1 discrete metric, and set-valued distance primitives.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance under which two coordinates are considered equal.
/// All "exact" step identities in validators are checked against this.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Space {
    RealLine,
    FiniteDiscrete { labels: Vec<String> },
}

impl Space {
    pub fn finite<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Space {
        Space::FiniteDiscrete {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Space::FiniteDiscrete { .. })
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Space::RealLine => &[],
            Space::FiniteDiscrete { labels } => labels,
        }
    }

    pub fn contains(&self, p: &SpacePoint) -> bool {
        match (self, p) {
            (Space::RealLine, SpacePoint::Real(x)) => x.is_finite(),
            (Space::FiniteDiscrete { labels }, SpacePoint::Label(l)) => {
                labels.iter().any(|k| k == l)
            }
            _ => false,
        }
    }

    pub fn check(&self, p: &SpacePoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutsideSpace(format!("{p} not in {self:?}")))
        }
    }

    /// Point metric: absolute difference on the real line, 0/1 on labels.
    pub fn distance(&self, a: &SpacePoint, b: &SpacePoint) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        match (a, b) {
            (SpacePoint::Real(x), SpacePoint::Real(y)) => Ok((x - y).abs()),
            (SpacePoint::Label(x), SpacePoint::Label(y)) => {
                Ok(if x == y { 0.0 } else { 1.0 })
            }
            _ => Err(Error::Domain("mixed point kinds".into())),
        }
    }

    pub fn points_close(&self, a: &SpacePoint, b: &SpacePoint) -> bool {
        matches!(self.distance(a, b), Ok(d) if d <= EXACT_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpacePoint {
    Real(f64),
    Label(String),
}

impl SpacePoint {
    pub fn real(x: f64) -> SpacePoint {
        SpacePoint::Real(x)
    }

    pub fn label(l: impl Into<String>) -> SpacePoint {
        SpacePoint::Label(l.into())
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            SpacePoint::Real(x) => Some(*x),
            SpacePoint::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            SpacePoint::Real(_) => None,
            SpacePoint::Label(l) => Some(l),
        }
    }
}

impl fmt::Display for SpacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpacePoint::Real(x) => write!(f, "{x}"),
            SpacePoint::Label(l) => write!(f, "{l}"),
        }
    }
}

/// Result of a set-to-set distance query: the minimum over all pairs and
/// the achieving pair, ties broken by smallest index in `a`, then in `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetDistance {
    pub value: f64,
    pub index_a: usize,
    pub index_b: usize,
}

/// Distance between finite point sets: `inf` over all pairs of the point
/// metric. Not a metric itself (it vanishes on overlapping sets).
pub fn set_distance(space: &Space, a: &[SpacePoint], b: &[SpacePoint]) -> Result<SetDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best: Option<SetDistance> = None;
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let d = space.distance(pa, pb)?;
            if best.is_none_or(|s| d < s.value) {
                best = Some(SetDistance {
                    value: d,
                    index_a: i,
                    index_b: j,
                });
            }
        }
    }
    Ok(best.expect("non-empty sets"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum HausdorffVariant {
    /// Maximum of the two one-sided sup-inf values: the usual Hausdorff metric.
    #[default]
    Standard,
    /// Minimum of the two one-sided sup-inf values.
    MinOneSided,
}


fn one_sided(space: &Space, a: &[SpacePoint], b: &[SpacePoint]) -> Result<f64> {
    let mut sup = 0.0f64;
    for pa in a {
        let mut inf = f64::INFINITY;
        for pb in b {
            inf = inf.min(space.distance(pa, pb)?);
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

pub fn hausdorff_distance(
    space: &Space,
    a: &[SpacePoint],
    b: &[SpacePoint],
    variant: HausdorffVariant,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let ab = one_sided(space, a, b)?;
    let ba = one_sided(space, b, a)?;
    Ok(match variant {
        HausdorffVariant::Standard => ab.max(ba),
        HausdorffVariant::MinOneSided => ab.min(ba),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(xs: &[f64]) -> Vec<SpacePoint> {
        xs.iter().copied().map(SpacePoint::real).collect()
    }

    #[test]
    fn singleton_pair_distance() {
        let s = Space::RealLine;
        let d = set_distance(&s, &reals(&[0.0]), &reals(&[1.0])).unwrap();
        assert_eq!(d.value, 1.0);
    }

    #[test]
    fn min_over_all_pairs_with_achieving_indices() {
        // pairs: (1,2)=1 (1,6)=5 (4,2)=2 (4,6)=2 -> min 1.0 at (0,0)
        let s = Space::RealLine;
        let d = set_distance(&s, &reals(&[1.0, 4.0]), &reals(&[2.0, 6.0])).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!((d.index_a, d.index_b), (0, 0));
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let s = Space::RealLine;
        let a = reals(&[3.0, 7.0]);
        assert_eq!(set_distance(&s, &a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn empty_set_is_an_error() {
        let s = Space::RealLine;
        assert!(matches!(
            set_distance(&s, &[], &reals(&[1.0])),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn mixed_spaces_rejected() {
        let s = Space::RealLine;
        let a = vec![SpacePoint::real(0.0)];
        let b = vec![SpacePoint::label("x")];
        assert!(set_distance(&s, &a, &b).is_err());
    }

    #[test]
    fn discrete_metric_is_zero_one() {
        let s = Space::finite(["1", "2", "3"]);
        let one = SpacePoint::label("1");
        let two = SpacePoint::label("2");
        assert_eq!(s.distance(&one, &one).unwrap(), 0.0);
        assert_eq!(s.distance(&one, &two).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_variants() {
        let s = Space::RealLine;
        // one-sided values: A->B is 1, B->A is 2
        let a = reals(&[0.0]);
        let b = reals(&[1.0, 2.0]);
        assert_eq!(
            hausdorff_distance(&s, &a, &b, HausdorffVariant::MinOneSided).unwrap(),
            1.0
        );
        assert_eq!(
            hausdorff_distance(&s, &a, &b, HausdorffVariant::Standard).unwrap(),
            2.0
        );
        let c = reals(&[0.0, 10.0]);
        assert_eq!(
            hausdorff_distance(&s, &c, &c, HausdorffVariant::Standard).unwrap(),
            0.0
        );
        assert_eq!(
            hausdorff_distance(&s, &a, &a, HausdorffVariant::MinOneSided).unwrap(),
            0.0
        );
    }
}
