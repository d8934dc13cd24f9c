//! Shadowing transfer: pushing a (pseudo-trajectory, shadowing
//! trajectory) pair through a conjugating homeomorphism, and reversing
//! time through an invertible map. Both transfers rescale distances by a
//! bi-Lipschitz constant, so the transfer is refused when no finite
//! constant exists on the declared region.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::EndomorphismSpec;
use crate::semigroup::{gap_profile, GapProfile, GeneratorSet, PseudoTrajectory, Trajectory, Window};
use crate::space::{Space, SpacePoint, EXACT_TOL};
use crate::verdicts::{check_shadowing, ShadowVerdict, VerdictKind, VerdictParams};

/// A homeomorphism usable as a conjugacy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HMap {
    Affine { slope: f64, intercept: f64 },
    /// `sign(x) * |x|^exponent`; not Lipschitz at the origin when the
    /// exponent is below one.
    SignedPower { exponent: f64 },
    LabelTable { pairs: BTreeMap<String, String> },
}

impl HMap {
    pub fn apply(&self, p: &SpacePoint) -> Result<SpacePoint> {
        match (self, p) {
            (HMap::Affine { slope, intercept }, SpacePoint::Real(x)) => {
                Ok(SpacePoint::Real(slope * x + intercept))
            }
            (HMap::SignedPower { exponent }, SpacePoint::Real(x)) => {
                Ok(SpacePoint::Real(x.signum() * x.abs().powf(*exponent)))
            }
            (HMap::LabelTable { pairs }, SpacePoint::Label(l)) => pairs
                .get(l)
                .map(|v| SpacePoint::label(v.clone()))
                .ok_or_else(|| Error::Domain(format!("label {l} not in conjugacy table"))),
            _ => Err(Error::Domain(format!("homeomorphism cannot act on {p}"))),
        }
    }

    /// Points where the map may fail to be locally Lipschitz.
    fn singular_points(&self) -> Vec<f64> {
        match self {
            HMap::SignedPower { exponent } if *exponent < 1.0 => vec![0.0],
            _ => Vec::new(),
        }
    }
}

/// Which intertwining identity the conjugacy asserts, with `f` acting on
/// the source side and `g` on the target side of the declared pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntertwiningDirection {
    /// `h(f(x)) = g(h(x))`: `h` carries f-trajectories to g-trajectories.
    HfEqualsGh,
    /// `h(g(x)) = f(h(x))`: `h` carries g-trajectories to f-trajectories.
    HgEqualsFh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugacySpec {
    pub h: HMap,
    pub h_inv: HMap,
    pub direction: IntertwiningDirection,
    /// Sample region on which the identity and the constants are checked.
    pub region: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiLipschitzEstimate {
    pub c_lower: f64,
    pub c_upper: f64,
    pub divergent: bool,
    /// Max distance ratio per probed scale decade, coarse to fine.
    pub scale_profile: Vec<(f64, f64)>,
    pub pairs_used: usize,
}

/// Distance-ratio range of `h` over sample pairs; needs at least 100
/// distinct pairs. Coincident pairs are skipped. Divergence is flagged
/// when the per-scale max ratio keeps growing as pairs approach a
/// singular point.
pub fn estimate_bilipschitz(
    h: &HMap,
    space: &Space,
    pairs: &[(SpacePoint, SpacePoint)],
) -> Result<BiLipschitzEstimate> {
    let mut ratios: Vec<(f64, f64)> = Vec::new(); // (pair distance, ratio)
    for (a, b) in pairs {
        let d = space.distance(a, b)?;
        if d <= 0.0 {
            continue;
        }
        let dh = space.distance(&h.apply(a)?, &h.apply(b)?)?;
        ratios.push((d, dh / d));
    }
    if ratios.len() < 100 {
        return Err(Error::Domain(format!(
            "need at least 100 distinct sample pairs, got {}",
            ratios.len()
        )));
    }
    let c_lower = ratios.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let c_upper = ratios.iter().map(|(_, r)| *r).fold(0.0f64, f64::max);

    // bucket by distance decade and look for growth toward small scales
    let mut by_decade: BTreeMap<i32, f64> = BTreeMap::new();
    for (d, r) in &ratios {
        let decade = d.log10().floor() as i32;
        let slot = by_decade.entry(decade).or_insert(0.0);
        *slot = slot.max(*r);
    }
    let profile: Vec<(f64, f64)> = by_decade
        .iter()
        .rev()
        .map(|(dec, r)| (10f64.powi(*dec), *r))
        .collect();
    let divergent = profile.len() >= 4
        && profile.last().expect("non-empty").1 > 10.0 * profile[0].1.max(f64::MIN_POSITIVE);

    Ok(BiLipschitzEstimate {
        c_lower,
        c_upper,
        divergent,
        scale_profile: profile,
        pairs_used: ratios.len(),
    })
}

/// Standard probe pairs over a region: a uniform grid of adjacent pairs
/// plus dyadically shrinking straddles around each singular point inside
/// the region.
pub fn region_probe_pairs(h: &HMap, region: (f64, f64)) -> Vec<(SpacePoint, SpacePoint)> {
    let (lo, hi) = region;
    let mut pairs = Vec::new();
    let n = 200usize;
    let step = (hi - lo) / n as f64;
    for i in 0..n {
        let a = lo + step * i as f64;
        pairs.push((SpacePoint::real(a), SpacePoint::real(a + step)));
    }
    for s in h.singular_points() {
        if s > lo && s < hi {
            for k in 1..=12 {
                let eps = 10f64.powi(-k);
                pairs.push((SpacePoint::real(s - eps), SpacePoint::real(s + eps)));
            }
        }
    }
    pairs
}

impl ConjugacySpec {
    /// Source/target split of a declared `(f, g)` pair: the source is the
    /// side `h` maps from.
    pub fn source_target<'a>(
        &self,
        f: &'a GeneratorSet,
        g: &'a GeneratorSet,
    ) -> (&'a GeneratorSet, &'a GeneratorSet) {
        match self.direction {
            IntertwiningDirection::HfEqualsGh => (f, g),
            IntertwiningDirection::HgEqualsFh => (g, f),
        }
    }

    /// Checks `h . h_inv = id` and the asserted intertwining identity on
    /// a thousand-point grid over the region, generators paired by
    /// position.
    pub fn validate(&self, f: &GeneratorSet, g: &GeneratorSet) -> Result<()> {
        let (source, target) = self.source_target(f, g);
        if source.len() != target.len() {
            return Err(Error::Validation(
                "conjugated systems need equally many generators".into(),
            ));
        }
        let space = source.space();
        let (lo, hi) = self.region;
        let n = 1000usize;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let p = SpacePoint::real(x);
            let hx = self.h.apply(&p)?;
            let back = self.h_inv.apply(&hx)?;
            if space.distance(&p, &back)? > 1e-6 {
                return Err(Error::Validation(format!(
                    "h_inv . h differs from the identity at x={x}"
                )));
            }
            for ((_, fs), (_, gs)) in source.iter().zip(target.iter()) {
                let lhs = self.h.apply(&fs.apply(&p)?)?;
                let rhs = gs.apply(&hx)?;
                if space.distance(&lhs, &rhs)? > EXACT_TOL {
                    return Err(Error::Validation(format!(
                        "intertwining identity fails at x={x}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferOutcome {
    pub pseudo_image: PseudoTrajectory,
    pub trajectory_image: Trajectory,
    pub estimate: BiLipschitzEstimate,
    pub pre_uniform: ShadowVerdict,
    pub post_uniform: ShadowVerdict,
    pub pre_average: ShadowVerdict,
    pub post_average: ShadowVerdict,
    /// Post statistics bounded by `c_upper` times the pre statistics.
    pub factor_ok: bool,
}

/// Pushes a shadowing pair of the source system through the conjugacy
/// into the target system; refuses when the bi-Lipschitz estimate
/// diverges on the region. The image word maps source generators to the
/// target generators paired by position.
pub fn conjugate_transfer(
    spec: &ConjugacySpec,
    f: &GeneratorSet,
    g: &GeneratorSet,
    y: &PseudoTrajectory,
    x: &Trajectory,
    delta: f64,
    k_min: Option<usize>,
) -> Result<TransferOutcome> {
    spec.validate(f, g)?;
    let (source, target) = spec.source_target(f, g);
    let estimate = estimate_bilipschitz(
        &spec.h,
        source.space(),
        &region_probe_pairs(&spec.h, spec.region),
    )?;
    if estimate.divergent || !estimate.c_upper.is_finite() {
        return Err(Error::TransferRefused {
            reason: format!(
                "no finite bi-Lipschitz constant on [{}, {}]: max ratio grows to {:.3e} at scale {:.0e}",
                spec.region.0,
                spec.region.1,
                estimate.scale_profile.last().map(|p| p.1).unwrap_or(f64::NAN),
                estimate.scale_profile.last().map(|p| p.0).unwrap_or(f64::NAN),
            ),
            estimate: Box::new(estimate),
        });
    }

    // id mapping by generator position
    let source_ids = source.ids();
    let target_ids = target.ids();
    let map_id = |id: &str| -> Result<String> {
        source_ids
            .iter()
            .position(|s| s == id)
            .map(|i| target_ids[i].clone())
            .ok_or_else(|| Error::Domain(format!("word uses unknown generator {id}")))
    };

    let push = |pts: &[SpacePoint]| -> Result<Vec<SpacePoint>> {
        pts.iter().map(|p| spec.h.apply(p)).collect()
    };
    let y_img = PseudoTrajectory::new(
        y.window,
        push(y.points())?,
        y.reference_word
            .as_ref()
            .map(|w| w.iter().map(|id| map_id(id)).collect::<Result<Vec<_>>>())
            .transpose()?,
    )?;
    let word_img: Vec<String> = x
        .word()
        .iter()
        .map(|id| map_id(id))
        .collect::<Result<_>>()?;
    let x_img = Trajectory::new(x.window, push(x.points())?, word_img)?;
    x_img.validate(target)?;

    let params = VerdictParams {
        k_min,
        envelope: None,
    };
    let space = source.space();
    let pre_uniform = check_shadowing(space, x, y, VerdictKind::Uniform, delta, &params)?;
    let pre_average = check_shadowing(space, x, y, VerdictKind::Average, delta, &params)?;
    let post_delta = delta * estimate.c_upper;
    let post_uniform = check_shadowing(
        target.space(),
        &x_img,
        &y_img,
        VerdictKind::Uniform,
        post_delta,
        &params,
    )?;
    let post_average = check_shadowing(
        target.space(),
        &x_img,
        &y_img,
        VerdictKind::Average,
        post_delta,
        &params,
    )?;
    let slack = 1.0 + 1e-9;
    let factor_ok = post_uniform.statistic <= estimate.c_upper * pre_uniform.statistic * slack
        && post_average.statistic <= estimate.c_upper * pre_average.statistic * slack;

    Ok(TransferOutcome {
        pseudo_image: y_img,
        trajectory_image: x_img,
        estimate,
        pre_uniform,
        post_uniform,
        pre_average,
        post_average,
        factor_ok,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertOutcome {
    pub inverse_system: GeneratorSet,
    pub reversed_pseudo: PseudoTrajectory,
    pub reversed_trajectory: Trajectory,
    pub original_profile: GapProfile,
    pub reversed_profile: GapProfile,
    pub c_lower: f64,
    pub c_upper: f64,
    /// Reversed amplitudes bounded by the mirrored originals over
    /// `c_lower`.
    pub gap_bound_ok: bool,
}

/// Time reversal through a bijection: `y''_k := y_(-k)` becomes a
/// pseudo-trajectory of the inverse map, with amplitudes contracted by
/// the reciprocal of the lower Lipschitz bound; the shadowing trajectory
/// reverses alongside it.
pub fn invert_transfer(
    f: &EndomorphismSpec,
    space: &Space,
    y: &PseudoTrajectory,
    x: &Trajectory,
) -> Result<InvertOutcome> {
    if !f.invertible() {
        return Err(Error::Domain("inversion transfer needs a bijection".into()));
    }
    let inverse = f.inverse()?;
    let forward = GeneratorSet::new(space.clone(), [("f", f.clone())])?;
    let inverse_system = GeneratorSet::new(space.clone(), [("f-inv", inverse)])?;

    // bi-Lipschitz range of f over the window hull
    let (c_lower, c_upper) = lipschitz_range(f, space, y, x)?;

    let rev = |w: Window| Window::new(-w.t_max, -w.t_min).expect("reversed window");
    let rev_points = |pts: &[SpacePoint]| -> Vec<SpacePoint> {
        let mut v = pts.to_vec();
        v.reverse();
        v
    };
    let reversed_pseudo = PseudoTrajectory::new(rev(y.window), rev_points(y.points()), None)?;
    let reversed_trajectory = Trajectory::new(
        rev(x.window),
        rev_points(x.points()),
        vec!["f-inv".to_string(); x.window.steps()],
    )?;
    reversed_trajectory.validate(&inverse_system)?;

    let original_profile = gap_profile(&forward, y)?;
    let reversed_profile = gap_profile(&inverse_system, &reversed_pseudo)?;

    // reversed gap at moment m is bounded by original gap at -m-1 over C
    let gap_bound_ok = reversed_profile.entries.iter().all(|e| {
        let orig = original_profile.amplitude_at(-e.time - 1).unwrap_or(0.0);
        e.amplitude <= orig / c_lower + EXACT_TOL
    });

    Ok(InvertOutcome {
        inverse_system,
        reversed_pseudo,
        reversed_trajectory,
        original_profile,
        reversed_profile,
        c_lower,
        c_upper,
        gap_bound_ok,
    })
}

fn lipschitz_range(
    f: &EndomorphismSpec,
    space: &Space,
    y: &PseudoTrajectory,
    x: &Trajectory,
) -> Result<(f64, f64)> {
    match space {
        Space::FiniteDiscrete { .. } => Ok((1.0, 1.0)), // bijections are isometries of the 0/1 metric
        Space::RealLine => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in y.points().iter().chain(x.points()) {
                let v = p.as_real().expect("real-line point");
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Domain("window hull is unbounded".into()));
            }
            let pad = (hi - lo).max(1.0) * 0.05;
            let (lo, hi) = (lo - pad, hi + pad);
            let n = 400usize;
            let step = (hi - lo) / n as f64;
            let mut c_lower = f64::INFINITY;
            let mut c_upper = 0.0f64;
            for i in 0..n {
                let a = lo + step * i as f64;
                let b = a + step;
                let fa = f.apply(&SpacePoint::real(a))?.as_real().expect("real");
                let fb = f.apply(&SpacePoint::real(b))?.as_real().expect("real");
                let r = (fb - fa).abs() / step;
                if r > 0.0 {
                    c_lower = c_lower.min(r);
                }
                c_upper = c_upper.max(r);
            }
            if !(c_lower > 0.0 && c_lower.is_finite()) {
                return Err(Error::Domain(
                    "no positive lower Lipschitz bound on the hull".into(),
                ));
            }
            Ok((c_lower, c_upper))
        }
    }
}
