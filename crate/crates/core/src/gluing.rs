//! Single-join gluing: merging two adjacent true trajectory segments
//! across one perturbation into one true trajectory whose distance to the
//! inputs is controlled by a rate function.
//!
//! Oracles are pluggable per system because the join mechanism differs:
//! expanding maps copy the right segment and walk preimages backward,
//! contracting maps copy the left segment and walk forward, finite cyclic
//! systems re-route a few generator choices near the join.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonauto::NonAutoSystem;
use crate::rate::RateFunction;
use crate::semigroup::{GapProfile, GeneratorSet, PseudoTrajectory, Trajectory, Window};
use crate::space::{Space, SpacePoint, EXACT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlueMode {
    /// Error at offset `k` bounded by `phi(k) * gap`.
    Strong,
    /// Error at offset `k` bounded by `phi(k)` alone.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlueStrategy {
    /// Copy the right segment forward, extend it backward through
    /// preimages; the backward error contracts at the expansion rate.
    ExpandingPickForward,
    /// Mirror case: copy the left segment, extend forward.
    ContractingPickBackward,
    /// Edit at most three generator choices near the join so the output
    /// coincides with the inputs outside a radius-3 neighborhood.
    FiniteCyclicReroute,
    /// Exhaustive search over label paths within `radius` of the join
    /// (finite spaces only).
    CustomTable { radius: i64 },
}

/// The system a gluing oracle is bound to: either the full semigroup
/// (any generator may be chosen at any step) or one fixed branch word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemBinding {
    Semigroup(GeneratorSet),
    Branch(NonAutoSystem),
}

impl SystemBinding {
    pub fn space(&self) -> &Space {
        match self {
            SystemBinding::Semigroup(g) => g.space(),
            SystemBinding::Branch(b) => b.space(),
        }
    }

    pub fn generators(&self) -> &GeneratorSet {
        match self {
            SystemBinding::Semigroup(g) => g,
            SystemBinding::Branch(b) => b.generators(),
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, SystemBinding::Branch(_))
    }

    /// Gap of the step `t -> t+1` together with the achieving generator.
    pub fn step_gap(&self, t: i64, x: &SpacePoint, next: &SpacePoint) -> Result<(f64, String)> {
        match self {
            SystemBinding::Semigroup(g) => g.step_gap(x, next),
            SystemBinding::Branch(b) => {
                let (id, f) = b.generator_at(t)?;
                let image = f.apply(x)?;
                Ok((self.space().distance(&image, next)?, id.to_string()))
            }
        }
    }

    /// Admissible images of `x` for the step `t -> t+1`.
    pub fn forward_entries(&self, t: i64, x: &SpacePoint) -> Result<Vec<(String, SpacePoint)>> {
        match self {
            SystemBinding::Semigroup(g) => g.image_entries(x),
            SystemBinding::Branch(b) => {
                let (id, f) = b.generator_at(t)?;
                Ok(vec![(id.to_string(), f.apply(x)?)])
            }
        }
    }

    /// Admissible preimages: pairs `(id, p)` with `id(p) = target`, for
    /// the step `t -> t+1`.
    pub fn backward_entries(
        &self,
        t: i64,
        target: &SpacePoint,
    ) -> Result<Vec<(String, SpacePoint)>> {
        let mut out = Vec::new();
        match self {
            SystemBinding::Semigroup(g) => {
                for (id, f) in g.iter() {
                    for p in f.preimages(target)? {
                        out.push((id.to_string(), p));
                    }
                }
            }
            SystemBinding::Branch(b) => {
                let (id, f) = b.generator_at(t)?;
                for p in f.preimages(target)? {
                    out.push((id.to_string(), p));
                }
            }
        }
        Ok(out)
    }

    pub fn gap_profile(&self, y: &PseudoTrajectory) -> Result<GapProfile> {
        match self {
            SystemBinding::Semigroup(g) => crate::semigroup::gap_profile(g, y),
            SystemBinding::Branch(b) => crate::nonauto::branch_gap_profile(b, y),
        }
    }

    /// Extracts `y` over `[a, b]` as a true trajectory, deriving the word
    /// from the achieving generator of each (zero-gap) step.
    pub fn derive_segment(&self, y: &PseudoTrajectory, a: i64, b: i64) -> Result<Trajectory> {
        let w = Window::new(a, b)?;
        let mut points = Vec::with_capacity(w.len());
        let mut word = Vec::with_capacity(w.steps());
        for t in a..=b {
            points.push(y.point(t).clone());
        }
        for t in a..b {
            let (gap, id) = self.step_gap(t, y.point(t), y.point(t + 1))?;
            if gap > EXACT_TOL {
                return Err(Error::Validation(format!(
                    "segment [{a},{b}] has a positive gap {gap:e} at t={t}"
                )));
            }
            word.push(id);
        }
        Trajectory::new(w, points, word)
    }

    pub fn validate_trajectory(&self, z: &Trajectory) -> Result<()> {
        match self {
            SystemBinding::Semigroup(g) => z.validate(g),
            SystemBinding::Branch(b) => b.validate_trajectory(z),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluingOracle {
    pub mode: GlueMode,
    pub strategy: GlueStrategy,
    pub system: SystemBinding,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlueOutcome {
    pub trajectory: Trajectory,
    /// Pointwise distance to the concatenated input, aligned with the
    /// union window.
    pub errors: Vec<f64>,
    pub gap: f64,
    pub worst_ratio: f64,
}

/// Outcome of checking an approximation inequality pointwise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ApproxReport {
    pub holds: bool,
    /// Max over the window of distance divided by the allowed bound
    /// (infinite when a zero bound meets a nonzero distance).
    pub worst_ratio: f64,
    pub worst_index: i64,
}

fn check_pointwise(
    space: &Space,
    x: &Trajectory,
    y: &PseudoTrajectory,
    bound_at: impl Fn(i64) -> f64,
) -> Result<ApproxReport> {
    if x.window != y.window {
        return Err(Error::WindowMismatch(format!(
            "trajectory {:?} vs pseudo {:?}",
            x.window, y.window
        )));
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_index = x.window.t_min;
    let mut holds = true;
    for t in x.window.times() {
        let d = space.distance(x.point(t), y.point(t))?;
        let bound = bound_at(t);
        let ratio = if bound > 0.0 {
            d / bound
        } else if d <= EXACT_TOL {
            0.0
        } else {
            f64::INFINITY
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_index = t;
        }
        if d > bound + EXACT_TOL + 1e-12 * bound {
            holds = false;
        }
    }
    Ok(ApproxReport {
        holds,
        worst_ratio,
        worst_index,
    })
}

/// Checks `dist(x_k, y_k) <= phi(k - t0) * gap` over the shared window.
pub fn verify_strong_approx(
    space: &Space,
    x: &Trajectory,
    y: &PseudoTrajectory,
    phi: &RateFunction,
    t0: i64,
    gap: f64,
) -> Result<ApproxReport> {
    check_pointwise(space, x, y, |t| phi.eval(t - t0) * gap)
}

/// Checks `dist(x_k, y_k) <= phi(k - t0)` over the shared window.
pub fn verify_weak_approx(
    space: &Space,
    x: &Trajectory,
    y: &PseudoTrajectory,
    phi: &RateFunction,
    t0: i64,
) -> Result<ApproxReport> {
    check_pointwise(space, x, y, |t| phi.eval(t - t0))
}

impl GluingOracle {
    pub fn new(mode: GlueMode, strategy: GlueStrategy, system: SystemBinding) -> GluingOracle {
        GluingOracle {
            mode,
            strategy,
            system,
        }
    }

    /// Glues `left` (ending at `t0 - 1`) and `right` (starting at `t0`)
    /// into one true trajectory over the union window satisfying the
    /// mode's inequality, and measures the achieved error sequence.
    /// Violation of the inequality is an oracle failure carrying the
    /// worst offending index.
    pub fn glue_pair(
        &self,
        left: &Trajectory,
        right: &Trajectory,
        phi: &RateFunction,
    ) -> Result<GlueOutcome> {
        if left.window.t_max + 1 != right.window.t_min {
            return Err(Error::WindowMismatch(format!(
                "left ends at {}, right starts at {}",
                left.window.t_max, right.window.t_min
            )));
        }
        let space = self.system.space().clone();
        let seam = left.window.t_max; // gap moment: step seam -> seam+1
        let t0 = seam + 1;
        let (gap, seam_id) = self
            .system
            .step_gap(seam, left.last(), right.first())?;

        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let input = concat_input(union, left, right)?;

        // segments that already join need no repair
        let z = if gap <= EXACT_TOL {
            let mut points = left.points().to_vec();
            points.extend_from_slice(right.points());
            let mut word = left.word().to_vec();
            word.push(seam_id);
            word.extend_from_slice(right.word());
            Trajectory::new(union, points, word)?
        } else {
            match &self.strategy {
                GlueStrategy::ExpandingPickForward => {
                    self.extend_backward_from_right(left, right)?
                }
                GlueStrategy::ContractingPickBackward => {
                    self.extend_forward_from_left(left, right)?
                }
                GlueStrategy::FiniteCyclicReroute => self.reroute(left, right, phi, gap, t0)?,
                GlueStrategy::CustomTable { radius } => {
                    self.table_search(left, right, *radius, t0)?
                }
            }
        };

        self.system.validate_trajectory(&z)?;

        let report = match self.mode {
            GlueMode::Strong => verify_strong_approx(&space, &z, &input, phi, t0, gap)?,
            GlueMode::Weak => verify_weak_approx(&space, &z, &input, phi, t0)?,
        };
        if !report.holds {
            return Err(Error::OracleFailure {
                index: report.worst_index,
                ratio: report.worst_ratio,
                detail: format!(
                    "glue at t0={t0} violates the {:?} inequality",
                    self.mode
                ),
                partial: None,
            });
        }

        let mut errors = Vec::with_capacity(union.len());
        for t in union.times() {
            errors.push(space.distance(z.point(t), input.point(t))?);
        }
        Ok(GlueOutcome {
            trajectory: z,
            errors,
            gap,
            worst_ratio: report.worst_ratio,
        })
    }

    fn extend_backward_from_right(
        &self,
        left: &Trajectory,
        right: &Trajectory,
    ) -> Result<Trajectory> {
        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let space = self.system.space();
        let mut rev_points: Vec<SpacePoint> = Vec::new();
        let mut rev_word: Vec<String> = Vec::new();
        let mut current = right.first().clone();
        let mut t = right.window.t_min - 1;
        while t >= left.window.t_min {
            let mut candidates = self.system.backward_entries(t, &current)?;
            if candidates.is_empty() {
                return Err(Error::OracleFailure {
                    index: t,
                    ratio: f64::INFINITY,
                    detail: format!("backward extension found no preimage at t={t}"),
                    partial: None,
                });
            }
            let guide = left.point(t);
            candidates.sort_by(|(ia, pa), (ib, pb)| {
                let da = space.distance(pa, guide).unwrap_or(f64::INFINITY);
                let db = space.distance(pb, guide).unwrap_or(f64::INFINITY);
                da.total_cmp(&db)
                    .then_with(|| point_order(pa, pb))
                    .then_with(|| ia.cmp(ib))
            });
            let (id, p) = candidates.into_iter().next().expect("non-empty");
            rev_points.push(p.clone());
            rev_word.push(id);
            current = p;
            t -= 1;
        }
        rev_points.reverse();
        rev_word.reverse();
        let mut points = rev_points;
        points.extend_from_slice(right.points());
        let mut word = rev_word;
        word.extend_from_slice(right.word());
        Trajectory::new(union, points, word)
    }

    fn extend_forward_from_left(
        &self,
        left: &Trajectory,
        right: &Trajectory,
    ) -> Result<Trajectory> {
        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let space = self.system.space();
        let mut points = left.points().to_vec();
        let mut word = left.word().to_vec();
        let mut current = left.last().clone();
        for t in right.window.t_min..=right.window.t_max {
            let mut candidates = self.system.forward_entries(t - 1, &current)?;
            let guide = right.point(t);
            candidates.sort_by(|(ia, pa), (ib, pb)| {
                let da = space.distance(pa, guide).unwrap_or(f64::INFINITY);
                let db = space.distance(pb, guide).unwrap_or(f64::INFINITY);
                da.total_cmp(&db)
                    .then_with(|| point_order(pa, pb))
                    .then_with(|| ia.cmp(ib))
            });
            let (id, p) = candidates.into_iter().next().ok_or(Error::OracleFailure {
                index: t,
                ratio: f64::INFINITY,
                detail: format!("no forward image at t={t}"),
                partial: None,
            })?;
            points.push(p.clone());
            word.push(id);
            current = p;
        }
        Trajectory::new(union, points, word)
    }

    /// Finite cyclic repair. Semigroup binding: connect the left end to a
    /// right-segment point three steps past the join by a word of exactly
    /// three generators (shorter right segments fall back to the longest
    /// available word). Branch binding: exhaust the finitely many branch
    /// trajectories and take one agreeing with the inputs away from the
    /// join.
    fn reroute(
        &self,
        left: &Trajectory,
        right: &Trajectory,
        phi: &RateFunction,
        gap: f64,
        t0: i64,
    ) -> Result<Trajectory> {
        let space = self.system.space();
        if !space.is_finite() {
            return Err(Error::Unsupported(
                "reroute gluing needs a finite space".into(),
            ));
        }
        match &self.system {
            SystemBinding::Semigroup(gens) => {
                self.reroute_semigroup(gens.clone(), left, right, t0)
            }
            SystemBinding::Branch(sys) => {
                self.reroute_branch(sys, left, right, phi, gap, t0)
            }
        }
    }

    fn reroute_semigroup(
        &self,
        gens: GeneratorSet,
        left: &Trajectory,
        right: &Trajectory,
        t0: i64,
    ) -> Result<Trajectory> {
        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let space = gens.space().clone();
        let u = left.last().clone();
        let right_len = right.window.len() as i64;
        let n = right_len.min(3) as usize;
        let ids = gens.ids();

        let mut best: Option<(f64, Vec<String>, Vec<SpacePoint>)> = None;
        let mut stack = vec![(Vec::<String>::new(), Vec::<SpacePoint>::new(), u.clone())];
        while let Some((word, path, at)) = stack.pop() {
            if word.len() == n {
                // worst distance of the replaced points to the input
                let mut worst = 0.0f64;
                for (i, p) in path.iter().enumerate() {
                    let t = t0 + i as i64;
                    worst = worst.max(space.distance(p, right.point(t))?);
                }
                let target_ok = space.points_close(&path[n - 1], right.point(t0 + n as i64 - 1));
                let candidate_ok = if right_len >= 3 { target_ok } else { true };
                if candidate_ok {
                    let better = best.as_ref().is_none_or(|(w, _, _)| worst < *w);
                    if better {
                        best = Some((worst, word, path));
                    }
                }
                continue;
            }
            // push in reverse so lexicographically first words are tried first
            for id in ids.iter().rev() {
                let next = gens.get(id)?.apply(&at)?;
                let mut w = word.clone();
                w.push(id.clone());
                let mut p = path.clone();
                p.push(next.clone());
                stack.push((w, p, next));
            }
        }
        let (_, word, path) = best.ok_or(Error::OracleFailure {
            index: t0,
            ratio: f64::INFINITY,
            detail: format!("no {n}-generator word connects the segments at t0={t0}"),
            partial: None,
        })?;

        let mut points = left.points().to_vec();
        let mut full_word = left.word().to_vec();
        // replaced points at t0 .. t0+n-1, re-joining the right segment
        for p in path.iter() {
            points.push(p.clone());
        }
        full_word.extend(word);
        let rejoin = t0 + n as i64 - 1;
        for t in (rejoin + 1)..=right.window.t_max {
            points.push(right.point(t).clone());
        }
        for t in rejoin..right.window.t_max {
            full_word.push(right.word_at(t).to_string());
        }
        Trajectory::new(union, points, full_word)
    }

    fn reroute_branch(
        &self,
        sys: &NonAutoSystem,
        left: &Trajectory,
        right: &Trajectory,
        phi: &RateFunction,
        gap: f64,
        t0: i64,
    ) -> Result<Trajectory> {
        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let space = sys.space().clone();
        let labels: Vec<String> = space.labels().to_vec();
        let input = concat_input(union, left, right)?;
        let checked = labels.len();
        for start in &labels {
            let z = crate::nonauto::branch_orbit(sys, union, SpacePoint::label(start.clone()))?;
            // must coincide with the inputs outside radius 3 of the join
            let mut matches = true;
            for t in union.times() {
                if (t - t0).abs() > 3 && space.distance(z.point(t), input.point(t))? > EXACT_TOL {
                    matches = false;
                    break;
                }
            }
            if !matches {
                continue;
            }
            let ok = match self.mode {
                GlueMode::Strong => {
                    verify_strong_approx(&space, &z, &input, phi, t0, gap)?.holds
                }
                GlueMode::Weak => verify_weak_approx(&space, &z, &input, phi, t0)?.holds,
            };
            if ok {
                return Ok(z);
            }
        }
        Err(Error::OracleFailure {
            index: t0,
            ratio: f64::INFINITY,
            detail: format!(
                "no branch trajectory joins the segments at t0={t0}; exhausted all {checked} start values"
            ),
            partial: None,
        })
    }

    /// Exhaustive path search over labels within `radius` of the join.
    fn table_search(
        &self,
        left: &Trajectory,
        right: &Trajectory,
        radius: i64,
        t0: i64,
    ) -> Result<Trajectory> {
        let union = Window::new(left.window.t_min, right.window.t_max)?;
        let space = self.system.space().clone();
        if !space.is_finite() {
            return Err(Error::Unsupported(
                "table search gluing needs a finite space".into(),
            ));
        }
        let labels = space.labels().to_vec();
        let input = concat_input(union, left, right)?;
        let lo = (t0 - radius).max(union.t_min);
        let hi = (t0 + radius - 1).min(union.t_max);
        let slots = (hi - lo + 1) as usize;
        if (labels.len() as f64).powi(slots as i32) > 1e6 {
            return Err(Error::Unsupported(format!(
                "table search too large: {} slots over {} labels",
                slots,
                labels.len()
            )));
        }

        let mut best: Option<(f64, Vec<SpacePoint>)> = None;
        let mut assignment = vec![0usize; slots];
        loop {
            let path: Vec<SpacePoint> = assignment
                .iter()
                .map(|i| SpacePoint::label(labels[*i].clone()))
                .collect();
            if let Some(worst) = self.admissible_patch(&input, lo, &path)? {
                if best.as_ref().is_none_or(|(w, _)| worst < *w) {
                    best = Some((worst, path));
                }
            }
            // odometer increment
            let mut i = 0;
            loop {
                if i == slots {
                    break;
                }
                assignment[i] += 1;
                if assignment[i] < labels.len() {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == slots {
                break;
            }
        }
        let (_, path) = best.ok_or(Error::OracleFailure {
            index: t0,
            ratio: f64::INFINITY,
            detail: format!("no admissible label path within radius {radius} of t0={t0}"),
            partial: None,
        })?;

        let mut points: Vec<SpacePoint> = Vec::with_capacity(union.len());
        for t in union.times() {
            if t >= lo && t <= hi {
                points.push(path[(t - lo) as usize].clone());
            } else {
                points.push(input.point(t).clone());
            }
        }
        let pseudo = PseudoTrajectory::new(union, points, None)?;
        self.system.derive_segment(&pseudo, union.t_min, union.t_max)
    }

    /// Worst in-patch distance when the patched sequence is a valid
    /// trajectory, `None` when some step is inadmissible.
    fn admissible_patch(
        &self,
        input: &PseudoTrajectory,
        lo: i64,
        path: &[SpacePoint],
    ) -> Result<Option<f64>> {
        let space = self.system.space();
        let hi = lo + path.len() as i64 - 1;
        let at = |t: i64| -> &SpacePoint {
            if t >= lo && t <= hi {
                &path[(t - lo) as usize]
            } else {
                input.point(t)
            }
        };
        let step_lo = (lo - 1).max(input.window.t_min);
        let step_hi = hi.min(input.window.t_max - 1);
        for t in step_lo..=step_hi {
            let (gap, _) = self.system.step_gap(t, at(t), at(t + 1))?;
            if gap > EXACT_TOL {
                return Ok(None);
            }
        }
        let mut worst = 0.0f64;
        for (i, p) in path.iter().enumerate() {
            worst = worst.max(space.distance(p, input.point(lo + i as i64))?);
        }
        Ok(Some(worst))
    }
}

fn point_order(a: &SpacePoint, b: &SpacePoint) -> std::cmp::Ordering {
    match (a, b) {
        (SpacePoint::Real(x), SpacePoint::Real(y)) => x.total_cmp(y),
        (SpacePoint::Label(x), SpacePoint::Label(y)) => x.cmp(y),
        (SpacePoint::Real(_), SpacePoint::Label(_)) => std::cmp::Ordering::Less,
        (SpacePoint::Label(_), SpacePoint::Real(_)) => std::cmp::Ordering::Greater,
    }
}

/// The two segments laid side by side as one pseudo-trajectory.
pub fn concat_input(
    union: Window,
    left: &Trajectory,
    right: &Trajectory,
) -> Result<PseudoTrajectory> {
    let mut points = left.points().to_vec();
    points.extend_from_slice(right.points());
    PseudoTrajectory::new(union, points, None)
}
