//! Non-autonomous systems: a fixed bi-infinite word of generators applied
//! in order. A branch of a semigroup, with no generator substitution
//! allowed — which is exactly what separates its shadowing behavior from
//! the semigroup's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gluing::{GlueMode, GluingOracle, SystemBinding};
use crate::parallel::{shadow_construct, GluingCertificate, ShadowOptions};
use crate::rate::RateFunction;
use crate::semigroup::{
    GapEntry, GapProfile, GeneratorSet, PseudoTrajectory, Trajectory, Window,
};
use crate::space::{Space, SpacePoint, EXACT_TOL};
use crate::verdicts::{check_shadowing, ShadowVerdict, VerdictKind, VerdictParams};

/// A generator id per time step over a finite window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAutoSystem {
    gens: GeneratorSet,
    pub window: Window,
    word: Vec<String>,
}

impl NonAutoSystem {
    pub fn new(gens: GeneratorSet, window: Window, word: Vec<String>) -> Result<NonAutoSystem> {
        if word.len() != window.steps() {
            return Err(Error::Validation(format!(
                "branch word needs {} entries, got {}",
                window.steps(),
                word.len()
            )));
        }
        for id in &word {
            gens.get(id)?;
        }
        Ok(NonAutoSystem { gens, window, word })
    }

    /// Constant branch `id, id, id, ...`.
    pub fn constant(gens: GeneratorSet, window: Window, id: &str) -> Result<NonAutoSystem> {
        let word = vec![id.to_string(); window.steps()];
        NonAutoSystem::new(gens, window, word)
    }

    pub fn space(&self) -> &Space {
        self.gens.space()
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn word(&self) -> &[String] {
        &self.word
    }

    /// Map applied on the step `t -> t+1`.
    pub fn generator_at(&self, t: i64) -> Result<(&str, &crate::maps::EndomorphismSpec)> {
        if t < self.window.t_min || t >= self.window.t_max {
            return Err(Error::WindowMismatch(format!(
                "step {t} outside branch window {:?}",
                self.window
            )));
        }
        let id = &self.word[(t - self.window.t_min) as usize];
        Ok((id.as_str(), self.gens.get(id)?))
    }

    /// A trajectory of the branch must use the branch word verbatim.
    pub fn validate_trajectory(&self, z: &Trajectory) -> Result<()> {
        for t in z.window.t_min..z.window.t_max {
            let (id, _) = self.generator_at(t)?;
            if z.word_at(t) != id {
                return Err(Error::Validation(format!(
                    "trajectory word {} at t={t} differs from branch word {id}",
                    z.word_at(t)
                )));
            }
        }
        z.validate(&self.gens)
    }
}

/// Forward orbit of the branch over `window` from a start value at
/// `window.t_min`.
pub fn branch_orbit(sys: &NonAutoSystem, window: Window, start: SpacePoint) -> Result<Trajectory> {
    let mut points = vec![start];
    let mut word = Vec::with_capacity(window.steps());
    for t in window.t_min..window.t_max {
        let (id, f) = sys.generator_at(t)?;
        let next = f.apply(points.last().expect("non-empty"))?;
        points.push(next);
        word.push(id.to_string());
    }
    Trajectory::new(window, points, word)
}

/// Trajectory through `x0` at time `t0`: forward points are forced by the
/// branch word; backward points are chosen among preimages (minimizing
/// the distance to `guide` when one is supplied, ties to the smallest
/// value). An empty preimage finitely truncates the backward side, which
/// is not an error.
pub fn branch_trajectory(
    sys: &NonAutoSystem,
    x0: &SpacePoint,
    t0: i64,
    guide: Option<&PseudoTrajectory>,
) -> Result<Trajectory> {
    if !sys.window.contains(t0) {
        return Err(Error::WindowMismatch(format!(
            "t0={t0} outside branch window {:?}",
            sys.window
        )));
    }
    sys.space().check(x0)?;
    let mut rev_points: Vec<SpacePoint> = Vec::new();
    let mut rev_word: Vec<String> = Vec::new();
    let mut current = x0.clone();
    let mut t = t0 - 1;
    while t >= sys.window.t_min {
        let (id, f) = sys.generator_at(t)?;
        let mut cands = f.preimages(&current)?;
        if cands.is_empty() {
            break; // backward side ends here
        }
        cands.sort_by(|a, b| {
            let order_by_guide = guide.and_then(|g| {
                g.window.contains(t).then(|| {
                    let da = sys.space().distance(a, g.point(t)).unwrap_or(f64::INFINITY);
                    let db = sys.space().distance(b, g.point(t)).unwrap_or(f64::INFINITY);
                    da.total_cmp(&db)
                })
            });
            order_by_guide
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| match (a, b) {
                    (SpacePoint::Real(x), SpacePoint::Real(y)) => x.total_cmp(y),
                    (SpacePoint::Label(x), SpacePoint::Label(y)) => x.cmp(y),
                    _ => std::cmp::Ordering::Equal,
                })
        });
        let p = cands.into_iter().next().expect("non-empty");
        rev_points.push(p.clone());
        rev_word.push(id.to_string());
        current = p;
        t -= 1;
    }
    let back_start = t + 1;
    rev_points.reverse();
    rev_word.reverse();

    let mut points = rev_points;
    let mut word = rev_word;
    points.push(x0.clone());
    let mut cur = x0.clone();
    for t in t0..sys.window.t_max {
        let (id, f) = sys.generator_at(t)?;
        cur = f.apply(&cur)?;
        points.push(cur.clone());
        word.push(id.to_string());
    }
    Trajectory::new(Window::new(back_start, sys.window.t_max)?, points, word)
}

/// Per-step gaps against the branch action `dist(f_t(y_t), y_(t+1))` —
/// a singleton image, unlike the semigroup case.
pub fn branch_gap_profile(sys: &NonAutoSystem, y: &PseudoTrajectory) -> Result<GapProfile> {
    let mut entries = Vec::new();
    for t in y.window.t_min..y.window.t_max {
        let (_, f) = sys.generator_at(t)?;
        let image = f.apply(y.point(t))?;
        let gap = sys.space().distance(&image, y.point(t + 1))?;
        if gap > EXACT_TOL {
            entries.push(GapEntry {
                time: t,
                amplitude: gap,
            });
        }
    }
    Ok(GapProfile::from_entries(entries))
}

/// The parallel engine restricted to the branch: the oracle may not
/// permute or substitute generators, and the output word must equal the
/// branch word exactly.
pub fn branch_shadow_construct(
    y: &PseudoTrajectory,
    oracle: &GluingOracle,
    phi: &RateFunction,
    opts: &ShadowOptions,
) -> Result<(Trajectory, GluingCertificate)> {
    let sys = match &oracle.system {
        SystemBinding::Branch(sys) => sys,
        SystemBinding::Semigroup(_) => {
            return Err(Error::Domain(
                "branch construction needs a branch-bound oracle".into(),
            ))
        }
    };
    let (z, cert) = shadow_construct(y, oracle, phi, opts)?;
    sys.validate_trajectory(&z)?;
    Ok((z, cert))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchCompareReport {
    pub semigroup_pass: bool,
    pub semigroup_verdict: Option<ShadowVerdict>,
    pub branch_pass: bool,
    pub branch_failure: Option<String>,
    /// Number of start values exhausted when the branch side fails.
    pub branch_candidates_checked: usize,
}

/// Runs the semigroup engine and the fixed-branch engine on the same
/// pseudo-trajectory of a finite system and reports the two outcomes side
/// by side. `word_id` fixes the branch (`word_id, word_id, ...`).
pub fn branch_vs_semigroup_report(
    gens: &GeneratorSet,
    word_id: &str,
    y: &PseudoTrajectory,
    phi: &RateFunction,
    delta: f64,
    k_min: Option<usize>,
) -> Result<BranchCompareReport> {
    let semigroup_oracle = GluingOracle::new(
        GlueMode::Weak,
        crate::gluing::GlueStrategy::FiniteCyclicReroute,
        SystemBinding::Semigroup(gens.clone()),
    );
    let opts = ShadowOptions::default();
    let (semigroup_pass, semigroup_verdict) = match shadow_construct(y, &semigroup_oracle, phi, &opts)
    {
        Ok((z, _)) => {
            let v = check_shadowing(
                gens.space(),
                &z,
                y,
                VerdictKind::Average,
                delta,
                &VerdictParams {
                    k_min,
                    envelope: None,
                },
            )?;
            (v.pass, Some(v))
        }
        Err(_) => (false, None),
    };

    let sys = NonAutoSystem::constant(gens.clone(), y.window, word_id)?;
    let branch_oracle = GluingOracle::new(
        GlueMode::Weak,
        crate::gluing::GlueStrategy::FiniteCyclicReroute,
        SystemBinding::Branch(sys),
    );
    let (branch_pass, branch_failure) = match branch_shadow_construct(y, &branch_oracle, phi, &opts)
    {
        Ok(_) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    };

    Ok(BranchCompareReport {
        semigroup_pass,
        semigroup_verdict,
        branch_pass,
        branch_failure,
        branch_candidates_checked: gens.space().labels().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::EndomorphismSpec;

    fn gens2() -> GeneratorSet {
        GeneratorSet::new(
            Space::RealLine,
            [
                ("g1", EndomorphismSpec::affine(2.0, 0.0)),
                ("g2", EndomorphismSpec::affine(0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn constant_branch_orbit() {
        let w = Window::new(0, 5).unwrap();
        let sys = NonAutoSystem::constant(gens2(), w, "g1").unwrap();
        let z = branch_trajectory(&sys, &SpacePoint::real(1.0), 0, None).unwrap();
        for t in 0..=5 {
            assert_eq!(z.point(t).as_real().unwrap(), 2f64.powi(t as i32));
        }
    }

    #[test]
    fn alternating_branch_oscillates() {
        let w = Window::new(0, 6).unwrap();
        let word: Vec<String> = (0..6)
            .map(|i| if i % 2 == 0 { "g1" } else { "g2" }.to_string())
            .collect();
        let sys = NonAutoSystem::new(gens2(), w, word).unwrap();
        let z = branch_trajectory(&sys, &SpacePoint::real(1.0), 0, None).unwrap();
        let got: Vec<f64> = z.points().iter().map(|p| p.as_real().unwrap()).collect();
        assert_eq!(got, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn cyclic_branch_backward_history_is_unique() {
        let g = EndomorphismSpec::table([("1", "3"), ("2", "1"), ("3", "2")]);
        let gens = GeneratorSet::new(Space::finite(["1", "2", "3"]), [("g", g)]).unwrap();
        let w = Window::new(-3, 3).unwrap();
        let sys = NonAutoSystem::constant(gens, w, "g").unwrap();
        let z = branch_trajectory(&sys, &SpacePoint::label("1"), 0, None).unwrap();
        assert_eq!(z.window, w);
        // g: 1->3->2->1 cycle, so backward of 1 is 2, backward of 2 is 3
        let labels: Vec<&str> = z.points().iter().map(|p| p.as_label().unwrap()).collect();
        assert_eq!(labels, vec!["1", "3", "2", "1", "3", "2", "1"]);
    }

    #[test]
    fn compatible_phase_passes_both_engines() {
        // v = g(u): the join carries no gap, so the all-g branch succeeds
        // alongside the semigroup
        let g = EndomorphismSpec::table([("1", "3"), ("2", "1"), ("3", "2")]);
        let g_inv = g.inverse().unwrap();
        let gens = GeneratorSet::new(
            Space::finite(["1", "2", "3"]),
            [("g", g.clone()), ("g-inv", g_inv)],
        )
        .unwrap();
        let w = Window::new(-6, 6).unwrap();
        let mut points = Vec::new();
        let mut x = SpacePoint::label("2"); // orbit through 2 at t_min
        for t in w.times() {
            if t > w.t_min {
                x = g.apply(&x).unwrap();
            }
            points.push(x.clone());
        }
        let y = PseudoTrajectory::new(w, points, None).unwrap();
        let phi = crate::rate::RateFunction::table(3, vec![1.0; 7], 8.0, 0.5).unwrap();
        let report = branch_vs_semigroup_report(&gens, "g", &y, &phi, 0.24, None).unwrap();
        assert!(report.semigroup_pass);
        assert!(report.branch_pass);
        assert!(report.branch_failure.is_none());
    }

    #[test]
    fn branch_word_mismatch_fails_validation() {
        let w = Window::new(0, 2).unwrap();
        let sys = NonAutoSystem::constant(gens2(), w, "g1").unwrap();
        let z = Trajectory::new(
            w,
            vec![
                SpacePoint::real(4.0),
                SpacePoint::real(2.0),
                SpacePoint::real(4.0),
            ],
            vec!["g2".into(), "g1".into()],
        )
        .unwrap();
        assert!(sys.validate_trajectory(&z).is_err());
    }
}
