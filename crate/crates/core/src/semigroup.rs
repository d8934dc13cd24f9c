//! Semigroup actions on a metric space: generator sets, trajectories,
//! pseudo-trajectories, gap extraction, perturbation-type classification,
//! and generator re-encoding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{dedupe_points, EndomorphismSpec};
use crate::space::{set_distance, Space, SpacePoint, EXACT_TOL};
use crate::stats::{cesaro_max, CesaroSweep};

/// Closed integer time interval `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub t_min: i64,
    pub t_max: i64,
}

impl Window {
    pub fn new(t_min: i64, t_max: i64) -> Result<Window> {
        if t_max < t_min {
            return Err(Error::WindowMismatch(format!(
                "t_max {t_max} < t_min {t_min}"
            )));
        }
        Ok(Window { t_min, t_max })
    }

    pub fn len(&self) -> usize {
        (self.t_max - self.t_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps, one less than the number of points.
    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn index_of(&self, t: i64) -> Option<usize> {
        self.contains(t).then(|| (t - self.t_min) as usize)
    }

    pub fn times(&self) -> impl Iterator<Item = i64> {
        self.t_min..=self.t_max
    }
}

/// Ordered, finite set of named generators acting on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    space: Space,
    generators: Vec<(String, EndomorphismSpec)>,
}

impl GeneratorSet {
    pub fn new<S: Into<String>>(
        space: Space,
        generators: impl IntoIterator<Item = (S, EndomorphismSpec)>,
    ) -> Result<GeneratorSet> {
        let generators: Vec<(String, EndomorphismSpec)> = generators
            .into_iter()
            .map(|(id, g)| (id.into(), g))
            .collect();
        if generators.is_empty() {
            return Err(Error::Domain("generator set is empty".into()));
        }
        let mut ids: Vec<&String> = generators.iter().map(|(id, _)| id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != generators.len() {
            return Err(Error::Domain("duplicate generator ids".into()));
        }
        for (id, g) in &generators {
            if let EndomorphismSpec::FiniteTable { images } = g {
                for (k, v) in images {
                    for l in [k, v] {
                        if !space.contains(&SpacePoint::label(l.clone())) {
                            return Err(Error::Domain(format!(
                                "generator {id}: label {l} outside the space"
                            )));
                        }
                    }
                }
            }
        }
        Ok(GeneratorSet { space, generators })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EndomorphismSpec)> {
        self.generators.iter().map(|(id, g)| (id.as_str(), g))
    }

    pub fn ids(&self) -> Vec<String> {
        self.generators.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&EndomorphismSpec> {
        self.generators
            .iter()
            .find(|(gid, _)| gid == id)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::Domain(format!("unknown generator id {id}")))
    }

    /// All generator images of `x` with their generator ids, duplicates
    /// removed keeping the first (lowest generator index) occurrence.
    pub fn image_entries(&self, x: &SpacePoint) -> Result<Vec<(String, SpacePoint)>> {
        self.space.check(x)?;
        let mut out: Vec<(String, SpacePoint)> = Vec::with_capacity(self.generators.len());
        for (id, g) in &self.generators {
            let y = g.apply(x)?;
            let dup = out.iter().any(|(_, q)| self.space.points_close(q, &y));
            if !dup {
                out.push((id.clone(), y));
            }
        }
        Ok(out)
    }

    /// The semigroup image `union of g_i(x)` as a deduplicated point set
    /// ordered by generator index.
    pub fn image(&self, x: &SpacePoint) -> Result<Vec<SpacePoint>> {
        let mut pts: Vec<SpacePoint> =
            self.image_entries(x)?.into_iter().map(|(_, p)| p).collect();
        dedupe_points(&mut pts);
        Ok(pts)
    }

    /// Step gap and achieving generator: distance from the image of `x`
    /// to the singleton `{next}`.
    pub fn step_gap(&self, x: &SpacePoint, next: &SpacePoint) -> Result<(f64, String)> {
        let entries = self.image_entries(x)?;
        let pts: Vec<SpacePoint> = entries.iter().map(|(_, p)| p.clone()).collect();
        let d = set_distance(&self.space, &pts, std::slice::from_ref(next))?;
        Ok((d.value, entries[d.index_a].0.clone()))
    }
}

/// A finite window of a true trajectory: points plus the generator choice
/// made at every step. The defining identity
/// `points[t+1] = word[t](points[t])` holds within `EXACT_TOL`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub window: Window,
    points: Vec<SpacePoint>,
    word: Vec<String>,
}

impl Trajectory {
    pub fn new(window: Window, points: Vec<SpacePoint>, word: Vec<String>) -> Result<Trajectory> {
        if points.len() != window.len() {
            return Err(Error::Validation(format!(
                "expected {} points, got {}",
                window.len(),
                points.len()
            )));
        }
        if word.len() != window.steps() {
            return Err(Error::Validation(format!(
                "expected {} word entries, got {}",
                window.steps(),
                word.len()
            )));
        }
        Ok(Trajectory {
            window,
            points,
            word,
        })
    }

    pub fn points(&self) -> &[SpacePoint] {
        &self.points
    }

    pub fn word(&self) -> &[String] {
        &self.word
    }

    pub fn point(&self, t: i64) -> &SpacePoint {
        &self.points[self.window.index_of(t).expect("time inside window")]
    }

    pub fn first(&self) -> &SpacePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &SpacePoint {
        self.points.last().expect("non-empty")
    }

    /// Generator id used on the step `t -> t+1`.
    pub fn word_at(&self, t: i64) -> &str {
        &self.word[self.window.index_of(t).expect("step inside window")]
    }

    /// The universal validator: every step identity within `EXACT_TOL`,
    /// every point inside the space.
    pub fn validate(&self, gens: &GeneratorSet) -> Result<()> {
        let space = gens.space();
        for p in &self.points {
            space.check(p)?;
        }
        for (i, id) in self.word.iter().enumerate() {
            let t = self.window.t_min + i as i64;
            let image = gens.get(id)?.apply(&self.points[i])?;
            let d = space.distance(&image, &self.points[i + 1])?;
            if d > EXACT_TOL {
                return Err(Error::Validation(format!(
                    "step identity broken at t={t}: |{id}(x_t) - x_(t+1)| = {d:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn as_pseudo(&self) -> PseudoTrajectory {
        PseudoTrajectory {
            window: self.window,
            points: self.points.clone(),
            reference_word: Some(self.word.clone()),
        }
    }

    /// Sub-trajectory over `[a, b]`.
    pub fn slice(&self, a: i64, b: i64) -> Result<Trajectory> {
        let w = Window::new(a, b)?;
        let ia = self
            .window
            .index_of(a)
            .ok_or_else(|| Error::WindowMismatch(format!("{a} outside window")))?;
        let ib = self
            .window
            .index_of(b)
            .ok_or_else(|| Error::WindowMismatch(format!("{b} outside window")))?;
        Trajectory::new(
            w,
            self.points[ia..=ib].to_vec(),
            self.word[ia..ib].to_vec(),
        )
    }
}

/// A point sequence whose steps may deviate from the semigroup action.
/// `reference_word` records the intended generator per step when one is
/// declared (required in the fixed-branch setting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoTrajectory {
    pub window: Window,
    points: Vec<SpacePoint>,
    pub reference_word: Option<Vec<String>>,
}

impl PseudoTrajectory {
    pub fn new(
        window: Window,
        points: Vec<SpacePoint>,
        reference_word: Option<Vec<String>>,
    ) -> Result<PseudoTrajectory> {
        if window.len() < 2 {
            return Err(Error::Validation("window shorter than two points".into()));
        }
        if points.len() != window.len() {
            return Err(Error::Validation(format!(
                "expected {} points, got {}",
                window.len(),
                points.len()
            )));
        }
        if let Some(w) = &reference_word {
            if w.len() != window.steps() {
                return Err(Error::Validation(format!(
                    "expected {} reference word entries, got {}",
                    window.steps(),
                    w.len()
                )));
            }
        }
        Ok(PseudoTrajectory {
            window,
            points,
            reference_word,
        })
    }

    pub fn points(&self) -> &[SpacePoint] {
        &self.points
    }

    pub fn point(&self, t: i64) -> &SpacePoint {
        &self.points[self.window.index_of(t).expect("time inside window")]
    }
}

/// One perturbation moment: the step `time -> time+1` deviates from the
/// semigroup action by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub time: i64,
    pub amplitude: f64,
}

/// All perturbation moments of a pseudo-trajectory, sorted by time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GapProfile {
    pub entries: Vec<GapEntry>,
    /// Largest amplitude (zero for an empty profile); the standing
    /// assumption is that gaps are uniformly bounded.
    pub gap_max: f64,
}

impl GapProfile {
    pub fn from_entries(entries: Vec<GapEntry>) -> GapProfile {
        let gap_max = entries.iter().map(|e| e.amplitude).fold(0.0, f64::max);
        GapProfile { entries, gap_max }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn moments(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.time).collect()
    }

    pub fn amplitude_at(&self, t: i64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.time == t)
            .map(|e| e.amplitude)
    }

    /// Positive amplitudes in ascending order.
    pub fn sorted_amplitudes(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.entries.iter().map(|e| e.amplitude).collect();
        a.sort_by(f64::total_cmp);
        a
    }
}

/// Per-step gaps of `y` against the semigroup action; amplitudes at or
/// below `EXACT_TOL` are treated as zero so float noise does not create
/// spurious perturbation moments.
pub fn gap_profile(gens: &GeneratorSet, y: &PseudoTrajectory) -> Result<GapProfile> {
    let mut entries = Vec::new();
    for t in y.window.t_min..y.window.t_max {
        let (gap, _) = gens.step_gap(y.point(t), y.point(t + 1))?;
        if gap > EXACT_TOL {
            entries.push(GapEntry {
                time: t,
                amplitude: gap,
            });
        }
    }
    Ok(GapProfile::from_entries(entries))
}

/// Raw per-step gap sequence (zeros kept), for averaging.
pub fn step_gaps(gens: &GeneratorSet, y: &PseudoTrajectory) -> Result<Vec<f64>> {
    let mut gaps = Vec::with_capacity(y.window.steps());
    for t in y.window.t_min..y.window.t_max {
        let (gap, _) = gens.step_gap(y.point(t), y.point(t + 1))?;
        gaps.push(if gap > EXACT_TOL { gap } else { 0.0 });
    }
    Ok(gaps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoClass {
    pub is_u: bool,
    pub is_a: bool,
    pub is_s: bool,
}

/// Perturbation-type flags of `y` at accuracy `eps`:
/// uniform (every gap at most `eps`), small-on-average (max windowed mean
/// of the gaps at most `eps`), single (exactly one positive gap).
pub fn classify_pseudo(
    gens: &GeneratorSet,
    y: &PseudoTrajectory,
    eps: f64,
    k_min: Option<usize>,
) -> Result<PseudoClass> {
    if eps <= 0.0 {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let gaps = step_gaps(gens, y)?;
    let is_u = gaps.iter().all(|g| *g <= eps);
    let sweep = CesaroSweep::for_window(y.window.t_min, gaps.len(), k_min);
    let is_a = cesaro_max(y.window.t_min, &gaps, sweep) <= eps;
    let is_s = gaps.iter().filter(|g| **g > 0.0).count() == 1;
    Ok(PseudoClass { is_u, is_a, is_s })
}

/// Re-annotates `y` (a pseudo-trajectory of the `new` generators) over the
/// `old` generators: each step is expanded through the dictionary word of
/// its achieving new generator, inserting the intermediate points as
/// perturbation-free steps. The positive gap amplitudes are carried
/// across unchanged.
pub fn reencode_generators(
    y: &PseudoTrajectory,
    old: &GeneratorSet,
    new: &GeneratorSet,
    dictionary: &BTreeMap<String, Vec<String>>,
) -> Result<PseudoTrajectory> {
    let space = old.space();
    if new.space() != space {
        return Err(Error::Domain("generator sets act on different spaces".into()));
    }
    // every new generator must expand exactly, checked on a sample grid
    for (id, g) in new.iter() {
        let word = dictionary
            .get(id)
            .ok_or_else(|| Error::Validation(format!("dictionary misses generator {id}")))?;
        if word.is_empty() {
            return Err(Error::Validation(format!("empty dictionary word for {id}")));
        }
        for sample in sample_grid(space, y) {
            let direct = g.apply(&sample)?;
            let mut p = sample.clone();
            for step in word {
                p = old.get(step)?.apply(&p)?;
            }
            if space.distance(&direct, &p)? > EXACT_TOL {
                return Err(Error::Validation(format!(
                    "dictionary word for {id} disagrees with the generator at {sample}"
                )));
            }
        }
    }

    let mut points: Vec<SpacePoint> = vec![y.point(y.window.t_min).clone()];
    let mut word: Vec<String> = Vec::new();
    for t in y.window.t_min..y.window.t_max {
        let entries = new.image_entries(y.point(t))?;
        let pts: Vec<SpacePoint> = entries.iter().map(|(_, p)| p.clone()).collect();
        let d = set_distance(space, &pts, std::slice::from_ref(y.point(t + 1)))?;
        let expansion = &dictionary[&entries[d.index_a].0];
        // intermediate points of the expansion; the original gap stays on
        // the last inserted step
        let mut p = y.point(t).clone();
        for step in &expansion[..expansion.len() - 1] {
            p = old.get(step)?.apply(&p)?;
            points.push(p.clone());
        }
        points.push(y.point(t + 1).clone());
        word.extend(expansion.iter().cloned());
    }
    let window = Window::new(y.window.t_min, y.window.t_min + word.len() as i64)?;
    PseudoTrajectory::new(window, points, Some(word))
}

fn sample_grid(space: &Space, y: &PseudoTrajectory) -> Vec<SpacePoint> {
    match space {
        Space::RealLine => {
            let mut pts: Vec<SpacePoint> = (0..=100)
                .map(|i| SpacePoint::real(-10.0 + 0.2 * i as f64))
                .collect();
            pts.extend(y.points().iter().cloned());
            pts
        }
        Space::FiniteDiscrete { labels } => {
            labels.iter().map(|l| SpacePoint::label(l.clone())).collect()
        }
    }
}

/// Word derived from the achieving generator of every step; only valid
/// when all step gaps vanish (within `EXACT_TOL`).
pub fn derive_word(gens: &GeneratorSet, y: &PseudoTrajectory) -> Result<Trajectory> {
    let mut word = Vec::with_capacity(y.window.steps());
    for t in y.window.t_min..y.window.t_max {
        let (gap, id) = gens.step_gap(y.point(t), y.point(t + 1))?;
        if gap > EXACT_TOL {
            return Err(Error::Validation(format!(
                "positive gap {gap:e} at t={t}; not a true trajectory"
            )));
        }
        word.push(id);
    }
    Trajectory::new(y.window, y.points().to_vec(), word)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling_halving() -> GeneratorSet {
        GeneratorSet::new(
            Space::RealLine,
            [
                ("g1", EndomorphismSpec::affine(2.0, 0.0)),
                ("g2", EndomorphismSpec::affine(0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    fn cycle_pair() -> GeneratorSet {
        let g = EndomorphismSpec::table([("1", "3"), ("2", "1"), ("3", "2")]);
        let g_inv = g.inverse().unwrap();
        GeneratorSet::new(Space::finite(["1", "2", "3"]), [("g", g), ("g-inv", g_inv)]).unwrap()
    }

    #[test]
    fn semigroup_image_evaluates_all_generators() {
        let gens = doubling_halving();
        let img = gens.image(&SpacePoint::real(2.0)).unwrap();
        assert_eq!(img, vec![SpacePoint::real(4.0), SpacePoint::real(1.0)]);
    }

    #[test]
    fn single_generator_image() {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("f", EndomorphismSpec::affine(1.0, 1.0))],
        )
        .unwrap();
        assert_eq!(
            gens.image(&SpacePoint::real(0.0)).unwrap(),
            vec![SpacePoint::real(1.0)]
        );
    }

    #[test]
    fn cycle_pair_image_ordered_by_generator_index() {
        let gens = cycle_pair();
        let img = gens.image(&SpacePoint::label("1")).unwrap();
        assert_eq!(img, vec![SpacePoint::label("3"), SpacePoint::label("2")]);
    }

    fn pseudo(points: &[f64], t_min: i64) -> PseudoTrajectory {
        let w = Window::new(t_min, t_min + points.len() as i64 - 1).unwrap();
        PseudoTrajectory::new(
            w,
            points.iter().copied().map(SpacePoint::real).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn true_trajectory_has_empty_profile() {
        let gens = doubling_halving();
        let y = pseudo(&[1.0, 2.0, 4.0, 2.0, 4.0], 0);
        assert!(gap_profile(&gens, &y).unwrap().is_empty());
    }

    #[test]
    fn single_offset_yields_single_moment() {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("f", EndomorphismSpec::affine(2.0, 0.0))],
        )
        .unwrap();
        let y = pseudo(&[1.0, 2.1, 4.2], 0);
        let p = gap_profile(&gens, &y).unwrap();
        assert_eq!(p.entries.len(), 1);
        assert_eq!(p.entries[0].time, 0);
        assert!((p.entries[0].amplitude - 0.1).abs() < 1e-12);
    }

    #[test]
    fn constant_drift_gap_at_every_step() {
        // y_t = 1 + 1.1 t under x+1: every step misses by 0.1
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("f", EndomorphismSpec::affine(1.0, 1.0))],
        )
        .unwrap();
        let points: Vec<f64> = (0..10).map(|t| 1.0 + 1.1 * t as f64).collect();
        let y = pseudo(&points, 0);
        let p = gap_profile(&gens, &y).unwrap();
        assert_eq!(p.entries.len(), 9);
        for e in &p.entries {
            assert!((e.amplitude - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn classify_true_trajectory() {
        let gens = doubling_halving();
        let y = pseudo(&[1.0, 2.0, 4.0, 8.0], 0);
        let c = classify_pseudo(&gens, &y, 0.05, None).unwrap();
        assert!(c.is_u && c.is_a && !c.is_s);
    }

    #[test]
    fn classify_single_large_gap() {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("f", EndomorphismSpec::affine(1.0, 0.0))],
        )
        .unwrap();
        // identity map, window [-50, 50], one 0.5 jump at t=0
        let mut points = vec![0.0f64; 101];
        for p in points.iter_mut().skip(51) {
            *p = 0.5;
        }
        let y = pseudo(&points, -50);
        let c = classify_pseudo(&gens, &y, 0.1, None).unwrap();
        assert!(!c.is_u);
        assert!(c.is_s);
        assert!(c.is_a);
    }

    #[test]
    fn classify_constant_gap() {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("f", EndomorphismSpec::affine(1.0, 0.0))],
        )
        .unwrap();
        let points: Vec<f64> = (0..101).map(|i| 0.2 * (i as f64 - 50.0)).collect();
        let y = pseudo(&points, -50);
        let c = classify_pseudo(&gens, &y, 0.1, None).unwrap();
        assert!(!c.is_u && !c.is_a && !c.is_s);
    }

    #[test]
    fn classify_monotone_in_eps() {
        let gens = doubling_halving();
        let y = pseudo(&[1.0, 2.05, 4.1, 8.0], 0);
        let tight = classify_pseudo(&gens, &y, 0.01, None).unwrap();
        let loose = classify_pseudo(&gens, &y, 0.2, None).unwrap();
        assert!(!tight.is_u && loose.is_u);
        assert!(loose.is_a || !tight.is_a);
    }

    fn quad_reencode(
        points: &[f64],
    ) -> (PseudoTrajectory, PseudoTrajectory, GeneratorSet, GeneratorSet) {
        let old = GeneratorSet::new(
            Space::RealLine,
            [("g", EndomorphismSpec::affine(2.0, 0.0))],
        )
        .unwrap();
        let new = GeneratorSet::new(
            Space::RealLine,
            [("h", EndomorphismSpec::affine(4.0, 0.0))],
        )
        .unwrap();
        let dict = BTreeMap::from([("h".to_string(), vec!["g".to_string(), "g".to_string()])]);
        let y = pseudo(points, 0);
        let z = reencode_generators(&y, &old, &new, &dict).unwrap();
        (y, z, old, new)
    }

    #[test]
    fn reencode_identity_dictionary_is_noop() {
        let gens = doubling_halving();
        let dict: BTreeMap<String, Vec<String>> = gens
            .ids()
            .into_iter()
            .map(|id| (id.clone(), vec![id]))
            .collect();
        let y = pseudo(&[1.0, 2.0, 1.0], 0);
        let z = reencode_generators(&y, &gens, &gens, &dict).unwrap();
        assert_eq!(z.points(), y.points());
        assert_eq!(z.window, y.window);
    }

    #[test]
    fn reencode_expands_true_trajectory() {
        let (_, z, old, _) = quad_reencode(&[1.0, 4.0, 16.0]);
        let expected: Vec<SpacePoint> = [1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .copied()
            .map(SpacePoint::real)
            .collect();
        assert_eq!(z.points(), expected.as_slice());
        assert!(gap_profile(&old, &z).unwrap().is_empty());
    }

    #[test]
    fn reencode_preserves_amplitudes() {
        let (y, z, old, new) = quad_reencode(&[1.0, 4.3, 17.2]);
        let before = gap_profile(&new, &y).unwrap().sorted_amplitudes();
        let after = gap_profile(&old, &z).unwrap().sorted_amplitudes();
        assert_eq!(before, after);
        assert_eq!(before.len(), 1);
    }

    #[test]
    fn derive_word_validates() {
        let gens = doubling_halving();
        let y = pseudo(&[1.0, 2.0, 1.0, 2.0], 0);
        let t = derive_word(&gens, &y).unwrap();
        assert_eq!(t.word(), &["g1", "g2", "g1"]);
        t.validate(&gens).unwrap();
    }
}
