//! Shadowing verdicts and falsification. Verdicts measure how well a
//! candidate trajectory tracks a pseudo-trajectory (sup, windowed mean,
//! or tail decay). Falsifiers search the candidate space exhaustively at
//! a declared budget and report the best achievable statistic as a lower
//! bound; a claim of non-shadowing is only made when the whole enumerated
//! budget stays above the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::{derive_word, GeneratorSet, PseudoTrajectory, Trajectory};
use crate::space::{Space, SpacePoint, EXACT_TOL};
use crate::stats::{cesaro_max, CesaroSweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Uniform,
    Average,
    Limit,
}

/// Vanishing envelope for the limit verdict: `coeff * rate^|t - center|`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimitEnvelope {
    pub coeff: f64,
    pub rate: f64,
    pub center: i64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct VerdictParams {
    pub k_min: Option<usize>,
    pub envelope: Option<LimitEnvelope>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowVerdict {
    pub kind: VerdictKind,
    pub delta: f64,
    pub statistic: f64,
    pub pass: bool,
    /// Resolved sweep floor for the average verdict.
    pub k_min: Option<usize>,
    /// First outer-quarter offset checked by the limit verdict.
    pub tail_split: Option<i64>,
}

/// Measures how `x` shadows `y` over their (equal) windows. Uniform: sup
/// distance vs `delta`. Average: max windowed mean vs `delta`. Limit:
/// distances on the outer quarter of the window must sit below the
/// envelope (`delta` is ignored; the statistic is the worst ratio to the
/// envelope).
pub fn check_shadowing(
    space: &Space,
    x: &Trajectory,
    y: &PseudoTrajectory,
    kind: VerdictKind,
    delta: f64,
    params: &VerdictParams,
) -> Result<ShadowVerdict> {
    if x.window != y.window {
        return Err(Error::WindowMismatch(format!(
            "{:?} vs {:?}",
            x.window, y.window
        )));
    }
    if delta <= 0.0 && kind != VerdictKind::Limit {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let w = x.window;
    let mut distances = Vec::with_capacity(w.len());
    for t in w.times() {
        distances.push(space.distance(x.point(t), y.point(t))?);
    }
    match kind {
        VerdictKind::Uniform => {
            let statistic = distances.iter().copied().fold(0.0, f64::max);
            Ok(ShadowVerdict {
                kind,
                delta,
                statistic,
                pass: statistic <= delta,
                k_min: None,
                tail_split: None,
            })
        }
        VerdictKind::Average => {
            let sweep = CesaroSweep::for_window(w.t_min, distances.len(), params.k_min);
            let statistic = cesaro_max(w.t_min, &distances, sweep);
            Ok(ShadowVerdict {
                kind,
                delta,
                statistic,
                pass: statistic <= delta,
                k_min: Some(sweep.k_min),
                tail_split: None,
            })
        }
        VerdictKind::Limit => {
            let env = params.envelope.ok_or_else(|| {
                Error::Domain("limit verdict needs a vanishing envelope".into())
            })?;
            let quarter = (w.len() / 4) as i64;
            let lo = w.t_min + quarter;
            let hi = w.t_max - quarter;
            let mut statistic = 0.0f64;
            let mut pass = true;
            for t in w.times() {
                if t >= lo && t <= hi {
                    continue; // inner part: the limit verdict only constrains the tails
                }
                let d = distances[w.index_of(t).expect("in window")];
                let bound = env.coeff * env.rate.powi((t - env.center).unsigned_abs() as i32);
                let ratio = if bound > 0.0 {
                    d / bound
                } else if d <= EXACT_TOL {
                    0.0
                } else {
                    f64::INFINITY
                };
                statistic = statistic.max(ratio);
                if d > bound + EXACT_TOL {
                    pass = false;
                }
            }
            Ok(ShadowVerdict {
                kind,
                delta,
                statistic,
                pass,
                k_min: None,
                tail_split: Some(quarter),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FalsifyBudget {
    pub grid: GridSpec,
    /// Cap on enumerated generator-word length for multi-generator
    /// systems on the real line; must cover the window.
    pub word_len: Option<usize>,
    pub refine_iters: usize,
    pub statistic: VerdictKind,
    pub k_min: Option<usize>,
}

impl Default for FalsifyBudget {
    fn default() -> Self {
        FalsifyBudget {
            grid: GridSpec {
                lo: -10.0,
                hi: 10.0,
                step: 0.1,
            },
            word_len: None,
            refine_iters: 160,
            statistic: VerdictKind::Uniform,
            k_min: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestCandidate {
    pub start: SpacePoint,
    pub word: Option<Vec<String>>,
    pub statistic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FalsificationWitness {
    pub kind: VerdictKind,
    pub delta: f64,
    /// True minimum of the statistic over the enumerated candidate set.
    pub lower_bound: f64,
    /// Non-shadowing claim at this budget: every enumerated candidate
    /// stays above `delta`. Never set when the search is inconclusive.
    pub claim: bool,
    pub conclusive: bool,
    /// Whether the candidate set provably covers all trajectories
    /// (finite spaces).
    pub exhaustive: bool,
    pub candidates_evaluated: usize,
    pub best: BestCandidate,
    pub notes: Vec<String>,
}

/// Searches for the best true trajectory tracking `y` and reports the
/// minimum statistic found. On finite spaces the search is an exact
/// dynamic program over all trajectories; on the real line candidates
/// are start values on a grid (times enumerated generator words), with
/// golden-section refinement around the best start.
pub fn falsify_shadowing(
    gens: &GeneratorSet,
    y: &PseudoTrajectory,
    delta: f64,
    budget: &FalsifyBudget,
) -> Result<FalsificationWitness> {
    match budget.statistic {
        VerdictKind::Uniform | VerdictKind::Average => {}
        VerdictKind::Limit => {
            return Err(Error::Unsupported(
                "falsification minimizes sup or mean statistics".into(),
            ))
        }
    }
    if gens.space().is_finite() {
        falsify_finite(gens, y, delta, budget)
    } else {
        falsify_real(gens, y, delta, budget)
    }
}

fn statistic_of(
    y: &PseudoTrajectory,
    distances: &[f64],
    kind: VerdictKind,
    k_min: Option<usize>,
) -> f64 {
    match kind {
        VerdictKind::Uniform => distances.iter().copied().fold(0.0, f64::max),
        VerdictKind::Average => {
            let sweep = CesaroSweep::for_window(y.window.t_min, distances.len(), k_min);
            cesaro_max(y.window.t_min, distances, sweep)
        }
        VerdictKind::Limit => unreachable!("rejected earlier"),
    }
}

// ---------------------------------------------------------------------
// real line: grid over start values, word enumeration, refinement
// ---------------------------------------------------------------------

struct RealSearch<'a> {
    y: &'a PseudoTrajectory,
    kind: VerdictKind,
    k_min: Option<usize>,
    evaluated: usize,
}

impl RealSearch<'_> {
    /// Statistic of the forward orbit of `s` under `word`.
    fn eval(&mut self, word: &[usize], specs: &[&crate::maps::EndomorphismSpec], s: f64) -> f64 {
        self.evaluated += 1;
        let mut distances = Vec::with_capacity(self.y.window.len());
        let mut x = s;
        let mut t = self.y.window.t_min;
        loop {
            let yv = self.y.point(t).as_real().expect("real-line pseudo");
            distances.push((x - yv).abs());
            if t == self.y.window.t_max {
                break;
            }
            let step = (t - self.y.window.t_min) as usize;
            let next = specs[word[step]]
                .apply(&SpacePoint::real(x))
                .ok()
                .and_then(|p| p.as_real());
            match next {
                Some(v) if v.is_finite() => x = v,
                _ => return f64::INFINITY,
            }
            t += 1;
        }
        statistic_of(self.y, &distances, self.kind, self.k_min)
    }
}

fn falsify_real(
    gens: &GeneratorSet,
    y: &PseudoTrajectory,
    delta: f64,
    budget: &FalsifyBudget,
) -> Result<FalsificationWitness> {
    let steps = y.window.steps();
    let n_gens = gens.len();
    if n_gens > 1 {
        let cap = budget.word_len.unwrap_or(0);
        if cap < steps {
            return Err(Error::Domain(format!(
                "word budget {cap} does not cover the {steps}-step window"
            )));
        }
        let words = (n_gens as f64).powi(steps as i32);
        if words > 2e7 {
            return Err(Error::Domain(format!(
                "word enumeration too large: {n_gens}^{steps}"
            )));
        }
    }
    let specs: Vec<&crate::maps::EndomorphismSpec> = gens.iter().map(|(_, g)| g).collect();
    let ids = gens.ids();
    let grid = budget.grid;
    if !(grid.step > 0.0 && grid.hi > grid.lo) {
        return Err(Error::Domain("bad grid".into()));
    }

    let mut search = RealSearch {
        y,
        kind: budget.statistic,
        k_min: budget.k_min,
        evaluated: 0,
    };

    let n_points = ((grid.hi - grid.lo) / grid.step).floor() as usize + 1;
    let phi = (5f64.sqrt() - 1.0) / 2.0;

    let mut global: Option<(f64, f64, Vec<usize>)> = None; // (stat, s, word)
    let mut word = vec![0usize; steps.max(1)];
    let word_count = if n_gens > 1 {
        (n_gens as u64).pow(steps as u32)
    } else {
        1
    };

    for w_index in 0..word_count {
        // decode the word index in generator-major order
        if n_gens > 1 {
            let mut v = w_index;
            for slot in word.iter_mut() {
                *slot = (v % n_gens as u64) as usize;
                v /= n_gens as u64;
            }
        }
        // coarse grid
        let mut best_here: Option<(f64, f64)> = None;
        for i in 0..n_points {
            let s = grid.lo + grid.step * i as f64;
            let stat = search.eval(&word, &specs, s);
            if best_here.is_none_or(|(b, _)| stat < b) {
                best_here = Some((stat, s));
            }
        }
        let (mut best_stat, best_s) = best_here.expect("grid non-empty");
        // golden-section refinement around the best grid start
        let mut a = (best_s - grid.step).max(grid.lo);
        let mut b = (best_s + grid.step).min(grid.hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = search.eval(&word, &specs, c);
        let mut fd = search.eval(&word, &specs, d);
        let mut best_refined = (best_stat, best_s);
        for _ in 0..budget.refine_iters {
            if fc < best_refined.0 {
                best_refined = (fc, c);
            }
            if fd < best_refined.0 {
                best_refined = (fd, d);
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = search.eval(&word, &specs, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = search.eval(&word, &specs, d);
            }
        }
        best_stat = best_refined.0;
        let best_s = best_refined.1;
        if global
            .as_ref()
            .is_none_or(|(g, _, _)| best_stat < *g)
        {
            global = Some((best_stat, best_s, word.clone()));
        }
    }

    let (lower_bound, best_s, best_word) = global.expect("at least one candidate");
    let mut notes = Vec::new();
    let edge = best_s <= grid.lo + grid.step || best_s >= grid.hi - grid.step;
    if edge {
        notes.push(format!(
            "best start {best_s} sits at the grid boundary; bound inconclusive"
        ));
    }
    let conclusive = !edge && lower_bound.is_finite();
    let claim = conclusive && lower_bound > delta;
    let word_ids = (n_gens > 1).then(|| {
        best_word
            .iter()
            .take(steps)
            .map(|i| ids[*i].clone())
            .collect::<Vec<String>>()
    });

    Ok(FalsificationWitness {
        kind: budget.statistic,
        delta,
        lower_bound,
        claim,
        conclusive,
        exhaustive: false,
        candidates_evaluated: search.evaluated,
        best: BestCandidate {
            start: SpacePoint::real(best_s),
            word: word_ids,
            statistic: lower_bound,
        },
        notes,
    })
}

// ---------------------------------------------------------------------
// finite spaces: exact dynamic programs over all trajectories
// ---------------------------------------------------------------------

fn falsify_finite(
    gens: &GeneratorSet,
    y: &PseudoTrajectory,
    delta: f64,
    budget: &FalsifyBudget,
) -> Result<FalsificationWitness> {
    let space = gens.space().clone();
    let labels = space.labels().to_vec();
    let n = labels.len();
    let steps = y.window.steps();

    // adjacency: a -> b admissible when some generator maps a to b
    let mut adj = vec![vec![false; n]; n];
    for (ia, a) in labels.iter().enumerate() {
        let image = gens.image(&SpacePoint::label(a.clone()))?;
        for p in image {
            let lb = p.as_label().expect("finite space");
            let ib = labels.iter().position(|l| l == lb).expect("in space");
            adj[ia][ib] = true;
        }
    }
    let dist_to_pseudo = |i: usize, t: i64| -> Result<f64> {
        space.distance(&SpacePoint::label(labels[i].clone()), y.point(t))
    };

    // cost DP: bottleneck (max) for the sup statistic, sum otherwise
    let bottleneck = budget.statistic == VerdictKind::Uniform;
    let mut cost: Vec<f64> = (0..n)
        .map(|i| dist_to_pseudo(i, y.window.t_min))
        .collect::<Result<_>>()?;
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(steps);
    for step in 0..steps {
        let t = y.window.t_min + step as i64 + 1;
        let mut next = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        for (ia, c) in cost.iter().enumerate() {
            if !c.is_finite() {
                continue;
            }
            for ib in 0..n {
                if !adj[ia][ib] {
                    continue;
                }
                let d = dist_to_pseudo(ib, t)?;
                let cand = if bottleneck { c.max(d) } else { c + d };
                if cand < next[ib] {
                    next[ib] = cand;
                    parent[ib] = ia;
                }
            }
        }
        parents.push(parent);
        cost = next;
    }
    let (end, best_cost) = cost
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, c)| (i, *c))
        .expect("non-empty label set");

    // reconstruct the optimal path and its actual statistic
    let mut rev = vec![end];
    for parent in parents.iter().rev() {
        let last = *rev.last().expect("non-empty");
        rev.push(parent[last]);
    }
    rev.reverse();
    let points: Vec<SpacePoint> = rev
        .iter()
        .map(|i| SpacePoint::label(labels[*i].clone()))
        .collect();
    let candidate = PseudoTrajectory::new(y.window, points, None)?;
    let best_traj: Trajectory = derive_word(gens, &candidate)?;
    let mut distances = Vec::with_capacity(y.window.len());
    for t in y.window.times() {
        distances.push(space.distance(best_traj.point(t), y.point(t))?);
    }
    let best_stat = statistic_of(y, &distances, budget.statistic, budget.k_min);

    // exact lower bound over all trajectories
    let lower_bound = match budget.statistic {
        VerdictKind::Uniform => best_cost,
        VerdictKind::Average => {
            // min total / largest window denominator <= any max windowed mean
            let sweep = CesaroSweep::for_window(y.window.t_min, y.window.len(), budget.k_min);
            let denom = if y.window.t_min >= 0 {
                (sweep.k_max + 1) as f64
            } else {
                (2 * sweep.k_max + 1) as f64
            };
            best_cost / denom
        }
        VerdictKind::Limit => unreachable!(),
    };

    Ok(FalsificationWitness {
        kind: budget.statistic,
        delta,
        lower_bound,
        claim: lower_bound > delta,
        conclusive: true,
        exhaustive: true,
        candidates_evaluated: n * (steps + 1),
        best: BestCandidate {
            start: best_traj.first().clone(),
            word: Some(best_traj.word().to_vec()),
            statistic: best_stat,
        },
        notes: vec![
            "dynamic program covers every trajectory of the finite system".into(),
        ],
    })
}
