//! Registered example systems and the implication-evidence matrix.
//!
//! Each system carries its own desk-scale battery of pseudo-trajectories
//! per perturbation type and the thresholds it is judged at. Class
//! membership is decided by exhibiting a shadowing trajectory (oracle
//! construction or falsifier best candidate) or by a falsification claim;
//! anything else stays undecided. Matrix cells aggregate the per-system
//! evidence and ship the reference annotation for comparison — the
//! annotation is never asserted by the harness.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use shadowing::gluing::{GlueMode, GlueStrategy, GluingOracle, SystemBinding};
use shadowing::maps::EndomorphismSpec;
use shadowing::parallel::{shadow_construct, ShadowOptions};
use shadowing::rate::RateFunction;
use shadowing::semigroup::{
    gap_profile, GeneratorSet, PseudoTrajectory, Window,
};
use shadowing::space::{Space, SpacePoint};
use shadowing::verdicts::{
    check_shadowing, falsify_shadowing, FalsifyBudget, GridSpec, LimitEnvelope, VerdictKind,
    VerdictParams,
};

pub const CLASS_NAMES: [&str; 7] = ["UU", "UA", "AU", "AA", "SU", "SA", "SL"];

/// Reference annotations per implication cell, row class to column class:
/// `=` identical, `+` expected to hold, `-` refuted, `?` open, and the
/// tentative `+?`/`-?`. Shipped for comparison only.
pub const REFERENCE_ANNOTATIONS: [[&str; 7]; 7] = [
    ["=", "+", "-", "-", "+", "+", "?"],
    ["-?", "=", "?", "-?", "+", "+", "?"],
    ["+?", "+?", "=", "+", "+", "+", "?"],
    ["-", "-?", "-", "=", "-?", "+", "-?"],
    ["-?", "?", "+?", "?", "=", "+", "+?"],
    ["-", "+?", "?", "+?", "-", "=", "+?"],
    ["-", "?", "-?", "-?", "-", "?", "="],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    Uniform,
    Average,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beta {
    Uniform,
    Average,
    Limit,
}

pub fn class_split(index: usize) -> (Alpha, Beta) {
    match CLASS_NAMES[index] {
        "UU" => (Alpha::Uniform, Beta::Uniform),
        "UA" => (Alpha::Uniform, Beta::Average),
        "AU" => (Alpha::Average, Beta::Uniform),
        "AA" => (Alpha::Average, Beta::Average),
        "SU" => (Alpha::Single, Beta::Uniform),
        "SA" => (Alpha::Single, Beta::Average),
        "SL" => (Alpha::Single, Beta::Limit),
        _ => unreachable!(),
    }
}

pub struct DeskSystem {
    pub name: &'static str,
    pub gens: GeneratorSet,
    pub oracle: Option<GluingOracle>,
    pub rate: RateFunction,
    pub window: Window,
    pub delta: f64,
    pub limit_rate: f64,
    pub falsify_grid: Option<GridSpec>,
    pub word_len: Option<usize>,
    /// Batteries of pseudo-trajectories per perturbation type U/A/S.
    pub batteries: [Vec<PseudoTrajectory>; 3],
}

fn noise_pseudo(gens: &GeneratorSet, window: Window, eps: f64, seed: u64) -> PseudoTrajectory {
    let id = gens.ids()[0].clone();
    let f = gens.get(&id).expect("first generator").clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0f64;
    let mut points = vec![SpacePoint::real(x)];
    for _ in 0..window.steps() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x = f
            .apply(&SpacePoint::real(x))
            .expect("real map")
            .as_real()
            .expect("real value")
            + sign * eps;
        points.push(SpacePoint::real(x));
    }
    PseudoTrajectory::new(window, points, None).expect("well-formed")
}

fn drift_pseudo(gens: &GeneratorSet, window: Window, eps: f64, base: f64) -> PseudoTrajectory {
    let id = gens.ids()[0].clone();
    let f = gens.get(&id).expect("first generator").clone();
    let mut x = base;
    let mut points = vec![SpacePoint::real(x)];
    for _ in 0..window.steps() {
        x = f
            .apply(&SpacePoint::real(x))
            .expect("real map")
            .as_real()
            .expect("real value")
            + eps;
        points.push(SpacePoint::real(x));
    }
    PseudoTrajectory::new(window, points, None).expect("well-formed")
}

fn burst_pseudo(
    gens: &GeneratorSet,
    window: Window,
    times: &[i64],
    size: f64,
) -> PseudoTrajectory {
    let id = gens.ids()[0].clone();
    let f = gens.get(&id).expect("first generator").clone();
    let mut x = 0.0f64;
    let mut points = vec![SpacePoint::real(x)];
    for i in 0..window.steps() {
        let t = window.t_min + i as i64;
        x = f
            .apply(&SpacePoint::real(x))
            .expect("real map")
            .as_real()
            .expect("real value");
        if times.contains(&t) {
            x += size;
        }
        points.push(SpacePoint::real(x));
    }
    PseudoTrajectory::new(window, points, None).expect("well-formed")
}

/// Two one-sided orbits of a two-generator expanding/contracting pair
/// meeting at `anchor_time = -1`: backward side escapes through the
/// inverse of `backward_id`, forward side follows `forward_id`.
fn cross_join_pseudo(
    gens: &GeneratorSet,
    window: Window,
    left_anchor: f64,
    right_start: f64,
    backward_id: &str,
    forward_id: &str,
) -> PseudoTrajectory {
    let back = gens.get(backward_id).expect("backward generator").clone();
    let fwd = gens.get(forward_id).expect("forward generator").clone();
    let mut rev = vec![left_anchor];
    let mut x = left_anchor;
    for _ in window.t_min..-1 {
        let pre = back
            .preimages(&SpacePoint::real(x))
            .expect("preimages");
        x = pre
            .first()
            .expect("invertible backward map")
            .as_real()
            .expect("real value");
        rev.push(x);
    }
    rev.reverse();
    let mut points: Vec<SpacePoint> = rev.into_iter().map(SpacePoint::real).collect();
    let mut x = right_start;
    points.push(SpacePoint::real(x));
    for _ in 0..window.t_max {
        x = fwd
            .apply(&SpacePoint::real(x))
            .expect("real map")
            .as_real()
            .expect("real value");
        points.push(SpacePoint::real(x));
    }
    PseudoTrajectory::new(window, points, None).expect("well-formed")
}

/// Orbit of the first generator on a finite space with phase resets: at
/// each listed step the next point repeats the current one instead of
/// following the map, which is a unit gap for the fixed-point-free cycle.
fn label_phase_pseudo(
    gens: &GeneratorSet,
    window: Window,
    start: &str,
    jump_times: &[i64],
) -> PseudoTrajectory {
    let id = gens.ids()[0].clone();
    let f = gens.get(&id).expect("first generator").clone();
    let mut x = SpacePoint::label(start);
    let mut points = vec![x.clone()];
    for i in 0..window.steps() {
        let t = window.t_min + i as i64;
        if !jump_times.contains(&t) {
            x = f.apply(&x).expect("table map");
        }
        points.push(x.clone());
    }
    PseudoTrajectory::new(window, points, None).expect("well-formed")
}

fn cycle_map() -> EndomorphismSpec {
    EndomorphismSpec::table([("1", "3"), ("2", "1"), ("3", "2")])
}

fn cyclic_rate() -> RateFunction {
    // flat 1 within radius 3, geometric tail beyond
    RateFunction::table(3, vec![1.0; 7], 8.0, 0.5).expect("valid table")
}

pub fn registry() -> Vec<DeskSystem> {
    let mut systems = Vec::new();

    let real = Space::RealLine;
    let doubling =
        GeneratorSet::new(real.clone(), [("g", EndomorphismSpec::affine(2.0, 0.0))]).unwrap();
    let w32 = Window::new(-32, 32).unwrap();
    systems.push(DeskSystem {
        name: "doubling",
        gens: doubling.clone(),
        oracle: Some(GluingOracle::new(
            GlueMode::Strong,
            GlueStrategy::ExpandingPickForward,
            SystemBinding::Semigroup(doubling.clone()),
        )),
        rate: RateFunction::geometric(0.5),
        window: w32,
        delta: 0.1,
        limit_rate: 0.5,
        falsify_grid: Some(GridSpec {
            lo: -1.0,
            hi: 1.0,
            step: 1e-3,
        }),
        word_len: None,
        batteries: [
            vec![noise_pseudo(&doubling, w32, 1e-3, 11)],
            vec![burst_pseudo(&doubling, w32, &[-12, 12], 0.5)],
            vec![burst_pseudo(&doubling, w32, &[0], 1e-3)],
        ],
    });

    let halving =
        GeneratorSet::new(real.clone(), [("h", EndomorphismSpec::affine(0.5, 0.0))]).unwrap();
    systems.push(DeskSystem {
        name: "halving",
        gens: halving.clone(),
        oracle: Some(GluingOracle::new(
            GlueMode::Strong,
            GlueStrategy::ContractingPickBackward,
            SystemBinding::Semigroup(halving.clone()),
        )),
        rate: RateFunction::geometric(0.5),
        window: w32,
        delta: 0.1,
        limit_rate: 0.5,
        falsify_grid: Some(GridSpec {
            lo: -1.0,
            hi: 1.0,
            step: 1e-3,
        }),
        word_len: None,
        batteries: [
            vec![noise_pseudo(&halving, w32, 1e-3, 12)],
            vec![burst_pseudo(&halving, w32, &[-12, 12], 0.5)],
            vec![burst_pseudo(&halving, w32, &[0], 1e-3)],
        ],
    });

    let pair = GeneratorSet::new(
        real.clone(),
        [
            ("g1", EndomorphismSpec::affine(2.0, 0.0)),
            ("g2", EndomorphismSpec::affine(0.5, 0.0)),
        ],
    )
    .unwrap();
    let w6 = Window::new(-6, 6).unwrap();
    let small_gap_join = cross_join_pseudo(
        &pair,
        w6,
        2.0,
        1.0 + 7e-4 * std::f64::consts::SQRT_2,
        "g2",
        "g1",
    );
    systems.push(DeskSystem {
        name: "double-half",
        gens: pair.clone(),
        oracle: None,
        rate: RateFunction::geometric(0.5),
        window: w6,
        delta: 5e-3,
        limit_rate: 0.5,
        falsify_grid: Some(GridSpec {
            lo: 62.0,
            hi: 66.0,
            step: 1e-3,
        }),
        word_len: Some(12),
        batteries: [
            vec![small_gap_join.clone()],
            vec![small_gap_join.clone()],
            vec![small_gap_join],
        ],
    });

    let shift = GeneratorSet::new(
        real.clone(),
        [("f", EndomorphismSpec::psi(1.0, 1.0, 1.0, 1.0))],
    )
    .unwrap();
    let w_fwd = Window::new(0, 60).unwrap();
    systems.push(DeskSystem {
        name: "unit-shift",
        gens: shift.clone(),
        oracle: None,
        rate: RateFunction::geometric(0.5),
        window: w_fwd,
        delta: 0.01,
        limit_rate: 0.5,
        falsify_grid: Some(GridSpec {
            lo: -10.0,
            hi: 70.0,
            step: 0.5,
        }),
        word_len: None,
        batteries: [
            vec![drift_pseudo(&shift, w_fwd, 1e-3, 0.0)],
            vec![drift_pseudo(&shift, w_fwd, 1e-3, 0.0)],
            vec![burst_pseudo(&shift, w_fwd, &[30], 1e-3)],
        ],
    });

    let mixed = GeneratorSet::new(
        real.clone(),
        [("m", EndomorphismSpec::psi(0.5, 2.0, 0.0, 0.0))],
    )
    .unwrap();
    let w20 = Window::new(-20, 20).unwrap();
    let cross = cross_join_pseudo(&mixed, w20, -1e-3, 5e-4, "m", "m");
    systems.push(DeskSystem {
        name: "contract-expand",
        gens: mixed.clone(),
        oracle: None,
        rate: RateFunction::geometric(0.5),
        window: w20,
        delta: 0.01,
        limit_rate: 0.5,
        falsify_grid: Some(GridSpec {
            lo: -1100.0,
            hi: 1100.0,
            step: 1.0,
        }),
        word_len: None,
        batteries: [vec![cross.clone()], vec![cross.clone()], vec![cross]],
    });

    let labels = Space::finite(["1", "2", "3"]);
    let g = cycle_map();
    let pair3 = GeneratorSet::new(
        labels.clone(),
        [("g", g.clone()), ("g-inv", g.inverse().unwrap())],
    )
    .unwrap();
    let w16 = Window::new(-16, 16).unwrap();
    systems.push(DeskSystem {
        name: "cycle-pair",
        gens: pair3.clone(),
        oracle: Some(GluingOracle::new(
            GlueMode::Weak,
            GlueStrategy::FiniteCyclicReroute,
            SystemBinding::Semigroup(pair3.clone()),
        )),
        rate: cyclic_rate(),
        window: w16,
        delta: 0.3,
        limit_rate: 0.5,
        falsify_grid: None,
        word_len: None,
        batteries: [
            Vec::new(), // uniform eps below 1 leaves no gaps on the 0/1 metric
            vec![label_phase_pseudo(&pair3, w16, "1", &[-8, 8])],
            vec![label_phase_pseudo(&pair3, w16, "1", &[0])],
        ],
    });

    let single3 = GeneratorSet::new(labels, [("g", g)]).unwrap();
    systems.push(DeskSystem {
        name: "cycle-single",
        gens: single3.clone(),
        oracle: None,
        rate: cyclic_rate(),
        window: w16,
        delta: 0.3,
        limit_rate: 0.5,
        falsify_grid: None,
        word_len: None,
        batteries: [
            Vec::new(),
            vec![label_phase_pseudo(&single3, w16, "1", &[-8, 8])],
            vec![label_phase_pseudo(&single3, w16, "1", &[0])],
        ],
    });

    systems
}

/// Whether some true trajectory `beta`-shadows `y` at the system's
/// threshold. `Some(false)` only on a conclusive falsification claim.
fn shadowable(sys: &DeskSystem, y: &PseudoTrajectory, beta: Beta) -> Option<bool> {
    let profile = gap_profile(&sys.gens, y).ok()?;
    let params = VerdictParams {
        k_min: None,
        envelope: match beta {
            Beta::Limit => Some(LimitEnvelope {
                coeff: profile.gap_max,
                rate: sys.limit_rate,
                center: profile.entries.first().map(|e| e.time + 1).unwrap_or(0),
            }),
            _ => None,
        },
    };
    let kind = match beta {
        Beta::Uniform => VerdictKind::Uniform,
        Beta::Average => VerdictKind::Average,
        Beta::Limit => VerdictKind::Limit,
    };

    if let Some(oracle) = &sys.oracle {
        if let Ok((z, _)) = shadow_construct(y, oracle, &sys.rate, &ShadowOptions::default()) {
            if let Ok(v) = check_shadowing(sys.gens.space(), &z, y, kind, sys.delta, &params) {
                if v.pass {
                    return Some(true);
                }
            }
        }
    }

    // no constructed witness: ask the falsifier
    if beta == Beta::Limit {
        return None;
    }
    let statistic = match beta {
        Beta::Uniform => VerdictKind::Uniform,
        Beta::Average => VerdictKind::Average,
        Beta::Limit => unreachable!(),
    };
    let budget = FalsifyBudget {
        grid: sys.falsify_grid.unwrap_or(GridSpec {
            lo: -1.0,
            hi: 1.0,
            step: 0.1,
        }),
        word_len: sys.word_len,
        refine_iters: 160,
        statistic,
        k_min: None,
    };
    let witness = falsify_shadowing(&sys.gens, y, sys.delta, &budget).ok()?;
    if witness.claim {
        return Some(false);
    }
    if witness.lower_bound <= sys.delta {
        return Some(true);
    }
    None
}

/// Desk membership of the system in the class `(alpha, beta)`:
/// `Some(false)` when some battery pseudo-trajectory is conclusively
/// unshadowable, `Some(true)` when every non-vacuous battery item has an
/// exhibited shadowing trajectory, `None` otherwise (including an empty
/// or vacuous battery).
pub fn membership(sys: &DeskSystem, alpha: Alpha, beta: Beta) -> Option<bool> {
    let battery = &sys.batteries[match alpha {
        Alpha::Uniform => 0,
        Alpha::Average => 1,
        Alpha::Single => 2,
    }];
    let mut any_yes = false;
    let mut undecided = false;
    for y in battery {
        let profile = gap_profile(&sys.gens, y).ok()?;
        if profile.is_empty() {
            continue;
        }
        match shadowable(sys, y, beta) {
            Some(true) => any_yes = true,
            Some(false) => return Some(false),
            None => undecided = true,
        }
    }
    if !any_yes || undecided {
        None
    } else {
        Some(true)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixCell {
    pub source: String,
    pub target: String,
    pub evidence: String,
    pub annotation: String,
    pub counterexamples: Vec<String>,
    pub supports: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixReport {
    pub classes: Vec<String>,
    pub memberships: BTreeMap<String, Vec<(String, Option<bool>)>>,
    pub cells: Vec<Vec<MatrixCell>>,
}

/// Evidence table over all ordered class pairs. A cell is
/// `counterexample-found` when a registered system is in the source
/// class but conclusively not in the target class, `consistent` when at
/// least one system is in both (except for cells annotated `?`, which
/// are never upgraded past `no-evidence` by supporting examples alone).
pub fn implication_matrix(delta_override: Option<f64>) -> MatrixReport {
    let mut systems = registry();
    if let Some(d) = delta_override {
        for s in &mut systems {
            s.delta = d;
        }
    }

    let mut memberships: BTreeMap<String, Vec<(String, Option<bool>)>> = BTreeMap::new();
    let mut table: Vec<Vec<Option<bool>>> = Vec::new();
    for sys in &systems {
        let mut row = Vec::new();
        let mut named = Vec::new();
        for (idx, class) in CLASS_NAMES.iter().enumerate() {
            let (a, b) = class_split(idx);
            let m = membership(sys, a, b);
            row.push(m);
            named.push((class.to_string(), m));
        }
        memberships.insert(sys.name.to_string(), named);
        table.push(row);
    }

    let mut cells = Vec::with_capacity(7);
    for i in 0..7 {
        let mut row = Vec::with_capacity(7);
        for j in 0..7 {
            let annotation = REFERENCE_ANNOTATIONS[i][j].to_string();
            let mut counterexamples = Vec::new();
            let mut supports = Vec::new();
            for (sys, mrow) in systems.iter().zip(table.iter()) {
                match (mrow[i], mrow[j]) {
                    (Some(true), Some(false)) => counterexamples.push(sys.name.to_string()),
                    (Some(true), Some(true)) => supports.push(sys.name.to_string()),
                    _ => {}
                }
            }
            let evidence = if i == j {
                "consistent".to_string()
            } else if !counterexamples.is_empty() {
                "counterexample-found".to_string()
            } else if annotation == "?" {
                // open cells are never marked consistent by default
                "no-evidence".to_string()
            } else if !supports.is_empty() {
                "consistent".to_string()
            } else {
                "no-evidence".to_string()
            };
            row.push(MatrixCell {
                source: CLASS_NAMES[i].to_string(),
                target: CLASS_NAMES[j].to_string(),
                evidence,
                annotation,
                counterexamples,
                supports,
            });
        }
        cells.push(row);
    }

    MatrixReport {
        classes: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        memberships,
        cells,
    }
}

/// `evidence/annotation` per cell, classes in the fixed order.
pub fn matrix_to_csv(report: &MatrixReport) -> String {
    let mut out = String::from("class");
    for c in &report.classes {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, row) in report.cells.iter().enumerate() {
        out.push_str(&report.classes[i]);
        for cell in row {
            out.push(',');
            out.push_str(&format!("{}/{}", cell.evidence, cell.annotation));
        }
        out.push('\n');
    }
    out
}
