//! Round-based parallel gluing: segment the pseudo-trajectory at its
//! perturbation moments, glue consecutive segment pairs at even-indexed
//! surviving moments, halve the segment count per round, and keep a full
//! audit trail (gap growth, recursion predictions, partial sums, error
//! bounds) in a certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gluing::GluingOracle;
use crate::rate::RateFunction;
use crate::semigroup::{GapEntry, PseudoTrajectory, Trajectory};
use crate::space::EXACT_TOL;
use crate::stats::{cesaro_max, CesaroSweep};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowOptions {
    /// Half-widths `k` for the recorded partial sums of gaps around the
    /// central perturbation moment.
    pub partial_sum_ks: Vec<usize>,
    /// `k_min` of the windowed-mean sweep in the final statistics.
    pub cesaro_k_min: Option<usize>,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions {
            partial_sum_ks: vec![8, 32, 128],
            cesaro_k_min: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialSum {
    pub k: usize,
    pub value: f64,
}

/// State entering one round, plus what the round's gluing did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub segment_spans: Vec<(i64, i64)>,
    /// Surviving perturbation moments.
    pub boundaries: Vec<i64>,
    /// Measured gap per surviving moment.
    pub gaps: Vec<GapEntry>,
    pub gap_sup: f64,
    /// Sums of gaps over original-moment indices `[-k, k]` around the
    /// moment closest to time zero; consumed moments contribute zero.
    pub partial_sums: Vec<PartialSum>,
    /// Recursion upper bounds for this state, derived from the previous
    /// state (empty at round zero).
    pub predicted: Vec<GapEntry>,
    /// Whether every measured gap stayed at or below its prediction.
    pub recursion_ok: bool,
    /// Moments consumed by this round's gluing (empty in the final state).
    pub consumed: Vec<i64>,
    /// Largest pointwise displacement this round's gluing caused.
    pub max_point_move: f64,
    /// Largest displacement among points at offset at least `2^round`
    /// from their glue's center; controlled by the rate tail, which is
    /// what makes the per-time point sequence stabilize across rounds.
    pub far_point_move: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSummary {
    pub phi_sum: f64,
    pub exp_phi_sum: f64,
    pub initial_gap_sup: f64,
    /// `e^Phi * gamma^(0)_sup`: the uniform cap on every round's gaps.
    pub gap_sup_bound: f64,
    /// `gamma^(0)_sup * Phi * e^Phi`: the uniform error cap.
    pub uniform_error_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalStats {
    pub sup_distance: f64,
    pub max_cesaro_distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluingCertificate {
    pub branch_mode: bool,
    /// Time of the original moment serving as index zero for partial sums.
    pub moment_index_origin: Option<i64>,
    pub original_moments: Vec<i64>,
    pub rounds: Vec<RoundRecord>,
    pub bounds: BoundSummary,
    pub final_stats: FinalStats,
}

/// One recursion step: predicted bound `g_i + phi(-2^n) g_(i-1) +
/// phi(2^n) g_(i+1)` per moment, with missing neighbors contributing
/// zero. The rate must be symmetrized beforehand for the neighbor
/// attribution to be side-agnostic.
pub fn gap_recursion_step(gaps: &[GapEntry], phi: &RateFunction, round: u32) -> Vec<GapEntry> {
    let (phi_minus, phi_plus) = phi.round_values(round);
    gaps.iter()
        .enumerate()
        .map(|(i, e)| {
            let left = if i > 0 { gaps[i - 1].amplitude } else { 0.0 };
            let right = if i + 1 < gaps.len() {
                gaps[i + 1].amplitude
            } else {
                0.0
            };
            GapEntry {
                time: e.time,
                amplitude: e.amplitude + phi_minus * left + phi_plus * right,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductBound {
    pub partial_products: Vec<f64>,
    pub product: f64,
    pub exp_bound: f64,
    pub holds: bool,
}

/// Compares the running product of `(1 + b_k)` with `e^(sum b_k)`; the
/// comparison must hold for every non-negative sequence.
pub fn product_exp_bound(b: &[f64]) -> Result<ProductBound> {
    if b.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::Domain(
            "product bound needs non-negative finite entries".into(),
        ));
    }
    let mut partial_products = Vec::with_capacity(b.len());
    let mut product = 1.0f64;
    let mut sum = 0.0f64;
    for x in b {
        product *= 1.0 + x;
        sum += x;
        partial_products.push(product);
    }
    let exp_bound = sum.exp();
    // float slack only: the true inequality is strictwise
    let holds = product <= exp_bound * (1.0 + 1e-12);
    Ok(ProductBound {
        partial_products,
        product,
        exp_bound,
        holds,
    })
}

struct Engine<'a> {
    oracle: &'a GluingOracle,
    phi: RateFunction,
    opts: &'a ShadowOptions,
    original_moments: Vec<i64>,
    index_origin_pos: usize,
}

impl Engine<'_> {
    /// Index of a moment within the original list, as an offset from the
    /// central one.
    fn moment_index(&self, time: i64) -> Option<i64> {
        self.original_moments
            .binary_search(&time)
            .ok()
            .map(|pos| pos as i64 - self.index_origin_pos as i64)
    }

    fn partial_sums(&self, gaps: &[GapEntry]) -> Vec<PartialSum> {
        self.opts
            .partial_sum_ks
            .iter()
            .map(|k| {
                let k_i = *k as i64;
                let value: f64 = gaps
                    .iter()
                    .filter(|e| {
                        self.moment_index(e.time)
                            .is_some_and(|i| i.abs() <= k_i)
                    })
                    .map(|e| e.amplitude)
                    .sum();
                // empty float sums carry a negative zero; keep the sign clean
                PartialSum {
                    k: *k,
                    value: value + 0.0,
                }
            })
            .collect()
    }

    fn record(
        &self,
        round: usize,
        segments: &[Trajectory],
        gaps: &[GapEntry],
        predicted: Vec<GapEntry>,
    ) -> RoundRecord {
        let gap_sup = gaps.iter().map(|e| e.amplitude).fold(0.0, f64::max);
        let recursion_ok = gaps.iter().all(|e| {
            predicted
                .iter()
                .find(|p| p.time == e.time)
                .map_or(round == 0, |p| {
                    e.amplitude <= p.amplitude * (1.0 + 1e-9) + 1e-12
                })
        });
        RoundRecord {
            round,
            segment_spans: segments
                .iter()
                .map(|s| (s.window.t_min, s.window.t_max))
                .collect(),
            boundaries: gaps.iter().map(|e| e.time).collect(),
            gaps: gaps.to_vec(),
            gap_sup,
            partial_sums: self.partial_sums(gaps),
            predicted,
            recursion_ok,
            consumed: Vec::new(),
            max_point_move: 0.0,
            far_point_move: 0.0,
        }
    }
}

/// Builds a true trajectory shadowing `y` by rounds of pairwise gluing.
/// A pseudo-trajectory without positive gaps is returned as-is with an
/// empty certificate. An oracle failure aborts with the partial
/// certificate attached — that outcome is evidence, not a crash.
pub fn shadow_construct(
    y: &PseudoTrajectory,
    oracle: &GluingOracle,
    phi: &RateFunction,
    opts: &ShadowOptions,
) -> Result<(Trajectory, GluingCertificate)> {
    phi.validate()?;
    let binding = &oracle.system;
    let space = binding.space().clone();
    // the engine's bookkeeping assumes a monotone, even rate
    let phi_norm = phi.monotone_envelope().symmetrize();
    let phi_sum = phi_norm.phi_sum()?;
    let exp_phi_sum = phi_sum.exp();

    let profile = binding.gap_profile(y)?;
    let initial_gap_sup = profile.gap_max;
    let bounds = BoundSummary {
        phi_sum,
        exp_phi_sum,
        initial_gap_sup,
        gap_sup_bound: exp_phi_sum * initial_gap_sup,
        uniform_error_bound: initial_gap_sup * phi_sum * exp_phi_sum,
    };

    if profile.is_empty() {
        let z = binding.derive_segment(y, y.window.t_min, y.window.t_max)?;
        let cert = GluingCertificate {
            branch_mode: binding.is_branch(),
            moment_index_origin: None,
            original_moments: Vec::new(),
            rounds: Vec::new(),
            bounds,
            final_stats: FinalStats {
                sup_distance: 0.0,
                max_cesaro_distance: 0.0,
            },
        };
        return Ok((z, cert));
    }

    let moments = profile.moments();
    let index_origin_pos = moments
        .iter()
        .enumerate()
        .min_by_key(|(_, t)| (t.abs(), **t))
        .map(|(i, _)| i)
        .expect("non-empty profile");

    let engine = Engine {
        oracle,
        phi: phi_norm.clone(),
        opts,
        original_moments: moments.clone(),
        index_origin_pos,
    };

    // initial segmentation between consecutive moments
    let mut segments: Vec<Trajectory> = Vec::with_capacity(moments.len() + 1);
    let mut cut = y.window.t_min;
    for m in &moments {
        segments.push(binding.derive_segment(y, cut, *m)?);
        cut = m + 1;
    }
    segments.push(binding.derive_segment(y, cut, y.window.t_max)?);

    let mut gaps: Vec<GapEntry> = profile.entries.clone();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let max_rounds = (usize::BITS - (segments.len() - 1).leading_zeros()) as usize + 1;

    let mut round = 0usize;
    loop {
        let predicted = if round == 0 {
            Vec::new()
        } else {
            let prev = &rounds[round - 1];
            gap_recursion_step(&prev.gaps, &engine.phi, round as u32 - 1)
                .into_iter()
                .filter(|p| gaps.iter().any(|g| g.time == p.time))
                .collect()
        };
        let mut record = engine.record(round, &segments, &gaps, predicted);

        if segments.len() == 1 {
            rounds.push(record);
            break;
        }
        if round >= max_rounds {
            return Err(Error::Domain(format!(
                "gluing did not terminate within {max_rounds} rounds"
            )));
        }

        // glue consecutive pairs; the boundary between pair members is the
        // even-indexed surviving moment
        let mut new_segments: Vec<Trajectory> = Vec::with_capacity(segments.len() / 2 + 1);
        let mut consumed: Vec<i64> = Vec::new();
        let mut max_move = 0.0f64;
        let mut far_move = 0.0f64;
        let far_radius = 1i64 << round.min(32);
        let mut i = 0;
        while i < segments.len() {
            if i + 1 < segments.len() {
                let seam = segments[i].window.t_max;
                let out = engine
                    .oracle
                    .glue_pair(&segments[i], &segments[i + 1], &engine.phi)
                    .map_err(|e| attach_partial(e, &engine, &rounds, &record, &bounds))?;
                for t in out.trajectory.window.times() {
                    let before = if segments[i].window.contains(t) {
                        segments[i].point(t)
                    } else {
                        segments[i + 1].point(t)
                    };
                    let d = space
                        .distance(out.trajectory.point(t), before)
                        .unwrap_or(f64::INFINITY);
                    max_move = max_move.max(d);
                    if (t - (seam + 1)).abs() >= far_radius {
                        far_move = far_move.max(d);
                    }
                }
                consumed.push(seam);
                new_segments.push(out.trajectory);
                i += 2;
            } else {
                new_segments.push(segments[i].clone());
                i += 1;
            }
        }

        record.consumed = consumed.clone();
        record.max_point_move = max_move;
        record.far_point_move = far_move;
        rounds.push(record);

        // measure the actual gaps of the new pseudo-trajectory
        let mut new_gaps = Vec::with_capacity(new_segments.len() - 1);
        for pair in new_segments.windows(2) {
            let m = pair[0].window.t_max;
            let (gap, _) = binding.step_gap(m, pair[0].last(), pair[1].first())?;
            new_gaps.push(GapEntry {
                time: m,
                amplitude: if gap > EXACT_TOL { gap } else { 0.0 },
            });
        }
        segments = new_segments;
        gaps = new_gaps;
        round += 1;
    }

    let z = segments.into_iter().next().expect("single segment");
    binding.validate_trajectory(&z)?;

    let mut distances = Vec::with_capacity(y.window.len());
    for t in y.window.times() {
        distances.push(space.distance(z.point(t), y.point(t))?);
    }
    let sup_distance = distances.iter().copied().fold(0.0, f64::max);
    let sweep = CesaroSweep::for_window(y.window.t_min, distances.len(), opts.cesaro_k_min);
    let max_cesaro_distance = cesaro_max(y.window.t_min, &distances, sweep);

    let cert = GluingCertificate {
        branch_mode: binding.is_branch(),
        moment_index_origin: Some(moments[index_origin_pos]),
        original_moments: moments,
        rounds,
        bounds,
        final_stats: FinalStats {
            sup_distance,
            max_cesaro_distance,
        },
    };
    Ok((z, cert))
}

fn attach_partial(
    e: Error,
    engine: &Engine<'_>,
    rounds: &[RoundRecord],
    current: &RoundRecord,
    bounds: &BoundSummary,
) -> Error {
    match e {
        Error::OracleFailure {
            index,
            ratio,
            detail,
            ..
        } => {
            let mut rounds = rounds.to_vec();
            rounds.push(current.clone());
            Error::OracleFailure {
                index,
                ratio,
                detail,
                partial: Some(Box::new(GluingCertificate {
                    branch_mode: engine.oracle.system.is_branch(),
                    moment_index_origin: Some(engine.original_moments[engine.index_origin_pos]),
                    original_moments: engine.original_moments.clone(),
                    rounds,
                    bounds: bounds.clone(),
                    final_stats: FinalStats {
                        sup_distance: f64::NAN,
                        max_cesaro_distance: f64::NAN,
                    },
                })),
            }
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Uniform,
    Average,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub checks: Vec<BoundCheck>,
    pub pass: bool,
}

/// Evaluates the certified inequalities of a completed construction at
/// accuracy `eps`: the per-round gap cap, the partial-sum cap, and the
/// final error cap matching the perturbation kind. Failures are data,
/// not errors.
pub fn certify_bounds(
    cert: &GluingCertificate,
    eps: f64,
    kind: PerturbationKind,
) -> CertifyReport {
    let mut checks = Vec::new();
    let e_phi = cert.bounds.exp_phi_sum;

    let worst_gap_sup = cert
        .rounds
        .iter()
        .map(|r| r.gap_sup)
        .fold(0.0f64, f64::max);
    checks.push(BoundCheck {
        name: "gap-sup-per-round".into(),
        measured: worst_gap_sup,
        allowed: e_phi * cert.bounds.initial_gap_sup,
        pass: worst_gap_sup <= e_phi * cert.bounds.initial_gap_sup * (1.0 + 1e-12),
    });

    if let Some(first) = cert.rounds.first() {
        for (slot, ps0) in first.partial_sums.iter().enumerate() {
            let worst = cert
                .rounds
                .iter()
                .filter_map(|r| r.partial_sums.get(slot))
                .map(|p| p.value)
                .fold(0.0f64, f64::max);
            let allowed = e_phi * ps0.value;
            checks.push(BoundCheck {
                name: format!("partial-sum-k{}", ps0.k),
                measured: worst,
                allowed,
                pass: worst <= allowed * (1.0 + 1e-12) + 1e-300,
            });
        }
    }

    let error_cap = eps * cert.bounds.phi_sum * cert.bounds.exp_phi_sum;
    match kind {
        PerturbationKind::Uniform => {
            checks.push(BoundCheck {
                name: "uniform-error".into(),
                measured: cert.final_stats.sup_distance,
                allowed: error_cap,
                pass: cert.final_stats.sup_distance <= error_cap,
            });
        }
        PerturbationKind::Average => {
            checks.push(BoundCheck {
                name: "average-error".into(),
                measured: cert.final_stats.max_cesaro_distance,
                allowed: error_cap,
                pass: cert.final_stats.max_cesaro_distance <= error_cap,
            });
        }
    }

    let recursion_ok = cert.rounds.iter().all(|r| r.recursion_ok);
    checks.push(BoundCheck {
        name: "gap-recursion-predictions".into(),
        measured: if recursion_ok { 0.0 } else { 1.0 },
        allowed: 0.0,
        pass: recursion_ok,
    });

    let pass = checks.iter().all(|c| c.pass);
    CertifyReport { checks, pass }
}
