//! Seeded pseudo-trajectory builders for the perturbation models.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shadowing::maps::EndomorphismSpec;
use shadowing::semigroup::{GeneratorSet, PseudoTrajectory, Window};
use shadowing::space::{Space, SpacePoint};

use crate::config::{ExperimentConfig, PerturbationModel};

/// Magnitude of one displacement sample: `|N(0, sigma)|` truncated at
/// `gap_max`, from two uniform draws.
fn half_gaussian(rng: &mut ChaCha8Rng, sigma: f64, gap_max: f64) -> f64 {
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let n = sigma * (-2.0 * u.ln()).sqrt() * v.cos();
    n.abs().min(gap_max)
}

pub fn build_pseudo(config: &ExperimentConfig, seed: u64) -> anyhow::Result<PseudoTrajectory> {
    let gens = config.generator_set()?;
    build_pseudo_for(config, &gens, seed)
}

/// Builds the configured pseudo-trajectory on an explicit generator set
/// (the transfer command paints it on the conjugacy's source system).
pub fn build_pseudo_for(
    config: &ExperimentConfig,
    gens: &GeneratorSet,
    seed: u64,
) -> anyhow::Result<PseudoTrajectory> {
    let window = config.window()?;
    let gens = gens.clone();
    let model = config
        .perturbation
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no perturbation section"))?;

    if let PerturbationModel::Join {
        left_anchor,
        right_start,
        anchor_time,
        backward_id,
        forward_id,
    } = model
    {
        return build_join(
            &gens,
            window,
            left_anchor,
            right_start,
            *anchor_time,
            backward_id.as_deref(),
            forward_id.as_deref(),
        );
    }

    let word = match &config.pseudo_word {
        Some(p) => p.expand(window.steps())?,
        None => vec![gens.ids()[0].clone(); window.steps()],
    };
    let base = config
        .base_point
        .clone()
        .ok_or_else(|| anyhow::anyhow!("perturbation model needs a base_point"))?;
    anyhow::ensure!(
        matches!(gens.space(), Space::RealLine),
        "displacement models need the real line; use a join on finite spaces"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![base.clone()];
    let mut x = base;
    for (i, id) in word.iter().enumerate() {
        let t = window.t_min + i as i64;
        let image = gens.get(id)?.apply(&x)?;
        let v = image
            .as_real()
            .ok_or_else(|| anyhow::anyhow!("real-line step produced a label"))?;
        let displacement = match model {
            PerturbationModel::Uniform { eps } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * eps
            }
            PerturbationModel::Drift { eps } => *eps,
            PerturbationModel::ClippedGaussian { sigma, gap_max } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * half_gaussian(&mut rng, *sigma, *gap_max)
            }
            PerturbationModel::Single { time, size } => {
                if t == *time {
                    *size
                } else {
                    0.0
                }
            }
            PerturbationModel::Explicit { entries } => entries
                .iter()
                .find(|(et, _)| *et == t)
                .map(|(_, s)| *s)
                .unwrap_or(0.0),
            PerturbationModel::Join { .. } => unreachable!("handled above"),
        };
        x = SpacePoint::real(v + displacement);
        points.push(x.clone());
    }
    Ok(PseudoTrajectory::new(window, points, Some(word))?)
}

fn build_join(
    gens: &GeneratorSet,
    window: Window,
    left_anchor: &SpacePoint,
    right_start: &SpacePoint,
    anchor_time: i64,
    backward_id: Option<&str>,
    forward_id: Option<&str>,
) -> anyhow::Result<PseudoTrajectory> {
    anyhow::ensure!(
        window.contains(anchor_time) && window.contains(anchor_time + 1),
        "anchor_time {anchor_time} must leave room on both sides of {window:?}"
    );
    let first_id = gens.ids()[0].clone();
    let backward = backward_id.map(str::to_string).unwrap_or(first_id.clone());
    let forward = forward_id.map(str::to_string).unwrap_or(first_id);
    let back_map: &EndomorphismSpec = gens.get(&backward)?;
    let fwd_map: &EndomorphismSpec = gens.get(&forward)?;

    // backward side: repeated preimages of the anchor, smallest value on ties
    let mut rev_points = vec![left_anchor.clone()];
    let mut current = left_anchor.clone();
    for _ in window.t_min..anchor_time {
        let mut pre = back_map.preimages(&current)?;
        anyhow::ensure!(
            !pre.is_empty(),
            "backward orbit of the join ran out of preimages"
        );
        pre.sort_by(|a, b| match (a, b) {
            (SpacePoint::Real(x), SpacePoint::Real(y)) => x.total_cmp(y),
            (SpacePoint::Label(x), SpacePoint::Label(y)) => x.cmp(y),
            _ => std::cmp::Ordering::Equal,
        });
        current = pre.into_iter().next().expect("non-empty");
        rev_points.push(current.clone());
    }
    rev_points.reverse();

    let mut points = rev_points;
    let mut word = vec![backward.clone(); points.len() - 1];
    // seam step anchor_time -> anchor_time + 1 is attributed to the forward map
    word.push(forward.clone());
    let mut x = right_start.clone();
    points.push(x.clone());
    for _ in (anchor_time + 1)..window.t_max {
        x = fwd_map.apply(&x)?;
        points.push(x.clone());
        word.push(forward.clone());
    }
    Ok(PseudoTrajectory::new(window, points, Some(word))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use shadowing::semigroup::gap_profile;

    fn base_config() -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({
            "command": "perturb",
            "space": {"kind": "real-line"},
            "generators": [{"id": "g", "map": {"affine": {"slope": 2.0, "intercept": 0.0}}}],
            "window": [-8, 8],
            "base_point": 0.0,
            "perturbation": {"kind": "uniform", "eps": 1e-3},
            "thresholds": {"eps": 1e-3, "delta": 0.1}
        }))
        .unwrap()
    }

    #[test]
    fn uniform_model_is_seed_deterministic() {
        let config = base_config();
        let a = build_pseudo(&config, 7).unwrap();
        let b = build_pseudo(&config, 7).unwrap();
        let c = build_pseudo(&config, 8).unwrap();
        assert_eq!(a.points(), b.points());
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn uniform_model_has_eps_gaps() {
        let config = base_config();
        let gens = config.generator_set().unwrap();
        let y = build_pseudo(&config, 3).unwrap();
        let profile = gap_profile(&gens, &y).unwrap();
        assert_eq!(profile.entries.len(), 16);
        for e in &profile.entries {
            assert!((e.amplitude - 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn join_model_builds_two_sided_orbits() {
        let mut config = base_config();
        config.perturbation = Some(PerturbationModel::Join {
            left_anchor: SpacePoint::real(0.5),
            right_start: SpacePoint::real(1.1),
            anchor_time: -1,
            backward_id: None,
            forward_id: None,
        });
        let y = build_pseudo(&config, 1).unwrap();
        assert_eq!(y.point(-1).as_real().unwrap(), 0.5);
        assert_eq!(y.point(-3).as_real().unwrap(), 0.125);
        assert_eq!(y.point(0).as_real().unwrap(), 1.1);
        let gens = config.generator_set().unwrap();
        let profile = gap_profile(&gens, &y).unwrap();
        assert_eq!(profile.entries.len(), 1);
        assert_eq!(profile.entries[0].time, -1);
        assert!((profile.entries[0].amplitude - 0.1).abs() < 1e-12);
    }
}
