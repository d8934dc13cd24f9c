//! JSON experiment configuration. One file declares the system, the
//! perturbation model, the rate function, thresholds, and the command to
//! run; identical config plus seed must reproduce identical outputs.

use serde::{Deserialize, Serialize};

use shadowing::gluing::{GlueMode, GlueStrategy};
use shadowing::maps::EndomorphismSpec;
use shadowing::rate::RateFunction;
use shadowing::semigroup::{GeneratorSet, Window};
use shadowing::space::{Space, SpacePoint};
use shadowing::transfer::{HMap, IntertwiningDirection};
use shadowing::verdicts::VerdictKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of: perturb, glue, shadow, falsify, transfer, branch-compare,
    /// implication-matrix. Overridable with `--command`.
    pub command: Option<String>,
    pub space: Space,
    pub generators: Vec<GeneratorDecl>,
    /// `[t_min, t_max]`.
    pub window: [i64; 2],
    #[serde(default)]
    pub base_point: Option<SpacePoint>,
    /// Generator choice per step when building pseudo-trajectories;
    /// defaults to the first generator everywhere.
    #[serde(default)]
    pub pseudo_word: Option<WordPattern>,
    #[serde(default)]
    pub perturbation: Option<PerturbationModel>,
    #[serde(default)]
    pub rate: Option<RateFunction>,
    #[serde(default)]
    pub oracle: Option<OracleDecl>,
    /// Branch word for branch-compare, run-length encoded.
    #[serde(default)]
    pub branch_word: Option<WordPattern>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub falsify: Option<FalsifyDecl>,
    #[serde(default)]
    pub conjugacy: Option<ConjugacyDecl>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDecl {
    pub id: String,
    pub map: EndomorphismSpec,
}

/// Either an explicit id list or a block repeated to cover the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordPattern {
    Repeat(Vec<String>),
    Explicit(Vec<String>),
}

impl WordPattern {
    pub fn expand(&self, steps: usize) -> anyhow::Result<Vec<String>> {
        match self {
            WordPattern::Repeat(block) => {
                anyhow::ensure!(!block.is_empty(), "empty repeat block");
                Ok((0..steps).map(|i| block[i % block.len()].clone()).collect())
            }
            WordPattern::Explicit(ids) => {
                anyhow::ensure!(
                    ids.len() == steps,
                    "explicit word has {} entries, window needs {steps}",
                    ids.len()
                );
                Ok(ids.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationModel {
    /// Displacement of magnitude `eps`, random sign per step.
    Uniform { eps: f64 },
    /// Constant displacement `+eps` every step.
    Drift { eps: f64 },
    /// `|N(0, sigma)|` truncated at `gap_max`, random sign.
    ClippedGaussian { sigma: f64, gap_max: f64 },
    /// One displacement of `size` on the step `time -> time+1`.
    Single { time: i64, size: f64 },
    /// Explicit displacements per step time.
    Explicit { entries: Vec<(i64, f64)> },
    /// Two one-sided orbits meeting at `anchor_time`: the point
    /// `left_anchor` sits at `anchor_time` and extends backward through
    /// preimages of `backward_id`; `right_start` sits one step later and
    /// extends forward under `forward_id`.
    Join {
        left_anchor: SpacePoint,
        right_start: SpacePoint,
        anchor_time: i64,
        #[serde(default)]
        backward_id: Option<String>,
        #[serde(default)]
        forward_id: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDecl {
    pub mode: GlueMode,
    pub strategy: GlueStrategy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub eps: f64,
    pub delta: f64,
    #[serde(default)]
    pub k_min: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalsifyDecl {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    #[serde(default)]
    pub word_len: Option<usize>,
    #[serde(default = "default_refine")]
    pub refine_iters: usize,
    pub statistic: VerdictKind,
}

fn default_refine() -> usize {
    160
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacyDecl {
    pub h: HMap,
    pub h_inv: HMap,
    pub direction: IntertwiningDirection,
    /// `[lo, hi]` sample region.
    pub region: [f64; 2],
    /// Generators of the other side of the conjugated pair.
    pub target_generators: Vec<GeneratorDecl>,
}

impl ExperimentConfig {
    pub fn window(&self) -> anyhow::Result<Window> {
        Ok(Window::new(self.window[0], self.window[1])?)
    }

    pub fn generator_set(&self) -> anyhow::Result<GeneratorSet> {
        Ok(GeneratorSet::new(
            self.space.clone(),
            self.generators
                .iter()
                .map(|d| (d.id.clone(), d.map.clone())),
        )?)
    }

    pub fn target_generator_set(&self) -> anyhow::Result<GeneratorSet> {
        let decl = self
            .conjugacy
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config has no conjugacy section"))?;
        Ok(GeneratorSet::new(
            self.space.clone(),
            decl.target_generators
                .iter()
                .map(|d| (d.id.clone(), d.map.clone())),
        )?)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(config)
    }
}
