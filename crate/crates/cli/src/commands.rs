//! Command implementations. Every command writes its artifacts under the
//! output directory (file names carry the seed) and returns one summary
//! line per run; identical config and seed give byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use shadowing::gluing::{GluingOracle, SystemBinding};
use shadowing::io;
use shadowing::nonauto::branch_vs_semigroup_report;
use shadowing::parallel::{certify_bounds, shadow_construct, PerturbationKind, ShadowOptions};
use shadowing::semigroup::{classify_pseudo, gap_profile, Trajectory};
use shadowing::transfer::{conjugate_transfer, ConjugacySpec};
use shadowing::verdicts::{falsify_shadowing, FalsifyBudget, GridSpec};
use shadowing::Error;

use crate::config::{ExperimentConfig, PerturbationModel};
use crate::pseudo::build_pseudo;
use crate::registry;

pub fn run_command(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
    command_override: Option<&str>,
) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let command = command_override
        .map(str::to_string)
        .or_else(|| config.command.clone())
        .ok_or_else(|| anyhow::anyhow!("no command in config or on the command line"))?;
    let seeds: Vec<u64> = match seed_override {
        Some(s) => vec![s],
        None => config.seeds.clone(),
    };

    let mut lines = Vec::new();
    match command.as_str() {
        "perturb" => {
            for seed in &seeds {
                lines.push(cmd_perturb(config, out_dir, *seed)?);
            }
        }
        "glue" => {
            for seed in &seeds {
                lines.push(cmd_glue(config, out_dir, *seed)?);
            }
        }
        "shadow" => {
            for seed in &seeds {
                lines.push(cmd_shadow(config, out_dir, *seed)?);
            }
        }
        "falsify" => {
            for seed in &seeds {
                lines.push(cmd_falsify(config, out_dir, *seed)?);
            }
        }
        "transfer" => {
            for seed in &seeds {
                lines.push(cmd_transfer(config, out_dir, *seed)?);
            }
        }
        "branch-compare" => {
            for seed in &seeds {
                lines.push(cmd_branch_compare(config, out_dir, *seed)?);
            }
        }
        "implication-matrix" => {
            lines.push(cmd_matrix(config, out_dir)?);
        }
        other => anyhow::bail!("unknown command {other:?}"),
    }
    Ok(lines)
}

fn write(out_dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::write(out_dir.join(name), contents)?;
    Ok(())
}

fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    write(out_dir, name, &serde_json::to_string_pretty(value)?)
}

fn oracle_from(config: &ExperimentConfig) -> anyhow::Result<GluingOracle> {
    let decl = config
        .oracle
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no oracle section"))?;
    Ok(GluingOracle::new(
        decl.mode,
        decl.strategy.clone(),
        SystemBinding::Semigroup(config.generator_set()?),
    ))
}

fn rate_from(config: &ExperimentConfig) -> anyhow::Result<shadowing::RateFunction> {
    config
        .rate
        .clone()
        .ok_or_else(|| anyhow::anyhow!("config has no rate section"))
}

fn cmd_perturb(config: &ExperimentConfig, out_dir: &Path, seed: u64) -> anyhow::Result<String> {
    let gens = config.generator_set()?;
    let y = build_pseudo(config, seed)?;
    let profile = gap_profile(&gens, &y)?;
    let class = classify_pseudo(&gens, &y, config.thresholds.eps, config.thresholds.k_min)?;
    write(out_dir, &format!("pseudo_{seed}.csv"), &io::pseudo_to_csv(&y, &profile))?;
    write_json(out_dir, &format!("profile_{seed}.json"), &profile)?;
    write_json(out_dir, &format!("classes_{seed}.json"), &class)?;
    Ok(format!(
        "perturb seed={seed}: {} moments, gap_sup={:.6e}, U={} A={} S={}",
        profile.entries.len(),
        profile.gap_max,
        class.is_u,
        class.is_a,
        class.is_s
    ))
}

fn cmd_glue(config: &ExperimentConfig, out_dir: &Path, seed: u64) -> anyhow::Result<String> {
    let gens = config.generator_set()?;
    let oracle = oracle_from(config)?;
    let rate = rate_from(config)?;
    let y = build_pseudo(config, seed)?;
    let profile = gap_profile(&gens, &y)?;
    anyhow::ensure!(
        profile.entries.len() == 1,
        "glue needs exactly one perturbation moment, found {}",
        profile.entries.len()
    );
    let moment = profile.entries[0].time;
    let binding = SystemBinding::Semigroup(gens.clone());
    let left = binding.derive_segment(&y, y.window.t_min, moment)?;
    let right = binding.derive_segment(&y, moment + 1, y.window.t_max)?;
    let out = oracle.glue_pair(&left, &right, &rate)?;
    write(
        out_dir,
        &format!("glued_{seed}.csv"),
        &io::trajectory_to_csv(&out.trajectory),
    )?;
    let mut errors_csv = String::from("t,error\n");
    for (i, t) in out.trajectory.window.times().enumerate() {
        errors_csv.push_str(&format!("{t},{}\n", out.errors[i]));
    }
    write(out_dir, &format!("errors_{seed}.csv"), &errors_csv)?;
    #[derive(Serialize)]
    struct GlueReport {
        gap: f64,
        worst_ratio: f64,
        moment: i64,
    }
    write_json(
        out_dir,
        &format!("glue_report_{seed}.json"),
        &GlueReport {
            gap: out.gap,
            worst_ratio: out.worst_ratio,
            moment,
        },
    )?;
    Ok(format!(
        "glue seed={seed}: gap={:.6e} worst_ratio={:.6} PASS",
        out.gap, out.worst_ratio
    ))
}

fn cmd_shadow(config: &ExperimentConfig, out_dir: &Path, seed: u64) -> anyhow::Result<String> {
    let gens = config.generator_set()?;
    let oracle = oracle_from(config)?;
    let rate = rate_from(config)?;
    let y = build_pseudo(config, seed)?;
    let profile = gap_profile(&gens, &y)?;
    let kind = match config.perturbation {
        Some(PerturbationModel::ClippedGaussian { .. }) => PerturbationKind::Average,
        _ => PerturbationKind::Uniform,
    };
    let opts = ShadowOptions {
        cesaro_k_min: config.thresholds.k_min,
        ..ShadowOptions::default()
    };
    match shadow_construct(&y, &oracle, &rate, &opts) {
        Ok((z, cert)) => {
            let report = certify_bounds(&cert, config.thresholds.eps, kind);
            write(out_dir, &format!("pseudo_{seed}.csv"), &io::pseudo_to_csv(&y, &profile))?;
            write(
                out_dir,
                &format!("trajectory_{seed}.csv"),
                &io::trajectory_to_csv(&z),
            )?;
            write(
                out_dir,
                &format!("certificate_{seed}.json"),
                &io::certificate_to_json(&cert),
            )?;
            write(
                out_dir,
                &format!("rounds_{seed}.csv"),
                &io::certificate_rounds_csv(&cert),
            )?;
            write_json(out_dir, &format!("certify_{seed}.json"), &report)?;
            let passed = report.checks.iter().filter(|c| c.pass).count();
            Ok(format!(
                "shadow seed={seed}: sup={:.6e} cesaro={:.6e} checks {}/{} {}",
                cert.final_stats.sup_distance,
                cert.final_stats.max_cesaro_distance,
                passed,
                report.checks.len(),
                if report.pass { "PASS" } else { "FAIL" }
            ))
        }
        Err(Error::OracleFailure {
            index,
            ratio,
            detail,
            partial,
        }) => {
            if let Some(cert) = &partial {
                write(
                    out_dir,
                    &format!("certificate_partial_{seed}.json"),
                    &io::certificate_to_json(cert),
                )?;
            }
            Ok(format!(
                "shadow seed={seed}: ORACLE-FAILURE at t={index} ratio={ratio:.3e} ({detail})"
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_falsify(config: &ExperimentConfig, out_dir: &Path, seed: u64) -> anyhow::Result<String> {
    let gens = config.generator_set()?;
    let decl = config
        .falsify
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no falsify section"))?;
    let y = build_pseudo(config, seed)?;
    let budget = FalsifyBudget {
        grid: GridSpec {
            lo: decl.grid_lo,
            hi: decl.grid_hi,
            step: decl.grid_step,
        },
        word_len: decl.word_len,
        refine_iters: decl.refine_iters,
        statistic: decl.statistic,
        k_min: config.thresholds.k_min,
    };
    let witness = falsify_shadowing(&gens, &y, config.thresholds.delta, &budget)?;
    write_json(out_dir, &format!("witness_{seed}.json"), &witness)?;
    Ok(format!(
        "falsify seed={seed}: lower_bound={:.6e} delta={:.3e} claim={} ({} candidates)",
        witness.lower_bound, witness.delta, witness.claim, witness.candidates_evaluated
    ))
}

fn cmd_transfer(config: &ExperimentConfig, out_dir: &Path, seed: u64) -> anyhow::Result<String> {
    let decl = config
        .conjugacy
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no conjugacy section"))?;
    let f = config.generator_set()?;
    let g = config.target_generator_set()?;
    let spec = ConjugacySpec {
        h: decl.h.clone(),
        h_inv: decl.h_inv.clone(),
        direction: decl.direction,
        region: (decl.region[0], decl.region[1]),
    };
    // shadowing pair in the conjugacy's source system: the unperturbed
    // orbit of the base point vs a perturbed pseudo-trajectory of it
    let (source, _) = spec.source_target(&f, &g);
    let y = crate::pseudo::build_pseudo_for(config, source, seed)?;
    let base = config
        .base_point
        .clone()
        .ok_or_else(|| anyhow::anyhow!("transfer needs a base_point"))?;
    let window = config.window()?;
    let id = source.ids()[0].clone();
    let map = source.get(&id)?.clone();
    let mut pts = vec![base.clone()];
    let mut x = base;
    for _ in 0..window.steps() {
        x = map.apply(&x)?;
        pts.push(x.clone());
    }
    let traj = Trajectory::new(window, pts, vec![id; window.steps()])?;
    traj.validate(source)?;

    match conjugate_transfer(
        &spec,
        &f,
        &g,
        &y,
        &traj,
        config.thresholds.delta,
        config.thresholds.k_min,
    ) {
        Ok(out) => {
            write_json(out_dir, &format!("transfer_{seed}.json"), &out)?;
            Ok(format!(
                "transfer seed={seed}: C=[{:.4},{:.4}] pre={:.6e} post={:.6e} factor_ok={}",
                out.estimate.c_lower,
                out.estimate.c_upper,
                out.pre_uniform.statistic,
                out.post_uniform.statistic,
                out.factor_ok
            ))
        }
        Err(Error::TransferRefused { reason, estimate }) => {
            write_json(out_dir, &format!("transfer_refused_{seed}.json"), &estimate)?;
            Ok(format!("transfer seed={seed}: REFUSED ({reason})"))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_branch_compare(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> anyhow::Result<String> {
    let gens = config.generator_set()?;
    let rate = rate_from(config)?;
    let y = build_pseudo(config, seed)?;
    let word = config
        .branch_word
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no branch_word"))?
        .expand(y.window.steps())?;
    let first = word
        .first()
        .ok_or_else(|| anyhow::anyhow!("empty branch word"))?;
    anyhow::ensure!(
        word.iter().all(|w| w == first),
        "branch-compare currently takes a constant branch word"
    );
    let report = branch_vs_semigroup_report(
        &gens,
        first,
        &y,
        &rate,
        config.thresholds.delta,
        config.thresholds.k_min,
    )?;
    write_json(out_dir, &format!("branch_compare_{seed}.json"), &report)?;
    Ok(format!(
        "branch-compare seed={seed}: semigroup={} branch={}{}",
        if report.semigroup_pass { "PASS" } else { "FAIL" },
        if report.branch_pass { "PASS" } else { "FAIL" },
        report
            .branch_failure
            .as_ref()
            .map(|f| format!(" ({f})"))
            .unwrap_or_default()
    ))
}

fn cmd_matrix(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<String> {
    let _ = config; // registered systems carry their own thresholds
    let report = registry::implication_matrix(None);
    write(out_dir, "matrix.csv", &registry::matrix_to_csv(&report))?;
    write_json(out_dir, "matrix_detail.json", &report)?;
    let mut counts = (0usize, 0usize, 0usize);
    for row in &report.cells {
        for cell in row {
            match cell.evidence.as_str() {
                "counterexample-found" => counts.0 += 1,
                "consistent" => counts.1 += 1,
                _ => counts.2 += 1,
            }
        }
    }
    Ok(format!(
        "implication-matrix: 49 cells, {} counterexample-found, {} consistent, {} no-evidence",
        counts.0, counts.1, counts.2
    ))
}

/// Re-loads every trajectory/pseudo CSV in a directory and validates it
/// against the configured system.
pub fn revalidate_outputs(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<usize> {
    let gens = config.generator_set()?;
    let mut checked = 0;
    for entry in fs::read_dir(out_dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("trajectory_") || name.starts_with("glued_") {
            let text = fs::read_to_string(&path)?;
            let traj = io::trajectory_from_csv(&config.space, &text)?;
            traj.validate(&gens)?;
            checked += 1;
        } else if name.starts_with("pseudo_") && name.ends_with(".csv") {
            let text = fs::read_to_string(&path)?;
            let y = io::pseudo_from_csv(&config.space, &text)?;
            let reloaded = gap_profile(&gens, &y)?;
            // gaps re-derived from the points must match the profile scale
            anyhow::ensure!(
                reloaded.gap_max.is_finite(),
                "reloaded pseudo has a broken profile"
            );
            checked += 1;
        }
    }
    Ok(checked)
}

