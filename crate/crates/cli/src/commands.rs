use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use mmc_core::ammc::{run_ammc, AmmcOptions};
use mmc_core::harness::{
    classification_error, match_components, mix_images as mix, read_pgm, run_example1_suite, run_phase_grid,
    run_theorem2_campaign, to_json_lines, write_pgm, TrialSetup, DESK_DELTA, DESK_P, DESK_TRIALS, FULL_TRIALS,
};
use mmc_core::lrmc::{complete_lowrank, leading_subspace, LrmcOptions};
use mmc_core::model::io::{
    load_mask, load_matrix, load_observed, save, write_assignments, write_mask, write_matrix, write_observed,
};
use mmc_core::patterns::{checker, search_theorem1_partition, DaggerInstance};
use mmc_core::rng::{derive_seed, substream};
use mmc_core::synth::{generate_hrmc, generate_mixture, perturb_subspaces, random_orthonormal, true_bases, SynthConfig};
use mmc_core::DenseMatrix;

use crate::{
    CheckPatternArgs, CompleteArgs, Example1Args, GenArgs, MixImagesArgs, PhaseArgs, RunArgs, Theorem2Args,
};

const FULL_P: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const FULL_DELTA: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn json_line(value: &serde_json::Value) -> String {
    serde_json::to_string(value).expect("json values serialize") + "\n"
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let cfg = SynthConfig {
        d: a.d,
        n: a.n,
        r: a.r,
        k: a.k,
        p: a.p,
        delta: a.delta,
        seed: a.seed,
    };
    let problem = if a.hrmc { generate_hrmc(&cfg)? } else { generate_mixture(&cfg)? };
    let bases = true_bases(&problem);
    let init = perturb_subspaces(&bases, a.delta, derive_seed(a.seed, &[u64::MAX]))?;
    out_dir(&a.out_dir)?;
    for (k, x) in problem.truth().iter().enumerate() {
        save(a.out_dir.join(format!("truth_{}.mtx.txt", k + 1)), &write_matrix(x))?;
        save(a.out_dir.join(format!("basis_{}.mtx.txt", k + 1)), &write_matrix(&bases[k]))?;
        save(a.out_dir.join(format!("init_{}.mtx.txt", k + 1)), &write_matrix(&init[k]))?;
    }
    save(a.out_dir.join("assignments.mtx.txt"), &write_assignments(problem.assignments()))?;
    save(a.out_dir.join("observed.mtx.txt"), &write_observed(problem.observed()))?;
    println!(
        "wrote {} components, {} observed entries of {}x{} to {}",
        a.k,
        problem.observed().num_observed(),
        a.d,
        a.n,
        a.out_dir.display()
    );
    Ok(())
}

pub fn check_pattern(a: &CheckPatternArgs) -> Result<()> {
    let mask = load_mask(&a.mask)?;
    let (d, n) = mask.shape();
    let report = if a.search {
        search_theorem1_partition(&mask, a.r, a.budget, a.seed)?
    } else {
        checker(&a.method)?.check(&DaggerInstance::new(mask, a.r)?)?
    };
    println!("mask: {d}x{n}, r = {}", a.r);
    println!("method: {}", report.method);
    println!("conclusive: {}", report.conclusive);
    if let Some(detail) = &report.detail {
        println!("detail: {detail}");
    }
    println!("{}", report.verdict_line());
    Ok(())
}

pub fn complete(a: &CompleteArgs) -> Result<()> {
    let obs = load_observed(&a.input)?;
    let opts = LrmcOptions {
        tol: a.tol,
        max_iters: a.max_iters,
        ..LrmcOptions::new(a.r).with_method(&a.method)
    };
    let c = complete_lowrank(&obs, &opts)?;
    save(&a.out, &write_matrix(&c.matrix))?;
    println!(
        "method={} converged={} iters={} residual={:e}",
        a.method, c.converged, c.iters, c.residual
    );
    if !c.underdetermined_columns.is_empty() {
        println!("underdetermined columns: {:?}", c.underdetermined_columns);
    }
    Ok(())
}

fn initial_bases(a: &RunArgs, d: usize) -> Result<Vec<DenseMatrix>> {
    match (&a.init_dir, a.init.as_deref()) {
        (Some(dir), _) => (1..=a.k)
            .map(|k| {
                let path = dir.join(format!("init_{k}.mtx.txt"));
                load_matrix(&path).with_context(|| format!("reading {}", path.display()))
            })
            .collect(),
        (None, Some("random")) | (None, None) => (0..a.k)
            .map(|k| Ok(DenseMatrix::from_nalgebra(&random_orthonormal(d, a.r, &mut substream(a.seed, &[k as u64])))?))
            .collect(),
        (None, Some(other)) => bail!("unknown --init `{other}` (expected `random` or --init-dir)"),
    }
}

pub fn run(a: &RunArgs) -> Result<()> {
    let obs = load_observed(&a.input)?;
    let init = initial_bases(a, obs.rows())?;
    let opts = AmmcOptions {
        noise_sigma2: a.sigma2,
        assignment_cap: a.cap,
        restarts: a.restarts,
        max_outer_iters: a.max_outer_iters,
        lrmc: LrmcOptions::new(a.r).with_method(&a.method),
        seed: a.seed,
        ..AmmcOptions::new(a.k, a.r)
    };
    let run = run_ammc(&obs, &init, &opts)?;
    out_dir(&a.out_dir)?;
    for k in 0..a.k {
        save(
            a.out_dir.join(format!("completion_{}.mtx.txt", k + 1)),
            &write_matrix(&run.state.completions[k]),
        )?;
        save(
            a.out_dir.join(format!("mask_{}.mtx.txt", k + 1)),
            &write_mask(run.state.assignments.mask(k)),
        )?;
    }
    save(a.out_dir.join("outliers.mtx.txt"), &write_mask(&run.state.outliers))?;
    let log = json!({
        "k": a.k,
        "r": a.r,
        "iterations": run.iterations,
        "converged": run.converged,
        "assignment_changes": run.history,
        "outliers": run.state.outliers.count_ones(),
        "flags": {
            "cycle_detected": run.flags.cycle_detected,
            "skipped_columns": run.flags.skipped_columns,
            "empty_components": run.flags.empty_components,
            "underdetermined_components": run.flags.underdetermined_components,
            "ridge_used": run.flags.ridge_used,
        },
    });
    save(a.out_dir.join("run_log.json"), &json_line(&log))?;
    println!(
        "iterations={} converged={} cycle_detected={} changes={:?}",
        run.iterations, run.converged, run.flags.cycle_detected, run.history
    );
    Ok(())
}

pub fn phase(a: &PhaseArgs) -> Result<()> {
    let (p_default, delta_default, trials_default): (&[f64], &[f64], usize) = match a.preset.as_str() {
        "desk" => (&DESK_P, &DESK_DELTA, DESK_TRIALS),
        "full" => (&FULL_P, &FULL_DELTA, FULL_TRIALS),
        other => bail!("unknown preset `{other}` (expected desk or full)"),
    };
    let p = a.p.clone().unwrap_or_else(|| p_default.to_vec());
    let delta = a.delta.clone().unwrap_or_else(|| delta_default.to_vec());
    let trials = a.trials.unwrap_or(trials_default);
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut setup = TrialSetup::new(a.d, a.n, a.k, a.r);
    setup.ammc.restarts = a.restarts;
    setup.ammc.max_outer_iters = a.max_outer_iters;
    setup.ammc.lrmc.max_iters = a.lrmc_max_iters;
    let run = run_phase_grid(&setup, &p, &delta, trials, a.seed, workers, a.timings)?;
    out_dir(&a.out_dir)?;
    save(a.out_dir.join("phase.csv"), &run.grid.to_csv())?;
    save(a.out_dir.join("trials.jsonl"), &to_json_lines(&run.records))?;
    print!("{}", run.grid.to_csv());
    let errored = run.records.iter().filter(|r| r.error.is_some()).count();
    if errored > 0 {
        println!("{errored} trials ended with an error (see trials.jsonl)");
    }
    Ok(())
}

pub fn theorem2(a: &Theorem2Args) -> Result<()> {
    let c = run_theorem2_campaign(a.d, a.r, a.eps, a.trials, a.seed)?;
    println!(
        "d={} r={} eps={} n={} p={:.6} trials={} failures={} rate={} bound={}",
        c.d, c.r, c.eps, c.n, c.p, c.trials, c.failures, c.failure_rate, c.bound
    );
    println!("{}", if c.within_bound() { "WITHIN BOUND" } else { "EXCEEDS BOUND" });
    if let Some(out) = &a.out {
        save(out, &json_line(&serde_json::to_value(&c)?))?;
    }
    Ok(())
}

pub fn example1(a: &Example1Args) -> Result<()> {
    let report = run_example1_suite()?;
    for c in &report.clauses {
        println!("({}) {} {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    println!(
        "extra observation at {:?}: true pair agrees={}, false pair agrees={}",
        report.extra_entry, report.extra_true_agrees, report.extra_false_agrees
    );
    if let Some(out) = &a.out {
        save(out, &json_line(&serde_json::to_value(&report)?))?;
    }
    if !report.passed() {
        bail!("violated clauses: {}", report.failed_clauses().join(", "));
    }
    Ok(())
}

fn load_pgm(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_pgm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn mix_images(a: &MixImagesArgs) -> Result<()> {
    let (img_a, img_b) = (load_pgm(&a.a)?, load_pgm(&a.b)?);
    let mixture = mix(&img_a, &img_b, a.seed)?;
    let problem = &mixture.problem;
    out_dir(&a.out_dir)?;
    fs::write(a.out_dir.join("mixture.pgm"), write_pgm(problem.observed().zero_filled()))?;
    save(a.out_dir.join("assignments.mtx.txt"), &write_assignments(problem.assignments()))?;
    if mixture.identical {
        println!("inputs are identical: pixel classification is undefined");
    }
    if !a.recover {
        return Ok(());
    }
    let bases = problem
        .truth()
        .iter()
        .map(|x| Ok(leading_subspace(x, a.r)?.basis))
        .collect::<Result<Vec<_>>>()?;
    let opts = AmmcOptions {
        restarts: a.restarts,
        seed: a.seed,
        ..AmmcOptions::new(2, a.r)
    };
    let run = run_ammc(problem.observed(), &bases, &opts)?;
    let matching = match_components(problem.truth(), &run.state.completions)?;
    let class_err = classification_error(
        problem.assignments(),
        &run.state.assignments,
        problem.truth(),
        &matching.permutation,
    )?;
    for (k, c) in run.state.completions.iter().enumerate() {
        fs::write(a.out_dir.join(format!("recovered_{}.pgm", k + 1)), write_pgm(c))?;
    }
    let report = json!({
        "iterations": run.iterations,
        "converged": run.converged,
        "classification_error": class_err,
        "reconstruction_error": matching.errors,
    });
    save(a.out_dir.join("report.json"), &json_line(&report))?;
    println!(
        "iterations={} classification_error={} reconstruction_error={:?}",
        run.iterations,
        class_err.map_or("undefined".to_owned(), |e| e.to_string()),
        matching.errors
    );
    Ok(())
}
