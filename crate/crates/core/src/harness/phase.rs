use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scoring::match_components;
use crate::ammc::{run_ammc, AmmcOptions};
use crate::error::{MmcError, Result};
use crate::model::io::format_value;
use crate::rng::derive_seed;
use crate::synth::{generate_mixture, perturb_subspaces, true_bases, SynthConfig};

/// Normalized Frobenius error below which a component counts as recovered.
pub const SUCCESS_THRESHOLD: f64 = 1e-8;

pub const DESK_P: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const DESK_DELTA: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
pub const DESK_TRIALS: usize = 20;
pub const FULL_TRIALS: usize = 100;
/// Erasure restarts used by the experiment presets.
pub const PRESET_RESTARTS: usize = 10;
/// Outer-iteration cap used by the experiment presets.
pub const PRESET_MAX_OUTER_ITERS: usize = 20;
/// Per-component completion iteration cap used by the experiment presets.
pub const PRESET_LRMC_MAX_ITERS: usize = 100;

const TAG_PROBLEM: u64 = 0;
const TAG_INIT: u64 = 1;
const TAG_SOLVER: u64 = 2;

/// Problem shape and solver settings shared by every trial of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSetup {
    pub d: usize,
    pub n: usize,
    /// Solver settings; `k` and `r` also shape the generated mixtures.
    /// The seed is replaced per trial.
    pub ammc: AmmcOptions,
}

impl TrialSetup {
    pub fn new(d: usize, n: usize, k: usize, r: usize) -> Self {
        Self {
            d,
            n,
            ammc: AmmcOptions::new(k, r),
        }
    }

    /// `d = n = 100`, `r = 5`, `K = 2`, with erasure restarts and tighter
    /// iteration caps.
    pub fn preset() -> Self {
        let mut setup = Self::new(100, 100, 2, 5);
        setup.ammc.restarts = PRESET_RESTARTS;
        setup.ammc.max_outer_iters = PRESET_MAX_OUTER_ITERS;
        setup.ammc.lrmc.max_iters = PRESET_LRMC_MAX_ITERS;
        setup
    }
}

/// Outcome of one synthetic recovery, one JSON object per line in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub p: f64,
    pub delta: f64,
    pub seed: u64,
    pub cell: usize,
    pub trial: usize,
    /// After optimal component matching; empty when the trial errored.
    pub per_component_error: Vec<f64>,
    pub max_error: Option<f64>,
    pub success: bool,
    pub outer_iters: usize,
    pub converged: bool,
    pub cycle_detected: bool,
    pub assignment_changes: Vec<usize>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Generates a mixture from `seed`, perturbs its true bases to distance
/// `delta`, runs AMMC and scores the result. Failures are recorded in the
/// returned record.
pub fn run_trial(setup: &TrialSetup, p: f64, delta: f64, seed: u64, cell: usize, trial: usize, timed: bool) -> TrialRecord {
    let start = Instant::now();
    let mut rec = TrialRecord {
        d: setup.d,
        n: setup.n,
        r: setup.ammc.r,
        k: setup.ammc.k,
        p,
        delta,
        seed,
        cell,
        trial,
        per_component_error: Vec::new(),
        max_error: None,
        success: false,
        outer_iters: 0,
        converged: false,
        cycle_detected: false,
        assignment_changes: Vec::new(),
        error: None,
        wall_time: None,
    };
    if let Err(e) = trial_body(setup, &mut rec) {
        rec.error = Some(e.to_string());
    }
    if timed {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    rec
}

fn trial_body(setup: &TrialSetup, rec: &mut TrialRecord) -> Result<()> {
    let problem = generate_mixture(&SynthConfig {
        d: setup.d,
        n: setup.n,
        r: setup.ammc.r,
        k: setup.ammc.k,
        p: rec.p,
        delta: rec.delta,
        seed: derive_seed(rec.seed, &[TAG_PROBLEM]),
    })?;
    let init = perturb_subspaces(&true_bases(&problem), rec.delta, derive_seed(rec.seed, &[TAG_INIT]))?;
    let opts = AmmcOptions {
        seed: derive_seed(rec.seed, &[TAG_SOLVER]),
        ..setup.ammc.clone()
    };
    let run = run_ammc(problem.observed(), &init, &opts)?;
    rec.outer_iters = run.iterations;
    rec.converged = run.converged;
    rec.cycle_detected = run.flags.cycle_detected;
    rec.assignment_changes = run.history;
    let matching = match_components(problem.truth(), &run.state.completions)?;
    let worst = matching.max_error();
    rec.success = worst < SUCCESS_THRESHOLD;
    rec.max_error = Some(worst);
    rec.per_component_error = matching.errors;
    Ok(())
}

/// Success rates over a `p × δ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub p_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub trials_per_cell: usize,
    /// `success_rate[i][j]` for `p_values[i]` and `delta_values[j]`.
    pub success_rate: Vec<Vec<f64>>,
}

pub const CSV_HEADER: &str = "p,delta,success_rate";

impl PhaseGrid {
    pub fn rate(&self, p_index: usize, delta_index: usize) -> f64 {
        self.success_rate[p_index][delta_index]
    }

    /// One row per cell, `p` outer and `δ` inner.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for (i, &p) in self.p_values.iter().enumerate() {
            for (j, &delta) in self.delta_values.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    format_value(p),
                    format_value(delta),
                    format_value(self.success_rate[i][j])
                ));
            }
        }
        out
    }

    pub fn from_csv(text: &str, trials_per_cell: usize) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(MmcError::Parse {
                    line: 1,
                    msg: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut cells = Vec::new();
        for (idx, line) in lines {
            let parse_err = |msg: String| MmcError::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
            }
            let mut vals = [0.0; 3];
            for (v, f) in vals.iter_mut().zip(&fields) {
                *v = f.parse().map_err(|_| parse_err(format!("bad number `{f}`")))?;
            }
            cells.push(vals);
        }
        let mut p_values: Vec<f64> = Vec::new();
        let mut delta_values: Vec<f64> = Vec::new();
        for c in &cells {
            if !p_values.contains(&c[0]) {
                p_values.push(c[0]);
            }
            if !delta_values.contains(&c[1]) {
                delta_values.push(c[1]);
            }
        }
        check_grid_axis("p", &p_values)?;
        check_grid_axis("delta", &delta_values)?;
        if cells.len() != p_values.len() * delta_values.len() {
            return Err(MmcError::Parse {
                line: 0,
                msg: format!(
                    "{} rows for a {}x{} grid",
                    cells.len(),
                    p_values.len(),
                    delta_values.len()
                ),
            });
        }
        let mut success_rate = vec![vec![f64::NAN; delta_values.len()]; p_values.len()];
        for c in &cells {
            let i = p_values.iter().position(|&p| p == c[0]).unwrap();
            let j = delta_values.iter().position(|&d| d == c[1]).unwrap();
            if !success_rate[i][j].is_nan() {
                return Err(MmcError::Parse {
                    line: 0,
                    msg: format!("duplicate cell p={} delta={}", c[0], c[1]),
                });
            }
            if !(0.0..=1.0).contains(&c[2]) {
                return Err(MmcError::Parse {
                    line: 0,
                    msg: format!("success rate {} outside [0, 1]", c[2]),
                });
            }
            success_rate[i][j] = c[2];
        }
        Ok(Self {
            p_values,
            delta_values,
            trials_per_cell,
            success_rate,
        })
    }

    /// Cells `(i₁, i₂, j)` with `p[i₂] > p[i₁]` whose rate drops by more than `slack`.
    pub fn monotone_violations(&self, slack: f64) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.delta_values.len() {
            for i1 in 0..self.p_values.len() {
                for i2 in i1 + 1..self.p_values.len() {
                    if self.rate(i2, j) < self.rate(i1, j) - slack {
                        out.push((i1, i2, j));
                    }
                }
            }
        }
        out
    }
}

fn check_grid_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(MmcError::InvalidParameter(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(MmcError::InvalidParameter(format!("{name} values must lie in [0, 1]")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MmcError::InvalidParameter(format!("{name} values must be strictly ascending")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub grid: PhaseGrid,
    /// Cell-major, trial-minor.
    pub records: Vec<TrialRecord>,
}

/// Runs `trials` independent recoveries in every `(p, δ)` cell on
/// `workers` threads. Trial `t` of cell `c` uses seed
/// `derive_seed(seed, [c, t])`, so the output does not depend on `workers`.
pub fn run_phase_grid(
    setup: &TrialSetup,
    p_values: &[f64],
    delta_values: &[f64],
    trials: usize,
    seed: u64,
    workers: usize,
    timed: bool,
) -> Result<PhaseRun> {
    check_grid_axis("p", p_values)?;
    check_grid_axis("delta", delta_values)?;
    if trials == 0 || workers == 0 {
        return Err(MmcError::InvalidParameter("trials and workers must be positive".into()));
    }
    setup.ammc.validate()?;
    let nd = delta_values.len();
    let jobs: Vec<(usize, usize)> = (0..p_values.len() * nd)
        .flat_map(|cell| (0..trials).map(move |t| (cell, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MmcError::Precondition(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, t)| {
                let (p, delta) = (p_values[cell / nd], delta_values[cell % nd]);
                let trial_seed = derive_seed(seed, &[cell as u64, t as u64]);
                run_trial(setup, p, delta, trial_seed, cell, t, timed)
            })
            .collect()
    });
    let mut success_rate = vec![vec![0.0; nd]; p_values.len()];
    for (cell, chunk) in records.chunks(trials).enumerate() {
        let wins = chunk.iter().filter(|r| r.success).count();
        success_rate[cell / nd][cell % nd] = wins as f64 / trials as f64;
    }
    Ok(PhaseRun {
        grid: PhaseGrid {
            p_values: p_values.to_vec(),
            delta_values: delta_values.to_vec(),
            trials_per_cell: trials,
            success_rate,
        },
        records,
    })
}

/// One JSON object per line.
pub fn to_json_lines(records: &[TrialRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("trial records serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrialSetup {
        let mut s = TrialSetup::new(40, 40, 2, 2);
        s.ammc.restarts = 10;
        s
    }

    #[test]
    fn csv_round_trip() {
        let grid = PhaseGrid {
            p_values: vec![0.2, 0.6, 1.0],
            delta_values: vec![0.0, 0.3],
            trials_per_cell: 20,
            success_rate: vec![vec![0.0, 0.05], vec![0.55, 0.3], vec![1.0, 0.95]],
        };
        let text = grid.to_csv();
        assert!(text.starts_with("p,delta,success_rate\n0.2,0.0,0.0\n0.2,0.3,0.05\n0.6,0.0,0.55\n"));
        let back = PhaseGrid::from_csv(&text, 20).unwrap();
        assert_eq!(back, grid);
        assert_eq!(back.to_csv(), text);
        assert!(PhaseGrid::from_csv("p,delta\n", 1).is_err());
        assert!(PhaseGrid::from_csv("p,delta,success_rate\n0.2,0,1.5\n", 1).is_err());
    }

    #[test]
    fn monotone_violations_respect_slack() {
        let grid = PhaseGrid {
            p_values: vec![0.2, 0.6],
            delta_values: vec![0.0],
            trials_per_cell: 10,
            success_rate: vec![vec![0.5], vec![0.4]],
        };
        assert!(grid.monotone_violations(0.15).is_empty());
        assert_eq!(grid.monotone_violations(0.05), vec![(0, 1, 0)]);
    }

    #[test]
    fn grid_validation() {
        let s = small();
        assert!(run_phase_grid(&s, &[0.5, 0.2], &[0.0], 1, 0, 1, false).is_err());
        assert!(run_phase_grid(&s, &[0.5], &[], 1, 0, 1, false).is_err());
        assert!(run_phase_grid(&s, &[1.5], &[0.0], 1, 0, 1, false).is_err());
        assert!(run_phase_grid(&s, &[0.5], &[0.0], 0, 0, 1, false).is_err());
    }

    #[test]
    fn nothing_observed_never_succeeds() {
        let run = run_phase_grid(&small(), &[0.0], &[0.0], 3, 9, 1, false).unwrap();
        assert_eq!(run.grid.rate(0, 0), 0.0);
        assert_eq!(run.records.len(), 3);
        assert!(run.records.iter().all(|r| !r.success));
    }

    #[test]
    fn full_data_oracle_init_succeeds() {
        let run = run_phase_grid(&small(), &[1.0], &[0.0], 4, 1, 1, false).unwrap();
        assert!(run.grid.rate(0, 0) >= 0.75, "{:?}", run.records);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let s = small();
        let a = run_phase_grid(&s, &[0.6, 1.0], &[0.0, 0.2], 2, 42, 1, false).unwrap();
        let b = run_phase_grid(&s, &[0.6, 1.0], &[0.0, 0.2], 2, 42, 3, false).unwrap();
        assert_eq!(a.grid.to_csv(), b.grid.to_csv());
        assert_eq!(to_json_lines(&a.records), to_json_lines(&b.records));
        let c = run_phase_grid(&s, &[0.6, 1.0], &[0.0, 0.2], 2, 43, 1, false).unwrap();
        assert_ne!(to_json_lines(&a.records), to_json_lines(&c.records));
    }

    #[test]
    fn records_serialize_without_timings_by_default() {
        let rec = run_trial(&small(), 1.0, 0.0, 5, 0, 0, false);
        let line = serde_json::to_string(&rec).unwrap();
        assert!(!line.contains("wall_time"));
        let back: TrialRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
        let timed = run_trial(&small(), 1.0, 0.0, 5, 0, 0, true);
        assert!(timed.wall_time.is_some());
    }
}
