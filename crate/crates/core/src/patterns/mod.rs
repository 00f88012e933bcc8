//! Identifiability checks on sampling patterns.
//!
//! A pattern `Ω'` (d×c) satisfies the column-surplus condition for rank `r`
//! when every nonempty proper subset `S` of its columns touches at least
//! `|S| + r` distinct rows. A component mask is identifiable when `r + 1`
//! disjoint groups of `d − r + 1` of its columns each satisfy it.
//!
//! Two interchangeable checkers are registered: brute-force enumeration
//! (small `c`) and a matching-based polynomial check.

mod exhaustive;
mod flow;

pub use exhaustive::Exhaustive;
pub use flow::Flow;

use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{MmcError, Result};
use crate::model::Mask;
use crate::rng::substream;

/// A column pattern under test.
#[derive(Debug, Clone, PartialEq)]
pub struct DaggerInstance {
    mask: Mask,
    r: usize,
}

impl DaggerInstance {
    pub fn new(mask: Mask, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(MmcError::InvalidParameter("rank must be at least 1".into()));
        }
        Ok(Self { mask, r })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn rank(&self) -> usize {
        self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    None,
    /// Column subset with fewer than `|columns| + r` non-zero rows.
    Violation {
        columns: Vec<usize>,
        nonzero_rows: usize,
    },
    /// `r + 1` disjoint column groups.
    Partition(Vec<Vec<usize>>),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self {
            Witness::None => write!(f, "none"),
            Witness::Violation { columns, .. } => write!(f, "cols:{}", join(columns)),
            Witness::Partition(groups) => write!(
                f,
                "partition:{}",
                groups.iter().map(|g| join(g)).collect::<Vec<_>>().join("|")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternReport {
    pub verdict: Verdict,
    pub witness: Witness,
    pub method: String,
    /// `false` when a failed verdict only means no witness was found.
    pub conclusive: bool,
    pub detail: Option<String>,
}

impl PatternReport {
    pub(crate) fn pass(method: &str, witness: Witness) -> Self {
        Self {
            verdict: Verdict::Pass,
            witness,
            method: method.to_owned(),
            conclusive: true,
            detail: None,
        }
    }

    pub(crate) fn fail(method: &str, witness: Witness) -> Self {
        Self {
            verdict: Verdict::Fail,
            witness,
            method: method.to_owned(),
            conclusive: true,
            detail: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `PASS|FAIL method=<m> witness=<...>`.
    pub fn verdict_line(&self) -> String {
        let v = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        format!("{v} method={} witness={}", self.method, self.witness)
    }
}

pub trait DaggerChecker: Send + Sync {
    fn name(&self) -> &'static str;
    fn check(&self, inst: &DaggerInstance) -> Result<PatternReport>;
}

static CHECKERS: [&dyn DaggerChecker; 2] = [&Exhaustive, &Flow];

pub fn checkers() -> &'static [&'static dyn DaggerChecker] {
    &CHECKERS
}

pub fn checker(name: &str) -> Result<&'static dyn DaggerChecker> {
    CHECKERS
        .iter()
        .copied()
        .find(|c| c.name() == name)
        .ok_or_else(|| MmcError::UnknownStrategy {
            kind: "pattern checker",
            name: name.to_owned(),
            available: CHECKERS.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "),
        })
}

pub fn check_dagger_exhaustive(inst: &DaggerInstance) -> Result<PatternReport> {
    Exhaustive.check(inst)
}

pub fn check_dagger_flow(inst: &DaggerInstance) -> Result<PatternReport> {
    Flow.check(inst)
}

/// Distinct rows touched by `columns`.
pub fn count_nonzero_rows(mask: &Mask, columns: &[usize]) -> usize {
    (0..mask.rows())
        .filter(|&i| columns.iter().any(|&j| mask.get(i, j)))
        .count()
}

/// True when `columns` is a nonempty proper subset violating the surplus condition.
pub fn is_violation(mask: &Mask, r: usize, columns: &[usize]) -> bool {
    !columns.is_empty() && count_nonzero_rows(mask, columns) < columns.len() + r
}

/// A single column has no nonempty proper subsets; it passes when it
/// carries at least `r + 1` samples, the minimum for completing it.
fn single_column_verdict(inst: &DaggerInstance, method: &str) -> Option<PatternReport> {
    let mask = inst.mask();
    if mask.cols() != 1 {
        return None;
    }
    let rows = mask.column_count(0);
    Some(if rows > inst.rank() {
        PatternReport::pass(method, Witness::None)
    } else {
        PatternReport::fail(
            method,
            Witness::Violation {
                columns: vec![0],
                nonzero_rows: rows,
            },
        )
    })
}

fn partition_shape(d: usize, r: usize) -> Result<(usize, usize)> {
    if r == 0 || r >= d {
        return Err(MmcError::InvalidParameter(format!(
            "need 1 ≤ r < d, got r = {r}, d = {d}"
        )));
    }
    Ok((r + 1, d - r + 1))
}

/// Checks that `partition` is `r + 1` disjoint groups of `d − r + 1`
/// in-range columns and that every group passes the flow checker.
pub fn verify_theorem1_partition(mask: &Mask, r: usize, partition: &[Vec<usize>]) -> Result<PatternReport> {
    let (d, n) = mask.shape();
    let (groups, size) = partition_shape(d, r)?;
    let mut problems = Vec::new();
    if partition.len() != groups {
        problems.push(format!("expected {groups} groups, got {}", partition.len()));
    }
    let mut seen = vec![false; n];
    for (t, group) in partition.iter().enumerate() {
        if group.len() != size {
            problems.push(format!("group {t} has {} columns, expected {size}", group.len()));
        }
        for &j in group {
            if j >= n {
                problems.push(format!("group {t} column {j} out of range (n = {n})"));
            } else if seen[j] {
                problems.push(format!("column {j} used more than once"));
            } else {
                seen[j] = true;
            }
        }
    }
    if !problems.is_empty() {
        return Err(MmcError::Precondition(format!(
            "malformed partition: {}",
            problems.join("; ")
        )));
    }
    for (t, group) in partition.iter().enumerate() {
        let sub = DaggerInstance::new(mask.select_columns(group)?, r)?;
        let report = Flow.check(&sub)?;
        if let Witness::Violation {
            columns,
            nonzero_rows,
        } = report.witness
        {
            let mut out = PatternReport::fail(
                Flow::NAME,
                Witness::Violation {
                    columns: columns.iter().map(|&c| group[c]).collect(),
                    nonzero_rows,
                },
            );
            out.detail = Some(format!("group {t} violates the surplus condition"));
            return Ok(out);
        }
    }
    Ok(PatternReport::pass(Flow::NAME, Witness::Partition(partition.to_vec())))
}

/// Heuristic search for a passing partition: one greedy attempt (columns
/// by descending support, dealt round-robin) followed by `budget` random
/// ones. Failing to find a witness does not prove the mask unidentifiable;
/// such reports are marked inconclusive.
pub fn search_theorem1_partition(mask: &Mask, r: usize, budget: usize, seed: u64) -> Result<PatternReport> {
    let (d, n) = mask.shape();
    let (groups, size) = partition_shape(d, r)?;
    let need = groups * size;
    if n < need {
        return Err(MmcError::Precondition(format!(
            "need n ≥ (r+1)(d−r+1) = {need} columns, mask has {n}"
        )));
    }
    let counts: Vec<usize> = (0..n).map(|j| mask.column_count(j)).collect();
    let mut eligible: Vec<usize> = (0..n).filter(|&j| counts[j] > r).collect();
    if eligible.len() < need {
        return Err(MmcError::Precondition(format!(
            "only {} columns carry at least r+1 = {} samples; (r+1)(d−r+1) = {need} are needed",
            eligible.len(),
            r + 1
        )));
    }

    let mut attempts: Vec<Vec<Vec<usize>>> = Vec::with_capacity(budget + 1);
    let mut greedy = eligible.clone();
    greedy.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut dealt = vec![Vec::with_capacity(size); groups];
    for (pos, &j) in greedy[..need].iter().enumerate() {
        dealt[pos % groups].push(j);
    }
    attempts.push(dealt);

    let mut best: Option<(usize, Vec<Vec<usize>>)> = None;
    let total = budget + 1;
    for attempt in 0..total {
        let partition = if attempt == 0 {
            attempts.pop().expect("greedy attempt")
        } else {
            let mut rng = substream(seed, &[attempt as u64]);
            eligible.shuffle(&mut rng);
            eligible[..need].chunks(size).map(|c| c.to_vec()).collect()
        };
        let mut passing = 0;
        for group in &partition {
            let sub = DaggerInstance::new(mask.select_columns(group)?, r)?;
            if Flow.check(&sub)?.passed() {
                passing += 1;
            } else {
                break;
            }
        }
        if passing == groups {
            let mut report = PatternReport::pass("search+flow", Witness::Partition(partition));
            report.detail = Some(format!("found on attempt {} of {total}", attempt + 1));
            return Ok(report);
        }
        if best.as_ref().is_none_or(|(b, _)| passing > *b) {
            best = Some((passing, partition));
        }
    }
    let (passing, partition) = best.expect("at least one attempt");
    let mut report = PatternReport::fail("search+flow", Witness::Partition(partition));
    report.conclusive = false;
    report.detail = Some(format!(
        "no passing partition in {total} attempts (best attempt: {passing} of {groups} leading groups passed); this does not prove the pattern unidentifiable"
    ));
    Ok(report)
}

/// Sampling-rate bound for identifiability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Bound {
    pub p: f64,
    /// `p > 1`: the bound says nothing at this size.
    pub vacuous: bool,
}

/// `(2/d)·max{2r, 12(ln(d/ε) + 1)}`, requiring `r ≤ d/6` and `ε ∈ (0, 1)`.
pub fn theorem2_min_p(d: usize, r: usize, eps: f64) -> Result<Theorem2Bound> {
    check_bound_args(d, r, eps)?;
    let p = 2.0 / d as f64 * lemma3_threshold(d, r, eps);
    Ok(Theorem2Bound { p, vacuous: p > 1.0 })
}

fn lemma3_threshold(d: usize, r: usize, eps: f64) -> f64 {
    (2.0 * r as f64).max(12.0 * ((d as f64 / eps).ln() + 1.0))
}

fn check_bound_args(d: usize, r: usize, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MmcError::InvalidParameter(format!("epsilon = {eps} outside (0, 1)")));
    }
    if d == 0 || r == 0 {
        return Err(MmcError::InvalidParameter("d and r must be positive".into()));
    }
    if 6 * r > d {
        return Err(MmcError::Precondition(format!(
            "the sampling bound requires r ≤ d/6 (r = {r}, d = {d})"
        )));
    }
    Ok(())
}

/// Per-column sample count `⌈max{2r, 12(ln(d/ε) + 1)}⌉` for the fixed-m model.
pub fn lemma3_min_m(d: usize, r: usize, eps: f64) -> Result<usize> {
    check_bound_args(d, r, eps)?;
    Ok(lemma3_threshold(d, r, eps).ceil() as usize)
}
