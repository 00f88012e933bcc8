use rayon::prelude::*;

use super::{count_nonzero_rows, DaggerChecker, DaggerInstance, PatternReport, Witness};
use crate::error::Result;

/// Polynomial-time check of the column-surplus condition.
///
/// For an anchor column `a` and an excluded column `x`, a bipartite
/// b-matching in which `a` may take `r + 1` rows and every other column one
/// row saturates all columns except `x` exactly when every `S ∌ x` has
/// `|N(S)| ≥ |S| + r` if `a ∈ S`, and `|N(S)| ≥ |S|` otherwise. Fixing one
/// column `v`, the pairs `(v, x)` for all `x ≠ v` and `(a, v)` for all
/// `a ≠ v` cover every nonempty proper subset, so `2(c − 1)` matchings
/// decide the condition. Each one is warm-started from a single maximum
/// matching of the whole pattern, leaving only about `r` augmentations.
///
/// When an augmentation fails, the columns reached by the search form a
/// set `S` whose neighbourhood is covered by the rows it already holds,
/// which gives `|N(S)| < |S| + r`: that set is the witness.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flow;

impl Flow {
    pub const NAME: &'static str = "flow";
}

struct Graph {
    adj: Vec<Vec<usize>>,
    rows: usize,
}

#[derive(Clone)]
struct Matching {
    owner: Vec<Option<usize>>,
    load: Vec<usize>,
}

impl Graph {
    /// Tries to give column `start` one more row. On failure returns the
    /// columns reached.
    fn augment(
        &self,
        m: &mut Matching,
        start: usize,
        excluded: Option<usize>,
    ) -> std::result::Result<(), Vec<usize>> {
        let c = self.adj.len();
        let mut came_from: Vec<Option<(usize, usize)>> = vec![None; c];
        let mut visited = vec![false; c];
        visited[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(col) = queue.pop_front() {
            for &row in &self.adj[col] {
                match m.owner[row] {
                    None => {
                        let mut cur = col;
                        let mut take = row;
                        loop {
                            m.owner[take] = Some(cur);
                            match came_from[cur] {
                                Some((given, from)) => {
                                    take = given;
                                    cur = from;
                                }
                                None => break,
                            }
                        }
                        m.load[start] += 1;
                        return Ok(());
                    }
                    Some(w) if w != col && !visited[w] && Some(w) != excluded => {
                        visited[w] = true;
                        came_from[w] = Some((row, col));
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        Err((0..c).filter(|&w| visited[w]).collect())
    }

    fn base_matching(&self) -> Matching {
        let mut m = Matching {
            owner: vec![None; self.rows],
            load: vec![0; self.adj.len()],
        };
        for col in 0..self.adj.len() {
            let _ = self.augment(&mut m, col, None);
        }
        m
    }

    /// Returns a violating column set for the (anchor, excluded) pair, if any.
    fn check_pair(&self, base: &Matching, anchor: usize, excluded: usize, r: usize) -> Option<Vec<usize>> {
        let mut m = base.clone();
        for owner in m.owner.iter_mut() {
            if *owner == Some(excluded) {
                *owner = None;
            }
        }
        m.load[excluded] = 0;
        for col in 0..self.adj.len() {
            if col == excluded {
                continue;
            }
            let cap = if col == anchor { r + 1 } else { 1 };
            while m.load[col] < cap {
                if let Err(reached) = self.augment(&mut m, col, Some(excluded)) {
                    return Some(reached);
                }
            }
        }
        None
    }
}

impl DaggerChecker for Flow {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn check(&self, inst: &DaggerInstance) -> Result<PatternReport> {
        if let Some(report) = super::single_column_verdict(inst, Self::NAME) {
            return Ok(report);
        }
        let mask = inst.mask();
        let (d, c) = mask.shape();
        let r = inst.rank();
        // Singletons are proper subsets once c ≥ 2.
        if let Some(j) = (0..c).find(|&j| mask.column_count(j) < r + 1) {
            return Ok(PatternReport::fail(
                Self::NAME,
                Witness::Violation {
                    columns: vec![j],
                    nonzero_rows: mask.column_count(j),
                },
            ));
        }
        let graph = Graph {
            adj: (0..c).map(|j| mask.column_support(j)).collect(),
            rows: d,
        };
        let base = graph.base_matching();
        let pivot = 0;
        let pairs: Vec<(usize, usize)> = (1..c)
            .map(|x| (pivot, x))
            .chain((1..c).map(|a| (a, pivot)))
            .collect();
        let violation = pairs
            .par_iter()
            .find_map_first(|&(anchor, excluded)| graph.check_pair(&base, anchor, excluded, r));
        Ok(match violation {
            Some(columns) => {
                let nonzero_rows = count_nonzero_rows(mask, &columns);
                debug_assert!(nonzero_rows < columns.len() + r);
                PatternReport::fail(
                    Self::NAME,
                    Witness::Violation {
                        columns,
                        nonzero_rows,
                    },
                )
            }
            None => PatternReport::pass(Self::NAME, Witness::None),
        })
    }
}
