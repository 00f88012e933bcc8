use super::{DaggerChecker, DaggerInstance, PatternReport, Witness};
use crate::error::{MmcError, Result};

/// Enumerates every nonempty proper column subset, smallest first.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exhaustive;

impl Exhaustive {
    pub const NAME: &'static str = "exhaustive";
    /// Largest column count accepted; beyond this use the flow checker.
    pub const MAX_COLUMNS: usize = 22;
}

impl DaggerChecker for Exhaustive {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn check(&self, inst: &DaggerInstance) -> Result<PatternReport> {
        let mask = inst.mask();
        let (d, c) = mask.shape();
        let r = inst.rank();
        if c > Self::MAX_COLUMNS {
            return Err(MmcError::Precondition(format!(
                "{c} columns exceeds the exhaustive limit of {}; use the flow method",
                Self::MAX_COLUMNS
            )));
        }
        if let Some(report) = super::single_column_verdict(inst, Self::NAME) {
            return Ok(report);
        }
        let words = d.div_ceil(64);
        let sets: Vec<Vec<u64>> = (0..c)
            .map(|j| {
                let mut bits = vec![0u64; words];
                for i in mask.column_support(j) {
                    bits[i / 64] |= 1 << (i % 64);
                }
                bits
            })
            .collect();
        let full: u64 = (1u64 << c) - 1;
        let mut union = vec![0u64; words];
        for size in 1..c {
            // Gosper's hack walks all c-bit masks with `size` ones.
            let mut s: u64 = (1u64 << size) - 1;
            while s < full {
                union.iter_mut().for_each(|w| *w = 0);
                let mut rest = s;
                while rest != 0 {
                    let j = rest.trailing_zeros() as usize;
                    for (u, b) in union.iter_mut().zip(&sets[j]) {
                        *u |= b;
                    }
                    rest &= rest - 1;
                }
                let rows: usize = union.iter().map(|w| w.count_ones() as usize).sum();
                if rows < size + r {
                    let columns: Vec<usize> = (0..c).filter(|&j| s >> j & 1 == 1).collect();
                    return Ok(PatternReport::fail(
                        Self::NAME,
                        Witness::Violation {
                            columns,
                            nonzero_rows: rows,
                        },
                    ));
                }
                let low = s & s.wrapping_neg();
                let ripple = s + low;
                s = (((ripple ^ s) >> 2) / low) | ripple;
            }
        }
        Ok(PatternReport::pass(Self::NAME, Witness::None))
    }
}
