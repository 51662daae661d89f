//! Exhaustive reference solver for small instances.

use crate::evaluation::{evaluate, Evaluation, PenaltyShape, Schedule};
use crate::instance::Instance;

pub const DEFAULT_ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    /// Cheapest feasible roster; ties go to the lexicographically smallest.
    Optimal { schedule: Schedule, evaluation: Evaluation, enumerated: u128 },
    Infeasible { enumerated: u128 },
    TooLarge { space: u128 },
}

impl OracleOutcome {
    pub fn optimum(&self) -> Option<u64> {
        match self {
            Self::Optimal { evaluation, .. } => Some(evaluation.pref_cost),
            _ => None,
        }
    }
}

/// Enumerates every roster when the search space is at most `limit`.
pub fn oracle_solve(inst: &Instance, limit: u128) -> OracleOutcome {
    let space = inst.search_space();
    if space > limit {
        return OracleOutcome::TooLarge { space };
    }
    let n = inst.n();
    // each nurse's options in ascending id order, so the odometer below
    // visits rosters lexicographically and the first optimum found wins
    let options: Vec<Vec<usize>> = inst
        .nurses
        .iter()
        .map(|nurse| {
            let mut f = nurse.feasible.clone();
            f.sort_unstable();
            f
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Schedule, Evaluation)> = None;
    let mut enumerated = 0u128;
    loop {
        let schedule = Schedule::new(idx.iter().zip(&options).map(|(&k, f)| f[k]).collect());
        // feasible totals do not depend on the weight
        let ev = evaluate(inst, &schedule, 1.0, PenaltyShape::Linear);
        enumerated += 1;
        if ev.feasible && best.as_ref().map_or(true, |(_, b)| ev.pref_cost < b.pref_cost) {
            best = Some((schedule, ev));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return match best {
                    Some((schedule, evaluation)) => OracleOutcome::Optimal { schedule, evaluation, enumerated },
                    None => OracleOutcome::Infeasible { enumerated },
                };
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
