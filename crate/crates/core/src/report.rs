//! Per-run outcome records.

use std::time::Instant;

use crate::evaluation::Schedule;

/// Outcome of one solver run, one CSV row in the ablation output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub instance: String,
    pub seed: u64,
    pub features: String,
    pub feasible: bool,
    /// Lowest preference cost among feasible rosters seen, if any.
    pub best_feasible_total: Option<f64>,
    /// Objective of the final top-ranked roster at the final weight.
    pub best_total: f64,
    pub gen_to_feasible: Option<usize>,
    pub generations: usize,
    pub final_weight: f64,
    pub wall_ms: u64,
    pub best_feasible: Option<Schedule>,
    pub final_best: Schedule,
}

/// Accumulates the best feasible roster over a run.
#[derive(Debug, Clone)]
pub(crate) struct Tracker {
    started: Instant,
    pub best_feasible: Option<(u64, Schedule)>,
    pub first_feasible: Option<usize>,
}

impl Tracker {
    pub fn new() -> Self {
        Self { started: Instant::now(), best_feasible: None, first_feasible: None }
    }

    /// Picks up from a finished run; elapsed time restarts at zero.
    pub fn resume(report: &RunReport) -> Self {
        Self {
            started: Instant::now(),
            best_feasible: report
                .best_feasible_total
                .zip(report.best_feasible.clone())
                .map(|(t, s)| (t as u64, s)),
            first_feasible: report.gen_to_feasible,
        }
    }

    /// Offers a roster with its preference cost; `feasible` refers to the
    /// full model, not a niche view.
    pub fn offer(&mut self, generation: usize, schedule: &Schedule, pref_cost: u64, feasible: bool) {
        if !feasible {
            return;
        }
        self.first_feasible.get_or_insert(generation);
        let better = match &self.best_feasible {
            None => true,
            Some((cost, s)) => pref_cost < *cost || (pref_cost == *cost && schedule < s),
        };
        if better {
            self.best_feasible = Some((pref_cost, schedule.clone()));
        }
    }

    pub fn finish(
        self,
        instance: &str,
        seed: u64,
        generations: usize,
        final_weight: f64,
        final_best: Schedule,
        best_total: f64,
    ) -> RunReport {
        let (best_feasible_total, best_feasible) = match self.best_feasible {
            Some((cost, s)) => (Some(cost as f64), Some(s)),
            None => (None, None),
        };
        RunReport {
            instance: instance.to_string(),
            seed,
            features: String::new(),
            feasible: best_feasible_total.is_some(),
            best_feasible_total,
            best_total,
            gen_to_feasible: self.first_feasible,
            generations,
            final_weight,
            wall_ms: self.started.elapsed().as_millis() as u64,
            best_feasible,
            final_best,
        }
    }
}
