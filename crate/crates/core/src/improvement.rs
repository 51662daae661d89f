//! Fitness shaping and local improvement of the top roster.
//!
//! Balanced rosters (a surplus and a shortage on the same side of the
//! day/night split) can usually be repaired by moving nurses within days or
//! within nights; unbalanced ones cannot. Incentives shift the ranking score
//! by more than the population's fitness spread, so every balanced roster
//! outranks every unbalanced one while reported objectives stay unshaped.

use crate::evaluation::{coverage_of, evaluate, Balance, Evaluation, GradeSet, PenaltyShape, Schedule};
use crate::instance::{Instance, PatternKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwapScope {
    #[default]
    TopOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IncentiveConfig {
    pub incentive: bool,
    pub disincentive: bool,
    pub local_search: bool,
    pub swaps: bool,
    pub special_swaps: bool,
    pub swap_scope: SwapScope,
}

impl IncentiveConfig {
    pub fn has_hooks(&self) -> bool {
        self.local_search || self.swaps || self.special_swaps
    }
}

/// Ranking score for a fitness value; `spread` is the max minus min
/// fitness in the population.
pub fn shaped_score(fitness: f64, balance: Balance, spread: f64, cfg: &IncentiveConfig) -> f64 {
    let bonus = spread + 1.0;
    match balance {
        Balance::Balanced if cfg.incentive => fitness - bonus,
        Balance::Unbalanced if cfg.disincentive => fitness + bonus,
        _ => fitness,
    }
}

pub fn ranking_score(ev: &Evaluation, pop_spread: f64, cfg: &IncentiveConfig) -> f64 {
    shaped_score(ev.total, ev.balance, pop_spread, cfg)
}

/// Coverage counts kept up to date under single-nurse moves.
struct Incremental<'a> {
    inst: &'a Instance,
    shape: PenaltyShape,
    weight: f64,
    counts: Vec<u32>,
    pref: u64,
    shaped: u64,
}

impl<'a> Incremental<'a> {
    fn new(inst: &'a Instance, s: &Schedule, weight: f64, shape: PenaltyShape) -> Self {
        let ev = evaluate(inst, s, weight, shape);
        let counts = coverage_of(inst, s).into_counts();
        Self { inst, shape, weight, counts, pref: ev.pref_cost, shaped: ev.shortfall_sum(GradeSet::full(inst.p()), shape) }
    }

    fn cost(&self, sf: u32) -> u64 {
        match self.shape {
            PenaltyShape::Linear => u64::from(sf),
            PenaltyShape::Quadratic => u64::from(sf) * u64::from(sf),
        }
    }

    fn total_of(&self, pref: u64, shaped: u64) -> f64 {
        pref as f64 + self.weight * shaped as f64
    }

    fn total(&self) -> f64 {
        self.total_of(self.pref, self.shaped)
    }

    /// `(pref, shaped shortfall)` after moving nurse `i` from `from` to `to`.
    fn after_move(&self, i: usize, from: usize, to: usize) -> (u64, u64) {
        let inst = self.inst;
        let p = inst.p();
        let g = inst.nurses[i].grade;
        let pref = self.pref - u64::from(inst.cost(i, from)) + u64::from(inst.cost(i, to));
        let (a, b) = (inst.pattern(from), inst.pattern(to));
        let mut shaped = self.shaped as i64;
        for k in 0..a.cover.len() {
            let delta: i64 = match (a.cover[k], b.cover[k]) {
                (true, false) => -1,
                (false, true) => 1,
                _ => continue,
            };
            for s in g..=p {
                let idx = k * p + (s - 1);
                let r = inst.demand[idx];
                let old = self.counts[idx];
                let new = (i64::from(old) + delta) as u32;
                shaped += self.cost(r.saturating_sub(new)) as i64 - self.cost(r.saturating_sub(old)) as i64;
            }
        }
        (pref, shaped as u64)
    }

    fn apply(&mut self, i: usize, from: usize, to: usize) {
        let (pref, shaped) = self.after_move(i, from, to);
        let p = self.inst.p();
        let g = self.inst.nurses[i].grade;
        let (a, b) = (self.inst.pattern(from), self.inst.pattern(to));
        for k in 0..a.cover.len() {
            match (a.cover[k], b.cover[k]) {
                (true, false) => self.counts[k * p + g - 1..(k + 1) * p].iter_mut().for_each(|c| *c -= 1),
                (false, true) => self.counts[k * p + g - 1..(k + 1) * p].iter_mut().for_each(|c| *c += 1),
                _ => {}
            }
        }
        self.pref = pref;
        self.shaped = shaped;
    }
}

/// First-fit descending hill climb over single-nurse pattern changes.
///
/// Nurses are visited in descending order of their cost contribution: their
/// own preference cost plus the weighted shortfall on every demand row they
/// count towards. Each nurse's alternatives are tried in ascending
/// preference cost (then id) and the first one that strictly lowers the
/// total is taken. Passes repeat until one makes no change.
pub fn local_search_firstfit(inst: &Instance, s: &Schedule, weight: f64, shape: PenaltyShape) -> Schedule {
    let mut cur = s.clone();
    let mut state = Incremental::new(inst, &cur, weight, shape);
    let p = inst.p();
    let candidates: Vec<Vec<usize>> = inst
        .nurses
        .iter()
        .enumerate()
        .map(|(i, nurse)| {
            let mut c = nurse.feasible.clone();
            c.sort_by_key(|&j| (inst.cost(i, j), j));
            c
        })
        .collect();

    loop {
        let ev = evaluate(inst, &cur, weight, shape);
        let row_short: Vec<u64> = (1..=p)
            .map(|s| (1..=crate::instance::SLOTS).map(|k| u64::from(ev.shortfall(k, s))).sum())
            .collect();
        let mut order: Vec<(f64, usize)> = (0..inst.n())
            .map(|i| {
                let g = inst.nurses[i].grade;
                let removable: u64 = row_short[g - 1..].iter().sum();
                (f64::from(inst.cost(i, cur.get(i))) + weight * removable as f64, i)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut changed = false;
        for &(_, i) in &order {
            let from = cur.get(i);
            let current = state.total();
            for &to in &candidates[i] {
                if to == from {
                    continue;
                }
                let (pref, shaped) = state.after_move(i, from, to);
                if state.total_of(pref, shaped) < current {
                    state.apply(i, from, to);
                    cur.set(i, to);
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return cur;
        }
    }
}

/// Swaps patterns between nurses of equal grade and contract whenever the
/// pair's preference cost drops. Coverage is unchanged by construction.
pub fn shift_swap_best(inst: &Instance, s: &Schedule) -> Schedule {
    let mut cur = s.clone();
    let n = inst.n();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&inst.nurses[i], &inst.nurses[j]);
                if a.grade != b.grade || a.hours() != b.hours() {
                    continue;
                }
                let (pi, pj) = (cur.get(i), cur.get(j));
                if pi == pj || !a.can_work(pj) || !b.can_work(pi) {
                    continue;
                }
                let before = inst.cost(i, pi) + inst.cost(j, pj);
                let after = inst.cost(i, pj) + inst.cost(j, pi);
                if after < before {
                    cur.swap(i, j);
                    changed = true;
                }
            }
        }
        if !changed {
            return cur;
        }
    }
}

/// Repairs the state where a nurse with the longer day contract works
/// nights while a same-grade nurse with the shorter day contract (and equal
/// night contract) works days: the short-contract nurse takes over the
/// night pattern and the long-contract nurse moves to its cheapest day
/// pattern. Accepted when the total does not increase; pairs are scanned
/// once in index order.
pub fn special_swap(inst: &Instance, s: &Schedule, weight: f64, shape: PenaltyShape) -> Schedule {
    let mut cur = s.clone();
    let mut total = evaluate(inst, &cur, weight, shape).total;
    let best_day: Vec<Option<usize>> = inst
        .nurses
        .iter()
        .enumerate()
        .map(|(i, nurse)| {
            nurse
                .feasible
                .iter()
                .copied()
                .filter(|&j| inst.pattern(j).kind() == PatternKind::Day)
                .min_by_key(|&j| (inst.cost(i, j), j))
        })
        .collect();

    for a in 0..inst.n() {
        for b in 0..inst.n() {
            let (long, short) = (&inst.nurses[a], &inst.nurses[b]);
            if a == b
                || long.grade != short.grade
                || long.days_required <= short.days_required
                || long.nights_required != short.nights_required
            {
                continue;
            }
            let (night, day) = (cur.get(a), cur.get(b));
            if inst.pattern(night).kind() != PatternKind::Night || inst.pattern(day).kind() != PatternKind::Day {
                continue;
            }
            let Some(new_day) = best_day[a] else { continue };
            if !short.can_work(night) {
                continue;
            }
            let mut cand = cur.clone();
            cand.set(a, new_day);
            cand.set(b, night);
            let t = evaluate(inst, &cand, weight, shape).total;
            if t <= total {
                cur = cand;
                total = t;
            }
        }
    }
    cur
}

/// Runs the enabled hooks in order: local search (balanced rosters only),
/// shift swaps, special swaps.
pub fn apply_hooks(
    inst: &Instance,
    s: &Schedule,
    balance: Balance,
    weight: f64,
    shape: PenaltyShape,
    cfg: &IncentiveConfig,
) -> Schedule {
    let mut cur = s.clone();
    if cfg.local_search && balance == Balance::Balanced {
        cur = local_search_firstfit(inst, &cur, weight, shape);
    }
    if cfg.swaps {
        cur = shift_swap_best(inst, &cur);
    }
    if cfg.special_swaps {
        cur = special_swap(inst, &cur, weight, shape);
    }
    cur
}
