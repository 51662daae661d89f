//! Single-population genetic algorithm.
//!
//! A roster is coded as one pattern index per nurse, so every child of
//! crossover and mutation still gives each nurse exactly one admissible
//! pattern. Coverage is handled by the penalty term only.
//!
//! Each generation: refresh the penalty weight from the current best
//! member, re-score and re-rank everyone, breed the non-elite part of the
//! next generation with linear rank selection, crossover and mutation, then
//! merge it with the elite and optionally run the improvement hooks on the
//! top roster.

use rand::distributions::{Distribution, WeightedIndex};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluation::{evaluate, random_schedule, Evaluation, GradeSet, PenaltyShape, Schedule};
use crate::improvement::{self, IncentiveConfig};
use crate::instance::Instance;
use crate::report::{RunReport, Tracker};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("{k}-point crossover needs fewer cuts than the {n} genes")]
    TooManyCuts { k: usize, n: usize },
    #[error("need {needed} offspring to refill the population, got {got}")]
    InsufficientOffspring { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossoverMode {
    KPoint(usize),
    Uniform,
    /// Whole grade segments, each copied from one parent.
    GradeBased,
    /// Grade-based with the given probability, uniform otherwise.
    Mix(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    Static(f64),
    /// `alpha * q` while the best roster violates `q` rows, `v` once it is feasible.
    Dynamic { alpha: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub crossover: CrossoverMode,
    /// Probability that an offspring receives one gene redraw.
    pub mutation_rate: f64,
    pub elite_fraction: f64,
    pub penalty_shape: PenaltyShape,
    pub weight_mode: WeightMode,
    /// Linear ranking pressure in `[1, 2]`.
    pub selection_pressure: f64,
    pub improvement: IncentiveConfig,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            pop_size: 1000,
            generations: 100,
            crossover: CrossoverMode::Uniform,
            mutation_rate: 0.05,
            elite_fraction: 0.1,
            penalty_shape: PenaltyShape::Linear,
            weight_mode: WeightMode::Static(10.0),
            selection_pressure: 2.0,
            improvement: IncentiveConfig::default(),
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self, inst: &Instance) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::Config(msg));
        if self.pop_size < 2 {
            return bad(format!("population size {} must be at least 2", self.pop_size));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate {} outside [0, 1]", self.mutation_rate));
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return bad(format!("elite fraction {} outside [0, 1)", self.elite_fraction));
        }
        if !(1.0..=2.0).contains(&self.selection_pressure) {
            return bad(format!("selection pressure {} outside [1, 2]", self.selection_pressure));
        }
        match self.weight_mode {
            WeightMode::Static(w) if !(w >= 0.0) => return bad(format!("static weight {w} is negative")),
            WeightMode::Dynamic { alpha, v } if !(alpha > 0.0 && v > 0.0) => {
                return bad(format!("dynamic weight needs alpha > 0 and v > 0, got {alpha}, {v}"))
            }
            _ => {}
        }
        match self.crossover {
            CrossoverMode::KPoint(k) if k >= inst.n() => {
                return Err(EngineError::TooManyCuts { k, n: inst.n() })
            }
            CrossoverMode::Mix(f) if !(0.0..=1.0).contains(&f) => {
                return bad(format!("grade fraction {f} outside [0, 1]"))
            }
            _ => {}
        }
        if inst.n() == 0 {
            return bad("instance has no nurses".into());
        }
        Ok(())
    }
}

/// Penalty weight from the number of rows violated by the top roster.
pub fn dynamic_weight(q_best: usize, alpha: f64, v: f64) -> f64 {
    if q_best > 0 {
        alpha * q_best as f64
    } else {
        v
    }
}

impl WeightMode {
    pub fn weight_for(self, q_best: usize) -> f64 {
        match self {
            Self::Static(w) => w,
            Self::Dynamic { alpha, v } => dynamic_weight(q_best, alpha, v),
        }
    }
}

/// Which part of the model a population optimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Full,
    /// Preference cost of the nurses in these grades plus the shortfall on
    /// these grades' demand rows.
    Grades(GradeSet),
}

impl Objective {
    /// Fitness of an evaluation whose `total` is current for `weight`.
    pub fn fitness(self, ev: &Evaluation, weight: f64, shape: PenaltyShape) -> f64 {
        match self {
            Self::Full => ev.total,
            Self::Grades(g) => ev.pref_of(g) as f64 + weight * ev.shortfall_sum(g, shape) as f64,
        }
    }

    pub fn violations(self, ev: &Evaluation) -> usize {
        match self {
            Self::Full => ev.q,
            Self::Grades(g) => ev.violations(g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scoring {
    pub objective: Objective,
    pub shape: PenaltyShape,
    pub incentives: IncentiveConfig,
}

impl Scoring {
    pub fn full(cfg: &EngineConfig) -> Self {
        Self { objective: Objective::Full, shape: cfg.penalty_shape, incentives: cfg.improvement }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub schedule: Schedule,
    pub eval: Evaluation,
    /// Objective value under the population's view.
    pub fitness: f64,
    /// Fitness after balance shaping; used only for ranking.
    pub score: f64,
    /// Violated rows under the population's view.
    pub violations: usize,
    birth: u64,
}

/// Members sorted best first.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Member>,
    pub generation: usize,
    pub current_weight: f64,
    pub scoring: Scoring,
    next_birth: u64,
    last_improved: Option<Schedule>,
}

impl Population {
    pub fn from_schedules(inst: &Instance, schedules: Vec<Schedule>, weight: f64, scoring: Scoring) -> Self {
        let mut pop = Self {
            members: Vec::with_capacity(schedules.len()),
            generation: 0,
            current_weight: weight,
            scoring,
            next_birth: 0,
            last_improved: None,
        };
        let members: Vec<Member> = schedules.into_iter().map(|s| pop.member(inst, s)).collect();
        pop.members = members;
        pop.rescore(weight);
        pop
    }

    /// Random rosters. Under a dynamic weight the starting weight is taken
    /// from the least-violating member.
    pub fn random<R: Rng + ?Sized>(
        inst: &Instance,
        size: usize,
        mode: WeightMode,
        scoring: Scoring,
        rng: &mut R,
    ) -> Self {
        let schedules: Vec<Schedule> = (0..size).map(|_| random_schedule(inst, rng)).collect();
        Self::seeded(inst, schedules, mode, scoring)
    }

    pub(crate) fn seeded(inst: &Instance, schedules: Vec<Schedule>, mode: WeightMode, scoring: Scoring) -> Self {
        let mut pop = Self::from_schedules(inst, schedules, mode.weight_for(0), scoring);
        if let WeightMode::Dynamic { .. } = mode {
            let q_min = pop.members.iter().map(|m| m.violations).min().unwrap_or(0);
            pop.rescore(mode.weight_for(q_min));
        }
        pop
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Member {
        &self.members[0]
    }

    pub fn worst(&self) -> &Member {
        self.members.last().expect("population is non-empty")
    }

    /// Evaluates a roster under the current weight. The member is not
    /// inserted; call [`Population::rescore`] after changing `members`.
    pub fn member(&mut self, inst: &Instance, schedule: Schedule) -> Member {
        let eval = evaluate(inst, &schedule, self.current_weight, self.scoring.shape);
        let birth = self.next_birth;
        self.next_birth += 1;
        let fitness = self.scoring.objective.fitness(&eval, self.current_weight, self.scoring.shape);
        let violations = self.scoring.objective.violations(&eval);
        Member { schedule, eval, fitness, score: fitness, violations, birth }
    }

    /// Applies `weight` to every member, recomputes ranking scores against
    /// the population spread and re-sorts.
    pub fn rescore(&mut self, weight: f64) {
        self.current_weight = weight;
        let Scoring { objective, shape, incentives } = self.scoring;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in &mut self.members {
            m.eval.reweight(weight, shape);
            m.fitness = objective.fitness(&m.eval, weight, shape);
            m.violations = objective.violations(&m.eval);
            lo = lo.min(m.fitness);
            hi = hi.max(m.fitness);
        }
        let spread = if self.members.is_empty() { 0.0 } else { hi - lo };
        for m in &mut self.members {
            m.score = improvement::shaped_score(m.fitness, m.eval.balance, spread, &incentives);
        }
        self.members.sort_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then((a.violations > 0).cmp(&(b.violations > 0)))
                .then(a.eval.pref_cost.cmp(&b.eval.pref_cost))
                .then(a.birth.cmp(&b.birth))
        });
    }

    /// Replaces the worst member if `candidate` has strictly better fitness.
    pub fn offer(&mut self, inst: &Instance, candidate: Schedule) -> bool {
        let m = self.member(inst, candidate);
        if m.fitness < self.worst().fitness {
            *self.members.last_mut().expect("non-empty") = m;
            self.rescore(self.current_weight);
            true
        } else {
            false
        }
    }
}

/// Selection probability of each rank (best first) under linear ranking.
pub fn rank_probabilities(n: usize, pressure: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n)
            .map(|r| {
                let w = pressure - (2.0 * pressure - 2.0) * r as f64 / (n - 1) as f64;
                w.max(0.0) / n as f64
            })
            .collect(),
    }
}

/// Samples ranks from a linear ranking distribution.
#[derive(Debug, Clone)]
pub struct RankSelector {
    dist: Option<WeightedIndex<f64>>,
}

impl RankSelector {
    pub fn new(n: usize, pressure: f64) -> Result<Self, EngineError> {
        match n {
            0 => Err(EngineError::EmptyPopulation),
            1 => Ok(Self { dist: None }),
            _ => WeightedIndex::new(rank_probabilities(n, pressure))
                .map(|d| Self { dist: Some(d) })
                .map_err(|e| EngineError::Config(e.to_string())),
        }
    }

    /// 0-based rank.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.as_ref().map_or(0, |d| d.sample(rng))
    }
}

pub fn rank_select<'a, R: Rng + ?Sized>(
    pop: &'a Population,
    pressure: f64,
    rng: &mut R,
) -> Result<&'a Member, EngineError> {
    let sel = RankSelector::new(pop.len(), pressure)?;
    Ok(&pop.members[sel.pick(rng)])
}

/// Nurse indices grouped by grade, most senior first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeBoundaries {
    pub order: Vec<usize>,
    /// Positions in `order` where a new grade starts (the first segment starts at 0).
    pub cuts: Vec<usize>,
    grades: Vec<usize>,
}

impl GradeBoundaries {
    pub fn new(inst: &Instance) -> Self {
        let mut order: Vec<usize> = (0..inst.n()).collect();
        order.sort_by_key(|&i| (inst.nurses[i].grade, i));
        let mut cuts = Vec::new();
        let mut grades = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let g = inst.nurses[i].grade;
            if grades.last() != Some(&g) {
                if pos > 0 {
                    cuts.push(pos);
                }
                grades.push(g);
            }
        }
        Self { order, cuts, grades }
    }

    /// `(grade, nurse indices)` per segment.
    pub fn segments(&self) -> impl Iterator<Item = (usize, &[usize])> {
        let starts = std::iter::once(0).chain(self.cuts.iter().copied());
        let ends = self.cuts.iter().copied().chain(std::iter::once(self.order.len()));
        self.grades
            .iter()
            .zip(starts.zip(ends))
            .map(|(&g, (a, b))| (g, &self.order[a..b]))
    }

    pub fn segment(&self, grade: usize) -> &[usize] {
        self.segments().find(|&(g, _)| g == grade).map_or(&[], |(_, s)| s)
    }

    pub fn segment_count(&self) -> usize {
        self.grades.len()
    }
}

/// k-point crossover with explicit cuts; a cut `c` falls after gene `c`
/// (1-based count), so cuts lie in `1..n`.
pub fn k_point_at(p1: &Schedule, p2: &Schedule, cuts: &[usize]) -> Schedule {
    let mut child = p1.clone();
    let mut from_second = false;
    let mut next = cuts.iter().peekable();
    for i in 0..p1.len() {
        while next.peek().is_some_and(|&&c| c == i) {
            from_second = !from_second;
            next.next();
        }
        if from_second {
            child.set(i, p2.get(i));
        }
    }
    child
}

/// Copies segment `s` from `p2` when `from_second[s]`, else from `p1`.
pub fn grade_based_with(p1: &Schedule, p2: &Schedule, bounds: &GradeBoundaries, from_second: &[bool]) -> Schedule {
    let mut child = p1.clone();
    for ((_, nurses), &second) in bounds.segments().zip(from_second) {
        if second {
            for &i in nurses {
                child.set(i, p2.get(i));
            }
        }
    }
    child
}

pub fn uniform<R: Rng + ?Sized>(p1: &Schedule, p2: &Schedule, rng: &mut R) -> Schedule {
    Schedule::new(
        p1.genes()
            .iter()
            .zip(p2.genes())
            .map(|(&a, &b)| if rng.gen_bool(0.5) { b } else { a })
            .collect(),
    )
}

pub fn crossover<R: Rng + ?Sized>(
    p1: &Schedule,
    p2: &Schedule,
    mode: CrossoverMode,
    bounds: &GradeBoundaries,
    rng: &mut R,
) -> Result<Schedule, EngineError> {
    let n = p1.len();
    Ok(match mode {
        CrossoverMode::KPoint(k) => {
            if k >= n {
                return Err(EngineError::TooManyCuts { k, n });
            }
            let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, k).into_iter().map(|c| c + 1).collect();
            cuts.sort_unstable();
            k_point_at(p1, p2, &cuts)
        }
        CrossoverMode::Uniform => uniform(p1, p2, rng),
        CrossoverMode::GradeBased => {
            let picks: Vec<bool> = (0..bounds.segment_count()).map(|_| rng.gen_bool(0.5)).collect();
            grade_based_with(p1, p2, bounds, &picks)
        }
        CrossoverMode::Mix(f) => {
            let mode = if rng.gen_bool(f) { CrossoverMode::GradeBased } else { CrossoverMode::Uniform };
            return crossover(p1, p2, mode, bounds, rng);
        }
    })
}

/// With probability `rate`, redraws one uniformly chosen nurse's pattern
/// from its feasible set (possibly drawing the same pattern again).
pub fn mutate<R: Rng + ?Sized>(s: &Schedule, inst: &Instance, rate: f64, rng: &mut R) -> Schedule {
    let mut child = s.clone();
    mutate_in_place(&mut child, inst, rate, rng);
    child
}

pub(crate) fn mutate_in_place<R: Rng + ?Sized>(s: &mut Schedule, inst: &Instance, rate: f64, rng: &mut R) {
    if s.is_empty() || !rng.gen_bool(rate) {
        return;
    }
    let i = rng.gen_range(0..s.len());
    let feasible = &inst.nurses[i].feasible;
    s.set(i, feasible[rng.gen_range(0..feasible.len())]);
}

/// `ceil(fraction * n)`, tolerant of floating error in the product.
pub fn elite_count(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Keeps the top `ceil(elite_fraction * N)` members, fills the rest with the
/// best offspring and re-sorts.
pub fn replace_elitist(
    mut old: Population,
    offspring: Vec<Member>,
    elite_fraction: f64,
) -> Result<Population, EngineError> {
    let n = old.len();
    let elites = elite_count(elite_fraction, n);
    let needed = n - elites;
    if offspring.len() < needed {
        return Err(EngineError::InsufficientOffspring { needed, got: offspring.len() });
    }
    old.members.truncate(elites);
    let first_child = offspring.iter().map(|m| m.birth).min().unwrap_or(u64::MAX);
    old.members.extend(offspring);
    if old.members.len() > n {
        // rank jointly, then drop the worst offspring
        old.rescore(old.current_weight);
        let mut surplus = old.members.len() - n;
        let mut idx = old.members.len();
        while surplus > 0 {
            idx -= 1;
            if old.members[idx].birth >= first_child {
                old.members.remove(idx);
                surplus -= 1;
            }
        }
    }
    old.rescore(old.current_weight);
    Ok(old)
}

/// Updates the weight from the current best member and re-ranks.
pub(crate) fn prepare(pop: &mut Population, mode: WeightMode) {
    let q = pop.best().violations;
    pop.rescore(mode.weight_for(q));
}

/// Breeds the non-elite part of the next generation from `pop` alone.
pub(crate) fn breed<R: Rng + ?Sized>(
    pop: &Population,
    inst: &Instance,
    cfg: &EngineConfig,
    bounds: &GradeBoundaries,
    rng: &mut R,
) -> Result<Vec<Schedule>, EngineError> {
    let needed = pop.len() - elite_count(cfg.elite_fraction, pop.len());
    let sel = RankSelector::new(pop.len(), cfg.selection_pressure)?;
    (0..needed)
        .map(|_| {
            let a = &pop.members[sel.pick(rng)].schedule;
            let b = &pop.members[sel.pick(rng)].schedule;
            let mut child = crossover(a, b, cfg.crossover, bounds, rng)?;
            mutate_in_place(&mut child, inst, cfg.mutation_rate, rng);
            Ok(child)
        })
        .collect()
}

/// Merges bred children into the population and runs the improvement hooks.
pub(crate) fn complete(
    mut pop: Population,
    inst: &Instance,
    children: Vec<Schedule>,
    cfg: &EngineConfig,
) -> Result<Population, EngineError> {
    let offspring: Vec<Member> = children.into_iter().map(|c| pop.member(inst, c)).collect();
    let mut pop = replace_elitist(pop, offspring, cfg.elite_fraction)?;
    if cfg.improvement.has_hooks() && pop.scoring.objective == Objective::Full {
        improve_top(&mut pop, inst, cfg);
    }
    pop.generation += 1;
    Ok(pop)
}

/// Runs the hooks on the top roster; an improved copy replaces the worst
/// member so the original top survives.
fn improve_top(pop: &mut Population, inst: &Instance, cfg: &EngineConfig) {
    let top = pop.best();
    if pop.last_improved.as_ref() == Some(&top.schedule) {
        return;
    }
    let improved = improvement::apply_hooks(
        inst,
        &top.schedule,
        top.eval.balance,
        pop.current_weight,
        cfg.penalty_shape,
        &cfg.improvement,
    );
    if improved != top.schedule && !pop.members.iter().any(|m| m.schedule == improved) {
        let m = pop.member(inst, improved.clone());
        *pop.members.last_mut().expect("non-empty") = m;
        pop.rescore(pop.current_weight);
    }
    pop.last_improved = Some(improved);
}

pub fn step_generation<R: Rng + ?Sized>(
    mut pop: Population,
    inst: &Instance,
    cfg: &EngineConfig,
    bounds: &GradeBoundaries,
    rng: &mut R,
) -> Result<Population, EngineError> {
    prepare(&mut pop, cfg.weight_mode);
    let children = breed(&pop, inst, cfg, bounds, rng)?;
    complete(pop, inst, children, cfg)
}

pub(crate) fn offer_all(tracker: &mut Tracker, pop: &Population, generation: usize) {
    for m in &pop.members {
        tracker.offer(generation, &m.schedule, m.eval.pref_cost, m.eval.feasible);
    }
}

pub(crate) fn evolve<R: Rng + ?Sized>(
    inst: &Instance,
    cfg: &EngineConfig,
    mut pop: Population,
    generations: usize,
    offset: usize,
    tracker: &mut Tracker,
    rng: &mut R,
) -> Result<Population, EngineError> {
    let bounds = GradeBoundaries::new(inst);
    offer_all(tracker, &pop, offset);
    for g in 1..=generations {
        pop = step_generation(pop, inst, cfg, &bounds, rng)?;
        offer_all(tracker, &pop, offset + g);
    }
    Ok(pop)
}

fn finish(tracker: Tracker, inst: &Instance, cfg: &EngineConfig, pop: &Population, generations: usize) -> RunReport {
    let best = pop.best();
    let mut eval = best.eval.clone();
    eval.reweight(pop.current_weight, cfg.penalty_shape);
    tracker.finish(&inst.name, cfg.seed, generations, pop.current_weight, best.schedule.clone(), eval.total)
}

/// Runs the classical GA from a random population.
pub fn run_basic(inst: &Instance, cfg: &EngineConfig) -> Result<RunReport, EngineError> {
    cfg.validate(inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tracker = Tracker::new();
    let pop = Population::random(inst, cfg.pop_size, cfg.weight_mode, Scoring::full(cfg), &mut rng);
    let pop = evolve(inst, cfg, pop, cfg.generations, 0, &mut tracker, &mut rng)?;
    Ok(finish(tracker, inst, cfg, &pop, cfg.generations))
}

/// Restart schedule for delta coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaConfig {
    pub rounds: usize,
    /// Window half-width over positions in each nurse's feasible list.
    pub radius: usize,
    pub pop_size: usize,
    pub generations: usize,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self { rounds: 2, radius: 3, pop_size: 100, generations: 50 }
    }
}

/// Rosters drawn from the hypercube around `best`: gene `i` is uniform over
/// the patterns whose position in F(i) is within `radius` of best's.
pub fn delta_schedules<R: Rng + ?Sized>(
    inst: &Instance,
    best: &Schedule,
    radius: usize,
    pop_size: usize,
    rng: &mut R,
) -> Vec<Schedule> {
    let windows: Vec<&[usize]> = inst
        .nurses
        .iter()
        .zip(best.genes())
        .map(|(nurse, &j)| {
            let pos = nurse.position_of(j).expect("best is valid for the instance");
            let lo = pos.saturating_sub(radius);
            let hi = (pos + radius).min(nurse.feasible.len() - 1);
            &nurse.feasible[lo..=hi]
        })
        .collect();
    (0..pop_size)
        .map(|_| Schedule::new(windows.iter().map(|w| w[rng.gen_range(0..w.len())]).collect()))
        .collect()
}

pub fn delta_restart<R: Rng + ?Sized>(
    inst: &Instance,
    best: &Schedule,
    radius: usize,
    pop_size: usize,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Population {
    let schedules = delta_schedules(inst, best, radius, pop_size, rng);
    Population::seeded(inst, schedules, cfg.weight_mode, Scoring::full(cfg))
}

/// Continues a finished run with delta-coding restarts around its best
/// roster (the best feasible one if any). The returned report covers the
/// whole run.
pub fn continue_with_delta(
    inst: &Instance,
    cfg: &EngineConfig,
    delta: &DeltaConfig,
    prior: RunReport,
) -> Result<RunReport, EngineError> {
    if delta.pop_size < 2 {
        return Err(EngineError::Config("delta population size must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DE1_7A00);
    let mut tracker = Tracker::resume(&prior);
    let round_cfg = EngineConfig { pop_size: delta.pop_size, ..cfg.clone() };
    let mut generations = prior.generations;
    let mut last = None;
    for _ in 0..delta.rounds {
        let centre = tracker
            .best_feasible
            .as_ref()
            .map(|(_, s)| s.clone())
            .or_else(|| last.as_ref().map(|p: &Population| p.best().schedule.clone()))
            .unwrap_or_else(|| prior.final_best.clone());
        let pop = delta_restart(inst, &centre, delta.radius, delta.pop_size, &round_cfg, &mut rng);
        let pop = evolve(inst, &round_cfg, pop, delta.generations, generations, &mut tracker, &mut rng)?;
        generations += delta.generations;
        last = Some(pop);
    }
    let mut report = match &last {
        Some(pop) => finish(tracker, inst, cfg, pop, generations),
        None => tracker.finish(&inst.name, cfg.seed, generations, prior.final_weight, prior.final_best.clone(), prior.best_total),
    };
    report.wall_ms += prior.wall_ms;
    report.features = prior.features;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::tiny1;

    fn s(v: &[usize]) -> Schedule {
        Schedule::new(v.to_vec())
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn rank_probabilities_closed_form() {
        assert_eq!(rank_probabilities(1, 2.0), vec![1.0]);
        assert_eq!(rank_probabilities(2, 2.0), vec![1.0, 0.0]);
        let p = rank_probabilities(5, 2.0);
        for (a, b) in p.iter().zip([0.4, 0.3, 0.2, 0.1, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rank_probabilities(7, 1.0).iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-12));
        assert!(RankSelector::new(0, 2.0).is_err());
    }

    #[test]
    fn pressure_two_never_picks_worst_of_two() {
        let sel = RankSelector::new(2, 2.0).unwrap();
        let mut r = rng(1);
        assert!((0..1000).all(|_| sel.pick(&mut r) == 0));
    }

    #[test]
    fn one_point_example() {
        assert_eq!(k_point_at(&s(&[1, 2, 3]), &s(&[4, 4, 4]), &[1]).genes(), &[1, 4, 4]);
        assert_eq!(k_point_at(&s(&[1, 2, 3, 1]), &s(&[4, 4, 4, 4]), &[1, 3]).genes(), &[1, 4, 4, 1]);
    }

    #[test]
    fn grade_segments_of_tiny1() {
        let b = GradeBoundaries::new(&tiny1());
        let segs: Vec<_> = b.segments().map(|(g, n)| (g, n.to_vec())).collect();
        assert_eq!(segs, vec![(1, vec![0]), (2, vec![1, 2])]);
        let (p1, p2) = (s(&[1, 2, 3]), s(&[4, 4, 4]));
        assert_eq!(grade_based_with(&p1, &p2, &b, &[false, true]).genes(), &[1, 4, 4]);
        assert_eq!(grade_based_with(&p1, &p2, &b, &[true, false]).genes(), &[4, 2, 3]);
    }

    #[test]
    fn uniform_of_identical_parents() {
        let p = s(&[2, 3, 1]);
        let b = GradeBoundaries::new(&tiny1());
        for seed in 0..20 {
            assert_eq!(crossover(&p, &p, CrossoverMode::Uniform, &b, &mut rng(seed)).unwrap(), p);
        }
    }

    #[test]
    fn too_many_cuts() {
        let b = GradeBoundaries::new(&tiny1());
        let err = crossover(&s(&[1, 2, 3]), &s(&[4, 4, 4]), CrossoverMode::KPoint(3), &b, &mut rng(0));
        assert_eq!(err, Err(EngineError::TooManyCuts { k: 3, n: 3 }));
        assert!(crossover(&s(&[1, 2, 3]), &s(&[4, 4, 4]), CrossoverMode::KPoint(2), &b, &mut rng(0)).is_ok());
    }

    #[test]
    fn mutation_contract() {
        let inst = tiny1();
        let base = s(&[1, 2, 3]);
        assert_eq!(mutate(&base, &inst, 0.0, &mut rng(4)), base);
        for seed in 0..50 {
            let m = mutate(&base, &inst, 1.0, &mut rng(seed));
            let diff = m.genes().iter().zip(base.genes()).filter(|(a, b)| a != b).count();
            assert!(diff <= 1);
            assert!(m.is_valid_for(&inst));
        }
        let mut forced = inst.clone();
        forced.nurses.iter_mut().for_each(|n| n.feasible = vec![2]);
        assert_eq!(mutate(&s(&[2, 2, 2]), &forced, 1.0, &mut rng(1)), s(&[2, 2, 2]));
    }

    #[test]
    fn dynamic_weight_examples() {
        assert_eq!(dynamic_weight(0, 2.0, 1.0), 1.0);
        assert_eq!(dynamic_weight(3, 2.0, 1.0), 6.0);
        assert_eq!(dynamic_weight(1, 8.0, 1.0), 8.0);
    }

    #[test]
    fn elite_counts() {
        assert_eq!(elite_count(0.0, 10), 0);
        assert_eq!(elite_count(0.25, 4), 1);
        assert_eq!(elite_count(0.1, 30), 3);
        assert_eq!(elite_count(0.26, 4), 2);
    }

    fn tiny_pop(schedules: &[&[usize]]) -> Population {
        let inst = tiny1();
        let cfg = EngineConfig::default();
        Population::from_schedules(&inst, schedules.iter().map(|v| s(v)).collect(), 10.0, Scoring::full(&cfg))
    }

    #[test]
    fn elitist_replacement() {
        let inst = tiny1();
        let mut pop = tiny_pop(&[&[3, 1, 3], &[1, 2, 3], &[4, 4, 4], &[2, 2, 2]]);
        assert_eq!(pop.best().schedule, s(&[3, 1, 3]));
        let kids: Vec<Member> = [[2, 2, 2], [4, 4, 4], [2, 2, 2]].iter().map(|v| pop.member(&inst, s(v))).collect();
        let next = replace_elitist(pop.clone(), kids.clone(), 0.25).unwrap();
        assert_eq!(next.len(), 4);
        assert_eq!(next.best().schedule, s(&[3, 1, 3]));
        assert_eq!(next.members.iter().filter(|m| m.schedule == s(&[3, 1, 3])).count(), 1);

        assert!(matches!(
            replace_elitist(pop.clone(), kids.clone(), 0.0),
            Err(EngineError::InsufficientOffspring { needed: 4, got: 3 })
        ));
        let mut more = kids;
        more.push(pop.member(&inst, s(&[1, 1, 1])));
        let full = replace_elitist(pop, more, 0.0).unwrap();
        assert!(full.members.iter().all(|m| m.schedule != s(&[3, 1, 3])));
    }

    #[test]
    fn surplus_offspring_are_truncated_worst_first() {
        let inst = tiny1();
        let mut pop = tiny_pop(&[&[1, 2, 3], &[4, 4, 4]]);
        let kids: Vec<Member> = [[3, 1, 3], [2, 2, 2], [4, 4, 4]].iter().map(|v| pop.member(&inst, s(v))).collect();
        let next = replace_elitist(pop, kids, 0.5).unwrap();
        let got: Vec<_> = next.members.iter().map(|m| m.schedule.clone()).collect();
        assert_eq!(got, vec![s(&[3, 1, 3]), s(&[1, 2, 3])]);
    }

    #[test]
    fn tiny1_converges_to_optimum() {
        let inst = tiny1();
        let cfg = EngineConfig { pop_size: 16, generations: 30, seed: 1, ..EngineConfig::default() };
        let report = run_basic(&inst, &cfg).unwrap();
        assert!(report.feasible);
        assert_eq!(report.best_feasible_total, Some(4.0));
        assert_eq!(report.best_feasible, Some(s(&[3, 1, 3])));
    }

    #[test]
    fn zero_weight_minimises_preference_only() {
        let inst = tiny1();
        let cfg = EngineConfig {
            pop_size: 16,
            generations: 30,
            weight_mode: WeightMode::Static(0.0),
            seed: 2,
            ..EngineConfig::default()
        };
        let report = run_basic(&inst, &cfg).unwrap();
        assert_eq!(report.best_total, 0.0);
        assert_eq!(report.final_best, s(&[1, 2, 3]));
    }

    #[test]
    fn zero_demand_feasible_at_generation_zero() {
        let mut inst = tiny1();
        inst.demand.iter_mut().for_each(|d| *d = 0);
        let cfg = EngineConfig { pop_size: 8, generations: 3, ..EngineConfig::default() };
        let report = run_basic(&inst, &cfg).unwrap();
        assert_eq!(report.gen_to_feasible, Some(0));
    }

    #[test]
    fn zero_generations_reports_best_random() {
        let inst = tiny1();
        let cfg = EngineConfig { pop_size: 8, generations: 0, seed: 5, ..EngineConfig::default() };
        let report = run_basic(&inst, &cfg).unwrap();
        let mut r = rng(5);
        let randoms: Vec<Schedule> = (0..8).map(|_| random_schedule(&inst, &mut r)).collect();
        let best = randoms
            .iter()
            .map(|x| evaluate(&inst, x, 10.0, PenaltyShape::Linear).total)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.generations, 0);
        assert_eq!(report.best_total, best);
    }

    #[test]
    fn determinism() {
        let inst = tiny1();
        let cfg = EngineConfig { pop_size: 12, generations: 10, seed: 9, ..EngineConfig::default() };
        let mut a = run_basic(&inst, &cfg).unwrap();
        let mut b = run_basic(&inst, &cfg).unwrap();
        a.wall_ms = 0;
        b.wall_ms = 0;
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let inst = tiny1();
        let ok = EngineConfig::default();
        assert!(ok.validate(&inst).is_ok());
        for bad in [
            EngineConfig { pop_size: 1, ..ok.clone() },
            EngineConfig { mutation_rate: 1.5, ..ok.clone() },
            EngineConfig { elite_fraction: 1.0, ..ok.clone() },
            EngineConfig { selection_pressure: 2.5, ..ok.clone() },
            EngineConfig { weight_mode: WeightMode::Dynamic { alpha: 0.0, v: 1.0 }, ..ok.clone() },
            EngineConfig { crossover: CrossoverMode::KPoint(3), ..ok.clone() },
        ] {
            assert!(bad.validate(&inst).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn delta_windows() {
        let inst = tiny1();
        let best = s(&[3, 1, 3]);
        let clones = delta_schedules(&inst, &best, 0, 10, &mut rng(0));
        assert!(clones.iter().all(|c| *c == best));
        let near = delta_schedules(&inst, &best, 1, 200, &mut rng(1));
        assert!(near.iter().all(|c| [2, 3, 4].contains(&c.get(0)) && [1, 2].contains(&c.get(1))));
        let wide = delta_schedules(&inst, &best, 10, 400, &mut rng(2));
        for pos in 0..3 {
            for j in 1..=4 {
                assert!(wide.iter().any(|c| c.get(pos) == j));
            }
        }
    }

    #[test]
    fn delta_run_completes() {
        let inst = tiny1();
        let cfg = EngineConfig { pop_size: 10, generations: 5, seed: 3, ..EngineConfig::default() };
        let first = run_basic(&inst, &cfg).unwrap();
        let delta = DeltaConfig { rounds: 2, radius: 1, pop_size: 6, generations: 4 };
        let report = continue_with_delta(&inst, &cfg, &delta, first.clone()).unwrap();
        assert_eq!(report.generations, 5 + 8);
        if let (Some(a), Some(b)) = (first.best_feasible_total, report.best_feasible_total) {
            assert!(b <= a);
        }
    }
}
