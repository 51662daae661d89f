//! Cooperative sub-populations keyed by grade.
//!
//! One niche per non-empty set of grades, each scoring only the preference
//! cost of its grades' nurses and the shortfall on its grades' demand rows,
//! plus a larger main population scoring the full objective. For three
//! grades the niches are `{1} {2} {3} {1,2} {1,3} {2,3} {1,2,3}` followed by
//! the main population.
//!
//! Singleton niches recombine their own members uniformly. Larger niches
//! mix uniform crossover within the niche and grade-based assembly, where
//! each grade block of the child is copied from a donor drawn from the
//! niche that optimises exactly that block. Periodically every niche pushes
//! a copy of its best member into each niche whose grade set strictly
//! contains its own.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    self, uniform, CrossoverMode, EngineConfig, EngineError, GradeBoundaries, Objective, Population,
    RankSelector, Scoring,
};
use crate::evaluation::{evaluate, GradeSet, PenaltyShape, Schedule};
use crate::instance::Instance;
use crate::report::{RunReport, Tracker};

/// Largest grade count for which every grade subset gets a niche.
pub const MAX_COOP_GRADES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct NicheSpec {
    /// 1-based niche id; the main population has the highest id.
    pub id: usize,
    pub grades: GradeSet,
    pub is_main: bool,
    pub size: usize,
    pub crossover: CrossoverMode,
}

impl NicheSpec {
    pub fn objective(&self) -> Objective {
        if self.is_main {
            Objective::Full
        } else {
            Objective::Grades(self.grades)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopConfig {
    pub niche_size: usize,
    pub main_size: usize,
    /// Generations between migrations; `None` disables migration.
    pub migration_period: Option<usize>,
    /// Share of grade-based recombination in the non-singleton niches.
    pub grade_fraction: f64,
}

impl Default for CoopConfig {
    fn default() -> Self {
        Self { niche_size: 100, main_size: 300, migration_period: Some(10), grade_fraction: 0.5 }
    }
}

/// Niche layout for `p` grades: subsets by size, then lexicographically,
/// then the main population.
pub fn niche_specs(p: usize, coop: &CoopConfig) -> Result<Vec<NicheSpec>, EngineError> {
    if p == 0 || p > MAX_COOP_GRADES {
        return Err(EngineError::Config(format!(
            "cooperative populations support 1..={MAX_COOP_GRADES} grades, got {p}"
        )));
    }
    let mut sets: Vec<GradeSet> = (1u32..1 << p).map(GradeSet::from_bits).collect();
    sets.sort_by_key(|s| (s.len(), s.grades().collect::<Vec<_>>()));
    let mixed = CrossoverMode::Mix(coop.grade_fraction);
    let mut specs: Vec<NicheSpec> = sets
        .into_iter()
        .enumerate()
        .map(|(idx, grades)| NicheSpec {
            id: idx + 1,
            grades,
            is_main: false,
            size: coop.niche_size,
            crossover: if grades.len() == 1 { CrossoverMode::Uniform } else { mixed },
        })
        .collect();
    specs.push(NicheSpec {
        id: specs.len() + 1,
        grades: GradeSet::full(p),
        is_main: true,
        size: coop.main_size,
        crossover: mixed,
    });
    Ok(specs)
}

/// Fitness of a roster under a niche's view.
pub fn sub_fitness(spec: &NicheSpec, inst: &Instance, s: &Schedule, weight: f64, shape: PenaltyShape) -> f64 {
    let ev = evaluate(inst, s, weight, shape);
    spec.objective().fitness(&ev, weight, shape)
}

/// All partitions of `items` into non-empty blocks.
fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for partial in set_partitions(rest) {
        let mut alone = vec![vec![first]];
        alone.extend(partial.iter().cloned());
        out.push(alone);
        for b in 0..partial.len() {
            let mut joined = partial.clone();
            joined[b].insert(0, first);
            out.push(joined);
        }
    }
    out
}

/// For each niche, the admissible donor decompositions of its grade set,
/// each given as the indices of the donor niches.
fn donor_partitions(specs: &[NicheSpec]) -> Vec<Vec<Vec<usize>>> {
    let niche_of = |set: GradeSet| specs.iter().position(|s| !s.is_main && s.grades == set);
    specs
        .iter()
        .map(|spec| {
            if spec.is_main {
                let grades: Vec<usize> = spec.grades.grades().collect();
                set_partitions(&grades)
                    .into_iter()
                    .map(|blocks| {
                        blocks
                            .into_iter()
                            .map(|b| niche_of(GradeSet::from_grades(b)).expect("every subset has a niche"))
                            .collect()
                    })
                    .collect()
            } else if spec.grades.len() > 1 {
                vec![spec
                    .grades
                    .grades()
                    .map(|g| niche_of(GradeSet::single(g)).expect("singleton niche exists"))
                    .collect()]
            } else {
                Vec::new()
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PopulationSet {
    pub specs: Vec<NicheSpec>,
    pub pops: Vec<Population>,
    pub migration_period: Option<usize>,
    partitions: Vec<Vec<Vec<usize>>>,
}

impl PopulationSet {
    pub fn new(specs: Vec<NicheSpec>, pops: Vec<Population>, migration_period: Option<usize>) -> Self {
        let partitions = donor_partitions(&specs);
        Self { specs, pops, migration_period, partitions }
    }

    /// Random populations, one rng per niche.
    pub fn random(inst: &Instance, cfg: &EngineConfig, coop: &CoopConfig, rngs: &mut [ChaCha8Rng]) -> Result<Self, EngineError> {
        let specs = niche_specs(inst.p(), coop)?;
        let pops = specs
            .iter()
            .zip(rngs.iter_mut())
            .map(|(spec, rng)| {
                let scoring = Scoring { objective: spec.objective(), shape: cfg.penalty_shape, incentives: cfg.improvement };
                Population::random(inst, spec.size, cfg.weight_mode, scoring, rng)
            })
            .collect();
        Ok(Self::new(specs, pops, coop.migration_period))
    }

    pub fn main(&self) -> &Population {
        self.pops.last().expect("main population exists")
    }

    /// Donor decompositions available to niche `idx` (0-based).
    pub fn partitions(&self, idx: usize) -> &[Vec<usize>] {
        &self.partitions[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickMode {
    Uniform,
    GradeBased,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParentMaterial {
    /// Two parents from the niche itself.
    Pair(Schedule, Schedule),
    /// A base roster from the niche itself, overwritten block by block with
    /// the donors' genes for the block's grades.
    Blocks { base: Schedule, donors: Vec<(GradeSet, Schedule)> },
}

impl ParentMaterial {
    pub fn into_child<R: Rng + ?Sized>(self, bounds: &GradeBoundaries, rng: &mut R) -> Schedule {
        match self {
            Self::Pair(a, b) => uniform(&a, &b, rng),
            Self::Blocks { mut base, donors } => {
                for (set, donor) in donors {
                    for g in set.grades() {
                        for &i in bounds.segment(g) {
                            base.set(i, donor.get(i));
                        }
                    }
                }
                base
            }
        }
    }
}

/// Parent material for one child of niche `idx`. Singleton niches always
/// use their own members.
pub fn pick_parents<R: Rng + ?Sized>(
    idx: usize,
    set: &PopulationSet,
    mode: PickMode,
    selectors: &[RankSelector],
    rng: &mut R,
) -> ParentMaterial {
    let own = |rng: &mut R| set.pops[idx].members[selectors[idx].pick(rng)].schedule.clone();
    let options = set.partitions(idx);
    if mode == PickMode::Uniform || options.is_empty() {
        let a = own(rng);
        return ParentMaterial::Pair(a, own(rng));
    }
    let base = own(rng);
    let chosen = &options[rng.gen_range(0..options.len())];
    let donors = chosen
        .iter()
        .map(|&d| (set.specs[d].grades, set.pops[d].members[selectors[d].pick(rng)].schedule.clone()))
        .collect();
    ParentMaterial::Blocks { base, donors }
}

/// Pushes a copy of every niche's best member into each niche whose grade
/// set strictly contains the sender's; it replaces the receiver's worst
/// member if strictly fitter there. Receivers are processed in id order.
pub fn migrate(set: &mut PopulationSet, inst: &Instance) {
    let migrants: Vec<(GradeSet, Schedule)> =
        set.specs.iter().zip(&set.pops).map(|(s, p)| (s.grades, p.best().schedule.clone())).collect();
    for (spec, pop) in set.specs.iter().zip(set.pops.iter_mut()) {
        for (from, schedule) in &migrants {
            if spec.grades.is_strict_superset_of(*from) {
                pop.offer(inst, schedule.clone());
            }
        }
    }
}

/// One synchronous generation of every niche, followed by migration when due.
pub fn step_all(
    set: &mut PopulationSet,
    inst: &Instance,
    cfg: &EngineConfig,
    bounds: &GradeBoundaries,
    rngs: &mut [ChaCha8Rng],
) -> Result<(), EngineError> {
    for pop in &mut set.pops {
        engine::prepare(pop, cfg.weight_mode);
    }
    let selectors = set
        .pops
        .iter()
        .map(|p| RankSelector::new(p.len(), cfg.selection_pressure))
        .collect::<Result<Vec<_>, _>>()?;

    let mut children = Vec::with_capacity(set.pops.len());
    for (idx, rng) in rngs.iter_mut().enumerate() {
        let pop = &set.pops[idx];
        let needed = pop.len() - engine::elite_count(cfg.elite_fraction, pop.len());
        let kids: Vec<Schedule> = (0..needed)
            .map(|_| {
                let mode = match set.specs[idx].crossover {
                    CrossoverMode::Mix(f) if rng.gen_bool(f) => PickMode::GradeBased,
                    CrossoverMode::GradeBased => PickMode::GradeBased,
                    _ => PickMode::Uniform,
                };
                let mut child = pick_parents(idx, set, mode, &selectors, rng).into_child(bounds, rng);
                engine::mutate_in_place(&mut child, inst, cfg.mutation_rate, rng);
                child
            })
            .collect();
        children.push(kids);
    }

    let pops = std::mem::take(&mut set.pops);
    set.pops = pops
        .into_iter()
        .zip(children)
        .map(|(pop, kids)| engine::complete(pop, inst, kids, cfg))
        .collect::<Result<_, _>>()?;

    let generation = set.main().generation;
    if let Some(period) = set.migration_period {
        if period > 0 && generation % period == 0 {
            migrate(set, inst);
        }
    }
    Ok(())
}

/// Runs the cooperative GA and reports the main population's results.
/// `cfg.pop_size` and `cfg.crossover` are superseded by the niche layout.
pub fn run_coop(inst: &Instance, cfg: &EngineConfig, coop: &CoopConfig) -> Result<RunReport, EngineError> {
    cfg.validate(inst)?;
    if coop.niche_size < 2 || coop.main_size < 2 {
        return Err(EngineError::Config("niche and main sizes must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&coop.grade_fraction) {
        return Err(EngineError::Config(format!("grade fraction {} outside [0, 1]", coop.grade_fraction)));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let niches = niche_specs(inst.p(), coop)?.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..niches).map(|_| ChaCha8Rng::seed_from_u64(master.gen())).collect();
    let mut set = PopulationSet::random(inst, cfg, coop, &mut rngs)?;
    let bounds = GradeBoundaries::new(inst);

    let mut tracker = Tracker::new();
    engine::offer_all(&mut tracker, set.main(), 0);
    for g in 1..=cfg.generations {
        step_all(&mut set, inst, cfg, &bounds, &mut rngs)?;
        engine::offer_all(&mut tracker, set.main(), g);
    }
    let main = set.main();
    let best = main.best();
    let mut eval = best.eval.clone();
    eval.reweight(main.current_weight, cfg.penalty_shape);
    Ok(tracker.finish(&inst.name, cfg.seed, cfg.generations, main.current_weight, best.schedule.clone(), eval.total))
}
