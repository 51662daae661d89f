//! Scoring a roster against the coverage model.
//!
//! The penalised objective is the preference cost plus a weighted sum of the
//! one-sided coverage shortfalls over all 14 slots and all grade rows.
//! Overstaffing is never penalised.

use rand::Rng;

use crate::instance::{Instance, DAY_SLOTS, SLOTS};

/// One genotype: the pattern id worked by each nurse, in nurse order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Schedule(Vec<usize>);

impl Schedule {
    pub fn new(assign: Vec<usize>) -> Self {
        Self(assign)
    }

    #[inline]
    pub fn genes(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn get(&self, nurse: usize) -> usize {
        self.0[nurse]
    }

    #[inline]
    pub fn set(&mut self, nurse: usize, pattern: usize) {
        self.0[nurse] = pattern;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    /// Length matches and every gene lies in its nurse's feasible set.
    pub fn is_valid_for(&self, inst: &Instance) -> bool {
        self.len() == inst.n() && inst.nurses.iter().zip(&self.0).all(|(n, &j)| n.can_work(j))
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Schedule {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// A set of grades as a bitmask; bit `g - 1` stands for grade `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradeSet(u32);

impl GradeSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn full(p: usize) -> Self {
        Self(((1u64 << p) - 1) as u32)
    }

    pub fn single(g: usize) -> Self {
        Self(1 << (g - 1))
    }

    pub fn from_grades(grades: impl IntoIterator<Item = usize>) -> Self {
        grades.into_iter().fold(Self::empty(), |acc, g| acc.with(g))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    #[must_use]
    pub fn with(self, g: usize) -> Self {
        Self(self.0 | 1 << (g - 1))
    }

    #[inline]
    pub fn contains(self, g: usize) -> bool {
        self.0 >> (g - 1) & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_strict_superset_of(self, other: Self) -> bool {
        self.0 != other.0 && self.0 & other.0 == other.0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn grades(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |b| self.0 >> b & 1 == 1).map(|b| b + 1)
    }
}

/// Per (slot, grade) head counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageTable {
    grades: usize,
    counts: Vec<u32>,
}

impl CoverageTable {
    /// Count for slot `k` and grade row `s`, both 1-based.
    #[inline]
    pub fn get(&self, k: usize, s: usize) -> u32 {
        self.counts[(k - 1) * self.grades + (s - 1)]
    }

    pub fn grades(&self) -> usize {
        self.grades
    }

    pub(crate) fn into_counts(self) -> Vec<u32> {
        self.counts
    }
}

pub fn coverage_of(inst: &Instance, s: &Schedule) -> CoverageTable {
    let p = inst.p();
    let mut counts = vec![0u32; SLOTS * p];
    for (i, &j) in s.genes().iter().enumerate() {
        let g = inst.nurses[i].grade;
        for k in inst.pattern(j).slots() {
            for row in &mut counts[k * p + (g - 1)..(k + 1) * p] {
                *row += 1;
            }
        }
    }
    CoverageTable { grades: p, counts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PenaltyShape {
    #[default]
    Linear,
    Quadratic,
}

impl PenaltyShape {
    #[inline]
    fn apply(self, shortfall: u32) -> u64 {
        let s = u64::from(shortfall);
        match self {
            Self::Linear => s,
            Self::Quadratic => s * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Balance {
    Balanced,
    Unbalanced,
    Neither,
}

/// Full decomposition of a roster's objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub pref_cost: u64,
    /// Preference cost of the nurses of each grade (index `g - 1`).
    pub pref_by_grade: Vec<u64>,
    /// `max(R_ks - cover(k, s), 0)`, row-major by slot.
    pub shortfalls: Vec<u32>,
    /// Number of (slot, grade) rows with a shortfall.
    pub q: usize,
    pub penalty: f64,
    pub total: f64,
    pub feasible: bool,
    pub balance: Balance,
    grades: usize,
}

impl Evaluation {
    #[inline]
    pub fn shortfall(&self, k: usize, s: usize) -> u32 {
        self.shortfalls[(k - 1) * self.grades + (s - 1)]
    }

    /// Shaped shortfall summed over the rows of the given grades.
    pub fn shortfall_sum(&self, rows: GradeSet, shape: PenaltyShape) -> u64 {
        self.shortfalls
            .iter()
            .enumerate()
            .filter(|(idx, _)| rows.contains(idx % self.grades + 1))
            .map(|(_, &v)| shape.apply(v))
            .sum()
    }

    /// Violated rows among the given grades.
    pub fn violations(&self, rows: GradeSet) -> usize {
        self.shortfalls
            .iter()
            .enumerate()
            .filter(|&(idx, &v)| v > 0 && rows.contains(idx % self.grades + 1))
            .count()
    }

    pub fn pref_of(&self, grades: GradeSet) -> u64 {
        grades.grades().map(|g| self.pref_by_grade[g - 1]).sum()
    }

    /// Recomputes `penalty` and `total` under a new weight.
    pub fn reweight(&mut self, weight: f64, shape: PenaltyShape) {
        self.penalty = weight * self.shortfall_sum(GradeSet::full(self.grades), shape) as f64;
        self.total = self.pref_cost as f64 + self.penalty;
    }
}

pub fn evaluate(inst: &Instance, s: &Schedule, weight: f64, shape: PenaltyShape) -> Evaluation {
    debug_assert_eq!(s.len(), inst.n());
    let p = inst.p();
    let cover = coverage_of(inst, s);
    let mut pref_by_grade = vec![0u64; p];
    for (i, &j) in s.genes().iter().enumerate() {
        pref_by_grade[inst.nurses[i].grade - 1] += u64::from(inst.cost(i, j));
    }
    let shortfalls: Vec<u32> = inst
        .demand
        .iter()
        .zip(&cover.counts)
        .map(|(&r, &c)| r.saturating_sub(c))
        .collect();
    let q = shortfalls.iter().filter(|&&v| v > 0).count();
    let pref_cost = pref_by_grade.iter().sum();
    let mut ev = Evaluation {
        pref_cost,
        pref_by_grade,
        shortfalls,
        q,
        penalty: 0.0,
        total: 0.0,
        feasible: q == 0,
        balance: balance_from_coverage(inst, &cover),
        grades: p,
    };
    ev.reweight(weight, shape);
    ev
}

/// Surplus of the all-nurses row per slot: `cover(k, p) - R_kp`.
pub fn surplus_vector(inst: &Instance, cover: &CoverageTable) -> [i64; SLOTS] {
    let p = inst.p();
    std::array::from_fn(|k| i64::from(cover.get(k + 1, p)) - i64::from(inst.demand(k + 1, p)))
}

fn balance_from_coverage(inst: &Instance, cover: &CoverageTable) -> Balance {
    let surplus = surplus_vector(inst, cover);
    classify_surplus(&surplus[..DAY_SLOTS], &surplus[DAY_SLOTS..])
}

pub fn classify_balance(inst: &Instance, s: &Schedule) -> Balance {
    balance_from_coverage(inst, &coverage_of(inst, s))
}

/// Classifies a day/night surplus profile.
///
/// Balanced: a surplus and a shortage within days, or within nights.
/// Unbalanced: a surplus on one side and a shortage on the other.
/// Profiles matching both (or neither) rule are `Neither`.
pub fn classify_surplus(days: &[i64], nights: &[i64]) -> Balance {
    let over = |v: &[i64]| v.iter().any(|&x| x > 0);
    let under = |v: &[i64]| v.iter().any(|&x| x < 0);
    let balanced = (over(days) && under(days)) || (over(nights) && under(nights));
    let unbalanced = (over(days) && under(nights)) || (under(days) && over(nights));
    match (balanced, unbalanced) {
        (true, false) => Balance::Balanced,
        (false, true) => Balance::Unbalanced,
        _ => Balance::Neither,
    }
}

/// Each gene drawn uniformly from the nurse's feasible set.
pub fn random_schedule<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Schedule {
    Schedule(
        inst.nurses
            .iter()
            .map(|n| n.feasible[rng.gen_range(0..n.feasible.len())])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::tiny1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched(v: &[usize]) -> Schedule {
        Schedule::new(v.to_vec())
    }

    #[test]
    fn coverage_hand_counts() {
        let inst = tiny1();
        let c = coverage_of(&inst, &sched(&[1, 2, 3]));
        assert_eq!((c.get(1, 2), c.get(2, 2), c.get(8, 2), c.get(8, 1)), (1, 2, 1, 0));

        let c = coverage_of(&inst, &sched(&[3, 3, 3]));
        for k in 1..=SLOTS {
            let expect = if (8..=10).contains(&k) { (1, 3) } else { (0, 0) };
            assert_eq!((c.get(k, 1), c.get(k, 2)), expect, "slot {k}");
        }
    }

    #[test]
    fn evaluate_infeasible_example() {
        let inst = tiny1();
        let ev = evaluate(&inst, &sched(&[1, 2, 3]), 10.0, PenaltyShape::Linear);
        assert_eq!(ev.pref_cost, 0);
        assert_eq!(ev.shortfall(8, 1), 1);
        assert_eq!(ev.shortfalls.iter().filter(|&&v| v > 0).count(), 1);
        assert_eq!(ev.q, 1);
        assert_eq!(ev.penalty, 10.0);
        assert_eq!(ev.total, 10.0);
        assert!(!ev.feasible);

        let quad = evaluate(&inst, &sched(&[1, 2, 3]), 10.0, PenaltyShape::Quadratic);
        assert_eq!(quad.penalty, 10.0);
    }

    #[test]
    fn evaluate_optimum() {
        let inst = tiny1();
        let ev = evaluate(&inst, &sched(&[3, 1, 3]), 10.0, PenaltyShape::Linear);
        assert_eq!((ev.pref_cost, ev.q, ev.total, ev.feasible), (4, 0, 4.0, true));
        assert_eq!(ev.pref_by_grade, vec![2, 2]);
    }

    #[test]
    fn quadratic_squares_per_row() {
        let mut inst = tiny1();
        inst.set_demand(1, 2, 3);
        inst.set_demand(8, 2, 2);
        // (2,2,2): slot 1 has 0 of 3, slot 8 has 0 of 2, slot (8,1) 0 of 1
        let ev = evaluate(&inst, &sched(&[2, 2, 2]), 1.0, PenaltyShape::Quadratic);
        assert_eq!(ev.penalty, (9 + 4 + 1) as f64);
        let ev = evaluate(&inst, &sched(&[2, 2, 2]), 1.0, PenaltyShape::Linear);
        assert_eq!(ev.penalty, (3 + 2 + 1) as f64);
    }

    #[test]
    fn weight_zero_total_is_pref() {
        let inst = tiny1();
        let ev = evaluate(&inst, &sched(&[4, 4, 4]), 0.0, PenaltyShape::Linear);
        assert_eq!(ev.total, ev.pref_cost as f64);
        assert!(!ev.feasible);
    }

    #[test]
    fn restricted_views() {
        let inst = tiny1();
        let ev = evaluate(&inst, &sched(&[1, 2, 3]), 10.0, PenaltyShape::Linear);
        assert_eq!(ev.violations(GradeSet::single(1)), 1);
        assert_eq!(ev.violations(GradeSet::single(2)), 0);
        assert_eq!(ev.shortfall_sum(GradeSet::single(1), PenaltyShape::Linear), 1);
    }

    #[test]
    fn printed_balance_examples() {
        assert_eq!(classify_surplus(&[2, 0, -1, 0, -1, 0, 0], &[0; 7]), Balance::Balanced);
        assert_eq!(classify_surplus(&[0, 0, 1, 0, 0, 0, 0], &[0, -1, 0, 0, 0, 0, 0]), Balance::Unbalanced);
        assert_eq!(
            classify_surplus(&[0, -1, -1, 1, 0, 0, -2], &[0, 0, 2, 0, 2, 0, -1]),
            Balance::Neither
        );
        assert_eq!(classify_surplus(&[0; 7], &[0; 7]), Balance::Neither);
    }

    #[test]
    fn balance_of_tiny_rosters() {
        let inst = tiny1();
        // surplus days [0,2,2,1,0,0,0], nights [0,1,1,0,0,0,0]: nothing short
        assert_eq!(classify_balance(&inst, &sched(&[1, 2, 3])), Balance::Neither);
        // days [-1,0,..], nights [0,2,2,1,0,0,0]: day shortage against night surplus
        assert_eq!(classify_balance(&inst, &sched(&[4, 3, 4])), Balance::Unbalanced);
        // days [-1,3,3,3,0,0,0], nights [-1,0,..]: both rules fire
        assert_eq!(classify_balance(&inst, &sched(&[2, 2, 2])), Balance::Neither);
    }

    #[test]
    fn random_schedule_membership_and_determinism() {
        let inst = tiny1();
        let a = random_schedule(&inst, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_schedule(&inst, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.is_valid_for(&inst));
        assert!(a.genes().iter().all(|j| (1..=4).contains(j)));
    }

    #[test]
    fn forced_schedule() {
        let mut inst = tiny1();
        for n in &mut inst.nurses {
            n.feasible = vec![2];
        }
        let s = random_schedule(&inst, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(s.genes(), &[2, 2, 2]);
    }

    #[test]
    fn grade_sets() {
        let s = GradeSet::from_grades([1, 3]);
        assert!(s.contains(1) && !s.contains(2) && s.contains(3));
        assert_eq!(s.grades().collect::<Vec<_>>(), vec![1, 3]);
        assert!(GradeSet::full(3).is_strict_superset_of(s));
        assert!(!s.is_strict_superset_of(s));
        assert_eq!(GradeSet::full(3).len(), 3);
    }
}
