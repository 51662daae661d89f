//! Problem data model for the weekly rostering problem.
//!
//! An [`Instance`] holds the nurses, the universe of weekly shift patterns,
//! the preference cost of every admissible (nurse, pattern) pair and the
//! per-slot, per-grade demand. Slots `1..=7` are the day shifts Monday to
//! Sunday, slots `8..=14` the night shifts in the same order.
//!
//! Grades are numbered from 1 (most senior). A nurse of grade `g` counts
//! towards every demand row `s >= g`, so the row for the lowest grade `p`
//! counts every nurse.

mod format;
mod generate;

use std::fmt;

pub use format::{parse_instance, serialize_instance, InstanceError};
pub use generate::{generate, generate_instance, GenError, GenSpec, Generated, HourType};

/// Number of weekly slots (7 day shifts followed by 7 night shifts).
pub const SLOTS: usize = 14;
/// Number of day slots; slot indices above this are nights.
pub const DAY_SLOTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Day,
    Night,
    Mixed,
}

/// A weekly shift pattern: which of the 14 slots it works.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftPattern {
    /// 1-based pattern id.
    pub id: usize,
    pub cover: [bool; SLOTS],
}

impl ShiftPattern {
    pub fn new(id: usize, cover: [bool; SLOTS]) -> Self {
        Self { id, cover }
    }

    /// Does this pattern work slot `k` (1-based)?
    #[inline]
    pub fn covers(&self, k: usize) -> bool {
        self.cover[k - 1]
    }

    pub fn day_count(&self) -> usize {
        self.cover[..DAY_SLOTS].iter().filter(|&&c| c).count()
    }

    pub fn night_count(&self) -> usize {
        self.cover[DAY_SLOTS..].iter().filter(|&&c| c).count()
    }

    pub fn kind(&self) -> PatternKind {
        match (self.day_count(), self.night_count()) {
            (_, 0) => PatternKind::Day,
            (0, _) => PatternKind::Night,
            _ => PatternKind::Mixed,
        }
    }

    /// 0-based indices of the covered slots.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.cover
            .iter()
            .enumerate()
            .filter_map(|(k, &c)| c.then_some(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nurse {
    /// 1-based nurse id.
    pub id: usize,
    /// 1 is the most senior grade.
    pub grade: usize,
    pub days_required: usize,
    pub nights_required: usize,
    /// Admissible pattern ids, in file order. Delta coding windows are
    /// taken over positions in this list.
    pub feasible: Vec<usize>,
}

impl Nurse {
    /// Contract type as `(days, nights)`, e.g. `(4, 3)` for a 4/3 nurse.
    pub fn hours(&self) -> (usize, usize) {
        (self.days_required, self.nights_required)
    }

    pub fn can_work(&self, pattern: usize) -> bool {
        self.feasible.contains(&pattern)
    }

    pub fn position_of(&self, pattern: usize) -> Option<usize> {
        self.feasible.iter().position(|&j| j == pattern)
    }
}

/// A complete weekly problem. Fields are public so that malformed instances
/// can be built and handed to [`validate_instance`]; the parser and the
/// generator only ever return valid ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub grades: usize,
    pub nurses: Vec<Nurse>,
    pub patterns: Vec<ShiftPattern>,
    /// Dense `n x m` preference table, row-major by nurse; `None` outside F(i).
    pub pref: Vec<Option<u32>>,
    /// Dense `14 x p` demand table, row-major by slot.
    pub demand: Vec<u32>,
}

impl Instance {
    /// An instance with the given structure, no preference entries and zero demand.
    pub fn empty(
        name: impl Into<String>,
        grades: usize,
        nurses: Vec<Nurse>,
        patterns: Vec<ShiftPattern>,
    ) -> Self {
        let (n, m) = (nurses.len(), patterns.len());
        Self {
            name: name.into(),
            grades,
            nurses,
            patterns,
            pref: vec![None; n * m],
            demand: vec![0; SLOTS * grades],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nurses.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.patterns.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.grades
    }

    /// Pattern by 1-based id.
    #[inline]
    pub fn pattern(&self, id: usize) -> &ShiftPattern {
        &self.patterns[id - 1]
    }

    /// Preference cost of nurse `i` (0-based index) working pattern `j` (id).
    #[inline]
    pub fn pref(&self, i: usize, j: usize) -> Option<u32> {
        self.pref[i * self.m() + (j - 1)]
    }

    /// Preference cost for a pair known to be admissible.
    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> u32 {
        self.pref(i, j)
            .unwrap_or_else(|| panic!("pattern {j} is not feasible for nurse {}", i + 1))
    }

    pub fn set_pref(&mut self, i: usize, j: usize, cost: Option<u32>) {
        let m = self.m();
        self.pref[i * m + (j - 1)] = cost;
    }

    /// Demand `R_ks` for slot `k` and grade `s`, both 1-based.
    #[inline]
    pub fn demand(&self, k: usize, s: usize) -> u32 {
        self.demand[(k - 1) * self.grades + (s - 1)]
    }

    pub fn set_demand(&mut self, k: usize, s: usize, value: u32) {
        let p = self.grades;
        self.demand[(k - 1) * p + (s - 1)] = value;
    }

    /// `q_is`: whether nurse `i` (0-based) counts towards grade row `s`.
    #[inline]
    pub fn qualifies(&self, i: usize, s: usize) -> bool {
        self.nurses[i].grade <= s
    }

    /// Product of the feasible set sizes, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        self.nurses
            .iter()
            .fold(1u128, |acc, nurse| acc.saturating_mul(nurse.feasible.len() as u128))
    }
}

/// One broken invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks well-formedness of an instance. Satisfiability of the demand is
/// not checked: an instance with unreachable demand is still valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: String, rule: String| out.push(Violation { entity, rule });
    let (n, m, p) = (inst.n(), inst.m(), inst.p());

    if inst.name.is_empty() || inst.name.chars().any(char::is_whitespace) {
        push("problem".into(), format!("name {:?} must be one non-empty token", inst.name));
    }
    if p == 0 {
        push("problem".into(), "grade count must be at least 1".into());
    }
    if inst.pref.len() != n * m {
        push("problem".into(), format!("preference table has {} entries, expected {}", inst.pref.len(), n * m));
    }
    if inst.demand.len() != SLOTS * p {
        push("problem".into(), format!("demand table has {} entries, expected {}", inst.demand.len(), SLOTS * p));
    }

    for (idx, pat) in inst.patterns.iter().enumerate() {
        if pat.id != idx + 1 {
            push(format!("pattern {}", pat.id), format!("stored at position {} (ids must be 1..=m in order)", idx + 1));
        }
        if pat.cover.iter().all(|&c| !c) {
            push(format!("pattern {}", pat.id), "covers no slot".into());
        }
    }

    let tables_ok = inst.pref.len() == n * m;
    for (idx, nurse) in inst.nurses.iter().enumerate() {
        let who = format!("nurse {}", nurse.id);
        if nurse.id != idx + 1 {
            push(who.clone(), format!("stored at position {} (ids must be 1..=n in order)", idx + 1));
        }
        if nurse.grade == 0 || nurse.grade > p {
            push(who.clone(), format!("grade {} outside 1..={p}", nurse.grade));
        }
        if nurse.days_required == 0 || nurse.nights_required == 0 {
            push(who.clone(), "days and nights required must both be at least 1".into());
        }
        if nurse.feasible.is_empty() {
            push(who.clone(), "feasible set is empty".into());
        }
        let mut seen = vec![false; m];
        for &j in &nurse.feasible {
            if j == 0 || j > m {
                push(who.clone(), format!("feasible set references undefined pattern {j}"));
                continue;
            }
            if std::mem::replace(&mut seen[j - 1], true) {
                push(who.clone(), format!("pattern {j} listed twice in feasible set"));
            }
            let pat = inst.pattern(j);
            match pat.kind() {
                PatternKind::Day if pat.day_count() != nurse.days_required => push(
                    who.clone(),
                    format!("day pattern {j} works {} days but {} are required", pat.day_count(), nurse.days_required),
                ),
                PatternKind::Night if pat.night_count() != nurse.nights_required => push(
                    who.clone(),
                    format!("night pattern {j} works {} nights but {} are required", pat.night_count(), nurse.nights_required),
                ),
                _ => {}
            }
        }
        if tables_ok && idx < n {
            for j in 1..=m {
                match (seen[j - 1], inst.pref(idx, j).is_some()) {
                    (true, false) => push(who.clone(), format!("missing preference cost for feasible pattern {j}")),
                    (false, true) => push(who.clone(), format!("preference cost given for infeasible pattern {j}")),
                    _ => {}
                }
            }
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::tiny1;
    use super::*;

    #[test]
    fn pattern_kinds() {
        let inst = tiny1();
        assert_eq!(inst.pattern(1).kind(), PatternKind::Day);
        assert_eq!(inst.pattern(3).kind(), PatternKind::Night);
        let mut cover = [false; SLOTS];
        cover[0] = true;
        cover[9] = true;
        assert_eq!(ShiftPattern::new(5, cover).kind(), PatternKind::Mixed);
    }

    #[test]
    fn tiny1_is_valid() {
        assert!(validate_instance(&tiny1()).is_empty());
    }

    #[test]
    fn wrong_day_count_names_the_nurse() {
        let mut inst = tiny1();
        let mut cover = [false; SLOTS];
        cover[..4].iter_mut().for_each(|c| *c = true);
        inst.patterns.push(ShiftPattern::new(5, cover));
        // grow the dense table by one column
        let mut pref = Vec::new();
        for i in 0..inst.n() {
            pref.extend_from_slice(&inst.pref[i * 4..i * 4 + 4]);
            pref.push(None);
        }
        inst.pref = pref;
        inst.nurses[0].feasible.push(5);
        inst.set_pref(0, 5, Some(1));
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].entity, "nurse 1");
    }

    #[test]
    fn unsatisfiable_demand_is_still_valid() {
        let mut inst = tiny1();
        inst.set_demand(1, 1, 5);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn missing_and_extra_prefs_are_reported() {
        let mut inst = tiny1();
        inst.nurses[2].feasible.retain(|&j| j != 4);
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("infeasible pattern 4"));
        inst.set_pref(2, 4, None);
        inst.set_pref(1, 2, None);
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "nurse 2");
    }

    #[test]
    fn derived_grade_qualification() {
        let inst = tiny1();
        assert!(inst.qualifies(0, 1) && inst.qualifies(0, 2));
        assert!(!inst.qualifies(1, 1) && inst.qualifies(1, 2));
    }
}
