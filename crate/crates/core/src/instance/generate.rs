//! Synthetic instance generator.
//!
//! The pattern universe is every pure-day pattern with a required day count
//! and every pure-night pattern with a required night count. A hidden
//! reference roster is drawn first and demand is set from its coverage, so
//! any tightness in `[0, 1]` leaves at least that roster feasible.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Instance, Nurse, ShiftPattern, DAY_SLOTS, SLOTS};

/// A contract type and its share of the workforce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourType {
    pub days: usize,
    pub nights: usize,
    pub weight: f64,
}

impl HourType {
    pub fn new(days: usize, nights: usize, weight: f64) -> Self {
        Self { days, nights, weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub nurses: usize,
    pub grades: usize,
    pub hour_types: Vec<HourType>,
    /// Fraction of the reference coverage demanded, in `[0, 1]`.
    pub tightness: f64,
    /// Preference costs are drawn uniformly from `0..=pref_spread`.
    pub pref_spread: u32,
    /// If set, each feasible set is subsampled to at most this many patterns
    /// (the reference pattern is always kept). Used for oracle-sized instances.
    pub max_feasible: Option<usize>,
    pub seed: u64,
}

impl GenSpec {
    /// Ward-sized defaults: 30 nurses, 3 grades, an even mix of 4/3 and 3/3
    /// contracts.
    pub fn ward(seed: u64) -> Self {
        Self {
            nurses: 30,
            grades: 3,
            hour_types: vec![HourType::new(4, 3, 0.5), HourType::new(3, 3, 0.5)],
            tightness: 1.0,
            pref_spread: 10,
            max_feasible: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError(msg));
        if self.nurses == 0 {
            return bad("at least one nurse is required".into());
        }
        if self.grades == 0 {
            return bad("at least one grade is required".into());
        }
        if self.hour_types.is_empty() {
            return bad("no hour types given".into());
        }
        for h in &self.hour_types {
            if !(1..=DAY_SLOTS).contains(&h.days) || !(1..=DAY_SLOTS).contains(&h.nights) {
                return bad(format!("hour type {}:{} outside 1..=7", h.days, h.nights));
            }
            if !(h.weight >= 0.0) {
                return bad(format!("hour type {}:{} has negative weight", h.days, h.nights));
            }
        }
        let total: f64 = self.hour_types.iter().map(|h| h.weight).sum();
        if (total - 1.0).abs() > 1e-6 {
            return bad(format!("hour type weights sum to {total}, expected 1"));
        }
        if !(0.0..=1.0).contains(&self.tightness) {
            return bad(format!("tightness {} outside [0, 1]", self.tightness));
        }
        if self.max_feasible == Some(0) {
            return bad("max_feasible must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
#[error("invalid generator spec: {0}")]
pub struct GenError(pub String);

/// A generated instance together with the roster its demand was derived from.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    /// Pattern id per nurse.
    pub reference: Vec<usize>,
}

/// All `size`-subsets of `0..7`, lexicographic.
fn week_subsets(size: usize) -> Vec<[bool; DAY_SLOTS]> {
    fn rec(start: usize, left: usize, cur: &mut [bool; DAY_SLOTS], out: &mut Vec<[bool; DAY_SLOTS]>) {
        if left == 0 {
            out.push(*cur);
            return;
        }
        for d in start..=DAY_SLOTS - left {
            cur[d] = true;
            rec(d + 1, left - 1, cur, out);
            cur[d] = false;
        }
    }
    let mut out = Vec::new();
    rec(0, size, &mut [false; DAY_SLOTS], &mut out);
    out
}

fn pattern_universe(spec: &GenSpec) -> Vec<ShiftPattern> {
    let mut day_sizes: Vec<usize> = spec.hour_types.iter().map(|h| h.days).collect();
    let mut night_sizes: Vec<usize> = spec.hour_types.iter().map(|h| h.nights).collect();
    day_sizes.sort_unstable();
    day_sizes.dedup();
    night_sizes.sort_unstable();
    night_sizes.dedup();

    let mut patterns = Vec::new();
    let mut push = |week: [bool; DAY_SLOTS], night: bool| {
        let mut cover = [false; SLOTS];
        let offset = if night { DAY_SLOTS } else { 0 };
        cover[offset..offset + DAY_SLOTS].copy_from_slice(&week);
        patterns.push(ShiftPattern::new(patterns.len() + 1, cover));
    };
    for &d in &day_sizes {
        week_subsets(d).into_iter().for_each(|w| push(w, false));
    }
    for &t in &night_sizes {
        week_subsets(t).into_iter().for_each(|w| push(w, true));
    }
    patterns
}

pub fn generate(spec: &GenSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let patterns = pattern_universe(spec);
    let hour_pick = WeightedIndex::new(spec.hour_types.iter().map(|h| h.weight))
        .map_err(|e| GenError(e.to_string()))?;

    let mut nurses = Vec::with_capacity(spec.nurses);
    let mut reference = Vec::with_capacity(spec.nurses);
    for i in 0..spec.nurses {
        let hours = spec.hour_types[hour_pick.sample(&mut rng)];
        let mut feasible: Vec<usize> = patterns
            .iter()
            .filter(|p| match p.night_count() {
                0 => p.day_count() == hours.days,
                t => p.day_count() == 0 && t == hours.nights,
            })
            .map(|p| p.id)
            .collect();
        let chosen = *feasible.choose(&mut rng).expect("every hour type has patterns");
        if let Some(cap) = spec.max_feasible {
            if feasible.len() > cap {
                feasible.retain(|&j| j != chosen);
                let mut kept: Vec<usize> = feasible.choose_multiple(&mut rng, cap - 1).copied().collect();
                kept.push(chosen);
                kept.sort_unstable();
                feasible = kept;
            }
        }
        reference.push(chosen);
        nurses.push(Nurse {
            id: i + 1,
            grade: 1 + i * spec.grades / spec.nurses,
            days_required: hours.days,
            nights_required: hours.nights,
            feasible,
        });
    }

    let name = format!("gen-n{}-p{}-s{}", spec.nurses, spec.grades, spec.seed);
    let mut inst = Instance::empty(name, spec.grades, nurses, patterns);
    for i in 0..inst.n() {
        for pos in 0..inst.nurses[i].feasible.len() {
            let j = inst.nurses[i].feasible[pos];
            inst.set_pref(i, j, Some(rng.gen_range(0..=spec.pref_spread)));
        }
    }

    for k in 1..=SLOTS {
        for s in 1..=spec.grades {
            let covered = reference
                .iter()
                .enumerate()
                .filter(|&(i, &j)| inst.qualifies(i, s) && inst.pattern(j).covers(k))
                .count();
            inst.set_demand(k, s, (spec.tightness * covered as f64).round() as u32);
        }
    }
    Ok(Generated { instance: inst, reference })
}

pub fn generate_instance(spec: &GenSpec) -> Result<Instance, GenError> {
    generate(spec).map(|g| g.instance)
}

#[cfg(test)]
mod tests {
    use super::super::validate_instance;
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(week_subsets(3).len(), 35);
        assert_eq!(week_subsets(4).len(), 35);
        assert_eq!(week_subsets(7).len(), 1);
        assert_eq!(week_subsets(1)[0], [true, false, false, false, false, false, false]);
    }

    #[test]
    fn ward_universe_has_105_patterns() {
        let inst = generate_instance(&GenSpec::ward(7)).unwrap();
        // C(7,4) + C(7,3) day patterns, C(7,3) night patterns
        assert_eq!(inst.m(), 35 + 35 + 35);
        assert_eq!(inst.n(), 30);
        assert!(validate_instance(&inst).is_empty());
        assert!(inst.nurses.iter().all(|n| n.feasible.len() == 70));
    }

    #[test]
    fn zero_tightness_gives_zero_demand() {
        let spec = GenSpec { tightness: 0.0, ..GenSpec::ward(7) };
        assert!(generate_instance(&spec).unwrap().demand.iter().all(|&d| d == 0));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_instance(&GenSpec::ward(11)).unwrap();
        let b = generate_instance(&GenSpec::ward(11)).unwrap();
        let c = generate_instance(&GenSpec::ward(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn capped_feasible_sets_keep_the_reference() {
        let spec = GenSpec { nurses: 5, max_feasible: Some(4), ..GenSpec::ward(3) };
        let g = generate(&spec).unwrap();
        for (nurse, &j) in g.instance.nurses.iter().zip(&g.reference) {
            assert_eq!(nurse.feasible.len(), 4);
            assert!(nurse.can_work(j));
        }
        assert!(validate_instance(&g.instance).is_empty());
    }

    #[test]
    fn grades_are_contiguous_blocks() {
        let inst = generate_instance(&GenSpec::ward(1)).unwrap();
        let grades: Vec<usize> = inst.nurses.iter().map(|n| n.grade).collect();
        assert!(grades.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(grades.iter().filter(|&&g| g == 1).count(), 10);
    }

    #[test]
    fn bad_specs() {
        assert!(generate(&GenSpec { hour_types: vec![], ..GenSpec::ward(1) }).is_err());
        assert!(generate(&GenSpec { tightness: 1.5, ..GenSpec::ward(1) }).is_err());
        assert!(generate(&GenSpec { hour_types: vec![HourType::new(4, 3, 0.3)], ..GenSpec::ward(1) }).is_err());
        assert!(generate(&GenSpec { hour_types: vec![HourType::new(8, 3, 1.0)], ..GenSpec::ward(1) }).is_err());
    }
}
