//! Shared fixtures and an independent reference evaluator.
#![allow(dead_code)]

use nurse_roster::instance::{generate, generate_instance, GenSpec, Generated, HourType};
use nurse_roster::{Balance, Instance};

pub const TINY1: &str = "\
PROBLEM tiny1
NURSES 3
GRADES 2
PATTERNS 4
PATTERN 1 1 1 1 0 0 0 0 0 0 0 0 0 0 0
PATTERN 2 0 1 1 1 0 0 0 0 0 0 0 0 0 0
PATTERN 3 0 0 0 0 0 0 0 1 1 1 0 0 0 0
PATTERN 4 0 0 0 0 0 0 0 0 1 1 1 0 0 0
NURSE 1 GRADE 1 DAYS 3 NIGHTS 3 FEASIBLE 1 2 3 4
NURSE 2 GRADE 2 DAYS 3 NIGHTS 3 FEASIBLE 1 2 3 4
NURSE 3 GRADE 2 DAYS 3 NIGHTS 3 FEASIBLE 1 2 3 4
PREF 1 1 0
PREF 1 2 1
PREF 1 3 2
PREF 1 4 3
PREF 2 1 2
PREF 2 2 0
PREF 2 3 1
PREF 2 4 3
PREF 3 1 3
PREF 3 2 2
PREF 3 3 0
PREF 3 4 1
DEMAND 8 1 1
DEMAND 1 2 1
DEMAND 8 2 1
END
";

pub fn tiny1() -> Instance {
    nurse_roster::parse_instance(TINY1).unwrap()
}

/// Oracle-sized instance: at most 6 nurses with at most 6 feasible patterns each.
pub fn tiny_spec(seed: u64) -> GenSpec {
    GenSpec {
        nurses: 2 + (seed % 5) as usize,
        grades: 1 + (seed % 3) as usize,
        hour_types: vec![HourType::new(4, 3, 0.5), HourType::new(3, 3, 0.5)],
        tightness: 1.0,
        pref_spread: 10,
        max_feasible: Some(2 + (seed % 5) as usize),
        seed,
    }
}

pub fn tiny_instance(seed: u64) -> Instance {
    generate_instance(&tiny_spec(seed)).unwrap()
}

pub fn tiny_generated(seed: u64) -> Generated {
    generate(&tiny_spec(seed)).unwrap()
}

/// The suite used for the directional experiments.
pub fn ward_suite() -> Vec<Instance> {
    (0..20).map(|k| generate_instance(&GenSpec::ward(1000 + k)).unwrap()).collect()
}

pub struct Naive {
    pub pref: u64,
    pub shortfalls: Vec<u32>,
    pub q: usize,
    pub total: f64,
    pub balance: Balance,
}

/// Recomputes the objective straight from the instance tables.
pub fn naive_eval(inst: &Instance, assign: &[usize], weight: f64, quadratic: bool) -> Naive {
    let m = inst.patterns.len();
    let p = inst.grades;
    let mut pref = 0u64;
    for (i, &j) in assign.iter().enumerate() {
        pref += u64::from(inst.pref[i * m + (j - 1)].expect("assigned pattern has a cost"));
    }
    let mut cover = vec![vec![0i64; p + 1]; 15];
    for (i, &j) in assign.iter().enumerate() {
        let pat = &inst.patterns[j - 1];
        for k in 1..=14 {
            if pat.cover[k - 1] {
                for s in inst.nurses[i].grade..=p {
                    cover[k][s] += 1;
                }
            }
        }
    }
    let mut shortfalls = Vec::new();
    let mut penalty = 0.0;
    for k in 1..=14 {
        for s in 1..=p {
            let r = inst.demand[(k - 1) * p + (s - 1)] as i64;
            let short = (r - cover[k][s]).max(0) as u32;
            shortfalls.push(short);
            penalty += if quadratic { f64::from(short * short) } else { f64::from(short) };
        }
    }
    let q = shortfalls.iter().filter(|&&v| v > 0).count();
    let surplus: Vec<i64> = (1..=14).map(|k| cover[k][p] - inst.demand[(k - 1) * p + (p - 1)] as i64).collect();
    Naive { pref, shortfalls, q, total: pref as f64 + weight * penalty, balance: naive_balance(&surplus[..7], &surplus[7..]) }
}

pub fn naive_balance(days: &[i64], nights: &[i64]) -> Balance {
    let has = |v: &[i64], pos: bool| v.iter().any(|&x| if pos { x > 0 } else { x < 0 });
    let b = (has(days, true) && has(days, false)) || (has(nights, true) && has(nights, false));
    let u = (has(days, true) && has(nights, false)) || (has(days, false) && has(nights, true));
    if b && !u {
        Balance::Balanced
    } else if u && !b {
        Balance::Unbalanced
    } else {
        Balance::Neither
    }
}

/// Brute-force optimum by walking every roster, independent of the library oracle.
pub fn brute_optimum(inst: &Instance) -> Option<u64> {
    let mut best = None;
    let mut assign: Vec<usize> = inst.nurses.iter().map(|n| n.feasible[0]).collect();
    let mut idx = vec![0usize; inst.nurses.len()];
    loop {
        let ev = naive_eval(inst, &assign, 1.0, false);
        if ev.q == 0 && best.map_or(true, |b| ev.pref < b) {
            best = Some(ev.pref);
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < inst.nurses[pos].feasible.len() {
                assign[pos] = inst.nurses[pos].feasible[idx[pos]];
                break;
            }
            idx[pos] = 0;
            assign[pos] = inst.nurses[pos].feasible[0];
            pos += 1;
        }
    }
}
