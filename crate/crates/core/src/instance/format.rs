//! Line-oriented text format.
//!
//! ```text
//! PROBLEM <name>
//! NURSES <n>
//! GRADES <p>
//! PATTERNS <m>
//! PATTERN <j> <c1> ... <c14>
//! NURSE <i> GRADE <g> DAYS <d> NIGHTS <t> FEASIBLE <j1> <j2> ...
//! PREF <i> <j> <cost>
//! DEMAND <k> <s> <R>
//! END
//! ```
//!
//! `#` starts a comment. Sections appear in the order above; omitted DEMAND
//! rows are zero.

use std::fmt::Write as _;

use thiserror::Error;

use super::{validate_instance, Instance, Nurse, ShiftPattern, Violation, SLOTS};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: reference to undefined pattern {pattern}")]
    UndefinedPattern { line: usize, pattern: usize },
    #[error("line {line}: reference to undefined nurse {nurse}")]
    UndefinedNurse { line: usize, nurse: usize },
    #[error("line {line}: duplicate PREF entry for nurse {nurse}, pattern {pattern}")]
    DuplicatePref { line: usize, nurse: usize, pattern: usize },
    #[error("missing section {0}")]
    MissingSection(String),
    #[error("invalid instance: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Problem,
    Nurses,
    Grades,
    Patterns,
    Pattern,
    Nurse,
    Pref,
    Demand,
    End,
}

impl Section {
    fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "PROBLEM" => Self::Problem,
            "NURSES" => Self::Nurses,
            "GRADES" => Self::Grades,
            "PATTERNS" => Self::Patterns,
            "PATTERN" => Self::Pattern,
            "NURSE" => Self::Nurse,
            "PREF" => Self::Pref,
            "DEMAND" => Self::Demand,
            "END" => Self::End,
            _ => return None,
        })
    }

    fn is_header(self) -> bool {
        self <= Self::Patterns
    }
}

struct Line<'a> {
    no: usize,
    tokens: Vec<&'a str>,
}

impl<'a> Line<'a> {
    fn err(&self, msg: impl Into<String>) -> InstanceError {
        InstanceError::Syntax { line: self.no, msg: msg.into() }
    }

    fn arity(&self, expected: usize) -> Result<(), InstanceError> {
        if self.tokens.len() != expected {
            return Err(self.err(format!(
                "{} expects {} fields, found {}",
                self.tokens[0],
                expected - 1,
                self.tokens.len() - 1
            )));
        }
        Ok(())
    }

    fn num(&self, pos: usize) -> Result<usize, InstanceError> {
        let tok = self
            .tokens
            .get(pos)
            .ok_or_else(|| self.err(format!("{} is missing field {pos}", self.tokens[0])))?;
        tok.parse()
            .map_err(|_| self.err(format!("expected a non-negative integer, found {tok:?}")))
    }

    fn keyword(&self, pos: usize, word: &str) -> Result<(), InstanceError> {
        match self.tokens.get(pos) {
            Some(&t) if t == word => Ok(()),
            other => Err(self.err(format!("expected {word}, found {:?}", other.copied().unwrap_or("end of line")))),
        }
    }
}

#[derive(Default)]
struct Builder {
    name: Option<String>,
    n: Option<usize>,
    p: Option<usize>,
    m: Option<usize>,
    patterns: Vec<Option<ShiftPattern>>,
    nurses: Vec<Option<Nurse>>,
    prefs: Vec<(usize, usize, u32)>,
    demand: Vec<Option<u32>>,
}

impl Builder {
    fn header(&self, section: Section) -> Option<()> {
        match section {
            Section::Problem => self.name.as_ref().map(|_| ()),
            Section::Nurses => self.n.map(|_| ()),
            Section::Grades => self.p.map(|_| ()),
            Section::Patterns => self.m.map(|_| ()),
            _ => Some(()),
        }
    }

    fn pattern_defined(&self, j: usize) -> bool {
        j >= 1 && j <= self.patterns.len() && self.patterns[j - 1].is_some()
    }

    fn line(&mut self, section: Section, line: &Line<'_>) -> Result<(), InstanceError> {
        match section {
            Section::Problem => {
                line.arity(2)?;
                self.name = Some(line.tokens[1].to_string());
            }
            Section::Nurses => {
                line.arity(2)?;
                let n = line.num(1)?;
                self.n = Some(n);
                self.nurses = vec![None; n];
            }
            Section::Grades => {
                line.arity(2)?;
                let p = line.num(1)?;
                if p == 0 {
                    return Err(line.err("GRADES must be at least 1"));
                }
                self.p = Some(p);
                self.demand = vec![None; SLOTS * p];
            }
            Section::Patterns => {
                line.arity(2)?;
                let m = line.num(1)?;
                self.m = Some(m);
                self.patterns = vec![None; m];
            }
            Section::Pattern => self.pattern(line)?,
            Section::Nurse => self.nurse(line)?,
            Section::Pref => {
                line.arity(4)?;
                let (i, j) = (line.num(1)?, line.num(2)?);
                let cost = u32::try_from(line.num(3)?).map_err(|_| line.err("preference cost out of range"))?;
                let nurse = i
                    .checked_sub(1)
                    .and_then(|idx| self.nurses.get(idx))
                    .and_then(Option::as_ref)
                    .ok_or(InstanceError::UndefinedNurse { line: line.no, nurse: i })?;
                if !self.pattern_defined(j) {
                    return Err(InstanceError::UndefinedPattern { line: line.no, pattern: j });
                }
                if !nurse.can_work(j) {
                    return Err(line.err(format!("pattern {j} is not in the feasible set of nurse {i}")));
                }
                if self.prefs.iter().any(|&(a, b, _)| a == i && b == j) {
                    return Err(InstanceError::DuplicatePref { line: line.no, nurse: i, pattern: j });
                }
                self.prefs.push((i, j, cost));
            }
            Section::Demand => {
                line.arity(4)?;
                let (k, s) = (line.num(1)?, line.num(2)?);
                let value = u32::try_from(line.num(3)?).map_err(|_| line.err("demand out of range"))?;
                let p = self.demand.len() / SLOTS;
                if !(1..=SLOTS).contains(&k) {
                    return Err(line.err(format!("slot {k} outside 1..={SLOTS}")));
                }
                if !(1..=p).contains(&s) {
                    return Err(line.err(format!("grade {s} outside 1..={p}")));
                }
                let cell = &mut self.demand[(k - 1) * p + (s - 1)];
                if cell.replace(value).is_some() {
                    return Err(line.err(format!("duplicate DEMAND entry for slot {k}, grade {s}")));
                }
            }
            Section::End => line.arity(1)?,
        }
        Ok(())
    }

    fn pattern(&mut self, line: &Line<'_>) -> Result<(), InstanceError> {
        let j = line.num(1)?;
        let flags = line.tokens.len() - 2;
        if flags != SLOTS {
            return Err(line.err(format!("pattern {j} has {flags} slot flags, expected {SLOTS}")));
        }
        if j == 0 || j > self.patterns.len() {
            return Err(line.err(format!("pattern id {j} outside 1..={}", self.patterns.len())));
        }
        let mut cover = [false; SLOTS];
        for (slot, tok) in cover.iter_mut().zip(&line.tokens[2..]) {
            *slot = match *tok {
                "0" => false,
                "1" => true,
                other => return Err(line.err(format!("slot flag must be 0 or 1, found {other:?}"))),
            };
        }
        if self.patterns[j - 1].replace(ShiftPattern::new(j, cover)).is_some() {
            return Err(line.err(format!("pattern {j} defined twice")));
        }
        Ok(())
    }

    fn nurse(&mut self, line: &Line<'_>) -> Result<(), InstanceError> {
        let i = line.num(1)?;
        line.keyword(2, "GRADE")?;
        let grade = line.num(3)?;
        line.keyword(4, "DAYS")?;
        let days_required = line.num(5)?;
        line.keyword(6, "NIGHTS")?;
        let nights_required = line.num(7)?;
        line.keyword(8, "FEASIBLE")?;
        let feasible = (9..line.tokens.len())
            .map(|pos| {
                let j = line.num(pos)?;
                if self.pattern_defined(j) {
                    Ok(j)
                } else {
                    Err(InstanceError::UndefinedPattern { line: line.no, pattern: j })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if i == 0 || i > self.nurses.len() {
            return Err(line.err(format!("nurse id {i} outside 1..={}", self.nurses.len())));
        }
        let nurse = Nurse { id: i, grade, days_required, nights_required, feasible };
        if self.nurses[i - 1].replace(nurse).is_some() {
            return Err(line.err(format!("nurse {i} defined twice")));
        }
        Ok(())
    }

    fn finish(self) -> Result<Instance, InstanceError> {
        let missing = |what: String| InstanceError::MissingSection(what);
        let patterns = self
            .patterns
            .into_iter()
            .enumerate()
            .map(|(idx, p)| p.ok_or_else(|| missing(format!("PATTERN {}", idx + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        let nurses = self
            .nurses
            .into_iter()
            .enumerate()
            .map(|(idx, nu)| nu.ok_or_else(|| missing(format!("NURSE {}", idx + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        let grades = self.p.ok_or_else(|| missing("GRADES".into()))?;
        let mut inst = Instance::empty(
            self.name.ok_or_else(|| missing("PROBLEM".into()))?,
            grades,
            nurses,
            patterns,
        );
        for (i, j, cost) in self.prefs {
            inst.set_pref(i - 1, j, Some(cost));
        }
        inst.demand = self.demand.into_iter().map(|d| d.unwrap_or(0)).collect();
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut builder = Builder::default();
    let mut current: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let line = Line { no: idx + 1, tokens };
        let section = Section::from_keyword(line.tokens[0])
            .ok_or_else(|| line.err(format!("unknown keyword {:?}", line.tokens[0])))?;

        if current == Some(Section::End) {
            return Err(line.err("content after END"));
        }
        if let Some(cur) = current {
            if section < cur || (section == cur && section.is_header()) {
                return Err(line.err(format!("{} out of order", line.tokens[0])));
            }
        }
        // every header before this one must already be present
        for header in [Section::Problem, Section::Nurses, Section::Grades, Section::Patterns] {
            if header < section && builder.header(header).is_none() {
                return Err(InstanceError::MissingSection(format!("{header:?}").to_uppercase()));
            }
        }
        builder.line(section, &line)?;
        current = Some(section);
    }
    if current != Some(Section::End) {
        return Err(InstanceError::MissingSection("END".into()));
    }
    builder.finish()
}

/// Writes the canonical text form. Demand rows are emitted grade by grade,
/// skipping zeros.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "PROBLEM {}", inst.name);
    let _ = writeln!(out, "NURSES {}", inst.n());
    let _ = writeln!(out, "GRADES {}", inst.p());
    let _ = writeln!(out, "PATTERNS {}", inst.m());
    for pat in &inst.patterns {
        let _ = write!(out, "PATTERN {}", pat.id);
        for &c in &pat.cover {
            out.push_str(if c { " 1" } else { " 0" });
        }
        out.push('\n');
    }
    for nurse in &inst.nurses {
        let _ = write!(
            out,
            "NURSE {} GRADE {} DAYS {} NIGHTS {} FEASIBLE",
            nurse.id, nurse.grade, nurse.days_required, nurse.nights_required
        );
        for j in &nurse.feasible {
            let _ = write!(out, " {j}");
        }
        out.push('\n');
    }
    for (i, nurse) in inst.nurses.iter().enumerate() {
        for &j in &nurse.feasible {
            if let Some(cost) = inst.pref(i, j) {
                let _ = writeln!(out, "PREF {} {j} {cost}", nurse.id);
            }
        }
    }
    for s in 1..=inst.p() {
        for k in 1..=SLOTS {
            let r = inst.demand(k, s);
            if r > 0 {
                let _ = writeln!(out, "DEMAND {k} {s} {r}");
            }
        }
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::TINY1;
    use super::*;

    #[test]
    fn reads_tiny1_header() {
        let inst = parse_instance(TINY1).unwrap();
        assert_eq!((inst.n(), inst.p(), inst.m()), (3, 2, 4));
        assert_eq!(inst.name, "tiny1");
        assert_eq!(inst.demand(8, 1), 1);
        assert_eq!(inst.demand(1, 2), 1);
        assert_eq!(inst.demand(2, 2), 0);
        assert_eq!(inst.pref(2, 4), Some(1));
    }

    #[test]
    fn tiny1_serializes_byte_exact() {
        let inst = parse_instance(TINY1).unwrap();
        assert_eq!(serialize_instance(&inst), TINY1);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = TINY1.replace("NURSES 3", "# staff\n\nNURSES 3   # three of them");
        assert_eq!(parse_instance(&text).unwrap(), parse_instance(TINY1).unwrap());
    }

    #[test]
    fn fifteen_slot_pattern_is_rejected() {
        let text = TINY1
            .replace("PATTERNS 4", "PATTERNS 5")
            .replace("NURSE 1 ", "PATTERN 5 1 1 1 0 0 0 0 0 0 0 0 0 0 0 1\nNURSE 1 ");
        match parse_instance(&text) {
            Err(InstanceError::Syntax { line: 9, msg }) => assert!(msg.contains("15 slot flags"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undefined_pattern_in_feasible_set() {
        let text = TINY1.replace("FEASIBLE 1 2 3 4\nNURSE 2", "FEASIBLE 9\nNURSE 2");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::UndefinedPattern { line: 9, pattern: 9 })
        ));
    }

    #[test]
    fn duplicate_pref() {
        let text = TINY1.replace("PREF 1 2 1\n", "PREF 1 2 1\nPREF 1 2 5\n");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::DuplicatePref { nurse: 1, pattern: 2, .. })
        ));
    }

    #[test]
    fn missing_sections() {
        let text = TINY1.replace("END\n", "");
        assert!(matches!(parse_instance(&text), Err(InstanceError::MissingSection(s)) if s == "END"));
        let text = TINY1.replace("GRADES 2\n", "");
        assert!(matches!(parse_instance(&text), Err(InstanceError::MissingSection(s)) if s == "GRADES"));
        let text = TINY1.replace("NURSE 3 GRADE 2 DAYS 3 NIGHTS 3 FEASIBLE 1 2 3 4\n", "");
        assert!(parse_instance(&text).is_err());
    }

    #[test]
    fn missing_pref_is_an_error() {
        let text = TINY1.replace("PREF 3 4 1\n", "");
        match parse_instance(&text) {
            Err(InstanceError::Invalid(v)) => assert_eq!(v[0].entity, "nurse 3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_order_sections() {
        let text = TINY1.replace("DEMAND 8 1 1\n", "").replace("PREF 1 1 0\n", "DEMAND 8 1 1\nPREF 1 1 0\n");
        assert!(matches!(parse_instance(&text), Err(InstanceError::Syntax { .. })));
    }

    #[test]
    fn undefined_nurse_in_pref() {
        let text = TINY1.replace("PREF 3 4 1\n", "PREF 3 4 1\nPREF 7 1 0\n");
        assert!(matches!(parse_instance(&text), Err(InstanceError::UndefinedNurse { nurse: 7, .. })));
    }

    #[test]
    fn zero_demand_writes_no_demand_lines() {
        let mut inst = parse_instance(TINY1).unwrap();
        inst.demand.iter_mut().for_each(|d| *d = 0);
        let text = serialize_instance(&inst);
        assert!(!text.contains("DEMAND"));
        let back = parse_instance(&text).unwrap();
        assert!(back.demand.iter().all(|&d| d == 0));
        assert_eq!(back, inst);
    }
}
