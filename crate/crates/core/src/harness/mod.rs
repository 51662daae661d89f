//! Feature sets, solver dispatch, the exhaustive oracle and the ablation
//! runner.

mod ablation;
mod oracle;

pub use ablation::{
    ladder, load_instances, run_experiment, run_suite, write_csv, AblationSpec, Aggregate, Experiment, HarnessError,
    write_report_csv, Rung, RungOverrides, CSV_HEADER,
};
pub use oracle::{oracle_solve, OracleOutcome, DEFAULT_ORACLE_LIMIT};

use std::fmt;
use std::str::FromStr;

use crate::coop::{run_coop, CoopConfig};
use crate::engine::{continue_with_delta, run_basic, DeltaConfig, EngineConfig, EngineError, WeightMode};
use crate::improvement::IncentiveConfig;
use crate::instance::Instance;
use crate::report::RunReport;

/// Solver enhancements that can be switched on independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FeatureSet {
    pub dynamic_weights: bool,
    pub subpops: bool,
    pub migration: bool,
    pub incentives: bool,
    pub disincentives: bool,
    pub local_search: bool,
    pub swaps: bool,
    pub delta: bool,
}

const NAMES: [&str; 8] =
    ["DYNAMIC_WEIGHTS", "SUBPOPS", "MIGRATION", "INCENTIVES", "DISINCENTIVES", "LOCAL_SEARCH", "SWAPS", "DELTA"];

impl FeatureSet {
    pub const BASIC: Self = Self {
        dynamic_weights: false,
        subpops: false,
        migration: false,
        incentives: false,
        disincentives: false,
        local_search: false,
        swaps: false,
        delta: false,
    };

    /// Every feature except delta coding.
    pub fn full_stack() -> Self {
        Self { delta: false, ..Self::all() }
    }

    pub fn all() -> Self {
        Self {
            dynamic_weights: true,
            subpops: true,
            migration: true,
            incentives: true,
            disincentives: true,
            local_search: true,
            swaps: true,
            delta: true,
        }
    }

    fn flags(&self) -> [bool; 8] {
        [
            self.dynamic_weights,
            self.subpops,
            self.migration,
            self.incentives,
            self.disincentives,
            self.local_search,
            self.swaps,
            self.delta,
        ]
    }

    fn flag_mut(&mut self, idx: usize) -> &mut bool {
        match idx {
            0 => &mut self.dynamic_weights,
            1 => &mut self.subpops,
            2 => &mut self.migration,
            3 => &mut self.incentives,
            4 => &mut self.disincentives,
            5 => &mut self.local_search,
            6 => &mut self.swaps,
            _ => &mut self.delta,
        }
    }

    /// Canonical label: `BASIC`, or the enabled names joined with `+`.
    pub fn label(&self) -> String {
        let on: Vec<&str> = NAMES.iter().zip(self.flags()).filter(|(_, f)| *f).map(|(n, _)| *n).collect();
        if on.is_empty() {
            "BASIC".into()
        } else {
            on.join("+")
        }
    }

    pub fn incentive_config(&self) -> IncentiveConfig {
        IncentiveConfig {
            incentive: self.incentives,
            disincentive: self.disincentives,
            local_search: self.local_search,
            swaps: self.swaps,
            special_swaps: self.swaps,
            ..IncentiveConfig::default()
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownFeature(pub String);

impl fmt::Display for UnknownFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown feature '{}' (expected basic or one of {})", self.0, NAMES.join(", ").to_lowercase())
    }
}

impl std::error::Error for UnknownFeature {}

/// Accepts names separated by `,` or `+`, case-insensitive, plus `basic`
/// and the alias `dynamic`. Each name switches on exactly one flag.
impl FromStr for FeatureSet {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = Self::BASIC;
        for raw in s.split([',', '+']).map(str::trim).filter(|t| !t.is_empty()) {
            let name = raw.to_ascii_uppercase().replace('-', "_");
            let name = match name.as_str() {
                "BASIC" => continue,
                "DYNAMIC" => "DYNAMIC_WEIGHTS",
                "LOCALSEARCH" => "LOCAL_SEARCH",
                other => other,
            };
            match NAMES.iter().position(|n| *n == name) {
                Some(idx) => *set.flag_mut(idx) = true,
                None => return Err(UnknownFeature(raw.to_string())),
            }
        }
        Ok(set)
    }
}

/// Everything a solver run needs besides the instance and feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Base engine settings; weight mode and hooks are overridden from the
    /// feature set.
    pub engine: EngineConfig,
    pub static_weight: f64,
    pub alpha: f64,
    pub v: f64,
    pub coop: CoopConfig,
    pub delta: DeltaConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            static_weight: 10.0,
            alpha: 10.0,
            v: 5.0,
            coop: CoopConfig::default(),
            delta: DeltaConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Engine settings with the feature set applied.
    pub fn engine_for(&self, features: FeatureSet) -> EngineConfig {
        EngineConfig {
            weight_mode: if features.dynamic_weights {
                WeightMode::Dynamic { alpha: self.alpha, v: self.v }
            } else {
                WeightMode::Static(self.static_weight)
            },
            improvement: features.incentive_config(),
            ..self.engine.clone()
        }
    }
}

/// Runs the solver variant selected by `features`.
pub fn solve(inst: &Instance, features: FeatureSet, cfg: &SolverConfig) -> Result<RunReport, EngineError> {
    let engine = cfg.engine_for(features);
    let mut report = if features.subpops {
        let coop = CoopConfig {
            migration_period: if features.migration { cfg.coop.migration_period } else { None },
            ..cfg.coop
        };
        run_coop(inst, &engine, &coop)?
    } else {
        run_basic(inst, &engine)?
    };
    if features.delta {
        report = continue_with_delta(inst, &engine, &cfg.delta, report)?;
    }
    report.features = features.label();
    Ok(report)
}
