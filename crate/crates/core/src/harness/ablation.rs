//! Ablation runs over a directory of instances and their CSV output.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{solve, FeatureSet, SolverConfig};
use crate::engine::EngineError;
use crate::instance::{parse_instance, Instance, InstanceError};
use crate::report::RunReport;

pub const CSV_HEADER: [&str; 10] = [
    "instance",
    "seed",
    "features",
    "feasible",
    "best_feasible_total",
    "best_total",
    "gen_to_feasible",
    "generations",
    "final_weight",
    "wall_ms",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: InstanceError },
    #[error("no instance files (*.txt, *.inst) in {}", .0.display())]
    EmptyDir(PathBuf),
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("{instance}: {source}")]
    Engine { instance: String, source: EngineError },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-rung changes to the base engine settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RungOverrides {
    pub pop_size: Option<usize>,
    pub generations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub features: FeatureSet,
    pub overrides: RungOverrides,
}

impl Rung {
    pub fn new(features: FeatureSet) -> Self {
        Self { features, overrides: RungOverrides::default() }
    }

    fn config(&self, base: &SolverConfig) -> SolverConfig {
        let mut cfg = base.clone();
        if let Some(p) = self.overrides.pop_size {
            cfg.engine.pop_size = p;
        }
        if let Some(g) = self.overrides.generations {
            cfg.engine.generations = g;
        }
        cfg
    }
}

/// The cumulative enhancement ladder: basic GA, then dynamic weights,
/// sub-populations with migration, incentives with local search, swaps and
/// finally delta coding.
pub fn ladder() -> Vec<Rung> {
    let mut f = FeatureSet::BASIC;
    let mut rungs = vec![Rung::new(f)];
    f.dynamic_weights = true;
    rungs.push(Rung::new(f));
    f.subpops = true;
    f.migration = true;
    rungs.push(Rung::new(f));
    f.incentives = true;
    f.disincentives = true;
    f.local_search = true;
    rungs.push(Rung::new(f));
    f.swaps = true;
    rungs.push(Rung::new(f));
    f.delta = true;
    rungs.push(Rung::new(f));
    rungs
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSpec {
    pub instances: PathBuf,
    /// Seeds `0..seeds` are run for every instance and rung.
    pub seeds: u64,
    pub ladder: Vec<Rung>,
    pub solver: SolverConfig,
}

impl AblationSpec {
    pub fn new(instances: impl Into<PathBuf>, seeds: u64) -> Self {
        Self { instances: instances.into(), seeds, ladder: ladder(), solver: SolverConfig::default() }
    }
}

/// Summary of one rung over every (instance, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub features: String,
    pub runs: usize,
    pub feasible_runs: usize,
    pub feasibility_rate: f64,
    /// Mean best feasible total over the feasible runs only.
    pub mean_best_feasible: Option<f64>,
    pub mean_best_total: f64,
    pub wall_ms: u64,
}

impl Aggregate {
    pub fn of(features: String, rows: &[RunReport]) -> Self {
        let feasible: Vec<f64> = rows.iter().filter_map(|r| r.best_feasible_total).collect();
        let runs = rows.len();
        let mean = |v: &[f64]| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
        let totals: Vec<f64> = rows.iter().map(|r| r.best_total).collect();
        Self {
            features,
            runs,
            feasible_runs: feasible.len(),
            feasibility_rate: if runs == 0 { 0.0 } else { feasible.len() as f64 / runs as f64 },
            mean_best_feasible: mean(&feasible),
            mean_best_total: mean(&totals).unwrap_or(0.0),
            wall_ms: rows.iter().map(|r| r.wall_ms).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Ordered by rung, then instance, then seed.
    pub rows: Vec<RunReport>,
    /// One per rung, in ladder order.
    pub aggregates: Vec<Aggregate>,
}

/// Reads every `*.txt` / `*.inst` file in `dir`, sorted by file name.
pub fn load_instances(dir: &Path) -> Result<Vec<(PathBuf, Instance)>, HarnessError> {
    let io_err = |source| HarnessError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("txt" | "inst")));
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::EmptyDir(dir.to_path_buf()));
    }
    paths
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
            match parse_instance(&text) {
                Ok(inst) => Ok((path, inst)),
                Err(source) => Err(HarnessError::Parse { path, source }),
            }
        })
        .collect()
}

/// Runs every (rung, instance, seed) cell.
pub fn run_suite(
    instances: &[Instance],
    seeds: &[u64],
    rungs: &[Rung],
    solver: &SolverConfig,
) -> Result<Experiment, HarnessError> {
    let mut rows = Vec::with_capacity(rungs.len() * instances.len() * seeds.len());
    let mut aggregates = Vec::with_capacity(rungs.len());
    for rung in rungs {
        let mut cfg = rung.config(solver);
        let start = rows.len();
        for inst in instances {
            for &seed in seeds {
                cfg.engine.seed = seed;
                let report = solve(inst, rung.features, &cfg)
                    .map_err(|source| HarnessError::Engine { instance: inst.name.clone(), source })?;
                rows.push(report);
            }
        }
        aggregates.push(Aggregate::of(rung.features.label(), &rows[start..]));
    }
    Ok(Experiment { rows, aggregates })
}

/// Loads the instance directory and runs the whole ladder. Every instance
/// is read and validated before the first run starts.
pub fn run_experiment(spec: &AblationSpec) -> Result<Experiment, HarnessError> {
    if spec.seeds == 0 {
        return Err(HarnessError::Spec("at least one seed is required".into()));
    }
    if spec.ladder.is_empty() {
        return Err(HarnessError::Spec("the ladder has no rungs".into()));
    }
    let instances: Vec<Instance> = load_instances(&spec.instances)?.into_iter().map(|(_, i)| i).collect();
    let seeds: Vec<u64> = (0..spec.seeds).collect();
    run_suite(&instances, &seeds, &spec.ladder, &spec.solver)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn report_record(r: &RunReport, timing: bool) -> [String; 10] {
    [
        r.instance.clone(),
        r.seed.to_string(),
        r.features.clone(),
        r.feasible.to_string(),
        opt(r.best_feasible_total),
        r.best_total.to_string(),
        opt(r.gen_to_feasible),
        r.generations.to_string(),
        r.final_weight.to_string(),
        if timing { r.wall_ms.to_string() } else { String::new() },
    ]
}

/// Writes the header, one row per run and one `ALL` row per rung. Wall
/// times are left blank unless `timing` is set, which keeps the output
/// byte-identical across repeated runs.
pub fn write_csv<W: Write>(exp: &Experiment, out: W, timing: bool) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &exp.rows {
        w.write_record(report_record(r, timing))?;
    }
    for a in &exp.aggregates {
        w.write_record([
            "ALL".to_string(),
            String::new(),
            a.features.clone(),
            format!("{:.4}", a.feasibility_rate),
            opt(a.mean_best_feasible.map(|m| format!("{m:.4}"))),
            format!("{:.4}", a.mean_best_total),
            String::new(),
            String::new(),
            String::new(),
            if timing { a.wall_ms.to_string() } else { String::new() },
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

/// A single report as header plus one row.
pub fn write_report_csv<W: Write>(r: &RunReport, out: W, timing: bool) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    w.write_record(report_record(r, timing))?;
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}
