use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nurse_roster::coop::CoopConfig;
use nurse_roster::engine::{CrossoverMode, DeltaConfig, EngineConfig, EngineError};
use nurse_roster::harness::{
    oracle_solve, run_experiment, solve, write_csv, write_report_csv, AblationSpec, FeatureSet, HarnessError,
    OracleOutcome, SolverConfig, DEFAULT_ORACLE_LIMIT,
};
use nurse_roster::instance::{generate_instance, GenSpec, HourType};
use nurse_roster::{parse_instance, serialize_instance, Instance, PenaltyShape};

const USAGE: u8 = 1;
const DATA: u8 = 2;

#[derive(Parser)]
#[command(name = "nurse-roster", version, about = "Genetic algorithms for weekly nurse rostering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its report as CSV.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated features, e.g. dynamic,subpops,migration.
        #[arg(long, default_value = "basic")]
        features: FeatureSet,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Write a synthetic instance.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        nurses: usize,
        #[arg(long, default_value_t = 3)]
        grades: usize,
        /// Contract types as DAYS:NIGHTS[:SHARE], comma-separated; missing shares are split evenly.
        #[arg(long, default_value = "4:3,3:3")]
        hours: String,
        #[arg(long, default_value_t = 1.0)]
        tightness: f64,
        #[arg(long, default_value_t = 10)]
        prefspread: u32,
        /// Cap on each nurse's feasible patterns.
        #[arg(long)]
        max_feasible: Option<usize>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve an instance exactly by enumeration.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
        limit: u128,
    },
    /// Run the enhancement ladder over a directory of instances.
    Ablate {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    /// 1point, 2point, kpoint:K, uniform, grade or mix:F
    #[arg(long, value_parser = parse_crossover)]
    crossover: Option<CrossoverMode>,
    #[arg(long)]
    mutation: Option<f64>,
    #[arg(long)]
    elite: Option<f64>,
    /// linear or quadratic
    #[arg(long, value_parser = parse_penalty)]
    penalty: Option<PenaltyShape>,
    /// Static penalty weight.
    #[arg(long)]
    weight: Option<f64>,
    /// Dynamic weight per violated row.
    #[arg(long)]
    alpha: Option<f64>,
    /// Dynamic weight once the best roster is feasible.
    #[arg(long)]
    vweight: Option<f64>,
    #[arg(long)]
    pressure: Option<f64>,
    #[arg(long)]
    niche_size: Option<usize>,
    #[arg(long)]
    main_size: Option<usize>,
    /// Generations between migrations.
    #[arg(long)]
    migration: Option<usize>,
    /// Record wall-clock times in the CSV.
    #[arg(long)]
    timing: bool,
}

impl EngineArgs {
    fn solver(&self) -> SolverConfig {
        let d = SolverConfig::default();
        let e = &d.engine;
        SolverConfig {
            engine: EngineConfig {
                pop_size: self.pop.unwrap_or(e.pop_size),
                generations: self.gens.unwrap_or(e.generations),
                crossover: self.crossover.unwrap_or(e.crossover),
                mutation_rate: self.mutation.unwrap_or(e.mutation_rate),
                elite_fraction: self.elite.unwrap_or(e.elite_fraction),
                penalty_shape: self.penalty.unwrap_or(e.penalty_shape),
                selection_pressure: self.pressure.unwrap_or(e.selection_pressure),
                ..e.clone()
            },
            static_weight: self.weight.unwrap_or(d.static_weight),
            alpha: self.alpha.unwrap_or(d.alpha),
            v: self.vweight.unwrap_or(d.v),
            coop: CoopConfig {
                niche_size: self.niche_size.unwrap_or(d.coop.niche_size),
                main_size: self.main_size.unwrap_or(d.coop.main_size),
                migration_period: self.migration.or(d.coop.migration_period),
                ..d.coop
            },
            delta: DeltaConfig::default(),
        }
    }
}

fn parse_crossover(s: &str) -> Result<CrossoverMode, String> {
    let lower = s.to_ascii_lowercase();
    let (head, arg) = match lower.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (lower.as_str(), None),
    };
    match (head, arg) {
        ("1point", None) => Ok(CrossoverMode::KPoint(1)),
        ("2point", None) => Ok(CrossoverMode::KPoint(2)),
        ("uniform", None) => Ok(CrossoverMode::Uniform),
        ("grade", None) => Ok(CrossoverMode::GradeBased),
        ("kpoint", Some(k)) => match k.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(CrossoverMode::KPoint(k)),
            _ => Err(format!("kpoint needs a positive cut count, got '{k}'")),
        },
        ("mix", Some(f)) => match f.parse::<f64>() {
            Ok(f) if (0.0..=1.0).contains(&f) => Ok(CrossoverMode::Mix(f)),
            _ => Err(format!("mix needs a fraction in [0, 1], got '{f}'")),
        },
        _ => Err(format!("unknown crossover '{s}' (1point, 2point, kpoint:K, uniform, grade, mix:F)")),
    }
}

fn parse_penalty(s: &str) -> Result<PenaltyShape, String> {
    match s.to_ascii_lowercase().as_str() {
        "linear" => Ok(PenaltyShape::Linear),
        "quadratic" => Ok(PenaltyShape::Quadratic),
        _ => Err(format!("unknown penalty shape '{s}' (linear, quadratic)")),
    }
}

fn parse_hours(s: &str) -> Result<Vec<HourType>, String> {
    let mut parsed = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad hour type '{item}'"));
        let share = match parts.len() {
            2 => None,
            3 => Some(parts[2].parse::<f64>().map_err(|_| format!("bad share in '{item}'"))?),
            _ => return Err(format!("hour type '{item}' is not DAYS:NIGHTS[:SHARE]")),
        };
        parsed.push((num(parts[0])?, num(parts[1])?, share));
    }
    if parsed.is_empty() {
        return Err("no hour types given".into());
    }
    let even = 1.0 / parsed.len() as f64;
    Ok(parsed.into_iter().map(|(d, n, w)| HourType::new(d, n, w.unwrap_or(even))).collect())
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl ToString) -> Self {
        Self { code: USAGE, msg: msg.to_string() }
    }
    fn data(msg: impl ToString) -> Self {
        Self { code: DATA, msg: msg.to_string() }
    }
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::Config(_) | EngineError::TooManyCuts { .. } => Failure::usage(e),
        _ => Failure::data(e),
    }
}

fn read_instance(path: &PathBuf) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { instance, seed, features, engine } => {
            let inst = read_instance(&instance)?;
            let mut cfg = engine.solver();
            cfg.engine.seed = seed;
            let report = solve(&inst, features, &cfg).map_err(engine_failure)?;
            write_report_csv(&report, io::stdout().lock(), engine.timing).map_err(Failure::data)
        }
        Command::Generate { out, nurses, grades, hours, tightness, prefspread, max_feasible, name, seed } => {
            let spec = GenSpec {
                nurses,
                grades,
                hour_types: parse_hours(&hours).map_err(Failure::usage)?,
                tightness,
                pref_spread: prefspread,
                max_feasible,
                seed,
            };
            let mut inst = generate_instance(&spec).map_err(Failure::usage)?;
            if let Some(name) = name {
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(Failure::usage("instance name must be a single token"));
                }
                inst.name = name;
            }
            fs::write(&out, serialize_instance(&inst)).map_err(|e| Failure::data(format!("{}: {e}", out.display())))
        }
        Command::Oracle { instance, limit } => {
            let inst = read_instance(&instance)?;
            match oracle_solve(&inst, limit) {
                OracleOutcome::Optimal { schedule, evaluation, enumerated } => {
                    let assign: Vec<String> = schedule.genes().iter().map(ToString::to_string).collect();
                    println!("OPTIMAL {}", evaluation.pref_cost);
                    println!("assign {}", assign.join(" "));
                    println!("enumerated {enumerated}");
                }
                OracleOutcome::Infeasible { enumerated } => {
                    println!("INFEASIBLE");
                    println!("enumerated {enumerated}");
                }
                OracleOutcome::TooLarge { space } => {
                    println!("TOO_LARGE");
                    println!("space {space}");
                }
            }
            Ok(())
        }
        Command::Ablate { instances, seeds, out, engine } => {
            let spec = AblationSpec { solver: engine.solver(), ..AblationSpec::new(instances, seeds) };
            let exp = run_experiment(&spec).map_err(|e| match e {
                HarnessError::Spec(_) => Failure::usage(e),
                HarnessError::Engine { source: EngineError::Config(_), .. } => Failure::usage(e),
                _ => Failure::data(e),
            })?;
            let file = fs::File::create(&out).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
            write_csv(&exp, io::BufWriter::new(file), engine.timing).map_err(Failure::data)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
