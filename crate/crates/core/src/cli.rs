//! Command-line front end: `generate`, `schedule`, `validate` and `bench`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchgen::{generate_instance, BenchmarkProfile};
use crate::document::ScheduleDocument;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::multischedule::Problem;
use crate::scheduler::{schedule_problem, OrderingStrategy};
use crate::validator::validate_multischedule;

/// Exit status for feasible results.
pub const EXIT_OK: i32 = 0;
/// Exit status when validation finds violations.
pub const EXIT_VIOLATIONS: i32 = 1;
/// Exit status for unreadable or invalid inputs.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "flexsched",
    version,
    about = "Multi-variant FlexRay static segment scheduler"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance.
    Generate(GenerateArgs),
    /// Schedule an instance with a first-fit ordering.
    Schedule(ScheduleArgs),
    /// Check a schedule against its instance.
    Validate(ValidateArgs),
    /// Run strategies over generated instances and tabulate slot counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "ffc", value_parser = parse_strategy)]
    pub strategy: OrderingStrategy,
    /// Multischedule output.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for one native schedule per variant.
    #[arg(long)]
    pub native_dir: Option<PathBuf>,
    /// Stats record output; printed to stdout when omitted.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Directory for smem.csv and nmem.csv.
    #[arg(long)]
    pub mems_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated profile names.
    #[arg(long, value_delimiter = ',', default_value = "set1,set2,set3,set4,set5,set6,set7")]
    pub profiles: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "ff,ffp,ffw,ffl,ffc", value_parser = parse_strategy)]
    pub strategies: Vec<OrderingStrategy>,
    /// Seeds per profile.
    #[arg(long, default_value_t = 10)]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Per-run CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-profile means CSV; defaults to `<out stem>.summary.csv`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

fn parse_strategy(s: &str) -> Result<OrderingStrategy> {
    s.parse()
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(args) => {
            let profile = BenchmarkProfile::by_name(&args.profile)?;
            generate_instance(profile, args.seed)?.save(&args.out)?;
            Ok(EXIT_OK)
        }
        Command::Schedule(args) => {
            let stats = cmd_schedule(&args)?;
            let json = serde_json::to_string_pretty(&stats)?;
            match &args.stats {
                Some(path) => write_file(path, &(json + "\n"))?,
                None => println!("{json}"),
            }
            if stats.exceeds_static_slots {
                eprintln!(
                    "warning: {} slots allocated, {} declared static slots",
                    stats.slot_count, stats.static_slots
                );
            }
            Ok(EXIT_OK)
        }
        Command::Validate(args) => {
            let violations = cmd_validate(&args.instance, &args.schedule)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for v in &violations {
                writeln!(out, "{}", v.to_json_line()).map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(if violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATIONS
            })
        }
        Command::Bench(args) => {
            let report = cmd_bench(&args)?;
            print!("{}", report.table());
            Ok(EXIT_OK)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStats {
    pub strategy: String,
    pub slot_count: usize,
    /// Algorithm time only, millisecond precision.
    pub wall_time_s: f64,
    pub signal_count: usize,
    pub variant_count: usize,
    pub static_slots: u32,
    pub exceeds_static_slots: bool,
}

fn millis(d: std::time::Duration) -> f64 {
    d.as_millis() as f64 / 1000.0
}

/// Schedules an instance file and writes the requested documents.
pub fn cmd_schedule(args: &ScheduleArgs) -> Result<ScheduleStats> {
    let instance = Instance::load(&args.instance)?;
    let started = std::time::Instant::now();
    let problem = Problem::new(&instance)?;
    let (ms, _) = schedule_problem(&problem, args.strategy);
    let wall_time = started.elapsed();

    let mut doc = ms.to_document(&problem);
    doc.strategy = Some(args.strategy.to_string());
    doc.save(&args.out)?;

    if let Some(dir) = &args.native_dir {
        create_dir(dir)?;
        for v in 0..instance.variants.variant_count() {
            let mut native = ms.extract_native_schedule(&problem, v);
            native.strategy = Some(args.strategy.to_string());
            native.save(dir.join(format!("variant_{v}.json")))?;
        }
    }
    if let Some(dir) = &args.mems_dump {
        create_dir(dir)?;
        let open = |name: &str| {
            let path = dir.join(name);
            fs::File::create(&path).map_err(|e| Error::io(path, e))
        };
        problem.mems.write_smem_csv(&instance, open("smem.csv")?)?;
        problem.mems.write_nmem_csv(open("nmem.csv")?)?;
    }

    Ok(ScheduleStats {
        strategy: args.strategy.to_string(),
        slot_count: ms.slot_count(),
        wall_time_s: millis(wall_time),
        signal_count: instance.signals.len(),
        variant_count: instance.variants.variant_count(),
        static_slots: instance.config.static_slots,
        exceeds_static_slots: ms.slot_count() > instance.config.static_slots as usize,
    })
}

/// Loads both documents and returns the violations found.
pub fn cmd_validate(instance: &Path, schedule: &Path) -> Result<Vec<crate::validator::Violation>> {
    let instance = Instance::load(instance)?;
    let doc = ScheduleDocument::load(schedule)?;
    validate_multischedule(&doc, &instance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub profile: String,
    pub seed: u64,
    pub strategy: String,
    /// `ok`, `invalid`, or `error: <message>`.
    pub status: String,
    pub signal_count: Option<usize>,
    pub slot_count: Option<usize>,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub profile: String,
    pub strategy: String,
    pub runs: usize,
    pub failures: usize,
    pub mean_slot_count: f64,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummary>,
}

/// Runs one (profile, seed) cell for every strategy.
fn bench_cell(profile: &str, seed: u64, strategies: &[OrderingStrategy]) -> Vec<BenchRow> {
    let row = |strategy: OrderingStrategy, status: String| BenchRow {
        profile: profile.to_string(),
        seed,
        strategy: strategy.to_string(),
        status,
        signal_count: None,
        slot_count: None,
        wall_time_s: None,
    };
    let instance = match BenchmarkProfile::by_name(profile).and_then(|p| generate_instance(p, seed)) {
        Ok(i) => i,
        Err(e) => return strategies.iter().map(|&s| row(s, format!("error: {e}"))).collect(),
    };
    strategies
        .iter()
        .map(|&strategy| {
            let started = std::time::Instant::now();
            let problem = match Problem::new(&instance) {
                Ok(p) => p,
                Err(e) => return row(strategy, format!("error: {e}")),
            };
            let (ms, _) = schedule_problem(&problem, strategy);
            let wall_time = started.elapsed();
            let status = match validate_multischedule(&ms.to_document(&problem), &instance) {
                Ok(v) if v.is_empty() => "ok".to_string(),
                Ok(_) => "invalid".to_string(),
                Err(e) => format!("error: {e}"),
            };
            BenchRow {
                signal_count: Some(instance.signals.len()),
                slot_count: Some(ms.slot_count()),
                wall_time_s: Some(millis(wall_time)),
                ..row(strategy, status)
            }
        })
        .collect()
}

/// Per (profile, strategy) means over successful runs, in first-seen order.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.profile.clone(), r.strategy.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let runs = &groups[&key];
            let ok: Vec<&&BenchRow> = runs.iter().filter(|r| r.status == "ok").collect();
            let mean = |f: &dyn Fn(&BenchRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            BenchSummary {
                mean_slot_count: mean(&|r| r.slot_count.unwrap_or(0) as f64),
                mean_wall_time_s: mean(&|r| r.wall_time_s.unwrap_or(0.0)),
                runs: runs.len(),
                failures: runs.len() - ok.len(),
                profile: key.0,
                strategy: key.1,
            }
        })
        .collect()
}

/// Runs the benchmark matrix, writes both CSVs and returns the report.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    for p in &args.profiles {
        BenchmarkProfile::by_name(p)?;
    }
    let cells: Vec<(String, u64)> = args
        .profiles
        .iter()
        .flat_map(|p| (0..args.repeats).map(move |i| (p.clone(), args.seed_base + i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<BenchRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|(p, seed)| bench_cell(p, *seed, &args.strategies))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let report = BenchReport {
        summary: summarize(&rows),
        rows,
    };

    write_csv(&args.out, &ROW_HEADER, &report.rows)?;
    let summary_path = args.summary.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
        args.out.with_file_name(format!("{stem}.summary.csv"))
    });
    write_csv(&summary_path, &SUMMARY_HEADER, &report.summary)?;
    Ok(report)
}

const ROW_HEADER: [&str; 7] = [
    "profile",
    "seed",
    "strategy",
    "status",
    "signal_count",
    "slot_count",
    "wall_time_s",
];
const SUMMARY_HEADER: [&str; 6] = [
    "profile",
    "strategy",
    "runs",
    "failures",
    "mean_slot_count",
    "mean_wall_time_s",
];

/// Writes `records` under `header`, which must match the field order of `T`.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl BenchReport {
    /// Mean slot counts with profiles as rows and strategies as columns.
    pub fn table(&self) -> String {
        let mut profiles: Vec<&str> = Vec::new();
        let mut strategies: Vec<&str> = Vec::new();
        for s in &self.summary {
            if !profiles.contains(&s.profile.as_str()) {
                profiles.push(&s.profile);
            }
            if !strategies.contains(&s.strategy.as_str()) {
                strategies.push(&s.strategy);
            }
        }
        let mut out = format!("{:<10}", "");
        for s in &strategies {
            out += &format!("{:>8}", s.to_uppercase());
        }
        out.push('\n');
        for p in &profiles {
            out += &format!("{p:<10}");
            for s in &strategies {
                let cell = self
                    .summary
                    .iter()
                    .find(|r| r.profile == *p && r.strategy == *s)
                    .map(|r| format!("{:>8.2}", r.mean_slot_count))
                    .unwrap_or_else(|| format!("{:>8}", "-"));
                out += &cell;
            }
            out.push('\n');
        }
        out
    }
}
