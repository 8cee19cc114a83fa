use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use robust_xbar::io::{read_dataset, write_atomic};
use robust_xbar::simulation::{efficiency_study, parse_config, run_length_grid};
use robust_xbar::{
    build_table, control_limits, load_table, phase1_estimate, save_table, sensitivity_sweep, svg, ControlLimits,
    Error, Estimator, FactorTable, Method, PhaseIEstimate, PoolingType, SensitivitySweepSpec, Subgroup,
    SweepPlacement, DEFAULT_G,
};

#[derive(Parser)]
#[command(name = "robust-xbar", version, about = "Robust X-bar chart limits for unequal subgroup sizes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Monte-Carlo factor table (unbiasing constants and variances).
    Factors(FactorsArgs),
    /// Phase-I control limits from a `sample_id,value` CSV.
    Limits(LimitsArgs),
    /// Relative-efficiency study of every estimator and pooling type.
    SimulateRe(SimulateArgs),
    /// In-control run-length study of the method × pooling grid.
    SimulateArl(SimulateArgs),
    /// Limits as one contaminating value sweeps over a grid.
    Sensitivity(SensitivityArgs),
}

#[derive(Args)]
struct TableArg {
    /// Factor table JSON; defaults to the built-in table.
    #[arg(long, env = "SPC_FACTORS")]
    factors: Option<PathBuf>,
}

impl TableArg {
    fn load(&self) -> Result<FactorTable, Error> {
        match &self.factors {
            Some(p) => load_table(p),
            None => Ok(FactorTable::builtin().clone()),
        }
    }
}

#[derive(Args)]
struct FactorsArgs {
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', default_values_t = Estimator::ALL.to_vec())]
    estimators: Vec<Estimator>,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    #[arg(long, default_value_t = 10_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Args)]
struct LimitsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated methods (I, II, III).
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    method: Vec<Method>,
    #[arg(long, default_value_t = PoolingType::C)]
    pooling: PoolingType,
    /// Phase-II subgroup size.
    #[arg(long)]
    nk: usize,
    #[arg(long, default_value_t = DEFAULT_G)]
    g: f64,
    #[command(flatten)]
    table: TableArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON or `key = value` experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output stem; writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    table: TableArg,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    start: f64,
    #[arg(long)]
    stop: f64,
    #[arg(long)]
    step: f64,
    /// 1-based subgroup that receives the contaminating value.
    #[arg(long)]
    sample: usize,
    /// Overwrite this 1-based observation instead of appending one.
    #[arg(long)]
    replace: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    methods: Vec<Method>,
    #[arg(long, default_value_t = PoolingType::C)]
    pooling: PoolingType,
    #[arg(long)]
    nk: usize,
    #[arg(long, default_value_t = DEFAULT_G)]
    g: f64,
    #[command(flatten)]
    table: TableArg,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn factors(a: FactorsArgs) -> CmdResult {
    let total = a.n_max.saturating_sub(a.n_min) + 1;
    let table = build_table(&a.estimators, a.n_min..=a.n_max, a.reps, a.seed, |n| {
        eprintln!("n = {n} done ({total} sizes)");
    })?;
    save_table(&table, &a.out)?;
    eprintln!("wrote {} entries to {}", table.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct LimitsReport<'a> {
    estimate: &'a PhaseIEstimate,
    limits: ControlLimits,
    subgroup_means: Vec<f64>,
    /// Phase-I subgroups whose mean falls outside the limits.
    signals: Vec<&'a str>,
}

fn subgroup_means(samples: &[Subgroup]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| s.values().iter().sum::<f64>() / s.n() as f64)
        .collect()
}

fn limits(a: LimitsArgs) -> CmdResult {
    let table = a.table.load()?;
    let samples = read_dataset(&a.data)?;
    let means = subgroup_means(&samples);
    let mut results = Vec::new();
    for &m in &a.method {
        let est = phase1_estimate(&samples, m, a.pooling, &table)?;
        let lim = control_limits(&est, a.nk, a.g)?;
        results.push((est, lim));
    }
    let text = match a.format {
        Format::Json => {
            let reports: Vec<LimitsReport> = results
                .iter()
                .map(|(est, lim)| LimitsReport {
                    estimate: est,
                    limits: *lim,
                    subgroup_means: means.clone(),
                    signals: samples
                        .iter()
                        .zip(&means)
                        .filter(|(_, &x)| !lim.contains(x))
                        .map(|(s, _)| s.id.as_str())
                        .collect(),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&reports).map_err(Error::from)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("method,pooling,n_k,g,mu_hat,sigma_hat,lcl,cl,ucl\n");
            for (est, lim) in &results {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    est.method, est.pooling, lim.n_k, lim.g, est.mu_hat, est.sigma_hat, lim.lcl, lim.cl, lim.ucl
                ));
            }
            s
        }
        Format::Svg => {
            if results.len() != 1 {
                return Err(Failure::Usage("--format svg needs exactly one --method".into()));
            }
            let (est, lim) = &results[0];
            svg::xbar_chart(&means, lim, &format!("Method {} / pooling {}", est.method, est.pooling))
        }
    };
    emit(a.out.as_deref(), &text)
}

fn simulate_re(a: SimulateArgs) -> CmdResult {
    let table = a.table.load()?;
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let cfg = parse_config(&text, &a.config.display().to_string())?;
    let report = efficiency_study(&cfg.scenario(), None, &table)?;
    let mut json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    json.push('\n');
    write_atomic(&with_extension(&a.out, "json"), json.as_bytes())?;
    write_atomic(&with_extension(&a.out, "csv"), report.to_csv().as_bytes())?;
    Ok(())
}

fn simulate_arl(a: SimulateArgs) -> CmdResult {
    let table = a.table.load()?;
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let cfg = parse_config(&text, &a.config.display().to_string())?;
    let grid = run_length_grid(&cfg.run_length_config(), &cfg.cells(), &table)?;
    write_atomic(&with_extension(&a.out, "json"), grid.to_json()?.as_bytes())?;
    write_atomic(&with_extension(&a.out, "csv"), grid.to_csv().as_bytes())?;
    Ok(())
}

fn sensitivity(a: SensitivityArgs) -> CmdResult {
    let table = a.table.load()?;
    let samples = read_dataset(&a.data)?;
    let spec = SensitivitySweepSpec {
        start: a.start,
        stop: a.stop,
        step: a.step,
        sample_index: a.sample,
        placement: match a.replace {
            Some(observation_index) => SweepPlacement::Replace { observation_index },
            None => SweepPlacement::Append,
        },
        methods: a.methods,
        pooling: a.pooling,
        n_k: a.nk,
        g: a.g,
    };
    let rows = sensitivity_sweep(&samples, &spec, &table)?;
    let mut csv = String::from("delta,method,lcl,cl,ucl\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.delta, r.method, r.limits.lcl, r.limits.cl, r.limits.ucl));
    }
    if let Some(p) = &a.svg {
        let title = format!("Limits vs contaminating value in subgroup {}", a.sample);
        write_atomic(p, svg::sensitivity_chart(&rows, &title).as_bytes())?;
    }
    emit(a.out.as_deref(), &csv)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TableIncomplete { .. } | Error::VersionMismatch { .. } | Error::ChecksumMismatch => 4,
        Error::InvalidForLocation | Error::UnsupportedCombination(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Factors(a) => factors(a),
        Command::Limits(a) => limits(a),
        Command::SimulateRe(a) => simulate_re(a),
        Command::SimulateArl(a) => simulate_arl(a),
        Command::Sensitivity(a) => sensitivity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
