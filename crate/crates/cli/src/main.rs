//! `enlighten`: command-line driver for the teaching simulations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use enlighten_core::config::{ConfigError, RunConfig};
use enlighten_core::datagen::write_dataset;
use enlighten_core::metateach::{prepare_replicates_cached, run_meta_on, write_task_pool, MetaError};
use enlighten_core::planner::{run_experiment, verify_propositions, ExperimentId, PlanError};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "enlighten", version, about = "Teaching learners whose inner state can change")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the teaching, auxiliary and evaluation datasets.
    GenData {
        #[arg(long, default_value = "out/data")]
        out: PathBuf,
    },
    /// Run experiment 1, 2 or 3.
    Experiment {
        #[arg(long)]
        id: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        rollout_samples: Option<usize>,
    },
    /// Exhaustively check the manipulation and tutoring results on a tiny instance.
    Verify {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Switch probability of a tutoring action.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Teach the online meta-learner with the lookahead and random teachers.
    Meta {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Directory of trained target initializations; defaults to `<out>/cache`.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run the session service until interrupted.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Config(_) => EXIT_CONFIG,
            Self::Runtime(_) => EXIT_RUNTIME,
            Self::Verification(_) => EXIT_VERIFY,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Config(m) | Self::Runtime(m) | Self::Verification(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Config(_) | PlanError::TooLarge(_) => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<MetaError> for Failure {
    fn from(e: MetaError) -> Self {
        match e {
            MetaError::Config(_) => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn write(path: PathBuf, body: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(&path, body).map_err(io_at(&path))
}

fn revalidate(cfg: RunConfig) -> Result<RunConfig, Failure> {
    cfg.validate()?;
    Ok(cfg)
}

fn gen_data(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let setup = cfg.experiment_setup();
    let mut n = 0;
    let mut put = |ds, stem: String| -> Result<(), Failure> {
        write_dataset(&ds, out, &stem).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
        n += 1;
        Ok(())
    };
    put(setup.teaching_dataset(0)?, "teaching".into())?;
    for (k, ds) in setup.aux_datasets()?.into_iter().enumerate() {
        put(ds, format!("aux_{:02}", k + 1))?;
    }
    for (k, ds) in setup.eval_datasets()?.into_iter().enumerate() {
        put(ds, format!("eval_{:02}", k + 1))?;
    }
    println!("wrote {n} datasets to {}", out.display());
    Ok(())
}

fn experiment(cfg: &RunConfig, id: u32, out: &Path) -> Result<(), Failure> {
    let id = ExperimentId::from_number(id).ok_or_else(|| Failure::Usage(format!("unknown experiment id {id}; expected 1, 2 or 3")))?;
    let summary = run_experiment(id, &cfg.experiment_setup())?;
    let files = summary.write_outputs(out).map_err(io_at(out))?;
    print!("{}", summary.report_text());
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let report = verify_propositions(&cfg.verify)?;
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    write(out.join("verify_report.json"), serde_json::to_string_pretty(&report).expect("serializable report"))?;
    write(out.join("verify_report.txt"), report.report_text())?;
    print!("{}", report.report_text());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("a proposition check failed".into()))
    }
}

fn meta(cfg: &RunConfig, out: &Path, cache: &Path) -> Result<(), Failure> {
    let (reps, trained) = prepare_replicates_cached(&cfg.meta, cache)?;
    tracing::info!(trained, cached = reps.len() - trained, "target initializations ready");
    let summary = run_meta_on(&cfg.meta, &reps)?;
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    write(out.join("meta_curves.csv"), summary.curves_csv())?;
    write(out.join("meta_summary.json"), serde_json::to_string_pretty(&summary).expect("serializable summary"))?;
    write(out.join("meta_summary.txt"), summary.report_text())?;
    for r in &reps {
        write_task_pool(&r.tasks, &out.join(format!("tasks_seed{}.json", r.index)))?;
    }
    print!("{}", summary.report_text());
    Ok(())
}

fn serve(cfg: RunConfig) -> Result<(), Failure> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let bind = cfg.server.bind.clone();
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| Failure::Runtime(format!("cannot bind {bind}: {e}")))?;
        tracing::info!(address = %listener.local_addr()?, "listening");
        let state = enlighten_server::AppState::new(cfg);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        enlighten_server::serve(listener, state, shutdown).await?;
        Ok(())
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.meta.seed = seed;
    }
    match cli.command {
        Command::GenData { out } => gen_data(&revalidate(cfg)?, &out),
        Command::Experiment { id, out, n_seeds, horizon, rollout_samples } => {
            if let Some(n) = n_seeds {
                cfg.n_seeds = n;
            }
            if let Some(h) = horizon {
                cfg.teacher.horizon = h;
            }
            if let Some(r) = rollout_samples {
                cfg.teacher.rollout_samples = r;
            }
            experiment(&revalidate(cfg)?, id, &out)
        }
        Command::Verify { out, eta, horizon } => {
            if let Some(e) = eta {
                cfg.verify.eta = e;
            }
            if let Some(h) = horizon {
                cfg.verify.horizon = h;
            }
            verify(&revalidate(cfg)?, &out)
        }
        Command::Meta { out, n_seeds, rounds, cache } => {
            if let Some(n) = n_seeds {
                cfg.meta.n_seeds = n;
            }
            if let Some(r) = rounds {
                cfg.meta.rounds = r;
            }
            let cache = cache.unwrap_or_else(|| out.join("cache"));
            meta(&revalidate(cfg)?, &out, &cache)
        }
        Command::Serve { bind, log_dir } => {
            if let Some(b) = bind {
                cfg.server.bind = b;
            }
            if log_dir.is_some() {
                cfg.server.log_dir = log_dir;
            }
            serve(revalidate(cfg)?)
        }
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
