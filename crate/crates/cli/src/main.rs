mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dce_core::fmt::num;
use dce_core::figures::{figure, FigureName, FigureOptions};
use dce_core::model::{Mode, ModelParams, ParamSpec};
use dce_core::multiscale::{analytic_trajectory, coefficient_tables};
use dce_core::observables::{iup_closed, mean_quanta_closed};
use dce_core::photonstats::{default_cutoff, pdf, prob_below_mean, write_pdf_csv};
use dce_core::pipeline::{
    closed_observables, linspace, numeric_kappa, numeric_observables, write_observables_csv,
    ObservableRow, Pipeline,
};
use dce_core::sweep::{sweep, with_jobs, write_sweep_csv, Execution, SweepConfig};
use dce_core::symplectic::{evolve_with, IntegratorConfig, Trajectory};
use dce_core::verify::{verify, VerifyOptions};
use dce_core::{DerivedParams, Error};

#[derive(Debug, Parser)]
#[command(name = "dce", version, about = "Photon creation in a modulated cavity with an oscillator detector")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Modulation depth.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Cavity-detector coupling.
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Small parameter setting the slow time tau = epsilon t (default: |kappa|).
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Scaled modulation depth, gamma = epsilon gamma0.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma0: Option<f64>,
    /// Scaled coupling, kappa = epsilon kappa0.
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa0: Option<f64>,
    /// gamma / (2 kappa); with --kappa it fixes gamma, alone it picks kappa.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// End of the slow-time axis (fig4 and pdf: the slow time of the snapshot).
    #[arg(long, global = true)]
    tau_max: Option<f64>,
    /// Number of slow-time samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// RK4 step; at most 1/40 of the modulation period.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// numeric, analytic (closed forms) or both.
    #[arg(long, global = true)]
    pipeline: Option<String>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// key=value file with defaults for any of the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate (or evaluate analytically) the evolution matrix up to --tau-max.
    Evolve {
        /// Store every RK4 step.
        #[arg(long)]
        full_resolution: bool,
    },
    /// Per-mode observables on a slow-time grid.
    Observables,
    /// Photon distributions of both modes at slow time --tau-max.
    Pdf,
    /// Data series of one figure.
    Figure {
        #[arg(value_parser = parse_figure)]
        name: FigureName,
    },
    /// Observables on a (beta, tau) grid.
    Sweep {
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        betas: Vec<f64>,
        /// Comma-separated tau values (default: grid from --tau-max and --samples).
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
    },
    /// Run the cross-checks and report pass/fail.
    Verify,
}

fn parse_figure(s: &str) -> Result<FigureName, String> {
    s.parse()
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed")]
    VerificationFailed,
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Io(_)) => 3,
            CliError::Core(_) | CliError::Usage(_) => 1,
            CliError::VerificationFailed => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flags merged over the config file.
struct Settings {
    params: ParamSpec,
    tau_max: Option<f64>,
    samples: Option<usize>,
    dt: Option<f64>,
    pipeline: Option<Pipeline>,
    output: Option<PathBuf>,
    format: Format,
    jobs: Option<usize>,
}

impl Settings {
    fn new(c: Common) -> CliResult<Self> {
        let file = match &c.config {
            Some(path) => config::load(path)?,
            None => config::FileConfig::default(),
        };
        let flags = ParamSpec {
            gamma: c.gamma,
            kappa: c.kappa,
            epsilon: c.epsilon,
            gamma0: c.gamma0,
            kappa0: c.kappa0,
            beta: c.beta,
            convention: None,
        };
        let pipeline = match c.pipeline.or(file.pipeline) {
            Some(s) => Some(s.parse::<Pipeline>().map_err(CliError::Usage)?),
            None => None,
        };
        let format = match (c.format, file.format.as_deref()) {
            (Some(f), _) => f,
            (None, None) => Format::Csv,
            (None, Some(s)) => Format::from_str(s, true).map_err(CliError::Usage)?,
        };
        let jobs = c.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(Settings {
            params: flags.or(&file.params),
            tau_max: c.tau_max.or(file.tau_max),
            samples: c.samples.or(file.samples),
            dt: c.dt.or(file.dt),
            pipeline,
            output: c.output.or(file.output.map(PathBuf::from)),
            format,
            jobs,
        })
    }

    /// Model parameters; `None` when no model key was given.
    fn model(&self) -> CliResult<Option<ModelParams>> {
        if self.params.is_empty() {
            return Ok(None);
        }
        let mut model = self.params.clone();
        if let (Some(beta), None, None) = (model.beta, model.kappa, model.kappa0) {
            model.kappa = Some(numeric_kappa(beta));
        }
        Ok(Some(model.resolve()?))
    }

    fn model_or_default(&self) -> CliResult<ModelParams> {
        match self.model()? {
            Some(p) => Ok(p),
            None => Ok(ModelParams::from_beta(1.0, 0.01)?),
        }
    }

    fn tau_grid(&self, default_max: f64, default_samples: usize) -> CliResult<Vec<f64>> {
        Ok(linspace(
            0.0,
            self.tau_max.unwrap_or(default_max),
            self.samples.unwrap_or(default_samples),
        )?)
    }

    fn pipeline_single(&self, default: Pipeline, command: &str) -> CliResult<Pipeline> {
        match self.pipeline.unwrap_or(default) {
            Pipeline::Both => Err(CliError::Usage(format!(
                "`{command}` takes --pipeline numeric or analytic"
            ))),
            p => Ok(p),
        }
    }

    fn dt_for(&self, p: &ModelParams) -> CliResult<f64> {
        let dt = self.dt.unwrap_or(IntegratorConfig::for_params(p).dt);
        IntegratorConfig { dt, stride: 1 }.validate(p)?;
        Ok(dt)
    }

    fn sink(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn model_metadata(p: &ModelParams) -> Vec<(&'static str, String)> {
    vec![
        ("gamma", num(p.gamma())),
        ("kappa", num(p.kappa())),
        ("epsilon", num(p.epsilon())),
        ("beta", num(p.beta())),
    ]
}

fn trajectory_json(traj: &Trajectory, p: &ModelParams) -> serde_json::Value {
    json!({
        "source": traj.source.as_str(),
        "gamma": p.gamma(),
        "kappa": p.kappa(),
        "beta": p.beta(),
        "samples": traj.samples.iter().map(|s| json!({
            "t": s.t,
            "lambda": s.matrix.transpose().iter().copied().collect::<Vec<f64>>(),
        })).collect::<Vec<_>>(),
    })
}

fn cmd_evolve(s: &Settings, full_resolution: bool) -> CliResult<()> {
    let p = s.model_or_default()?;
    let pipeline = s.pipeline_single(Pipeline::Numeric, "evolve")?;
    let mut cfg = IntegratorConfig::with_dt(&p, s.dt_for(&p)?);
    if full_resolution {
        cfg = cfg.full_resolution();
    }
    let t_final = p.fast_time(s.tau_max.unwrap_or(1.0));
    let traj = match pipeline {
        Pipeline::Numeric => evolve_with(&p, t_final, &cfg)?,
        _ => {
            let h = cfg.dt * cfg.stride as f64;
            let count = (t_final / h).floor() as usize;
            let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * h).collect();
            if times.last().is_some_and(|&t| t < t_final) {
                times.push(t_final);
            }
            analytic_trajectory(&p, &times, &coefficient_tables(&p.derive()?))?
        }
    };
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => {
            let mut meta = model_metadata(&p);
            meta.push(("dt", num(cfg.dt)));
            traj.write_csv(&mut w, &meta)?;
        }
        Format::Json => write_json(&mut w, &trajectory_json(&traj, &p))?,
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write>(w: &mut W, v: &serde_json::Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, v).map_err(Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn cmd_observables(s: &Settings) -> CliResult<()> {
    let taus = s.tau_grid(4.0, 401)?;
    let pipeline = s.pipeline_single(Pipeline::Analytic, "observables")?;
    let p = s.model_or_default()?;
    let rows: Vec<ObservableRow> = match pipeline {
        Pipeline::Numeric => numeric_observables(&p, &taus, s.dt_for(&p)?)?,
        _ => closed_observables(&DerivedParams::for_beta(p.beta())?, &taus)?,
    };
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => {
            let mut meta = model_metadata(&p);
            meta.push(("pipeline", pipeline.as_str().to_string()));
            write_observables_csv(&mut w, &rows, &meta)?;
        }
        Format::Json => write_json(
            &mut w,
            &json!({ "beta": p.beta(), "pipeline": pipeline.as_str(), "rows": rows }),
        )?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_pdf(s: &Settings) -> CliResult<()> {
    let beta = s.model()?.map_or(1.0, |p| p.beta());
    let tau = s.tau_max.unwrap_or(2.0);
    let d = DerivedParams::for_beta(beta)?;
    let iup = iup_closed(tau, &d);
    let n1 = mean_quanta_closed(tau, &d, Mode::Field)?;
    let n2 = mean_quanta_closed(tau, &d, Mode::Detector)?;
    let k_max = default_cutoff(n1.max(n2));
    let (p1, p2) = (pdf(n1, iup, k_max)?, pdf(n2, iup, k_max)?);
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => write_pdf_csv(
            &mut w,
            &p1,
            &p2,
            &[
                ("beta", num(beta)),
                ("tau", num(tau)),
                ("n1", num(n1)),
                ("n2", num(n2)),
                ("D", num(iup)),
                ("k_max", k_max.to_string()),
                ("tail1", num(p1.tail_mass)),
                ("tail2", num(p2.tail_mass)),
                ("prob1_below_mean", num(prob_below_mean(&p1, n1))),
                ("prob2_below_mean", num(prob_below_mean(&p2, n2))),
            ],
        )?,
        Format::Json => write_json(
            &mut w,
            &json!({ "beta": beta, "tau": tau, "field": p1, "detector": p2 }),
        )?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_figure(s: &Settings, name: FigureName) -> CliResult<()> {
    let pipeline = s.pipeline.unwrap_or(match name {
        FigureName::Fig1 => Pipeline::Both,
        _ => Pipeline::Analytic,
    });
    if name == FigureName::Fig1 && pipeline != Pipeline::Both {
        return Err(CliError::Usage("fig1 compares both pipelines; use --pipeline both".into()));
    }
    let table = figure(
        name,
        &FigureOptions {
            params: s.model()?,
            tau_max: s.tau_max,
            samples: s.samples,
            pipeline,
            dt: s.dt,
        },
    )?;
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => table.write_csv(&mut w)?,
        Format::Json => {
            table.write_json(&mut w)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_sweep(s: &Settings, betas: Vec<f64>, taus: Option<Vec<f64>>) -> CliResult<()> {
    let taus = match taus {
        Some(t) => t,
        None => s.tau_grid(4.0, 9)?,
    };
    let cfg = SweepConfig {
        betas,
        taus,
        pipeline: s.pipeline_single(Pipeline::Analytic, "sweep")?,
        dt: s.dt,
    };
    let rows = with_jobs(s.jobs, || sweep(&cfg, Execution::default()))??;
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => write_sweep_csv(&mut w, &rows, &[("pipeline", cfg.pipeline.as_str().to_string())])?,
        Format::Json => write_json(&mut w, &json!({ "pipeline": cfg.pipeline.as_str(), "rows": rows }))?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify(s: &Settings) -> CliResult<()> {
    if s.pipeline.is_some_and(|p| p != Pipeline::Both) {
        return Err(CliError::Usage("verify compares both pipelines; use --pipeline both".into()));
    }
    let report = verify(&VerifyOptions {
        dt: s.dt,
        coefficients: None,
    })?;
    let mut w = s.sink()?;
    match s.format {
        Format::Csv => {
            writeln!(w, "check,passed,value,threshold")?;
            for c in &report.checks {
                writeln!(w, "{},{},{:e},{:e}", c.name, c.passed, c.value, c.threshold)?;
            }
        }
        Format::Json => {
            report.write_json(&mut w)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    report.write_text(io::stderr().lock())?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let s = Settings::new(cli.common)?;
    match cli.command {
        Command::Evolve { full_resolution } => cmd_evolve(&s, full_resolution),
        Command::Observables => cmd_observables(&s),
        Command::Pdf => cmd_pdf(&s),
        Command::Figure { name } => cmd_figure(&s, name),
        Command::Sweep { betas, taus } => cmd_sweep(&s, betas, taus),
        Command::Verify => cmd_verify(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Core(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
