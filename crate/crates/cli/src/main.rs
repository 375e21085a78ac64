//! `nprog`: run neural programs, learn parking models, sample commands,
//! simulate parking and check golden values.
//!
//! Exit codes: 0 success, 1 input error, 2 runtime error, 3 verification failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nprog::check::golden_report;
use nprog::gauss::{erfc, Kernel, RngStream};
use nprog::gbn::{
    format_number, format_significant, layout_from_labels, learned_chain, load_model, load_traces, model_to_csv,
    precision_chain, traces_to_csv, Gbn, LearningState, DEFAULT_PRIOR_SCALE,
};
use nprog::lang::{parse, Env, Stmt, Store, DEFAULT_STEP_BUDGET};
use nprog::sim::{gen_expert_traces, path_to_csv, run_parking, WorldConfig, PARKING_PROGRAM};
use nprog::{GbnError, SimError};

#[derive(Parser)]
#[command(name = "nprog", version, about = "Neural programs with probit guards and learned parking models")]
struct Cli {
    /// Root seed; every trial or run derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files. Tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program for a number of trials and summarise the final stores.
    Run {
        program: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Also emit every guard evaluation.
        #[arg(long)]
        trace_log: bool,
        /// Initial variable, `name=value`; repeatable.
        #[arg(long = "set", value_parser = parse_binding)]
        set: Vec<(String, f64)>,
        /// Step budget per trial.
        #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
        budget: u64,
    },
    /// Learn a chain model from a trace CSV.
    Learn {
        traces: PathBuf,
        /// Prior model CSV. A `.state` file next to it continues that learning run exactly.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Equivalent sample size of a prior built from a model CSV.
        #[arg(long)]
        prior_weight: Option<f64>,
        /// World file whose maneuver supplies motion types and directions.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Draw command vectors from a model.
    Sample {
        model: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
    },
    /// Closed-loop parking runs in the simulator.
    Park {
        /// Program source; defaults to the seven-block parking program.
        #[arg(long)]
        program: Option<PathBuf>,
        /// Model CSV; learned from synthetic expert traces when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// World file; defaults to the shipped parking world.
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        /// Override the world's slip factor.
        #[arg(long)]
        slip: Option<f64>,
        /// Expert traces to learn from when no model is given.
        #[arg(long, default_value_t = 500)]
        experts: usize,
        /// Write `path_<run>.csv` for every run (needs --out).
        #[arg(long)]
        paths: bool,
    },
    /// Print the golden-value report; exit 3 if anything fails.
    Check {
        /// Use a deliberately wrong erfc (negative control).
        #[arg(long, hide = true)]
        perturb_kernel: bool,
    },
}

enum Failure {
    Input(String),
    Runtime(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Runtime(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<GbnError> for Failure {
    fn from(e: GbnError) -> Self {
        match e {
            GbnError::ImproperPosterior { .. } | GbnError::NegativeRecoveredVariance { .. } | GbnError::Gauss(_) => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config { .. } | SimError::InvalidWorld(_) | SimError::ModelMismatch { .. } => {
                Failure::Input(e.to_string())
            }
            SimError::Gbn(g) => g.into(),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), v))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Stmt, Failure> {
    let src = read(path)?;
    parse(&src).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Six significant digits for summaries.
fn short(x: f64) -> String {
    format_significant(x, 6)
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Failure::Input(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    /// Write `name` into the output directory, or print it when there is none.
    fn table(&self, name: &str, text: &str) -> Outcome {
        match &self.dir {
            Some(d) => {
                let p = d.join(name);
                fs::write(&p, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Write only when there is an output directory.
    fn file(&self, name: &str, text: &str) -> Outcome {
        if self.dir.is_some() {
            self.table(name, text)?;
        }
        Ok(())
    }
}

/// Running mean and variance.
#[derive(Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

fn cmd_run(cli: &Cli, program: &Path, trials: u64, trace_log: bool, set: &[(String, f64)], budget: u64) -> Outcome {
    let prog = load_program(program)?;
    let out = Output::new(cli.out.clone())?;
    let mut initial = Store::new();
    for (k, v) in set {
        initial.set(k, *v);
    }
    let mut stats: std::collections::BTreeMap<String, Moments> = Default::default();
    let mut log = String::from("trial\tstmt\tdiff\tsigma2\tprob\tq1\tq2\tsample\ttaken\n");
    for t in 0..trials {
        let mut env = Env::with_rng(RngStream::for_trial(cli.seed, t))
            .with_budget(budget)
            .with_store(initial.clone());
        if trace_log {
            env = env.recording();
        }
        env.exec(&prog)
            .map_err(|e| Failure::Runtime(format!("{}: trial {t}: {e}", program.display())))?;
        for (name, v) in env.store.iter() {
            stats.entry(name.to_string()).or_default().push(v);
        }
        for ev in env.take_events() {
            let _ = writeln!(log, "{t}\t{}", ev.log_line());
        }
    }
    let mut summary = String::from("variable,trials,mean,std\n");
    for (name, m) in &stats {
        let _ = writeln!(summary, "{name},{},{},{}", m.n, short(m.mean), short(m.std()));
    }
    out.table("summary.csv", &summary)?;
    if trace_log {
        out.table("guards.tsv", &log)?;
    }
    Ok(())
}

fn world_or_default(path: Option<&Path>) -> Result<WorldConfig, Failure> {
    match path {
        Some(p) => Ok(WorldConfig::load(p)?),
        None => Ok(WorldConfig::default()),
    }
}

fn cmd_learn(cli: &Cli, traces: &Path, prior: Option<&Path>, weight: Option<f64>, world: Option<&Path>) -> Outcome {
    let (labels, data) = load_traces(traces)?;
    if data.is_empty() {
        return Err(Failure::Input(format!("{}: no trace rows", traces.display())));
    }
    let n = labels.len();
    let prior_model = prior.map(load_model).transpose()?;
    let layout = match &prior_model {
        Some(m) => m.clone(),
        None => {
            let w = world_or_default(world)?;
            if w.nominal.len() == n {
                w.nominal.to_model(&vec![1.0; n], &vec![0.0; n - 1])?
            } else {
                layout_from_labels(&labels)?
            }
        }
    };
    if layout.len() != n {
        return Err(Failure::Input(format!(
            "traces have {n} columns, prior model has {} nodes",
            layout.len()
        )));
    }
    let state = match (prior, &prior_model) {
        (Some(path), Some(model)) => {
            let state_path = path.with_extension("state");
            if state_path.exists() {
                LearningState::load(&state_path)?
            } else {
                let mgd = precision_chain(model)?;
                LearningState::from_prior(&mgd, weight.unwrap_or(n as f64 + 2.0))?
            }
        }
        _ => LearningState::weak_from_traces(&data, DEFAULT_PRIOR_SCALE)?,
    };
    let next = state.learn_update(&data)?;
    let model = learned_chain(&next, &layout)?;
    let out = Output::new(cli.out.clone())?;
    out.table("model.csv", &model_to_csv(&model)?)?;
    out.file("model.state", &next.to_text())?;
    let mut table = format!("learned from {} traces (v = {})\n", data.len(), short(next.v));
    table.push_str(&model.to_string());
    // Keep stdout clean for the CSV when it is printed there.
    if out.dir.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}

fn cmd_sample(cli: &Cli, model: &Path, count: u64) -> Outcome {
    let g = load_model(model)?;
    let labels: Vec<String> = g.nodes().iter().map(|n| n.label.clone()).collect();
    let samples: Vec<_> = (0..count)
        .map(|i| g.sample_commands(&mut RngStream::for_trial(cli.seed, i)).into())
        .collect();
    Output::new(cli.out.clone())?.table("samples.csv", &traces_to_csv(&labels, &samples))
}

#[allow(clippy::too_many_arguments)]
fn cmd_park(
    cli: &Cli,
    program: Option<&Path>,
    model: Option<&Path>,
    world: Option<&Path>,
    runs: u64,
    slip: Option<f64>,
    experts: usize,
    paths: bool,
) -> Outcome {
    let prog = match program {
        Some(p) => load_program(p)?,
        None => parse(PARKING_PROGRAM).map_err(|e| Failure::Runtime(e.to_string()))?,
    };
    let mut w = world_or_default(world)?;
    if let Some(s) = slip {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Failure::Input(format!("--slip must be >= 0, got {s}")));
        }
        w = w.with_slip(s);
    }
    let out = Output::new(cli.out.clone())?;
    let g: Gbn = match model {
        Some(p) => load_model(p)?,
        None => {
            let mut rng = RngStream::for_trial(cli.seed, u64::MAX);
            let traces = gen_expert_traces(experts, &w, &mut rng)?;
            out.file("expert_traces.csv", &traces_to_csv(&w.nominal.labels(), &traces))?;
            let state = LearningState::weak_from_traces(&traces, DEFAULT_PRIOR_SCALE)?.learn_update(&traces)?;
            let n = w.nominal.len();
            let layout = w.nominal.to_model(&vec![1.0; n], &vec![0.0; n.saturating_sub(1)])?;
            let g = learned_chain(&state, &layout)?;
            out.file("model.csv", &model_to_csv(&g)?)?;
            g
        }
    };
    let mut rows = String::from("run,seed,success,x,y,theta");
    for n in g.nodes() {
        rows.push(',');
        rows.push_str(&n.label);
    }
    rows.push('\n');
    let mut ok = 0u64;
    for i in 0..runs {
        let seed = RngStream::for_trial(cli.seed, i).next_u64();
        let r = run_parking(&prog, &g, &w, seed)?;
        ok += u64::from(r.success);
        let p = r.final_pose;
        let _ = write!(
            rows,
            "{i},{seed},{},{},{},{}",
            u8::from(r.success),
            format_number(p.x),
            format_number(p.y),
            format_number(p.theta)
        );
        for c in &r.commands {
            rows.push(',');
            rows.push_str(&format_number(*c));
        }
        rows.push('\n');
        if paths {
            out.file(&format!("path_{i}.csv"), &path_to_csv(&r.path))?;
        }
    }
    out.table("park.csv", &rows)?;
    println!(
        "success rate {} ({ok}/{runs}) slip {}",
        short(ok as f64 / runs as f64),
        short(w.noise.slip)
    );
    Ok(())
}

fn skewed_erfc(x: f64) -> f64 {
    erfc(x * 1.05)
}

fn cmd_check(perturb: bool) -> Outcome {
    let kernel = if perturb {
        Kernel::with_erfc(skewed_erfc)
    } else {
        Kernel::STANDARD
    };
    let report = golden_report(&kernel);
    for c in &report {
        println!("{c}");
    }
    let failed = report.iter().filter(|c| !c.pass).count();
    println!("{} of {} golden checks passed", report.len() - failed, report.len());
    if failed > 0 {
        return Err(Failure::Verification(format!("{failed} golden check(s) failed")));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Run {
            program,
            trials,
            trace_log,
            set,
            budget,
        } => cmd_run(cli, program, *trials, *trace_log, set, *budget),
        Command::Learn {
            traces,
            prior,
            prior_weight,
            world,
        } => cmd_learn(cli, traces, prior.as_deref(), *prior_weight, world.as_deref()),
        Command::Sample { model, count } => cmd_sample(cli, model, *count),
        Command::Park {
            program,
            model,
            world,
            runs,
            slip,
            experts,
            paths,
        } => cmd_park(
            cli,
            program.as_deref(),
            model.as_deref(),
            world.as_deref(),
            *runs,
            *slip,
            *experts,
            *paths,
        ),
        Command::Check { perturb_kernel } => cmd_check(*perturb_kernel),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Format::Csv = cli.format;
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
