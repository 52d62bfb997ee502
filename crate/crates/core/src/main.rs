use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use ftarm::faults::FaultScenario;
use ftarm::harness::{
    evaluate, ik_demo, report_text, write_episode_rows, write_report, EvalReport, IkDemoConfig,
    MeanPolicy, RunConfig,
};
use ftarm::nn::Checkpoint;
use ftarm::ppo::{train, TrainScenarios};
use ftarm::Error;

#[derive(Parser, Debug)]
#[command(
    name = "ftarm",
    version,
    about = "Drawer opening under injected joint faults: training, evaluation and IK demo"
)]
struct Cli {
    /// Config file of `key = value` lines; absent keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Training seed for `train`, first evaluation seed for `eval`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `eval`: a single scenario (none, broken:J, intermittent:J[:P],
    /// works_first_half:J, works_second_half:J). `train`: mixed or none.
    #[arg(long, global = true)]
    fault: Option<String>,
    /// Training episodes for `train`, episodes per scenario for `eval`.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Checkpoint to write (`train`) or read (`eval`, `inspect-checkpoint`).
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a policy; writes train_log.csv and the checkpoint.
    Train,
    /// Evaluate the mean policy; writes eval_report.{csv,txt} and eval_episodes.csv.
    Eval,
    /// Track the three waypoints with IK, free and with one joint locked.
    IkDemo {
        /// Joint to lock in the second run (0-based); overrides the config.
        #[arg(long)]
        lock: Option<usize>,
    },
    /// Print the effective configuration.
    PrintConfig,
    /// Print the layout of a checkpoint file.
    InspectCheckpoint,
}

/// Usage and configuration problems exit with 1, everything else with 2.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::FaultSpec(_) | Error::JointIndex { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("{}: {}", path.display(), io)),
            other => Failure::from(other),
        })?,
        None => RunConfig::reference(),
    };
    if let Some(seed) = cli.seed {
        cfg.ppo.seed = seed;
        cfg.eval.seed = seed;
    }
    if let Some(n) = cli.episodes {
        cfg.ppo.total_episodes = n;
        cfg.eval.episodes = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn checkpoint_path(cli: &Cli) -> PathBuf {
    cli.checkpoint
        .clone()
        .unwrap_or_else(|| cli.out.join("policy.ckpt"))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {}", path.display(), e)))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    Checkpoint::load(path).map_err(|e| Failure::Runtime(format!("{}: {}", path.display(), e)))
}

fn run_train(cli: &Cli, mut cfg: RunConfig) -> Result<(), Failure> {
    if let Some(f) = &cli.fault {
        cfg.ppo.train_scenarios = match f.as_str() {
            "mixed" => TrainScenarios::Mixed,
            "none" | "no_fault" => TrainScenarios::NoFault,
            other => {
                return Err(Failure::Usage(format!(
                    "train accepts --fault mixed or none, got {:?}",
                    other
                )))
            }
        };
    }
    fs::create_dir_all(&cli.out)?;
    let ckpt = checkpoint_path(cli);
    let mut log = create(&cli.out.join("train_log.csv"))?;
    let started = Instant::now();
    let summary = train(&cfg.env, &cfg.ppo, Some(&ckpt), Some(&mut log), &mut |p| {
        if p.updates % 25 == 0 {
            eprintln!(
                "[{:6.0}s] update {:5}  episodes {:6}  recent reward {:9.2}  recent success {:.2}",
                started.elapsed().as_secs_f64(),
                p.updates,
                p.episodes,
                p.recent_reward,
                p.recent_success
            );
        }
    })?;
    log.flush()?;
    println!(
        "trained {} episodes in {} updates ({:.0} s); checkpoint {}",
        summary.episodes.len(),
        summary.updates,
        started.elapsed().as_secs_f64(),
        ckpt.display()
    );
    Ok(())
}

fn run_eval(cli: &Cli, cfg: RunConfig) -> Result<(), Failure> {
    let scenarios: Vec<FaultScenario> = match &cli.fault {
        Some(spec) => vec![spec.parse()?],
        None => FaultScenario::evaluation_suite(cfg.eval.joint).to_vec(),
    };
    let checkpoint = load_checkpoint(&checkpoint_path(cli))?;
    fs::create_dir_all(&cli.out)?;
    let mut reports: Vec<EvalReport> = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let mut controller = MeanPolicy(&checkpoint.actor);
        reports.push(evaluate(
            &mut controller,
            &cfg.env,
            scenario,
            cfg.eval.episodes,
            cfg.eval.seed,
        )?);
    }
    write_report(&reports, &cli.out.join("eval_report.csv"))?;
    let mut rows = create(&cli.out.join("eval_episodes.csv"))?;
    write_episode_rows(&mut rows, &reports)?;
    rows.flush()?;
    print!("{}", report_text(&reports));
    Ok(())
}

fn run_ik_demo(cli: &Cli, cfg: RunConfig, lock: Option<usize>) -> Result<(), Failure> {
    fs::create_dir_all(&cli.out)?;
    let locked = lock.or(cfg.ik_locked_joint);
    let mut summary = String::new();
    let mut runs = vec![(
        "ik_trajectory.csv",
        IkDemoConfig {
            locked: None,
            ..cfg.ik.clone()
        },
    )];
    if let Some(j) = locked {
        runs.push((
            "ik_trajectory_locked.csv",
            IkDemoConfig {
                locked: Some(j),
                ..cfg.ik.clone()
            },
        ));
    }
    for (file, demo) in runs {
        let result = ik_demo(&cfg.env.robot, &demo)?;
        let mut out = create(&cli.out.join(file))?;
        result.write_csv(&mut out)?;
        out.flush()?;
        summary.push_str(&format!("# {}\n", file));
        summary.push_str(&result.summary(&demo));
        summary.push('\n');
    }
    fs::write(cli.out.join("ik_summary.txt"), &summary)?;
    print!("{}", summary);
    Ok(())
}

fn run_inspect(cli: &Cli) -> Result<(), Failure> {
    let path = checkpoint_path(cli);
    let ckpt = load_checkpoint(&path)?;
    let describe = |name: &str, net: &ftarm::nn::Mlp| {
        let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
        println!(
            "{}: layers {} hidden {:?} output {:?} parameters {}",
            name,
            sizes.join("-"),
            net.hidden,
            net.output,
            net.parameter_count()
        );
    };
    println!("checkpoint {}", path.display());
    describe("actor", &ckpt.actor.mean_net);
    let log_std: Vec<String> = ckpt
        .actor
        .log_std
        .iter()
        .map(|v| format!("{:.4}", v))
        .collect();
    println!("actor log_std [{}]", log_std.join(", "));
    match &ckpt.critic {
        Some(c) => describe("critic", &c.net),
        None => println!("critic: absent"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.print_config || matches!(cli.command, Some(Command::PrintConfig)) {
        print!("{}", load_config(cli)?.to_text());
        return Ok(());
    }
    match &cli.command {
        None => Err(Failure::Usage("no subcommand given; see --help".into())),
        Some(Command::Train) => run_train(cli, load_config(cli)?),
        Some(Command::Eval) => run_eval(cli, load_config(cli)?),
        Some(Command::IkDemo { lock }) => run_ik_demo(cli, load_config(cli)?, *lock),
        Some(Command::InspectCheckpoint) => run_inspect(cli),
        Some(Command::PrintConfig) => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
