use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kadt::baselines::TeacherKind;
use kadt::diagnostics::{gradient_suite, GRAD_STEP, GRAD_TOL};
use kadt::harness::{emit_reports, reaggregate, run_comparison, run_experiment, ExperimentConfig, Preset, Summary};
use kadt::student::StudentKind;
use kadt::Result;

#[derive(Parser)]
#[command(name = "kadt", version, about = "Knowledge-tracing curriculum teacher")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a teacher (phase 1), then teach a fresh student with it (phase 2).
    Train(RunArgs),
    /// Run the ablation variants (or any list of teachers) side by side.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated teacher kinds.
        #[arg(long, value_delimiter = ',', default_value = "kadt_basic,kadt_kt,kadt")]
        teachers: Vec<String>,
    },
    /// Run every finite-difference gradient check.
    Gradcheck {
        /// Number of seeds, starting at 0.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
    /// Rebuild summary.json from the per-seed files in a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    teacher: Option<String>,
    /// Student kind for both phases.
    #[arg(long)]
    student: Option<String>,
    /// Student kind for phase 2 only.
    #[arg(long)]
    phase2_student: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    preset: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.apply_preset(p.parse::<Preset>()?);
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(t) = &self.teacher {
            cfg.teacher = t.parse()?;
        }
        if let Some(s) = &self.student {
            let kind: StudentKind = s.parse()?;
            cfg.phase1_student = kind;
            cfg.phase2_student = kind;
        }
        if let Some(s) = &self.phase2_student {
            cfg.phase2_student = s.parse()?;
        }
        if let Some(m) = self.episodes {
            cfg.episodes = m;
        }
        if let Some(t) = self.steps {
            cfg.steps = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(s: &Summary) {
    let a = &s.aggregate;
    let auc = a
        .final_test_auc
        .map(|x| format!("{:.4} ± {:.4}", x.mean, x.std))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{:<12} accuracy {:.4} ± {:.4}  final auc {}  ({} seeds)",
        s.teacher, a.mean_test_accuracy.mean, a.mean_test_accuracy.std, auc, a.mean_test_accuracy.n
    );
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.config()?;
            let run = run_experiment(&cfg)?;
            let summary = emit_reports(&run, &args.out)?;
            print_summary(&summary);
            println!("reports written to {}", args.out.display());
        }
        Command::Ablate { run, teachers } => {
            let cfg = run.config()?;
            let kinds = teachers
                .iter()
                .map(|t| t.parse::<TeacherKind>())
                .collect::<Result<Vec<_>>>()?;
            for s in run_comparison(&cfg, &kinds, &run.out, "ablation")? {
                print_summary(&s);
            }
            println!("reports written to {}", run.out.display());
        }
        Command::Gradcheck { seeds } => {
            let seeds: Vec<u64> = (0..seeds).collect();
            let entries = gradient_suite(&seeds)?;
            let mut ok = true;
            for e in &entries {
                ok &= e.report.pass;
                println!(
                    "{:<17} seed {:>2}  max rel err {:.3e}  {} entries  {}",
                    e.component,
                    e.seed,
                    e.report.max_rel_err,
                    e.report.entries_checked,
                    if e.report.pass { "ok" } else { "FAIL" }
                );
            }
            println!(
                "h = {GRAD_STEP:e}, tolerance = {GRAD_TOL:e}: {}",
                if ok { "all passed" } else { "failures" }
            );
            return Ok(ok);
        }
        Command::Report { out } => {
            print_summary(&reaggregate(&out)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
