//! Command-line interface: `run`, `ablate`, `verify` and `gen-data`
//! subcommands over a shared TOML configuration file.
//!
//! Every command is deterministic under a fixed config and seed; repeated
//! invocations produce byte-identical output files.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::data::generate_synthetic;
use crate::error::{Error, Result};
use crate::metrics::{average_accuracy, SessionReport};
use crate::protocol::{run_full, run_full_with_final, Ablation, TrainConfig};
use crate::verify::{
    check_constraint_gradients, check_cross_entropy_gradients, constraint_sweep,
    violating_instance, GradCheckConfig, SweepConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "adbs",
    version,
    about = "Adaptive decision boundaries for few-shot class-incremental learning"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        Ok(RunConfig::load(&self.config)?.with_overrides(self.seed, self.out.clone()))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full session protocol and write results, similarity
    /// matrices and the final checkpoint.
    Run(CommonArgs),
    /// Run the three ablation arms over paired seeds and write
    /// per-session statistics.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of paired seeds, overriding `ablate_seeds`.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Run the numerical verifiers: the constraint probability sweep and
    /// the gradient checks for both losses.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of sweep instances, overriding `verify_instances`.
        #[arg(long)]
        seeds: Option<usize>,
        /// Inject a constructed constraint-violating instance to exercise
        /// the sweep's filter.
        #[arg(long)]
        inject_violation: bool,
    },
    /// Write the configured synthetic stream as a feature CSV.
    GenData(CommonArgs),
}

/// Entry point for the `adbs` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(common) => {
            cmd_run(&common.load()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Ablate { common, seeds } => {
            cmd_ablate(&common.load()?, seeds)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            common,
            seeds,
            inject_violation,
        } => {
            let passed = cmd_verify(&common.load()?, seeds, inject_violation)?;
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::GenData(common) => {
            cmd_gen_data(&common.load()?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn results_csv(reports: &[SessionReport]) -> String {
    let mut out = String::from("session,top1,n_test,d_cs\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.session_index, r.top1_accuracy, r.num_test, r.d_cs
        );
    }
    out
}

fn simmatrix_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

fn print_session_table(reports: &[SessionReport]) {
    let mut header = format!("{:<10}", "session");
    let mut top1 = format!("{:<10}", "top1");
    let mut dcs = format!("{:<10}", "d_cs");
    for r in reports {
        let _ = write!(header, "{:>9}", r.session_index);
        let _ = write!(top1, "{:>9.4}", r.top1_accuracy);
        let _ = write!(dcs, "{:>9.4}", r.d_cs);
    }
    println!("{header}");
    println!("{top1}");
    println!("{dcs}");
    if let Ok(avg) = average_accuracy(reports) {
        println!("average accuracy: {avg:.4}");
    }
}

/// `run`: full protocol, then `results.csv`, one `simmatrix_{t}.csv` per
/// session, a summary table on stdout, and the final checkpoint.
pub fn cmd_run(cfg: &RunConfig) -> Result<()> {
    let stream = cfg.build_stream()?;
    let extractor = cfg.build_extractor(stream.feature_dim)?;
    let (reports, final_ckpt) = run_full_with_final(&stream, &cfg.train_config(), extractor)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("results.csv"), results_csv(&reports))?;
    for r in &reports {
        std::fs::write(
            cfg.out_dir
                .join(format!("simmatrix_{}.csv", r.session_index)),
            simmatrix_csv(&r.similarity_matrix),
        )?;
    }
    final_ckpt.save(cfg.out_dir.join("checkpoint.json"))?;

    print_session_table(&reports);
    println!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `ablate`: the three arms over paired seeds (identical streams, batch
/// orders and extractors per seed), written as per-arm per-session rows
/// with a final-session delta against the fixed baseline.
pub fn cmd_ablate(cfg: &RunConfig, seeds_override: Option<usize>) -> Result<()> {
    let num_seeds = seeds_override.unwrap_or(cfg.ablate_seeds);
    if num_seeds == 0 {
        return Err(Error::Config("ablate needs at least one seed".into()));
    }
    let arms = [Ablation::FixedBaseline, Ablation::AdbOnly, Ablation::AdbIc];

    // runs[arm][seed] = per-session reports
    let mut runs: Vec<Vec<Vec<SessionReport>>> = vec![Vec::new(); arms.len()];
    for offset in 0..num_seeds {
        let seed = cfg.seed.wrapping_add(offset as u64);
        let seeded = cfg.clone().with_overrides(Some(seed), None);
        let stream = seeded.build_stream()?;
        for (a, &arm) in arms.iter().enumerate() {
            let train = TrainConfig {
                ablation: arm,
                ..seeded.train_config()
            };
            let extractor = seeded.build_extractor(stream.feature_dim)?;
            runs[a].push(run_full(&stream, &train, extractor)?);
        }
    }

    let sessions = runs[0][0].len();
    let last_baseline: Vec<f64> = runs[0]
        .iter()
        .map(|r| r.last().unwrap().top1_accuracy)
        .collect();

    let mut csv = String::from("arm,session,mean_top1,std_top1,mean_dcs,std_dcs,delta_last\n");
    for (a, &arm) in arms.iter().enumerate() {
        for s in 0..sessions {
            let top1: Vec<f64> = runs[a].iter().map(|r| r[s].top1_accuracy).collect();
            let dcs: Vec<f64> = runs[a].iter().map(|r| r[s].d_cs).collect();
            let delta = if s + 1 == sessions {
                let deltas: Vec<f64> = runs[a]
                    .iter()
                    .zip(&last_baseline)
                    .map(|(r, b)| r.last().unwrap().top1_accuracy - b)
                    .collect();
                mean(&deltas).to_string()
            } else {
                String::new()
            };
            let _ = writeln!(
                csv,
                "{arm},{s},{},{},{},{},{delta}",
                mean(&top1),
                std_dev(&top1),
                mean(&dcs),
                std_dev(&dcs),
            );
        }
    }

    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("ablation.csv"), &csv)?;

    for (a, &arm) in arms.iter().enumerate() {
        let last: Vec<f64> = runs[a]
            .iter()
            .map(|r| r.last().unwrap().top1_accuracy)
            .collect();
        let last_dcs: Vec<f64> = runs[a].iter().map(|r| r.last().unwrap().d_cs).collect();
        let delta = mean(&last) - mean(&last_baseline);
        println!(
            "{arm:<15} final top1 {:.4} +- {:.4}   final d_cs {:.4}   delta_last {:+.4}",
            mean(&last),
            std_dev(&last),
            mean(&last_dcs),
            delta
        );
    }
    println!("wrote {}", cfg.out_dir.join("ablation.csv").display());
    Ok(())
}

/// `verify`: the constraint probability sweep plus finite-difference
/// checks of both losses. Returns whether everything passed.
pub fn cmd_verify(
    cfg: &RunConfig,
    instances_override: Option<usize>,
    inject_violation: bool,
) -> Result<bool> {
    let sweep_cfg = SweepConfig {
        instances: instances_override.unwrap_or(cfg.verify_instances),
        margin: 1e-12,
        seed: cfg.seed,
    };
    let injected = if inject_violation {
        vec![violating_instance().0]
    } else {
        Vec::new()
    };
    let sweep = constraint_sweep(&sweep_cfg, &injected)?;
    println!(
        "constraint sweep: {} ({} checked, {} filtered as unsatisfied, min margin {:.3e})",
        if sweep.passed() { "PASS" } else { "FAIL" },
        sweep.checked,
        sweep.skipped_unsatisfied,
        sweep.min_margin
    );
    if let Some(worst) = &sweep.worst_failure {
        eprintln!("  worst instance: {worst}");
    }

    let grad_cfg = GradCheckConfig {
        cases: cfg.grad_check_cases,
        rel_tol: cfg.grad_check_rel_tol,
        abs_tol: cfg.grad_check_abs_tol,
        seed: cfg.seed,
        ..GradCheckConfig::default()
    };
    let ce = check_cross_entropy_gradients(&grad_cfg)?;
    println!(
        "classification gradients: {} ({} cases, {} parameters, max rel {:.3e}, max abs {:.3e})",
        if ce.passed() { "PASS" } else { "FAIL" },
        ce.cases,
        ce.parameters_checked,
        ce.max_rel_error,
        ce.max_abs_error
    );
    if let Some(worst) = &ce.worst_failure {
        eprintln!("  worst parameter: {worst}");
    }

    let ic = check_constraint_gradients(&grad_cfg)?;
    println!(
        "constraint gradients: {} ({} cases, {} parameters, max rel {:.3e}, max abs {:.3e})",
        if ic.passed() { "PASS" } else { "FAIL" },
        ic.cases,
        ic.parameters_checked,
        ic.max_rel_error,
        ic.max_abs_error
    );
    if let Some(worst) = &ic.worst_failure {
        eprintln!("  worst parameter: {worst}");
    }

    Ok(sweep.passed() && ce.passed() && ic.passed())
}

/// `gen-data`: write the configured synthetic stream as `features.csv`.
pub fn cmd_gen_data(cfg: &RunConfig) -> Result<()> {
    let stream = generate_synthetic(&cfg.synthetic_spec(), &cfg.session_spec())?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("features.csv");
    crate::data::export_feature_csv(&stream, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
