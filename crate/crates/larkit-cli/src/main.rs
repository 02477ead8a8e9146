//! Command-line front end: run experiments, sweep presets, compare results,
//! pick model orders from logged data, and inspect system matrices.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use larkit::error::{Error, Result};
use larkit::harness::{
    self, bias_variance_preset, paper_preset, ExperimentConfig, MonteCarloRun,
};
use larkit::lds;
use larkit::rng::{purpose, substream};
use larkit::selection::{
    bic_select_s, lag_design, ordered_lasso_fit, select_k_from_fit, ExplorationLog,
};

#[derive(Parser)]
#[command(
    name = "larkit",
    about = "Latent autoregressive bandit toolkit",
    long_about = "Simulates bandit environments driven by a latent autoregressive state, runs \
                  agents against the dynamic oracle, and writes regret curves, win matrices and \
                  diagnostics. Set LARKIT_THREADS to cap the trial work pool.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bundled experiment preset.
    Sweep {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the preset's Monte-Carlo trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Recompute the pairwise win matrix from a results directory.
    Compare {
        /// Directory containing trials.csv (one environment variant).
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that summary.csv matches a recomputation from trials.csv.
    Verify {
        /// Results directory (a variant directory or a parent of k*/ dirs).
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
    /// Choose the context window (information criterion) and autoregressive
    /// order (ordered lasso) from a logged action,reward CSV.
    SelectOrder {
        /// CSV with `action,reward` rows (header optional).
        #[arg(long)]
        log: PathBuf,
        /// Candidate context windows.
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<usize>>,
        /// Maximum lag probed by the ordered lasso.
        #[arg(long, default_value_t = 10)]
        k0: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Relative magnitude cut for committing to a lag.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
    /// Dump system matrices, gain and spectra for a config as JSON.
    Inspect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Horizon 200, 100 trials, information-criterion window vs baselines.
    Paper,
    /// Fixed windows 1/5/10/15 to expose the under/over-parameterization
    /// trade-off.
    BiasVariance,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_variant_outputs(run: &MonteCarloRun, dir: &Path) -> Result<()> {
    harness::export_csv(&run.summary, &dir.join("summary.csv"))?;
    harness::export_trials_csv(&run.trials, &dir.join("trials.csv"))?;
    harness::emit_svg(&run.summary, &dir.join("curves.svg"))?;
    let matrix = harness::pairwise_matrix(&run.trials, &run.summary.agent_ids)?;
    harness::export_pairwise_csv(&matrix, &run.summary.agent_ids, &dir.join("pairwise.csv"))?;
    Ok(())
}

fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    for k in cfg.env.k.values() {
        let run = harness::run_monte_carlo(cfg, k)?;
        let dir = out.join(format!("k{k}"));
        write_variant_outputs(&run, &dir)?;
        if run.failures.is_empty() {
            println!(
                "k={k}: {} trials ok -> {}",
                run.summary.n_trials,
                dir.display()
            );
        } else {
            println!(
                "k={k}: {} trials ok, {} failed -> {}",
                run.summary.n_trials,
                run.failures.len(),
                dir.display()
            );
            for (trial, msg) in &run.failures {
                eprintln!("  trial {trial}: {msg}");
            }
        }
    }
    Ok(())
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::from_json(&read_file(config)?)?;
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    run_experiment(&cfg, &out)
}

fn cmd_sweep(preset: Preset, out: &Path, seed: u64, trials: Option<usize>) -> Result<()> {
    let mut cfg = match preset {
        Preset::Paper => paper_preset(seed),
        Preset::BiasVariance => bias_variance_preset(seed),
    };
    if let Some(n) = trials {
        cfg.n_trials = n;
    }
    let sub = match preset {
        Preset::Paper => "paper",
        Preset::BiasVariance => "bias-variance",
    };
    run_experiment(&cfg, &out.join(sub))
}

fn cmd_compare(input: &Path, out: &Path) -> Result<()> {
    let curves = harness::read_trials_csv(&input.join("trials.csv"))?;
    if curves.is_empty() {
        return Err(Error::Usage("trials.csv holds no data".into()));
    }
    let ids: Vec<String> = curves.iter().map(|(id, _)| id.clone()).collect();
    let finals: Vec<Vec<f64>> = curves
        .iter()
        .map(|(_, per_trial)| {
            per_trial
                .iter()
                .map(|(_, curve)| curve.last().copied().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let n = finals[0].len();
    if finals.iter().any(|f| f.len() != n) {
        return Err(Error::Usage("agents cover different trial sets".into()));
    }
    let mut matrix = vec![vec![0.0; ids.len()]; ids.len()];
    for i in 0..ids.len() {
        for j in 0..ids.len() {
            if i == j {
                continue;
            }
            let wins = finals[i].iter().zip(&finals[j]).filter(|(a, b)| a < b).count();
            matrix[i][j] = wins as f64 / n as f64;
        }
    }
    harness::export_pairwise_csv(&matrix, &ids, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(input: &Path) -> Result<()> {
    let mut checked = 0;
    if input.join("summary.csv").exists() {
        let diff = harness::verify_outputs(input)?;
        println!("{}: ok (max diff {diff:.3e})", input.display());
        checked += 1;
    } else {
        let entries = fs::read_dir(input).map_err(|e| Error::io(input, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(input, e))?.path();
            if path.is_dir() && path.join("summary.csv").exists() {
                let diff = harness::verify_outputs(&path)?;
                println!("{}: ok (max diff {diff:.3e})", path.display());
                checked += 1;
            }
        }
    }
    if checked == 0 {
        return Err(Error::Usage(format!(
            "no summary.csv found under {}",
            input.display()
        )));
    }
    Ok(())
}

fn parse_action_reward_csv(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 2 {
            return Err(Error::Usage(format!("line {}: expected action,reward", lineno + 1)));
        }
        let action: usize = match parts[0].parse() {
            Ok(a) => a,
            // Tolerate one header line.
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(Error::Usage(format!("line {}: bad action '{}'", lineno + 1, parts[0])))
            }
        };
        let reward: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Usage(format!("line {}: bad reward '{}'", lineno + 1, parts[1])))?;
        records.push((action, reward));
    }
    if records.is_empty() {
        return Err(Error::Usage("log contains no records".into()));
    }
    Ok(records)
}

fn cmd_select_order(
    log: &Path,
    candidates: Option<Vec<usize>>,
    k0: usize,
    lambda: f64,
    threshold: f64,
) -> Result<()> {
    let records = parse_action_reward_csv(&read_file(log)?)?;
    let num_actions = records.iter().map(|(a, _)| a + 1).max().unwrap();
    let exploration = ExplorationLog::new(records.clone(), num_actions)?;
    let cands = candidates.unwrap_or_else(|| harness::DEFAULT_S_CANDIDATES.to_vec());
    let s = bic_select_s(&exploration, &cands, lambda)?;

    let (x, y) = lag_design(&records, k0, num_actions)?;
    let fit = ordered_lasso_fit(&x, &y, lambda, None, 20_000, 1e-10)?;
    let k_hat = select_k_from_fit(&fit, threshold, num_actions);

    println!(
        "{}",
        serde_json::json!({ "s": s, "k_hat": k_hat, "num_actions": num_actions })
    );
    Ok(())
}

fn cmd_inspect(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::from_json(&read_file(config)?)?;
    let mut report = serde_json::Map::new();
    for k in cfg.env.k.values() {
        let gamma = match &cfg.env.gamma {
            Some(g) => g.clone(),
            None => {
                let mut rng = substream(cfg.seed, &[purpose::GAMMA, k as u64, 0]);
                larkit::env::sample_gamma(k, cfg.env.target_l1, &mut rng)?
            }
        };
        let params = cfg.env.realize(k, gamma);
        let diag = lds::diagnostics(&params, 1e-12, 200_000)?;
        report.insert(
            format!("k{k}"),
            serde_json::to_value(&diag).map_err(|e| Error::Numeric(e.to_string()))?,
        );
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(report))
        .map_err(|e| Error::Numeric(e.to_string()))?;
    match out {
        Some(path) => {
            write_file(&path, &text)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { preset, out, seed, trials } => cmd_sweep(preset, &out, seed, trials),
        Command::Compare { input, out } => cmd_compare(&input, &out),
        Command::Verify { input } => cmd_verify(&input),
        Command::SelectOrder { log, candidates, k0, lambda, threshold } => {
            cmd_select_order(&log, candidates, k0, lambda, threshold)
        }
        Command::Inspect { config, out } => cmd_inspect(&config, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
