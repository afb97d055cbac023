//! mixforge: batch front-end for the mixing-rate construction.
//!
//! Subcommands: `scaffold`, `verify`, `simulate`, `selfcheck`.
//! Exit codes are a stable contract:
//!
//! * 0 — success,
//! * 2 — configuration validation failure,
//! * 3 — envelope exhausted (the chord gap never reaches 1 under x_cap),
//! * 4 — verdict or fixture failure,
//! * 5 — hard statistical failure (|z| > 5 in a simulation).
//!
//! All outputs are deterministic functions of (config, seed); reruns are
//! byte-identical.  `MIXFORGE_THREADS` caps worker parallelism.

mod config;
mod selfcheck;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use mixforge_core::chain::{build_chain, estimate_beta_empirical, ChainSpec, JOINT_CAP_COEFF};
use mixforge_core::depcoeff::beta_exact;
use mixforge_core::envelope::{
    build_scaffold, validate_rate_function, EnvelopeError, GridSpec, Scaffold, ScaffoldOptions,
    Tolerances,
};
use mixforge_core::ChainError;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "mixforge", version, about = "Reversible Markov chains with prescribed mixing rates")]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for all randomized steps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the envelope scaffolding and export the leg table.
    Scaffold,
    /// Build the truncated chain and verify the mixing-rate bracket.
    Verify {
        /// Fault injection: corrupt the block masses before verifying.
        #[arg(long, hide = true)]
        debug_corrupt_scaffold: bool,
    },
    /// Sample a path and compare empirical regularity with exact values.
    Simulate {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        lag: usize,
    },
    /// Run the built-in closed-form fixture groups.
    Selfcheck {
        /// Fault injection: perturb one fixture constant by 1e-3.
        #[arg(long, hide = true)]
        debug_perturb_fixture: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mixforge: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Honors `MIXFORGE_THREADS` as a cap on worker parallelism.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("MIXFORGE_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Selfcheck {
            debug_perturb_fixture,
        } => cmd_selfcheck(debug_perturb_fixture),
        Command::Scaffold => {
            let (cfg, out_dir) = load_config(&cli)?;
            cmd_scaffold(&cfg, &out_dir)
        }
        Command::Verify {
            debug_corrupt_scaffold,
        } => {
            let (cfg, out_dir) = load_config(&cli)?;
            cmd_verify(&cfg, &out_dir, debug_corrupt_scaffold)
        }
        Command::Simulate { length, lag } => {
            let (cfg, out_dir) = load_config(&cli)?;
            cmd_simulate(&cfg, &out_dir, length, lag)
        }
    }
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::config("missing --config <path>"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text).map_err(Failure::config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out_dir))
}

/// Envelope validation plus scaffold construction shared by the commands.
fn build_validated_scaffold(cfg: &RunConfig) -> Result<Scaffold, Failure> {
    let f = cfg.rate_function().map_err(Failure::config)?;
    let report = validate_rate_function(&f, &GridSpec::default())
        .map_err(|e| Failure::config(format!("rate function validation: {e}")))?;
    if !report.passed() {
        return Err(Failure::config(format!(
            "rate function fails validation:\n{}",
            report.summary()
        )));
    }
    let env = cfg.envelope().map_err(Failure::config)?;
    let opts = ScaffoldOptions {
        x_max: cfg.n_max as f64,
        min_legs: cfg.truncation_level(),
        max_legs: cfg.tolerances.max_legs,
        x_cap: cfg.tolerances.x_cap,
        tolerances: Tolerances {
            tol_root: cfg.tolerances.tol_root,
            tol_sup: cfg.tolerances.tol_sup,
        },
    };
    build_scaffold(&env, &opts).map_err(|e| match e {
        EnvelopeError::EnvelopeExhausted { .. } => Failure {
            code: 3,
            message: e.to_string(),
        },
        other => Failure::internal(other),
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::internal(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn cmd_scaffold(cfg: &RunConfig, out_dir: &Path) -> Result<(), Failure> {
    let scaffold = build_validated_scaffold(cfg)?;
    write_file(out_dir, "scaffold.csv", &scaffold.to_csv())?;
    let last = scaffold.legs().last().expect("scaffold has legs");
    println!(
        "scaffold: {} legs, coverage [0, {:.6e}], slope gap to log2 r = {:.6e}",
        scaffold.legs().len(),
        scaffold.y_last(),
        last.sigma
    );
    Ok(())
}

#[derive(Serialize)]
struct VerdictRow {
    n: u32,
    alpha_pass: bool,
    beta_pass: bool,
    alpha_lb: f64,
    lower_env: f64,
    beta_partial_ub: f64,
    upper_env: f64,
}

#[derive(Serialize)]
struct Verdict {
    schema_version: u32,
    all_pass: bool,
    failures: Vec<VerdictRow>,
    rho_limit_only: bool,
    truncation_level: usize,
}

fn map_chain_err(e: ChainError) -> Failure {
    Failure::internal(e)
}

fn cmd_verify(cfg: &RunConfig, out_dir: &Path, corrupt: bool) -> Result<(), Failure> {
    let scaffold = build_validated_scaffold(cfg)?;
    let mut chain = build_chain(&scaffold, cfg.tail_tol.0).map_err(map_chain_err)?;
    if corrupt {
        chain = ChainSpec::from_parts(
            chain.envelope().clone(),
            chain.blocks().iter().map(|b| (b.a - 4.0, b.sigma)).collect(),
            chain.y_last(),
            chain.tail_tol(),
        )
        .map_err(map_chain_err)?;
    }
    let report = chain
        .verify_theorem(cfg.n_max, cfg.exact_alpha_j)
        .map_err(map_chain_err)?;

    write_file(out_dir, "coeffs.csv", &report.to_csv())?;
    let verdict = Verdict {
        schema_version: 1,
        all_pass: report.all_pass,
        failures: report
            .failures()
            .iter()
            .map(|r| VerdictRow {
                n: r.n,
                alpha_pass: r.alpha_pass,
                beta_pass: r.beta_pass,
                alpha_lb: r.alpha_lb,
                lower_env: r.lower_env,
                beta_partial_ub: r.beta_partial_ub,
                upper_env: r.upper_env,
            })
            .collect(),
        rho_limit_only: report.rho_limit_only,
        truncation_level: report.truncation_level,
    };
    let json = serde_json::to_string_pretty(&verdict).map_err(Failure::internal)?;
    write_file(out_dir, "verdict.json", &json)?;

    if report.all_pass {
        println!(
            "verify: all {} lags pass (J = {}, rho_limit_only = {})",
            report.rows.len(),
            report.truncation_level,
            report.rho_limit_only
        );
        Ok(())
    } else {
        let failing: Vec<u32> = report.failures().iter().map(|r| r.n).collect();
        Err(Failure {
            code: 4,
            message: format!("verdict failed at lags {failing:?}"),
        })
    }
}

#[derive(Serialize)]
struct SimulateMeta {
    schema_version: u32,
    generator: &'static str,
    seed: u64,
    length: usize,
    lag: usize,
    truncation_level: usize,
}

fn cmd_simulate(cfg: &RunConfig, out_dir: &Path, length: usize, lag: usize) -> Result<(), Failure> {
    if lag < 1 {
        return Err(Failure::config("lag must be at least 1"));
    }
    if length < 100 * lag {
        return Err(Failure::config(format!(
            "length {length} too short for lag {lag}; need at least {}",
            100 * lag
        )));
    }
    let j = cfg.truncation_level();
    if j > JOINT_CAP_COEFF {
        return Err(Failure::config(format!(
            "simulate needs a truncation level J <= {JOINT_CAP_COEFF} so exact regularity \
             is computable; tail_tol gives J = {j}"
        )));
    }
    let scaffold = build_validated_scaffold(cfg)?;
    let chain = build_chain(&scaffold, cfg.tail_tol.0).map_err(map_chain_err)?;
    let product = chain.product().map_err(map_chain_err)?;
    let path = product.sample_path(length, cfg.seed).map_err(map_chain_err)?;

    let mut table = String::from("lag,exact,estimate,se,z\n");
    let mut worst_z = 0.0f64;
    for l in 1..=lag {
        let exact = beta_exact(
            &product
                .joint_at_lag(l as u32, JOINT_CAP_COEFF)
                .map_err(map_chain_err)?,
        );
        let est = estimate_beta_empirical(&path.states, l, cfg.seed.wrapping_add(l as u64))
            .map_err(|e| match e {
                ChainError::SampleSize { .. } => Failure::config(e.to_string()),
                other => map_chain_err(other),
            })?;
        let z = (est.estimate - exact) / est.std_error.max(1e-300);
        worst_z = worst_z.max(z.abs());
        table.push_str(&format!(
            "{l},{exact:.16e},{:.16e},{:.16e},{z:.6}\n",
            est.estimate, est.std_error
        ));
    }

    write_file(out_dir, "path.txt", &path.to_lines())?;
    write_file(out_dir, "empirical.csv", &table)?;
    let meta = SimulateMeta {
        schema_version: 1,
        generator: path.generator,
        seed: path.seed,
        length,
        lag,
        truncation_level: chain.truncation_level(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(Failure::internal)?;
    write_file(out_dir, "simulate_meta.json", &json)?;

    println!("simulate: {length} steps, lags 1..={lag}, worst |z| = {worst_z:.3}");
    if worst_z > 5.0 {
        return Err(Failure {
            code: 5,
            message: format!("statistical failure: |z| = {worst_z:.3} > 5"),
        });
    }
    Ok(())
}

fn cmd_selfcheck(perturb: bool) -> Result<(), Failure> {
    let outcomes = selfcheck::run_selfcheck(if perturb { 1e-3 } else { 0.0 });
    let mut failed = Vec::new();
    for outcome in &outcomes {
        if outcome.ok() {
            println!("selfcheck {}: ok ({} fixtures)", outcome.group, outcome.checks);
        } else {
            println!(
                "selfcheck {}: FAIL ({}/{} fixtures bad; first: {})",
                outcome.group,
                outcome.failures.len(),
                outcome.checks,
                outcome.failures[0]
            );
            failed.push(outcome.group);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 4,
            message: format!("fixture groups failed: {failed:?}"),
        })
    }
}
