//! Command-line interface for the scenario optimization toolkit.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use scenario_opt::bounds::{
    aposteriori_interval, apriori_interval, ccp_report, rcp_report, Ulb,
};
use scenario_opt::config::{build_slater, FamilyConfig, ProblemConfig, SlaterConfig};
use scenario_opt::harness::{
    linspace, run_counterexample, run_example1, write_rows_csv, Example1Config,
};
use scenario_opt::lp::value_range;
use scenario_opt::model::sample_scenarios;
use scenario_opt::nonconvex::{solve_sp, union_report, SpOutcome};
use scenario_opt::sample_size::{binomial_tail, sample_size, sample_size_union};
use scenario_opt::scenario::{solve_scp, tie_break, ScpOutcome};

#[derive(Parser)]
#[command(
    name = "scenario-opt",
    about = "Scenario programs with probabilistic performance bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal scenario count achieving a feasibility guarantee.
    SampleSize {
        /// Violation level in (0, 1].
        #[arg(long)]
        eps: f64,
        /// Confidence parameter in (0, 1].
        #[arg(long)]
        beta: f64,
        /// Decision dimension.
        #[arg(long)]
        n: u64,
        /// Subprogram count for the union bound (equal levels).
        #[arg(long)]
        m: Option<u64>,
    },
    /// Solve the scenario program for a JSON problem description.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_scenarios: usize,
        #[arg(long)]
        seed: u64,
        /// Relaxation level applied to every scenario row.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Run the least-norm tie-break second stage as well.
        #[arg(long)]
        tie_break: bool,
    },
    /// Confidence intervals around the scenario value.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// ULB parameters "L_d,kappa,p".
        #[arg(long)]
        ulb: String,
        /// Slater point coordinates "x1,x2,..." or "min-max".
        #[arg(long)]
        slater: String,
        /// Worst-case constraint value at the Slater point, when the
        /// constraint family has no closed form.
        #[arg(long)]
        slater_sup: Option<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n_scenarios: usize,
        #[arg(long)]
        seed: u64,
        /// Report the a posteriori chance-constrained interval.
        #[arg(long)]
        posterior: bool,
    },
    /// Solve a union-of-subprograms family.
    SolveUnion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_scenarios: usize,
        #[arg(long)]
        seed: u64,
        /// Confidence parameter for the aggregated report.
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
    },
    /// Reproduce the benchmark experiment sweep as CSV.
    Example1 {
        #[arg(long)]
        n_scenarios: usize,
        #[arg(long, default_value_t = 2000)]
        experiments: usize,
        /// Chance-level grid "lo:hi:count".
        #[arg(long, default_value = "0.02:0.5:25")]
        eps_grid: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show that scenario optimizers almost never satisfy the robust program.
    Counterexample {
        #[arg(long)]
        n_scenarios: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn parse_ulb(text: &str) -> Result<Ulb> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid --ulb '{text}', expected \"L_d,kappa,p\""))?;
    if parts.len() != 3 {
        bail!("--ulb needs exactly three values \"L_d,kappa,p\", got {}", parts.len());
    }
    Ok(Ulb::new(parts[0], parts[1], parts[2])?)
}

fn parse_slater(text: &str, sup: Option<f64>) -> Result<SlaterConfig> {
    if text.eq_ignore_ascii_case("min-max") || text.eq_ignore_ascii_case("min_max") {
        return Ok(SlaterConfig::MinMax);
    }
    let x0: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid --slater '{text}', expected \"x1,x2,...\""))?;
    Ok(SlaterConfig::Point { x0, sup })
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("--eps-grid needs the form \"lo:hi:count\", got '{text}'");
    }
    let lo: f64 = parts[0].trim().parse().context("grid lower endpoint")?;
    let hi: f64 = parts[1].trim().parse().context("grid upper endpoint")?;
    let count: usize = parts[2].trim().parse().context("grid point count")?;
    if count == 0 {
        bail!("--eps-grid needs at least one point");
    }
    Ok(linspace(lo, hi, count))
}

fn load_problem(path: &PathBuf) -> Result<ProblemConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading problem file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::SampleSize { eps, beta, n, m } => {
            let (required, achieved) = match m {
                None => {
                    let required = sample_size(eps, beta, n)?;
                    (required, binomial_tail(required, n, eps))
                }
                Some(m) => {
                    let levels = vec![eps; m as usize];
                    let required = sample_size_union(&levels, beta, n)?;
                    (
                        required,
                        m as f64 * binomial_tail(required, n, eps),
                    )
                }
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "n_required": required,
                    "achieved_tail": achieved,
                }))?
            );
        }
        Command::Solve {
            config,
            n_scenarios,
            seed,
            gamma,
            tie_break: run_tie_break,
        } => {
            let program = load_problem(&config)?.build()?;
            let scenarios = sample_scenarios(&program.sampler, n_scenarios, seed);
            match solve_scp(&program, &scenarios, gamma)? {
                ScpOutcome::Infeasible => {
                    println!("{}", serde_json::to_string_pretty(&json!({"status": "infeasible"}))?);
                }
                ScpOutcome::Optimal(solution) => {
                    let mut output = json!({
                        "status": "optimal",
                        "value": solution.value,
                        "x": solution.x,
                        "dual_l1": solution.dual_l1(),
                        "gamma": gamma,
                        "n_scenarios": n_scenarios,
                        "seed": seed,
                    });
                    if run_tie_break {
                        let refined = tie_break(&program, &scenarios, solution.value)?;
                        output["x_tie_break"] = json!(refined);
                    }
                    println!("{}", serde_json::to_string_pretty(&output)?);
                }
            }
        }
        Command::Bounds {
            config,
            ulb,
            slater,
            slater_sup,
            eps,
            beta,
            n_scenarios,
            seed,
            posterior,
        } => {
            let program = load_problem(&config)?.build()?;
            let ulb = parse_ulb(&ulb)?;
            let slater = build_slater(&parse_slater(&slater, slater_sup)?, &program)?;
            let scenarios = sample_scenarios(&program.sampler, n_scenarios, seed);
            let solution = match solve_scp(&program, &scenarios, 0.0)? {
                ScpOutcome::Optimal(solution) => solution,
                ScpOutcome::Infeasible => bail!("scenario program is infeasible"),
            };
            let (lo, hi) = value_range(&program.cost, &program.domain.lp_rows())?;
            let range = hi - lo;
            let n = program.dimension() as u64;
            let apriori = apriori_interval(slater.l_sp(), &ulb, eps, range);
            let rcp = rcp_report(solution.value, apriori, eps, beta, n_scenarios as u64, n);
            let ccp = if posterior {
                let interval = aposteriori_interval(solution.dual_l1(), &ulb, eps, range);
                ccp_report(solution.value, interval, eps, beta, n_scenarios as u64, n, true)
            } else {
                ccp_report(solution.value, apriori, eps, beta, n_scenarios as u64, n, false)
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "value": solution.value,
                    "dual_l1": solution.dual_l1(),
                    "rcp": rcp,
                    "ccp": ccp,
                }))?
            );
        }
        Command::SolveUnion {
            config,
            n_scenarios,
            seed,
            beta,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading family file {}", config.display()))?;
            let family_config: FamilyConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
            let family = family_config.build()?;
            let sampler = family.members()[0].program.sampler.clone();
            let scenarios = sample_scenarios(&sampler, n_scenarios, seed);
            match solve_sp(&family, &scenarios)? {
                SpOutcome::Infeasible => {
                    println!("{}", serde_json::to_string_pretty(&json!({"status": "infeasible"}))?);
                }
                SpOutcome::Optimal(solution) => {
                    let report =
                        union_report(&solution, &family, beta, n_scenarios as u64, None)?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "status": "optimal",
                            "winner": solution.winner,
                            "value": solution.value,
                            "x": solution.x,
                            "report": report,
                        }))?
                    );
                }
            }
        }
        Command::Example1 {
            n_scenarios,
            experiments,
            eps_grid,
            seed,
            out,
        } => {
            let mut config = Example1Config::new(n_scenarios, parse_grid(&eps_grid)?, seed);
            config.experiments = experiments;
            let report = run_example1(&config)?;
            let file = fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            write_rows_csv(&report.rows, file)?;
            eprintln!(
                "wrote {} rows ({} experiments of {} scenarios) to {}",
                report.rows.len(),
                experiments,
                n_scenarios,
                out.display()
            );
        }
        Command::Counterexample {
            n_scenarios,
            runs,
            seed,
        } => {
            let report = run_counterexample(n_scenarios, runs, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
