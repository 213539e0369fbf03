//! Command-line interface for the tasklab experiment harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use tasklab::envs::{default_suite, parse_suite, GridworldSuite};
use tasklab::harness::{
    aggregate_rows, line_chart, parse_runs_csv, rows_from_run, run_sweep, run_training,
    success_curves_svg, theory_schedule, write_runs_csv, write_summary_csv, Method, RunConfig,
    Series, SweepConfig,
};
use tasklab::oracles::{
    convergence_oracle_report, cosine_study, gradient_oracle_report, simplex_oracle_report,
};
use tasklab::policy::save_checkpoint;

#[derive(Parser)]
#[command(
    name = "tasklab",
    about = "Multi-task RL task-sampling laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write its records.
    Run {
        /// TOML config file (see configs/ for examples).
        #[arg(short, long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
    },
    /// Run a method-by-seed sweep and write CSV/SVG artifacts.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
    /// Run the projection / gradient / convergence oracle suites.
    Oracle {
        /// Also write the gradient-accuracy study artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Repeats for the gradient-accuracy study.
        #[arg(long, default_value_t = 20)]
        repeats: usize,
    },
    /// Re-render summary and plots from a runs CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "out/plot")]
        out: PathBuf,
        /// Mean-success threshold for the steps-to-threshold summary.
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
    },
    /// Print the convergence-guarantee parameter schedule.
    Schedule {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        tasks: usize,
        #[arg(long, default_value_t = 1.0)]
        gap_bound: f64,
        #[arg(long, default_value_t = 1.0)]
        regret: f64,
    },
}

#[derive(Debug, Deserialize)]
struct RunFile {
    #[serde(default = "default_suite_source")]
    suite: String,
    run: RunConfig,
}

#[derive(Debug, Deserialize)]
struct SweepFile {
    #[serde(default = "default_suite_source")]
    suite: String,
    sweep: SweepSection,
    run: RunConfig,
}

#[derive(Debug, Deserialize)]
struct SweepSection {
    methods: Vec<String>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    seed_count: Option<u64>,
    #[serde(default = "default_threshold")]
    success_threshold: f64,
    #[serde(default = "default_parallelism")]
    parallelism: usize,
}

fn default_suite_source() -> String {
    "builtin".to_string()
}

fn default_threshold() -> f64 {
    0.95
}

fn default_parallelism() -> usize {
    1
}

fn load_suite(source: &str) -> Result<GridworldSuite> {
    if source == "builtin" {
        return Ok(default_suite());
    }
    let text = fs::read_to_string(source).with_context(|| format!("reading suite {source}"))?;
    Ok(parse_suite(&text)?)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_run(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {config:?}"))?;
    let mut file: RunFile = toml::from_str(&text).context("parsing run config")?;
    if let Some(seed) = seed {
        file.run.seed = seed;
    }
    let suite = load_suite(&file.suite)?;
    let result = run_training(&file.run, &suite)?;
    let run_id = format!("{}-s{}", file.run.method.name(), file.run.seed);
    let rows = rows_from_run(&run_id, file.run.seed, file.run.method.name(), &result.records);
    write_file(out, "runs.csv", &write_runs_csv(&rows))?;
    write_file(out, "checkpoint.json", &save_checkpoint(&result.final_params))?;
    let last = result.records.last();
    println!(
        "{} finished: {} iterations, {} env steps, final mean success {:.3}",
        run_id,
        result.records.len(),
        last.map_or(0, |r| r.env_steps),
        last.map_or(0.0, |r| r.mean_success()),
    );
    if let Some(fault) = &result.fault {
        bail!("run aborted on numeric fault: {fault}");
    }
    Ok(())
}

fn cmd_sweep(config: &Path, parallelism: Option<usize>, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {config:?}"))?;
    let file: SweepFile = toml::from_str(&text).context("parsing sweep config")?;
    let suite = load_suite(&file.suite)?;
    let methods: Vec<Method> = file
        .sweep
        .methods
        .iter()
        .map(|name| {
            Method::parse(name).with_context(|| format!("unknown method {name:?}"))
        })
        .collect::<Result<_>>()?;
    let seeds = match (&file.sweep.seeds, file.sweep.seed_count) {
        (Some(seeds), _) if !seeds.is_empty() => seeds.clone(),
        (_, Some(n)) if n > 0 => (0..n).collect(),
        _ => bail!("sweep needs `seeds = [...]` or `seed_count = N`"),
    };
    let mut sweep = SweepConfig::new(file.run, methods, seeds);
    sweep.success_threshold = file.sweep.success_threshold;
    let workers = parallelism.unwrap_or(file.sweep.parallelism);
    let output = run_sweep(&sweep, &suite, workers)?;

    write_file(out, "runs.csv", &write_runs_csv(&output.rows))?;
    write_file(out, "summary.csv", &write_summary_csv(&output.summaries))?;
    write_file(
        out,
        "success_curves.svg",
        &success_curves_svg(&output.curves, "mean success rate by method"),
    )?;
    for summary in &output.summaries {
        println!(
            "{:<20} steps-to-{:.2}: mean {:.0} (95% CI {:.0}..{:.0}), final success {:.3}, censored {}/{}",
            summary.method,
            sweep.success_threshold,
            summary.mean_steps_to_threshold,
            summary.steps_ci.0,
            summary.steps_ci.1,
            summary.mean_final_success,
            summary.n_censored,
            summary.per_seed.len()
        );
    }
    if !output.failures.is_empty() {
        bail!("{} run(s) aborted: {}", output.failures.len(), output.failures.join("; "));
    }
    Ok(())
}

fn cmd_oracle(out: Option<&Path>, repeats: usize) -> Result<bool> {
    let simplex = simplex_oracle_report(1000, 200, 20_260_809);
    print!("{}", simplex.render());
    let gradient = gradient_oracle_report(100, 20, 20_260_809);
    print!("{}", gradient.render());
    let convergence = convergence_oracle_report(20, 0.25);
    print!("{}", convergence.render());

    let sizes: Vec<usize> = (0..=14).map(|e| 1usize << e).collect();
    let suite = default_suite();
    let study = cosine_study(&suite, &sizes, repeats, 20_260_809);
    let mut ordered = true;
    let mut last_crossing = 0usize;
    for (name, curve) in &study {
        let crossing = tasklab::oracles::samples_to_cosine(curve, 0.2);
        println!(
            "[info] gradient accuracy {name}: cosine 0.2 at n = {crossing:?}, final {:.3}",
            curve.last().map_or(0.0, |p| p.cosine)
        );
        match crossing {
            Some(n) if n >= last_crossing => last_crossing = n,
            _ => ordered = false,
        }
    }
    println!(
        "[{}] gradient-accuracy sample-size ordering follows task difficulty",
        if ordered { "pass" } else { "FAIL" }
    );
    if let Some(dir) = out {
        let mut csv = String::from("task,n_episodes,cosine\n");
        for (name, curve) in &study {
            for point in curve {
                csv.push_str(&format!("{name},{},{}\n", point.n_episodes, point.cosine));
            }
        }
        write_file(dir, "cosine_accuracy.csv", &csv)?;
        let xs: Vec<Vec<f64>> = study
            .iter()
            .map(|(_, c)| c.iter().map(|p| (p.n_episodes as f64).log2()).collect())
            .collect();
        let ys: Vec<Vec<f64>> = study
            .iter()
            .map(|(_, c)| c.iter().map(|p| p.cosine).collect())
            .collect();
        let series: Vec<Series<'_>> = study
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|((name, _), (x, y))| Series {
                name,
                x,
                y,
                lo: None,
                hi: None,
            })
            .collect();
        write_file(
            dir,
            "cosine_accuracy.svg",
            &line_chart(
                &series,
                "gradient estimate accuracy vs sample size",
                "log2 episodes",
                "cosine similarity",
            ),
        )?;
    }
    Ok(simplex.passed() && gradient.passed() && convergence.passed() && ordered)
}

fn cmd_plot(csv: &Path, out: &Path, threshold: f64) -> Result<()> {
    let text = fs::read_to_string(csv).with_context(|| format!("reading {csv:?}"))?;
    let rows = parse_runs_csv(&text)?;
    let (summaries, curves) = aggregate_rows(&rows, threshold);
    write_file(out, "summary.csv", &write_summary_csv(&summaries))?;
    write_file(
        out,
        "success_curves.svg",
        &success_curves_svg(&curves, "mean success rate by method"),
    )?;
    Ok(())
}

fn cmd_schedule(epsilon: f64, tasks: usize, gap_bound: f64, regret: f64) -> Result<()> {
    let s = theory_schedule(epsilon, tasks, gap_bound, regret)?;
    println!("epsilon          = {}", s.epsilon);
    println!("tasks (k)        = {}", s.k);
    println!("gap bound (M)    = {}", s.gap_bound);
    println!("regret const (C) = {}", s.regret_constant);
    println!("eta              = {}", s.eta);
    println!("G                = {}", s.lipschitz_bound);
    println!("alpha (at T_min) = {}", s.alpha);
    println!("T_min            = {}", s.t_min);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out).map(|_| true),
        Command::Sweep {
            config,
            parallelism,
            out,
        } => cmd_sweep(config, *parallelism, out).map(|_| true),
        Command::Oracle { out, repeats } => cmd_oracle(out.as_deref(), *repeats),
        Command::Plot {
            csv,
            out,
            threshold,
        } => cmd_plot(csv, out, *threshold).map(|_| true),
        Command::Schedule {
            epsilon,
            tasks,
            gap_bound,
            regret,
        } => cmd_schedule(*epsilon, *tasks, *gap_bound, *regret).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("oracle checks failed");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
