use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fair_coreset::fairflow::evaluate_objective;
use fair_coreset::geometry::{validate_dataset, CoresetParams, Dataset, Objective};
use fair_coreset::harness::{self, BenchConfig};
use fair_coreset::pipeline::{self, build_fair_coreset, uniform_coreset};
use fair_coreset::Result;

#[derive(Parser)]
#[command(name = "fair-coreset", version, about = "Coresets for fair k-median and k-means clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Numeric feature columns (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    /// Categorical group columns (comma-separated).
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    /// Min-max normalize each feature to [0,1].
    #[arg(long)]
    normalize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let l = harness::load_csv(&self.input, &self.features, &self.groups)?;
        if l.dropped_rows > 0 {
            eprintln!("dropped {} rows with missing or non-numeric values", l.dropped_rows);
        }
        Ok(if self.normalize {
            harness::normalize_minmax(&l.dataset)
        } else {
            l.dataset
        })
    }
}

fn parse_z(s: &str) -> std::result::Result<Objective, String> {
    let z: u8 = s.parse().map_err(|_| format!("not an integer: {s}"))?;
    Objective::try_from(z).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Build a coreset artifact from a dataset.
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        /// 1 for k-median, 2 for k-means.
        #[arg(long, value_parser = parse_z)]
        z: Objective,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        budget_scale: f64,
        /// Build the uniform baseline of this size instead.
        #[arg(long)]
        uniform: Option<usize>,
        /// Coreset CSV path; the sidecar goes to `<output>.json`.
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate the fair objective for a constraint and center set.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Evaluate on this coreset instead of the dataset.
        #[arg(long)]
        coreset: Option<PathBuf>,
        /// CSV with rows `cluster,profile,mass`.
        #[arg(long)]
        constraint: PathBuf,
        /// CSV with one row of feature values per center.
        #[arg(long)]
        centers: PathBuf,
        #[arg(long, value_parser = parse_z)]
        z: Objective,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the assignment plan as well.
        #[arg(long)]
        plan: bool,
    },
    /// Run the benchmark protocol and write a report.
    Bench {
        /// JSON config; other flags are ignored when given.
        #[arg(long, conflicts_with_all = ["input", "features"])]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required_unless_present = "config")]
        features: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        groups: Vec<String>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, value_parser = parse_z, default_value = "1")]
        z: Objective,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        budget_scale: f64,
        /// Report base path; writes `<output>.json` and `<output>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a coreset artifact against its source dataset.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        coreset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic Gaussian-mixture dataset.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        profiles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Build {
            data,
            k,
            z,
            epsilon,
            seed,
            budget_scale,
            uniform,
            output,
        } => {
            let d = data.load()?;
            let a = match uniform {
                Some(size) => uniform_coreset(&d, size, seed)?,
                None => {
                    let mut p = CoresetParams::new(epsilon, k, z, seed);
                    p.projection_budget_scale = budget_scale;
                    build_fair_coreset(&d, &p)?
                }
            };
            pipeline::save_coreset(&a, &output)?;
            println!(
                "{} points from {} ({} profiles) in {:.1} ms -> {}",
                a.len(),
                d.len(),
                d.num_profiles(),
                a.total_elapsed_ms(),
                output.display()
            );
            Ok(true)
        }
        Command::Eval {
            data,
            coreset,
            constraint,
            centers,
            z,
            seed: _,
            plan,
        } => {
            let s = match coreset {
                Some(path) => pipeline::load_coreset(&path)?.points,
                None => data.load()?.to_weighted(),
            };
            let c = harness::load_centers_csv(&centers)?;
            let f = harness::load_constraint_csv(&constraint, c.k(), s.profiles.len())?;
            let result = evaluate_objective(&s, &f, &c, z)?;
            println!("objective {}", pipeline::fmt_f64(result.objective));
            if plan {
                println!("point,cluster,mass");
                for fl in &result.flows {
                    println!("{},{},{}", fl.point, fl.cluster, pipeline::fmt_f64(fl.mass));
                }
            }
            Ok(true)
        }
        Command::Bench {
            config,
            input,
            features,
            groups,
            k,
            z,
            epsilons,
            trials,
            normalize,
            seed,
            budget_scale,
            output,
        } => {
            let cfg = match config {
                Some(path) => serde_json::from_str::<BenchConfig>(&std::fs::read_to_string(path)?)?,
                None => BenchConfig {
                    input: input.expect("required by clap"),
                    features,
                    groups,
                    k,
                    z,
                    epsilons,
                    trials,
                    normalize,
                    seed,
                    projection_budget_scale: budget_scale,
                    output,
                },
            };
            let report = harness::run_benchmark(&cfg)?;
            print!("{}", report.to_csv());
            Ok(true)
        }
        Command::Validate { data, coreset, seed: _ } => {
            let d = data.load()?;
            let mut problems: Vec<String> = validate_dataset(&d).iter().map(|v| format!("dataset: {v:?}")).collect();
            let a = pipeline::load_coreset(&coreset)?;
            problems.extend(pipeline::validate_artifact(&a, &d));
            for p in &problems {
                println!("{p}");
            }
            if problems.is_empty() {
                println!("ok: {} points, {} profiles", a.len(), a.points.profiles.len());
            }
            Ok(problems.is_empty())
        }
        Command::Synth {
            n,
            profiles,
            seed,
            output,
        } => {
            let d = harness::synthetic_mixture(n, profiles, seed);
            harness::write_dataset_csv(&d, &output)?;
            println!("{} points -> {}", d.len(), output.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
