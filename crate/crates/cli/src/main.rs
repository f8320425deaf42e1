//! `ccp-risk`: margin, default fund and scaling studies from JSON configs.

mod error;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccp_risk::migration::{calibrate_daily, MigrationPattern, Rating, RatingTransitionMatrix};
use ccp_risk::simulation::{run_df_study, run_im_study, run_scaling_study, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

use error::{CliError, Result};
use manifest::{Job, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "ccp-risk", version, about = "CCP default waterfall risk studies")]
struct Cli {
    /// Worker threads for the Monte Carlo engine (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate a per-step transition matrix from an annual one.
    Calibrate {
        /// Annual transition matrix, headerless CSV.
        annual: PathBuf,
        /// Steps per year.
        #[arg(long, default_value_t = 252)]
        steps: u32,
        /// Ratings allowed to default (comma-separated); 3..K-1 by default.
        #[arg(long, value_delimiter = ',')]
        default_sources: Option<Vec<Rating>>,
        /// Ratings whose default blocks upgrades under Type II.
        #[arg(long, value_delimiter = ',')]
        jump_triggers: Option<Vec<Rating>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initial margin per portfolio over the level grid.
    Im {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the exposure laws of each portfolio.
        #[arg(long)]
        emit_distributions: bool,
    },
    /// Default fund sizing, allocation and cover probabilities.
    Df {
        #[command(flatten)]
        run: RunArgs,
    },
    /// DF/IM against the number of members.
    Scaling {
        #[command(flatten)]
        run: RunArgs,
        /// Member counts, multiples of the smallest.
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        counts: Vec<usize>,
    },
    /// Re-run a recorded run and compare with its outputs.
    Replay {
        /// The `manifest.json` of the recorded run.
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths_migration: Option<usize>,
    #[arg(long)]
    paths_reference: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&self.config).map_err(|e| CliError::io(&self.config, e))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.paths_migration {
            cfg.paths_migration = p;
        }
        if let Some(p) = self.paths_reference {
            cfg.paths_reference = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Output files of one run, in write order.
struct Outputs(Vec<(&'static str, String)>);

impl Outputs {
    fn write(&self, dir: &Path) -> Result<Vec<String>> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in &self.0 {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::io(path, e))?;
        }
        Ok(self.0.iter().map(|(n, _)| n.to_string()).collect())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.6}"))
}

/// Runs `job`, printing a summary, and returns its output files.
fn execute(job: &Job) -> Result<Outputs> {
    match job {
        Job::Calibrate {
            annual_matrix,
            steps,
            default_sources,
            jump_triggers,
        } => {
            let mut pattern = MigrationPattern::standard(annual_matrix.size());
            if let Some(s) = default_sources {
                pattern.default_sources = s.clone();
                pattern.jump_triggers = s.clone();
            }
            if let Some(t) = jump_triggers {
                pattern.jump_triggers = t.clone();
            }
            let cal = calibrate_daily(annual_matrix, *steps, &pattern)?;
            println!(
                "calibrated {}x{} matrix to 1/{steps} year: reconstruction error {:.3e}, projection {:.3e}",
                annual_matrix.size(),
                annual_matrix.size(),
                cal.reconstruction_error,
                cal.projection_adjustment
            );
            let report = serde_json::json!({
                "steps": steps,
                "reconstruction_error": cal.reconstruction_error,
                "projection_adjustment": cal.projection_adjustment,
            });
            Ok(Outputs(vec![
                ("daily_matrix.csv", cal.matrix.to_csv_string()),
                ("calibration.json", serde_json::to_string_pretty(&report).expect("json")),
            ]))
        }
        Job::Im {
            config,
            emit_distributions,
        } => {
            let study = run_im_study(config)?;
            for r in &study.rows {
                println!("portfolio {} {:<5} alpha {:<6} IM {:.6}", r.portfolio, r.measure, r.alpha, r.im);
            }
            let mut plateaus = String::from("portfolio,alpha_from,alpha_to,var\n");
            for (i, segs) in study.var_plateaus.iter().enumerate() {
                for s in segs {
                    plateaus.push_str(&format!("{},{:e},{:e},{}\n", i + 1, s.alpha_from, s.alpha_to, s.var));
                }
            }
            let mut files = vec![("im.csv", study.to_csv()), ("var_plateaus.csv", plateaus)];
            if *emit_distributions {
                files.push(("distributions.csv", study.distributions_csv()));
            }
            Ok(Outputs(files))
        }
        Job::Df { config } => {
            let r = run_df_study(config)?;
            println!(
                "{} members, {} dependence, {} x {} paths; {:.2}% of migration paths with a default",
                r.members,
                r.dependence,
                r.paths_migration,
                r.paths_reference,
                100.0 * r.default_path_fraction
            );
            for c in &r.cells {
                println!(
                    "alpha {:<6} beta {:<6} DF {:.6} (se {:.2e})  DF/IM {}  Cover1 {:.4}",
                    c.alpha,
                    c.beta,
                    c.df_total,
                    c.df_std_error,
                    fmt_opt(c.ratio),
                    c.covers.cover1
                );
            }
            Ok(Outputs(vec![
                ("study.json", r.to_json()),
                ("ratio_grid.csv", r.ratio_grid_csv()),
                ("covers.csv", r.cover_csv()),
                ("allocation.csv", r.allocation_csv()),
            ]))
        }
        Job::Scaling { config, counts } => {
            let s = run_scaling_study(config, counts)?;
            for r in &s.rows {
                println!(
                    "{:>3} members: DF/IM {}  C1/IM {}  C2/IM {}",
                    r.members,
                    fmt_opt(r.ratio),
                    fmt_opt(r.c1_ratio),
                    fmt_opt(r.c2_ratio)
                );
            }
            Ok(Outputs(vec![("scaling.csv", s.to_csv()), ("scaling.json", s.to_json())]))
        }
    }
}

fn record(job: Job, input: &Path, out: &Path) -> Result<()> {
    let outputs = execute(&job)?.write(out)?;
    RunManifest::new(job, input, out, outputs).write(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let recorded = RunManifest::read(manifest_path)?;
    let original_dir = manifest_path.parent().unwrap_or(Path::new("."));
    record(recorded.job.clone(), Path::new(&recorded.config_path), out)?;
    let mut differing = Vec::new();
    for name in &recorded.outputs {
        let before = fs::read(original_dir.join(name)).map_err(|e| CliError::io(original_dir.join(name), e))?;
        let after = fs::read(out.join(name)).map_err(|e| CliError::io(out.join(name), e))?;
        if before != after {
            differing.push(name.clone());
        }
    }
    if differing.is_empty() {
        println!("replay identical: {} files", recorded.outputs.len());
        Ok(())
    } else {
        Err(CliError::ReplayMismatch(differing.join(", ")))
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Calibrate {
            annual,
            steps,
            default_sources,
            jump_triggers,
            out,
        } => {
            let file = fs::File::open(&annual).map_err(|e| CliError::io(&annual, e))?;
            let annual_matrix = RatingTransitionMatrix::from_csv_reader(file)
                .map_err(|e| CliError::Usage(format!("{}: {e}", annual.display())))?;
            let job = Job::Calibrate {
                annual_matrix,
                steps,
                default_sources,
                jump_triggers,
            };
            record(job, &annual, &out)
        }
        Command::Im {
            run,
            emit_distributions,
        } => {
            let job = Job::Im {
                config: run.load()?,
                emit_distributions,
            };
            record(job, &run.config, &run.out)
        }
        Command::Df { run } => record(Job::Df { config: run.load()? }, &run.config, &run.out),
        Command::Scaling { run, counts } => {
            let job = Job::Scaling {
                config: run.load()?,
                counts,
            };
            record(job, &run.config, &run.out)
        }
        Command::Replay { manifest, out } => {
            let path = if manifest.is_dir() {
                manifest.join(MANIFEST_FILE)
            } else {
                manifest
            };
            replay(&path, &out)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
