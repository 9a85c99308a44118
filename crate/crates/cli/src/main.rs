use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wmdim_core::cube::{cover_order, initial_grid_cover, is_separating, search_min_separating_order, BoxCover};
use wmdim_core::experiment::{self, ExperimentConfig, ExperimentKind, GridConfig, IntRange, Outcome};
use wmdim_core::independence::verify_independence;
use wmdim_core::measures::DiscreteMeasure;
use wmdim_core::rational::{fmt_q, q_to_f64};
use wmdim_core::spaces::{IePair, SystemSpec};
use wmdim_core::transport::{w1, w1_float, wnm, w_bowen};
use wmdim_core::Error;

#[derive(Parser)]
#[command(name = "wmdim", version, about = "Wasserstein mean dimension experiments at finite scale")]
struct Cli {
    /// Worker threads (WMDIM_JOBS takes precedence; default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact 1-Wasserstein distance between two measures.
    W1 {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Print the optimal plan as CSV rows (source,target,mass).
        #[arg(long)]
        exact: bool,
        /// Use the Bowen metric d_n instead of d.
        #[arg(long)]
        bowen: Option<usize>,
        /// Use W_n^m, given as `n,m`.
        #[arg(long, value_name = "N,M")]
        wnm: Option<String>,
        /// Solve in floating point.
        #[arg(long, conflicts_with_all = ["bowen", "wnm"])]
        float: bool,
    },
    /// Certify or refute independence of an IE-pair on a finite index set.
    Independence {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        pair: PathBuf,
        #[arg(long = "J", value_delimiter = ',')]
        j: Vec<usize>,
        #[arg(long, default_value_t = 12)]
        bound: usize,
    },
    /// Order and separation of box covers of Δ_k^n.
    Cover {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Search for a separating cover of small order.
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cover JSON to evaluate instead of the initial grid cover.
        #[arg(long, conflicts_with = "search")]
        cover: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
        /// Where to write the witness cover JSON.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Certified lower-bound curve with grid counts and covering bounds.
    Rates {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        m: IntRange,
        #[arg(long)]
        n: IntRange,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        max_pairs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run one lemma checker (or `all`).
    Verify {
        #[arg(long)]
        lemma: String,
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Separated-set counts of the Bowen metric.
    Entropy {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<String>,
        #[arg(long)]
        n: IntRange,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Separated-set counts of a measure grid under W_n^m.
    InducedEntropy {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<String>,
        #[arg(long)]
        n: IntRange,
        #[arg(long)]
        m: IntRange,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        max_pairs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run an experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutArgs {
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Measure grid weight denominator.
    #[arg(long)]
    grid_g: Option<usize>,
    /// Measure grid cylinder length.
    #[arg(long)]
    grid_level: Option<usize>,
}

impl GridArgs {
    fn config(&self) -> Option<GridConfig> {
        match (self.grid_g, self.grid_level) {
            (Some(g), Some(level)) => Some(GridConfig { g, level }),
            (Some(g), None) => Some(GridConfig { g, level: 2 }),
            (None, Some(level)) => Some(GridConfig { g: 2, level }),
            (None, None) => None,
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_system(path: &Path) -> anyhow::Result<SystemSpec> {
    Ok(SystemSpec::from_json(&read(path)?)?)
}

fn system_value(path: &Path) -> anyhow::Result<serde_json::Value> {
    Ok(serde_json::from_str(&load_system(path)?.to_json())?)
}

fn emit(text: &str, out: &OutArgs) -> anyhow::Result<()> {
    match &out.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bare_config(experiment: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        system: None,
        m: None,
        n: None,
        eps: None,
        grid: None,
        seed: 0,
        trials: None,
        k: None,
        budget: None,
        max_pairs: None,
    }
}

fn run_experiment(config: &ExperimentConfig, jobs: usize, out: &OutArgs, svg: Option<&Path>) -> anyhow::Result<bool> {
    let outcome: Outcome = experiment::run(config, jobs)?;
    emit(&outcome.csv()?, out)?;
    if let (Some(path), Some(svg)) = (svg, &outcome.svg) {
        fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    if !outcome.passed {
        eprintln!("embedded checks failed");
    }
    Ok(outcome.passed)
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let jobs = experiment::resolve_jobs(cli.jobs);
    match cli.command {
        Command::W1 {
            space,
            mu,
            nu,
            exact,
            bowen,
            wnm: wnm_arg,
            float,
        } => {
            let spec = load_system(&space)?;
            let mu = DiscreteMeasure::from_json(&spec, &read(&mu)?)?;
            let nu = DiscreteMeasure::from_json(&spec, &read(&nu)?)?;
            if let Some(arg) = wnm_arg {
                let parts: Vec<usize> = arg
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| Error::InvalidParameter(format!("--wnm expects n,m, got {arg:?}")))?;
                let [n, m] = parts[..] else {
                    return Err(Error::InvalidParameter(format!("--wnm expects n,m, got {arg:?}")).into());
                };
                println!("cost={}", fmt_q(&wnm(&spec, &mu, &nu, n, m)?));
                return Ok(true);
            }
            if let Some(n) = bowen {
                println!("cost={}", fmt_q(&w_bowen(&spec, &mu, &nu, n)?));
                return Ok(true);
            }
            if float {
                let sol = w1_float(&spec, &mu, &nu)?;
                println!("cost={}", sol.cost);
                if exact {
                    println!("source,target,mass");
                    for (s, t, w) in &sol.plan.entries {
                        println!("{},{},{}", spec.label(s), spec.label(t), w);
                    }
                }
                return Ok(true);
            }
            let sol = w1(&spec, &mu, &nu)?;
            println!("cost={} ({:.12})", fmt_q(&sol.cost), q_to_f64(&sol.cost));
            if exact {
                println!("source,target,mass");
                for (s, t, w) in &sol.plan.entries {
                    println!("{},{},{}", spec.label(s), spec.label(t), fmt_q(w));
                }
            }
            Ok(true)
        }
        Command::Independence { system, pair, j, bound } => {
            let spec = load_system(&system)?;
            let pair = IePair::from_json(&spec, &read(&pair)?)?;
            let result = verify_independence(&spec, &pair, &j, bound)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(true)
        }
        Command::Cover {
            k,
            n,
            search,
            budget,
            seed,
            cover,
            out,
            witness,
        } => {
            if search {
                let mut config = bare_config(ExperimentKind::Cover);
                config.k = Some(k);
                config.n = Some(IntRange::from(n));
                config.budget = Some(budget);
                config.seed = seed;
                let ok = run_experiment(&config, jobs, &out, None)?;
                if let Some(path) = witness {
                    let result = search_min_separating_order(k, n, budget, seed)?;
                    fs::write(&path, result.witness.to_json()).with_context(|| format!("writing {}", path.display()))?;
                }
                return Ok(ok);
            }
            let cover = match cover {
                Some(p) => BoxCover::from_json(&read(&p)?)?,
                None => initial_grid_cover(k, n)?,
            };
            if cover.k() != k || cover.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "cover lives in Δ_{}^{}, expected Δ_{k}^{n}",
                    cover.k(),
                    cover.n()
                ))
                .into());
            }
            let cert = cover.certify_covering(200_000)?;
            let violation = is_separating(&cover);
            let report = json!({
                "k": k,
                "n": n,
                "boxes": cover.boxes().len(),
                "order": cover_order(&cover),
                "covering": cert.covered,
                "covering_exact": cert.exact,
                "separating": violation.is_none(),
                "violation": violation,
                "lebesgue_candidates": experiment::lebesgue_candidates(k, n)
                    .iter()
                    .map(|(name, v)| json!({"name": name, "value": v}))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(path) = witness {
                fs::write(&path, cover.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(cert.covered && violation.is_none())
        }
        Command::Rates {
            system,
            m,
            n,
            grid,
            max_pairs,
            out,
            svg,
        } => {
            let mut config = bare_config(ExperimentKind::Rates);
            config.system = Some(system_value(&system)?);
            config.m = Some(m);
            config.n = Some(n);
            config.grid = grid.config();
            config.max_pairs = max_pairs;
            run_experiment(&config, jobs, &out, svg.as_deref())
        }
        Command::Verify {
            lemma,
            system,
            m,
            n,
            trials,
            seed,
        } => {
            let spec = load_system(&system)?;
            let lemmas: Vec<&str> = if lemma == "all" {
                wmdim_core::checks::LEMMAS.to_vec()
            } else {
                vec![lemma.as_str()]
            };
            let mut ok = true;
            let mut reports = Vec::new();
            for l in lemmas {
                let report = wmdim_core::checks::run_check(l, &spec, m, n, trials, seed)?;
                eprintln!("{}", report.summary());
                ok &= report.verdict;
                reports.push(report);
            }
            let value = if reports.len() == 1 {
                serde_json::to_value(&reports[0])?
            } else {
                serde_json::to_value(&reports)?
            };
            println!("{}", serde_json::to_string_pretty(&value)?);
            Ok(ok)
        }
        Command::Entropy { system, eps, n, out } => {
            let mut config = bare_config(ExperimentKind::Entropy);
            config.system = Some(system_value(&system)?);
            config.eps = Some(eps);
            config.n = Some(n);
            run_experiment(&config, jobs, &out, None)
        }
        Command::InducedEntropy {
            system,
            eps,
            n,
            m,
            grid,
            max_pairs,
            out,
        } => {
            let mut config = bare_config(ExperimentKind::InducedEntropy);
            config.system = Some(system_value(&system)?);
            config.eps = Some(eps);
            config.n = Some(n);
            config.m = Some(m);
            config.grid = grid.config();
            config.max_pairs = max_pairs;
            run_experiment(&config, jobs, &out, None)
        }
        Command::Run { config, out, svg } => {
            let config = experiment::load_config(&config)?;
            run_experiment(&config, jobs, &out, svg.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let value = match e.downcast_ref::<Error>() {
                Some(Error::Config { key, message }) => {
                    json!({"error": "config", "key": key, "message": message})
                }
                Some(core) => json!({"error": core.kind(), "message": core.to_string()}),
                None => json!({"error": "io", "message": format!("{e:#}")}),
            };
            eprintln!("{value}");
            ExitCode::from(2)
        }
    }
}
