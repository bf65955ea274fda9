use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use palab_core::enumeration;
use palab_core::experiments::{self, ExperimentConfig, Regressor, VerifyOptions, SUITES};
use palab_core::metrics::{self, DiameterMethod, DiameterOptions, DEFAULT_MAX_EXACT_VERTICES};
use palab_core::structure;
use palab_core::theory;
use palab_core::{generate, Delta, Error, Execution, PAGraph, PAParams, Variant};

#[derive(Parser)]
#[command(name = "palab", version, about = "Preferential-attachment graph laboratory")]
struct Cli {
    /// Execution mode for data-parallel work: par or seq.
    #[arg(long, global = true, default_value_t = Execution::default())]
    execution: Execution,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a graph and write it in the text graph format.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; `-` writes to stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the degree histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Summary statistics of a stored graph.
    Stats {
        graph: PathBuf,
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Distances: one pair, or a sample of uniform pairs.
    Distance {
        graph: PathBuf,
        #[arg(long, requires = "to")]
        from: Option<u32>,
        #[arg(long, requires = "from")]
        to: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the sampled distances as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Diameter, exact or by bounds.
    Diameter {
        graph: PathBuf,
        #[arg(long, default_value_t = DiameterMethod::Bounds)]
        method: DiameterMethod,
        #[arg(long, default_value_t = DEFAULT_MAX_EXACT_VERTICES)]
        max_exact_vertices: usize,
        /// Run the exact method beyond the vertex budget.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        max_bfs: Option<usize>,
        /// Write every eccentricity as CSV (all-sources BFS).
        #[arg(long)]
        eccentricities: Option<PathBuf>,
    },
    /// Inner core, layers and exploration trees.
    Structure {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        layer_d: f64,
        /// Proper-tree count at this depth (needs m >= 2 and even t).
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, requires = "depth")]
        roots_csv: Option<PathBuf>,
    },
    /// Derived constants as JSON.
    Theory {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// The unspecified absolute constant of the lower-bound length.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Run a verification suite; exits 1 when a check fails.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the checks as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a configured sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact outcome table of a tiny process as JSON.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        horizon: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Least-squares scaling fit of a sweep's results.csv.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "diameter")]
        metric: String,
        #[arg(long, default_value = "ln")]
        regressor: Regressor,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Growth rule: a, b or c.
    #[arg(long)]
    model: Variant,
    #[arg(long)]
    m: u32,
    /// Integer, decimal or p/q.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    delta: Delta,
}

impl ModelArgs {
    fn params(&self) -> Result<PAParams> {
        Ok(PAParams::new(self.model, self.m, self.delta)?)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::InvalidParams(_) | Error::OutOfRange(_) | Error::Config(_) | Error::UnknownSuite(_))
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load(path: &Path) -> Result<PAGraph> {
    PAGraph::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Returns whether the command passed.
fn run(cli: Cli) -> Result<bool> {
    let ex = cli.execution;
    match cli.command {
        Command::Generate { model, t, seed, out, histogram } => {
            let p = model.params()?;
            let start = Instant::now();
            let g = generate(p, t, seed)?;
            let secs = start.elapsed().as_secs_f64();
            match out.as_deref() {
                Some(path) if path == Path::new("-") => g.write_to(&mut BufWriter::new(io::stdout().lock()))?,
                Some(path) => g.save(path)?,
                None => {}
            }
            if let Some(path) = histogram {
                let mut w = create(&path)?;
                g.write_degree_histogram_csv(&mut w)?;
                w.flush()?;
            }
            eprintln!("generated t={t} ({} edges) in {secs:.3}s", g.edge_count());
        }
        Command::Stats { graph, histogram } => {
            let g = load(&graph)?;
            let comps = metrics::components(&g);
            let max_degree = g.degrees().iter().copied().max().unwrap_or(0);
            print_json(&json!({
                "model": g.params().variant,
                "m": g.m(),
                "delta": g.params().delta,
                "t": g.t(),
                "seed": g.meta().seed,
                "edges": g.edge_count(),
                "degree_sum": g.degrees().iter().sum::<u64>(),
                "max_degree": max_degree,
                "self_loops": g.self_loop_count(),
                "components": comps.count(),
                "largest_component": comps.largest(),
            }))?;
            if let Some(path) = histogram {
                let mut w = create(&path)?;
                g.write_degree_histogram_csv(&mut w)?;
                w.flush()?;
            }
        }
        Command::Distance { graph, from, to, pairs, seed, csv } => {
            let g = load(&graph)?;
            if let (Some(u), Some(v)) = (from, to) {
                let r = metrics::bfs(&g, u)?;
                print_json(&json!({ "from": u, "to": v, "distance": r.distance(v) }))?;
            } else {
                let td = metrics::typical_distance(&g, pairs, seed, ex)?;
                print_json(&td)?;
                if let Some(path) = csv {
                    let mut w = create(&path)?;
                    metrics::write_distance_samples_csv(&td, &mut w)?;
                    w.flush()?;
                }
            }
        }
        Command::Diameter { graph, method, max_exact_vertices, force, max_bfs, eccentricities } => {
            let g = load(&graph)?;
            let opts = DiameterOptions { method, max_exact_vertices, force, max_bfs, execution: ex };
            let d = metrics::diameter(&g, &opts)?;
            print_json(&json!({
                "lower": d.lower,
                "upper": d.upper,
                "exact": d.is_exact(),
                "method": d.method,
                "witness": d.witness,
                "bfs_runs": d.bfs_runs,
            }))?;
            if let Some(path) = eccentricities {
                let ecc = metrics::eccentricities(g.adjacency(), ex);
                let mut w = create(&path)?;
                metrics::write_eccentricity_csv(&ecc, &mut w)?;
                w.flush()?;
            }
        }
        Command::Structure { graph, sigma, layer_d, depth, roots_csv } => {
            let g = load(&graph)?;
            let core = structure::core(&g, sigma)?;
            let layers = structure::layers(&g, sigma, layer_d)?;
            let trees = depth.map(|k| structure::count_proper_trees(&g, k, None, ex)).transpose()?;
            print_json(&json!({
                "t": g.t(),
                "core_size": core.size(),
                "core_threshold": core.threshold,
                "core_below_admissible": core.below_admissible,
                "layer_sizes": layers.sizes,
                "layer_thresholds": layers.thresholds.recursion,
                "layers_nested": layers.nested,
                "proper_trees": trees.as_ref().map(|c| json!({ "k": c.k, "roots": c.t, "z": c.z })),
            }))?;
            if let (Some(path), Some(c)) = (roots_csv, trees) {
                let mut w = create(&path)?;
                structure::write_roots_csv(&c, &mut w)?;
                w.flush()?;
            }
        }
        Command::Theory { model, t, sigma, c } => {
            let p = model.params()?;
            print_json(&theory::derived_constants(&p, t, sigma, c))?;
        }
        Command::Verify { suite, seed, csv } => {
            let report = experiments::verify_with(&suite, &VerifyOptions { seed, execution: ex })?;
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{tag} {}: {} (limit {}) {}", c.name, c.value, c.limit, c.detail);
            }
            print_json(&report)?;
            if let Some(path) = csv {
                let mut w = create(&path)?;
                writeln!(w, "suite,check,passed,value,limit")?;
                for c in &report.checks {
                    writeln!(w, "{},\"{}\",{},{},{}", report.suite, c.name, c.passed, c.value, c.limit)?;
                }
                w.flush()?;
            }
            return Ok(report.passed);
        }
        Command::Sweep { config, out } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            cfg.execution.get_or_insert(ex);
            let res = experiments::run(&cfg)?;
            eprintln!(
                "{} rows written to {} ({} failed jobs)",
                res.rows.len(),
                res.dir.display(),
                res.failed_jobs()
            );
            return Ok(res.failed_jobs() == 0);
        }
        Command::Enumerate { model, horizon, out } => {
            let dist = enumeration::enumerate(model.params()?, horizon)?;
            let v = dist.to_json();
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    serde_json::to_writer_pretty(&mut w, &v)?;
                    writeln!(w)?;
                    w.flush()?;
                }
                None => print_json(&v)?,
            }
        }
        Command::Fit { csv, metric, regressor } => {
            let rows = experiments::load_results_csv(&csv)?;
            print_json(&experiments::fit_scaling(&rows, &metric, regressor)?)?;
        }
    }
    Ok(true)
}
