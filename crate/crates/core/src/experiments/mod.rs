//! Config-driven sweeps, scaling fits and verification suites.

mod config;
mod fit;
mod verify;

pub use config::{replicate_seed, Cell, ExperimentConfig, MetricsConfig, OutputConfig, TGrid};
pub use fit::{fit_rows, fit_scaling, FitPoint, Regressor, ScalingFit};
pub use verify::{verify, verify_with, Check, VerifyOptions, VerifyReport, SUITES};

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::growth::generate;
use crate::metrics::{self, DiameterOptions};
use crate::params::{Delta, Variant};
use crate::structure;

/// Version of the `results.csv` schema.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 8] = ["model", "m", "delta", "t", "seed", "metric", "value", "method"];

/// One row of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub model: Variant,
    pub m: u32,
    pub delta: Delta,
    pub t: u64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub method: String,
}

impl ResultRow {
    fn record(&self) -> [String; 8] {
        [
            self.model.to_string(),
            self.m.to_string(),
            self.delta.to_string(),
            self.t.to_string(),
            self.seed.to_string(),
            self.metric.clone(),
            self.value.to_string(),
            self.method.clone(),
        ]
    }
}

/// Writes rows with the fixed header.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record(r.record()).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Table(format!("unexpected results header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let bad = |i: usize| Error::Table(format!("bad `{}` field `{}` in results row", CSV_HEADER[i], field(i)));
        rows.push(ResultRow {
            model: field(0).parse().map_err(|_| bad(0))?,
            m: field(1).parse().map_err(|_| bad(1))?,
            delta: Delta::parse(field(2)).map_err(|_| bad(2))?,
            t: field(3).parse().map_err(|_| bad(3))?,
            seed: field(4).parse().map_err(|_| bad(4))?,
            metric: field(5).to_string(),
            value: field(6).parse().map_err(|_| bad(6))?,
            method: field(7).to_string(),
        });
    }
    Ok(rows)
}

pub fn load_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    read_results_csv(std::fs::File::open(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Table(e.to_string())
}

/// Sample mean, sample sd and 95% Student-t interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Aggregate { n, mean, sd: None, ci95: None };
        }
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        let q = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("dof >= 1").inverse_cdf(0.975);
        let half = q * sd / (n as f64).sqrt();
        Aggregate { n, mean, sd: Some(sd), ci95: Some((mean - half, mean + half)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub model: Variant,
    pub m: u32,
    pub delta: Delta,
    pub t: u64,
    pub metrics: BTreeMap<String, Aggregate>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub version: String,
    pub csv_schema: u32,
    pub master_seed: u64,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub rows: Vec<ResultRow>,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn failed_jobs(&self) -> usize {
        self.summary.cells.iter().map(|c| c.failures.len()).sum()
    }
}

/// Runs the sweep and writes `results.csv`, `summary.json` and `plot_data.csv`
/// into the configured output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_into(cfg, &cfg.output.dir)
}

pub fn run_into(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let ex = cfg.execution.unwrap_or_default();
    let cells = cfg.cells()?;
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.seeds).map(move |r| (c, r)))
        .collect();
    let outcomes = ex.map(&jobs, |&(c, r)| {
        let cell = &cells[c];
        let seed = replicate_seed(cfg.master_seed, &cell.key(), r);
        (seed, run_job(cfg, cell, seed))
    });

    let mut rows = Vec::new();
    let mut per_cell: Vec<CellValues> = vec![Default::default(); cells.len()];
    for (&(c, _), (seed, outcome)) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(values) => {
                for (metric, value, method) in values {
                    per_cell[c].0.entry(metric.clone()).or_default().push(value);
                    let p = cells[c].params;
                    rows.push(ResultRow {
                        model: p.variant,
                        m: p.m,
                        delta: p.delta,
                        t: cells[c].t,
                        seed,
                        metric,
                        value,
                        method,
                    });
                }
            }
            Err(e) => per_cell[c].1.push(Failure { seed, error: e.to_string() }),
        }
    }
    let summary = RunSummary {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        csv_schema: CSV_SCHEMA_VERSION,
        master_seed: cfg.master_seed,
        cells: cells
            .iter()
            .zip(per_cell)
            .map(|(cell, (values, failures))| CellSummary {
                model: cell.params.variant,
                m: cell.params.m,
                delta: cell.params.delta,
                t: cell.t,
                metrics: values.iter().map(|(k, v)| (k.clone(), Aggregate::of(v))).collect(),
                failures,
            })
            .collect(),
    };

    std::fs::create_dir_all(dir)?;
    write_results_csv(&rows, std::fs::File::create(dir.join("results.csv"))?)?;
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    write_plot_data(&summary, std::fs::File::create(dir.join("plot_data.csv"))?)?;
    Ok(RunOutput { dir: dir.to_path_buf(), rows, summary })
}

type MetricValue = (String, f64, String);
type CellValues = (BTreeMap<String, Vec<f64>>, Vec<Failure>);

fn run_job(cfg: &ExperimentConfig, cell: &config::Cell, seed: u64) -> Result<Vec<MetricValue>> {
    let g = generate(cell.params, cell.t, seed)?;
    let mc = &cfg.metrics;
    // Replicates already run in parallel; per-graph work stays sequential.
    let inner = Execution::Sequential;
    let mut out: Vec<MetricValue> = Vec::new();
    let mut push = |name: &str, value: f64, method: &str| out.push((name.to_string(), value, method.to_string()));

    push("max_degree", g.degrees().iter().copied().max().unwrap_or(0) as f64, "exact");
    if let Some(method) = mc.diameter {
        let opts = DiameterOptions {
            method,
            max_exact_vertices: mc.max_exact_vertices,
            force: false,
            max_bfs: mc.max_bfs,
            execution: inner,
        };
        let d = metrics::diameter(&g, &opts)?;
        let method = if d.is_exact() { method.to_string() } else { format!("{method}:bracket") };
        push("diameter", d.lower as f64, &method);
        push("diameter_upper", d.upper as f64, &method);
    }
    if mc.typical_pairs > 0 {
        let td = metrics::typical_distance(&g, mc.typical_pairs, seed, inner)?;
        if let Some(mean) = td.mean {
            push("typical_distance", mean, "sampled");
        }
        push("disconnected_pairs", td.disconnected as f64, "sampled");
    }
    if mc.components {
        let comps = metrics::components(&g);
        push("components", comps.count() as f64, "exact");
        push("largest_component", comps.largest() as f64, "exact");
    }
    if let Some(sigma) = mc.core_sigma {
        let core = structure::core(&g, sigma)?;
        push("core_size", core.size() as f64, &format!("sigma={sigma}"));
        if let Some(d) = mc.layer_d {
            let h = structure::layers(&g, sigma, d)?;
            for (k, size) in h.sizes.iter().enumerate() {
                push(&format!("layer_{}", k + 1), *size as f64, &format!("d={d}"));
            }
        }
    }
    if let Some(k) = mc.exploration_depth {
        if g.m() >= 2 && g.t() % 2 == 0 {
            let c = structure::count_proper_trees(&g, k, None, inner)?;
            push("proper_trees", c.z as f64, &format!("k={k}"));
        }
    }
    Ok(out)
}

fn write_plot_data<W: Write>(summary: &RunSummary, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "m", "delta", "t", "metric", "n", "mean", "sd", "ci95_lo", "ci95_hi"])
        .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for c in &summary.cells {
        for (metric, a) in &c.metrics {
            out.write_record([
                c.model.to_string(),
                c.m.to_string(),
                c.delta.to_string(),
                c.t.to_string(),
                metric.clone(),
                a.n.to_string(),
                a.mean.to_string(),
                opt(a.sd),
                opt(a.ci95.map(|x| x.0)),
                opt(a.ci95.map(|x| x.1)),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_matches_hand_values() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.mean, 2.5);
        assert!((a.sd.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        // t_{0.975, 3} = 3.182446
        let (lo, _) = a.ci95.unwrap();
        assert!((2.5 - lo - 3.182446 * a.sd.unwrap() / 2.0).abs() < 1e-5);
        assert_eq!(Aggregate::of(&[7.0]).sd, None);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![ResultRow {
            model: Variant::B,
            m: 2,
            delta: Delta::ratio(-1, 2).unwrap(),
            t: 100,
            seed: 9,
            metric: "diameter".into(),
            value: 0.1 + 0.2,
            method: "exact".into(),
        }];
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        assert!(buf.starts_with(b"model,m,delta,t,seed,metric,value,method\n"));
        assert_eq!(read_results_csv(&buf[..]).unwrap(), rows);
    }
}
