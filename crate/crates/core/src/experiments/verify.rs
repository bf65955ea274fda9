use serde::Serialize;

use crate::enumeration::{enumerate, verify_connection_bounds, verify_negative_correlation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::growth::{generate, replicate_rng};
use crate::params::{Delta, PAParams, Variant};
use crate::sampler::AttachmentSampler;
use crate::theory::{
    beta_binomial_pmf, degree_law_pmf, degree_law_total, fk_upper_bound, layer_thresholds, multinomial_graph,
    multinomial_mean_edges, polya_urn, q_t, urn_exact_pmf, urn_sequence_probability, FkTable,
};

pub const SUITES: [&str; 8] = ["negcorr", "connection", "degree-law", "fk", "polya", "multinomial", "layers", "sampler"];

/// Slack for exact-arithmetic inequalities reported in floating point.
const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value and the limit it is compared against.
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed: value <= limit, value, limit, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(suite: &str, checks: Vec<Check>) -> VerifyReport {
        VerifyReport { suite: suite.to_string(), passed: checks.iter().all(|c| c.passed), checks }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, execution: Execution::default() }
    }
}

pub fn verify(suite: &str) -> Result<VerifyReport> {
    verify_with(suite, &VerifyOptions::default())
}

pub fn verify_with(suite: &str, opts: &VerifyOptions) -> Result<VerifyReport> {
    let checks = match suite {
        "negcorr" => negcorr(opts)?,
        "connection" => connection()?,
        "degree-law" => degree_law(opts)?,
        "fk" => fk(opts)?,
        "polya" => polya(opts)?,
        "multinomial" => multinomial(opts)?,
        "layers" => layers()?,
        "sampler" => sampler(opts)?,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(VerifyReport::new(suite, checks))
}

fn params(v: Variant, m: u32, delta: &str) -> Result<PAParams> {
    PAParams::new(v, m, Delta::parse(delta)?)
}

/// Every enumerable configuration at its largest horizon. Events up to a
/// smaller horizon have the same probabilities in the larger table.
pub(crate) fn enumerable_configs() -> Result<Vec<(PAParams, u32)>> {
    let mut out = Vec::new();
    for v in [Variant::A, Variant::B, Variant::C] {
        for d in ["0", "-1/2", "1"] {
            out.push((params(v, 1, d)?, 6));
        }
    }
    for d in ["-1", "0", "1"] {
        out.push((params(Variant::C, 2, d)?, 5));
    }
    Ok(out)
}

fn negcorr(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let configs = enumerable_configs()?;
    let reports = opts.execution.map(&configs, |&(p, horizon)| {
        enumerate(p, horizon).map(|d| verify_negative_correlation(&d, 3, 2))
    });
    configs
        .iter()
        .zip(reports)
        .map(|(&(p, horizon), r)| {
            let r = r?;
            let mut c = Check::at_most(
                format!("{p} T={horizon}"),
                r.violations as f64,
                0.0,
                format!(
                    "{} families, tightest ratio {:.6} (multi-group {:.6}), worst margin {:.3e}, exact={}",
                    r.families, r.tightest_ratio, r.tightest_ratio_multi, r.worst_margin, r.exact
                ),
            );
            c.passed &= r.worst_margin <= SLACK;
            Ok(c)
        })
        .collect()
}

fn connection() -> Result<Vec<Check>> {
    let p = params(Variant::B, 1, "0")?;
    let mut checks = Vec::new();
    let mut last = Vec::new();
    for horizon in 3..=7 {
        let r = verify_connection_bounds(&enumerate(p, horizon)?);
        checks.push(Check::at_most(
            format!("finite constants T={horizon}"),
            r.m1.max(r.m2),
            f64::INFINITY,
            format!("M1 {:.6} at {:?}, M2 {:.6}, newest-vertex M1 {:.6}", r.m1, r.m1_argmax, r.m2, r.m1_last),
        ));
        if horizon >= 4 {
            last.push((horizon, r.m1_last));
        }
    }
    let rises = last.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most(
        "newest-vertex M1 non-increasing, T=4..7",
        rises,
        SLACK,
        format!("{last:?}"),
    ));
    Ok(checks)
}

/// Seeds and horizon of the degree-law comparison.
pub const DEGREE_LAW_SEEDS: u64 = 20;
pub const DEGREE_LAW_T: u64 = 100_000;

fn degree_law(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (m, d) in [(1, "0"), (2, "0"), (2, "-1"), (2, "1")] {
        let p = params(Variant::C, m, d)?;
        let total = degree_law_total(&p, 10_000)?;
        checks.push(Check::at_most(format!("{p} normalization"), (total - 1.0).abs(), 1e-8, format!("sum {total}")));

        let kmax = (m + 10) as usize;
        let seeds: Vec<u64> = (0..DEGREE_LAW_SEEDS).map(|s| opts.seed + s).collect();
        let counts = opts.execution.map(&seeds, |&seed| {
            generate(p, DEGREE_LAW_T, seed).map(|g| {
                let mut n = vec![0u64; kmax + 1];
                for &deg in g.degrees() {
                    if deg as usize <= kmax {
                        n[deg as usize] += 1;
                    }
                }
                n
            })
        });
        let mut mean = vec![0.0; kmax + 1];
        for c in counts {
            for (acc, x) in mean.iter_mut().zip(c?) {
                *acc += x as f64 / (DEGREE_LAW_T * DEGREE_LAW_SEEDS) as f64;
            }
        }
        // Worst ratio of deviation to tolerance.
        let mut worst = (0.0, m as u64, 0.0, 0.0);
        for k in m as u64..=kmax as u64 {
            let pk = degree_law_pmf(&p, k)?;
            let tol = 0.005f64.max(4.0 * (pk / (DEGREE_LAW_SEEDS * DEGREE_LAW_T) as f64).sqrt());
            let ratio = (mean[k as usize] - pk).abs() / tol;
            if ratio > worst.0 {
                worst = (ratio, k, mean[k as usize], pk);
            }
        }
        checks.push(Check::at_most(
            format!("{p} N_k/t vs p_k, k<={kmax}"),
            worst.0,
            1.0,
            format!("deviation/tolerance; worst k={} mean {:.6} p_k {:.6}", worst.1, worst.2, worst.3),
        ));
    }
    Ok(checks)
}

pub const FK_GRID: [(f64, f64); 3] = [(0.4, 0.5), (0.3, 0.6), (0.45, 0.5)];
pub const FK_S_MAX: u64 = 200;
pub const FK_T_MAX: u64 = 50;

fn fk(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (a, b) in FK_GRID {
        let table = FkTable::new(a, FK_S_MAX)?;
        for k in 1..=3u32 {
            let pairs: Vec<(u64, u64)> = (2..=FK_T_MAX).flat_map(|t| (1..t).map(move |i| (i, t))).collect();
            let rows = opts.execution.map(&pairs, |&(i, t)| -> Result<(f64, f64)> {
                Ok((table.eval(i, t, k)?.upper(), fk_upper_bound(a, b, i, t, k)?))
            });
            let mut violations = 0u32;
            let mut worst = 0.0f64;
            for r in rows {
                let (value, bound) = r?;
                violations += u32::from(value > bound);
                worst = worst.max(value / bound);
            }
            let mut c = Check::at_most(
                format!("a={a} b={b} k={k}"),
                f64::from(violations),
                0.0,
                format!("{} cells, largest f_k/bound {worst:.4}", pairs.len()),
            );
            c.passed &= worst <= 1.0;
            checks.push(c);
        }
    }
    Ok(checks)
}

pub const POLYA_MC_REPS: u64 = 100_000;

fn polya(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst = (0.0f64, String::new());
    for d in ["0", "-1/2", "1"] {
        for m in 1..=4u32 {
            for t in 3..=(12 / m as u64) {
                let p = params(Variant::C, m, d)?;
                let exact = urn_exact_pmf(&p, t)?;
                let n = m as u64 * t;
                let (alpha, beta) = (m as f64, m as f64 * (t as f64 - 2.0));
                for (k, &e) in exact.iter().enumerate() {
                    let diff = (e - beta_binomial_pmf(n, alpha, beta, k as u64)?).abs();
                    if diff > worst.0 || worst.1.is_empty() {
                        worst = (diff.max(worst.0), format!("worst at m={m} t={t} delta={d} k={k}"));
                    }
                }
            }
        }
    }
    checks.push(Check::at_most("urn DP vs beta-binomial, mt<=12", worst.0, 1e-10, worst.1));

    // Exchangeability of the integer-weight urn: every arrangement of r reds in n draws is equally likely.
    let mut exch_ok = true;
    for (alpha, beta, n) in [(1u64, 1u64, 4usize), (2, 2, 5), (2, 6, 6)] {
        for r in 0..=n {
            let mut probs = Vec::new();
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize == r {
                    let seq: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    probs.push(urn_sequence_probability(alpha, beta, &seq));
                }
            }
            exch_ok &= probs.windows(2).all(|w| w[0] == w[1]);
        }
    }
    checks.push(Check {
        name: "exchangeable draw sequences".into(),
        passed: exch_ok,
        value: f64::from(u8::from(!exch_ok)),
        limit: 0.0,
        detail: "exact rational sequence probabilities".into(),
    });

    let p = params(Variant::C, 2, "0")?;
    let t = 200;
    let mc = polya_urn(&p, t, POLYA_MC_REPS, opts.seed)?;
    let n = 2 * t;
    let mut tv = 0.0;
    for (k, &f) in mc.iter().enumerate() {
        tv += (f - beta_binomial_pmf(n, 2.0, 2.0 * (t as f64 - 2.0), k as u64)?).abs();
    }
    tv /= 2.0;
    checks.push(Check::at_most(
        "urn Monte Carlo vs beta-binomial, t=200 m=2",
        tv,
        0.02,
        format!("{POLYA_MC_REPS} replicates, total variation"),
    ));
    Ok(checks)
}

pub const MULTINOMIAL_REPS: u64 = 10_000;

fn multinomial(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n_t = 100u64;
    let t = n_t * n_t;
    let cells = n_t * (n_t - 1) / 2;
    let tau = params(Variant::C, 2, "-1")?.tau();
    let q = q_t(tau, t as f64);
    let expected = multinomial_mean_edges(cells, q, t);
    let reps: Vec<u64> = (0..MULTINOMIAL_REPS).collect();
    let samples = opts.execution.map(&reps, |&r| multinomial_graph(cells, q, t, opts.seed.wrapping_mul(1_000_003) + r));
    let mut values = Vec::with_capacity(samples.len());
    for s in samples {
        values.push(s?.edges as f64);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    Ok(vec![
        Check::at_most(
            "mean M vs 2m_t",
            (mean - expected).abs(),
            4.0 * sd / n.sqrt(),
            format!("n_t={n_t} e_t={cells} q_t={q:.4e} mean {mean:.5} expected {expected:.5}"),
        ),
        Check::at_most("Var(M) vs mean", var, 1.1 * mean, format!("sample variance {var:.5}")),
    ])
}

fn layers() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for tau in [2.2, 2.5, 2.8] {
        for t in [1e4, 1e6] {
            let l = layer_thresholds(tau, t, 1.0, 25)?;
            checks.push(Check::at_most(
                format!("tau={tau} t={t:e}"),
                l.max_rel_error(),
                1e-10,
                "recursion vs closed form, k<=25",
            ));
        }
    }
    Ok(checks)
}

pub const SAMPLER_DRAWS: u64 = 1_000_000;
pub const SAMPLER_DELTAS: [&str; 5] = ["-9/10", "-1/2", "0", "1", "3"];

/// All degree vectors with `n <= 5` vertices and degrees in `1..=6`.
fn tiny_states() -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut layer: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..5 {
        layer = layer
            .iter()
            .flat_map(|s| (1..=6).map(move |d| [s.as_slice(), &[d]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn sampler(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let states = tiny_states();
    let mut checks = Vec::new();
    for ds in SAMPLER_DELTAS {
        let delta = Delta::parse(ds)?;
        let target = delta.to_big_rational().expect("rational delta");
        let mismatches = opts.execution.map(&states, |deg| {
            let law = AttachmentSampler::from_degrees(delta, deg).exact_law().expect("tiny state");
            let total: num_rational::BigRational = deg
                .iter()
                .map(|&d| num_rational::BigRational::from_integer(d.into()) + &target)
                .sum();
            deg.iter()
                .zip(&law)
                .any(|(&d, p)| *p != (num_rational::BigRational::from_integer(d.into()) + &target) / &total)
        });
        let bad = mismatches.iter().filter(|&&x| x).count();
        checks.push(Check::at_most(
            format!("exact law delta={ds}"),
            bad as f64,
            0.0,
            format!("{} states with n<=5, degrees<=6", states.len()),
        ));

        // Monte Carlo on every state with n <= 2 and an evenly spaced subsample of the rest.
        let small = states.iter().take_while(|s| s.len() <= 2).count();
        let picked: Vec<&Vec<u64>> =
            states[..small].iter().chain(states[small..].iter().step_by(307)).collect();
        let tvs = opts.execution.map(&picked, |deg| {
            let s = AttachmentSampler::from_degrees(delta, deg);
            let mut rng = replicate_rng(opts.seed, hash_state(deg));
            let mut counts = vec![0u64; deg.len()];
            for _ in 0..SAMPLER_DRAWS {
                counts[s.sample(&mut rng) as usize] += 1;
            }
            let total: f64 = deg.iter().map(|&d| d as f64 + delta.value()).sum();
            deg.iter()
                .zip(&counts)
                .map(|(&d, &c)| (c as f64 / SAMPLER_DRAWS as f64 - (d as f64 + delta.value()) / total).abs())
                .sum::<f64>()
                / 2.0
        });
        let worst = tvs.iter().copied().fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("empirical law delta={ds}"),
            worst,
            0.005,
            format!("{} states, {SAMPLER_DRAWS} draws each, worst total variation", picked.len()),
        ));
    }

    // Rejection cost on grown graphs.
    for (v, m, d) in [(Variant::C, 2, "-1"), (Variant::B, 1, "-1/2"), (Variant::C, 1, "-9/10")] {
        let p = params(v, m, d)?;
        let g = generate(p, 100_000, opts.seed)?;
        let s = AttachmentSampler::from_degrees(p.delta, g.degrees());
        let mut rng = replicate_rng(opts.seed, 0x7472);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..SAMPLER_DRAWS {
            let x = s.sample_counting(&mut rng).1 as f64;
            sum += x;
            sum2 += x * x;
        }
        let n = SAMPLER_DRAWS as f64;
        let mean = sum / n;
        let se = ((sum2 / n - mean * mean) * n / (n - 1.0)).sqrt() / n.sqrt();
        let dv = p.delta.value();
        let bound = 2.0 * m as f64 / (2.0 * m as f64 + dv);
        checks.push(Check::at_most(
            format!("rejection trials {p}"),
            mean,
            bound + 3.0 * se,
            format!("bound 2m/(2m+delta) = {bound:.6}, standard error {se:.2e}"),
        ));
    }
    Ok(checks)
}

fn hash_state(deg: &[u64]) -> u64 {
    deg.iter().fold(0u64, |h, &d| h * 7 + d)
}
