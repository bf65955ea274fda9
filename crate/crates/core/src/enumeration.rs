//! Exhaustive enumeration of the growth process for tiny horizons.
//!
//! Every random edge of vertex `v` can land on any vertex the growth rule
//! allows, so the outcome set is a product of target ranges. Each outcome's
//! probability is obtained by replaying the rule on it. With `delta = p/q`
//! rational, all weights `q D_i + p` are integers and the total weight at each
//! step is the same for every history, so probabilities are integer numerators
//! over one common denominator and every query is exact.
//!
//! Models (a) and (b) with m > 1 are enumerated on the m = 1 process with
//! `delta/m` up to time `mT`; outcomes are then collapsed and merged.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{allows_self_loops, degrees_from_log, initial_targets, GraphMeta, PAGraph};
use crate::params::{Delta, PAParams, Variant};
use crate::theory::CompensatedSum;

/// Default cap on the number of enumerated outcomes.
pub const DEFAULT_OUTCOME_BUDGET: u64 = 10_000_000;

/// Slack used when probabilities are doubles.
pub const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Approx(f64),
}

impl Probability {
    pub fn value(&self) -> f64 {
        match self {
            Probability::Exact(r) => ratio_to_f64(r),
            Probability::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Approx(_) => None,
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact(r) => write!(f, "{r}"),
            Probability::Approx(x) => write!(f, "{x:e}"),
        }
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through logs for huge numerators/denominators
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// The event `g(t, j) = s`, all 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Event {
    pub t: u32,
    pub j: u32,
    pub s: u32,
}

impl Event {
    pub fn new(t: u32, j: u32, s: u32) -> Event {
        Event { t, j, s }
    }
}

#[derive(Clone, Debug)]
enum Weights {
    /// Numerators over a common denominator.
    Exact { num: Vec<BigInt>, den: BigInt },
    Approx(Vec<f64>),
}

/// Complete outcome table of the process up to horizon `T`.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    params: PAParams,
    horizon: u32,
    stride: usize,
    /// Flattened 0-based event logs, `stride = m T` entries each.
    logs: Vec<u32>,
    weights: Weights,
}

/// Number of outcomes of the (uncollapsed) process up to `horizon`.
pub fn outcome_count(p: &PAParams, horizon: u32) -> u128 {
    let single = if p.variant == Variant::C { *p } else { p.single_edge_process() };
    let steps_to = if p.variant == Variant::C { horizon as u64 } else { horizon as u64 * p.m as u64 };
    let mut n: u128 = 1;
    for v in (single.initial_time() + 1)..=steps_to {
        let choices = if single.variant == Variant::A { v } else { v - 1 } as u128;
        n = n.saturating_mul(choices.saturating_pow(single.m));
    }
    n
}

pub fn enumerate(params: PAParams, horizon: u32) -> Result<ExactDistribution> {
    enumerate_with_budget(params, horizon, DEFAULT_OUTCOME_BUDGET)
}

pub fn enumerate_with_budget(params: PAParams, horizon: u32, budget: u64) -> Result<ExactDistribution> {
    let params = PAParams::new(params.variant, params.m, params.delta)?;
    if (horizon as u64) < params.initial_time().max(if params.variant == Variant::A { 1 } else { 2 }) {
        return Err(Error::InvalidParams(format!("horizon {horizon} precedes the initial graph")));
    }
    let count = outcome_count(&params, horizon);
    if count > budget as u128 {
        return Err(Error::Budget(format!(
            "{count} outcomes exceed the enumeration budget of {budget}"
        )));
    }
    let collapsed = params.variant != Variant::C && params.m > 1;
    let single = if collapsed { params.single_edge_process() } else { params };
    let steps_to = if collapsed { horizon * params.m } else { horizon };
    let raw = enumerate_single(&single, steps_to, count as usize);
    if !collapsed {
        return Ok(ExactDistribution {
            params,
            horizon,
            stride: params.m as usize * horizon as usize,
            logs: raw.0,
            weights: raw.1,
        });
    }
    // collapse and merge identical logs
    let m = params.m;
    let stride = steps_to as usize;
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut logs = Vec::new();
    let mut acc_exact: Vec<BigInt> = Vec::new();
    let mut acc_approx: Vec<f64> = Vec::new();
    for (k, chunk) in raw.0.chunks_exact(stride).enumerate() {
        let key: Vec<u32> = chunk.iter().map(|&s| s / m).collect();
        let next = index.len();
        let slot = *index.entry(key).or_insert_with_key(|key| {
            logs.extend_from_slice(key);
            acc_exact.push(BigInt::zero());
            acc_approx.push(0.0);
            next
        });
        match &raw.1 {
            Weights::Exact { num, .. } => acc_exact[slot] += &num[k],
            Weights::Approx(p) => acc_approx[slot] += p[k],
        }
    }
    let weights = match raw.1 {
        Weights::Exact { den, .. } => Weights::Exact { num: acc_exact, den },
        Weights::Approx(_) => Weights::Approx(acc_approx),
    };
    Ok(ExactDistribution {
        params,
        horizon,
        stride,
        logs,
        weights,
    })
}

/// Enumerates an m = 1 (models a, b) or model-(c) process.
fn enumerate_single(p: &PAParams, horizon: u32, count: usize) -> (Vec<u32>, Weights) {
    let m = p.m as usize;
    let init = initial_targets(p);
    let t0 = p.initial_time() as u32;
    let stride = m * horizon as usize;
    // target range (exclusive upper bound) for every random entry
    let mut radix = Vec::new();
    for v in (t0 + 1)..=horizon {
        for _ in 0..m {
            radix.push(if p.variant == Variant::A { v } else { v - 1 });
        }
    }
    let mut logs = Vec::with_capacity(count * stride);
    let mut digits = vec![0u32; radix.len()];
    loop {
        logs.extend_from_slice(&init);
        logs.extend_from_slice(&digits);
        // mixed-radix increment, last digit fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                let weights = replay_all(p, horizon, &logs);
                return (logs, weights);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radix[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Probability of every log by direct application of the growth rule.
fn replay_all(p: &PAParams, horizon: u32, logs: &[u32]) -> Weights {
    let m = p.m as usize;
    let stride = m * horizon as usize;
    let t0 = p.initial_time() as usize;
    match p.delta {
        Delta::Ratio { num, den } => {
            let (pn, q) = (num as i128, den as i128);
            // total weight before the draws of vertex v+1 (0-based v = current t)
            let mut denom = BigInt::from(1);
            for t in t0..horizon as usize {
                let edges = (m * t) as i128;
                let mut w = q * 2 * edges + pn * t as i128;
                if p.variant == Variant::A {
                    w += q + pn;
                }
                for _ in 0..m {
                    denom *= BigInt::from(w);
                }
            }
            let nums = logs
                .chunks_exact(stride)
                .map(|log| {
                    let mut deg = vec![0i128; horizon as usize];
                    for (e, &s) in log[..m * t0].iter().enumerate() {
                        deg[e / m] += 1;
                        deg[s as usize] += 1;
                    }
                    let mut numer = BigInt::from(1);
                    for t in t0..horizon as usize {
                        let targets = &log[m * t..m * (t + 1)];
                        if p.variant == Variant::A {
                            deg[t] += 1;
                        }
                        for &s in targets {
                            numer *= BigInt::from(q * deg[s as usize] + pn);
                        }
                        for &s in targets {
                            if p.variant != Variant::A {
                                deg[t] += 1;
                            }
                            deg[s as usize] += 1;
                        }
                    }
                    numer
                })
                .collect();
            Weights::Exact { num: nums, den: denom }
        }
        Delta::Real(d) => {
            let probs = logs
                .chunks_exact(stride)
                .map(|log| {
                    let mut deg = vec![0f64; horizon as usize];
                    for (e, &s) in log[..m * t0].iter().enumerate() {
                        deg[e / m] += 1.0;
                        deg[s as usize] += 1.0;
                    }
                    let mut prob = 1.0;
                    for t in t0..horizon as usize {
                        let mut w = (2 * m * t) as f64 + d * t as f64;
                        if p.variant == Variant::A {
                            w += 1.0 + d;
                            deg[t] += 1.0;
                        }
                        let targets = &log[m * t..m * (t + 1)];
                        for &s in targets {
                            prob *= (deg[s as usize] + d) / w;
                        }
                        for &s in targets {
                            if p.variant != Variant::A {
                                deg[t] += 1.0;
                            }
                            deg[s as usize] += 1.0;
                        }
                    }
                    prob
                })
                .collect();
            Weights::Approx(probs)
        }
    }
}

impl ExactDistribution {
    pub fn params(&self) -> &PAParams {
        &self.params
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.logs.len() / self.stride
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.weights, Weights::Exact { .. })
    }

    /// 0-based event log of outcome `k`.
    pub fn log(&self, k: usize) -> &[u32] {
        &self.logs[k * self.stride..(k + 1) * self.stride]
    }

    /// Outcome `k` as a graph.
    pub fn graph(&self, k: usize) -> PAGraph {
        PAGraph::from_log(self.params, self.log(k).to_vec(), GraphMeta::default()).expect("enumerated logs are valid")
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &[u32]> {
        self.logs.chunks_exact(self.stride)
    }

    pub fn probability(&self, k: usize) -> Probability {
        match &self.weights {
            Weights::Exact { num, den } => Probability::Exact(BigRational::new(num[k].clone(), den.clone())),
            Weights::Approx(p) => Probability::Approx(p[k]),
        }
    }

    pub fn prob_f64(&self, k: usize) -> f64 {
        match &self.weights {
            Weights::Exact { num, den } => ratio_to_f64(&BigRational::new(num[k].clone(), den.clone())),
            Weights::Approx(p) => p[k],
        }
    }

    /// Probability of the outcomes selected by `pred`.
    pub fn sum_where(&self, mut pred: impl FnMut(&[u32]) -> bool) -> Probability {
        match &self.weights {
            Weights::Exact { num, den } => {
                let mut acc = BigInt::zero();
                for (k, log) in self.outcomes().enumerate() {
                    if pred(log) {
                        acc += &num[k];
                    }
                }
                Probability::Exact(BigRational::new(acc, den.clone()))
            }
            Weights::Approx(p) => {
                let mut acc = CompensatedSum::default();
                for (k, log) in self.outcomes().enumerate() {
                    if pred(log) {
                        acc.add(p[k]);
                    }
                }
                Probability::Approx(acc.value())
            }
        }
    }

    pub fn total_mass(&self) -> Probability {
        self.sum_where(|_| true)
    }

    fn entry_index(&self, ev: &Event) -> Result<usize> {
        let m = self.params.m;
        if ev.t == 0 || ev.t > self.horizon || ev.j == 0 || ev.j > m || ev.s == 0 {
            return Err(Error::OutOfRange(format!(
                "event g({},{})={} outside horizon T={} with m={m}",
                ev.t, ev.j, ev.s, self.horizon
            )));
        }
        Ok(((ev.t - 1) * m + ev.j - 1) as usize)
    }

    /// Probability of a conjunction of events; the empty conjunction has probability one.
    pub fn event_prob(&self, events: &[Event]) -> Result<Probability> {
        let idx: Vec<(usize, u32)> = events
            .iter()
            .map(|ev| Ok((self.entry_index(ev)?, ev.s - 1)))
            .collect::<Result<_>>()?;
        Ok(self.sum_where(|log| idx.iter().all(|&(e, s)| log[e] == s)))
    }

    /// Law of a statistic of the outcome.
    pub fn law_of<K: Ord>(&self, mut f: impl FnMut(&[u32]) -> K) -> BTreeMap<K, Probability> {
        let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for (k, log) in self.outcomes().enumerate() {
            groups.entry(f(log)).or_default().push(k);
        }
        groups
            .into_iter()
            .map(|(key, ks)| {
                let p = match &self.weights {
                    Weights::Exact { num, den } => {
                        let s: BigInt = ks.iter().map(|&k| &num[k]).sum();
                        Probability::Exact(BigRational::new(s, den.clone()))
                    }
                    Weights::Approx(p) => Probability::Approx(ks.iter().map(|&k| p[k]).collect::<CompensatedSum>().value()),
                };
                (key, p)
            })
            .collect()
    }

    /// `E[f]` for an integer-valued statistic.
    pub fn expectation(&self, mut f: impl FnMut(&[u32]) -> i64) -> Probability {
        match &self.weights {
            Weights::Exact { num, den } => {
                let mut acc = BigInt::zero();
                for (k, log) in self.outcomes().enumerate() {
                    acc += &num[k] * BigInt::from(f(log));
                }
                Probability::Exact(BigRational::new(acc, den.clone()))
            }
            Weights::Approx(p) => Probability::Approx(
                self.outcomes()
                    .enumerate()
                    .map(|(k, log)| p[k] * f(log) as f64)
                    .collect::<CompensatedSum>()
                    .value(),
            ),
        }
    }

    /// Law of `g(t, j)` as probabilities for `s = 1..=t`.
    pub fn edge_marginal(&self, t: u32, j: u32) -> Result<Vec<Probability>> {
        let e = self.entry_index(&Event::new(t, j, 1))?;
        let law = self.law_of(|log| log[e]);
        let max = law.keys().copied().max().unwrap_or(0).max(t - 1);
        Ok((0..=max)
            .map(|s| law.get(&s).cloned().unwrap_or_else(|| self.zero()))
            .collect())
    }

    fn zero(&self) -> Probability {
        if self.is_exact() {
            Probability::Exact(BigRational::zero())
        } else {
            Probability::Approx(0.0)
        }
    }

    /// Degrees `D_i(time)` of outcome `log`, 0-based.
    pub fn degrees_at(&self, log: &[u32], time: u32) -> Vec<u64> {
        let m = self.params.m as usize;
        let time = time.max(self.params.initial_time() as u32) as usize;
        degrees_from_log(m, time, &log[..m * time])
    }

    /// Exact law of `D_i(time)` (1-based `i`, `i <= time <= T`).
    pub fn exact_degree_pmf(&self, i: u32, time: u32) -> Result<BTreeMap<u64, Probability>> {
        if i == 0 || i > time || time > self.horizon {
            return Err(Error::OutOfRange(format!(
                "need 1 <= i <= time <= T, got i={i}, time={time}, T={}",
                self.horizon
            )));
        }
        Ok(self.law_of(|log| self.degrees_at(log, time)[i as usize - 1]))
    }

    /// Exact law of the diameter (largest finite distance) at the horizon,
    /// computed by Floyd-Warshall on every outcome.
    pub fn exact_diameter_law(&self) -> BTreeMap<u32, Probability> {
        let n = self.horizon as usize;
        let m = self.params.m as usize;
        self.law_of(|log| {
            const INF: u32 = u32::MAX / 4;
            let mut d = vec![INF; n * n];
            for v in 0..n {
                d[v * n + v] = 0;
            }
            for (e, &s) in log.iter().enumerate() {
                let (a, b) = (e / m, s as usize);
                if a != b {
                    d[a * n + b] = 1;
                    d[b * n + a] = 1;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i * n + k] + d[k * n + j];
                        if via < d[i * n + j] {
                            d[i * n + j] = via;
                        }
                    }
                }
            }
            d.into_iter().filter(|&x| x < INF).max().unwrap_or(0)
        })
    }

    /// Outcome table as JSON: 1-based logs with exact and decimal probabilities.
    pub fn to_json(&self) -> serde_json::Value {
        let outcomes: Vec<_> = (0..self.len())
            .map(|k| {
                let p = self.probability(k);
                json!({
                    "log": self.log(k).iter().map(|s| s + 1).collect::<Vec<_>>(),
                    "probability": p.to_string(),
                    "value": p.value(),
                })
            })
            .collect();
        json!({
            "model": self.params.variant.as_str(),
            "m": self.params.m,
            "delta": self.params.delta.to_string(),
            "horizon": self.horizon,
            "exact": self.is_exact(),
            "outcomes": outcomes,
        })
    }

    /// Random entries: `(entry index, t, j)` for every non-initial edge.
    fn random_entries(&self) -> Vec<(usize, u32, u32)> {
        let m = self.params.m as usize;
        (self.params.initial_entries()..self.stride)
            .map(|e| (e, (e / m) as u32 + 1, (e % m) as u32 + 1))
            .collect()
    }

    /// `a = m/(2m+delta)`.
    fn a(&self) -> f64 {
        self.params.a()
    }
}

/// Indicator of a set of outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

/// Scalar probability used by the verifiers: exact numerators or doubles.
#[derive(Clone, Debug)]
enum Mass {
    Exact(BigInt),
    Approx(f64),
}

impl ExactDistribution {
    fn bits_for(&self, entry: usize, s: u32) -> Bits {
        let mut b = vec![0u64; self.len().div_ceil(64)];
        for (k, log) in self.outcomes().enumerate() {
            if log[entry] == s {
                b[k / 64] |= 1 << (k % 64);
            }
        }
        Bits(b)
    }

    fn mass(&self, bits: &Bits) -> Mass {
        match &self.weights {
            Weights::Exact { num, .. } => Mass::Exact(bits.ones().map(|k| &num[k]).sum()),
            Weights::Approx(p) => Mass::Approx(bits.ones().map(|k| p[k]).collect::<CompensatedSum>().value()),
        }
    }

    fn mass_value(&self, m: &Mass) -> f64 {
        match (m, &self.weights) {
            (Mass::Exact(n), Weights::Exact { den, .. }) => ratio_to_f64(&BigRational::new(n.clone(), den.clone())),
            (Mass::Approx(x), _) => *x,
            _ => unreachable!("mass kind follows the table"),
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct NegCorrReport {
    pub families: u64,
    pub violations: u64,
    /// Largest `P(cap E) / prod P(E)` over families with positive product.
    pub tightest_ratio: f64,
    /// The same over families of at least two groups.
    pub tightest_ratio_multi: f64,
    /// Largest `P(cap E) - prod P(E)` (negative when all inequalities are strict).
    pub worst_margin: f64,
    pub worst_family: Vec<Event>,
    pub exact: bool,
}

/// A target with its eligible events, their joint outcome bits and mass.
type Group = (u32, Vec<(usize, u32, u32)>, Bits, Mass);

/// Checks `P(E_{s_1} ∩ ... ∩ E_{s_k}) <= prod_i P(E_{s_i})` for all families of
/// at most `max_groups` distinct targets, where each `E_s` is a conjunction of
/// at most `max_events` events `g(t, j) = s` on distinct random edges.
pub fn verify_negative_correlation(dist: &ExactDistribution, max_groups: usize, max_events: usize) -> NegCorrReport {
    let entries = dist.random_entries();
    let loops = allows_self_loops(&dist.params);
    // groups E_s: (events, bits, mass)
    let mut groups: Vec<Group> = Vec::new();
    for s in 1..=dist.horizon {
        let eligible: Vec<(usize, u32, u32)> = entries
            .iter()
            .copied()
            .filter(|&(_, t, _)| s < t || (loops && s == t))
            .collect();
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        let mut pick = |sub: Vec<usize>| subsets.push(sub);
        for size in 1..=max_events.min(eligible.len()) {
            for_each_combination(eligible.len(), size, &mut pick);
        }
        for sub in subsets {
            let evs: Vec<(usize, u32, u32)> = sub.iter().map(|&x| eligible[x]).collect();
            let mut bits = dist.bits_for(evs[0].0, s - 1);
            for &(e, _, _) in &evs[1..] {
                bits = bits.and(&dist.bits_for(e, s - 1));
            }
            let mass = dist.mass(&bits);
            groups.push((s, evs, bits, mass));
        }
    }
    let mut report = NegCorrReport {
        families: 0,
        violations: 0,
        tightest_ratio: 0.0,
        tightest_ratio_multi: 0.0,
        worst_margin: f64::NEG_INFINITY,
        worst_family: Vec::new(),
        exact: dist.is_exact(),
    };
    let den = match &dist.weights {
        Weights::Exact { den, .. } => Some(den.clone()),
        Weights::Approx(_) => None,
    };
    let mut chosen: Vec<usize> = Vec::new();
    check_families(dist, &groups, 0, max_groups, &mut chosen, None, &den, &mut report);
    report
}

#[allow(clippy::too_many_arguments)]
fn check_families(
    dist: &ExactDistribution,
    groups: &[Group],
    start: usize,
    max_groups: usize,
    chosen: &mut Vec<usize>,
    joint: Option<&Bits>,
    den: &Option<BigInt>,
    report: &mut NegCorrReport,
) {
    for g in start..groups.len() {
        let (s, evs, bits, _) = &groups[g];
        // distinct targets, distinct edges
        if chosen.iter().any(|&c| groups[c].0 == *s) {
            continue;
        }
        if chosen
            .iter()
            .any(|&c| groups[c].1.iter().any(|a| evs.iter().any(|b| a.0 == b.0)))
        {
            continue;
        }
        let inter = match joint {
            Some(j) => j.and(bits),
            None => bits.clone(),
        };
        chosen.push(g);
        evaluate_family(dist, groups, chosen, &inter, den, report);
        if chosen.len() < max_groups {
            check_families(dist, groups, g + 1, max_groups, chosen, Some(&inter), den, report);
        }
        chosen.pop();
    }
}

fn evaluate_family(
    dist: &ExactDistribution,
    groups: &[Group],
    chosen: &[usize],
    inter: &Bits,
    den: &Option<BigInt>,
    report: &mut NegCorrReport,
) {
    report.families += 1;
    let k = chosen.len();
    let joint = if inter.is_empty() { None } else { Some(dist.mass(inter)) };
    let (violated, joint_v, prod_v) = match den {
        Some(den) => {
            let jn = match &joint {
                Some(Mass::Exact(n)) => n.clone(),
                _ => BigInt::zero(),
            };
            let mut prod = BigInt::from(1);
            for &c in chosen {
                if let Mass::Exact(n) = &groups[c].3 {
                    prod *= n;
                }
            }
            let lhs = &jn * den.pow(k as u32 - 1);
            let joint_v = ratio_to_f64(&BigRational::new(jn, den.clone()));
            let prod_v = ratio_to_f64(&BigRational::new(prod.clone(), den.pow(k as u32)));
            (lhs > prod, joint_v, prod_v)
        }
        None => {
            let joint_v = joint.as_ref().map_or(0.0, |m| dist.mass_value(m));
            let prod_v: f64 = chosen.iter().map(|&c| dist.mass_value(&groups[c].3)).product();
            (joint_v - prod_v > SLACK, joint_v, prod_v)
        }
    };
    if violated {
        report.violations += 1;
    }
    if prod_v > 0.0 {
        let ratio = joint_v / prod_v;
        report.tightest_ratio = report.tightest_ratio.max(ratio);
        if k >= 2 {
            report.tightest_ratio_multi = report.tightest_ratio_multi.max(ratio);
        }
    }
    let margin = joint_v - prod_v;
    if margin > report.worst_margin && k >= 2 {
        report.worst_margin = margin;
        report.worst_family = chosen
            .iter()
            .flat_map(|&c| groups[c].1.iter().map(move |&(_, t, j)| Event::new(t, j, groups[c].0)))
            .collect();
    }
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(Vec<usize>)) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(Vec<usize>)) {
        if cur.len() == k {
            f(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConnectionReport {
    pub horizon: u32,
    /// `max P(g(t,j)=s) t^{1-a} s^a` over all random edges up to the horizon.
    pub m1: f64,
    pub m1_argmax: Event,
    /// The same maximum restricted to the edges of the newest vertex `T`.
    pub m1_last: f64,
    /// `max P(g(t1,j1)=s, g(t2,j2)=s) (t1 t2)^{1-a} s^{2a}` over distinct random edges.
    pub m2: f64,
    pub m2_argmax: (Event, Event),
}

/// Empirical constants of the one- and two-edge connection bounds.
pub fn verify_connection_bounds(dist: &ExactDistribution) -> ConnectionReport {
    let a = dist.a();
    let entries = dist.random_entries();
    let loops = allows_self_loops(&dist.params);
    let admissible = |s: u32, t: u32| s < t || (loops && s == t);
    let mut m1 = 0.0;
    let mut m1_last = 0.0;
    let mut m1_arg = Event::new(0, 0, 0);
    let mut marg: HashMap<(usize, u32), Bits> = HashMap::new();
    for &(e, t, j) in &entries {
        for s in 1..=t {
            if !admissible(s, t) {
                continue;
            }
            let bits = dist.bits_for(e, s - 1);
            let p = dist.mass_value(&dist.mass(&bits));
            let r = p * (t as f64).powf(1.0 - a) * (s as f64).powf(a);
            if r > m1 {
                m1 = r;
                m1_arg = Event::new(t, j, s);
            }
            if t == dist.horizon && r > m1_last {
                m1_last = r;
            }
            marg.insert((e, s), bits);
        }
    }
    let mut m2 = 0.0;
    let mut m2_arg = (Event::new(0, 0, 0), Event::new(0, 0, 0));
    for (x, &(e1, t1, j1)) in entries.iter().enumerate() {
        for &(e2, t2, j2) in &entries[x + 1..] {
            for s in 1..=t1.min(t2) {
                if !admissible(s, t1) || !admissible(s, t2) {
                    continue;
                }
                let both = marg[&(e1, s)].and(&marg[&(e2, s)]);
                let p = dist.mass_value(&dist.mass(&both));
                let r = p * ((t1 * t2) as f64).powf(1.0 - a) * (s as f64).powf(2.0 * a);
                if r > m2 {
                    m2 = r;
                    m2_arg = (Event::new(t1, j1, s), Event::new(t2, j2, s));
                }
            }
        }
    }
    ConnectionReport {
        horizon: dist.horizon,
        m1,
        m1_argmax: m1_arg,
        m1_last,
        m2,
        m2_argmax: m2_arg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: Variant, m: u32, d: &str, t: u32) -> ExactDistribution {
        enumerate(PAParams::new(v, m, Delta::parse(d).unwrap()).unwrap(), t).unwrap()
    }

    fn q(n: i64, d: i64) -> Probability {
        Probability::Exact(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn b_examples() {
        let d3 = dist(Variant::B, 1, "0", 3);
        assert_eq!(d3.len(), 2);
        assert_eq!(d3.probability(0), q(1, 2));
        let d4 = dist(Variant::B, 1, "0", 4);
        assert_eq!(d4.event_prob(&[Event::new(4, 1, 1)]).unwrap(), q(5, 12));
        assert_eq!(d4.event_prob(&[Event::new(3, 1, 1), Event::new(4, 1, 2)]).unwrap(), q(1, 6));
        assert_eq!(d4.event_prob(&[]).unwrap(), q(1, 1));
        assert_eq!(d4.event_prob(&[Event::new(4, 1, 1), Event::new(4, 1, 2)]).unwrap(), q(0, 1));
    }

    #[test]
    fn a_degree_example() {
        let d = dist(Variant::A, 1, "0", 3);
        let pmf = d.exact_degree_pmf(2, 3).unwrap();
        assert_eq!(pmf[&1], q(8, 15));
        let d1 = dist(Variant::A, 1, "0", 2);
        assert_eq!(d1.event_prob(&[Event::new(2, 1, 2)]).unwrap(), q(1, 3));
    }

    #[test]
    fn masses_are_one() {
        for (v, m, d, t) in [
            (Variant::A, 1, "0", 6),
            (Variant::B, 1, "-1/2", 6),
            (Variant::C, 2, "-1", 5),
            (Variant::A, 2, "1", 3),
            (Variant::B, 2, "0", 3),
        ] {
            let dd = dist(v, m, d, t);
            assert_eq!(dd.total_mass(), q(1, 1), "{v} {m} {d}");
        }
        let real = enumerate(PAParams::new(Variant::B, 1, Delta::Real(0.3)).unwrap(), 5).unwrap();
        assert!((real.total_mass().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn b_and_c_coincide_at_m1() {
        let b = dist(Variant::B, 1, "1/3", 5);
        let c = dist(Variant::C, 1, "1/3", 5);
        for k in 0..b.len() {
            assert_eq!(b.log(k), c.log(k));
            assert_eq!(b.probability(k), c.probability(k));
        }
    }

    #[test]
    fn budget_guard() {
        let p = PAParams::new(Variant::B, 1, 0).unwrap();
        assert!(matches!(enumerate(p, 13), Err(Error::Budget(_))));
        assert_eq!(outcome_count(&p, 8), 5040);
    }

    #[test]
    fn single_group_is_equality() {
        let d = dist(Variant::B, 1, "0", 5);
        let r = verify_negative_correlation(&d, 1, 2);
        assert_eq!(r.violations, 0);
        assert!((r.tightest_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn connection_constant_example() {
        let d = dist(Variant::B, 1, "0", 3);
        let p = d.event_prob(&[Event::new(3, 1, 1)]).unwrap().value();
        assert!((p * 3f64.sqrt() - 0.866).abs() < 1e-3);
        let r = verify_connection_bounds(&d);
        assert!(r.m1 >= p * 3f64.sqrt());
    }

    #[test]
    fn diameter_law_sums_to_one() {
        let d = dist(Variant::C, 2, "0", 4);
        let law = d.exact_diameter_law();
        let total: f64 = law.values().map(Probability::value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(law.keys().all(|&k| k <= 3));
    }
}
