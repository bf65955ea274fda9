//! Graph distances, diameter, typical distances, components and degree counts.
//!
//! Distances use the simple undirected adjacency: self-loops are ignored and
//! parallel edges count once. The diameter is the largest finite distance.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Adjacency, PAGraph};
use crate::growth::replicate_rng;
use crate::params::Variant;

pub const UNREACHABLE: u32 = u32::MAX;

/// Default vertex budget for the all-sources exact diameter.
pub const DEFAULT_MAX_EXACT_VERTICES: usize = 1 << 15;

/// Reusable BFS workspace.
#[derive(Clone, Debug)]
pub struct Bfs {
    dist: Vec<u32>,
    queue: Vec<u32>,
}

/// Summary of one BFS sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub eccentricity: u32,
    pub reached: usize,
    /// A vertex at maximal distance (0-based), the smallest such id.
    pub farthest: u32,
}

impl Bfs {
    pub fn new(n: usize) -> Bfs {
        Bfs {
            dist: vec![UNREACHABLE; n],
            queue: Vec::with_capacity(n),
        }
    }

    fn reset(&mut self) {
        for &v in &self.queue {
            self.dist[v as usize] = UNREACHABLE;
        }
        self.queue.clear();
    }

    /// Full BFS from 0-based `src`; distances stay readable until the next run.
    pub fn run(&mut self, adj: &Adjacency, src: u32) -> Sweep {
        self.reset();
        self.dist[src as usize] = 0;
        self.queue.push(src);
        let mut head = 0;
        let mut farthest = src;
        let mut ecc = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let du = self.dist[u as usize];
            if du > ecc || (du == ecc && u < farthest) {
                ecc = du;
                farthest = u;
            }
            for &w in adj.neighbors(u) {
                if self.dist[w as usize] == UNREACHABLE {
                    self.dist[w as usize] = du + 1;
                    self.queue.push(w);
                }
            }
        }
        Sweep {
            eccentricity: ecc,
            reached: self.queue.len(),
            farthest,
        }
    }

    /// Distance between two 0-based vertices, stopping as soon as `dst` is reached.
    pub fn distance(&mut self, adj: &Adjacency, src: u32, dst: u32) -> Option<u32> {
        self.reset();
        self.dist[src as usize] = 0;
        self.queue.push(src);
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let du = self.dist[u as usize];
            if u == dst {
                return Some(du);
            }
            for &w in adj.neighbors(u) {
                if self.dist[w as usize] == UNREACHABLE {
                    self.dist[w as usize] = du + 1;
                    self.queue.push(w);
                }
            }
        }
        None
    }

    /// Distances of the last run, 0-based.
    pub fn distances(&self) -> &[u32] {
        &self.dist
    }

    /// Vertices reached by the last run, in BFS order.
    pub fn order(&self) -> &[u32] {
        &self.queue
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceReport {
    /// 1-based source.
    pub source: u32,
    /// Distances indexed 0-based; [`UNREACHABLE`] marks other components.
    pub dist: Vec<u32>,
    pub eccentricity: u32,
    pub reached: usize,
}

impl DistanceReport {
    /// Distance to 1-based vertex `v`, `None` if unreachable.
    pub fn distance(&self, v: u32) -> Option<u32> {
        match self.dist.get(v as usize - 1) {
            Some(&d) if d != UNREACHABLE => Some(d),
            _ => None,
        }
    }

    pub fn unreachable(&self) -> usize {
        self.dist.len() - self.reached
    }
}

/// Exact distances from 1-based `src`.
pub fn bfs(g: &PAGraph, src: u32) -> Result<DistanceReport> {
    if src == 0 || src as u64 > g.t() {
        return Err(Error::OutOfRange(format!("source {src} outside 1..={}", g.t())));
    }
    let adj = g.adjacency();
    let mut b = Bfs::new(adj.vertex_count());
    let s = b.run(adj, src - 1);
    Ok(DistanceReport {
        source: src,
        dist: b.dist,
        eccentricity: s.eccentricity,
        reached: s.reached,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiameterMethod {
    Exact,
    Bounds,
}

impl fmt::Display for DiameterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiameterMethod::Exact => "exact",
            DiameterMethod::Bounds => "bounds",
        })
    }
}

impl FromStr for DiameterMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DiameterMethod::Exact),
            "bounds" => Ok(DiameterMethod::Bounds),
            _ => Err(Error::InvalidParams(format!("unknown diameter method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DiameterOptions {
    pub method: DiameterMethod,
    /// Exact method refuses larger graphs unless `force` is set.
    pub max_exact_vertices: usize,
    pub force: bool,
    /// BFS budget for the bounds method; `None` runs until the bracket closes.
    pub max_bfs: Option<usize>,
    pub execution: Execution,
}

impl Default for DiameterOptions {
    fn default() -> Self {
        DiameterOptions {
            method: DiameterMethod::Bounds,
            max_exact_vertices: DEFAULT_MAX_EXACT_VERTICES,
            force: false,
            max_bfs: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiameterResult {
    pub lower: u32,
    pub upper: u32,
    pub method: DiameterMethod,
    /// 1-based pair at distance `lower`.
    pub witness: (u32, u32),
    pub bfs_runs: usize,
}

impl DiameterResult {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> u32 {
        self.upper - self.lower
    }
}

pub fn diameter(g: &PAGraph, opts: &DiameterOptions) -> Result<DiameterResult> {
    let adj = g.adjacency();
    match opts.method {
        DiameterMethod::Exact => {
            if adj.vertex_count() > opts.max_exact_vertices && !opts.force {
                return Err(Error::Budget(format!(
                    "exact diameter on {} vertices exceeds the budget of {} (use bounds or force)",
                    adj.vertex_count(),
                    opts.max_exact_vertices
                )));
            }
            Ok(exact_diameter(adj, opts.execution))
        }
        DiameterMethod::Bounds => Ok(bounded_diameter(adj, opts.max_bfs, opts.execution)),
    }
}

/// Best (eccentricity, source, farthest), ties to the smallest source.
type Best = (u32, u32, u32);

fn better(a: Best, b: Best) -> Best {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// All-sources BFS.
pub fn exact_diameter(adj: &Adjacency, ex: Execution) -> DiameterResult {
    let n = adj.vertex_count();
    let (_, best) = ex.fold_indices(
        n as u64,
        || (None::<Bfs>, (0u32, u32::MAX, u32::MAX)),
        |(bfs, best), v| {
            let mut bfs = bfs.unwrap_or_else(|| Bfs::new(n));
            let s = bfs.run(adj, v as u32);
            let best = better(best, (s.eccentricity, v as u32, s.farthest));
            (Some(bfs), best)
        },
        |(a, x), (_, y)| (a, better(x, y)),
    );
    let (d, s, f) = if n == 0 { (0, 0, 0) } else { best };
    DiameterResult {
        lower: d,
        upper: d,
        method: DiameterMethod::Exact,
        witness: (s + 1, f + 1),
        bfs_runs: n,
    }
}

/// Per-vertex eccentricities (within each vertex's component), 0-based.
pub fn eccentricities(adj: &Adjacency, ex: Execution) -> Vec<u32> {
    let n = adj.vertex_count();
    ex.fold_indices(
        n as u64,
        || (None::<Bfs>, Vec::new()),
        |(bfs, mut acc), v| {
            let mut bfs = bfs.unwrap_or_else(|| Bfs::new(n));
            acc.push((v as u32, bfs.run(adj, v as u32).eccentricity));
            (Some(bfs), acc)
        },
        |(a, mut x), (_, y)| {
            x.extend(y);
            (a, x)
        },
    )
    .1
    .into_iter()
    .fold(vec![0; n], |mut out, (v, e)| {
        out[v as usize] = e;
        out
    })
}

/// Fringe-based upper bounding, run per component.
///
/// From a high-degree root `r`, vertices at BFS level `i` are processed from
/// the deepest level down. Every vertex at level below `i` has eccentricity at
/// most `2(i-1)`, so once the largest eccentricity seen reaches that value the
/// diameter is known. A BFS budget may stop the process with an open bracket.
pub fn bounded_diameter(adj: &Adjacency, max_bfs: Option<usize>, ex: Execution) -> DiameterResult {
    let n = adj.vertex_count();
    let mut seen = vec![false; n];
    let mut bfs = Bfs::new(n);
    let mut runs = 0usize;
    let budget = max_bfs.unwrap_or(usize::MAX);
    let mut lower = 0u32;
    let mut upper = 0u32;
    let mut witness = (0u32, 0u32);
    for start in 0..n as u32 {
        if seen[start as usize] {
            continue;
        }
        // component discovery doubles as the first sweep
        let s0 = bfs.run(adj, start);
        runs += 1;
        for &v in bfs.order() {
            seen[v as usize] = true;
        }
        if s0.reached == 1 {
            if lower == 0 && upper == 0 {
                witness = (start, start);
            }
            continue;
        }
        if s0.reached == 2 {
            if lower < 1 {
                lower = 1;
                witness = (start, s0.farthest);
            }
            upper = upper.max(1);
            continue;
        }
        let root = *bfs
            .order()
            .iter()
            .max_by_key(|&&v| (adj.degree(v), std::cmp::Reverse(v)))
            .expect("non-empty component");
        // double sweep from the far end of the first sweep
        let a = s0.farthest;
        let sa = bfs.run(adj, a);
        runs += 1;
        let mut lb = sa.eccentricity.max(s0.eccentricity);
        let mut wit = if sa.eccentricity >= s0.eccentricity {
            (a, sa.farthest)
        } else {
            (start, s0.farthest)
        };
        let sr = bfs.run(adj, root);
        runs += 1;
        if sr.eccentricity > lb {
            lb = sr.eccentricity;
            wit = (root, sr.farthest);
        }
        let mut ub = 2 * sr.eccentricity;
        // level sets from the root
        let mut levels: Vec<Vec<u32>> = vec![Vec::new(); sr.eccentricity as usize + 1];
        for &v in bfs.order() {
            levels[bfs.distances()[v as usize] as usize].push(v);
        }
        let mut i = sr.eccentricity as usize;
        while lb < ub && i >= 1 && runs < budget {
            let fringe = &levels[i];
            let take = fringe.len().min(budget - runs);
            let results = ex.map(&fringe[..take], |&v| {
                let mut b = Bfs::new(n);
                let s = b.run(adj, v);
                (s.eccentricity, v, s.farthest)
            });
            runs += take;
            for (e, v, f) in results {
                if e > lb {
                    lb = e;
                    wit = (v, f);
                }
            }
            if take < fringe.len() {
                break;
            }
            let cap = 2 * (i as u32 - 1);
            ub = ub.min(lb.max(cap));
            i -= 1;
        }
        ub = ub.max(lb);
        if lb > lower {
            lower = lb;
            witness = wit;
        }
        upper = upper.max(ub);
    }
    DiameterResult {
        lower,
        upper: upper.max(lower),
        method: DiameterMethod::Bounds,
        witness: (witness.0 + 1, witness.1 + 1),
        bfs_runs: runs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypicalDistance {
    /// Distances of the sampled connected pairs, in sampling order.
    pub samples: Vec<u32>,
    /// 1-based sampled pairs, including disconnected ones.
    #[serde(skip)]
    pub pairs: Vec<(u32, u32, Option<u32>)>,
    pub disconnected: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<u32>,
}

/// Distances between `n_pairs` independent uniform vertex pairs.
pub fn typical_distance(g: &PAGraph, n_pairs: usize, seed: u64, ex: Execution) -> Result<TypicalDistance> {
    if n_pairs == 0 {
        return Err(Error::InvalidParams("n_pairs must be at least 1".into()));
    }
    let n = g.t();
    let mut rng = replicate_rng(seed, 0x7970_6963);
    let draws: Vec<(u32, u32)> = (0..n_pairs)
        .map(|_| (rng.random_range(0..n) as u32, rng.random_range(0..n) as u32))
        .collect();
    let adj = g.adjacency();
    let dists = ex.map(&draws, |&(u, v)| Bfs::new(n as usize).distance(adj, u, v));
    let pairs: Vec<(u32, u32, Option<u32>)> = draws
        .iter()
        .zip(&dists)
        .map(|(&(u, v), &d)| (u + 1, v + 1, d))
        .collect();
    let samples: Vec<u32> = dists.iter().flatten().copied().collect();
    let disconnected = n_pairs - samples.len();
    let (mean, median, max) = if samples.is_empty() {
        (None, None, None)
    } else {
        let mut sorted = samples.clone();
        sorted.sort_unstable();
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2] as f64
        } else {
            (sorted[k / 2 - 1] + sorted[k / 2]) as f64 / 2.0
        };
        let mean = samples.iter().map(|&d| d as f64).sum::<f64>() / k as f64;
        (Some(mean), Some(median), sorted.last().copied())
    };
    Ok(TypicalDistance {
        samples,
        pairs,
        disconnected,
        mean,
        median,
        max,
    })
}

/// Writes `pair,u,v,distance` rows; disconnected pairs get an empty distance.
pub fn write_distance_samples_csv<W: Write>(td: &TypicalDistance, w: &mut W) -> Result<()> {
    writeln!(w, "pair,u,v,distance")?;
    for (k, (u, v, d)) in td.pairs.iter().enumerate() {
        match d {
            Some(d) => writeln!(w, "{},{u},{v},{d}", k + 1)?,
            None => writeln!(w, "{},{u},{v},", k + 1)?,
        }
    }
    Ok(())
}

/// Writes `vertex,eccentricity` rows (1-based vertices).
pub fn write_eccentricity_csv<W: Write>(ecc: &[u32], w: &mut W) -> Result<()> {
    writeln!(w, "vertex,eccentricity")?;
    for (v, e) in ecc.iter().enumerate() {
        writeln!(w, "{},{e}", v + 1)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    /// Component id per vertex (0-based vertices); ids follow the smallest member.
    pub labels: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Connected components. Models (b) and (c) always give a single component.
pub fn components(g: &PAGraph) -> Components {
    let adj = g.adjacency();
    let n = adj.vertex_count();
    let mut labels = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if labels[s] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        labels[s] = id;
        stack.push(s as u32);
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &w in adj.neighbors(u) {
                if labels[w as usize] == u32::MAX {
                    labels[w as usize] = id;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    debug_assert!(g.params().variant == Variant::A || sizes.len() == 1);
    Components { labels, sizes }
}

/// `1 + #{v >= 2 : g(v, 1) = v}` for model (a) with m = 1.
pub fn self_loop_component_count(g: &PAGraph) -> Result<usize> {
    let p = g.params();
    if p.variant != Variant::A || p.m != 1 {
        return Err(Error::InvalidParams(
            "component count by self-loops needs model a with m=1".into(),
        ));
    }
    Ok(1 + g
        .targets_raw()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(v, &s)| v as u32 == s)
        .count())
}

/// `N_k(t)` for all k (index k).
pub fn degree_histogram(g: &PAGraph) -> Vec<u64> {
    g.degree_histogram()
}

/// `N_{>=l}(t)`.
pub fn n_geq(g: &PAGraph, l: f64) -> u64 {
    g.degrees().iter().filter(|&&d| d as f64 >= l).count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphMeta;
    use crate::growth::generate;
    use crate::params::PAParams;

    fn b1(log: Vec<u32>) -> PAGraph {
        PAGraph::from_log(PAParams::new(Variant::B, 1, 0).unwrap(), log, GraphMeta::default()).unwrap()
    }

    #[test]
    fn forced_topology() {
        let g = b1(vec![1, 0, 0]);
        let r = bfs(&g, 3).unwrap();
        assert_eq!(r.distance(3), Some(0));
        assert_eq!(r.distance(2), Some(2));
        assert_eq!(r.eccentricity, 2);
        let d = diameter(&g, &DiameterOptions { method: DiameterMethod::Exact, ..Default::default() }).unwrap();
        assert_eq!((d.lower, d.upper), (2, 2));
    }

    #[test]
    fn star_has_diameter_two() {
        let g = b1(vec![1, 0, 0, 0, 0, 0, 0]);
        for method in [DiameterMethod::Exact, DiameterMethod::Bounds] {
            let d = diameter(&g, &DiameterOptions { method, ..Default::default() }).unwrap();
            assert_eq!((d.lower, d.upper), (2, 2));
            let (u, v) = d.witness;
            assert_eq!(bfs(&g, u).unwrap().distance(v), Some(2));
        }
    }

    #[test]
    fn bounds_bracket_exact() {
        for seed in 0..40 {
            for v in Variant::ALL {
                let m = 1 + (seed % 3) as u32;
                let g = generate(PAParams::new(v, m, -0.5).unwrap(), 60 + seed * 7, seed).unwrap();
                let ex = diameter(&g, &DiameterOptions { method: DiameterMethod::Exact, ..Default::default() }).unwrap();
                let bd = diameter(&g, &DiameterOptions::default()).unwrap();
                assert!(bd.lower <= ex.lower && ex.upper <= bd.upper, "{v} seed {seed}");
                assert_eq!(bd.lower, bd.upper);
                let lim = diameter(&g, &DiameterOptions { max_bfs: Some(4), ..Default::default() }).unwrap();
                assert!(lim.lower <= ex.lower && ex.lower <= lim.upper);
                assert_eq!(bfs(&g, lim.witness.0).unwrap().distance(lim.witness.1), Some(lim.lower));
            }
        }
    }

    #[test]
    fn exact_budget() {
        let g = generate(PAParams::new(Variant::B, 1, 0).unwrap(), 100, 1).unwrap();
        let opts = DiameterOptions { method: DiameterMethod::Exact, max_exact_vertices: 50, ..Default::default() };
        assert!(matches!(diameter(&g, &opts), Err(Error::Budget(_))));
        assert!(diameter(&g, &DiameterOptions { force: true, ..opts }).is_ok());
    }

    #[test]
    fn components_match_self_loops() {
        for seed in 0..20 {
            let g = generate(PAParams::new(Variant::A, 1, 0).unwrap(), 300, seed).unwrap();
            let c = components(&g);
            assert_eq!(c.count(), self_loop_component_count(&g).unwrap());
            assert_eq!(c.sizes.iter().sum::<usize>(), 300);
        }
        let b = generate(PAParams::new(Variant::B, 1, 0).unwrap(), 300, 1).unwrap();
        assert_eq!(components(&b).count(), 1);
        let a = PAGraph::from_log(PAParams::new(Variant::A, 1, 0).unwrap(), vec![0, 0, 1], GraphMeta::default()).unwrap();
        assert_eq!(components(&a).count(), 1);
    }

    #[test]
    fn typical_distance_contract() {
        let g = b1(vec![1, 0, 0]);
        assert!(typical_distance(&g, 0, 1, Execution::Sequential).is_err());
        let td = typical_distance(&g, 50, 1, Execution::Sequential).unwrap();
        assert!(td.samples.iter().all(|&d| d <= 2));
        assert_eq!(td, typical_distance(&g, 50, 1, Execution::Parallel).unwrap());
    }

    #[test]
    fn degree_counts() {
        let g = generate(PAParams::new(Variant::C, 2, 0).unwrap(), 1000, 4).unwrap();
        let h = degree_histogram(&g);
        assert_eq!(h.iter().sum::<u64>(), 1000);
        assert_eq!(h.iter().enumerate().map(|(k, &c)| k as u64 * c).sum::<u64>(), 4000);
        assert_eq!(n_geq(&g, 2.0), 1000);
    }
}
