//! Core, layer sets, t-connectors, exploration trees and proper-tree counts.
//!
//! Exploration trees follow birth edges: every vertex contributes the targets
//! of its own m edges. An edge into a vertex already in the tree is a
//! collision. Self-loops are skipped without counting as collisions. Vertices
//! in the stop set are added to the tree but not expanded.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::PAGraph;
use crate::params::PAParams;
use crate::theory::{layer_thresholds, LayerThresholds};

#[derive(Clone, Debug, Serialize)]
pub struct CoreSpec {
    pub sigma: f64,
    /// `(ln t)^sigma`.
    pub threshold: f64,
    /// Members, 1-based and ascending.
    pub members: Vec<u32>,
    /// `sigma <= 1/(3-tau)` while `tau < 3`: below the range the theory uses.
    pub below_admissible: bool,
}

impl CoreSpec {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Whether every member is at most `bound`.
    pub fn within(&self, bound: u64) -> bool {
        self.members.last().is_none_or(|&v| v as u64 <= bound)
    }

    /// 0-based membership mask over `n` vertices.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.members {
            m[v as usize - 1] = true;
        }
        m
    }
}

/// Vertices with `D_i(t) >= (ln t)^sigma`.
pub fn core(g: &PAGraph, sigma: f64) -> Result<CoreSpec> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    let threshold = (g.t() as f64).ln().powf(sigma);
    let members = g
        .degrees()
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d as f64 >= threshold)
        .map(|(i, _)| i as u32 + 1)
        .collect();
    let tau = g.params().tau();
    Ok(CoreSpec {
        sigma,
        threshold,
        members,
        below_admissible: tau < 3.0 && sigma <= 1.0 / (3.0 - tau),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerHierarchy {
    pub thresholds: LayerThresholds,
    /// `|N_k| = #{i : D_i(t) >= u_k}` for `k = 1..`, from the recursion values.
    pub sizes: Vec<usize>,
    pub core_size: usize,
    /// `u_k` decreases in k, so `N_1 ⊆ N_2 ⊆ ...`. This needs `u_1` above the
    /// fixed point `(D ln t)^{1/(3-tau)}` of the recursion.
    pub nested: bool,
}

/// Layer sets for `k = 1..=max(k*, 1) + 1` (at most 25 layers).
pub fn layers(g: &PAGraph, sigma: f64, d: f64) -> Result<LayerHierarchy> {
    let tau = g.params().tau();
    let t = g.t() as f64;
    let probe = layer_thresholds(tau, t, d, 1)?;
    let k_max = (probe.k_star.max(1) + 1).min(25);
    let thresholds = layer_thresholds(tau, t, d, k_max)?;
    let mut sorted = g.degrees().to_vec();
    sorted.sort_unstable();
    let at_least = |u: f64| sorted.len() - sorted.partition_point(|&x| (x as f64) < u);
    let sizes = thresholds.recursion.iter().map(|&u| at_least(u)).collect();
    let nested = thresholds.recursion.windows(2).all(|w| w[1] <= w[0]);
    Ok(LayerHierarchy {
        nested,
        sizes,
        core_size: at_least(t.ln().powf(sigma)),
        thresholds,
    })
}

/// All `j` in `(t, 2t]` one of whose first two edges hits `i` and the other
/// hits `A`, where the graph has `2t` vertices. Ids are 1-based.
pub fn t_connectors(g: &PAGraph, i: u32, set: &[u32]) -> Result<Vec<u32>> {
    if g.m() < 2 {
        return Err(Error::InvalidParams("t-connectors need m >= 2".into()));
    }
    if !g.t().is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("graph time {} is not of the form 2t", g.t())));
    }
    let t = g.t() / 2;
    if i == 0 || i as u64 > t || set.iter().any(|&a| a == 0 || a as u64 > t) {
        return Err(Error::OutOfRange(format!("i and A must lie in [t] = [1, {t}]")));
    }
    if set.contains(&i) {
        return Err(Error::InvalidParams(format!("vertex {i} must not belong to A")));
    }
    let in_a: HashSet<u32> = set.iter().copied().collect();
    let mut out = Vec::new();
    for j in (t + 1)..=g.t() {
        let mut e = g.out_targets(j as u32);
        let (x, y) = (e.next().unwrap(), e.next().unwrap());
        if (x == i && in_a.contains(&y)) || (y == i && in_a.contains(&x)) {
            out.push(j as u32);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExplorationTree {
    pub root: u32,
    pub depth: u32,
    /// Vertices per level, 1-based; level 0 is the root.
    pub levels: Vec<Vec<u32>>,
    pub collisions: usize,
    /// `(from, to)` for every collision edge.
    pub collision_events: Vec<(u32, u32)>,
    /// Some tree vertex is in the stop set.
    pub hit_core: bool,
    /// Every vertex lies in `(t, 2t]` for a graph of `2t` vertices.
    pub all_in_upper_half: bool,
    /// Tree vertices receive in-edges only along tree edges.
    pub no_external_inedges: bool,
}

impl ExplorationTree {
    pub fn size(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_proper(&self) -> bool {
        self.collisions == 0 && self.all_in_upper_half && self.no_external_inedges
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.iter().flatten().copied()
    }
}

/// `m^{(k)} = 1 + m + ... + m^k`.
pub fn full_tree_size(m: u32, k: u32) -> u64 {
    (0..=k).map(|l| (m as u64).pow(l)).sum()
}

/// Depth-`k` tree of birth-edge targets from 1-based `root`. `stop` is a
/// 0-based membership mask.
pub fn exploration_tree(g: &PAGraph, root: u32, k: u32, stop: Option<&[bool]>) -> Result<ExplorationTree> {
    if root == 0 || root as u64 > g.t() {
        return Err(Error::OutOfRange(format!("root {root} outside 1..={}", g.t())));
    }
    let stopped = |v: u32| stop.is_some_and(|s| s[v as usize - 1]);
    let mut seen: HashSet<u32> = HashSet::new();
    seen.insert(root);
    let mut levels = vec![vec![root]];
    let mut events = Vec::new();
    let mut hit_core = stopped(root);
    for _ in 0..k {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            if stopped(v) {
                continue;
            }
            for s in g.out_targets(v) {
                if s == v {
                    continue;
                }
                if seen.insert(s) {
                    hit_core |= stopped(s);
                    next.push(s);
                } else {
                    events.push((v, s));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    let half = g.t() / 2;
    let all_in_upper_half = g.t().is_multiple_of(2) && levels.iter().flatten().all(|&v| v as u64 > half);
    let no_external_inedges = levels
        .iter()
        .enumerate()
        .all(|(l, lvl)| lvl.iter().all(|&v| g.in_count_raw(v - 1) == usize::from(l > 0)));
    Ok(ExplorationTree {
        root,
        depth: k,
        levels,
        collisions: events.len(),
        collision_events: events,
        hit_core,
        all_in_upper_half,
        no_external_inedges,
    })
}

/// Default exponent of the early-vertex set `[t^b]`: `(m+delta)/(2(3m+2delta))`.
pub fn default_early_exponent(p: &PAParams) -> f64 {
    let (m, d) = (p.m as f64, p.delta_f());
    0.5 * (m + d) / (3.0 * m + 2.0 * d)
}

/// Mask of `Core ∪ [t^b]`.
pub fn stop_mask(g: &PAGraph, core: &CoreSpec, b: f64) -> Vec<bool> {
    let n = g.t() as usize;
    let mut mask = core.mask(n);
    let early = ((g.t() as f64).powf(b).floor() as usize).min(n);
    for x in mask.iter_mut().take(early) {
        *x = true;
    }
    mask
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootRecord {
    pub root: u32,
    pub size: usize,
    pub collisions: usize,
    pub hit_core: bool,
    pub proper: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProperTreeCount {
    pub t: u64,
    pub k: u32,
    pub z: u64,
    pub roots: Vec<RootRecord>,
}

/// Number of roots in `(t, 2t]` whose k-exploration tree is proper, for a graph
/// of `2t` vertices.
pub fn count_proper_trees(g: &PAGraph, k: u32, stop: Option<&[bool]>, ex: Execution) -> Result<ProperTreeCount> {
    if g.m() < 2 {
        return Err(Error::InvalidParams("proper trees need m >= 2".into()));
    }
    if !g.t().is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("graph time {} is not of the form 2t", g.t())));
    }
    let t = g.t() / 2;
    let roots = ex.map_indices(t, |r| {
        let tree = exploration_tree(g, (t + 1 + r) as u32, k, stop).expect("root in range");
        RootRecord {
            root: tree.root,
            size: tree.size(),
            collisions: tree.collisions,
            hit_core: tree.hit_core,
            proper: tree.is_proper(),
        }
    });
    Ok(ProperTreeCount {
        t,
        k,
        z: roots.iter().filter(|r| r.proper).count() as u64,
        roots,
    })
}

/// Writes `root,size,collisions,hit_core,proper` rows.
pub fn write_roots_csv<W: Write>(c: &ProperTreeCount, w: &mut W) -> Result<()> {
    writeln!(w, "root,size,collisions,hit_core,proper")?;
    for r in &c.roots {
        writeln!(w, "{},{},{},{},{}", r.root, r.size, r.collisions, r.hit_core, r.proper)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphMeta;
    use crate::growth::generate;
    use crate::params::Variant;

    fn c2(log: Vec<u32>) -> PAGraph {
        PAGraph::from_log(PAParams::new(Variant::C, 2, 0).unwrap(), log, GraphMeta::default()).unwrap()
    }

    #[test]
    fn core_extremes() {
        let g = generate(PAParams::new(Variant::C, 2, 0).unwrap(), 1000, 1).unwrap();
        assert_eq!(core(&g, 0.01).unwrap().size(), 1000);
        assert_eq!(core(&g, 50.0).unwrap().size(), 0);
        let c = core(&g, 1.5).unwrap();
        let h = g.degree_histogram();
        let from_hist: u64 = h.iter().enumerate().filter(|&(k, _)| k as f64 >= c.threshold).map(|(_, &n)| n).sum();
        assert_eq!(c.size() as u64, from_hist);
    }

    #[test]
    fn trees_on_fixtures() {
        // 1,2 initial; 3 -> (1,2); 4 -> (3,3)
        let g = c2(vec![1, 1, 0, 0, 0, 1, 2, 2]);
        let t0 = exploration_tree(&g, 3, 0, None).unwrap();
        assert_eq!((t0.size(), t0.collisions), (1, 0));
        let t1 = exploration_tree(&g, 1, 3, None).unwrap();
        assert_eq!(t1.size(), 2);
        assert!(t1.collisions >= 1);
        let t4 = exploration_tree(&g, 4, 2, None).unwrap();
        assert_eq!(t4.levels, vec![vec![4], vec![3], vec![1, 2]]);
        assert_eq!(t4.collisions, 1);
        assert!(!t4.all_in_upper_half);
    }

    #[test]
    fn collision_free_tree_is_full() {
        for seed in 0..200 {
            let g = generate(PAParams::new(Variant::C, 2, 0).unwrap(), 400, seed).unwrap();
            let tree = exploration_tree(&g, 400, 2, None).unwrap();
            for (l, lvl) in tree.levels.iter().enumerate() {
                assert!(lvl.len() <= 2usize.pow(l as u32));
            }
            if tree.collisions == 0 {
                assert_eq!(tree.size() as u64, full_tree_size(2, 2));
            }
        }
    }

    #[test]
    fn zero_depth_proper_count() {
        let g = generate(PAParams::new(Variant::C, 2, 0).unwrap(), 200, 3).unwrap();
        let z = count_proper_trees(&g, 0, None, Execution::Sequential).unwrap().z;
        let direct = (101..=200u32).filter(|&i| g.in_neighbors(i).unwrap().is_empty()).count();
        assert_eq!(z as usize, direct);
        let par = count_proper_trees(&g, 1, None, Execution::Parallel).unwrap();
        let seq = count_proper_trees(&g, 1, None, Execution::Sequential).unwrap();
        assert_eq!(par.roots, seq.roots);
    }

    #[test]
    fn connectors() {
        // t = 2; 3 -> (1, 2); 4 -> (2, 2)
        let g = c2(vec![1, 1, 0, 0, 0, 1, 1, 1]);
        assert_eq!(t_connectors(&g, 1, &[2]).unwrap(), vec![3]);
        assert!(t_connectors(&g, 1, &[]).unwrap().is_empty());
        assert!(t_connectors(&g, 1, &[1]).is_err());
    }

    #[test]
    fn layer_sets_nest() {
        let g = generate(PAParams::new(Variant::C, 2, -1).unwrap(), 20_000, 2).unwrap();
        let l = layers(&g, 2.1, 1.0).unwrap();
        let u = &l.thresholds.recursion;
        for k in 1..u.len() {
            assert_eq!(u[k] <= u[k - 1], l.sizes[k] >= l.sizes[k - 1]);
        }
        assert!(!l.nested);
        assert!(layers(&generate(PAParams::new(Variant::C, 2, 1).unwrap(), 100, 1).unwrap(), 2.1, 1.0).is_err());
    }
}
