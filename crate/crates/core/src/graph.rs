//! Frozen preferential-attachment graphs.
//!
//! The event log is the single source of truth: entry `m(v-1)+j` holds
//! `g(v, j)`, the target of the `j`-th edge of vertex `v`. Degrees, the
//! in-neighbour index and the simple undirected adjacency are derived from it.
//!
//! Vertex ids in this module's public API are 1-based. The raw log accessor
//! [`PAGraph::targets_raw`] exposes 0-based ids as stored.
//!
//! The initial graph is recorded as ordinary log entries:
//!
//! | model            | fixed entries                                  |
//! |------------------|------------------------------------------------|
//! | a (any m)        | `g(1, j) = 1` (self-loops)                     |
//! | b, m = 1         | `g(1, 1) = 2`, `g(2, 1) = 1` (double edge)     |
//! | b, m > 1         | `g(1, j) = 1` (collapsed double edge)          |
//! | c                | `g(1, j) = 2`, `g(2, j) = 1` (2m parallel edges) |

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::{Delta, PAParams, Variant};

pub const FORMAT_VERSION: u32 = 1;
pub const RNG_NAME: &str = "chacha8";

/// Provenance recorded in the graph file header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMeta {
    pub seed: Option<u64>,
    pub rng: String,
}

impl Default for GraphMeta {
    fn default() -> Self {
        GraphMeta {
            seed: None,
            rng: RNG_NAME.to_string(),
        }
    }
}

/// Simple undirected adjacency in CSR form: self-loops dropped, parallel edges merged.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Adjacency {
    /// Builds from 0-based undirected edge pairs over `n` vertices.
    pub fn from_edges(n: usize, edges: impl Iterator<Item = (u32, u32)> + Clone) -> Adjacency {
        let mut counts = vec![0usize; n + 1];
        for (a, b) in edges.clone() {
            if a != b {
                counts[a as usize + 1] += 1;
                counts[b as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut nb = vec![0u32; counts[n]];
        for (a, b) in edges {
            if a != b {
                nb[fill[a as usize]] = b;
                fill[a as usize] += 1;
                nb[fill[b as usize]] = a;
                fill[b as usize] += 1;
            }
        }
        // sort + dedup each row, compacting in place
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut write = 0usize;
        for i in 0..n {
            let (lo, hi) = (counts[i], counts[i + 1]);
            nb[lo..hi].sort_unstable();
            let mut last = u32::MAX;
            for k in lo..hi {
                let x = nb[k];
                if x != last {
                    nb[write] = x;
                    write += 1;
                    last = x;
                }
            }
            offsets.push(write);
        }
        nb.truncate(write);
        nb.shrink_to_fit();
        Adjacency {
            offsets,
            neighbors: nb,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Neighbours of 0-based vertex `v`, sorted ascending.
    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Number of undirected simple edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }
}

#[derive(Debug)]
struct InIndex {
    offsets: Vec<usize>,
    entries: Vec<u32>,
}

#[derive(Debug)]
pub struct PAGraph {
    params: PAParams,
    t: u64,
    targets: Vec<u32>,
    degrees: Vec<u64>,
    meta: GraphMeta,
    adjacency: OnceLock<Adjacency>,
    in_index: OnceLock<InIndex>,
}

impl Clone for PAGraph {
    fn clone(&self) -> Self {
        PAGraph {
            params: self.params,
            t: self.t,
            targets: self.targets.clone(),
            degrees: self.degrees.clone(),
            meta: self.meta.clone(),
            adjacency: OnceLock::new(),
            in_index: OnceLock::new(),
        }
    }
}

impl PartialEq for PAGraph {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.t == other.t
            && self.targets == other.targets
            && self.meta == other.meta
    }
}

/// The fixed initial entries of the log (0-based targets).
pub(crate) fn initial_targets(params: &PAParams) -> Vec<u32> {
    let m = params.m as usize;
    match (params.variant, params.m) {
        (Variant::A, _) => vec![0; m],
        (Variant::B, 1) => vec![1, 0],
        (Variant::B, _) => vec![0; m],
        (Variant::C, _) => {
            let mut v = vec![1; m];
            v.extend(std::iter::repeat_n(0, m));
            v
        }
    }
}

/// Whether a random entry may be a self-loop `g(v, j) = v`.
pub(crate) fn allows_self_loops(params: &PAParams) -> bool {
    match params.variant {
        Variant::A => true,
        Variant::B => params.m > 1,
        Variant::C => false,
    }
}

impl PAGraph {
    /// Builds a graph from a 0-based event log, validating every invariant.
    pub fn from_log(params: PAParams, targets: Vec<u32>, meta: GraphMeta) -> Result<PAGraph> {
        let m = params.m as usize;
        if !targets.len().is_multiple_of(m) {
            return Err(Error::Integrity(format!(
                "log length {} is not a multiple of m={m}",
                targets.len()
            )));
        }
        let t = (targets.len() / m) as u64;
        if t < params.initial_time() {
            return Err(Error::Integrity(format!(
                "graph has {t} vertices; model {} starts at time {}",
                params.variant,
                params.initial_time()
            )));
        }
        if targets.len() > u32::MAX as usize {
            return Err(Error::Budget("log longer than 2^32 entries".into()));
        }
        let init = initial_targets(&params);
        if targets[..init.len()] != init[..] {
            return Err(Error::Integrity(format!(
                "initial entries {:?} do not match the model-{} start {:?}",
                plus_one(&targets[..init.len()]),
                params.variant,
                plus_one(&init)
            )));
        }
        let loops = allows_self_loops(&params);
        for (e, &s) in targets.iter().enumerate().skip(init.len()) {
            let child = (e / m) as u32;
            if s > child || (s == child && !loops) {
                return Err(Error::Integrity(format!(
                    "edge {} of vertex {} targets vertex {} (g(v,j) must be {} v)",
                    e % m + 1,
                    child + 1,
                    s + 1,
                    if loops { "<=" } else { "<" }
                )));
            }
        }
        let degrees = degrees_from_log(m, t as usize, &targets);
        Ok(PAGraph {
            params,
            t,
            targets,
            degrees,
            meta,
            adjacency: OnceLock::new(),
            in_index: OnceLock::new(),
        })
    }

    /// Trusted constructor for the generator, which already tracks degrees.
    pub(crate) fn from_parts(
        params: PAParams,
        targets: Vec<u32>,
        degrees: Vec<u64>,
        meta: GraphMeta,
    ) -> PAGraph {
        let t = (targets.len() / params.m as usize) as u64;
        debug_assert_eq!(degrees.len() as u64, t);
        PAGraph {
            params,
            t,
            targets,
            degrees,
            meta,
            adjacency: OnceLock::new(),
            in_index: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &PAParams {
        &self.params
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub(crate) fn set_meta(&mut self, meta: GraphMeta) {
        self.meta = meta;
    }

    pub(crate) fn set_params(&mut self, params: PAParams) {
        self.params = params;
    }

    /// Number of vertices (the model time).
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn m(&self) -> u32 {
        self.params.m
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// The event log with 0-based targets; entry `m(v-1)+(j-1)` is `g(v, j) - 1`.
    pub fn targets_raw(&self) -> &[u32] {
        &self.targets
    }

    /// Final degrees, indexed 0-based.
    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    /// `g(v, j)`, both 1-based.
    pub fn target(&self, v: u32, j: u32) -> Result<u32> {
        self.check_vertex(v)?;
        if j == 0 || j > self.params.m {
            return Err(Error::OutOfRange(format!("edge index j={j} outside 1..={}", self.params.m)));
        }
        let e = (v as usize - 1) * self.params.m as usize + (j as usize - 1);
        Ok(self.targets[e] + 1)
    }

    /// Out-targets of 1-based vertex `v` (1-based ids), in edge order.
    pub fn out_targets(&self, v: u32) -> impl ExactSizeIterator<Item = u32> + '_ {
        let m = self.params.m as usize;
        let lo = (v as usize - 1) * m;
        self.targets[lo..lo + m].iter().map(|&s| s + 1)
    }

    /// `D_i(s)`: degree of vertex `i` at time `s` (both 1-based, `i <= s <= t`).
    /// The initial graph counts as present from the model's first time on.
    pub fn degree(&self, i: u32, s: u64) -> Result<u64> {
        self.check_vertex(i)?;
        if (i as u64) > s || s > self.t {
            return Err(Error::OutOfRange(format!(
                "need 1 <= i <= s <= t, got i={i}, s={s}, t={}",
                self.t
            )));
        }
        let s = s.max(self.params.initial_time());
        if s == self.t {
            return Ok(self.degrees[i as usize - 1]);
        }
        let m = self.params.m as usize;
        let me = i - 1;
        let upto = s as usize * m;
        let own = self.targets[(me as usize * m)..((me as usize + 1) * m).min(upto)].len() as u64;
        let hits = self.targets[..upto].iter().filter(|&&x| x == me).count() as u64;
        Ok(own + hits)
    }

    /// Number of self-loop entries `g(v, j) = v`.
    pub fn self_loop_count(&self) -> usize {
        let m = self.params.m as usize;
        self.targets
            .iter()
            .enumerate()
            .filter(|&(e, &s)| (e / m) as u32 == s)
            .count()
    }

    /// Simple undirected adjacency (built once, on first use).
    pub fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let m = self.params.m as usize;
            Adjacency::from_edges(
                self.t as usize,
                self.targets.iter().enumerate().map(move |(e, &s)| ((e / m) as u32, s)),
            )
        })
    }

    fn in_index(&self) -> &InIndex {
        self.in_index.get_or_init(|| {
            let m = self.params.m as usize;
            let n = self.t as usize;
            let mut offsets = vec![0usize; n + 1];
            for (e, &s) in self.targets.iter().enumerate() {
                if (e / m) as u32 != s {
                    offsets[s as usize + 1] += 1;
                }
            }
            for i in 0..n {
                offsets[i + 1] += offsets[i];
            }
            let mut fill = offsets.clone();
            let mut entries = vec![0u32; offsets[n]];
            for (e, &s) in self.targets.iter().enumerate() {
                if (e / m) as u32 != s {
                    entries[fill[s as usize]] = e as u32;
                    fill[s as usize] += 1;
                }
            }
            InIndex { offsets, entries }
        })
    }

    /// All `(v, j)` with `g(v, j) = i`, `v != i`, ordered by edge index. 1-based.
    pub fn in_neighbors(&self, i: u32) -> Result<Vec<(u32, u32)>> {
        self.check_vertex(i)?;
        let idx = self.in_index();
        let m = self.params.m;
        let lo = idx.offsets[i as usize - 1];
        let hi = idx.offsets[i as usize];
        Ok(idx.entries[lo..hi]
            .iter()
            .map(|&e| (e / m + 1, e % m + 1))
            .collect())
    }

    /// In-edge count of 0-based vertex `v` (self-loops excluded).
    pub(crate) fn in_count_raw(&self, v: u32) -> usize {
        let idx = self.in_index();
        idx.offsets[v as usize + 1] - idx.offsets[v as usize]
    }

    fn check_vertex(&self, v: u32) -> Result<()> {
        if v == 0 || v as u64 > self.t {
            return Err(Error::OutOfRange(format!("vertex {v} outside 1..={}", self.t)));
        }
        Ok(())
    }

    /// Writes the versioned text format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        let mut w = BufWriter::with_capacity(1 << 20, file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let body = self.body_checksum();
        writeln!(w, "# format_version={FORMAT_VERSION}")?;
        writeln!(w, "# model={}", self.params.variant)?;
        writeln!(w, "# m={}", self.params.m)?;
        writeln!(w, "# delta={}", self.params.delta)?;
        writeln!(w, "# t={}", self.t)?;
        match self.meta.seed {
            Some(s) => writeln!(w, "# seed={s}")?,
            None => writeln!(w, "# seed=none")?,
        }
        writeln!(w, "# rng={}", self.meta.rng)?;
        writeln!(w, "# checksum={body}")?;
        let mut line = String::with_capacity(48);
        for (e, child, s) in self.edge_lines() {
            line.clear();
            let _ = writeln!(line, "{e} {child} {s}");
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    fn edge_lines(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let m = self.params.m as usize;
        self.targets
            .iter()
            .enumerate()
            .map(move |(e, &s)| (e + 1, e / m + 1, s + 1))
    }

    fn body_checksum(&self) -> String {
        let mut h = Sha256::new();
        let mut line = String::with_capacity(48);
        for (e, child, s) in self.edge_lines() {
            line.clear();
            let _ = writeln!(line, "{e} {child} {s}");
            h.update(line.as_bytes());
        }
        hex(&h.finalize()[..16])
    }

    /// Reads and validates a graph file (degrees are rebuilt from the log).
    pub fn load(path: impl AsRef<Path>) -> Result<PAGraph> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Self::read_from(BufReader::with_capacity(1 << 20, file), path)
    }

    pub fn read_from<R: BufRead>(reader: R, path: &Path) -> Result<PAGraph> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut header: Vec<(String, String)> = Vec::new();
        let mut targets: Vec<u32> = Vec::new();
        let mut hasher = Sha256::new();
        let mut m: Option<usize> = None;
        let mut in_header = true;
        let get = |hdr: &Vec<(String, String)>, key: &str, line: usize| -> Result<String> {
            hdr.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| perr(line, format!("missing header key `{key}`")))
        };
        let mut params: Option<PAParams> = None;
        let mut t_hdr = 0u64;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if !in_header {
                    return Err(perr(lineno, "header line after edge lines".into()));
                }
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| perr(lineno, format!("malformed header `{line}`")))?;
                header.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if in_header {
                in_header = false;
                let version = get(&header, "format_version", lineno)?;
                if version != FORMAT_VERSION.to_string() {
                    return Err(Error::Version {
                        found: version,
                        expected: FORMAT_VERSION,
                    });
                }
                let variant: Variant = get(&header, "model", lineno)?.parse()?;
                let mm: u32 = get(&header, "m", lineno)?
                    .parse()
                    .map_err(|_| perr(lineno, "bad m".into()))?;
                let delta = Delta::parse(&get(&header, "delta", lineno)?)?;
                t_hdr = get(&header, "t", lineno)?
                    .parse()
                    .map_err(|_| perr(lineno, "bad t".into()))?;
                let p = PAParams::new(variant, mm, delta)?;
                m = Some(mm as usize);
                targets.reserve((t_hdr as usize).saturating_mul(mm as usize).min(1 << 28));
                params = Some(p);
            }
            let m = m.expect("set with params");
            let mut it = line.split_ascii_whitespace();
            let mut num = |what: &str| -> Result<u64> {
                it.next()
                    .ok_or_else(|| perr(lineno, format!("missing {what}")))?
                    .parse::<u64>()
                    .map_err(|_| perr(lineno, format!("bad {what}")))
            };
            let e = num("edge index")?;
            let child = num("child")?;
            let s = num("target")?;
            if it.next().is_some() {
                return Err(perr(lineno, "trailing fields".into()));
            }
            let expected = targets.len() as u64 + 1;
            if e != expected {
                return Err(perr(lineno, format!("edge index {e}, expected {expected}")));
            }
            if child != (e - 1) / m as u64 + 1 {
                return Err(perr(lineno, format!("edge {e} must belong to vertex {}", (e - 1) / m as u64 + 1)));
            }
            if s == 0 || s > u32::MAX as u64 {
                return Err(perr(lineno, format!("target {s} out of range")));
            }
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
            targets.push((s - 1) as u32);
        }
        let params = params.ok_or_else(|| perr(0, "file has no edges".into()))?;
        let m = params.m as usize;
        if targets.len() as u64 != t_hdr * m as u64 {
            return Err(Error::Integrity(format!(
                "header promises t={t_hdr} with m={m} ({} edges) but file has {} edges",
                t_hdr * m as u64,
                targets.len()
            )));
        }
        if let Ok(expected) = get(&header, "checksum", 0) {
            let actual = hex(&hasher.finalize()[..16]);
            if actual != expected {
                return Err(Error::Checksum { expected, actual });
            }
        }
        let seed = match get(&header, "seed", 0).ok().as_deref() {
            None | Some("none") => None,
            Some(s) => Some(s.parse().map_err(|_| perr(0, format!("bad seed `{s}`")))?),
        };
        let rng = get(&header, "rng", 0).unwrap_or_else(|_| RNG_NAME.to_string());
        PAGraph::from_log(params, targets, GraphMeta { seed, rng })
    }

    /// `N_k(t)` for `k = 0..=max degree`.
    pub fn degree_histogram(&self) -> Vec<u64> {
        let max = self.degrees.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0u64; max + 1];
        for &d in &self.degrees {
            h[d as usize] += 1;
        }
        h
    }

    /// Writes `k,count` rows for every degree with a non-zero count.
    pub fn write_degree_histogram_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "k,count")?;
        for (k, &c) in self.degree_histogram().iter().enumerate() {
            if c > 0 {
                writeln!(w, "{k},{c}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn degrees_from_log(m: usize, t: usize, targets: &[u32]) -> Vec<u64> {
    let mut d = vec![m as u64; t];
    for &s in targets {
        d[s as usize] += 1;
    }
    d
}

fn plus_one(x: &[u32]) -> Vec<u32> {
    x.iter().map(|v| v + 1).collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
