//! The three affine growth rules and the m > 1 collapse construction.
//!
//! Model (a) lets the new vertex attach to itself with weight `1 + delta`;
//! model (b) forbids that at m = 1; model (c) draws all m edges of the new
//! vertex against the frozen degrees of the current graph. Models (a) and (b)
//! with m > 1 are defined by running the m = 1 process with `delta/m` up to
//! time `mt` and merging consecutive blocks of m vertices.

use rand::SeedableRng;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{initial_targets, GraphMeta, PAGraph, RNG_NAME};
use crate::params::{PAParams, Variant};
use crate::sampler::AttachmentSampler;

/// Largest event log [`generate`] will allocate by default (entries `m * t`).
pub const DEFAULT_MAX_EDGES: u64 = 400_000_000;

/// The generator used for every replicate.
pub type PaRng = ChaCha8Rng;

/// Seeded generator for one replicate; distinct streams are independent.
pub fn replicate_rng(seed: u64, stream: u64) -> PaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An in-progress m = 1 process (models a, b) or model-(c) process.
#[derive(Clone, Debug)]
pub struct GrowthState {
    params: PAParams,
    t: u64,
    sampler: AttachmentSampler,
    targets: Vec<u32>,
    scratch: Vec<u32>,
}

impl GrowthState {
    /// The initial graph: a self-loop (a), a double edge (b), or 2m parallel edges (c).
    pub fn init(params: PAParams) -> Result<GrowthState> {
        Self::with_capacity(params, 0)
    }

    /// Like [`init`](Self::init), reserving room for growth up to time `horizon`.
    pub fn with_capacity(params: PAParams, horizon: u64) -> Result<GrowthState> {
        // revalidate: the fields are public
        let params = PAParams::new(params.variant, params.m, params.delta)?;
        if params.variant != Variant::C && params.m != 1 {
            return Err(Error::InvalidParams(format!(
                "model {} with m={} is grown as the m=1 process with delta/m; use single_edge_process()",
                params.variant, params.m
            )));
        }
        let m = params.m as usize;
        let h = horizon as usize;
        let mut sampler = AttachmentSampler::with_capacity(params.delta, h, 2 * m * h);
        let targets = initial_targets(&params);
        let t0 = params.initial_time();
        for _ in 0..t0 {
            sampler.push_vertex();
        }
        for (e, &s) in targets.iter().enumerate() {
            sampler.add_endpoint((e / m) as u32);
            sampler.add_endpoint(s);
        }
        let mut log = Vec::with_capacity(m * h.max(t0 as usize));
        log.extend_from_slice(&targets);
        Ok(GrowthState {
            params,
            t: t0,
            sampler,
            targets: log,
            scratch: Vec::with_capacity(m),
        })
    }

    pub fn params(&self) -> &PAParams {
        &self.params
    }

    /// Current time (number of vertices).
    pub fn time(&self) -> u64 {
        self.t
    }

    /// Current degrees, 0-based.
    pub fn degrees(&self) -> &[u64] {
        self.sampler.degrees()
    }

    /// `sum_i (D_i(t) + delta)`.
    pub fn total_weight(&self) -> f64 {
        self.sampler.total_weight()
    }

    /// Event log so far, 0-based targets.
    pub fn log(&self) -> &[u32] {
        &self.targets
    }

    /// Adds vertex `t + 1` and returns its targets `g(t+1, j)`, 1-based.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> impl ExactSizeIterator<Item = u32> + '_ {
        let start = self.targets.len();
        self.advance(rng);
        self.targets[start..].iter().map(|&s| s + 1)
    }

    #[inline]
    fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let s = &mut self.sampler;
        match self.params.variant {
            Variant::A => {
                let v = s.push_vertex();
                s.add_endpoint(v);
                let target = s.sample(rng);
                s.add_endpoint(target);
                self.targets.push(target);
            }
            Variant::B => {
                let target = s.sample(rng);
                let v = s.push_vertex();
                s.add_endpoint(v);
                s.add_endpoint(target);
                self.targets.push(target);
            }
            Variant::C => {
                self.scratch.clear();
                for _ in 0..self.params.m {
                    self.scratch.push(s.sample(rng));
                }
                let v = s.push_vertex();
                for &target in &self.scratch {
                    s.add_endpoint(v);
                    s.add_endpoint(target);
                }
                self.targets.extend_from_slice(&self.scratch);
            }
        }
        self.t += 1;
    }

    /// Grows until time `t`.
    pub fn grow_to<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) {
        while self.t < t {
            self.advance(rng);
        }
    }

    /// Freezes the state into a graph.
    pub fn into_graph(self, meta: GraphMeta) -> PAGraph {
        let degrees = self.sampler.degrees().to_vec();
        PAGraph::from_parts(self.params, self.targets, degrees, meta)
    }
}

/// Options for [`generate_with`].
#[derive(Clone, Copy, Debug)]
pub struct GenerateOptions {
    pub max_edges: u64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            max_edges: DEFAULT_MAX_EDGES,
        }
    }
}

/// Grows a graph with `t` vertices from `seed` (stream 0).
pub fn generate(params: PAParams, t: u64, seed: u64) -> Result<PAGraph> {
    generate_with(params, t, seed, GenerateOptions::default())
}

pub fn generate_with(params: PAParams, t: u64, seed: u64, opts: GenerateOptions) -> Result<PAGraph> {
    let mut rng = replicate_rng(seed, 0);
    let mut g = generate_from_rng(params, t, &mut rng, opts)?;
    g.set_meta(GraphMeta {
        seed: Some(seed),
        rng: RNG_NAME.to_string(),
    });
    Ok(g)
}

/// Grows a graph drawing from a caller-supplied generator (no seed recorded).
pub fn generate_from_rng<R: RngCore + ?Sized>(
    params: PAParams,
    t: u64,
    rng: &mut R,
    opts: GenerateOptions,
) -> Result<PAGraph> {
    let params = PAParams::new(params.variant, params.m, params.delta)?;
    let min_t = match params.variant {
        Variant::A => 1,
        _ => 2,
    };
    if t < min_t {
        return Err(Error::InvalidParams(format!(
            "model {} needs t >= {min_t}, got t={t}",
            params.variant
        )));
    }
    let edges = t.saturating_mul(params.m as u64);
    if edges > opts.max_edges || edges > u32::MAX as u64 {
        return Err(Error::Budget(format!(
            "m*t = {edges} edges exceeds the budget of {}",
            opts.max_edges.min(u32::MAX as u64)
        )));
    }
    if params.variant == Variant::C || params.m == 1 {
        let mut state = GrowthState::with_capacity(params, t)?;
        state.grow_to(t, rng);
        return Ok(state.into_graph(GraphMeta::default()));
    }
    let single = params.single_edge_process();
    let mut state = GrowthState::with_capacity(single, edges)?;
    state.grow_to(edges, rng);
    collapse(&state.into_graph(GraphMeta::default()), params)
}

/// Merges blocks of `m` consecutive vertices of an m = 1 graph at time `mt`.
///
/// Edge `m(v-1)+j` of the result is edge `m(v-1)+j` of `g1`, with target
/// `s` mapped to `ceil(s/m)`.
pub fn collapse(g1: &PAGraph, params: PAParams) -> Result<PAGraph> {
    let p1 = g1.params();
    let m = params.m;
    if p1.m != 1 {
        return Err(Error::InvalidParams(format!("collapse needs an m=1 graph, got m={}", p1.m)));
    }
    if p1.variant != params.variant {
        return Err(Error::InvalidParams(format!(
            "collapse keeps the model: graph is {}, target is {}",
            p1.variant, params.variant
        )));
    }
    if p1.delta_f() != params.delta_prime().value() {
        return Err(Error::InvalidParams(format!(
            "collapse to delta={} needs delta'={}, graph has {}",
            params.delta,
            params.delta_prime(),
            p1.delta
        )));
    }
    if !g1.t().is_multiple_of(m as u64) {
        return Err(Error::InvalidParams(format!(
            "graph time {} is not divisible by m={m}",
            g1.t()
        )));
    }
    if m == 1 {
        let mut g = g1.clone();
        g.set_params(params);
        return Ok(g);
    }
    let targets: Vec<u32> = g1.targets_raw().iter().map(|&s| s / m).collect();
    let degrees: Vec<u64> = g1
        .degrees()
        .chunks_exact(m as usize)
        .map(|c| c.iter().sum())
        .collect();
    Ok(PAGraph::from_parts(params, targets, degrees, g1.meta().clone()))
}
