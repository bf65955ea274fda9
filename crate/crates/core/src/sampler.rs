//! O(1) expected-time draws proportional to `D_i + delta`.
//!
//! The sampler keeps one entry per half-edge endpoint, so a uniform entry is
//! a degree-proportional vertex. For `delta >= 0` the extra mass `delta * n`
//! is covered by mixing in a uniform vertex; for `delta < 0` a proposed
//! endpoint `i` is accepted with probability `(D_i + delta) / D_i`.
//!
//! When `delta = p/q` is rational all decisions are made on integers, so the
//! law of a draw is exactly `(D_i + delta) / sum_j (D_j + delta)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::params::Delta;

#[derive(Clone, Copy, Debug)]
enum Weight {
    Exact { num: i64, den: u64 },
    Real(f64),
}

#[derive(Clone, Debug)]
pub struct AttachmentSampler {
    endpoints: Vec<u32>,
    degrees: Vec<u64>,
    weight: Weight,
}

impl AttachmentSampler {
    pub fn new(delta: Delta) -> Self {
        Self::with_capacity(delta, 0, 0)
    }

    pub fn with_capacity(delta: Delta, vertices: usize, endpoints: usize) -> Self {
        let weight = match delta {
            Delta::Ratio { num, den } => Weight::Exact { num, den },
            Delta::Real(x) => Weight::Real(x),
        };
        AttachmentSampler {
            endpoints: Vec::with_capacity(endpoints),
            degrees: Vec::with_capacity(vertices),
            weight,
        }
    }

    /// Builds a sampler from a degree vector (vertex `i` gets `degrees[i]` endpoints).
    pub fn from_degrees(delta: Delta, degrees: &[u64]) -> Self {
        let total: u64 = degrees.iter().sum();
        let mut s = Self::with_capacity(delta, degrees.len(), total as usize);
        for (i, &d) in degrees.iter().enumerate() {
            let v = s.push_vertex();
            debug_assert_eq!(v as usize, i);
            for _ in 0..d {
                s.add_endpoint(v);
            }
        }
        s
    }

    /// Adds a vertex with degree zero and returns its 0-based index.
    pub fn push_vertex(&mut self) -> u32 {
        self.degrees.push(0);
        (self.degrees.len() - 1) as u32
    }

    pub fn add_endpoint(&mut self, v: u32) {
        self.degrees[v as usize] += 1;
        self.endpoints.push(v);
    }

    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn endpoint_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn delta(&self) -> f64 {
        match self.weight {
            Weight::Exact { num, den } => num as f64 / den as f64,
            Weight::Real(x) => x,
        }
    }

    /// `sum_i (D_i + delta)`.
    pub fn total_weight(&self) -> f64 {
        self.endpoints.len() as f64 + self.delta() * self.degrees.len() as f64
    }

    /// Fails if some vertex has non-positive weight `D_i + delta`.
    pub fn validate(&self) -> Result<()> {
        let d = self.delta();
        if self.degrees.is_empty() {
            return Err(Error::InvalidParams("sampler has no vertices".into()));
        }
        if let Some((i, &deg)) = self
            .degrees
            .iter()
            .enumerate()
            .find(|(_, &deg)| deg as f64 + d <= 0.0)
        {
            return Err(Error::InvalidParams(format!(
                "vertex {} has non-positive weight D+delta = {}",
                i + 1,
                deg as f64 + d
            )));
        }
        if d < 0.0 && self.degrees.contains(&0) {
            return Err(Error::InvalidParams(
                "rejection sampling needs every degree >= 1 when delta < 0".into(),
            ));
        }
        Ok(())
    }

    /// Draws a 0-based vertex index.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.sample_counting(rng).0
    }

    /// Draws a vertex and reports how many proposals were made (1 unless `delta < 0`).
    pub fn sample_counting<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let len = self.endpoints.len() as u64;
        let n = self.degrees.len() as u64;
        debug_assert!(n > 0);
        match self.weight {
            Weight::Exact { num, den } if num >= 0 => {
                let range = len as u128 * den as u128 + num as u128 * n as u128;
                let r = if range <= u64::MAX as u128 {
                    rng.random_range(0..range as u64) as u128
                } else {
                    rng.random_range(0..range)
                };
                (self.resolve_mixture(r, num, den), 1)
            }
            Weight::Exact { num, den } => {
                let mut trials = 0;
                loop {
                    trials += 1;
                    let v = self.endpoints[rng.random_range(0..len) as usize];
                    let span = self.degrees[v as usize] as u128 * den as u128;
                    let r = rng.random_range(0..span);
                    if Self::accepts(r, span, num) {
                        return (v, trials);
                    }
                }
            }
            Weight::Real(d) if d >= 0.0 => {
                let total = len as f64 + d * n as f64;
                if rng.random::<f64>() * total < len as f64 {
                    (self.endpoints[rng.random_range(0..len) as usize], 1)
                } else {
                    (rng.random_range(0..n) as u32, 1)
                }
            }
            Weight::Real(d) => {
                let mut trials = 0;
                loop {
                    trials += 1;
                    let v = self.endpoints[rng.random_range(0..len) as usize];
                    let deg = self.degrees[v as usize] as f64;
                    if rng.random::<f64>() * deg < deg + d {
                        return (v, trials);
                    }
                }
            }
        }
    }

    /// Maps a uniform integer in `[0, L*den + num*n)` to a vertex.
    #[inline]
    fn resolve_mixture(&self, r: u128, num: i64, den: u64) -> u32 {
        let half_edges = self.endpoints.len() as u128 * den as u128;
        if r < half_edges {
            self.endpoints[(r / den as u128) as usize]
        } else {
            ((r - half_edges) / num as u128) as u32
        }
    }

    /// Acceptance of a proposal whose integer draw is `r` in `[0, span)`, `span = D*den`.
    #[inline]
    fn accepts(r: u128, span: u128, num: i64) -> bool {
        (r as i128) < span as i128 + num as i128
    }

    /// The exact law of [`sample`](Self::sample) for a rational `delta`, obtained
    /// by running the sampler's decision rule over every possible integer draw.
    /// Returns `None` for real-valued `delta` or when the draw range is too large
    /// to enumerate.
    pub fn exact_law(&self) -> Option<Vec<BigRational>> {
        let Weight::Exact { num, den } = self.weight else {
            return None;
        };
        let len = self.endpoints.len() as u128;
        let n = self.degrees.len();
        let mut counts = vec![BigInt::zero(); n];
        if num >= 0 {
            let range = len * den as u128 + num as u128 * n as u128;
            if range > 5_000_000 {
                return None;
            }
            for r in 0..range {
                counts[self.resolve_mixture(r, num, den) as usize] += 1;
            }
            let total = BigInt::from(range);
            return Some(
                counts
                    .into_iter()
                    .map(|c| BigRational::new(c, total.clone()))
                    .collect(),
            );
        }
        // Rejection: a round proposes endpoint e with probability 1/L and accepts
        // with (#accepting r)/span; the output law is the normalized acceptance mass.
        let mut mass = vec![BigRational::zero(); n];
        let mut work = 0u128;
        for &v in &self.endpoints {
            let span = self.degrees[v as usize] as u128 * den as u128;
            work += span;
            if work > 5_000_000 {
                return None;
            }
            let accepted = (0..span).filter(|&r| Self::accepts(r, span, num)).count();
            mass[v as usize] += BigRational::new(BigInt::from(accepted), BigInt::from(span));
        }
        let total: BigRational = mass.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
        Some(mass.into_iter().map(|x| x / total.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_target(degrees: &[u64], delta: Delta) -> Vec<BigRational> {
        let d = delta.to_big_rational().unwrap();
        let w: Vec<BigRational> = degrees
            .iter()
            .map(|&k| BigRational::from_integer(BigInt::from(k)) + d.clone())
            .collect();
        let total = w.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
        w.into_iter().map(|x| x / total.clone()).collect()
    }

    fn freq(s: &AttachmentSampler, draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = vec![0usize; s.vertex_count()];
        for _ in 0..draws {
            c[s.sample(&mut rng) as usize] += 1;
        }
        c.into_iter().map(|x| x as f64 / draws as f64).collect()
    }

    #[test]
    fn symmetric_pair_is_fair() {
        for delta in [Delta::ZERO, Delta::integer(2)] {
            let s = AttachmentSampler::from_degrees(delta, &[2, 2]);
            let law = s.exact_law().unwrap();
            assert_eq!(law[0], BigRational::new(1.into(), 2.into()));
        }
    }

    #[test]
    fn negative_delta_example() {
        // D = (3, 1), delta = -1/2: weights (5/2, 1/2) so P(1) = 5/6
        let delta = Delta::parse("-0.5").unwrap();
        let s = AttachmentSampler::from_degrees(delta, &[3, 1]);
        assert_eq!(s.exact_law().unwrap()[0], BigRational::new(5.into(), 6.into()));
        let f = freq(&s, 1_000_000, 7);
        assert!((f[0] - 5.0 / 6.0).abs() < 4.0 * (5.0f64 / 36.0 / 1e6).sqrt());
    }

    #[test]
    fn exact_law_matches_weights_on_all_tiny_states() {
        let deltas = ["-0.9", "-0.5", "0", "1", "3"].map(|s| Delta::parse(s).unwrap());
        let mut degrees = Vec::new();
        for n in 1..=5u32 {
            let states = 6u64.pow(n);
            for code in 0..states {
                degrees.clear();
                let mut c = code;
                for _ in 0..n {
                    degrees.push(c % 6 + 1);
                    c /= 6;
                }
                for &delta in &deltas {
                    let s = AttachmentSampler::from_degrees(delta, &degrees);
                    assert_eq!(s.exact_law().unwrap(), exact_target(&degrees, delta), "{degrees:?} {delta}");
                }
            }
        }
    }

    #[test]
    fn real_delta_matches_weights_statistically() {
        let degrees = [1u64, 4, 2, 6];
        for d in [-0.7, 0.0, 2.5] {
            let s = AttachmentSampler::from_degrees(Delta::Real(d), &degrees);
            let f = freq(&s, 400_000, 11);
            let total: f64 = degrees.iter().map(|&k| k as f64 + d).sum();
            for (i, &k) in degrees.iter().enumerate() {
                let p = (k as f64 + d) / total;
                assert!((f[i] - p).abs() < 5.0 * (p * (1.0 - p) / 4e5).sqrt(), "d={d} i={i}");
            }
        }
    }

    #[test]
    fn validate_rejects_nonpositive_weights() {
        let s = AttachmentSampler::from_degrees(Delta::integer(-1), &[1, 3]);
        assert!(s.validate().is_err());
        let s = AttachmentSampler::from_degrees(Delta::parse("-0.5").unwrap(), &[1, 3]);
        assert!(s.validate().is_ok());
        assert!(AttachmentSampler::new(Delta::ZERO).validate().is_err());
    }

    #[test]
    fn total_weight_is_edges_plus_delta_n() {
        let s = AttachmentSampler::from_degrees(Delta::parse("0.25").unwrap(), &[2, 3, 1]);
        assert_eq!(s.endpoint_count(), 6);
        assert_eq!(s.total_weight(), 6.0 + 0.75);
    }
}
