//! Closed-form evaluators: derived constants, the limiting degree law, path
//! counting sums, degree tail bounds, proper-tree lower bounds, the Pólya urn
//! and the multinomial edge-cell experiment.
//!
//! Everything here is a pure function of its arguments, except the two Monte
//! Carlo routines which take an explicit seed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::growth::replicate_rng;
use crate::params::{PAParams, Variant};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivedConstants {
    pub model: Variant,
    pub m: u32,
    pub delta: f64,
    pub t: f64,
    pub sigma: f64,
    pub c: f64,
    pub tau: f64,
    pub a: f64,
    pub delta_prime: f64,
    pub big_delta: f64,
    pub eta: f64,
    pub a_md: f64,
    pub m_delta: f64,
    /// `4/|ln(tau-2)| + 4 sigma/ln m`; needs `tau < 3` and `m >= 2`.
    pub c_g: Option<f64>,
    /// `floor(ln ln t / |ln(tau-2)|)`; needs `tau < 3`.
    pub k_star: Option<u32>,
    pub q_t: f64,
    pub lambda_t: f64,
    /// `ln t / ln(3 C m^2 ln t)`.
    pub l_tc: f64,
    /// Root of `g + (1+delta)(1+ln g) = 0`; needs `delta > -1`.
    pub gamma: Option<f64>,
    /// `(1+delta)/(gamma(2+delta))`.
    pub height_const: Option<f64>,
    /// `8 m_delta m^2`.
    pub c_var: f64,
    /// Inner-core threshold `u_1`; needs `tau < 3`.
    pub u1: Option<f64>,
}

pub fn derived_constants(p: &PAParams, t: f64, sigma: f64, c: f64) -> DerivedConstants {
    let tau = p.tau();
    let m = p.m as f64;
    let d = p.delta_f();
    let scale_free = tau < 3.0;
    let gamma = gamma_root(d).ok();
    DerivedConstants {
        model: p.variant,
        m: p.m,
        delta: d,
        t,
        sigma,
        c,
        tau,
        a: p.a(),
        delta_prime: p.delta_prime().value(),
        big_delta: p.big_delta(),
        eta: p.eta(),
        a_md: p.a_md(),
        m_delta: p.m_delta(),
        c_g: (scale_free && p.m >= 2).then(|| c_g(tau, sigma, p.m)),
        k_star: scale_free.then(|| k_star(tau, t)),
        q_t: q_t(tau, t),
        lambda_t: lambda_t(q_t(tau, t), t),
        l_tc: t.ln() / (3.0 * c * m * m * t.ln()).ln(),
        gamma,
        height_const: gamma.map(|g| (1.0 + d) / (g * (2.0 + d))),
        c_var: 8.0 * p.m_delta() * m * m,
        u1: scale_free.then(|| u1(tau, t)),
    }
}

pub fn c_g(tau: f64, sigma: f64, m: u32) -> f64 {
    4.0 / (tau - 2.0).ln().abs() + 4.0 * sigma / (m as f64).ln()
}

pub fn k_star(tau: f64, t: f64) -> u32 {
    (t.ln().ln() / (tau - 2.0).ln().abs()).floor().max(0.0) as u32
}

/// `t^{1/(tau-1) - 2} / (ln t)^2`.
pub fn q_t(tau: f64, t: f64) -> f64 {
    t.powf(1.0 / (tau - 1.0) - 2.0) / t.ln().powi(2)
}

/// `(1 - (1-q)^t) / 2`.
pub fn lambda_t(q: f64, t: f64) -> f64 {
    -0.5 * (t * (-q).ln_1p()).exp_m1()
}

/// Inner-core threshold `t^{1/(2(tau-1))} (ln t)^{-1/2}`.
pub fn u1(tau: f64, t: f64) -> f64 {
    t.powf(1.0 / (2.0 * (tau - 1.0))) / t.ln().sqrt()
}

/// Limiting probability that a vertex has degree `k` (`k >= m`).
pub fn degree_law_pmf(p: &PAParams, k: u64) -> Result<f64> {
    if k < p.m as u64 {
        return Err(Error::OutOfRange(format!("degree law needs k >= m={}, got {k}", p.m)));
    }
    let m = p.m as f64;
    let d = p.delta_f();
    let r = d / m;
    let k = k as f64;
    let ln = ln_gamma(k + d) + ln_gamma(m + d + 2.0 + r) - ln_gamma(m + d) - ln_gamma(k + 1.0 + d + 2.0 + r);
    Ok((2.0 + r) * ln.exp())
}

/// `sum_{k >= from} p_k` in closed form (`from >= m`).
pub fn degree_law_tail(p: &PAParams, from: u64) -> Result<f64> {
    if from < p.m as u64 {
        return Err(Error::OutOfRange(format!("tail needs k >= m={}", p.m)));
    }
    // sum_{k>=K} G(k+x)/G(k+y) = G(K+x)/((y-x-1) G(K+y-1))
    let m = p.m as f64;
    let d = p.delta_f();
    let r = d / m;
    let (x, y) = (d, 3.0 + d + r);
    let kk = from as f64;
    let ln = ln_gamma(m + d + 2.0 + r) - ln_gamma(m + d) + ln_gamma(kk + x) - ln_gamma(kk + y - 1.0);
    Ok((2.0 + r) * ln.exp() / (y - x - 1.0))
}

/// `sum_{m <= k < cutoff} p_k` by the ratio recursion, plus the closed-form tail.
pub fn degree_law_total(p: &PAParams, cutoff: u64) -> Result<f64> {
    let m = p.m as u64;
    let d = p.delta_f();
    let r = d / p.m as f64;
    let mut pk = degree_law_pmf(p, m)?;
    let mut s = CompensatedSum::default();
    for k in m..cutoff.max(m) {
        s.add(pk);
        let kf = k as f64;
        pk *= (kf + d) / (kf + 3.0 + d + r);
    }
    s.add(degree_law_tail(p, cutoff.max(m))?);
    Ok(s.value())
}

/// Unique root in `(0, 1)` of `g + (1+delta)(1 + ln g) = 0`, by bisection.
pub fn gamma_root(delta: f64) -> Result<f64> {
    if delta <= -1.0 || !delta.is_finite() {
        return Err(Error::InvalidParams(format!("gamma root needs delta > -1, got {delta}")));
    }
    let f = |g: f64| g + (1.0 + delta) * (1.0 + g.ln());
    let (mut lo, mut hi) = (1e-9, 1.0);
    if f(lo) > 0.0 {
        return Err(Error::OutOfRange(format!("gamma root below 1e-9 for delta={delta}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn gamma_residual(delta: f64, g: f64) -> f64 {
    g + (1.0 + delta) * (1.0 + g.ln())
}

/// `C_{a,b} = 1/(b-a) + 2/(1-a-b)`.
pub fn fk_bound_constant(a: f64, b: f64) -> Result<f64> {
    if !(0.0 < a && a < b && a + b < 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < a < b and a + b < 1, got a={a}, b={b}")));
    }
    Ok(1.0 / (b - a) + 2.0 / (1.0 - a - b))
}

/// Largest `s_max` accepted by [`fk_bruteforce`].
pub const FK_MAX_SMAX: u64 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkValue {
    /// Exact sum over intermediate vertices in `[s_max]`.
    pub truncated: f64,
    /// Upper bound on the contribution of vectors with some `s_l > s_max`.
    pub tail: f64,
}

impl FkValue {
    pub fn upper(&self) -> f64 {
        self.truncated + self.tail
    }
}

/// Path weights `1/((s ^ s')^a (s v s')^{1-a})` on `[n]`, reused across `(i, t)`.
#[derive(Clone, Debug)]
pub struct FkTable {
    a: f64,
    n: usize,
    w: Vec<f64>,
}

impl FkTable {
    pub fn new(a: f64, s_max: u64) -> Result<FkTable> {
        if !(0.0 < a && a < 0.5) {
            return Err(Error::InvalidParams(format!("f_k needs a in (0, 1/2), got {a}")));
        }
        if s_max > FK_MAX_SMAX {
            return Err(Error::Budget(format!("s_max={s_max} exceeds {FK_MAX_SMAX}")));
        }
        let n = s_max as usize;
        let mut w = vec![0.0; (n + 1) * (n + 1)];
        for x in 1..=n {
            for y in 1..=n {
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                w[x * (n + 1) + y] = 1.0 / ((lo as f64).powf(a) * (hi as f64).powf(1.0 - a));
            }
        }
        Ok(FkTable { a, n, w })
    }

    #[inline]
    fn w(&self, x: usize, y: usize) -> f64 {
        self.w[x * (self.n + 1) + y]
    }

    /// `f_k(i, t)` for `k <= 3`, with `i, t <= s_max`.
    pub fn eval(&self, i: u64, t: u64, k: u32) -> Result<FkValue> {
        let (i, t, n) = (i as usize, t as usize, self.n);
        if i == 0 || t == 0 || i > n || t > n || i == t {
            return Err(Error::OutOfRange(format!("need distinct 1 <= i, t <= s_max={n}")));
        }
        let a = self.a;
        let p = 2.0 - 2.0 * a;
        let sf = n as f64;
        let (fi, ft) = (i as f64, t as f64);
        let free = |s: usize| s != i && s != t;
        match k {
            1 => Ok(FkValue {
                truncated: self.w(i, t),
                tail: 0.0,
            }),
            2 => {
                let truncated: CompensatedSum = (1..=n).filter(|&s| free(s)).map(|s| self.w(i, s) * self.w(s, t)).collect();
                let tail = (fi * ft).powf(-a) * sf.powf(1.0 - p) / (p - 1.0);
                Ok(FkValue {
                    truncated: truncated.value(),
                    tail,
                })
            }
            3 => {
                let mut truncated = CompensatedSum::default();
                let mut mixed = CompensatedSum::default();
                for s1 in (1..=n).filter(|&s| free(s)) {
                    let w1 = self.w(i, s1);
                    let inner: f64 = (1..=n)
                        .filter(|&s2| free(s2) && s2 != s1)
                        .map(|s2| self.w(s1, s2) * self.w(s2, t))
                        .sum();
                    truncated.add(w1 * inner);
                    mixed.add(w1 * (s1 as f64).powf(-a));
                }
                // s1 <= s_max < s2
                let tail_mixed = mixed.value() * ft.powf(-a) * sf.powf(1.0 - p) / (p - 1.0);
                // s1 > s_max, any s2
                let a_t: f64 = (1..=t).map(|s| (s as f64).powf(-2.0 * a)).sum();
                let c1 = ft.powf(-(1.0 - a)) * a_t + ft.powf(-a) / (1.0 - 2.0 * a);
                let int = sf.powf(1.0 - p) * (c1 / (p - 1.0) + ft.powf(-a) * ((sf / ft).ln() / (p - 1.0) + 1.0 / (p - 1.0).powi(2)));
                let tail_far = fi.powf(-a) * int;
                Ok(FkValue {
                    truncated: truncated.value(),
                    tail: tail_mixed + tail_far,
                })
            }
            _ => Err(Error::Budget(format!("f_k brute force supports k <= 3, got {k}"))),
        }
    }
}

/// `f_k(i, t)` over self-avoiding vectors with intermediates in `[s_max]`,
/// reported with an analytic bound on the remaining terms.
pub fn fk_bruteforce(a: f64, i: u64, t: u64, k: u32, s_max: u64) -> Result<FkValue> {
    FkTable::new(a, s_max)?.eval(i, t, k)
}

/// `C_{a,b}^k / (i^b t^{1-b})`.
pub fn fk_upper_bound(a: f64, b: f64, i: u64, t: u64, k: u32) -> Result<f64> {
    Ok(fk_bound_constant(a, b)?.powi(k as i32) / ((i as f64).powf(b) * (t as f64).powf(1.0 - b)))
}

/// The constant `C_j` of the degree tail bound.
pub fn degree_bound_cj(p: &PAParams, j: u64) -> Result<f64> {
    let m = p.m as u64;
    let d = p.delta_f();
    if j < m {
        return Err(Error::OutOfRange(format!("C_j needs j >= m={m}")));
    }
    match (p.variant, p.m) {
        (Variant::C, _) => {
            let mut c = 1.0;
            for jj in (m + 1)..=j {
                c *= (jj as f64 - 1.0 + d) / (jj - m) as f64;
            }
            Ok(c)
        }
        (_, 1) => {
            let jf = j as f64;
            Ok((ln_gamma(jf + d) - ln_gamma(jf) - ln_gamma(1.0 + d)).exp())
        }
        _ => Err(Error::InvalidParams(
            "degree tail bound is stated for models a, b with m=1 and model c".into(),
        )),
    }
}

/// Upper bound `C_j G(t-a1) G(i+a2) / (G(t+a2) G(i-a1))` on the probability that
/// vertex `i` has degree `j` at time `t`; `(a1, a2) = (0, Delta)` for model a
/// and `(Delta, 0)` otherwise, `Delta = (m+delta)/(2m+delta)`.
pub fn degree_tail_bound(p: &PAParams, i: u64, t: u64, j: u64) -> Result<f64> {
    if i == 0 || i > t {
        return Err(Error::OutOfRange(format!("need 1 <= i <= t, got i={i}, t={t}")));
    }
    let cj = degree_bound_cj(p, j)?;
    let big = p.big_delta();
    let (a1, a2) = match p.variant {
        Variant::A => (0.0, big),
        _ => (big, 0.0),
    };
    let (fi, ft) = (i as f64, t as f64);
    let ln = ln_gamma(ft - a1) + ln_gamma(fi + a2) - ln_gamma(ft + a2) - ln_gamma(fi - a1);
    Ok(cj * ln.exp())
}

/// Lower bound on the expected number of proper k-exploration trees rooted in
/// `(t, 2t]`, evaluated in log space.
pub fn ez_lower_bound(p: &PAParams, t: u64, k: u32) -> Result<f64> {
    Ok(ez_lower_bound_ln(p, t, k)?.exp())
}

pub fn ez_lower_bound_ln(p: &PAParams, t: u64, k: u32) -> Result<f64> {
    if p.m < 2 {
        return Err(Error::InvalidParams("proper-tree bound needs m >= 2".into()));
    }
    let m = p.m as f64;
    let leaves = m.powi(k as i32 + 1);
    let tf = t as f64;
    if p.m_delta() * leaves > tf {
        return Err(Error::InvalidParams(format!(
            "bound needs m_delta * m^(k+1) <= t ({} > {t})",
            p.m_delta() * leaves
        )));
    }
    let amd = p.a_md();
    Ok(tf.ln() - amd.ln() + leaves * (amd / leaves).ln() + m * tf * (-p.m_delta() * leaves / tf).ln_1p())
}

/// Starting ball counts of the two-colour urn: `(m(2+d'), m(t-2)(2+d'))`.
pub fn urn_initial(p: &PAParams, t: u64) -> Result<(f64, f64, f64)> {
    if t < 3 {
        return Err(Error::InvalidParams("urn needs t >= 3".into()));
    }
    let w = 2.0 + p.delta_prime().value();
    let m = p.m as f64;
    Ok((m * w, m * (t as f64 - 2.0) * w, w))
}

/// Exact law of the red-draw count after `mt` draws, by dynamic programming over
/// the urn state. The red count is `S_1(mt)/(2+d') - m`, i.e. the initial `m`
/// red units are not counted.
pub fn urn_exact_pmf(p: &PAParams, t: u64) -> Result<Vec<f64>> {
    let (s1, s2, w) = urn_initial(p, t)?;
    let n = (p.m as u64 * t) as usize;
    let mut probs = vec![0.0; n + 1];
    probs[0] = 1.0;
    for step in 0..n {
        let total = s1 + s2 + step as f64 * w;
        for r in (0..=step).rev() {
            let pr = probs[r];
            if pr == 0.0 {
                continue;
            }
            let red = (s1 + r as f64 * w) / total;
            probs[r + 1] += pr * red;
            probs[r] = pr * (1.0 - red);
        }
    }
    Ok(probs)
}

/// Monte Carlo of the same urn: frequencies of the red-draw count.
pub fn polya_urn(p: &PAParams, t: u64, reps: u64, seed: u64) -> Result<Vec<f64>> {
    let (s1, s2, w) = urn_initial(p, t)?;
    let n = (p.m as u64 * t) as usize;
    let mut counts = vec![0u64; n + 1];
    let mut rng = replicate_rng(seed, 0x75726e);
    for _ in 0..reps {
        let (mut red, mut total) = (s1, s1 + s2);
        let mut r = 0;
        for _ in 0..n {
            if rng.random::<f64>() * total < red {
                red += w;
                r += 1;
            }
            total += w;
        }
        counts[r] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / reps as f64).collect())
}

/// Beta-binomial pmf from the exchangeable product form
/// `C(n,k) prod_{i<k}(a+i) prod_{j<n-k}(b+j) / prod_{l<n}(a+b+l)`.
pub fn beta_binomial_pmf(n: u64, alpha: f64, beta: f64, k: u64) -> Result<f64> {
    if k > n || alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "beta-binomial needs k <= n and alpha, beta > 0 (n={n}, k={k}, alpha={alpha}, beta={beta})"
        )));
    }
    let mut ln = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    for i in 0..k {
        ln += (alpha + i as f64).ln();
    }
    for j in 0..(n - k) {
        ln += (beta + j as f64).ln();
    }
    for l in 0..n {
        ln -= (alpha + beta + l as f64).ln();
    }
    Ok(ln.exp())
}

/// Probability of one red/black draw sequence (`true` = red) in a Pólya urn with
/// integer weights `alpha`, `beta`.
pub fn urn_sequence_probability(alpha: u64, beta: u64, seq: &[bool]) -> BigRational {
    let (mut red, mut black) = (alpha, beta);
    let mut prob = BigRational::one();
    for &is_red in seq {
        let total = BigInt::from(red + black);
        if is_red {
            prob *= BigRational::new(BigInt::from(red), total);
            red += 1;
        } else {
            prob *= BigRational::new(BigInt::from(black), total);
            black += 1;
        }
    }
    prob
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultinomialSample {
    /// Trials that landed in some edge cell.
    pub hits: u64,
    /// Number of distinct non-empty cells.
    pub edges: u64,
}

/// `trials` trials, each in one of `cells` cells with probability `q` or in the
/// overflow cell; an edge is present iff its cell is non-empty.
pub fn multinomial_graph(cells: u64, q: f64, trials: u64, seed: u64) -> Result<MultinomialSample> {
    if !(0.0..=1.0).contains(&q) || cells as f64 * q > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(format!(
            "cell probabilities overflow: cells * q = {}",
            cells as f64 * q
        )));
    }
    let mut rng = replicate_rng(seed, 0x6d756c);
    let hit = (cells as f64 * q).min(1.0);
    let hits = if hit == 0.0 {
        0
    } else {
        Binomial::new(trials, hit)
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .sample(&mut rng)
    };
    let mut landed: Vec<u64> = (0..hits).map(|_| rng.random_range(0..cells)).collect();
    landed.sort_unstable();
    landed.dedup();
    Ok(MultinomialSample {
        hits,
        edges: landed.len() as u64,
    })
}

/// `E[M] = cells (1 - (1-q)^trials)`.
pub fn multinomial_mean_edges(cells: u64, q: f64, trials: u64) -> f64 {
    -(cells as f64) * (trials as f64 * (-q).ln_1p()).exp_m1()
}

/// Layer thresholds `u_k`, by recursion and by closed form.
#[derive(Clone, Debug, Serialize)]
pub struct LayerThresholds {
    pub tau: f64,
    pub t: f64,
    pub d: f64,
    pub recursion: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub k_star: u32,
}

impl LayerThresholds {
    /// Largest relative difference between the two evaluations.
    pub fn max_rel_error(&self) -> f64 {
        self.recursion
            .iter()
            .zip(&self.closed_form)
            .map(|(r, c)| ((r - c) / c).abs())
            .fold(0.0, f64::max)
    }
}

/// `u_1 = t^{1/(2(tau-1))} (ln t)^{-1/2}` and `u_k = D ln t u_{k-1}^{tau-2}` for
/// `k = 1..=k_max`, alongside `D^{a_k} (ln t)^{b_k} t^{c_k}`.
pub fn layer_thresholds(tau: f64, t: f64, d: f64, k_max: u32) -> Result<LayerThresholds> {
    if !(tau > 2.0 && tau < 3.0) {
        return Err(Error::InvalidParams(format!("layers need tau in (2, 3), got {tau}")));
    }
    if d <= 0.0 || t <= std::f64::consts::E {
        return Err(Error::InvalidParams("layers need D > 0 and t > e".into()));
    }
    let lt = t.ln();
    let mut recursion = Vec::with_capacity(k_max as usize);
    let mut closed_form = Vec::with_capacity(k_max as usize);
    let mut u = u1(tau, t);
    let r = tau - 2.0;
    for k in 1..=k_max {
        if k > 1 {
            u = d * lt * u.powf(r);
        }
        recursion.push(u);
        let (ak, bk, ck) = layer_exponents(tau, k);
        closed_form.push(d.powf(ak) * lt.powf(bk) * t.powf(ck));
    }
    Ok(LayerThresholds {
        tau,
        t,
        d,
        recursion,
        closed_form,
        k_star: k_star(tau, t),
    })
}

/// `(a_k, b_k, c_k)` with `a_k = (1-(tau-2)^{k-1})/(3-tau)`,
/// `b_k = a_k - (tau-2)^{k-1}/2`, `c_k = (tau-2)^{k-1}/(2(tau-1))`.
pub fn layer_exponents(tau: f64, k: u32) -> (f64, f64, f64) {
    let r = (tau - 2.0).powi(k as i32 - 1);
    let ak = (1.0 - r) / (3.0 - tau);
    (ak, ak - 0.5 * r, r / (2.0 * (tau - 1.0)))
}
