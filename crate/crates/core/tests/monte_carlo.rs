use std::collections::{BTreeMap, HashMap};

use palab_core::enumeration::{enumerate, Probability};
use palab_core::metrics::exact_diameter;
use palab_core::{generate, Delta, Execution, PAParams, Variant};

fn params(v: Variant, m: u32, d: &str) -> PAParams {
    PAParams::new(v, m, Delta::parse(d).unwrap()).unwrap()
}

/// Total variation between simulated full event logs and the exact outcome table.
fn log_tv(p: PAParams, horizon: u32, runs: u64) -> f64 {
    let dist = enumerate(p, horizon).unwrap();
    let mut freq: HashMap<Vec<u32>, u64> = HashMap::new();
    for seed in 0..runs {
        let g = generate(p, horizon as u64, seed).unwrap();
        *freq.entry(g.targets_raw().to_vec()).or_default() += 1;
    }
    let mut tv = 0.0;
    let mut seen = 0;
    for k in 0..dist.len() {
        let f = freq.get(dist.log(k)).copied().unwrap_or(0);
        seen += f;
        tv += (f as f64 / runs as f64 - dist.prob_f64(k)).abs();
    }
    assert_eq!(seen, runs, "{p}: simulated an outcome outside the table");
    tv / 2.0
}

#[test]
fn simulated_logs_follow_the_exact_law() {
    for (p, horizon) in [
        (params(Variant::A, 1, "0"), 4),
        (params(Variant::B, 1, "-1/2"), 5),
        (params(Variant::C, 1, "1"), 5),
        (params(Variant::C, 2, "-1"), 4),
        (params(Variant::B, 2, "0"), 3),
    ] {
        let tv = log_tv(p, horizon, 100_000);
        assert!(tv <= 0.01, "{p} T={horizon}: TV {tv}");
    }
}

#[test]
fn model_a_second_vertex_self_loop_frequency() {
    // Vertex 2 sees weight 2+delta on vertex 1 and 1+delta on itself.
    for (d, exact) in [("0", 1.0 / 3.0), ("1", 2.0 / 5.0), ("-1/2", 1.0 / 4.0)] {
        let p = params(Variant::A, 1, d);
        let runs = 100_000u64;
        let loops = (0..runs).filter(|&s| generate(p, 2, s).unwrap().target(2, 1).unwrap() == 2).count();
        let f = loops as f64 / runs as f64;
        let sd = (exact * (1.0 - exact) / runs as f64).sqrt();
        assert!((f - exact).abs() <= 4.0 * sd, "delta={d}: {f} vs {exact}");
    }
}

#[test]
fn model_c_edges_of_one_vertex_are_independent() {
    let p = params(Variant::C, 2, "0");
    // Exactly: the first random vertex attaches both edges independently.
    let dist = enumerate(p, 3).unwrap();
    let joint = dist.law_of(|log| (log[4], log[5]));
    let first = dist.law_of(|log| log[4]);
    for ((a, b), pr) in &joint {
        let prod = first[a].exact().unwrap() * first[b].exact().unwrap();
        assert_eq!(pr.exact().unwrap(), &prod);
    }
    // Simulated pair law of vertex 4 against the exact joint law.
    let runs = 200_000u64;
    let mut table = [[0f64; 3]; 3];
    for seed in 0..runs {
        let g = generate(p, 4, seed).unwrap();
        table[g.target(4, 1).unwrap() as usize - 1][g.target(4, 2).unwrap() as usize - 1] += 1.0;
    }
    let exact4 = enumerate(p, 4).unwrap();
    let law = exact4.law_of(|log| (log[6], log[7]));
    let mut chi2 = 0.0;
    for ((a, b), pr) in &law {
        let expected = pr.value() * runs as f64;
        chi2 += (table[*a as usize][*b as usize] - expected).powi(2) / expected;
    }
    // 8 degrees of freedom, upper 0.1% point 26.12.
    assert!(chi2 < 26.12, "chi-square {chi2}");
}

#[test]
fn leaf_fraction_matches_two_thirds() {
    let p = params(Variant::B, 1, "0");
    let t = 100_000u64;
    let mut total = 0.0;
    for seed in 0..5 {
        let g = generate(p, t, seed).unwrap();
        total += g.degrees().iter().filter(|&&d| d == 1).count() as f64 / t as f64;
    }
    let mean = total / 5.0;
    assert!((mean - 2.0 / 3.0).abs() < 0.005, "N_1/t = {mean}");
}

#[test]
fn bfs_diameter_law_agrees_with_floyd_warshall() {
    for (p, horizon) in [(params(Variant::A, 1, "0"), 6), (params(Variant::C, 2, "0"), 5), (params(Variant::B, 1, "1"), 6)] {
        let dist = enumerate(p, horizon).unwrap();
        let reference = dist.exact_diameter_law();
        let mut ours: BTreeMap<u32, f64> = BTreeMap::new();
        for k in 0..dist.len() {
            let d = exact_diameter(dist.graph(k).adjacency(), Execution::Sequential);
            *ours.entry(d.lower).or_default() += dist.prob_f64(k);
        }
        assert_eq!(ours.keys().collect::<Vec<_>>(), reference.keys().collect::<Vec<_>>(), "{p}");
        for (d, pr) in &reference {
            assert!((ours[d] - pr.value()).abs() < 1e-12, "{p} diam={d}");
        }
        assert!(matches!(reference.values().next(), Some(Probability::Exact(_))));
    }
}
