use palab_core::{collapse, generate, Delta, PAGraph, PAParams, Variant};
use proptest::prelude::*;

fn any_params() -> impl Strategy<Value = PAParams> {
    (0..3usize, 1u32..5, -40i64..60, 1u64..5).prop_filter_map("delta out of range", |(v, m, num, den)| {
        let variant = [Variant::A, Variant::B, Variant::C][v];
        PAParams::new(variant, m, Delta::ratio(num, den).ok()?).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degrees_are_conserved_and_reconstructible(p in any_params(), t in 2u64..400, seed in any::<u64>()) {
        let g = generate(p, t, seed).unwrap();
        let m = p.m as u64;
        prop_assert_eq!(g.degrees().iter().sum::<u64>(), 2 * m * t);
        prop_assert_eq!(g.targets_raw().len() as u64, m * t);
        // from_log recomputes degrees from the event log and checks every invariant.
        let rebuilt = PAGraph::from_log(p, g.targets_raw().to_vec(), g.meta().clone()).unwrap();
        prop_assert_eq!(rebuilt.degrees(), g.degrees());
        for s in [t / 2, t] {
            let s = s.max(p.initial_time());
            let total: u64 = (1..=s as u32).map(|i| g.degree(i, s).unwrap()).sum();
            prop_assert_eq!(total, 2 * m * s);
        }
    }

    #[test]
    fn targets_never_point_forward(p in any_params(), t in 2u64..300, seed in any::<u64>()) {
        let g = generate(p, t, seed).unwrap();
        let init = p.initial_time();
        for v in (init + 1)..=t {
            for j in 1..=p.m {
                let target = g.target(v as u32, j).unwrap();
                prop_assert!(target >= 1 && target as u64 <= v);
                if target as u64 == v {
                    prop_assert!(p.variant == Variant::A || (p.variant == Variant::B && p.m > 1));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_graph(p in any_params(), t in 2u64..200, seed in any::<u64>()) {
        prop_assert_eq!(generate(p, t, seed).unwrap(), generate(p, t, seed).unwrap());
    }

    #[test]
    fn collapsing_sums_blocks(m in 2u32..5, num in -4i64..12, t in 2u64..120, seed in any::<u64>()) {
        let Ok(p) = PAParams::new(Variant::B, m, Delta::ratio(num, 4).unwrap()) else { return Ok(()); };
        let g1 = generate(p.single_edge_process(), m as u64 * t, seed).unwrap();
        let g = collapse(&g1, p).unwrap();
        prop_assert_eq!(g.t(), t);
        for i in 0..t as usize {
            let block: u64 = g1.degrees()[i * m as usize..(i + 1) * m as usize].iter().sum();
            prop_assert_eq!(g.degrees()[i], block);
        }
        prop_assert_eq!(&g, &generate(p, t, seed).unwrap());
    }
}

#[test]
fn birth_degrees() {
    let p = PAParams::new(Variant::C, 3, Delta::ZERO).unwrap();
    let g = generate(p, 50, 2).unwrap();
    assert_eq!(g.degree(1, 1).unwrap(), g.degree(1, 2).unwrap());
    assert_eq!(g.degree(2, 2).unwrap(), 6);
    for i in 3..=50 {
        assert_eq!(g.degree(i, i as u64).unwrap(), 3);
    }
    let a = PAParams::new(Variant::A, 1, Delta::integer(5)).unwrap();
    assert_eq!(generate(a, 10, 1).unwrap().degree(1, 1).unwrap(), 2);
    assert!(g.degree(0, 3).is_err());
    assert!(g.degree(7, 51).is_err());
}
