use lazydyn::analysis::{drift_closed_form, exact_drift, EdgeClasses};
use lazydyn::game::normalize_tables;
use lazydyn::rng::rng_from_seed;
use lazydyn::{ActivationSchedule, Configuration, GameInstance, Graph, ResponseRule, Simulation};
use proptest::prelude::*;

/// Random connected-ish graph on `n` nodes from an edge bitmask.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |mask| {
            let edges = pairs.iter().zip(&mask).filter(|(_, &m)| m).map(|(&e, _)| e);
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

/// Random integral tables with up to three strategies per node.
fn instance_strategy() -> impl Strategy<Value = (GameInstance, Configuration)> {
    graph_strategy(6).prop_flat_map(|g| {
        let n = g.node_count();
        proptest::collection::vec(1usize..=3, n).prop_flat_map(move |counts| {
            let g = g.clone();
            let edges: Vec<(usize, usize)> = g.edges().collect();
            let tables = edges
                .iter()
                .map(|&(u, v)| proptest::collection::vec(0i64..6, counts[u] * counts[v]))
                .collect::<Vec<_>>();
            let config = counts.iter().map(|&k| 0..k).collect::<Vec<_>>();
            (tables, config).prop_map(move |(flat, config)| {
                let inst = GameInstance::from_potential_tables(
                    g.clone(),
                    counts.clone(),
                    edges.iter().zip(&flat).map(|(&(u, v), t)| {
                        let rows = t
                            .chunks(counts[v])
                            .map(|r| r.iter().map(|&x| x as f64).collect())
                            .collect();
                        ((u, v), rows)
                    }),
                )
                .unwrap();
                (inst, Configuration::new(config))
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gains_equal_potential_drops((inst, c) in instance_strategy()) {
        let before = inst.total_potential(&c);
        for u in 0..inst.node_count() {
            for s in 0..inst.strategy_count(u) {
                let mut d = c.clone();
                d.set(u, s);
                prop_assert_eq!(inst.payoff_gain(&c, u, s), before - inst.total_potential(&d));
            }
        }
    }

    #[test]
    fn enumeration_equals_linearity((inst, c) in instance_strategy(), alpha in 0.05f64..0.5) {
        let s = ActivationSchedule::potential_weighted(alpha);
        let e = exact_drift(&inst, &c, &s, ResponseRule::Best).unwrap();
        let f = drift_closed_form(&inst, &c, &s, ResponseRule::Best).unwrap();
        prop_assert!((e.drift - f).abs() < 1e-9);
    }

    #[test]
    fn engine_tracks_recomputation((inst, c) in instance_strategy(), seed in any::<u64>()) {
        let sim = Simulation::new(&inst, ActivationSchedule::constant(0.5), ResponseRule::BetterLowest).unwrap();
        let mut state = sim.start(c).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..30 {
            let before = state.potential();
            let report = sim.step(&mut state, &mut rng);
            prop_assert_eq!(state.potential(), inst.total_potential(state.config()));
            prop_assert_eq!(state.unstable().to_vec(), inst.unstable_set(state.config()));
            prop_assert_eq!(report.potential_delta, state.potential() - before);
            if let Some(g) = report.single_move_gain {
                prop_assert!(g >= 1);
                prop_assert_eq!(report.potential_delta, -g);
            }
        }
    }

    #[test]
    fn normalization_keeps_responses(
        raw in proptest::collection::vec(-8i32..8, 9),
        den in 1u32..7,
        cu in 0usize..3,
        cv in 0usize..3,
    ) {
        let table: Vec<Vec<f64>> = raw.chunks(3).map(|r| r.iter().map(|&x| x as f64 / den as f64).collect()).collect();
        let out = normalize_tables(std::slice::from_ref(&table)).unwrap();
        prop_assert!(out.exact);
        let t = &out.tables[0];
        prop_assert!(t.iter().flatten().all(|&x| x >= 0));
        // pairwise differences scale uniformly, so every comparison survives
        for a in 0..3 {
            for b in 0..3 {
                let raw_diff = table[a][cv] - table[b][cv];
                let int_diff = (t[a][cv] - t[b][cv]) as f64;
                prop_assert!((raw_diff * out.scale as f64 - int_diff).abs() < 1e-6);
                let raw_col = table[cu][a] - table[cu][b];
                let int_col = (t[cu][a] - t[cu][b]) as f64;
                prop_assert_eq!(raw_col.partial_cmp(&0.0), int_col.partial_cmp(&0.0));
            }
        }
    }

    #[test]
    fn graph_invariants(g in graph_strategy(12)) {
        let degree_sum: usize = g.degrees().iter().sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        for u in 0..g.node_count() {
            prop_assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
            for &v in g.neighbors(u) {
                prop_assert!(v != u && g.has_edge(v, u));
                prop_assert!(g.nbhd_max_degree(u) >= g.degree(v));
            }
            prop_assert!(g.max_degree() >= g.nbhd_max_degree(u));
        }
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.edge_count(), g.edge_count());
    }

    #[test]
    fn erdos_renyi_is_seed_determined(n in 1usize..40, p in 0.0f64..=1.0, seed in any::<u64>()) {
        prop_assert_eq!(Graph::erdos_renyi(n, p, seed).unwrap(), Graph::erdos_renyi(n, p, seed).unwrap());
    }

    #[test]
    fn conflict_classes_partition(g in graph_strategy(10), bits in any::<u16>()) {
        let n = g.node_count();
        let inst = GameInstance::symmetric_coordination(g);
        let c = Configuration::new((0..n).map(|i| (bits as usize >> i) & 1).collect());
        let e = EdgeClasses::of(&inst, &c);
        prop_assert_eq!(e.c1 + e.c2 + e.stable_conflicts, inst.conflicting_edges(&c));
        prop_assert_eq!(inst.total_potential(&c) as usize, inst.conflicting_edges(&c));
    }
}
