//! The per-configuration drift bounds on small instances, checked over
//! every configuration.

use lazydyn::analysis::{exact_drift, general_drift_identity_check};
use lazydyn::{ActivationSchedule, Belief, Configuration, GameInstance, Graph, ResponseRule};

fn all_configs(inst: &GameInstance) -> impl Iterator<Item = Configuration> + '_ {
    let counts = inst.strategy_counts().to_vec();
    let total: usize = counts.iter().product();
    (0..total).map(move |mut i| {
        Configuration::new(
            counts
                .iter()
                .map(|&k| {
                    let s = i % k;
                    i /= k;
                    s
                })
                .collect(),
        )
    })
}

fn check(inst: &GameInstance, schedule: &ActivationSchedule) -> usize {
    let mut checked = 0;
    for c in all_configs(inst) {
        let r = exact_drift(inst, &c, schedule, ResponseRule::Best).unwrap();
        if r.equilibrium {
            assert_eq!(r.drift, 0.0);
            continue;
        }
        let b = r.bound.expect("in-window schedule has a bound");
        assert!(r.drift <= b.bound + 1e-12, "{c}: {} > {}", r.drift, b.bound);
        checked += 1;
    }
    checked
}

#[test]
fn max_degree_bound_on_grid_and_star() {
    for g in [Graph::grid(3, 3).unwrap(), Graph::star(6).unwrap()] {
        let inst = GameInstance::symmetric_coordination(g);
        for (p, q) in [(0.3, 0.6), (0.5, 0.95)] {
            assert!(check(&inst, &ActivationSchedule::max_degree(p).with_window(p, q)) > 0);
            assert!(check(&inst, &ActivationSchedule::neighborhood_max(p, q)) > 0);
        }
    }
}

#[test]
fn adaptive_and_local_degree_bounds() {
    let inst = GameInstance::symmetric_coordination(Graph::grid(3, 3).unwrap());
    for alpha in [0.1, 0.3, 0.45] {
        check(&inst, &ActivationSchedule::adaptive(alpha));
        check(&inst, &ActivationSchedule::local_degree(alpha));
    }
}

#[test]
fn general_bound_on_opinion_cycle() {
    let g = Graph::cycle(4).unwrap();
    for bits in 0..16usize {
        let beliefs: Vec<Belief> = (0..4)
            .map(|i| {
                if bits >> i & 1 == 1 {
                    Belief::ThreeQuarters
                } else {
                    Belief::Quarter
                }
            })
            .collect();
        let inst = GameInstance::opinion_game(&g, &beliefs).unwrap();
        check(
            &inst,
            &ActivationSchedule::potential_weighted(0.3).with_window(0.3, 0.3),
        );
    }
}

#[test]
fn interaction_terms_stay_below_twice_edge_maximum() {
    let g = Graph::clique(4).unwrap();
    let inst = GameInstance::opinion_game(
        &g,
        &[
            Belief::Quarter,
            Belief::ThreeQuarters,
            Belief::Quarter,
            Belief::Quarter,
        ],
    )
    .unwrap();
    let mut seen = 0;
    for c in all_configs(&inst) {
        for (u, v) in g.edges() {
            if inst.is_unstable(&c, u) && inst.is_unstable(&c, v) {
                let value = general_drift_identity_check(&inst, &c, u, v).unwrap();
                assert!(value <= 2 * inst.edge_game(u, v).unwrap().max_value());
                assert_eq!(
                    value,
                    general_drift_identity_check(&inst, &c, v, u).unwrap()
                );
                seen += 1;
            }
        }
    }
    assert!(seen > 0);
}
