//! Sequential dynamics on the tightness network: black spreads from the
//! clique one path at a time, and only the two ends of the current white
//! sub-path are ever unstable.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::game::{Configuration, GameInstance};
use crate::graph::Graph;
use crate::rng::{rng_from_seed, SimRng};

const BLACK: usize = 0;
const WHITE: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierReport {
    pub initial_unstable: Vec<usize>,
    pub total_flips: usize,
    /// Parts in the order they became fully black.
    pub completion_order: Vec<usize>,
    /// Largest unstable set seen before the last part first became unstable.
    pub max_unstable_before_last: usize,
    /// Move orders checked: lowest id first plus the random ones.
    pub orders_checked: usize,
}

/// Checks with the lowest-id order and five random orders.
pub fn frontier_check(
    graph: &Graph,
    init: &[usize],
    part_labels: &[usize],
) -> Result<FrontierReport, AnalysisError> {
    frontier_check_with(graph, init, part_labels, 5, 0)
}

pub fn frontier_check_with(
    graph: &Graph,
    init: &[usize],
    part_labels: &[usize],
    random_orders: usize,
    seed: u64,
) -> Result<FrontierReport, AnalysisError> {
    let n = graph.node_count();
    if init.len() != n || part_labels.len() != n {
        return Err(AnalysisError::InvalidParameter(
            "init and part labels must cover every node".into(),
        ));
    }
    let instance = GameInstance::symmetric_coordination(graph.clone());
    let mut report = run_order(&instance, init, part_labels, None)?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..random_orders {
        let other = run_order(&instance, init, part_labels, Some(&mut rng))?;
        if other.total_flips != report.total_flips
            || other.completion_order != report.completion_order
        {
            return Err(AnalysisError::Frontier(
                "move order changed the outcome".into(),
            ));
        }
        report.max_unstable_before_last = report
            .max_unstable_before_last
            .max(other.max_unstable_before_last);
    }
    report.orders_checked = 1 + random_orders;
    Ok(report)
}

fn run_order(
    instance: &GameInstance,
    init: &[usize],
    labels: &[usize],
    mut rng: Option<&mut SimRng>,
) -> Result<FrontierReport, AnalysisError> {
    let fail = |msg: String| Err(AnalysisError::Frontier(msg));
    let graph = instance.graph();
    let last = labels.iter().copied().max().unwrap_or(0);
    let mut config = Configuration::new(init.to_vec());
    instance.validate_config(&config)?;

    let initial_unstable = instance.unstable_set(&config);
    let is_part1_end = |u: usize| {
        labels[u] == 1
            && graph
                .neighbors(u)
                .iter()
                .filter(|&&v| labels[v] == 1)
                .count()
                <= 1
    };
    if initial_unstable.len() != 2 || !initial_unstable.iter().all(|&u| is_part1_end(u)) {
        return fail(format!(
            "initially unstable {initial_unstable:?}, expected the two ends of part 1"
        ));
    }

    let mut white_left: Vec<usize> = vec![0; last + 1];
    for (u, &l) in labels.iter().enumerate() {
        if config.get(u) == WHITE {
            white_left[l] += 1;
        }
    }
    let path_nodes = labels.iter().filter(|&&l| l > 0).count();
    let mut completion_order = Vec::new();
    let mut flips = 0;
    let mut last_seen = false;
    let mut max_before_last = 0;
    loop {
        let unstable = instance.unstable_set(&config);
        if unstable.is_empty() {
            break;
        }
        last_seen |= unstable.iter().any(|&u| labels[u] == last);
        if !last_seen {
            max_before_last = max_before_last.max(unstable.len());
            if unstable.len() > 2 {
                return fail(format!(
                    "{} unstable nodes before the last part moved",
                    unstable.len()
                ));
            }
        }
        let u = match rng.as_deref_mut() {
            Some(r) => *unstable.choose(r).expect("non-empty"),
            None => unstable[0],
        };
        let frontier = white_left.iter().position(|&w| w > 0);
        if config.get(u) != WHITE || Some(labels[u]) != frontier {
            return fail(format!(
                "node {u} of part {} moved while part {frontier:?} was incomplete",
                labels[u]
            ));
        }
        config.set(u, instance.best_response(&config, u));
        if config.get(u) != BLACK {
            return fail(format!("node {u} did not turn black"));
        }
        flips += 1;
        white_left[labels[u]] -= 1;
        if white_left[labels[u]] == 0 {
            completion_order.push(labels[u]);
        }
        if flips > path_nodes {
            return fail("more flips than path nodes".into());
        }
    }
    if flips != path_nodes || config.as_slice().iter().any(|&c| c != BLACK) {
        return fail(format!("{flips} flips for {path_nodes} path nodes"));
    }
    if completion_order != (1..=last).collect::<Vec<_>>() {
        return fail(format!("parts completed in order {completion_order:?}"));
    }
    Ok(FrontierReport {
        initial_unstable,
        total_flips: flips,
        completion_order,
        max_unstable_before_last: max_before_last,
        orders_checked: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tightness_network;

    #[test]
    fn small_networks_pass() {
        let t = tightness_network(4).unwrap();
        let r = frontier_check(&t.graph, &t.initial, &t.part_labels).unwrap();
        assert_eq!(r.total_flips, 5);
        assert_eq!(r.initial_unstable, vec![4, 6]);

        let t = tightness_network(8).unwrap();
        let r = frontier_check(&t.graph, &t.initial, &t.part_labels).unwrap();
        assert_eq!(r.completion_order, (1..=6).collect::<Vec<_>>());
        assert!(r.max_unstable_before_last <= 2);
    }

    #[test]
    fn plain_path_rejected() {
        let g = Graph::path(5).unwrap();
        let err = frontier_check(&g, &[1; 5], &[1; 5]).unwrap_err();
        assert!(matches!(err, AnalysisError::Frontier(_)));
    }
}
