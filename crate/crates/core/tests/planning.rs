//! A* against an exhaustive shortest-path oracle.

use proptest::prelude::*;
use safecross::world::{build_intersection, Leg, MapConfig, WaypointGraph};
use safecross::Vec2;

/// Bellman-Ford relaxation over every edge until nothing changes.
fn bellman_ford(g: &WaypointGraph<f64>, start: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.nodes.len()];
    d[start] = 0.0;
    for _ in 0..g.nodes.len() {
        let mut changed = false;
        for (u, out) in g.edges.iter().enumerate() {
            for e in out {
                if d[u] + e.cost < d[e.to] {
                    d[e.to] = d[u] + e.cost;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

fn path_cost(g: &WaypointGraph<f64>, seq: &[usize]) -> f64 {
    seq.windows(2)
        .map(|w| {
            g.edges[w[0]]
                .iter()
                .filter(|e| e.to == w[1])
                .map(|e| e.cost)
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

proptest! {
    #[test]
    fn astar_cost_matches_exhaustive_search(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..25),
        pairs in prop::collection::vec((0usize..25, 0usize..25), 0..80),
    ) {
        let mut g = WaypointGraph::default();
        for (x, y) in &pts {
            g.add_node(Vec2::new(*x, *y));
        }
        let n = pts.len();
        for (a, b) in pairs {
            let (a, b) = (a % n, b % n);
            if a != b {
                g.connect(a, b);
            }
        }
        let oracle = bellman_ford(&g, 0);
        for goal in 0..n {
            match g.astar(0, goal) {
                None => prop_assert!(oracle[goal].is_infinite()),
                Some((seq, cost)) => {
                    prop_assert_eq!(seq[0], 0);
                    prop_assert_eq!(*seq.last().unwrap(), goal);
                    prop_assert!((cost - oracle[goal]).abs() < 1e-9);
                    prop_assert!((path_cost(&g, &seq) - cost).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn every_map_route_is_a_shortest_path() {
    let map = build_intersection(&MapConfig::<f64>::default()).unwrap();
    for entry in Leg::ALL {
        for exit in Leg::ALL {
            if entry == exit {
                continue;
            }
            let (path, cost) = map.plan_route_with_cost(entry, exit).unwrap();
            assert!((path.total_length() - cost).abs() < 1e-9);
            let start = map.graph.nodes.iter().position(|p| *p == path.points()[0]).unwrap();
            let goal = map.graph.nodes.iter().position(|p| p == path.points().last().unwrap()).unwrap();
            let oracle = bellman_ford(&map.graph, start);
            assert!((oracle[goal] - cost).abs() < 1e-9, "{entry:?} -> {exit:?}");
        }
    }
}
