//! Four-leg cross intersection, waypoint graph and route planning.
//!
//! Coordinates: the junction box is centred on the origin, +y points north.
//! Traffic keeps right, so a northbound lane sits at `x = +lane_width / 2`
//! and a southbound lane at `x = -lane_width / 2`.
//!
//! Junction movements are separate chains of nodes. Where two movements
//! cross, both chains receive a node at the exact same coordinates, so the
//! crossing shows up as a shared waypoint in any pair of planned routes
//! without letting the graph switch movements mid-junction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::WorldError;
use crate::geometry::{Curve, Vec2};
use crate::path::WaypointPath;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    North,
    South,
    East,
    West,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::North, Leg::South, Leg::East, Leg::West];

    /// Unit vector pointing away from the junction along this leg.
    pub fn outward<T: Scalar>(self) -> Vec2<T> {
        match self {
            Leg::North => Vec2::new(T::zero(), T::one()),
            Leg::South => Vec2::new(T::zero(), -T::one()),
            Leg::East => Vec2::new(T::one(), T::zero()),
            Leg::West => Vec2::new(-T::one(), T::zero()),
        }
    }

    fn index(self) -> usize {
        match self {
            Leg::North => 0,
            Leg::South => 1,
            Leg::East => 2,
            Leg::West => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig<T> {
    /// Lane width in metres. Roads carry one lane per direction.
    pub lane_width: T,
    /// Length of each approach leg outside the junction box, metres.
    pub leg_length: T,
    /// Nominal distance between waypoints, metres.
    pub waypoint_spacing: T,
    /// Speed limit, m/s.
    pub speed_limit: T,
}

impl<T: Scalar> Default for MapConfig<T> {
    fn default() -> Self {
        Self {
            lane_width: T::lit(5.0),
            leg_length: T::lit(50.0),
            waypoint_spacing: T::lit(2.0),
            speed_limit: T::lit(25.0 / 3.6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub to: usize,
    pub cost: T,
}

/// Directed graph of waypoint nodes with Euclidean edge costs.
#[derive(Debug, Clone, Default)]
pub struct WaypointGraph<T> {
    pub nodes: Vec<Vec2<T>>,
    pub edges: Vec<Vec<Edge<T>>>,
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier<T> {
    f: T,
    g: T,
    node: usize,
}

impl<T: Scalar> Eq for Frontier<T> {}

impl<T: Scalar> Ord for Frontier<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on node id for determinism
        other
            .f
            .partial_cmp(&self.f)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> WaypointGraph<T> {
    pub fn add_node(&mut self, p: Vec2<T>) -> usize {
        self.nodes.push(p);
        self.edges.push(Vec::new());
        self.nodes.len() - 1
    }

    /// Adds a directed edge whose cost is the Euclidean node distance.
    pub fn connect(&mut self, from: usize, to: usize) {
        let cost = self.nodes[from].distance(self.nodes[to]);
        self.edges[from].push(Edge { to, cost });
    }

    /// A* with the straight-line heuristic. Returns the node sequence and its cost.
    pub fn astar(&self, start: usize, goal: usize) -> Option<(Vec<usize>, T)> {
        let n = self.nodes.len();
        let mut g = vec![T::infinity(); n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        let h = |i: usize| self.nodes[i].distance(self.nodes[goal]);
        g[start] = T::zero();
        open.push(Frontier {
            f: h(start),
            g: T::zero(),
            node: start,
        });
        while let Some(Frontier { g: gc, node, .. }) = open.pop() {
            if closed[node] || gc > g[node] {
                continue;
            }
            if node == goal {
                let mut seq = vec![goal];
                let mut cur = goal;
                while cur != start {
                    cur = parent[cur];
                    seq.push(cur);
                }
                seq.reverse();
                return Some((seq, g[goal]));
            }
            closed[node] = true;
            for e in &self.edges[node] {
                let cand = gc + e.cost;
                if cand < g[e.to] {
                    g[e.to] = cand;
                    parent[e.to] = node;
                    open.push(Frontier {
                        f: cand + h(e.to),
                        g: cand,
                        node: e.to,
                    });
                }
            }
        }
        None
    }
}

/// Node chains of one approach leg.
#[derive(Debug, Clone)]
pub struct LegLanes {
    /// Inbound lane, far end first; last node sits on the junction boundary.
    pub inbound: Vec<usize>,
    /// Outbound lane, junction boundary first.
    pub outbound: Vec<usize>,
}

/// One legal movement through the junction.
#[derive(Debug, Clone)]
pub struct Movement<T> {
    pub entry: Leg,
    pub exit: Leg,
    pub curve: Curve<T>,
    /// Node chain from the inbound lane end to the outbound lane start, inclusive.
    pub nodes: Vec<usize>,
    /// Chain indices of nodes inserted where other movements cross.
    pub crossing_nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct IntersectionMap<T> {
    pub config: MapConfig<T>,
    /// Half side length of the square junction box.
    pub half_size: T,
    pub graph: WaypointGraph<T>,
    lanes: Vec<LegLanes>,
    pub movements: Vec<Movement<T>>,
}

/// First waypoint shared by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictPoint<T> {
    pub position: Vec2<T>,
    /// Index into the first (ego) path.
    pub ego_index: usize,
    /// Index into the second (north) path.
    pub north_index: usize,
}

fn right_of<T: Scalar>(dir: Vec2<T>) -> Vec2<T> {
    -dir.perp_left()
}

fn validate<T: Scalar>(cfg: &MapConfig<T>) -> Result<(), WorldError> {
    let checks = [
        (cfg.lane_width, "lane_width"),
        (cfg.leg_length, "leg_length"),
        (cfg.waypoint_spacing, "waypoint_spacing"),
        (cfg.speed_limit, "speed_limit"),
    ];
    for (v, name) in checks {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(WorldError::InvalidGeometry(format!("{name} must be positive, got {v}")));
        }
    }
    if cfg.waypoint_spacing > cfg.leg_length {
        return Err(WorldError::InvalidGeometry("waypoint_spacing exceeds leg_length".into()));
    }
    Ok(())
}

fn segments_for<T: Scalar>(length: T, spacing: T) -> usize {
    (length / spacing).round().to_usize().unwrap_or(1).max(1)
}

/// Builds the cross intersection for `cfg`. Deterministic.
pub fn build_intersection<T: Scalar>(cfg: &MapConfig<T>) -> Result<IntersectionMap<T>, WorldError> {
    validate(cfg)?;
    let half = cfg.lane_width;
    let lane_off = cfg.lane_width * T::lit(0.5);
    let mut graph = WaypointGraph::default();

    let mut lanes = Vec::with_capacity(4);
    let n_leg = segments_for(cfg.leg_length, cfg.waypoint_spacing);
    for leg in Leg::ALL {
        let out = leg.outward::<T>();
        let far = half + cfg.leg_length;
        // inbound travels towards the junction
        let in_off = right_of(-out) * lane_off;
        let inbound: Vec<usize> = (0..=n_leg)
            .map(|k| {
                let d = far - cfg.leg_length * T::from_usize(k).unwrap() / T::from_usize(n_leg).unwrap();
                graph.add_node(out * d + in_off)
            })
            .collect();
        let out_off = right_of(out) * lane_off;
        let outbound: Vec<usize> = (0..=n_leg)
            .map(|k| {
                let d = half + cfg.leg_length * T::from_usize(k).unwrap() / T::from_usize(n_leg).unwrap();
                graph.add_node(out * d + out_off)
            })
            .collect();
        for w in inbound.windows(2).chain(outbound.windows(2)) {
            graph.connect(w[0], w[1]);
        }
        lanes.push(LegLanes { inbound, outbound });
    }

    // movement geometry
    let mut curves: Vec<(Leg, Leg, Curve<T>)> = Vec::new();
    for entry in Leg::ALL {
        for exit in Leg::ALL {
            if entry == exit {
                continue;
            }
            let p0 = graph.nodes[*lanes[entry.index()].inbound.last().unwrap()];
            let h0 = -entry.outward::<T>();
            let p1 = graph.nodes[lanes[exit.index()].outbound[0]];
            let h1 = exit.outward::<T>();
            let curve = if h0.cross(h1).abs() < T::lit(1e-12) {
                Curve::Line { from: p0, to: p1 }
            } else {
                Curve::tangent_arc(p0, h0, p1, h1).ok_or_else(|| {
                    WorldError::InvalidGeometry(format!("no tangent arc for {entry:?} -> {exit:?}"))
                })?
            };
            curves.push((entry, exit, curve));
        }
    }

    // parameters of regular samples and crossings per movement
    let mut params: Vec<Vec<(T, Vec2<T>, bool)>> = curves
        .iter()
        .map(|(_, _, c)| {
            let n = segments_for(c.length(), cfg.waypoint_spacing);
            (1..n)
                .map(|k| {
                    let t = T::from_usize(k).unwrap() / T::from_usize(n).unwrap();
                    (t, c.point_at(t), false)
                })
                .collect()
        })
        .collect();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            for (ti, tj, p) in curves[i].2.crossings(&curves[j].2) {
                // the same coordinates go to both chains
                params[i].push((ti, p, true));
                params[j].push((tj, p, true));
            }
        }
    }

    let mut movements = Vec::with_capacity(curves.len());
    for ((entry, exit, curve), mut ps) in curves.into_iter().zip(params) {
        ps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let start = *lanes[entry.index()].inbound.last().unwrap();
        let end = lanes[exit.index()].outbound[0];
        let mut nodes = vec![start];
        let mut crossing_nodes = Vec::new();
        let min_gap = T::lit(1e-9);
        let mut last_t = T::zero();
        let mut last_pt = graph.nodes[start];
        for (t, p, is_cross) in ps {
            if p.distance(last_pt) < min_gap {
                // coincident sample: keep crossing coordinates if either is a crossing
                if is_cross {
                    let id = *nodes.last().unwrap();
                    if id != start {
                        graph.nodes[id] = p;
                        if !crossing_nodes.contains(&(nodes.len() - 1)) {
                            crossing_nodes.push(nodes.len() - 1);
                        }
                    }
                }
                continue;
            }
            debug_assert!(t >= last_t);
            last_t = t;
            last_pt = p;
            let id = graph.add_node(p);
            if is_cross {
                crossing_nodes.push(nodes.len());
            }
            nodes.push(id);
        }
        nodes.push(end);
        for w in nodes.windows(2) {
            graph.connect(w[0], w[1]);
        }
        movements.push(Movement {
            entry,
            exit,
            curve,
            nodes,
            crossing_nodes,
        });
    }

    Ok(IntersectionMap {
        config: cfg.clone(),
        half_size: half,
        graph,
        lanes,
        movements,
    })
}

impl<T: Scalar> IntersectionMap<T> {
    pub fn lanes(&self, leg: Leg) -> &LegLanes {
        &self.lanes[leg.index()]
    }

    /// Centreline points of a leg's inbound lane, far end first.
    pub fn inbound_centerline(&self, leg: Leg) -> Vec<Vec2<T>> {
        self.lanes(leg).inbound.iter().map(|&i| self.graph.nodes[i]).collect()
    }

    pub fn outbound_centerline(&self, leg: Leg) -> Vec<Vec2<T>> {
        self.lanes(leg).outbound.iter().map(|&i| self.graph.nodes[i]).collect()
    }

    /// Minimum-length waypoint route from the far end of `entry` to the far end of `exit`.
    pub fn plan_route(&self, entry: Leg, exit: Leg) -> Result<WaypointPath<T>, WorldError> {
        Ok(self.plan_route_with_cost(entry, exit)?.0)
    }

    pub fn plan_route_with_cost(&self, entry: Leg, exit: Leg) -> Result<(WaypointPath<T>, T), WorldError> {
        if entry == exit {
            return Err(WorldError::SameLeg(entry));
        }
        let start = self.lanes(entry).inbound[0];
        let goal = *self.lanes(exit).outbound.last().unwrap();
        let (seq, cost) = self
            .graph
            .astar(start, goal)
            .ok_or(WorldError::NoRoute { from: entry, to: exit })?;
        let path = WaypointPath::new(seq.into_iter().map(|i| self.graph.nodes[i]).collect())?;
        Ok((path, cost))
    }

    /// Whether `p` lies in the junction box grown by `margin` on every side.
    /// The region is closed.
    pub fn in_junction(&self, p: Vec2<T>, margin: T) -> bool {
        let lim = self.half_size + margin;
        p.x.abs() <= lim && p.y.abs() <= lim
    }
}

/// First waypoint of `ego` (lowest index) that coincides with a waypoint of
/// `north` within 1e-6 m.
pub fn find_conflict_point<T: Scalar>(
    ego: &WaypointPath<T>,
    north: &WaypointPath<T>,
) -> Result<ConflictPoint<T>, WorldError> {
    let tol = T::lit(1e-6);
    for (i, p) in ego.points().iter().enumerate() {
        if let Some(j) = north.points().iter().position(|q| p.distance(*q) <= tol) {
            return Ok(ConflictPoint {
                position: *p,
                ego_index: i,
                north_index: j,
            });
        }
    }
    Err(WorldError::NoConflict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_map() -> IntersectionMap<f64> {
        build_intersection(&MapConfig::default()).unwrap()
    }

    #[test]
    fn leg_centerline_node_count() {
        let cfg = MapConfig {
            leg_length: 50.0,
            waypoint_spacing: 2.0,
            ..MapConfig::default()
        };
        let map = build_intersection(&cfg).unwrap();
        for leg in Leg::ALL {
            assert_eq!(map.lanes(leg).inbound.len(), 26);
            assert_eq!(map.lanes(leg).outbound.len(), 26);
        }
    }

    #[test]
    fn south_and_north_entries_mirror_about_y_axis() {
        let map = default_map();
        let half_lane = map.config.lane_width / 2.0;
        for p in map.inbound_centerline(Leg::South) {
            assert_abs_diff_eq!(p.x, half_lane, epsilon = 1e-12);
        }
        for p in map.inbound_centerline(Leg::North) {
            assert_abs_diff_eq!(p.x, -half_lane, epsilon = 1e-12);
        }
    }

    #[test]
    fn legs_terminate_on_junction_boundary() {
        let map = default_map();
        let h = map.half_size;
        for leg in Leg::ALL {
            let last_in = *map.inbound_centerline(leg).last().unwrap();
            let first_out = map.outbound_centerline(leg)[0];
            for p in [last_in, first_out] {
                let on_edge = (p.x.abs() - h).abs() < 1e-12 || (p.y.abs() - h).abs() < 1e-12;
                assert!(on_edge && map.in_junction(p, 0.0), "{leg:?} {p:?}");
            }
        }
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        for cfg in [
            MapConfig {
                waypoint_spacing: 0.0,
                ..MapConfig::default()
            },
            MapConfig {
                lane_width: -1.0,
                ..MapConfig::default()
            },
            MapConfig {
                leg_length: 0.0,
                ..MapConfig::default()
            },
        ] {
            assert!(matches!(build_intersection(&cfg), Err(WorldError::InvalidGeometry(_))));
        }
    }

    #[test]
    fn every_entry_reaches_every_exit() {
        let map = default_map();
        for a in Leg::ALL {
            for b in Leg::ALL {
                if a != b {
                    map.plan_route(a, b).unwrap();
                }
            }
        }
    }

    #[test]
    fn same_leg_route_is_an_error() {
        assert_eq!(
            default_map().plan_route(Leg::South, Leg::South).unwrap_err(),
            WorldError::SameLeg(Leg::South)
        );
    }

    #[test]
    fn left_turn_crosses_the_box_and_turns_left() {
        let map = default_map();
        let path = map.plan_route(Leg::South, Leg::West).unwrap();
        let inside = path.points()[1..path.len() - 1]
            .iter()
            .filter(|p| p.x.abs() < map.half_size && p.y.abs() < map.half_size)
            .count();
        assert!(inside >= 3);
        assert_abs_diff_eq!(path.total_turn(), std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        let first = path.points()[0];
        let last = *path.points().last().unwrap();
        assert!(first.y < -map.config.leg_length);
        assert!(last.x < -map.config.leg_length);
    }

    #[test]
    fn straight_route_keeps_x() {
        let map = default_map();
        let path = map.plan_route(Leg::North, Leg::South).unwrap();
        let x0 = path.points()[0].x;
        for p in path.points() {
            assert_abs_diff_eq!(p.x, x0, epsilon = 1e-9);
        }
    }

    #[test]
    fn regular_spacing_within_ten_percent() {
        let map = default_map();
        let s = map.config.waypoint_spacing;
        for leg in Leg::ALL {
            for chain in [&map.lanes(leg).inbound, &map.lanes(leg).outbound] {
                for w in chain.windows(2) {
                    let d = map.graph.nodes[w[0]].distance(map.graph.nodes[w[1]]);
                    assert!((d - s).abs() <= 0.1 * s);
                }
            }
        }
        for m in &map.movements {
            let regular: Vec<_> = m
                .nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| !m.crossing_nodes.contains(k))
                .map(|(_, &id)| map.graph.nodes[id])
                .collect();
            let n = regular.len() - 1;
            let per = m.curve.length() / n as f64;
            assert!((per - s).abs() <= 0.1 * s, "{:?}->{:?} spacing {per}", m.entry, m.exit);
        }
    }

    #[test]
    fn left_turn_conflicts_with_oncoming_lane_inside_box() {
        let map = default_map();
        let ego = map.plan_route(Leg::South, Leg::West).unwrap();
        let north = map.plan_route(Leg::North, Leg::South).unwrap();
        let c = find_conflict_point(&ego, &north).unwrap();
        let half_lane = map.config.lane_width / 2.0;
        // independent oracle: where the left-turn circle meets x = -lane/2
        let h = map.half_size;
        let r = h + half_lane;
        let y_oracle = -h + (r * r - (h - half_lane).powi(2)).sqrt();
        assert_abs_diff_eq!(c.position.x, -half_lane, epsilon = 1e-6);
        assert_abs_diff_eq!(c.position.y, y_oracle, epsilon = 1e-6);
        assert!(map.in_junction(c.position, 0.0));
        // brute-force: stored indices really coincide
        assert!(ego.points()[c.ego_index].distance(north.points()[c.north_index]) < 1e-6);
        let first_shared = (0..ego.len())
            .find(|&i| north.points().iter().any(|q| q.distance(ego.points()[i]) < 1e-6))
            .unwrap();
        assert_eq!(first_shared, c.ego_index);
    }

    #[test]
    fn identical_paths_conflict_at_start() {
        let map = default_map();
        let p = map.plan_route(Leg::East, Leg::North).unwrap();
        let c = find_conflict_point(&p, &p).unwrap();
        assert_eq!((c.ego_index, c.north_index), (0, 0));
    }

    #[test]
    fn parallel_paths_have_no_conflict() {
        let a = WaypointPath::new((0..10).map(|i| Vec2::new(0.0, 2.0 * i as f64)).collect()).unwrap();
        let b = WaypointPath::new((0..10).map(|i| Vec2::new(3.5, 2.0 * i as f64)).collect()).unwrap();
        assert_eq!(find_conflict_point(&a, &b).unwrap_err(), WorldError::NoConflict);
    }

    #[test]
    fn map_build_is_deterministic() {
        let a = default_map();
        let b = default_map();
        assert_eq!(a.graph.nodes, b.graph.nodes);
    }
}
