//! Minimum-time routing on the arrangement skeleton.
//!
//! Routes alternate between LINE segments (ridden at the line's speed
//! limit) and WALK segments (off-network motion at the slow access speed).
//! The skeleton optimum at a finite (speed floor, walk speed) pair is an
//! upper approximation of the continuum minimum-time path; the convergence
//! driver tightens both knobs and reports stabilization instead of
//! claiming exact geodesics. Skeleton routes are sequential line-segment
//! chains by construction; whether the continuum optima always admit such
//! a representation is a modeling assumption here, not a established fact.

use crate::arrangement::{ArrangementGraph, Terminal};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::json::to_string_17;
use crate::line_process::LineSample;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Relative tolerance for declaring two route times tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Line,
    Walk,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RouteSegment {
    pub kind: SegmentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub from: Point,
    pub to: Point,
    pub speed: f64,
    pub length: f64,
    pub time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Route {
    pub segments: Vec<RouteSegment>,
    pub total_time: f64,
    pub total_length: f64,
}

impl Route {
    pub fn empty() -> Route {
        Route {
            segments: Vec::new(),
            total_time: 0.0,
            total_length: 0.0,
        }
    }

    pub fn start(&self) -> Option<Point> {
        self.segments.first().map(|s| s.from)
    }

    pub fn end(&self) -> Option<Point> {
        self.segments.last().map(|s| s.to)
    }

    /// Total time spent on WALK segments.
    pub fn walk_time(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Walk)
            .map(|s| s.time)
            .sum()
    }

    /// Position at elapsed time `t`, clamped to the endpoints.
    pub fn position_at(&self, t: f64) -> Option<Point> {
        let first = self.start()?;
        if t <= 0.0 {
            return Some(first);
        }
        let mut elapsed = 0.0;
        for seg in &self.segments {
            if t <= elapsed + seg.time {
                let frac = if seg.time > 0.0 {
                    (t - elapsed) / seg.time
                } else {
                    1.0
                };
                return Some(seg.from + (seg.to - seg.from) * frac);
            }
            elapsed += seg.time;
        }
        self.end()
    }

    /// Build a route from an edge index sequence, merging consecutive
    /// edges that ride the same line. Totals accumulate over single edges
    /// in path order, the same association the search itself uses.
    fn from_edge_path(graph: &ArrangementGraph, vertices: &[usize], edges: &[usize]) -> Route {
        let mut segments: Vec<RouteSegment> = Vec::new();
        let mut total_time = 0.0;
        let mut total_length = 0.0;
        for (k, &ei) in edges.iter().enumerate() {
            let e = &graph.edges[ei];
            let from = graph.vertices[vertices[k]].point;
            let to = graph.vertices[vertices[k + 1]].point;
            total_time += e.time;
            total_length += e.length;
            let kind = if e.line.is_some() {
                SegmentKind::Line
            } else {
                SegmentKind::Walk
            };
            if let Some(last) = segments.last_mut() {
                if kind == SegmentKind::Line && last.kind == kind && last.line == e.line {
                    last.to = to;
                    last.length += e.length;
                    last.time += e.time;
                    continue;
                }
            }
            segments.push(RouteSegment {
                kind,
                line: e.line,
                from,
                to,
                speed: e.speed,
                length: e.length,
                time: e.time,
            });
        }
        Route {
            segments,
            total_time,
            total_length,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_string_17(self)
    }

    /// The same route traversed backwards; totals are carried over
    /// verbatim so a route and its reverse agree bit-for-bit.
    pub fn reversed(&self) -> Route {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| RouteSegment {
                from: s.to,
                to: s.from,
                ..*s
            })
            .collect();
        Route {
            segments,
            total_time: self.total_time,
            total_length: self.total_length,
        }
    }
}

/// Result of a shortest-route query.
#[derive(Clone, Debug)]
pub struct RouteOutcome {
    pub route: Route,
    /// Set when a distinct route ties the optimum within `TIE_TOL`.
    pub tie: bool,
    /// Vertex indices along the optimal path (including both terminals).
    pub vertex_path: Vec<usize>,
}

struct HeapItem {
    time: f64,
    hops: u32,
    vertex: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.hops == other.hops && self.vertex == other.vertex
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .time
            .partial_cmp(&self.time)
            .unwrap_or(Ordering::Equal)
            .then(other.hops.cmp(&self.hops))
            .then(other.vertex.cmp(&self.vertex))
    }
}

struct SearchState {
    dist: Vec<f64>,
    hops: Vec<u32>,
    pred: Vec<Option<(usize, usize)>>, // (vertex, edge)
}

/// Dijkstra from `src`, skipping edges in `banned` (sorted). Ties are
/// broken by (time, hop count, lexicographic vertex-id path) so the result
/// is deterministic.
fn dijkstra(graph: &ArrangementGraph, src: usize, banned: &[usize]) -> SearchState {
    let n = graph.vertices.len();
    let mut st = SearchState {
        dist: vec![f64::INFINITY; n],
        hops: vec![u32::MAX; n],
        pred: vec![None; n],
    };
    st.dist[src] = 0.0;
    st.hops[src] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        time: 0.0,
        hops: 0,
        vertex: src,
    });
    while let Some(HeapItem { time, hops, vertex }) = heap.pop() {
        if time > st.dist[vertex] || (time == st.dist[vertex] && hops > st.hops[vertex]) {
            continue;
        }
        for &ei in graph.adjacency(vertex) {
            if banned.binary_search(&ei).is_ok() {
                continue;
            }
            let e = &graph.edges[ei];
            let next = if e.u == vertex { e.v } else { e.u };
            let cand = time + e.time;
            let cand_hops = hops + 1;
            let better = match cand.partial_cmp(&st.dist[next]).unwrap() {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => match cand_hops.cmp(&st.hops[next]) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => lexicographically_smaller(graph, &st, vertex, next),
                },
            };
            if better {
                st.dist[next] = cand;
                st.hops[next] = cand_hops;
                st.pred[next] = Some((vertex, ei));
                heap.push(HeapItem {
                    time: cand,
                    hops: cand_hops,
                    vertex: next,
                });
            }
        }
    }
    st
}

/// Compare the vertex-id path of the candidate predecessor chain against
/// the incumbent one. Only reached on exact (time, hops) ties.
fn lexicographically_smaller(
    graph: &ArrangementGraph,
    st: &SearchState,
    cand_pred: usize,
    target: usize,
) -> bool {
    let chain = |start: Option<usize>| -> Vec<u64> {
        let mut ids = vec![graph.vertices[target].id];
        let mut v = match start {
            Some(p) => {
                ids.push(graph.vertices[p].id);
                p
            }
            None => return ids,
        };
        while let Some((p, _)) = st.pred[v] {
            ids.push(graph.vertices[p].id);
            v = p;
        }
        ids.reverse();
        ids
    };
    let cand = chain(Some(cand_pred));
    let cur = chain(st.pred[target].map(|(p, _)| p));
    cand < cur
}

fn extract_path(st: &SearchState, src: usize, dst: usize) -> (Vec<usize>, Vec<usize>) {
    let mut vertices = vec![dst];
    let mut edges = Vec::new();
    let mut v = dst;
    while v != src {
        let (p, e) = st.pred[v].expect("reached vertex has a predecessor");
        vertices.push(p);
        edges.push(e);
        v = p;
    }
    vertices.reverse();
    edges.reverse();
    (vertices, edges)
}

/// Time-minimal route between two injected terminals; also reports whether
/// a distinct route ties the optimum within `TIE_TOL` relative.
pub fn shortest_time_route(
    graph: &ArrangementGraph,
    src: &Terminal,
    dst: &Terminal,
) -> Result<RouteOutcome> {
    route_between(graph, src, dst, true)
}

/// Same as [`shortest_time_route`] with the tie scan optional (the scan
/// reruns the search once per optimal-path edge).
pub fn route_between(
    graph: &ArrangementGraph,
    src: &Terminal,
    dst: &Terminal,
    check_tie: bool,
) -> Result<RouteOutcome> {
    if src.vertex == dst.vertex {
        return Ok(RouteOutcome {
            route: Route::empty(),
            tie: false,
            vertex_path: vec![src.vertex],
        });
    }
    // Canonical search direction: the query is symmetric, so running it
    // from the smaller terminal id makes the reverse query bit-identical.
    if src.vertex_id > dst.vertex_id {
        let out = route_between(graph, dst, src, check_tie)?;
        let mut vertex_path = out.vertex_path;
        vertex_path.reverse();
        return Ok(RouteOutcome {
            route: out.route.reversed(),
            tie: out.tie,
            vertex_path,
        });
    }
    let st = dijkstra(graph, src.vertex, &[]);
    if !st.dist[dst.vertex].is_finite() {
        return Err(Error::Disconnected);
    }
    let (vertices, edges) = extract_path(&st, src.vertex, dst.vertex);
    let route = Route::from_edge_path(graph, &vertices, &edges);
    let best = route.total_time;

    let mut tie = false;
    if check_tie {
        // Any distinct route omits at least one edge of the optimum, so the
        // best deviation over single-edge removals is the second-best
        // simple route.
        for &ei in &edges {
            let banned = [ei];
            let alt = dijkstra(graph, src.vertex, &banned);
            let t = alt.dist[dst.vertex];
            if t.is_finite() && t <= best * (1.0 + TIE_TOL) {
                tie = true;
                break;
            }
        }
    }
    Ok(RouteOutcome {
        route,
        tie,
        vertex_path: vertices,
    })
}

/// Recursive fastest-line upper-bound construction between two points.
///
/// At each node with separation `r`, the fastest sample line hitting both
/// `ball(x1, r/alpha)` and `ball(x2, r/alpha)` carries the middle of the
/// route; the flanks recurse. Where no line qualifies (or the depth is
/// exhausted) the gap is closed by a WALK at speed `epsilon`.
pub fn tree_upper_bound(
    x1: Point,
    x2: Point,
    sample: &LineSample,
    alpha: f64,
    depth: u32,
    epsilon: f64,
) -> Result<Route> {
    let gamma = sample.params.gamma;
    let threshold = 2f64.powf((gamma - 1.0) / (gamma - 2.0));
    if !(alpha > threshold) {
        return Err(Error::invalid_parameter(format!(
            "alpha must exceed 2^((gamma-1)/(gamma-2)) = {threshold:.6}"
        )));
    }
    if x1 == x2 {
        return Err(Error::invalid_parameter("endpoints coincide"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid_parameter("walk speed must be positive"));
    }
    let mut segments = Vec::new();
    connect(x1, x2, sample, alpha, depth, epsilon, &mut segments);
    let total_time = segments.iter().map(|s: &RouteSegment| s.time).sum();
    let total_length = segments.iter().map(|s: &RouteSegment| s.length).sum();
    Ok(Route {
        segments,
        total_time,
        total_length,
    })
}

fn walk_segment(from: Point, to: Point, epsilon: f64) -> RouteSegment {
    let length = from.dist(to);
    RouteSegment {
        kind: SegmentKind::Walk,
        line: None,
        from,
        to,
        speed: epsilon,
        length,
        time: length / epsilon,
    }
}

fn connect(
    x1: Point,
    x2: Point,
    sample: &LineSample,
    alpha: f64,
    depth: u32,
    epsilon: f64,
    out: &mut Vec<RouteSegment>,
) {
    let r = x1.dist(x2);
    if r == 0.0 {
        return;
    }
    if depth == 0 {
        out.push(walk_segment(x1, x2, epsilon));
        return;
    }
    let rho = r / alpha;
    let best = sample
        .lines
        .iter()
        .filter(|ml| ml.line.distance(x1) <= rho && ml.line.distance(x2) <= rho)
        .max_by(|a, b| a.v.partial_cmp(&b.v).unwrap().then(b.id.cmp(&a.id)));
    let Some(ml) = best else {
        // No line joins the two balls at this scale; fall back to walking.
        out.push(walk_segment(x1, x2, epsilon));
        return;
    };
    let y1 = ml.line.foot(x1);
    let y2 = ml.line.foot(x2);
    connect(x1, y1, sample, alpha, depth - 1, epsilon, out);
    if y1.dist(y2) > 0.0 {
        out.push(RouteSegment {
            kind: SegmentKind::Line,
            line: Some(ml.id),
            from: y1,
            to: y2,
            speed: ml.v,
            length: y1.dist(y2),
            time: y1.dist(y2) / ml.v,
        });
    }
    // Build the far flank from the endpoint inward, then reverse it so the
    // route stays ordered from x1 to x2.
    let mut tail = Vec::new();
    connect(x2, y2, sample, alpha, depth - 1, epsilon, &mut tail);
    for seg in tail.into_iter().rev() {
        out.push(RouteSegment {
            from: seg.to,
            to: seg.from,
            ..seg
        });
    }
}

/// Per-clause feasibility report for a route.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    /// LINE segments lie on their lines and respect the speed limits.
    pub lines_ok: bool,
    /// WALK speeds do not exceed the access speed.
    pub walks_ok: bool,
    /// Total WALK time stays under the access-speed budget (report-only).
    pub walk_budget_ok: bool,
    /// max(largest WALK speed, total WALK time).
    pub effective_epsilon: f64,
    pub walk_time: f64,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.lines_ok && self.walks_ok
    }
}

/// Check a route against the sample: segment-on-line membership and speed
/// compliance, walk speeds below `epsilon`, and the walk-time budget.
pub fn validate_route(route: &Route, sample: &LineSample, epsilon: f64) -> ValidationReport {
    let tol = 1e-9 * sample.window.radius.max(1.0);
    let speed_slack = 1.0 + 1e-12;
    let mut issues = Vec::new();
    let mut lines_ok = true;
    let mut walks_ok = true;
    let mut max_walk_speed: f64 = 0.0;

    let mut prev_end: Option<Point> = None;
    for (i, seg) in route.segments.iter().enumerate() {
        if let Some(p) = prev_end {
            if p.dist(seg.from) > tol {
                lines_ok = false;
                issues.push(format!("segment {i} does not start where segment {} ended", i - 1));
            }
        }
        prev_end = Some(seg.to);
        match seg.kind {
            SegmentKind::Line => {
                let Some(ml) = sample.lines.iter().find(|ml| Some(ml.id) == seg.line) else {
                    lines_ok = false;
                    issues.push(format!("segment {i} references an unknown line"));
                    continue;
                };
                if ml.line.distance(seg.from) > tol || ml.line.distance(seg.to) > tol {
                    lines_ok = false;
                    issues.push(format!("segment {i} leaves line {}", ml.id));
                }
                if seg.speed > ml.v * speed_slack {
                    lines_ok = false;
                    issues.push(format!(
                        "segment {i} rides line {} at {} > limit {}",
                        ml.id, seg.speed, ml.v
                    ));
                }
            }
            SegmentKind::Walk => {
                max_walk_speed = max_walk_speed.max(seg.speed);
                if seg.speed > epsilon * speed_slack {
                    walks_ok = false;
                    issues.push(format!(
                        "segment {i} walks at {} > epsilon {epsilon}",
                        seg.speed
                    ));
                }
            }
        }
    }
    let walk_time = route.walk_time();
    let walk_budget_ok = walk_time < epsilon;
    if !walk_budget_ok {
        issues.push(format!("walk time {walk_time} exceeds the budget {epsilon}"));
    }
    ValidationReport {
        lines_ok,
        walks_ok,
        walk_budget_ok,
        effective_epsilon: max_walk_speed.max(walk_time),
        walk_time,
        issues,
    }
}

/// One refinement level of the convergence driver.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Level {
    pub v_floor: f64,
    pub epsilon: f64,
    pub k_nearest: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub v_floor: f64,
    pub epsilon: f64,
    pub k_nearest: usize,
    pub time: f64,
    pub length: f64,
    pub walk_time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    pub stabilized: bool,
    /// Last computed route time.
    pub final_time: f64,
    /// True when a resource cap cut the schedule short.
    pub truncated: bool,
}

impl ConvergenceReport {
    /// CSV with one row per level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,v_floor,epsilon,time,length,walk_time\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.level, r.v_floor, r.epsilon, r.time, r.length, r.walk_time
            ));
        }
        out
    }
}

pub struct ConvergeConfig {
    pub schedule: Vec<Level>,
    /// Stop as soon as two consecutive times agree to 1%.
    pub stop_when_stabilized: bool,
    pub max_expected_lines: f64,
    pub max_intersections: u64,
}

impl ConvergeConfig {
    pub fn new(schedule: Vec<Level>) -> ConvergeConfig {
        ConvergeConfig {
            schedule,
            stop_when_stabilized: false,
            max_expected_lines: crate::line_process::DEFAULT_MAX_EXPECTED_LINES,
            max_intersections: crate::arrangement::DEFAULT_MAX_INTERSECTIONS,
        }
    }
}

/// Relative agreement threshold for stabilization.
pub const STABILIZE_REL: f64 = 0.01;

/// Route `x1 -> x2` across a refining schedule with a coupled sample
/// chain: each level refines the previous sample (old lines kept),
/// rebuilds the arrangement, re-injects the terminals, and routes. A
/// resource cap at some level truncates the schedule and reports the
/// partial result.
pub fn converge(
    x1: Point,
    x2: Point,
    base: &LineSample,
    config: &ConvergeConfig,
) -> Result<ConvergenceReport> {
    if config.schedule.is_empty() {
        return Err(Error::invalid_parameter("schedule must be non-empty"));
    }
    if config.schedule[0].v_floor > base.v_floor {
        return Err(Error::invalid_parameter(
            "schedule starts above the base sample's floor",
        ));
    }
    for w in config.schedule.windows(2) {
        let ok = w[1].v_floor <= w[0].v_floor
            && w[1].epsilon <= w[0].epsilon
            && (w[1].v_floor < w[0].v_floor || w[1].epsilon < w[0].epsilon);
        if !ok {
            return Err(Error::invalid_parameter(
                "schedule must refine strictly in the floor or the walk speed",
            ));
        }
    }
    let mut rows = Vec::new();
    let mut truncated = false;
    let mut sample: Option<LineSample> = None;
    for (li, level) in config.schedule.iter().enumerate() {
        let current_floor = sample.as_ref().map_or(base.v_floor, |s| s.v_floor);
        let next = if level.v_floor < current_floor {
            sample
                .as_ref()
                .unwrap_or(base)
                .refine_capped(level.v_floor, config.max_expected_lines)
        } else {
            Ok(sample.as_ref().unwrap_or(base).clone())
        };
        let s = match next {
            Ok(s) => s,
            Err(Error::ResourceCap(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let graph =
            match crate::arrangement::build_capped(&s, s.window, config.max_intersections) {
                Ok(g) => g,
                Err(Error::ResourceCap(_)) => {
                    truncated = true;
                    break;
                }
                Err(e) => return Err(e),
            };
        let (graph, src) = graph.inject_terminal(x1, level.epsilon, level.k_nearest)?;
        let (graph, dst) = graph.inject_terminal(x2, level.epsilon, level.k_nearest)?;
        let outcome = route_between(&graph, &src, &dst, false)?;
        rows.push(LevelRow {
            level: li as u32,
            v_floor: level.v_floor,
            epsilon: level.epsilon,
            k_nearest: level.k_nearest,
            time: outcome.route.total_time,
            length: outcome.route.total_length,
            walk_time: outcome.route.walk_time(),
        });
        sample = Some(s);
        if config.stop_when_stabilized && stabilized(&rows) {
            break;
        }
    }
    let stab = stabilized(&rows);
    let final_time = rows.last().map(|r| r.time).unwrap_or(f64::NAN);
    Ok(ConvergenceReport {
        rows,
        stabilized: stab,
        final_time,
        truncated,
    })
}

fn stabilized(rows: &[LevelRow]) -> bool {
    if rows.len() < 2 {
        return false;
    }
    let a = rows[rows.len() - 2].time;
    let b = rows[rows.len() - 1].time;
    (a - b).abs() <= STABILIZE_REL * a.abs().max(b.abs())
}
