//! Intersection skeleton of a line sample: pairwise intersection vertices,
//! chord-endpoint vertices on the clip boundary, and consecutive-vertex
//! edges weighted by travel time. Terminals are attached afterwards with
//! slow WALK edges to the feet of nearby lines.
//!
//! Vertex and edge ids are content-derived (hashes of the incident line
//! ids) so that rebuilding after a refinement preserves the ids of
//! everything that survives untouched.
//!
//! Modeling note: transfers between lines happen only at intersection
//! vertices (plus terminal feet); minimum-time paths on the continuum
//! only ever join or leave a line at such crossings, so the restriction
//! costs nothing for the optima this graph is built to approximate.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point};
use crate::json::to_string_17;
use crate::line_process::{LineSample, MarkedLine};
use crate::rng::mix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// Default cap on the number of intersection vertices.
pub const DEFAULT_MAX_INTERSECTIONS: u64 = 50_000_000;

/// Default cap on terminal degree: feet are attached to at most this many
/// nearest lines (all lines when there are at most this many).
pub const DEFAULT_K_NEAREST: usize = 64;

/// Relative vertex merge tolerance (times the clip radius).
pub const MERGE_TOL_REL: f64 = 1e-9;

const SALT_INTERSECTION: u64 = 0x01;
const SALT_BOUNDARY: u64 = 0x02;
const SALT_TERMINAL: u64 = 0x03;
const SALT_FOOT: u64 = 0x04;
const SALT_EDGE: u64 = 0x05;
const SALT_WALK: u64 = 0x06;

#[derive(Clone, Debug)]
pub struct Vertex {
    pub id: u64,
    pub point: Point,
    /// Ids of the sample lines through this vertex.
    pub lines: Vec<u64>,
}

#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub id: u64,
    /// Vertex indices into `ArrangementGraph::vertices`.
    pub u: usize,
    pub v: usize,
    /// Line id, or `None` for a WALK edge.
    pub line: Option<u64>,
    pub length: f64,
    pub speed: f64,
    pub time: f64,
}

/// A routing endpoint attached to the graph.
#[derive(Clone, Debug)]
pub struct Terminal {
    pub point: Point,
    pub vertex: usize,
    pub vertex_id: u64,
    pub access_edges: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ArrangementGraph {
    pub clip: Disk,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// WALK speed used by injected terminals; `None` before any injection.
    pub epsilon: Option<f64>,
    /// Number of vertex merges that occurred during construction.
    pub merge_events: u64,
    lines: Vec<MarkedLine>,
    line_index: HashMap<u64, usize>,
    /// Per line: vertices sorted by arclength parameter.
    line_paths: BTreeMap<u64, Vec<(f64, usize)>>,
    adjacency: Vec<Vec<usize>>,
    grid: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
    terminals: Vec<usize>,
    id_to_vertex: HashMap<u64, usize>,
}

impl ArrangementGraph {
    pub fn adjacency(&self, vertex: usize) -> &[usize] {
        &self.adjacency[vertex]
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn line(&self, id: u64) -> Option<&MarkedLine> {
        self.line_index.get(&id).map(|&i| &self.lines[i])
    }

    pub fn lines(&self) -> &[MarkedLine] {
        &self.lines
    }

    pub fn line_path(&self, id: u64) -> Option<&[(f64, usize)]> {
        self.line_paths.get(&id).map(|v| v.as_slice())
    }

    pub fn merge_tol(&self) -> f64 {
        MERGE_TOL_REL * self.clip.radius
    }

    /// Sum of non-WALK edge lengths.
    pub fn total_line_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.line.is_some())
            .map(|e| e.length)
            .sum()
    }

    fn grid_key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn find_nearby_vertex(&self, p: Point, tol: f64) -> Option<usize> {
        let (cx, cy) = self.grid_key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cellv) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &vi in cellv {
                        let d = self.vertices[vi].point.dist(p);
                        if d <= tol && best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, vi));
                        }
                    }
                }
            }
        }
        best.map(|(_, vi)| vi)
    }

    /// Insert a vertex, merging into an existing one within tolerance.
    /// Returns (index, merged).
    fn insert_vertex(&mut self, mut id: u64, p: Point, line_ids: &[u64]) -> (usize, bool) {
        let tol = self.merge_tol();
        if let Some(vi) = self.find_nearby_vertex(p, tol) {
            for &lid in line_ids {
                if !self.vertices[vi].lines.contains(&lid) {
                    self.vertices[vi].lines.push(lid);
                }
            }
            return (vi, true);
        }
        while self.id_to_vertex.contains_key(&id) {
            id = mix(id, 1);
        }
        let vi = self.vertices.len();
        self.vertices.push(Vertex {
            id,
            point: p,
            lines: line_ids.to_vec(),
        });
        self.id_to_vertex.insert(id, vi);
        let key = self.grid_key(p);
        self.grid.entry(key).or_default().push(vi);
        (vi, false)
    }

    fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.vertices.len()];
        for (ei, e) in self.edges.iter().enumerate() {
            self.adjacency[e.u].push(ei);
            self.adjacency[e.v].push(ei);
        }
    }

    fn push_edge(&mut self, u: usize, v: usize, line: Option<u64>, length: f64, speed: f64) {
        let id = match line {
            Some(lid) => mix(
                mix(mix(SALT_EDGE, lid), self.vertices[u].id),
                self.vertices[v].id,
            ),
            None => mix(mix(SALT_WALK, self.vertices[u].id), self.vertices[v].id),
        };
        self.edges.push(Edge {
            id,
            u,
            v,
            line,
            length,
            speed,
            time: length / speed,
        });
    }

    fn has_edge_between(&self, u: usize, v: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.u == u && e.v == v) || (e.u == v && e.v == u))
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct VertexDoc {
            id: u64,
            x: f64,
            y: f64,
        }
        #[derive(Serialize)]
        struct EdgeDoc {
            id: u64,
            u: u64,
            v: u64,
            line: Option<u64>,
            length: f64,
            speed: f64,
            time: f64,
        }
        #[derive(Serialize)]
        struct GraphDoc {
            vertices: Vec<VertexDoc>,
            edges: Vec<EdgeDoc>,
        }
        let doc = GraphDoc {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexDoc {
                    id: v.id,
                    x: v.point.x,
                    y: v.point.y,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id,
                    u: self.vertices[e.u].id,
                    v: self.vertices[e.v].id,
                    line: e.line,
                    length: e.length,
                    speed: e.speed,
                    time: e.time,
                })
                .collect(),
        };
        to_string_17(&doc)
    }
}

/// Build the arrangement of a sample inside a clip disk.
pub fn build(sample: &LineSample, clip: Disk) -> Result<ArrangementGraph> {
    build_capped(sample, clip, DEFAULT_MAX_INTERSECTIONS)
}

pub fn build_capped(
    sample: &LineSample,
    clip: Disk,
    max_intersections: u64,
) -> Result<ArrangementGraph> {
    let tol = MERGE_TOL_REL * clip.radius;
    if clip.center.dist(sample.window.center) + clip.radius > sample.window.radius + tol {
        return Err(Error::invalid_geometry(
            "clip disk must lie inside the sample window",
        ));
    }

    // Lines with a non-empty chord, in id order, plus chord bounding boxes
    // for cheap pair rejection.
    struct Chord {
        ml: MarkedLine,
        t0: f64,
        t1: f64,
        bb_min: Point,
        bb_max: Point,
    }
    let mut chords: Vec<Chord> = Vec::new();
    let mut lines_sorted: Vec<MarkedLine> = sample.lines.clone();
    lines_sorted.sort_by_key(|ml| ml.id);
    for ml in &lines_sorted {
        if let Some((t0, t1)) = ml.line.chord_in_disk(&clip) {
            let a = ml.line.point_at(t0);
            let b = ml.line.point_at(t1);
            chords.push(Chord {
                ml: *ml,
                t0,
                t1,
                bb_min: Point::new(a.x.min(b.x), a.y.min(b.y)),
                bb_max: Point::new(a.x.max(b.x), a.y.max(b.y)),
            });
        }
    }

    // Pairwise intersections inside the clip, generated in (i, j) order.
    let clip_r = clip.radius * (1.0 + 1e-12);
    let candidates: Vec<Vec<(u64, u64, Point)>> = chords
        .par_iter()
        .enumerate()
        .map(|(i, ci)| {
            let mut out = Vec::new();
            for cj in chords[i + 1..].iter() {
                if ci.bb_min.x > cj.bb_max.x + tol
                    || cj.bb_min.x > ci.bb_max.x + tol
                    || ci.bb_min.y > cj.bb_max.y + tol
                    || cj.bb_min.y > ci.bb_max.y + tol
                {
                    continue;
                }
                if let Some(p) = ci.ml.line.intersect(&cj.ml.line) {
                    if p.dist(clip.center) <= clip_r {
                        out.push((ci.ml.id, cj.ml.id, p));
                    }
                }
            }
            out
        })
        .collect();

    let total: u64 = candidates.iter().map(|v| v.len() as u64).sum();
    if total > max_intersections {
        return Err(Error::resource_cap(format!(
            "{total} intersections exceed the cap {max_intersections}"
        )));
    }

    let mut graph = ArrangementGraph {
        clip,
        vertices: Vec::new(),
        edges: Vec::new(),
        epsilon: None,
        merge_events: 0,
        line_index: lines_sorted
            .iter()
            .enumerate()
            .map(|(i, ml)| (ml.id, i))
            .collect(),
        lines: lines_sorted,
        line_paths: BTreeMap::new(),
        adjacency: Vec::new(),
        grid: HashMap::new(),
        cell: (2.0 * tol).max(1e-300),
        terminals: Vec::new(),
        id_to_vertex: HashMap::new(),
    };

    let mut paths: BTreeMap<u64, Vec<(f64, usize)>> = BTreeMap::new();
    for group in &candidates {
        for &(la, lb, p) in group {
            let id = mix(mix(SALT_INTERSECTION, la), lb);
            let (vi, merged) = graph.insert_vertex(id, p, &[la, lb]);
            if merged {
                graph.merge_events += 1;
            }
            let ta = graph.line(la).unwrap().line.param_of(p);
            let tb = graph.line(lb).unwrap().line.param_of(p);
            paths.entry(la).or_default().push((ta, vi));
            paths.entry(lb).or_default().push((tb, vi));
        }
    }

    // Chord endpoints on the clip boundary; kept for every line so that
    // intersection-free lines still carry traversable edges.
    for c in &chords {
        for (end, t) in [(0u64, c.t0), (1u64, c.t1)] {
            let id = mix(mix(SALT_BOUNDARY, c.ml.id), end);
            let p = c.ml.line.point_at(t);
            let (vi, merged) = graph.insert_vertex(id, p, &[c.ml.id]);
            if merged {
                graph.merge_events += 1;
            }
            paths.entry(c.ml.id).or_default().push((t, vi));
        }
    }

    // Per-line ordering and consecutive edges.
    for (lid, tv) in paths.iter_mut() {
        tv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        tv.dedup_by_key(|(_, vi)| *vi);
        let speed = graph.line(*lid).unwrap().v;
        for w in 0..tv.len().saturating_sub(1) {
            let (ta, ua) = tv[w];
            let (tb, ub) = tv[w + 1];
            let length = tb - ta;
            if length > 0.0 {
                graph.push_edge(ua, ub, Some(*lid), length, speed);
            }
        }
    }
    graph.line_paths = paths;
    graph.rebuild_adjacency();
    Ok(graph)
}

impl ArrangementGraph {
    /// Attach a terminal at `x`: a vertex at `x`, WALK edges at speed
    /// `epsilon` to the perpendicular feet on the `k_nearest` closest
    /// lines (splitting the containing edges), and a direct WALK edge to
    /// every previously injected terminal. Returns the augmented graph;
    /// the receiver is left untouched.
    pub fn inject_terminal(
        &self,
        x: Point,
        epsilon: f64,
        k_nearest: usize,
    ) -> Result<(ArrangementGraph, Terminal)> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid_parameter("walk speed must be positive"));
        }
        if !self.clip.contains(x, self.merge_tol()) {
            return Err(Error::invalid_geometry("terminal lies outside the clip disk"));
        }
        if let Some(eps) = self.epsilon {
            if eps != epsilon {
                return Err(Error::invalid_parameter(format!(
                    "graph already carries walk speed {eps}, got {epsilon}"
                )));
            }
        }
        let mut g = self.clone();
        g.epsilon = Some(epsilon);
        let tol = g.merge_tol();

        let term_id = mix(mix(SALT_TERMINAL, x.x.to_bits()), x.y.to_bits());
        let (tv, _) = g.insert_vertex(term_id, x, &[]);
        let term_vertex_id = g.vertices[tv].id;
        let mut access = Vec::new();

        // Edge locator for splitting, keyed by (line, endpoints).
        let mut locator: HashMap<(u64, usize, usize), usize> = HashMap::new();
        for (ei, e) in g.edges.iter().enumerate() {
            if let Some(lid) = e.line {
                locator.insert((lid, e.u.min(e.v), e.u.max(e.v)), ei);
            }
        }

        // Closest lines by perpendicular distance, ties by id.
        let mut order: Vec<(f64, u64)> = g
            .line_paths
            .keys()
            .map(|&lid| (g.line(lid).unwrap().line.distance(x), lid))
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        order.truncate(k_nearest);

        for (_, lid) in order {
            let ml = *g.line(lid).unwrap();
            let path = g.line_paths.get(&lid).unwrap().clone();
            if path.len() < 2 {
                continue;
            }
            let t_min = path.first().unwrap().0;
            let t_max = path.last().unwrap().0;
            let t = ml.line.param_of(x).clamp(t_min, t_max);
            let foot = ml.line.point_at(t);

            // An existing path vertex within tolerance serves as the foot;
            // otherwise the containing edge is split. The split vertex may
            // turn out to be the terminal itself when x lies on the line.
            let pos = path.partition_point(|(tk, _)| *tk < t);
            let near = [pos.checked_sub(1), Some(pos)]
                .into_iter()
                .flatten()
                .filter_map(|k| path.get(k).copied())
                .filter(|(tk, _)| (tk - t).abs() <= tol)
                .min_by(|a, b| {
                    (a.0 - t).abs().partial_cmp(&(b.0 - t).abs()).unwrap()
                });
            let fv = match near {
                Some((_, vk)) => vk,
                None => {
                    let (tu, u) = path[pos - 1];
                    let (tw, w) = path[pos];
                    let foot_id = mix(mix(SALT_FOOT, lid), term_vertex_id);
                    let (fv, _) = g.insert_vertex(foot_id, foot, &[lid]);
                    if !g.vertices[fv].lines.contains(&lid) {
                        g.vertices[fv].lines.push(lid);
                    }
                    let key = (lid, u.min(w), u.max(w));
                    let ei = *locator
                        .get(&key)
                        .ok_or_else(|| {
                            Error::invalid_geometry("line path inconsistent with edge set")
                        })?;
                    let speed = g.edges[ei].speed;
                    g.edges[ei] = Edge {
                        id: mix(
                            mix(mix(SALT_EDGE, lid), g.vertices[u].id),
                            g.vertices[fv].id,
                        ),
                        u,
                        v: fv,
                        line: Some(lid),
                        length: t - tu,
                        speed,
                        time: (t - tu) / speed,
                    };
                    locator.remove(&key);
                    locator.insert((lid, u.min(fv), u.max(fv)), ei);
                    g.push_edge(fv, w, Some(lid), tw - t, speed);
                    locator.insert((lid, fv.min(w), fv.max(w)), g.edges.len() - 1);
                    let pv = g.line_paths.get_mut(&lid).unwrap();
                    pv.insert(pos, (t, fv));
                    fv
                }
            };
            if fv != tv {
                let length = x.dist(g.vertices[fv].point);
                if length > 0.0 && !g.has_edge_between(tv, fv) {
                    g.push_edge(tv, fv, None, length, epsilon);
                    access.push(g.edges.last().unwrap().id);
                }
            }
        }

        // Direct WALK edges to previously injected terminals keep any pair
        // of points trivially connected.
        for &ot in &self.terminals {
            if ot != tv && !g.has_edge_between(tv, ot) {
                let length = x.dist(g.vertices[ot].point);
                if length > 0.0 {
                    g.push_edge(tv, ot, None, length, epsilon);
                    access.push(g.edges.last().unwrap().id);
                }
            }
        }

        g.terminals.push(tv);
        g.rebuild_adjacency();
        let terminal = Terminal {
            point: x,
            vertex: tv,
            vertex_id: term_vertex_id,
            access_edges: access,
        };
        Ok((g, terminal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Line, ORIGIN};
    use crate::line_process::{sample, ProcessParams};

    fn manual_sample(lines: Vec<(f64, f64, f64)>, window_r: f64) -> LineSample {
        LineSample {
            params: ProcessParams::new(3.0, 0).unwrap(),
            window: Disk::new(ORIGIN, window_r).unwrap(),
            v_floor: lines.iter().map(|l| l.2).fold(f64::INFINITY, f64::min),
            lines: lines
                .into_iter()
                .enumerate()
                .map(|(i, (phi, r, v))| MarkedLine {
                    id: i as u64,
                    line: Line::new(phi, r).unwrap(),
                    v,
                })
                .collect(),
        }
    }

    #[test]
    fn two_crossing_lines() {
        let s = manual_sample(
            vec![(0.0, 0.0, 1.0), (std::f64::consts::FRAC_PI_2, 0.0, 2.0)],
            1.0,
        );
        let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
        assert_eq!(g.vertices.len(), 5);
        assert_eq!(g.edges.len(), 4);
        let interior: Vec<_> = g.vertices.iter().filter(|v| v.lines.len() == 2).collect();
        assert_eq!(interior.len(), 1);
        assert!(interior[0].point.dist(ORIGIN) < 1e-12);
    }

    #[test]
    fn parallel_lines_have_no_mutual_vertices() {
        let s = manual_sample(vec![(0.3, 0.0, 1.0), (0.3, 0.4, 1.0)], 1.0);
        let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
        assert!(g.vertices.iter().all(|v| v.lines.len() <= 1));
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn general_position_count() {
        // Lines through a tiny disk, clipped far away: all pairwise
        // intersections are interior.
        let n = 7usize;
        let lines: Vec<(f64, f64, f64)> = (0..n)
            .map(|i| {
                (
                    std::f64::consts::PI * (i as f64 + 0.5) / (n as f64 + 1.0),
                    0.01 * i as f64,
                    1.0,
                )
            })
            .collect();
        let s = manual_sample(lines, 50.0);
        let g = build(&s, Disk::new(ORIGIN, 50.0).unwrap()).unwrap();
        let interior = g.vertices.iter().filter(|v| v.lines.len() >= 2).count();
        assert_eq!(interior, n * (n - 1) / 2);
        assert_eq!(g.vertices.len(), interior + 2 * n);
    }

    #[test]
    fn chord_length_sum_matches_edges() {
        let p = ProcessParams::new(3.0, 77).unwrap();
        let s = sample(p, Disk::new(ORIGIN, 2.0).unwrap(), 0.4).unwrap();
        let clip = Disk::new(ORIGIN, 2.0).unwrap();
        let g = build(&s, clip).unwrap();
        let chord_sum: f64 = s
            .lines
            .iter()
            .filter_map(|ml| ml.line.chord_in_disk(&clip))
            .map(|(t0, t1)| t1 - t0)
            .sum();
        let edge_sum = g.total_line_edge_length();
        assert!(
            ((edge_sum - chord_sum) / chord_sum).abs() < 1e-9,
            "{edge_sum} vs {chord_sum}"
        );
    }

    #[test]
    fn graph_is_simple_with_positive_times() {
        for seed in 0..30 {
            let p = ProcessParams::new(3.0, seed).unwrap();
            let s = sample(p, Disk::new(ORIGIN, 2.0).unwrap(), 0.5).unwrap();
            let g = build(&s, Disk::new(ORIGIN, 2.0).unwrap()).unwrap();
            let (g, _) = g.inject_terminal(Point::new(-0.4, 0.3), 0.05, 64).unwrap();
            let (g, _) = g.inject_terminal(Point::new(0.4, -0.3), 0.05, 64).unwrap();
            let mut pairs = std::collections::HashSet::new();
            for e in &g.edges {
                assert!(e.time > 0.0, "seed {seed}: nonpositive edge time");
                assert!(e.length > 0.0);
                assert!(
                    pairs.insert((e.u.min(e.v), e.u.max(e.v))),
                    "seed {seed}: parallel edge between {} and {}",
                    e.u,
                    e.v
                );
            }
        }
    }

    #[test]
    fn no_merge_events_on_random_samples() {
        let mut merges = 0;
        for seed in 0..1000 {
            let p = ProcessParams::new(3.0, seed).unwrap();
            let s = sample(p, Disk::new(ORIGIN, 1.0).unwrap(), 0.8).unwrap();
            let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
            merges += g.merge_events;
        }
        assert_eq!(merges, 0);
    }

    #[test]
    fn refine_preserves_ids_of_untouched_lines() {
        // Two crossing lines; the "refined" sample adds a third line that
        // crosses line 1 but not line 0 inside the clip.
        let base = manual_sample(
            vec![(0.0, -0.5, 1.0), (std::f64::consts::FRAC_PI_2, 0.0, 1.0)],
            4.0,
        );
        let mut refined = base.clone();
        refined.lines.push(MarkedLine {
            id: 2,
            line: Line::new(0.0, 0.5).unwrap(),
            v: 0.9,
        });
        refined.v_floor = 0.9;
        let clip = Disk::new(ORIGIN, 1.0).unwrap();
        let g0 = build(&base, clip).unwrap();
        let g1 = build(&refined, clip).unwrap();

        // All vertices derived from line 0 keep their ids.
        let ids0: Vec<u64> = g0
            .vertices
            .iter()
            .filter(|v| v.lines.contains(&0))
            .map(|v| v.id)
            .collect();
        for id in &ids0 {
            assert!(g1.vertices.iter().any(|v| v.id == *id));
        }
        // Line 0's edge ids are preserved (no new line crosses it).
        let edges_on = |g: &ArrangementGraph, lid: u64| -> Vec<u64> {
            let mut v: Vec<u64> = g
                .edges
                .iter()
                .filter(|e| e.line == Some(lid))
                .map(|e| e.id)
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(edges_on(&g0, 0), edges_on(&g1, 0));
        // Line 1 gained a vertex, so its edge set changed.
        assert_ne!(edges_on(&g0, 1), edges_on(&g1, 1));
    }

    #[test]
    fn inject_splits_edges_conservatively() {
        let s = manual_sample(vec![(0.0, 0.0, 2.0)], 2.0);
        let clip = Disk::new(ORIGIN, 2.0).unwrap();
        let g = build(&s, clip).unwrap();
        let chord: f64 = g.total_line_edge_length();
        let x = Point::new(0.7, 0.9);
        let (g2, term) = g.inject_terminal(x, 0.05, 8).unwrap();
        // Split halves preserve total length and time.
        let total: f64 = g2.total_line_edge_length();
        assert!(((total - chord) / chord).abs() < 1e-12);
        let time: f64 = g2
            .edges
            .iter()
            .filter(|e| e.line.is_some())
            .map(|e| e.time)
            .sum();
        assert!(((time - chord / 2.0) / (chord / 2.0)).abs() < 1e-12);
        // Access edge time = perpendicular distance / epsilon (the line with
        // phi = 0 is the y-axis, so the distance from x is 0.7).
        let e = g2
            .edges
            .iter()
            .find(|e| e.line.is_none())
            .expect("walk edge");
        assert!((e.time - 0.7 / 0.05).abs() < 1e-12);
        assert_eq!(term.access_edges.len(), 1);
        // The original graph is untouched.
        assert!(g.epsilon.is_none());
    }

    #[test]
    fn inject_at_existing_vertex_reuses_it() {
        let s = manual_sample(
            vec![(0.0, 0.0, 1.0), (std::f64::consts::FRAC_PI_2, 0.0, 1.0)],
            1.0,
        );
        let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
        let nv = g.vertices.len();
        let (g2, term) = g.inject_terminal(ORIGIN, 0.01, 4).unwrap();
        assert_eq!(g2.vertices.len(), nv);
        assert!(term.access_edges.is_empty());
        assert_eq!(g2.vertices[term.vertex].point.dist(ORIGIN), 0.0);
    }

    #[test]
    fn inject_outside_clip_fails() {
        let s = manual_sample(vec![(0.0, 0.0, 1.0)], 2.0);
        let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
        assert!(g.inject_terminal(Point::new(1.5, 0.0), 0.1, 4).is_err());
    }

    #[test]
    fn second_terminal_gets_direct_walk_edge() {
        let s = manual_sample(vec![(0.0, 0.0, 1.0)], 2.0);
        let g = build(&s, Disk::new(ORIGIN, 2.0).unwrap()).unwrap();
        let a = Point::new(0.5, 1.0);
        let b = Point::new(-0.5, -1.0);
        let (g1, _) = g.inject_terminal(a, 0.1, 4).unwrap();
        let (g2, tb) = g1.inject_terminal(b, 0.1, 4).unwrap();
        let direct = g2.edges.iter().find(|e| {
            e.line.is_none()
                && ((g2.vertices[e.u].point == a && g2.vertices[e.v].point == b)
                    || (g2.vertices[e.u].point == b && g2.vertices[e.v].point == a))
        });
        let direct = direct.expect("terminal-terminal walk edge");
        assert!((direct.length - a.dist(b)).abs() < 1e-12);
        assert!(tb.access_edges.contains(&direct.id));
    }

    #[test]
    fn intersection_cap_is_enforced() {
        let n = 40usize;
        let lines: Vec<(f64, f64, f64)> = (0..n)
            .map(|i| {
                (
                    std::f64::consts::PI * (i as f64 + 0.5) / (n as f64 + 1.0),
                    1e-3 * i as f64,
                    1.0,
                )
            })
            .collect();
        let s = manual_sample(lines, 10.0);
        let err = build_capped(&s, Disk::new(ORIGIN, 10.0).unwrap(), 100).unwrap_err();
        assert!(matches!(err, Error::ResourceCap(_)));
    }

    #[test]
    fn graph_json_is_well_formed() {
        let s = manual_sample(
            vec![(0.0, 0.0, 1.0), (std::f64::consts::FRAC_PI_2, 0.0, 1.0)],
            1.0,
        );
        let g = build(&s, Disk::new(ORIGIN, 1.0).unwrap()).unwrap();
        let text = g.to_json().unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["vertices"].as_array().unwrap().len(), 5);
        assert_eq!(parsed["edges"].as_array().unwrap().len(), 4);
    }
}
