//! Finite windows of bullseye spaces as weighted graphs.
//!
//! Circle `k` (radius `2^k`) is a regular `N`-gon whose edges carry the arc
//! length `2π 2^k / N`, so every circle has total length exactly `2π 2^k`.
//! Step `0` of each polygon lies on the disc ray (`+x`), step `N/4` on the
//! bridge axis (`+y`) and step `N/2` on the ball ray (`-x`).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::Serialize;
use thiserror::Error;

use crate::seqcore::{BitSequence, SeqError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("resolution {0} must be a multiple of 4 and at least 8")]
    ResolutionTooCoarse(usize),
    #[error("empty window [{0}, {1}]")]
    EmptyWindow(i32, i32),
    #[error("no path between the two vertices")]
    Disconnected,
    #[error("no such vertex")]
    UnknownVertex,
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Vertex {
    Basepoint,
    Circle { k: i32, step: usize },
    /// Boundary sample `j` of the disc spanning `[2^k, 2^{k+1}]` on `+x`.
    Disc { k: i32, j: usize },
    /// Boundary sample `j` of the ball spanning `[2^k, 2^{k+1}]` on `-x`.
    Ball { k: i32, j: usize },
}

impl Vertex {
    fn relabel(self, dk: i32) -> Self {
        match self {
            Vertex::Basepoint => Vertex::Basepoint,
            Vertex::Circle { k, step } => Vertex::Circle { k: k + dk, step },
            Vertex::Disc { k, j } => Vertex::Disc { k: k + dk, j },
            Vertex::Ball { k, j } => Vertex::Ball { k: k + dk, j },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Arc,
    Ray,
    Decoration,
    Bridge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug)]
pub struct MetricWindow {
    pub k_min: i32,
    pub k_max: i32,
    pub resolution: usize,
    pub vertices: Vec<Vertex>,
    pub positions: Vec<(f64, f64)>,
    pub edges: Vec<Edge>,
    index: HashMap<Vertex, usize>,
    graph: UnGraph<(), f64>,
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

struct Builder {
    vertices: Vec<Vertex>,
    positions: Vec<(f64, f64)>,
    edges: Vec<Edge>,
    index: HashMap<Vertex, usize>,
}

impl Builder {
    fn vertex(&mut self, v: Vertex, at: (f64, f64)) -> usize {
        let id = self.vertices.len();
        self.vertices.push(v);
        self.positions.push(at);
        self.index.insert(v, id);
        id
    }

    fn edge(&mut self, a: Vertex, b: Vertex, length: f64, kind: EdgeKind) {
        let (u, v) = (self.index[&a], self.index[&b]);
        self.edges.push(Edge { u, v, length, kind });
    }

    /// Upper half of the circle with diameter `[x0, x1]` on the x-axis
    /// (lower half when `x1 < x0`), joined to the two end vertices.
    fn semicircle(&mut self, x0: f64, x1: f64, ends: (Vertex, Vertex), label: impl Fn(usize) -> Vertex, segments: usize) {
        let centre = (x0 + x1) / 2.0;
        let r = (x1 - x0).abs() / 2.0;
        let step = PI * r / segments as f64;
        let mut prev = ends.0;
        for j in 1..segments {
            let theta = PI * j as f64 / segments as f64;
            let dir = if x1 > x0 { -1.0 } else { 1.0 };
            let v = label(j);
            self.vertex(v, (centre + dir * r * theta.cos(), r * theta.sin()));
            self.edge(prev, v, step, EdgeKind::Decoration);
            prev = v;
        }
        self.edge(prev, ends.1, step, EdgeKind::Decoration);
    }
}

/// Builds circles `k_min..=k_max` with their rays, decorations and bridges.
pub fn build_window(seq: &BitSequence, k_min: i32, k_max: i32, resolution: usize) -> Result<MetricWindow, GeometryError> {
    if k_min >= k_max {
        return Err(GeometryError::EmptyWindow(k_min, k_max));
    }
    if resolution < 8 || !resolution.is_multiple_of(4) {
        return Err(GeometryError::ResolutionTooCoarse(resolution));
    }
    let n = resolution;
    let mut b = Builder {
        vertices: Vec::new(),
        positions: Vec::new(),
        edges: Vec::new(),
        index: HashMap::new(),
    };
    b.vertex(Vertex::Basepoint, (0.0, 0.0));
    for k in k_min..=k_max {
        let r = pow2(k);
        for step in 0..n {
            let theta = 2.0 * PI * step as f64 / n as f64;
            b.vertex(Vertex::Circle { k, step }, (r * theta.cos(), r * theta.sin()));
        }
        let arc = 2.0 * PI * r / n as f64;
        for step in 0..n {
            b.edge(
                Vertex::Circle { k, step },
                Vertex::Circle { k, step: (step + 1) % n },
                arc,
                EdgeKind::Arc,
            );
        }
    }
    // both rays, from e through every circle crossing
    for step in [0, n / 2] {
        b.edge(Vertex::Basepoint, Vertex::Circle { k: k_min, step }, pow2(k_min), EdgeKind::Ray);
        for k in k_min..k_max {
            b.edge(Vertex::Circle { k, step }, Vertex::Circle { k: k + 1, step }, pow2(k), EdgeKind::Ray);
        }
    }
    let segments = (n / 4).max(2);
    for k in k_min..k_max {
        let (lo, hi) = (pow2(k), pow2(k + 1));
        let ends = (Vertex::Circle { k, step: 0 }, Vertex::Circle { k: k + 1, step: 0 });
        b.semicircle(lo, hi, ends, |j| Vertex::Disc { k, j }, segments);
        let ends = (Vertex::Circle { k, step: n / 2 }, Vertex::Circle { k: k + 1, step: n / 2 });
        b.semicircle(-lo, -hi, ends, |j| Vertex::Ball { k, j }, segments);
    }
    for k in k_min..k_max {
        if seq.at(k as i64)? == 1 {
            b.edge(
                Vertex::Circle { k, step: n / 4 },
                Vertex::Circle { k: k + 1, step: n / 4 },
                pow2(k),
                EdgeKind::Bridge,
            );
        }
    }
    let mut graph = UnGraph::with_capacity(b.vertices.len(), b.edges.len());
    for _ in &b.vertices {
        graph.add_node(());
    }
    for e in &b.edges {
        graph.add_edge(NodeIndex::new(e.u), NodeIndex::new(e.v), e.length);
    }
    Ok(MetricWindow {
        k_min,
        k_max,
        resolution,
        vertices: b.vertices,
        positions: b.positions,
        edges: b.edges,
        index: b.index,
        graph,
    })
}

impl MetricWindow {
    pub fn vertex(&self, v: Vertex) -> Option<usize> {
        self.index.get(&v).copied()
    }

    /// Top of circle `k`, where the bridges attach.
    pub fn top(&self, k: i32) -> Vertex {
        Vertex::Circle { k, step: self.resolution / 4 }
    }

    pub fn bridges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Bridge)
    }

    /// Total edge length of circle `k`.
    pub fn circle_length(&self, k: i32) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Arc && matches!(self.vertices[e.u], Vertex::Circle { k: kk, .. } if kk == k))
            .map(|e| e.length)
            .sum()
    }

    /// Distances from `from` to every vertex.
    pub fn distances_from(&self, from: Vertex) -> Result<Vec<Option<f64>>, GeometryError> {
        let src = self.vertex(from).ok_or(GeometryError::UnknownVertex)?;
        let found = dijkstra(&self.graph, NodeIndex::new(src), None, |e| *e.weight());
        let mut out = vec![None; self.vertices.len()];
        for (node, d) in found {
            out[node.index()] = Some(d);
        }
        Ok(out)
    }

    pub fn distance(&self, u: Vertex, v: Vertex) -> Result<f64, GeometryError> {
        let src = self.vertex(u).ok_or(GeometryError::UnknownVertex)?;
        let dst = self.vertex(v).ok_or(GeometryError::UnknownVertex)?;
        let target = NodeIndex::new(dst);
        let found = dijkstra(&self.graph, NodeIndex::new(src), Some(target), |e| *e.weight());
        found.get(&target).copied().ok_or(GeometryError::Disconnected)
    }

    pub fn is_connected(&self) -> bool {
        petgraph::algo::connected_components(&self.graph) == 1
    }
}

/// Whether `outer` with every length halved and labels moved from `k` to
/// `k - 1` is `inner`, up to relative tolerance `tol`.
pub fn scale_isomorphic(outer: &MetricWindow, inner: &MetricWindow, tol: f64) -> bool {
    if outer.k_min != inner.k_min + 1 || outer.k_max != inner.k_max + 1 || outer.edges.len() != inner.edges.len() {
        return false;
    }
    let key = |a: Vertex, b: Vertex, kind: EdgeKind| {
        let (a, b) = (format!("{a:?}"), format!("{b:?}"));
        if a <= b { (a, b, kind as u8) } else { (b, a, kind as u8) }
    };
    let mut lengths: HashMap<_, Vec<f64>> = HashMap::new();
    for e in &inner.edges {
        lengths
            .entry(key(inner.vertices[e.u], inner.vertices[e.v], e.kind))
            .or_default()
            .push(e.length);
    }
    for e in &outer.edges {
        let k = key(outer.vertices[e.u].relabel(-1), outer.vertices[e.v].relabel(-1), e.kind);
        let Some(list) = lengths.get_mut(&k) else {
            return false;
        };
        let half = e.length / 2.0;
        let Some(pos) = list.iter().position(|l| (l - half).abs() <= tol * half.max(*l)) else {
            return false;
        };
        list.swap_remove(pos);
    }
    true
}

/// Scale self-similarity of the bullseye space of `seq` on `[k_min, k_max]`.
pub fn self_similarity_check(seq: &BitSequence, k_min: i32, k_max: i32, resolution: usize) -> Result<bool, GeometryError> {
    let outer = build_window(seq, k_min + 1, k_max + 1, resolution)?;
    let inner = build_window(&seq.shifted(1), k_min, k_max, resolution)?;
    Ok(scale_isomorphic(&outer, &inner, 1e-9))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ShiftMatch {
    /// `a_k = b_{k + shift}` for every `|k| <= horizon`.
    Shift { shift: i64 },
    NotEquivalentUpTo { horizon: u64 },
}

/// Least `|N| <= max_shift` (positive first on ties) with
/// `a_k = b_{k+N}` for all `|k| <= horizon`.
pub fn shift_equivalent(a: &BitSequence, b: &BitSequence, max_shift: u64, horizon: u64) -> Result<ShiftMatch, SeqError> {
    let h = horizon as i64;
    let m = max_shift as i64;
    let wa = a.window(-h, h)?;
    let wb = b.window(-h - m, h + m)?;
    let matches = |n: i64| {
        let start = (n + m) as usize;
        wb[start..start + wa.len()] == wa[..]
    };
    for d in 0..=m {
        for n in if d == 0 { vec![0] } else { vec![d, -d] } {
            if matches(n) {
                return Ok(ShiftMatch::Shift { shift: n });
            }
        }
    }
    Ok(ShiftMatch::NotEquivalentUpTo { horizon })
}

#[derive(Serialize)]
struct VertexJson {
    id: usize,
    #[serde(flatten)]
    label: Vertex,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct WindowJson<'a> {
    k_min: i32,
    k_max: i32,
    resolution: usize,
    vertices: Vec<VertexJson>,
    edges: &'a [Edge],
}

impl Serialize for MetricWindow {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WindowJson {
            k_min: self.k_min,
            k_max: self.k_max,
            resolution: self.resolution,
            vertices: self
                .vertices
                .iter()
                .zip(&self.positions)
                .enumerate()
                .map(|(id, (&label, &(x, y)))| VertexJson { id, label, x, y })
                .collect(),
            edges: &self.edges,
        }
        .serialize(serializer)
    }
}

const CANVAS: f64 = 400.0;

/// SVG drawing of the window: rings, both rays, disc and ball decorations,
/// bridges along `+y` and the basepoint.
pub fn render_svg(w: &MetricWindow) -> String {
    let scale = (CANVAS - 20.0) / pow2(w.k_max);
    let c = CANVAS;
    let size = 2.0 * c;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    out.push_str(concat!(
        "<style>.ring{fill:none;stroke:#333}.ray{stroke:#333}.bridge{stroke:#c00;stroke-width:3}",
        ".disc{fill:#9cf;stroke:#369}.ball{fill:url(#shade);stroke:#693}.label{font:10px sans-serif}</style>\n",
        "<defs><radialGradient id=\"shade\" cx=\"35%\" cy=\"35%\"><stop offset=\"0\" stop-color=\"#efe\"/>",
        "<stop offset=\"1\" stop-color=\"#6a6\"/></radialGradient></defs>\n",
    ));
    let outer = pow2(w.k_max) * scale;
    let _ = writeln!(out, r#"<line class="ray" x1="{}" y1="{c}" x2="{}" y2="{c}"/>"#, c - outer, c + outer);
    for k in w.k_min..w.k_max {
        let (lo, hi) = (pow2(k) * scale, pow2(k + 1) * scale);
        let r = (hi - lo) / 2.0;
        let mid = (lo + hi) / 2.0;
        let _ = writeln!(out, r#"<circle class="disc" cx="{:.3}" cy="{c}" r="{r:.3}"/>"#, c + mid);
        let _ = writeln!(out, r#"<circle class="ball" cx="{:.3}" cy="{c}" r="{r:.3}"/>"#, c - mid);
        let _ = writeln!(
            out,
            r#"<text class="label" x="{:.3}" y="{:.3}" text-anchor="middle">3D</text>"#,
            c - mid,
            c + r + 10.0
        );
    }
    for k in w.k_min..=w.k_max {
        let _ = writeln!(out, r#"<circle class="ring" cx="{c}" cy="{c}" r="{:.3}"/>"#, pow2(k) * scale);
    }
    for e in w.bridges() {
        let (Vertex::Circle { k, .. }, _) = (w.vertices[e.u], w.vertices[e.v]) else {
            continue;
        };
        let _ = writeln!(
            out,
            r#"<line class="bridge" data-k="{k}" x1="{c}" y1="{:.3}" x2="{c}" y2="{:.3}"/>"#,
            c - pow2(k) * scale,
            c - pow2(k + 1) * scale
        );
    }
    let _ = writeln!(out, r#"<circle class="basepoint" cx="{c}" cy="{c}" r="3"/>"#);
    let _ = writeln!(out, r#"<text class="label" x="{}" y="{}">e</text>"#, c + 5.0, c - 5.0);
    out.push_str("</svg>\n");
    out
}
