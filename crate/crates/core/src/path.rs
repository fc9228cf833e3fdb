//! Points and tight paths in a metric graph, with rational endpoints that
//! may sit inside edges.

use num_traits::{Signed, Zero};

use crate::graph::{HalfEdge, MetricGraph};
use crate::rational::Q;

/// A point of the graph. Interior offsets are measured from the edge's
/// `from` vertex and lie strictly inside the edge.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Point {
    Vertex(usize),
    Interior { edge: usize, offset: Q },
}

impl Point {
    /// The point at distance `s` along half-edge `h`.
    pub fn on_half(g: &MetricGraph, h: HalfEdge, s: &Q) -> Point {
        let len = g.len(h);
        if s.is_zero() {
            Point::Vertex(g.origin(h))
        } else if s == len {
            Point::Vertex(g.terminus(h))
        } else {
            debug_assert!(s.is_positive() && s < len);
            let offset = if h.forward() { s.clone() } else { len - s };
            Point::Interior { edge: h.edge(), offset }
        }
    }

    /// Offset of the point along `h` when `h` starts at or passes through it.
    pub fn offset_along(&self, g: &MetricGraph, h: HalfEdge) -> Option<Q> {
        match self {
            Point::Vertex(v) => (g.origin(h) == *v).then(Q::zero),
            Point::Interior { edge, offset } => (h.edge() == *edge).then(|| {
                if h.forward() {
                    offset.clone()
                } else {
                    g.len(h) - offset
                }
            }),
        }
    }

    /// Directions leaving the point.
    pub fn directions(&self, g: &MetricGraph) -> Vec<HalfEdge> {
        match self {
            Point::Vertex(v) => g.out(*v).to_vec(),
            Point::Interior { edge, .. } => vec![HalfEdge::new(*edge, true), HalfEdge::new(*edge, false)],
        }
    }

    pub fn scaled(&self, factor: &Q) -> Point {
        match self {
            Point::Vertex(v) => Point::Vertex(*v),
            Point::Interior { edge, offset } => Point::Interior { edge: *edge, offset: offset * factor },
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, Point::Vertex(_))
    }
}

/// A segment of one half-edge, `from < to`, offsets along the half-edge.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Piece {
    pub half: HalfEdge,
    pub from: Q,
    pub to: Q,
}

impl Piece {
    pub fn len(&self) -> Q {
        &self.to - &self.from
    }

    pub fn reversed(&self, g: &MetricGraph) -> Piece {
        let l = g.len(self.half);
        Piece { half: self.half.rev(), from: l - &self.to, to: l - &self.from }
    }

    pub fn is_full(&self, g: &MetricGraph) -> bool {
        self.from.is_zero() && &self.to == g.len(self.half)
    }
}

/// A path given by its start point and pieces. Paths built through
/// [`MetricPath::push`] are tight.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MetricPath {
    pub start: Point,
    pub pieces: Vec<Piece>,
}

impl MetricPath {
    pub fn trivial(p: Point) -> Self {
        MetricPath { start: p, pieces: Vec::new() }
    }

    /// Full edges from vertex `v`, tightened.
    pub fn from_edges(g: &MetricGraph, v: usize, path: &[HalfEdge]) -> Self {
        let mut out = MetricPath::trivial(Point::Vertex(v));
        for &h in path {
            out.push(g, Piece { half: h, from: Q::zero(), to: g.len(h).clone() });
        }
        out
    }

    /// From `start` along direction `dir` for length `s` (staying on the edge).
    pub fn segment(g: &MetricGraph, start: &Point, dir: HalfEdge, s: &Q) -> Self {
        let a = start.offset_along(g, dir).expect("direction not at point");
        let b = &a + s;
        debug_assert!(&b <= g.len(dir));
        let mut out = MetricPath::trivial(start.clone());
        out.push(g, Piece { half: dir, from: a, to: b });
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn length(&self) -> Q {
        self.pieces.iter().fold(Q::zero(), |acc, p| acc + p.len())
    }

    pub fn end(&self, g: &MetricGraph) -> Point {
        match self.pieces.last() {
            None => self.start.clone(),
            Some(p) => Point::on_half(g, p.half, &p.to),
        }
    }

    pub fn first_direction(&self) -> Option<HalfEdge> {
        self.pieces.first().map(|p| p.half)
    }

    /// Direction at the end pointing back along the path.
    pub fn last_direction(&self) -> Option<HalfEdge> {
        self.pieces.last().map(|p| p.half.rev())
    }

    /// Appends a piece, cancelling backtracking and merging continuations.
    pub fn push(&mut self, g: &MetricGraph, mut p: Piece) {
        loop {
            if p.from >= p.to {
                return;
            }
            let Some(top) = self.pieces.last_mut() else {
                self.pieces.push(p);
                return;
            };
            if top.half == p.half && top.to == p.from {
                top.to = p.to;
                return;
            }
            if top.half == p.half.rev() {
                let len = g.len(p.half);
                if top.to == len - &p.from {
                    let back_to = len - &p.to;
                    if back_to > top.from {
                        top.to = back_to;
                        return;
                    }
                    if back_to == top.from {
                        self.pieces.pop();
                        return;
                    }
                    let new_from = len - &top.from;
                    self.pieces.pop();
                    p = Piece { half: p.half, from: new_from, to: p.to };
                    continue;
                }
            }
            self.pieces.push(p);
            return;
        }
    }

    pub fn concat(&self, g: &MetricGraph, other: &MetricPath) -> MetricPath {
        debug_assert_eq!(self.end(g), other.start, "concatenating non-adjacent paths");
        let mut out = self.clone();
        for p in &other.pieces {
            out.push(g, p.clone());
        }
        out
    }

    pub fn tighten(&self, g: &MetricGraph) -> MetricPath {
        let mut out = MetricPath::trivial(self.start.clone());
        for p in &self.pieces {
            out.push(g, p.clone());
        }
        out
    }

    pub fn reverse(&self, g: &MetricGraph) -> MetricPath {
        MetricPath {
            start: self.end(g),
            pieces: self.pieces.iter().rev().map(|p| p.reversed(g)).collect(),
        }
    }

    pub fn point_at(&self, g: &MetricGraph, s: &Q) -> Point {
        let mut acc = Q::zero();
        for p in &self.pieces {
            let l = p.len();
            if s <= &(&acc + &l) {
                return Point::on_half(g, p.half, &(&p.from + (s - &acc)));
            }
            acc += l;
        }
        self.end(g)
    }

    /// The part between arclengths `a ≤ b`.
    pub fn subpath(&self, g: &MetricGraph, a: &Q, b: &Q) -> MetricPath {
        debug_assert!(a <= b);
        let mut out = MetricPath::trivial(self.point_at(g, a));
        let mut acc = Q::zero();
        for p in &self.pieces {
            let l = p.len();
            let lo = &acc;
            let hi = &acc + &l;
            let s = if a > lo { a.clone() } else { lo.clone() };
            let t = if b < &hi { b.clone() } else { hi.clone() };
            if s < t {
                out.push(g, Piece { half: p.half, from: &p.from + (&s - lo), to: &p.from + (&t - lo) });
            }
            acc = hi;
            if &acc >= b {
                break;
            }
        }
        out
    }

    /// Length of the longest common initial segment of two paths from the
    /// same point.
    pub fn common_prefix(&self, other: &MetricPath) -> Q {
        let mut acc = Q::zero();
        for (p, q) in self.pieces.iter().zip(&other.pieces) {
            if p.half != q.half || p.from != q.from {
                break;
            }
            if p.to != q.to {
                let m = if p.to < q.to { &p.to } else { &q.to };
                acc += m - &p.from;
                break;
            }
            acc += p.len();
        }
        acc
    }

    pub fn scaled(&self, factor: &Q) -> MetricPath {
        MetricPath {
            start: self.start.scaled(factor),
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { half: p.half, from: &p.from * factor, to: &p.to * factor })
                .collect(),
        }
    }

    /// Start vertex and edge sequence, when every piece is a full edge.
    pub fn as_edges(&self, g: &MetricGraph) -> Option<(usize, Vec<HalfEdge>)> {
        let Point::Vertex(v) = self.start else { return None };
        if !self.pieces.iter().all(|p| p.is_full(g)) {
            return None;
        }
        Some((v, self.pieces.iter().map(|p| p.half).collect()))
    }

    /// Length after cyclic tightening of a closed path.
    pub fn cyclic_length(&self, g: &MetricGraph) -> Q {
        self.cyclic_tighten(g).length()
    }

    /// Cancels backtracking across the basepoint of a closed path.
    pub fn cyclic_tighten(&self, g: &MetricGraph) -> MetricPath {
        let mut t = self.tighten(g);
        loop {
            if t.pieces.len() < 2 {
                return t;
            }
            let first = t.pieces[0].clone();
            let last = t.pieces[t.pieces.len() - 1].clone();
            if last.half != first.half.rev() {
                return t;
            }
            let c = {
                let a = first.len();
                let b = last.len();
                if a < b {
                    a
                } else {
                    b
                }
            };
            let n = t.pieces.len();
            t.pieces[0].from += &c;
            t.pieces[n - 1].to -= &c;
            let start = Point::on_half(g, first.half, &t.pieces[0].from);
            t.pieces.retain(|p| p.from < p.to);
            t.start = start;
        }
    }

    /// Closed path at a point, conjugated to a combinatorial loop at a vertex.
    pub fn rebase_to_vertex(&self, g: &MetricGraph) -> (usize, Vec<HalfEdge>) {
        match &self.start {
            Point::Vertex(v) => {
                let (v2, hs) = self.as_edges(g).expect("loop at a vertex with partial pieces");
                debug_assert_eq!(v2, *v);
                (v2, hs)
            }
            Point::Interior { edge, offset } => {
                let h = HalfEdge::new(*edge, true);
                let v = g.origin(h);
                let lead = MetricPath {
                    start: Point::Vertex(v),
                    pieces: vec![Piece { half: h, from: Q::zero(), to: offset.clone() }],
                };
                let full = lead.concat(g, self).concat(g, &lead.reverse(g));
                full.as_edges(g).expect("rebased loop has partial pieces")
            }
        }
    }
}
