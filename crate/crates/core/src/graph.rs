//! Finite metric graphs with exact edge lengths and combinatorial edge paths.

use std::collections::VecDeque;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::stallings::FoldLabel;

/// An oriented edge: `2e` is edge `e` traversed forward, `2e+1` backward.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfEdge(pub u32);

impl HalfEdge {
    #[inline]
    pub fn new(edge: usize, forward: bool) -> Self {
        HalfEdge(((edge as u32) << 1) | (!forward) as u32)
    }

    #[inline]
    pub fn edge(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn forward(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn rev(self) -> Self {
        HalfEdge(self.0 ^ 1)
    }
}

impl fmt::Debug for HalfEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}{}", self.edge(), if self.forward() { '+' } else { '-' })
    }
}

impl FoldLabel for HalfEdge {
    fn inv(self) -> Self {
        self.rev()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub len: Q,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<HalfEdge>>,
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            assert!(e.from < vertex_count && e.to < vertex_count, "edge endpoint out of range");
            out[e.from].push(HalfEdge::new(i, true));
            out[e.to].push(HalfEdge::new(i, false));
        }
        for o in &mut out {
            o.sort();
        }
        MetricGraph { vertex_count, edges, out }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn half_edges(&self) -> impl Iterator<Item = HalfEdge> + '_ {
        (0..2 * self.edges.len() as u32).map(HalfEdge)
    }

    #[inline]
    pub fn origin(&self, h: HalfEdge) -> usize {
        let e = &self.edges[h.edge()];
        if h.forward() {
            e.from
        } else {
            e.to
        }
    }

    #[inline]
    pub fn terminus(&self, h: HalfEdge) -> usize {
        self.origin(h.rev())
    }

    #[inline]
    pub fn len(&self, h: HalfEdge) -> &Q {
        &self.edges[h.edge()].len
    }

    /// Outgoing half-edges at `v`, sorted.
    pub fn out(&self, v: usize) -> &[HalfEdge] {
        &self.out[v]
    }

    pub fn valence(&self, v: usize) -> usize {
        self.out[v].len()
    }

    pub fn volume(&self) -> Q {
        self.edges.iter().fold(Q::zero(), |acc, e| acc + &e.len)
    }

    pub fn rank(&self) -> isize {
        self.edges.len() as isize - self.vertex_count as isize + 1
    }

    pub fn lengths(&self) -> Vec<Q> {
        self.edges.iter().map(|e| e.len.clone()).collect()
    }

    pub fn with_lengths(&self, lengths: Vec<Q>) -> MetricGraph {
        assert_eq!(lengths.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(lengths)
            .map(|(e, len)| Edge { from: e.from, to: e.to, len })
            .collect();
        MetricGraph { vertex_count: self.vertex_count, edges, out: self.out.clone() }
    }

    pub fn scaled(&self, factor: &Q) -> MetricGraph {
        self.with_lengths(self.edges.iter().map(|e| &e.len * factor).collect())
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        self.bfs_tree(0).iter().enumerate().all(|(v, p)| v == 0 || p.is_some())
    }

    /// Connected, positive lengths, every vertex of valence at least 2.
    pub fn check_core(&self) -> Result<()> {
        if self.vertex_count == 0 || self.edges.is_empty() {
            return Err(Error::InvalidGraph("empty graph".into()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !e.len.is_positive() {
                return Err(Error::InvalidGraph(format!("edge {i} has non-positive length")));
            }
        }
        for v in 0..self.vertex_count {
            match self.valence(v) {
                0 => return Err(Error::InvalidGraph(format!("isolated vertex {v}"))),
                1 => return Err(Error::InvalidGraph("valence-1 vertex".into())),
                _ => {}
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidGraph("graph is disconnected".into()));
        }
        Ok(())
    }

    /// BFS spanning tree: for each vertex, the half-edge by which it was
    /// reached (pointing away from the root).
    pub fn bfs_tree(&self, root: usize) -> Vec<Option<HalfEdge>> {
        let mut parent = vec![None; self.vertex_count];
        let mut seen = vec![false; self.vertex_count];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &h in &self.out[v] {
                let w = self.terminus(h);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(h);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    /// Tree path from the root to `v`.
    pub fn tree_path(&self, parent: &[Option<HalfEdge>], v: usize) -> Vec<HalfEdge> {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(h) = parent[cur] {
            path.push(h);
            cur = self.origin(h);
        }
        path.reverse();
        path
    }

    pub fn path_length(&self, path: &[HalfEdge]) -> Q {
        path.iter().fold(Q::zero(), |acc, h| acc + self.len(*h))
    }

    pub fn is_path(&self, path: &[HalfEdge]) -> bool {
        path.windows(2).all(|w| self.terminus(w[0]) == self.origin(w[1]))
    }

    /// Every vertex of valence two whose edges are distinct.
    pub fn bivalent_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count)
            .filter(|&v| self.valence(v) == 2 && self.out[v][0].edge() != self.out[v][1].edge())
            .collect()
    }
}

/// Free reduction of an edge path.
pub fn tighten(path: &[HalfEdge]) -> Vec<HalfEdge> {
    let mut out: Vec<HalfEdge> = Vec::with_capacity(path.len());
    for &h in path {
        if out.last() == Some(&h.rev()) {
            out.pop();
        } else {
            out.push(h);
        }
    }
    out
}

/// Cyclic reduction of a closed edge path.
pub fn cyclic_tighten(path: &[HalfEdge]) -> Vec<HalfEdge> {
    let t = tighten(path);
    let n = t.len();
    let mut i = 0;
    while i + 1 < n - i && t[i] == t[n - 1 - i].rev() {
        i += 1;
    }
    t[i..n - i].to_vec()
}

pub fn reverse_path(path: &[HalfEdge]) -> Vec<HalfEdge> {
    path.iter().rev().map(|h| h.rev()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn theta() -> MetricGraph {
        MetricGraph::new(
            2,
            (0..3).map(|_| Edge { from: 0, to: 1, len: q(1, 3) }).collect(),
        )
    }

    #[test]
    fn half_edge_encoding() {
        let h = HalfEdge::new(3, false);
        assert_eq!(h.edge(), 3);
        assert!(!h.forward());
        assert_eq!(h.rev(), HalfEdge::new(3, true));
    }

    #[test]
    fn theta_basics() {
        let g = theta();
        assert_eq!(g.rank(), 2);
        assert_eq!(g.volume(), q(1, 1));
        assert!(g.check_core().is_ok());
        assert_eq!(g.out(1).len(), 3);
        let tree = g.bfs_tree(0);
        assert_eq!(g.tree_path(&tree, 1), vec![HalfEdge::new(0, true)]);
    }

    #[test]
    fn core_check_rejects_leaf() {
        let g = MetricGraph::new(
            2,
            vec![Edge { from: 0, to: 0, len: q(1, 2) }, Edge { from: 0, to: 1, len: q(1, 2) }],
        );
        assert_eq!(g.check_core(), Err(Error::InvalidGraph("valence-1 vertex".into())));
    }

    #[test]
    fn path_tightening() {
        let a = HalfEdge::new(0, true);
        let b = HalfEdge::new(1, true);
        assert_eq!(tighten(&[a, b, b.rev(), a]), vec![a, a]);
        assert_eq!(cyclic_tighten(&[b, a, b.rev()]), vec![a]);
        assert_eq!(cyclic_tighten(&[a]), vec![a]);
    }
}
