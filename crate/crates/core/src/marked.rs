//! Marked metric graphs: points of Outer space.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::{One, Zero};

use crate::aut::Automorphism;
use crate::error::{Error, Result};
use crate::graph::{cyclic_tighten, reverse_path, tighten, Edge, HalfEdge, MetricGraph};
use crate::rational::{q, Q};
use crate::word::{Basis, CyclicWord, Letter, Word};

/// A core metric graph with a marking (a based loop per generator) and a
/// comarking (a word per edge) inverse to it up to homotopy.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MarkedGraph {
    basis: Basis,
    graph: MetricGraph,
    base: usize,
    marking: Vec<Vec<HalfEdge>>,
    comarking: Vec<Word>,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
}

fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl MarkedGraph {
    /// Builds from a marking; the comarking is derived from a spanning tree.
    pub fn from_marking(basis: Basis, graph: MetricGraph, base: usize, marking: Vec<Vec<HalfEdge>>) -> Result<Self> {
        let marking = check_marking(&basis, &graph, base, marking)?;
        let comarking = derive_comarking(&basis, &graph, base, &marking)?;
        let (vn, en) = (default_names("v", graph.vertex_count()), default_names("e", graph.edge_count()));
        Ok(MarkedGraph { basis, graph, base, marking, comarking, vertex_names: vn, edge_names: en })
    }

    /// Builds from both maps and checks that they are inverse in Out.
    pub fn new(
        basis: Basis,
        graph: MetricGraph,
        base: usize,
        marking: Vec<Vec<HalfEdge>>,
        comarking: Vec<Word>,
    ) -> Result<Self> {
        let marking = check_marking(&basis, &graph, base, marking)?;
        if comarking.len() != graph.edge_count() {
            return Err(Error::InvalidGraph("comarking must name every edge".into()));
        }
        let (vn, en) = (default_names("v", graph.vertex_count()), default_names("e", graph.edge_count()));
        let g = MarkedGraph { basis, graph, base, marking, comarking, vertex_names: vn, edge_names: en };
        derive_comarking(&basis, &g.graph, base, &g.marking)?;
        let images: Vec<Word> = (0..basis.rank).map(|i| g.read_path(&g.marking[i])).collect();
        let round = Automorphism::new_unchecked(basis, images)?;
        match Automorphism::identity(basis).out_equal(&round) {
            Ok(Some(_)) => Ok(g),
            _ => Err(Error::InvalidGraph("comarking is not inverse to the marking".into())),
        }
    }

    pub fn with_names(mut self, vertex_names: Vec<String>, edge_names: Vec<String>) -> Self {
        assert_eq!(vertex_names.len(), self.graph.vertex_count());
        assert_eq!(edge_names.len(), self.graph.edge_count());
        self.vertex_names = vertex_names;
        self.edge_names = edge_names;
        self
    }

    /// Rose with petal `i` marking generator `i`.
    pub fn rose(basis: Basis, lengths: &[Q]) -> Result<Self> {
        if lengths.len() != basis.rank {
            return Err(Error::RankMismatch(basis.rank, lengths.len()));
        }
        let edges = lengths.iter().map(|l| Edge { from: 0, to: 0, len: l.clone() }).collect();
        let graph = MetricGraph::new(1, edges);
        let marking = (0..basis.rank).map(|i| vec![HalfEdge::new(i, true)]).collect();
        MarkedGraph::from_marking(basis, graph, 0, marking)
    }

    /// Rose with all petals of length `1/r`.
    pub fn standard_rose(basis: Basis) -> Self {
        let l = q(1, basis.rank as i64);
        MarkedGraph::rose(basis, &vec![l; basis.rank]).unwrap()
    }

    /// Two vertices joined by three edges; `a = e1·ē2`, `b = e2·ē3`.
    pub fn theta(lengths: [Q; 3]) -> Self {
        let basis = Basis::new(2).unwrap();
        let edges = lengths.into_iter().map(|len| Edge { from: 0, to: 1, len }).collect();
        let graph = MetricGraph::new(2, edges);
        let e = |i: usize, f: bool| HalfEdge::new(i, f);
        let marking = vec![vec![e(0, true), e(1, false)], vec![e(1, true), e(2, false)]];
        MarkedGraph::from_marking(basis, graph, 0, marking).unwrap()
    }

    /// Marking from a BFS spanning tree: generator `k` crosses the `k`-th
    /// non-tree edge.
    pub fn standard_marking(basis: Basis, graph: MetricGraph, base: usize) -> Result<Self> {
        let parent = graph.bfs_tree(base);
        let tree: Vec<bool> = tree_edges(&graph, &parent);
        let mut marking = Vec::new();
        for e in 0..graph.edge_count() {
            if tree[e] {
                continue;
            }
            let h = HalfEdge::new(e, true);
            let mut p = graph.tree_path(&parent, graph.origin(h));
            p.push(h);
            p.extend(reverse_path(&graph.tree_path(&parent, graph.terminus(h))));
            marking.push(tighten(&p));
        }
        if marking.len() != basis.rank {
            return Err(Error::RankMismatch(basis.rank, marking.len()));
        }
        MarkedGraph::from_marking(basis, graph, base, marking)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn marking(&self, i: usize) -> &[HalfEdge] {
        &self.marking[i]
    }

    pub fn markings(&self) -> &[Vec<HalfEdge>] {
        &self.marking
    }

    pub fn comarking(&self, e: usize) -> &Word {
        &self.comarking[e]
    }

    pub fn comarkings(&self) -> &[Word] {
        &self.comarking
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn volume(&self) -> Q {
        self.graph.volume()
    }

    pub fn is_normalized(&self) -> bool {
        self.volume().is_one()
    }

    /// Same marking, new edge lengths.
    pub fn with_lengths(&self, lengths: Vec<Q>) -> MarkedGraph {
        let mut g = self.clone();
        g.graph = self.graph.with_lengths(lengths);
        g
    }

    pub fn normalized(&self) -> MarkedGraph {
        let v = self.volume();
        let mut g = self.clone();
        g.graph = self.graph.scaled(&(Q::one() / v));
        g
    }

    /// Word read along an edge path through the comarking.
    pub fn read_path(&self, path: &[HalfEdge]) -> Word {
        let mut raw: Vec<Letter> = Vec::new();
        for h in path {
            let w = &self.comarking[h.edge()];
            if h.forward() {
                raw.extend_from_slice(w.letters());
            } else {
                raw.extend(w.letters().iter().rev().map(|l| -l));
            }
        }
        Word::from_letters(&raw)
    }

    pub fn read_loop(&self, path: &[HalfEdge]) -> Result<CyclicWord> {
        CyclicWord::new(&self.read_path(path))
    }

    /// Based loop realizing a word (tight, not cyclically).
    pub fn word_path(&self, letters: &[Letter]) -> Vec<HalfEdge> {
        let mut out: Vec<HalfEdge> = Vec::new();
        let push = |h: HalfEdge, out: &mut Vec<HalfEdge>| {
            if out.last() == Some(&h.rev()) {
                out.pop();
            } else {
                out.push(h);
            }
        };
        for &l in letters {
            let m = &self.marking[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                for &h in m {
                    push(h, &mut out);
                }
            } else {
                for &h in m.iter().rev() {
                    push(h.rev(), &mut out);
                }
            }
        }
        out
    }

    /// The immersed loop representing a conjugacy class.
    pub fn loop_path(&self, letters: &[Letter]) -> Vec<HalfEdge> {
        cyclic_tighten(&self.word_path(letters))
    }

    pub fn loop_length(&self, alpha: &CyclicWord) -> Result<Q> {
        if alpha.is_empty() {
            return Err(Error::TrivialClass);
        }
        Ok(self.graph.path_length(&self.loop_path(alpha.letters())))
    }

    /// `φ·G`: the marking is precomposed with `φ⁻¹`.
    pub fn act(&self, phi: &Automorphism) -> MarkedGraph {
        let inv = phi.invert().expect("automorphism");
        let marking: Vec<Vec<HalfEdge>> =
            (0..self.rank()).map(|i| self.word_path(inv.image(i).letters())).collect();
        let comarking = self.comarking.iter().map(|w| phi.apply(w)).collect();
        let mut g = self.clone();
        g.marking = marking;
        g.comarking = comarking;
        g
    }

    /// Length of the shortest embedded cycle.
    pub fn injectivity_radius(&self) -> Q {
        shortest_cycle(&self.graph)
    }

    /// Contracts a forest of edges, keeping the marking.
    pub fn collapse(&self, edges: &[usize]) -> Result<MarkedGraph> {
        let n = self.graph.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        let mut dead = vec![false; self.graph.edge_count()];
        for &e in edges {
            let edge = self.graph.edge(e);
            let (a, b) = (find(&mut parent, edge.from), find(&mut parent, edge.to));
            if a == b {
                return Err(Error::InvalidGraph("collapsed edges contain a cycle".into()));
            }
            parent[b] = a;
            dead[e] = true;
        }
        let mut index = vec![usize::MAX; n];
        let mut names = Vec::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            if index[r] == usize::MAX {
                index[r] = names.len();
                names.push(self.vertex_names[v].clone());
            }
        }
        let mut new_id = vec![usize::MAX; self.graph.edge_count()];
        let mut new_edges = Vec::new();
        let mut edge_names = Vec::new();
        for (e, edge) in self.graph.edges().iter().enumerate() {
            if dead[e] {
                continue;
            }
            new_id[e] = new_edges.len();
            let (f, t) = (find(&mut parent, edge.from), find(&mut parent, edge.to));
            new_edges.push(Edge { from: index[f], to: index[t], len: edge.len.clone() });
            edge_names.push(self.edge_names[e].clone());
        }
        let graph = MetricGraph::new(names.len(), new_edges);
        let marking = self
            .marking
            .iter()
            .map(|p| {
                let q: Vec<HalfEdge> =
                    p.iter().filter(|h| !dead[h.edge()]).map(|h| HalfEdge::new(new_id[h.edge()], h.forward())).collect();
                tighten(&q)
            })
            .collect();
        let base = index[find(&mut parent, self.base)];
        Ok(MarkedGraph::from_marking(self.basis, graph, base, marking)?.with_names(names, edge_names))
    }

    /// Replaces the graph data wholesale, deriving a fresh comarking.
    pub fn rebuild(basis: Basis, graph: MetricGraph, base: usize, marking: Vec<Vec<HalfEdge>>) -> Result<Self> {
        MarkedGraph::from_marking(basis, graph, base, marking)
    }
}

pub(crate) fn tree_edges(graph: &MetricGraph, parent: &[Option<HalfEdge>]) -> Vec<bool> {
    let mut tree = vec![false; graph.edge_count()];
    for h in parent.iter().flatten() {
        tree[h.edge()] = true;
    }
    tree
}

fn check_marking(
    basis: &Basis,
    graph: &MetricGraph,
    base: usize,
    marking: Vec<Vec<HalfEdge>>,
) -> Result<Vec<Vec<HalfEdge>>> {
    graph.check_core()?;
    if graph.rank() != basis.rank as isize {
        return Err(Error::InvalidGraph(format!("graph rank {} differs from basis rank {}", graph.rank(), basis.rank)));
    }
    if base >= graph.vertex_count() {
        return Err(Error::InvalidGraph("base vertex out of range".into()));
    }
    if marking.len() != basis.rank {
        return Err(Error::InvalidGraph("marking must name every generator".into()));
    }
    let mut out = Vec::new();
    for p in marking {
        if p.iter().any(|h| h.edge() >= graph.edge_count()) {
            return Err(Error::InvalidGraph("marking uses an unknown edge".into()));
        }
        if !graph.is_path(&p) || p.is_empty() || graph.origin(p[0]) != base || graph.terminus(p[p.len() - 1]) != base {
            return Err(Error::InvalidGraph("marking path is not a closed path at the base vertex".into()));
        }
        let t = tighten(&p);
        if t.is_empty() {
            return Err(Error::InvalidGraph("marking path is null-homotopic".into()));
        }
        out.push(t);
    }
    Ok(out)
}

/// Reads each marking loop in the basis of non-tree edges and inverts.
fn derive_comarking(basis: &Basis, graph: &MetricGraph, base: usize, marking: &[Vec<HalfEdge>]) -> Result<Vec<Word>> {
    let parent = graph.bfs_tree(base);
    let tree = tree_edges(graph, &parent);
    let mut index = vec![usize::MAX; graph.edge_count()];
    let mut k = 0;
    for e in 0..graph.edge_count() {
        if !tree[e] {
            index[e] = k;
            k += 1;
        }
    }
    let images: Vec<Word> = marking
        .iter()
        .map(|p| {
            let raw: Vec<Letter> = p
                .iter()
                .filter(|h| !tree[h.edge()])
                .map(|h| {
                    let l = index[h.edge()] as Letter + 1;
                    if h.forward() {
                        l
                    } else {
                        -l
                    }
                })
                .collect();
            Word::from_letters(&raw)
        })
        .collect();
    let psi = Automorphism::new_unchecked(*basis, images)?;
    let inv = psi
        .invert()
        .map_err(|_| Error::InvalidGraph("marking is not a homotopy equivalence".into()))?;
    Ok((0..graph.edge_count())
        .map(|e| if tree[e] { Word::identity() } else { inv.image(index[e]).clone() })
        .collect())
}

/// Shortest embedded cycle via Dijkstra with each edge removed in turn.
pub fn shortest_cycle(g: &MetricGraph) -> Q {
    let mut best: Option<Q> = None;
    for e in 0..g.edge_count() {
        let edge = g.edge(e);
        let cand = if edge.from == edge.to {
            Some(edge.len.clone())
        } else {
            dijkstra_avoiding(g, edge.to, edge.from, e).map(|d| d + &edge.len)
        };
        if let Some(c) = cand {
            if best.as_ref().map_or(true, |b| c < *b) {
                best = Some(c);
            }
        }
    }
    best.expect("core graph has a cycle")
}

fn dijkstra_avoiding(g: &MetricGraph, src: usize, dst: usize, skip: usize) -> Option<Q> {
    let mut dist: Vec<Option<Q>> = vec![None; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[src] = Some(Q::zero());
    heap.push(Reverse((Q::zero(), src)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].as_ref().is_some_and(|x| *x < d) {
            continue;
        }
        if v == dst {
            return Some(d);
        }
        for &h in g.out(v) {
            if h.edge() == skip {
                continue;
            }
            let w = g.terminus(h);
            let nd = &d + g.len(h);
            if dist[w].as_ref().map_or(true, |x| nd < *x) {
                dist[w] = Some(nd.clone());
                heap.push(Reverse((nd, w)));
            }
        }
    }
    None
}
