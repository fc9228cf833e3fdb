//! Candidate loops and the asymmetric Lipschitz metric.

use std::collections::BTreeMap;

use num_traits::One;

use crate::aut::Automorphism;
use crate::error::{Error, Result};
use crate::graph::{HalfEdge, MetricGraph};
use crate::marked::MarkedGraph;
use crate::rational::{LogScalar, Q};
use crate::word::CyclicWord;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Shape {
    Circle,
    FigureEight,
    Barbell,
}

/// An immersed loop crossing each edge at most twice.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Candidate {
    pub word: CyclicWord,
    pub path: Vec<HalfEdge>,
    pub shape: Shape,
}

#[derive(Clone, Debug)]
struct Cycle {
    path: Vec<HalfEdge>,
    vertices: Vec<usize>,
}

impl Cycle {
    /// The cycle rotated to start at `v`.
    fn at(&self, g: &MetricGraph, v: usize) -> Vec<HalfEdge> {
        let i = self.path.iter().position(|&h| g.origin(h) == v).expect("vertex on cycle");
        let mut p = self.path[i..].to_vec();
        p.extend_from_slice(&self.path[..i]);
        p
    }

    fn reversed_at(&self, g: &MetricGraph, v: usize) -> Vec<HalfEdge> {
        self.at(g, v).iter().rev().map(|h| h.rev()).collect()
    }
}

/// Every embedded cycle once; each starts along its least edge, forward.
fn simple_cycles(g: &MetricGraph) -> Vec<Cycle> {
    let mut out = Vec::new();
    for e0 in 0..g.edge_count() {
        let h0 = HalfEdge::new(e0, true);
        let s = g.origin(h0);
        let mut on_path = vec![false; g.vertex_count()];
        on_path[s] = true;
        let mut path = vec![h0];
        extend_cycles(g, e0, s, &mut on_path, &mut path, &mut out);
    }
    out
}

fn extend_cycles(
    g: &MetricGraph,
    e0: usize,
    s: usize,
    on_path: &mut [bool],
    path: &mut Vec<HalfEdge>,
    out: &mut Vec<Cycle>,
) {
    let v = g.terminus(*path.last().unwrap());
    if v == s {
        let vertices = path.iter().map(|&h| g.origin(h)).collect();
        out.push(Cycle { path: path.clone(), vertices });
        return;
    }
    if on_path[v] {
        return;
    }
    on_path[v] = true;
    let last = *path.last().unwrap();
    for &h in g.out(v) {
        if h.edge() <= e0 || h == last.rev() {
            continue;
        }
        let w = g.terminus(h);
        if w != s && on_path[w] {
            continue;
        }
        path.push(h);
        extend_cycles(g, e0, s, on_path, path, out);
        path.pop();
    }
    on_path[v] = false;
}

/// Embedded arcs from `from` to a vertex of `target`, avoiding `blocked`
/// vertices in their interiors.
fn arcs(g: &MetricGraph, from: usize, target: &[bool], blocked: &[bool]) -> Vec<Vec<HalfEdge>> {
    fn go(
        g: &MetricGraph,
        v: usize,
        target: &[bool],
        blocked: &[bool],
        seen: &mut [bool],
        path: &mut Vec<HalfEdge>,
        out: &mut Vec<Vec<HalfEdge>>,
    ) {
        for &h in g.out(v) {
            if h.edge() == path.last().map_or(usize::MAX, |p| p.edge()) {
                continue;
            }
            let w = g.terminus(h);
            if target[w] {
                path.push(h);
                out.push(path.clone());
                path.pop();
            } else if !blocked[w] && !seen[w] {
                seen[w] = true;
                path.push(h);
                go(g, w, target, blocked, seen, path, out);
                path.pop();
                seen[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; g.vertex_count()];
    seen[from] = true;
    go(g, from, target, blocked, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Circles, figure-eights and barbells of `g`, one per unoriented class,
/// sorted by word.
pub fn candidates(g: &MarkedGraph) -> Vec<Candidate> {
    let graph = g.graph();
    let cycles = simple_cycles(graph);
    let mut found: BTreeMap<CyclicWord, Candidate> = BTreeMap::new();
    let mut add = |path: Vec<HalfEdge>, shape: Shape| {
        let word = g.read_loop(&path).expect("embedded loops are essential");
        let key = word.unoriented();
        found.entry(key.clone()).or_insert(Candidate {
            word: key.clone(),
            path: if key == word { path } else { path.iter().rev().map(|h| h.rev()).collect() },
            shape,
        });
    };
    for c in &cycles {
        add(c.path.clone(), Shape::Circle);
    }
    let n = graph.vertex_count();
    for (i, c1) in cycles.iter().enumerate() {
        for c2 in &cycles[i + 1..] {
            let shared: Vec<usize> = c1.vertices.iter().copied().filter(|v| c2.vertices.contains(v)).collect();
            match shared.len() {
                1 => {
                    let v = shared[0];
                    let a = c1.at(graph, v);
                    for b in [c2.at(graph, v), c2.reversed_at(graph, v)] {
                        let mut p = a.clone();
                        p.extend(b);
                        add(p, Shape::FigureEight);
                    }
                }
                0 => {
                    let mut target = vec![false; n];
                    let mut blocked = vec![false; n];
                    for &v in &c2.vertices {
                        target[v] = true;
                    }
                    for &v in &c1.vertices {
                        blocked[v] = true;
                    }
                    for &v1 in &c1.vertices {
                        for arc in arcs(graph, v1, &target, &blocked) {
                            let v2 = graph.terminus(*arc.last().unwrap());
                            let back: Vec<HalfEdge> = arc.iter().rev().map(|h| h.rev()).collect();
                            let a = c1.at(graph, v1);
                            for b in [c2.at(graph, v2), c2.reversed_at(graph, v2)] {
                                let mut p = a.clone();
                                p.extend_from_slice(&arc);
                                p.extend(b);
                                p.extend_from_slice(&back);
                                add(p, Shape::Barbell);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    found.into_values().collect()
}

/// `d(G, H) = log` of the largest length ratio over candidates of `G`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Distance {
    pub ratio: LogScalar,
    pub witness: CyclicWord,
}

impl Distance {
    pub fn log(&self) -> f64 {
        self.ratio.log()
    }
}

fn check_bases(g: &MarkedGraph, h: &MarkedGraph) -> Result<()> {
    if g.basis() != h.basis() {
        return Err(Error::RankMismatch(g.rank(), h.rank()));
    }
    Ok(())
}

pub fn lipschitz_distance(g: &MarkedGraph, h: &MarkedGraph) -> Result<Distance> {
    check_bases(g, h)?;
    let mut best: Option<(Q, CyclicWord)> = None;
    for c in candidates(g) {
        let lg = g.graph().path_length(&c.path);
        let lh = h.loop_length(&c.word)?;
        let r = lh / lg;
        if best.as_ref().map_or(true, |(b, _)| r > *b) {
            best = Some((r, c.word));
        }
    }
    let (ratio, witness) = best.expect("candidate set is nonempty");
    Ok(Distance { ratio: LogScalar::new(ratio), witness })
}

pub fn distance_ratio(g: &MarkedGraph, h: &MarkedGraph) -> Result<Q> {
    Ok(lipschitz_distance(g, h)?.ratio.ratio)
}

pub fn symmetrized_distance(g: &MarkedGraph, h: &MarkedGraph) -> Result<LogScalar> {
    Ok(lipschitz_distance(g, h)?.ratio.add(&lipschitz_distance(h, g)?.ratio))
}

/// Hausdorff distance of finite sets under the symmetrized metric.
pub fn hausdorff(a: &[MarkedGraph], b: &[MarkedGraph]) -> Result<LogScalar> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut table = vec![vec![Q::one(); b.len()]; a.len()];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            table[i][j] = symmetrized_distance(x, y)?.ratio;
        }
    }
    let row = table.iter().map(|r| r.iter().min().unwrap().clone()).max().unwrap();
    let col = (0..b.len()).map(|j| table.iter().map(|r| r[j].clone()).min().unwrap()).max().unwrap();
    Ok(LogScalar::new(row.max(col)))
}

/// A length-preserving graph isomorphism `G → H` compatible with the
/// markings, as an image half-edge per edge of `G`.
pub fn marked_isometry(g: &MarkedGraph, h: &MarkedGraph) -> Option<Vec<HalfEdge>> {
    if g.basis() != h.basis() {
        return None;
    }
    let (gg, hg) = (g.graph(), h.graph());
    if gg.vertex_count() != hg.vertex_count() || gg.edge_count() != hg.edge_count() {
        return None;
    }
    let mut vmap = vec![usize::MAX; gg.vertex_count()];
    let mut used_v = vec![false; hg.vertex_count()];
    let mut used_e = vec![false; hg.edge_count()];
    let mut emap = Vec::with_capacity(gg.edge_count());
    let mut result = None;
    iso_search(g, h, 0, &mut vmap, &mut used_v, &mut used_e, &mut emap, &mut result);
    result
}

#[allow(clippy::too_many_arguments)]
fn iso_search(
    g: &MarkedGraph,
    h: &MarkedGraph,
    e: usize,
    vmap: &mut [usize],
    used_v: &mut [bool],
    used_e: &mut [bool],
    emap: &mut Vec<HalfEdge>,
    result: &mut Option<Vec<HalfEdge>>,
) {
    if result.is_some() {
        return;
    }
    let (gg, hg) = (g.graph(), h.graph());
    if e == gg.edge_count() {
        if vmap.iter().any(|&v| v == usize::MAX) {
            return;
        }
        if markings_agree(g, h, emap) {
            *result = Some(emap.clone());
        }
        return;
    }
    let edge = gg.edge(e);
    for f in 0..hg.edge_count() {
        if used_e[f] || hg.edge(f).len != edge.len {
            continue;
        }
        for fwd in [true, false] {
            let t = HalfEdge::new(f, fwd);
            let (a, b) = (hg.origin(t), hg.terminus(t));
            let mut assigned = Vec::new();
            let mut ok = true;
            for (src, dst) in [(edge.from, a), (edge.to, b)] {
                if vmap[src] == usize::MAX {
                    if used_v[dst] {
                        ok = false;
                        break;
                    }
                    vmap[src] = dst;
                    used_v[dst] = true;
                    assigned.push(src);
                } else if vmap[src] != dst {
                    ok = false;
                    break;
                }
            }
            if ok && gg.valence(edge.from) == hg.valence(a) && gg.valence(edge.to) == hg.valence(b) {
                used_e[f] = true;
                emap.push(t);
                iso_search(g, h, e + 1, vmap, used_v, used_e, emap, result);
                emap.pop();
                used_e[f] = false;
            }
            for src in assigned {
                used_v[vmap[src]] = false;
                vmap[src] = usize::MAX;
            }
            if result.is_some() {
                return;
            }
        }
    }
}

fn markings_agree(g: &MarkedGraph, h: &MarkedGraph, emap: &[HalfEdge]) -> bool {
    let images = (0..g.rank())
        .map(|i| {
            let p: Vec<HalfEdge> = g
                .marking(i)
                .iter()
                .map(|&x| if x.forward() { emap[x.edge()] } else { emap[x.edge()].rev() })
                .collect();
            h.read_path(&p)
        })
        .collect();
    match Automorphism::new_unchecked(g.basis(), images) {
        Ok(a) => matches!(Automorphism::identity(g.basis()).out_equal(&a), Ok(Some(_))),
        Err(_) => false,
    }
}
