//! Subgroup graphs, cover cores over marked graphs and the projection to
//! conjugacy classes of free factors.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::Zero;
use serde::Serialize;

use crate::aut::Automorphism;
use crate::error::{Error, Result};
use crate::fold::{FoldingPath, TrainTrack};
use crate::graph::{Edge, HalfEdge, MetricGraph};
use crate::marked::MarkedGraph;
use crate::profile::{illegal_segment_threshold, LONG_LEGAL};
use crate::rational::{LogScalar, Q};
use crate::stallings::{Folded, Folder};
use crate::word::{Basis, Letter, Word};

/// A folded graph with edges labeled by positive generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StallingsGraph {
    pub vertex_count: usize,
    pub base: usize,
    pub edges: Vec<(usize, usize, Letter)>,
    out: Vec<BTreeMap<Letter, usize>>,
}

impl StallingsGraph {
    fn from_folded(f: &Folded<Letter>) -> Self {
        let edges: Vec<(usize, usize, Letter)> = f
            .edges
            .iter()
            .map(|&(a, b, l, _)| if l > 0 { (a, b, l) } else { (b, a, -l) })
            .collect();
        let mut out = vec![BTreeMap::new(); f.vertex_count];
        for &(a, b, l) in &edges {
            out[a].insert(l, b);
            out[b].insert(-l, a);
        }
        StallingsGraph { vertex_count: f.vertex_count, base: f.base, edges, out }
    }

    pub fn rank(&self) -> isize {
        self.edges.len() as isize - self.vertex_count as isize + 1
    }

    pub fn step(&self, v: usize, l: Letter) -> Option<usize> {
        self.out[v].get(&l).copied()
    }

    /// Reads `w` from the base; true when it returns there.
    pub fn accepts(&self, w: &Word) -> bool {
        let mut v = self.base;
        for &l in w.letters() {
            match self.step(v, l) {
                Some(x) => v = x,
                None => return false,
            }
        }
        v == self.base
    }

    /// Image of vertex `0` under a label-preserving map into `other`
    /// sending it to `target`, if one exists.
    fn morphism_from(&self, other: &StallingsGraph, target: usize) -> bool {
        let mut image = vec![usize::MAX; self.vertex_count];
        image[0] = target;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for (&l, &w) in &self.out[v] {
                let Some(x) = other.step(image[v], l) else { return false };
                if image[w] == usize::MAX {
                    image[w] = x;
                    queue.push_back(w);
                } else if image[w] != x {
                    return false;
                }
            }
        }
        true
    }

    pub fn maps_into(&self, other: &StallingsGraph) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        (0..other.vertex_count).any(|t| self.morphism_from(other, t))
    }

    /// Relabeling by breadth-first order from `start`, following letters in
    /// sorted order.
    fn bfs_code(&self, start: usize) -> Vec<(usize, usize, Letter)> {
        let mut index = vec![usize::MAX; self.vertex_count];
        index[start] = 0;
        let mut order = vec![start];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &w in self.out[v].values() {
                if index[w] == usize::MAX {
                    index[w] = order.len();
                    order.push(w);
                }
            }
            i += 1;
        }
        let mut code: Vec<(usize, usize, Letter)> = self.edges.iter().map(|&(a, b, l)| (index[a], index[b], l)).collect();
        code.sort();
        code
    }

    /// A string equal for two cores exactly when they are isomorphic.
    pub fn canonical_key(&self) -> String {
        let best = (0..self.vertex_count).map(|s| self.bfs_code(s)).min().unwrap_or_default();
        best.iter().map(|(a, b, l)| format!("{a}.{b}.{l}")).collect::<Vec<_>>().join(",")
    }

    /// Free basis of `π_1` at `start` read from a spanning tree.
    pub fn basis_at(&self, start: usize) -> Vec<Word> {
        let mut prefix: Vec<Option<Word>> = vec![None; self.vertex_count];
        prefix[start] = Some(Word::identity());
        let mut tree: BTreeSet<usize> = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for (i, &(a, b, l)) in self.edges.iter().enumerate() {
                let (w, step) = if a == v && prefix[b].is_none() {
                    (b, l)
                } else if b == v && prefix[a].is_none() {
                    (a, -l)
                } else {
                    continue;
                };
                prefix[w] = Some(prefix[v].as_ref().unwrap().mul(&Word::letter(step)));
                tree.insert(i);
                queue.push_back(w);
            }
        }
        self.edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !tree.contains(i))
            .map(|(_, &(a, b, l))| {
                let pa = prefix[a].as_ref().unwrap();
                let pb = prefix[b].as_ref().unwrap();
                pa.mul(&Word::letter(l)).mul(&pb.inverse())
            })
            .collect()
    }
}

fn fold_generators(generators: &[Word], keep_base: bool) -> Result<StallingsGraph> {
    let mut f: Folder<Letter> = Folder::new();
    let mut any = false;
    for g in generators {
        if g.is_empty() {
            continue;
        }
        any = true;
        f.add_path(0, 0, g.letters(), Word::identity());
    }
    if !any {
        return Err(Error::TrivialSubgroup);
    }
    f.fold().expect("untagged folding cannot conflict");
    let folded = f.finish().trim(keep_base);
    if folded.edges.is_empty() {
        return Err(Error::TrivialSubgroup);
    }
    Ok(StallingsGraph::from_folded(&folded))
}

/// The basepoint-free core of the subgroup generated by `generators`.
pub fn stallings_core(generators: &[Word]) -> Result<StallingsGraph> {
    fold_generators(generators, false)
}

/// The based subgroup graph (hair to the base kept), for membership.
pub fn stallings_graph(generators: &[Word]) -> Result<StallingsGraph> {
    fold_generators(generators, true)
}

/// A conjugacy class of a finitely generated subgroup.
#[derive(Clone, Debug)]
pub struct FactorClass {
    /// Free basis read from the canonical labeling of the core.
    pub generators: Vec<Word>,
    pub core: StallingsGraph,
    key: String,
}

impl PartialEq for FactorClass {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for FactorClass {}

impl PartialOrd for FactorClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FactorClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.rank(), &self.generators, &self.key).cmp(&(other.rank(), &other.generators, &other.key))
    }
}

impl std::hash::Hash for FactorClass {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl FactorClass {
    pub fn new(generators: &[Word]) -> Result<Self> {
        let core = stallings_core(generators)?;
        let key = core.canonical_key();
        let start = (0..core.vertex_count).min_by_key(|&s| core.bfs_code(s)).unwrap();
        let mut gens = core.basis_at(start);
        gens.sort_by(|a, b| (a.len(), a.letters()).cmp(&(b.len(), b.letters())));
        Ok(FactorClass { generators: gens, core, key })
    }

    pub fn parse(basis: &Basis, texts: &[&str]) -> Result<Self> {
        let ws = texts.iter().map(|t| Word::parse(basis, t)).collect::<Result<Vec<_>>>()?;
        FactorClass::new(&ws)
    }

    pub fn rank(&self) -> usize {
        self.core.rank().max(0) as usize
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn apply(&self, phi: &Automorphism) -> FactorClass {
        let gens: Vec<Word> = self.generators.iter().map(|w| phi.apply(w)).collect();
        FactorClass::new(&gens).expect("automorphisms preserve nontrivial subgroups")
    }

    pub fn to_texts(&self) -> Vec<String> {
        self.generators.iter().map(|w| w.to_text()).collect()
    }
}

/// Does some conjugate of `a` lie in `b`?
pub fn conjugate_into(a: &FactorClass, b: &FactorClass) -> bool {
    a.core.maps_into(&b.core)
}

/// The core of the cover of `g` for a subgroup, with its immersion.
#[derive(Clone, Debug)]
pub struct CoverCore {
    pub graph: MetricGraph,
    /// Image of each edge (forward) in the base graph.
    pub immersion: Vec<HalfEdge>,
    pub vertex_map: Vec<usize>,
}

impl CoverCore {
    pub fn volume(&self) -> Q {
        self.graph.volume()
    }

    pub fn rank(&self) -> isize {
        self.graph.rank()
    }

    /// Image direction of a direction of the cover.
    pub fn image(&self, h: HalfEdge) -> HalfEdge {
        let x = self.immersion[h.edge()];
        if h.forward() {
            x
        } else {
            x.rev()
        }
    }

    /// Gates pulled back along the immersion.
    pub fn pull_back(&self, tt: &TrainTrack) -> TrainTrack {
        let gates = (0..self.graph.vertex_count())
            .map(|v| {
                let mut by: BTreeMap<usize, Vec<HalfEdge>> = BTreeMap::new();
                for &h in self.graph.out(v) {
                    by.entry(tt.gate_of(self.image(h))).or_default().push(h);
                }
                by.into_values().collect()
            })
            .collect();
        TrainTrack::from_gates(&self.graph, gates)
    }
}

pub fn cover_core(subgroup: &[Word], g: &MarkedGraph) -> Result<CoverCore> {
    let mut f: Folder<HalfEdge> = Folder::new();
    let mut any = false;
    for w in subgroup {
        let path = g.word_path(w.letters());
        if path.is_empty() {
            continue;
        }
        any = true;
        f.add_path(0, 0, &path, Word::identity());
    }
    if !any {
        return Err(Error::TrivialSubgroup);
    }
    f.fold().expect("untagged folding cannot conflict");
    let folded = f.finish().trim(false);
    if folded.edges.is_empty() {
        return Err(Error::TrivialSubgroup);
    }
    let gr = g.graph();
    let mut vertex_map = vec![usize::MAX; folded.vertex_count];
    let mut edges = Vec::with_capacity(folded.edges.len());
    let mut immersion = Vec::with_capacity(folded.edges.len());
    for &(a, b, h, _) in &folded.edges {
        let (a, b, h) = if h.forward() { (a, b, h) } else { (b, a, h.rev()) };
        vertex_map[a] = gr.origin(h);
        vertex_map[b] = gr.terminus(h);
        edges.push(Edge { from: a, to: b, len: gr.len(h).clone() });
        immersion.push(h);
    }
    Ok(CoverCore { graph: MetricGraph::new(folded.vertex_count, edges), immersion, vertex_map })
}

/// Classes of `π_1` of proper connected noncontractible subgraphs.
pub fn project_factors(g: &MarkedGraph) -> Result<Vec<FactorClass>> {
    let r = g.rank();
    if r < 2 {
        return Err(Error::RankTooSmall(r));
    }
    let gr = g.graph();
    let ne = gr.edge_count();
    if ne > 20 {
        return Err(Error::BudgetExceeded(format!("{ne} edges in subgraph enumeration")));
    }
    let mut seen: HashMap<String, FactorClass> = HashMap::new();
    for mask in 1u32..(1u32 << ne) - 1 {
        let chosen: Vec<usize> = (0..ne).filter(|e| mask >> e & 1 == 1).collect();
        let Some(gens) = subgraph_generators(g, &chosen) else { continue };
        if gens.is_empty() {
            continue;
        }
        let fc = FactorClass::new(&gens)?;
        if fc.rank() == 0 || fc.rank() >= r {
            continue;
        }
        seen.entry(fc.key.clone()).or_insert(fc);
    }
    let mut out: Vec<FactorClass> = seen.into_values().collect();
    out.sort();
    Ok(out)
}

/// Loop words of a connected edge set at its least vertex; `None` when
/// the edges are disconnected.
fn subgraph_generators(g: &MarkedGraph, chosen: &[usize]) -> Option<Vec<Word>> {
    let gr = g.graph();
    let mut adj: BTreeMap<usize, Vec<HalfEdge>> = BTreeMap::new();
    for &e in chosen {
        adj.entry(gr.edge(e).from).or_default().push(HalfEdge::new(e, true));
        adj.entry(gr.edge(e).to).or_default().push(HalfEdge::new(e, false));
    }
    let root = *adj.keys().next()?;
    let mut path_to: BTreeMap<usize, Vec<HalfEdge>> = BTreeMap::from([(root, vec![])]);
    let mut tree: BTreeSet<usize> = BTreeSet::new();
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &h in &adj[&v] {
            let w = gr.terminus(h);
            if !path_to.contains_key(&w) {
                let mut p = path_to[&v].clone();
                p.push(h);
                path_to.insert(w, p);
                tree.insert(h.edge());
                queue.push_back(w);
            }
        }
    }
    if path_to.len() != adj.len() {
        return None;
    }
    Some(
        chosen
            .iter()
            .filter(|e| !tree.contains(e))
            .map(|&e| {
                let h = HalfEdge::new(e, true);
                let mut p = path_to[&gr.origin(h)].clone();
                p.push(h);
                p.extend(path_to[&gr.terminus(h)].iter().rev().map(|x| x.rev()));
                g.read_path(&p)
            })
            .collect(),
    )
}

/// Longest legal immersed edge path (`None` when unbounded).
pub fn longest_legal_path(g: &MetricGraph, tt: &TrainTrack) -> Option<Q> {
    let n = 2 * g.edge_count();
    let next: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let h = HalfEdge(i as u32);
            let v = g.terminus(h);
            g.out(v)
                .iter()
                .filter(|&&x| x != h.rev() && !tt.is_illegal(h.rev(), x))
                .map(|x| x.0 as usize)
                .collect()
        })
        .collect();
    longest_walk(&next, &(0..n).map(|i| g.len(HalfEdge(i as u32)).clone()).collect::<Vec<_>>())
}

/// Longest weighted walk in a digraph, or `None` if there is a cycle.
fn longest_walk(next: &[Vec<usize>], weight: &[Q]) -> Option<Q> {
    let n = next.len();
    let mut state = vec![0u8; n];
    let mut best: Vec<Q> = vec![Q::zero(); n];
    fn visit(v: usize, next: &[Vec<usize>], weight: &[Q], state: &mut [u8], best: &mut [Q]) -> bool {
        state[v] = 1;
        let mut m = Q::zero();
        for &w in &next[v] {
            match state[w] {
                1 => return false,
                0 => {
                    if !visit(w, next, weight, state, best) {
                        return false;
                    }
                }
                _ => {}
            }
            if best[w] > m {
                m = best[w].clone();
            }
        }
        best[v] = &weight[v] + m;
        state[v] = 2;
        true
    }
    for v in 0..n {
        if state[v] == 0 && !visit(v, next, weight, &mut state, &mut best) {
            return None;
        }
    }
    Some(best.into_iter().max().unwrap_or_else(Q::zero))
}

/// Does the graph carry an immersed path of length at least `target`
/// whose legal stretches are all shorter than the long-legal threshold?
pub fn has_illegal_segment(g: &MetricGraph, tt: &TrainTrack, target: &Q, budget: usize) -> Result<bool> {
    let n = 2 * g.edge_count();
    let cap = Q::from_integer(LONG_LEGAL.into());
    // blocks: legal paths shorter than the cap, from first to last half-edge
    let mut block: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); n];
    let mut states = 0usize;
    for start in 0..n {
        let h0 = HalfEdge(start as u32);
        let l0 = g.len(h0).clone();
        if l0 >= cap {
            continue;
        }
        let mut seen: BTreeSet<(usize, Q)> = BTreeSet::new();
        let mut stack = vec![(start, l0)];
        while let Some((i, run)) = stack.pop() {
            if !seen.insert((i, run.clone())) {
                continue;
            }
            states += 1;
            if states > budget {
                return Err(Error::BudgetExceeded(format!("{budget} legal-run states")));
            }
            let e = block[start].entry(i).or_insert_with(Q::zero);
            if run > *e {
                *e = run.clone();
            }
            let h = HalfEdge(i as u32);
            for &x in g.out(g.terminus(h)) {
                if x == h.rev() || tt.is_illegal(h.rev(), x) {
                    continue;
                }
                let r2 = &run + g.len(x);
                if r2 < cap {
                    stack.push((x.0 as usize, r2));
                }
            }
        }
    }
    // block graph: node = block start, weight folded into edges
    let mut adj: Vec<Vec<(usize, Q)>> = vec![Vec::new(); n];
    for s in 0..n {
        for (&end, len) in &block[s] {
            let h = HalfEdge(end as u32);
            for &x in g.out(g.terminus(h)) {
                if x != h.rev() && tt.is_illegal(h.rev(), x) && !block[x.0 as usize].is_empty() {
                    adj[s].push((x.0 as usize, len.clone()));
                }
            }
        }
    }
    // any cycle gives arbitrarily long segments
    let next: Vec<Vec<usize>> = adj.iter().map(|v| v.iter().map(|x| x.0).collect()).collect();
    if longest_walk(&next, &vec![Q::zero(); n]).is_none() {
        return Ok(true);
    }
    // acyclic: longest path where each step adds its block length
    let mut memo: Vec<Option<Q>> = vec![None; n];
    fn longest(s: usize, adj: &[Vec<(usize, Q)>], block: &[BTreeMap<usize, Q>], memo: &mut [Option<Q>]) -> Q {
        if let Some(x) = &memo[s] {
            return x.clone();
        }
        let own = block[s].values().max().cloned().unwrap_or_else(Q::zero);
        let mut best = own;
        for (t, len) in &adj[s] {
            let c = len + longest(*t, adj, block, memo);
            if c > best {
                best = c;
            }
        }
        memo[s] = Some(best.clone());
        best
    }
    Ok((0..n).any(|s| longest(s, &adj, &block, &mut memo) >= *target))
}

/// An endpoint of a left/right projection, at event resolution.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct EventTime {
    pub event: usize,
    pub time: LogScalar,
    /// The defining set was empty and the range endpoint was used.
    pub by_convention: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Projection {
    pub left: EventTime,
    pub right: EventTime,
}

pub const SEGMENT_BUDGET: usize = 200_000;

/// Event range where a subgroup's cover core first has a long legal
/// segment and last has a long illegal segment.
pub fn left_right_projection(subgroup: &[Word], path: &FoldingPath) -> Result<Projection> {
    let r = path.graph(0).rank();
    let target = Q::from_integer((illegal_segment_threshold(r) as i64).into());
    let cap = Q::from_integer(LONG_LEGAL.into());
    let mut left = None;
    let mut right = None;
    for (k, ev) in path.events.iter().enumerate() {
        let cover = cover_core(subgroup, ev.graph())?;
        let tt = cover.pull_back(&ev.train_track);
        if left.is_none() {
            let legal = longest_legal_path(&cover.graph, &tt);
            if legal.map_or(true, |l| l >= cap) {
                left = Some(k);
            }
        }
        if has_illegal_segment(&cover.graph, &tt, &target, SEGMENT_BUDGET)? {
            right = Some(k);
        }
    }
    let last = path.len() - 1;
    let at = |k: usize, conv: bool| EventTime { event: k, time: path.events[k].time.clone(), by_convention: conv };
    Ok(Projection {
        left: left.map_or_else(|| at(last, true), |k| at(k, false)),
        right: right.map_or_else(|| at(0, true), |k| at(k, false)),
    })
}

/// The path's graph at the earliest left projection over the factors of `h`.
pub fn project_to_path(h: &MarkedGraph, path: &FoldingPath) -> Result<(usize, MarkedGraph)> {
    let mut best = path.len() - 1;
    for fc in project_factors(h)? {
        best = best.min(left_right_projection(&fc.generators, path)?.left.event);
    }
    Ok((best, path.graph(best).clone()))
}
