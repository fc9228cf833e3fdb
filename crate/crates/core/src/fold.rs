//! Greedy folding paths: fold every gate at unit speed until the residual
//! map is an isometry.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{Edge, HalfEdge, MetricGraph};
use crate::lipschitz::marked_isometry;
use crate::marked::MarkedGraph;
use crate::optimal::{optimal_map_with, rescale, DifferenceOfMarkings, OptimalConfig, Rescaling};
use crate::path::{MetricPath, Piece, Point};
use crate::rational::{LogScalar, Q};

/// Gates at every vertex: directions grouped by the germ of their image.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TrainTrack {
    pub gates: Vec<Vec<Vec<HalfEdge>>>,
    gate_of: Vec<usize>,
}

impl TrainTrack {
    pub fn from_map(f: &DifferenceOfMarkings) -> TrainTrack {
        let g = f.source.graph();
        let mut gates = Vec::with_capacity(g.vertex_count());
        let mut gate_of = vec![usize::MAX; 2 * g.edge_count()];
        for v in 0..g.vertex_count() {
            let gs = f.gates_at(v, &|_| true);
            for (i, gate) in gs.iter().enumerate() {
                for h in gate {
                    gate_of[h.0 as usize] = i;
                }
            }
            gates.push(gs);
        }
        TrainTrack { gates, gate_of }
    }

    /// Gates given explicitly per vertex.
    pub fn from_gates(graph: &MetricGraph, gates: Vec<Vec<Vec<HalfEdge>>>) -> TrainTrack {
        let mut gate_of = vec![usize::MAX; 2 * graph.edge_count()];
        for gs in &gates {
            for (i, gate) in gs.iter().enumerate() {
                for h in gate {
                    gate_of[h.0 as usize] = i;
                }
            }
        }
        TrainTrack { gates, gate_of }
    }

    pub fn gate_of(&self, h: HalfEdge) -> usize {
        self.gate_of[h.0 as usize]
    }

    /// A turn between two directions at one vertex is illegal when they
    /// share a gate.
    pub fn is_illegal(&self, d1: HalfEdge, d2: HalfEdge) -> bool {
        self.gate_of(d1) == self.gate_of(d2)
    }

    /// Total gate excess `Σ (|gate| − 1)`.
    pub fn illegality(&self) -> usize {
        self.gates.iter().flatten().map(|g| g.len() - 1).sum()
    }

    /// A vertex with fewer than two gates.
    pub fn defect(&self) -> Option<usize> {
        self.gates.iter().position(|g| g.len() < 2)
    }
}

/// Limits for the folding engine.
#[derive(Clone, Debug)]
pub struct StepPolicy {
    /// Upper bound on a single fold amount, in normalized length.
    pub max_step: Option<Q>,
    pub event_cap: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy { max_step: None, event_cap: 10_000 }
    }
}

/// A snapshot of the path.
#[derive(Clone, Debug)]
pub struct FoldEvent {
    /// `e^t`, measured from the start of the path.
    pub time: LogScalar,
    /// Residual map to the target; its source is the graph at this event.
    pub map: DifferenceOfMarkings,
    pub train_track: TrainTrack,
    /// Common slope of the residual map.
    pub stretch: Q,
    /// Fold amount that produced this event (in the previous graph's metric).
    pub delta: Option<Q>,
    /// Images of the previous graph's edges.
    pub edge_maps: Vec<MetricPath>,
    pub vertex_maps: Vec<Point>,
}

impl FoldEvent {
    pub fn graph(&self) -> &MarkedGraph {
        &self.map.source
    }

    pub fn illegality(&self) -> usize {
        self.train_track.illegality()
    }
}

#[derive(Clone, Debug)]
pub struct FoldingPath {
    pub events: Vec<FoldEvent>,
}

struct Quotient {
    map: DifferenceOfMarkings,
    edge_maps: Vec<MetricPath>,
    vertex_maps: Vec<Point>,
    volume: Q,
}

/// Uniform slope of a map, if every edge has the same one.
fn uniform_slope(f: &DifferenceOfMarkings) -> Option<Q> {
    let s = f.slopes();
    if s.iter().all(|x| *x == s[0]) {
        Some(s[0].clone())
    } else {
        None
    }
}

fn folded_directions(tt: &TrainTrack) -> Vec<Vec<HalfEdge>> {
    tt.gates.iter().flatten().filter(|g| g.len() >= 2).cloned().collect()
}

/// Largest fold amount before some gate splits or some edge is used up.
pub fn next_delta(f: &DifferenceOfMarkings, tt: &TrainTrack, policy: &StepPolicy) -> Option<Q> {
    let g = f.source.graph();
    let lam = uniform_slope(f)?;
    let mut best: Option<Q> = policy.max_step.clone();
    let mut take = |x: Q| {
        if best.as_ref().map_or(true, |b| x < *b) {
            best = Some(x);
        }
    };
    let mut ends = vec![0usize; g.edge_count()];
    for gate in folded_directions(tt) {
        let first = f.direction_image(gate[0]);
        for &h in &gate[1..] {
            take(first.common_prefix(&f.direction_image(h)) / &lam);
        }
        for h in &gate {
            ends[h.edge()] += 1;
        }
    }
    for (e, &k) in ends.iter().enumerate() {
        if k > 0 {
            take(&g.edge(e).len / Q::from_integer((k as i64).into()));
        }
    }
    best
}

/// Identifies the initial `delta`-segments of every gate, smooths bivalent
/// vertices and renormalizes.
fn fold_step(f: &DifferenceOfMarkings, tt: &TrainTrack, delta: &Q) -> Result<Quotient> {
    let src = &f.source;
    let g = src.graph();
    let hg = f.target.graph();
    let lam = uniform_slope(f).ok_or(Error::NotTense)?;
    let gates = folded_directions(tt);
    let mut folded = vec![false; 2 * g.edge_count()];
    for gate in &gates {
        for h in gate {
            folded[h.0 as usize] = true;
        }
    }
    // subdivide
    struct P {
        edge: usize,
        a: Q,
        b: Q,
        from: usize,
        to: usize,
    }
    let mut points: Vec<(usize, Q)> = Vec::new(); // new points: (edge, offset)
    let mut pieces: Vec<P> = Vec::new();
    let mut edge_pieces: Vec<Vec<usize>> = Vec::with_capacity(g.edge_count());
    let n0 = g.vertex_count();
    for (e, edge) in g.edges().iter().enumerate() {
        let len = &edge.len;
        let mut cuts = vec![Q::zero()];
        if folded[HalfEdge::new(e, true).0 as usize] {
            cuts.push(delta.clone());
        }
        if folded[HalfEdge::new(e, false).0 as usize] {
            cuts.push(len - delta);
        }
        cuts.push(len.clone());
        cuts.sort();
        cuts.dedup();
        let mut ids = Vec::new();
        let mut prev_point = edge.from;
        for w in cuts.windows(2) {
            let next_point = if &w[1] == len {
                edge.to
            } else {
                points.push((e, w[1].clone()));
                n0 + points.len() - 1
            };
            ids.push(pieces.len());
            pieces.push(P { edge: e, a: w[0].clone(), b: w[1].clone(), from: prev_point, to: next_point });
            prev_point = next_point;
        }
        edge_pieces.push(ids);
    }
    let npts = n0 + points.len();
    let mut pu: Vec<usize> = (0..npts).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    // alias[piece] = (representative piece, same orientation)
    let mut alias: Vec<Option<(usize, bool)>> = vec![None; pieces.len()];
    let outward = |h: HalfEdge| -> (usize, usize) {
        let ids = &edge_pieces[h.edge()];
        if h.forward() {
            let p = ids[0];
            (p, pieces[p].to)
        } else {
            let p = *ids.last().unwrap();
            (p, pieces[p].from)
        }
    };
    for gate in &gates {
        let (rep, rep_far) = outward(gate[0]);
        for &h in &gate[1..] {
            let (p, far) = outward(h);
            alias[p] = Some((rep, h.forward() == gate[0].forward()));
            let (x, y) = (find(&mut pu, rep_far), find(&mut pu, far));
            if x != y {
                pu[y] = x;
            }
        }
    }
    // pre-smoothing graph
    let mut vid = vec![usize::MAX; npts];
    let mut vcount = 0;
    for p in 0..npts {
        let r = find(&mut pu, p);
        if vid[r] == usize::MAX {
            vid[r] = vcount;
            vcount += 1;
        }
    }
    let vclass = |pu: &mut Vec<usize>, p: usize| vid[find(pu, p)];
    let point_image = |p: usize| -> Point {
        if p < n0 {
            f.vertex_images[p].clone()
        } else {
            let (e, a) = &points[p - n0];
            f.edge_images[*e].point_at(hg, &(a * &lam))
        }
    };
    let mut pre_vertex_image: Vec<Option<Point>> = vec![None; vcount];
    for p in 0..npts {
        let c = vclass(&mut pu, p);
        let img = point_image(p);
        match &pre_vertex_image[c] {
            None => pre_vertex_image[c] = Some(img),
            Some(x) => debug_assert_eq!(*x, img, "identified points must share an image"),
        }
    }
    let mut pre_edges: Vec<Edge> = Vec::new();
    let mut pre_images: Vec<MetricPath> = Vec::new();
    let mut piece_edge = vec![usize::MAX; pieces.len()];
    for (i, p) in pieces.iter().enumerate() {
        if alias[i].is_some() {
            continue;
        }
        piece_edge[i] = pre_edges.len();
        pre_edges.push(Edge {
            from: vclass(&mut pu, p.from),
            to: vclass(&mut pu, p.to),
            len: &p.b - &p.a,
        });
        pre_images.push(f.edge_images[p.edge].subpath(hg, &(&p.a * &lam), &(&p.b * &lam)));
    }
    let piece_half = |i: usize| -> HalfEdge {
        match alias[i] {
            None => HalfEdge::new(piece_edge[i], true),
            Some((rep, same)) => HalfEdge::new(piece_edge[rep], same),
        }
    };
    let pre = MetricGraph::new(vcount, pre_edges);
    // smoothing: chains between branch vertices
    let branch: Vec<bool> = (0..vcount)
        .map(|v| pre.valence(v) != 2 || pre.out(v)[0].edge() == pre.out(v)[1].edge())
        .collect();
    if !branch.iter().any(|&b| b) {
        return Err(Error::InvalidGraph("fold produced a circle".into()));
    }
    let mut final_id = vec![usize::MAX; vcount];
    let mut nfinal = 0;
    for v in 0..vcount {
        if branch[v] {
            final_id[v] = nfinal;
            nfinal += 1;
        }
    }
    let mut seen = vec![false; pre.edge_count()];
    // pre half-edge -> (final half-edge, offset along it)
    let mut place: Vec<Option<(HalfEdge, Q)>> = vec![None; 2 * pre.edge_count()];
    let mut final_edges: Vec<Edge> = Vec::new();
    let mut final_images: Vec<MetricPath> = Vec::new();
    for v in 0..vcount {
        if !branch[v] {
            continue;
        }
        for &h0 in pre.out(v) {
            if seen[h0.edge()] {
                continue;
            }
            let mut chain = vec![h0];
            seen[h0.edge()] = true;
            let mut cur = h0;
            while !branch[pre.terminus(cur)] {
                let w = pre.terminus(cur);
                let next = *pre.out(w).iter().find(|&&x| x != cur.rev()).unwrap();
                seen[next.edge()] = true;
                chain.push(next);
                cur = next;
            }
            let idx = final_edges.len();
            let total: Q = chain.iter().map(|&h| pre.len(h).clone()).sum();
            let mut off = Q::zero();
            let mut image = MetricPath::trivial(pre_vertex_image[v].clone().unwrap());
            for &h in &chain {
                let l = pre.len(h).clone();
                place[h.0 as usize] = Some((HalfEdge::new(idx, true), off.clone()));
                place[h.rev().0 as usize] = Some((HalfEdge::new(idx, false), &total - &off - &l));
                let img = if h.forward() { pre_images[h.edge()].clone() } else { pre_images[h.edge()].reverse(hg) };
                for p in img.pieces {
                    image.push(hg, p);
                }
                off += l;
            }
            final_edges.push(Edge { from: final_id[v], to: final_id[pre.terminus(cur)], len: total });
            final_images.push(image);
        }
    }
    let fin = MetricGraph::new(nfinal, final_edges);
    if fin.rank() != g.rank() {
        return Err(Error::InvalidGraph("fold changed the rank".into()));
    }
    let pre_point = |v: usize| -> Point {
        if branch[v] {
            Point::Vertex(final_id[v])
        } else {
            let h = pre.out(v)[0];
            let (fh, off) = place[h.0 as usize].clone().unwrap();
            Point::on_half(&fin, fh, &off)
        }
    };
    // old edges into the final graph
    let mut edge_maps = Vec::with_capacity(g.edge_count());
    for (e, edge) in g.edges().iter().enumerate() {
        let mut path = MetricPath::trivial(pre_point(vclass(&mut pu, edge.from)));
        for &pi in &edge_pieces[e] {
            let ph = piece_half(pi);
            let (fh, off) = place[ph.0 as usize].clone().unwrap();
            let l = pre.len(ph).clone();
            let to = &off + &l;
            path.push(&fin, Piece { half: fh, from: off, to });
        }
        edge_maps.push(path);
    }
    let vertex_maps: Vec<Point> = (0..n0).map(|v| pre_point(vclass(&mut pu, v))).collect();
    // marking through the fold
    let image_of = |v: usize, path: &[HalfEdge]| -> MetricPath {
        let mut out = MetricPath::trivial(vertex_maps[v].clone());
        for &h in path {
            let m = if h.forward() { edge_maps[h.edge()].clone() } else { edge_maps[h.edge()].reverse(&fin) };
            for p in m.pieces {
                out.push(&fin, p);
            }
        }
        out
    };
    let mut base = usize::MAX;
    let mut marking = Vec::new();
    for i in 0..src.rank() {
        let (b, lp) = image_of(src.base(), src.marking(i)).rebase_to_vertex(&fin);
        base = b;
        marking.push(lp);
    }
    let volume = fin.volume();
    let scale = Q::one() / &volume;
    let marked = MarkedGraph::from_marking(src.basis(), fin.clone(), base, marking)?.normalized();
    let final_vertex_images: Vec<Point> = {
        let mut out = vec![Point::Vertex(0); nfinal];
        for v in 0..vcount {
            if branch[v] {
                out[final_id[v]] = pre_vertex_image[v].clone().unwrap();
            }
        }
        out
    };
    Ok(Quotient {
        map: DifferenceOfMarkings {
            source: marked,
            target: f.target.clone(),
            vertex_images: final_vertex_images,
            edge_images: final_images,
        },
        edge_maps: edge_maps.iter().map(|p| p.scaled(&scale)).collect(),
        vertex_maps: vertex_maps.iter().map(|p| p.scaled(&scale)).collect(),
        volume,
    })
}

/// Runs the engine from a fully tense train track map.
pub fn fold_path(f: &DifferenceOfMarkings, policy: &StepPolicy) -> Result<FoldingPath> {
    let stretch = uniform_slope(f).ok_or(Error::NotTense)?;
    let tt = TrainTrack::from_map(f);
    let mut events = vec![FoldEvent {
        time: LogScalar::zero(),
        map: f.clone(),
        train_track: tt,
        stretch,
        delta: None,
        edge_maps: Vec::new(),
        vertex_maps: Vec::new(),
    }];
    loop {
        let cur = events.last().unwrap();
        if cur.stretch.is_one() {
            if marked_isometry(cur.graph(), &cur.map.target).is_none() {
                return Err(Error::InvalidGraph("stretch one without an isometry".into()));
            }
            break;
        }
        if events.len() > policy.event_cap {
            return Err(Error::EventCapExceeded(policy.event_cap));
        }
        if let Some(v) = cur.train_track.defect() {
            return Err(Error::NotTrainTrack(v));
        }
        if cur.illegality() == 0 {
            return Err(Error::InvalidGraph("no illegal turns but the map stretches".into()));
        }
        let delta = next_delta(&cur.map, &cur.train_track, policy).ok_or(Error::NotTense)?;
        debug_assert!(delta.is_positive());
        let q = fold_step(&cur.map, &cur.train_track, &delta)?;
        let time = LogScalar::new(&cur.time.ratio / &q.volume);
        let stretch = &cur.stretch * &q.volume;
        let tt = TrainTrack::from_map(&q.map);
        events.push(FoldEvent {
            time,
            map: q.map,
            train_track: tt,
            stretch,
            delta: Some(delta),
            edge_maps: q.edge_maps,
            vertex_maps: q.vertex_maps,
        });
    }
    Ok(FoldingPath { events })
}

impl FoldingPath {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn graph(&self, i: usize) -> &MarkedGraph {
        self.events[i].graph()
    }

    pub fn start(&self) -> &MarkedGraph {
        self.graph(0)
    }

    pub fn end(&self) -> &MarkedGraph {
        self.graph(self.events.len() - 1)
    }

    /// `e^L` for the whole path.
    pub fn total(&self) -> &LogScalar {
        &self.events.last().unwrap().time
    }

    /// `e^{t_j − t_i}`.
    pub fn span(&self, i: usize, j: usize) -> LogScalar {
        self.events[j].time.sub(&self.events[i].time)
    }

    /// The graph partway through the fold after event `i`, with fold
    /// amount `delta` below that event's full step; returns `e^{t − t_i}`.
    pub fn interpolate(&self, i: usize, delta: &Q) -> Result<(LogScalar, MarkedGraph)> {
        let ev = &self.events[i];
        let q = fold_step(&ev.map, &ev.train_track, delta)?;
        Ok((LogScalar::new(Q::one() / &q.volume), q.map.source))
    }

    /// The full fold amount leaving event `i`.
    pub fn step_after(&self, i: usize) -> Option<&Q> {
        self.events.get(i + 1).and_then(|e| e.delta.as_ref())
    }

    /// Image of an edge path of `G_i` in `G_j` (`i ≤ j`), tightened.
    pub fn push_forward(&self, i: usize, j: usize, start: &Point, path: &MetricPath) -> MetricPath {
        let mut cur = path.clone();
        let mut _pt = start.clone();
        for k in i + 1..=j {
            cur = self.map_path(k, &cur);
        }
        cur
    }

    /// Applies the fold map into event `k` to a path of event `k − 1`.
    pub fn map_path(&self, k: usize, path: &MetricPath) -> MetricPath {
        let ev = &self.events[k];
        let prev = self.graph(k - 1).graph();
        let next = ev.graph().graph();
        let start = map_point(prev, next, &ev.edge_maps, &ev.vertex_maps, &path.start);
        let mut out = MetricPath::trivial(start);
        for p in &path.pieces {
            let e = p.half.edge();
            let len = &prev.edge(e).len;
            let img = &ev.edge_maps[e];
            let slope = img.length() / len;
            let (a, b) = if p.half.forward() {
                (&p.from * &slope, &p.to * &slope)
            } else {
                ((len - &p.to) * &slope, (len - &p.from) * &slope)
            };
            let mut sub = img.subpath(next, &a, &b);
            if !p.half.forward() {
                sub = sub.reverse(next);
            }
            for q in sub.pieces {
                out.push(next, q);
            }
        }
        out
    }
}

fn map_point(prev: &MetricGraph, next: &MetricGraph, edge_maps: &[MetricPath], vertex_maps: &[Point], p: &Point) -> Point {
    match p {
        Point::Vertex(v) => vertex_maps[*v].clone(),
        Point::Interior { edge, offset } => {
            let img = &edge_maps[*edge];
            let slope = img.length() / &prev.edge(*edge).len;
            img.point_at(next, &(offset * slope))
        }
    }
}

/// Rescaling segment followed by a folding path.
#[derive(Clone, Debug)]
pub struct StandardGeodesic {
    pub rescaling: Rescaling,
    pub folding: FoldingPath,
}

impl StandardGeodesic {
    /// `e^{d(G, H)}` along the geodesic.
    pub fn total(&self) -> Q {
        &self.rescaling.ratio * &self.folding.total().ratio
    }

    pub fn has_rescaling(&self) -> bool {
        !self.rescaling.ratio.is_one()
    }
}

pub fn standard_geodesic(g: &MarkedGraph, h: &MarkedGraph, policy: &StepPolicy) -> Result<StandardGeodesic> {
    let opt = optimal_map_with(g, h, &OptimalConfig::default())?;
    let rescaling = rescale(&opt)?;
    let folding = fold_path(&rescaling.map, policy)?;
    Ok(StandardGeodesic { rescaling, folding })
}

/// Per-vertex gate sizes, for reports.
pub fn gate_profile(tt: &TrainTrack) -> BTreeMap<usize, Vec<usize>> {
    tt.gates.iter().enumerate().map(|(v, gs)| (v, gs.iter().map(|g| g.len()).collect())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aut::Automorphism;
    use crate::lipschitz::distance_ratio;
    use crate::rational::{q, qi};
    use crate::word::Basis;

    fn b2() -> Basis {
        Basis::new(2).unwrap()
    }

    #[test]
    fn identity_path_is_constant() {
        let g = MarkedGraph::theta([q(1, 3), q(1, 3), q(1, 3)]);
        let sg = standard_geodesic(&g, &g, &StepPolicy::default()).unwrap();
        assert_eq!(sg.folding.len(), 1);
        assert!(!sg.has_rescaling());
        assert_eq!(sg.total(), qi(1));
    }

    #[test]
    fn twist_example_folds_in_log_three_halves() {
        let g = MarkedGraph::rose(b2(), &[q(1, 2), q(1, 2)]).unwrap();
        let phi = Automorphism::from_texts(b2(), &["ab", "b"]).unwrap();
        let h = g.act(&phi);
        let sg = standard_geodesic(&g, &h, &StepPolicy::default()).unwrap();
        assert_eq!(sg.rescaling.ratio, q(4, 3));
        assert_eq!(sg.folding.total().ratio, q(3, 2));
        let p = &sg.folding;
        for i in 0..p.len() {
            assert!(p.graph(i).is_normalized());
            for j in i + 1..p.len() {
                assert_eq!(distance_ratio(p.graph(i), p.graph(j)).unwrap(), p.span(i, j).ratio);
            }
        }
        assert!(marked_isometry(p.end(), &h).is_some());
    }

    #[test]
    fn random_geodesics() {
        use crate::random::random_marked_graph;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for r in [2, 3] {
            let basis = Basis::new(r).unwrap();
            for _ in 0..6 {
                let g = random_marked_graph(basis, 1, &mut rng);
                let h = random_marked_graph(basis, 3, &mut rng);
                let sg = standard_geodesic(&g, &h, &StepPolicy::default()).unwrap();
                assert_eq!(sg.total(), distance_ratio(&g, &h).unwrap());
                let p = &sg.folding;
                assert_eq!(distance_ratio(p.start(), p.end()).unwrap(), p.total().ratio);
                for i in 0..p.len() {
                    let m = p.events[i].illegality();
                    assert!(i + 1 == p.len() || (1..=6 * r - 6).contains(&m));
                }
            }
        }
    }
}
