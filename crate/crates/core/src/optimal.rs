//! Linear-on-edges maps between marked graphs, the optimal-map search, and
//! the rescaling that starts a standard geodesic.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::aut::Automorphism;
use crate::error::{Error, Result};
use crate::graph::HalfEdge;
use crate::lipschitz::lipschitz_distance;
use crate::marked::MarkedGraph;
use crate::path::{MetricPath, Point};
use crate::rational::{fmt_q, Q};
use crate::word::CyclicWord;

/// A map `G → H` in the homotopy class of the change of marking, given by
/// vertex images and tight edge images.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DifferenceOfMarkings {
    pub source: MarkedGraph,
    pub target: MarkedGraph,
    pub vertex_images: Vec<Point>,
    pub edge_images: Vec<MetricPath>,
}

impl DifferenceOfMarkings {
    /// Every vertex goes to the target's base vertex; each edge follows the
    /// word read along a tree path through it.
    pub fn initial(g: &MarkedGraph, h: &MarkedGraph) -> Result<Self> {
        if g.basis() != h.basis() {
            return Err(Error::RankMismatch(g.rank(), h.rank()));
        }
        let graph = g.graph();
        let parent = graph.bfs_tree(g.base());
        let tree_words: Vec<_> = (0..graph.vertex_count())
            .map(|v| g.read_path(&graph.tree_path(&parent, v)))
            .collect();
        let hg = h.graph();
        let mut edge_images = Vec::with_capacity(graph.edge_count());
        for (e, edge) in graph.edges().iter().enumerate() {
            let w = tree_words[edge.from].mul(g.comarking(e)).mul(&tree_words[edge.to].inverse());
            edge_images.push(MetricPath::from_edges(hg, h.base(), &h.word_path(w.letters())));
        }
        Ok(DifferenceOfMarkings {
            source: g.clone(),
            target: h.clone(),
            vertex_images: vec![Point::Vertex(h.base()); graph.vertex_count()],
            edge_images,
        })
    }

    pub fn slope(&self, e: usize) -> Q {
        self.edge_images[e].length() / &self.source.graph().edge(e).len
    }

    pub fn slopes(&self) -> Vec<Q> {
        (0..self.source.graph().edge_count()).map(|e| self.slope(e)).collect()
    }

    pub fn lipschitz(&self) -> Q {
        self.slopes().into_iter().max().expect("graph has edges")
    }

    /// Edges of maximal slope.
    pub fn tension_edges(&self) -> Vec<usize> {
        let s = self.slopes();
        let m = s.iter().max().unwrap().clone();
        (0..s.len()).filter(|&e| s[e] == m).collect()
    }

    /// Image of a half-edge, read from its origin.
    pub fn direction_image(&self, h: HalfEdge) -> MetricPath {
        if h.forward() {
            self.edge_images[h.edge()].clone()
        } else {
            self.edge_images[h.edge()].reverse(self.target.graph())
        }
    }

    /// Initial direction of the image of `h`, or `None` when it is a point.
    pub fn germ(&self, h: HalfEdge) -> Option<HalfEdge> {
        if h.forward() {
            self.edge_images[h.edge()].first_direction()
        } else {
            self.edge_images[h.edge()].last_direction()
        }
    }

    /// Length of the first piece of the image of `h`.
    fn first_piece(&self, h: HalfEdge) -> Option<Q> {
        let p = &self.edge_images[h.edge()];
        let piece = if h.forward() { p.pieces.first() } else { p.pieces.last() };
        piece.map(|x| x.len())
    }

    /// Directions at `v` with non-degenerate image, grouped by germ.
    pub fn gates_at(&self, v: usize, keep: &dyn Fn(usize) -> bool) -> Vec<Vec<HalfEdge>> {
        let mut by_germ: BTreeMap<HalfEdge, Vec<HalfEdge>> = BTreeMap::new();
        for &h in self.source.graph().out(v) {
            if !keep(h.edge()) {
                continue;
            }
            if let Some(d) = self.germ(h) {
                by_germ.entry(d).or_default().push(h);
            }
        }
        by_germ.into_values().collect()
    }

    /// Image of an edge path starting at a vertex.
    pub fn image_path(&self, v: usize, path: &[HalfEdge]) -> MetricPath {
        let hg = self.target.graph();
        let mut out = MetricPath::trivial(self.vertex_images[v].clone());
        for &h in path {
            for p in self.direction_image(h).pieces {
                out.push(hg, p);
            }
        }
        out
    }

    /// Length of the tightened image of a loop, which is the target length
    /// of its class.
    pub fn image_loop_length(&self, v: usize, path: &[HalfEdge]) -> Q {
        self.image_path(v, path).cyclic_length(self.target.graph())
    }

    /// The images of the source marking, read in the target, differ from the
    /// basis by an inner automorphism.
    pub fn check_homotopy(&self) -> Result<()> {
        let hg = self.target.graph();
        let g = &self.source;
        let images: Vec<_> = (0..g.rank())
            .map(|i| {
                let img = self.image_path(g.base(), g.marking(i));
                let (_, loop_) = img.rebase_to_vertex(hg);
                self.target.read_path(&loop_)
            })
            .collect();
        let phi = Automorphism::new_unchecked(g.basis(), images)?;
        match Automorphism::identity(g.basis()).out_equal(&phi)? {
            Some(_) => Ok(()),
            None => Err(Error::InvalidGraph("map is not in the homotopy class of the markings".into())),
        }
    }

    /// Moves the vertices of a cluster by `s` along `dir`.
    fn slide(&mut self, vertices: &[usize], dir: HalfEdge, s: &Q) {
        if s.is_zero() {
            return;
        }
        let hg = self.target.graph().clone();
        let p = self.vertex_images[vertices[0]].clone();
        let seg = MetricPath::segment(&hg, &p, dir, s);
        let back = seg.reverse(&hg);
        let new_point = seg.end(&hg);
        let graph = self.source.graph().clone();
        for e in 0..graph.edge_count() {
            let edge = graph.edge(e);
            let (a, b) = (vertices.contains(&edge.from), vertices.contains(&edge.to));
            if !a && !b {
                continue;
            }
            let mut path = if a { back.concat(&hg, &self.edge_images[e]) } else { self.edge_images[e].clone() };
            if b {
                path = path.concat(&hg, &seg);
            }
            self.edge_images[e] = path;
        }
        for &v in vertices {
            self.vertex_images[v] = new_point.clone();
        }
    }

    /// Best joint slide with one gate direction per tense vertex, by linear
    /// programming over the slide amounts. Returns the new largest slope.
    fn lp_step(&self, dirs: &[(usize, HalfEdge)]) -> Option<(Q, Vec<Q>)> {
        let graph = self.source.graph();
        let hg = self.target.graph();
        let k = dirs.len();
        let var = |v: usize| dirs.iter().position(|&(u, _)| u == v);
        let t0 = self.lipschitz();
        let reach: Vec<Q> = dirs
            .iter()
            .map(|&(v, d)| hg.len(d) - self.vertex_images[v].offset_along(hg, d).expect("direction at point"))
            .collect();
        // rows over (s_1..s_k, tau): sum a_i s_i + len(e) tau <= len(e) t0 - const
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut rhs: Vec<Q> = Vec::new();
        let mut push = |coef: Vec<Q>, constant: Q, len: &Q| {
            let mut row = coef;
            row.push(len.clone());
            rhs.push(len * &t0 - constant);
            rows.push(row);
        };
        let zero = || vec![Q::zero(); k];
        let two = Q::from_integer(2.into());
        for e in 0..graph.edge_count() {
            let edge = graph.edge(e);
            let (iu, iw) = (var(edge.from), var(edge.to));
            if iu.is_none() && iw.is_none() {
                continue;
            }
            let len = &edge.len;
            let img = &self.edge_images[e];
            let total = img.length();
            if img.is_trivial() {
                match (iu, iw) {
                    (Some(i), Some(j)) if dirs[i].1 == dirs[j].1 => {
                        let mut c = zero();
                        c[i] += Q::from_integer(1.into());
                        c[j] -= Q::from_integer(1.into());
                        let neg: Vec<Q> = c.iter().map(|x| -x).collect();
                        push(c, Q::zero(), len);
                        push(neg, Q::zero(), len);
                    }
                    (Some(i), Some(j)) => {
                        let mut c = zero();
                        c[i] += Q::from_integer(1.into());
                        c[j] += Q::from_integer(1.into());
                        push(c, Q::zero(), len);
                    }
                    (Some(i), None) | (None, Some(i)) => {
                        let mut c = zero();
                        c[i] += Q::from_integer(1.into());
                        push(c, Q::zero(), len);
                    }
                    (None, None) => {}
                }
                continue;
            }
            let reach_toward = |i: Option<usize>, h: HalfEdge| -> Q {
                match i {
                    Some(i) if self.germ(h) == Some(dirs[i].1) => {
                        let fp = self.first_piece(h).unwrap();
                        if fp < reach[i] {
                            fp
                        } else {
                            reach[i].clone()
                        }
                    }
                    _ => Q::zero(),
                }
            };
            let cu = reach_toward(iu, HalfEdge::new(e, true));
            let cw = reach_toward(iw, HalfEdge::new(e, false));
            if edge.from != edge.to && &cu + &cw > total {
                // both ends slide toward each other along one segment
                let (i, j) = (iu.unwrap(), iw.unwrap());
                let mut c = zero();
                c[i] -= Q::from_integer(1.into());
                c[j] -= Q::from_integer(1.into());
                let neg: Vec<Q> = c.iter().map(|x| -x).collect();
                push(c, total.clone(), len);
                push(neg, -total.clone(), len);
                continue;
            }
            // length = total + s_u + s_w + max(-2 s_u, -2 c_u) + max(-2 s_w, -2 c_w)
            for ou in [true, false] {
                for ow in [true, false] {
                    let mut c = zero();
                    let mut constant = total.clone();
                    for (idx, cap, use_s) in [(iu, &cu, ou), (iw, &cw, ow)] {
                        if let Some(i) = idx {
                            if use_s {
                                c[i] -= Q::from_integer(1.into());
                            } else {
                                c[i] += Q::from_integer(1.into());
                                constant -= &two * cap;
                            }
                        }
                    }
                    push(c, constant, len);
                }
            }
        }
        for (i, r) in reach.iter().enumerate() {
            let mut c = zero();
            c[i] = Q::from_integer(1.into());
            c.push(Q::zero());
            rows.push(c);
            rhs.push(r.clone());
        }
        let mut c = zero();
        c.push(Q::from_integer(1.into()));
        let (tau, x) = crate::lp::maximize(&rows, &rhs, &c)?;
        if !tau.is_positive() {
            return None;
        }
        Some((t0 - tau, x[..k].to_vec()))
    }

    /// Direction choices: one tense gate per endpoint of a tense edge.
    fn direction_choices(&self) -> Vec<Vec<(usize, HalfEdge)>> {
        let graph = self.source.graph();
        let tense = self.tension_edges();
        let mut active: Vec<usize> = Vec::new();
        for &e in &tense {
            for v in [graph.edge(e).from, graph.edge(e).to] {
                if !active.contains(&v) {
                    active.push(v);
                }
            }
        }
        active.sort_unstable();
        let is_tense = |e: usize| tense.contains(&e);
        let mut out: Vec<Vec<(usize, HalfEdge)>> = vec![Vec::new()];
        for &v in &active {
            let germs: Vec<HalfEdge> = self.gates_at(v, &is_tense).iter().filter_map(|g| self.germ(g[0])).collect();
            let mut next = Vec::new();
            for prefix in &out {
                for &d in &germs {
                    let mut p = prefix.clone();
                    p.push((v, d));
                    next.push(p);
                }
            }
            out = next;
            if out.len() > 4096 {
                out.truncate(4096);
            }
        }
        out
    }
}

/// Options for [`optimal_map`].
#[derive(Clone, Debug)]
pub struct OptimalConfig {
    pub max_iterations: usize,
}

impl Default for OptimalConfig {
    fn default() -> Self {
        OptimalConfig { max_iterations: 500 }
    }
}

/// An optimal map: Lipschitz constant equal to the candidate ratio.
#[derive(Clone, Debug)]
pub struct OptimalMap {
    pub map: DifferenceOfMarkings,
    pub ratio: Q,
    pub witness: CyclicWord,
    pub iterations: usize,
}

pub fn optimal_map(g: &MarkedGraph, h: &MarkedGraph) -> Result<OptimalMap> {
    optimal_map_with(g, h, &OptimalConfig::default())
}

pub fn optimal_map_with(g: &MarkedGraph, h: &MarkedGraph, cfg: &OptimalConfig) -> Result<OptimalMap> {
    let d = lipschitz_distance(g, h)?;
    let target = d.ratio.ratio.clone();
    let mut f = DifferenceOfMarkings::initial(g, h)?;
    let mut iterations = 0;
    loop {
        let lip = f.lipschitz();
        if lip == target {
            return Ok(OptimalMap { map: f, ratio: target, witness: d.witness, iterations });
        }
        if lip < target || iterations >= cfg.max_iterations {
            return Err(Error::OptimalityGap { best: fmt_q(&lip), target: fmt_q(&target) });
        }
        iterations += 1;
        let mut best: Option<(Q, Vec<(usize, HalfEdge)>, Vec<Q>)> = None;
        for dirs in f.direction_choices() {
            if let Some((v, amounts)) = f.lp_step(&dirs) {
                if best.as_ref().map_or(true, |(bv, _, _)| v < *bv) {
                    best = Some((v, dirs, amounts));
                }
            }
        }
        match best {
            Some((_, dirs, amounts)) => {
                for ((v, d), s) in dirs.iter().zip(&amounts) {
                    f.slide(&[*v], *d, s);
                }
            }
            None => return Err(Error::OptimalityGap { best: fmt_q(&lip), target: fmt_q(&target) }),
        }
    }
}

/// Largest subgraph of the tension graph in which every vertex has at
/// least two gates.
pub fn legal_core(f: &DifferenceOfMarkings) -> Vec<bool> {
    let graph = f.source.graph();
    let mut keep = vec![false; graph.edge_count()];
    for e in f.tension_edges() {
        keep[e] = true;
    }
    loop {
        let mut changed = false;
        for v in 0..graph.vertex_count() {
            let k = keep.clone();
            let gates = f.gates_at(v, &|e| k[e]);
            if gates.len() == 1 {
                for h in &gates[0] {
                    keep[h.edge()] = false;
                }
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

/// Rescaling segment plus a fully tense train track map to the target.
#[derive(Clone, Debug)]
pub struct Rescaling {
    pub start: MarkedGraph,
    /// Start of the folding part, in the closed simplex of `start`.
    pub end: MarkedGraph,
    /// `d(start, end)`; one when nothing was rescaled.
    pub ratio: Q,
    pub map: DifferenceOfMarkings,
    pub total: Q,
}

/// Shrinks edges outside the legal core until every edge is maximally
/// stretched, collapsing edges that shrink to points.
pub fn rescale(opt: &OptimalMap) -> Result<Rescaling> {
    let mut f = opt.map.clone();
    let lam = opt.ratio.clone();
    let core = legal_core(&f);
    let graph = f.source.graph().clone();
    let n = graph.vertex_count();
    let mut fixed = vec![false; n];
    for e in 0..graph.edge_count() {
        if core[e] {
            fixed[graph.edge(e).from] = true;
            fixed[graph.edge(e).to] = true;
        }
    }
    let mut guard = 0;
    'outer: loop {
        guard += 1;
        if guard > 10_000 {
            return Err(Error::EventCapExceeded(10_000));
        }
        // clusters joined by degenerate edge images
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], mut v: usize) -> usize {
            while c[v] != v {
                v = c[v];
            }
            v
        }
        for e in 0..graph.edge_count() {
            if f.edge_images[e].is_trivial() {
                let (a, b) = (find(&mut comp, graph.edge(e).from), find(&mut comp, graph.edge(e).to));
                if a != b {
                    comp[b] = a;
                }
            }
        }
        let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut comp, v);
            clusters.entry(r).or_default().push(v);
        }
        for vs in clusters.values() {
            if vs.iter().any(|&v| fixed[v]) {
                continue;
            }
            let mut by_germ: BTreeMap<HalfEdge, Vec<HalfEdge>> = BTreeMap::new();
            for &v in vs {
                for &h in graph.out(v) {
                    if let Some(d) = f.germ(h) {
                        by_germ.entry(d).or_default().push(h);
                    }
                }
            }
            if by_germ.len() != 1 {
                continue;
            }
            let (dir, hs) = by_germ.into_iter().next().unwrap();
            let s = hs.iter().map(|&h| f.first_piece(h).unwrap()).min().unwrap();
            let mut s = s;
            for &h in &hs {
                let e = h.edge();
                let other_in = vs.contains(&graph.edge(e).from) && vs.contains(&graph.edge(e).to);
                if other_in {
                    let half = f.edge_images[e].length() / Q::from_integer(2.into());
                    if half < s {
                        s = half;
                    }
                }
            }
            f.slide(vs, dir, &s);
            continue 'outer;
        }
        break;
    }
    let lengths: Vec<Q> = f.edge_images.iter().map(|p| p.length() / &lam).collect();
    let collapse: Vec<usize> = (0..lengths.len()).filter(|&e| lengths[e].is_zero()).collect();
    let kept: Vec<usize> = (0..lengths.len()).filter(|&e| !lengths[e].is_zero()).collect();
    let shrunk = f.source.with_lengths(lengths.iter().map(|l| if l.is_zero() { Q::one() } else { l.clone() }).collect());
    let collapsed = shrunk.collapse(&collapse)?;
    let vol = collapsed.volume();
    let end = collapsed.normalized();
    // vertex images survive the collapse: merged vertices share a point
    let mut vmap = vec![usize::MAX; end.graph().vertex_count()];
    {
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], mut v: usize) -> usize {
            while c[v] != v {
                v = c[v];
            }
            v
        }
        for &e in &collapse {
            let (a, b) = (find(&mut comp, graph.edge(e).from), find(&mut comp, graph.edge(e).to));
            comp[b] = a;
        }
        let mut index = vec![usize::MAX; n];
        let mut count = 0;
        for v in 0..n {
            let r = find(&mut comp, v);
            if index[r] == usize::MAX {
                index[r] = count;
                vmap[count] = v;
                count += 1;
            }
        }
    }
    let map = DifferenceOfMarkings {
        source: end.clone(),
        target: f.target.clone(),
        vertex_images: vmap.iter().map(|&v| f.vertex_images[v].clone()).collect(),
        edge_images: kept.iter().map(|&e| f.edge_images[e].clone()).collect(),
    };
    let ratio = Q::one() / &vol;
    Ok(Rescaling { start: opt.map.source.clone(), end, ratio, map, total: lam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::distance_ratio;
    use crate::rational::{q, qi};
    use crate::word::Basis;

    fn b2() -> Basis {
        Basis::new(2).unwrap()
    }

    #[test]
    fn identity_is_optimal() {
        let g = MarkedGraph::theta([q(1, 3), q(1, 3), q(1, 3)]);
        let opt = optimal_map(&g, &g).unwrap();
        assert_eq!(opt.ratio, qi(1));
        assert!(opt.map.slopes().iter().all(|s| *s == qi(1)));
        opt.map.check_homotopy().unwrap();
    }

    #[test]
    fn twist_of_rose() {
        let g = MarkedGraph::rose(b2(), &[q(1, 2), q(1, 2)]).unwrap();
        let phi = Automorphism::from_texts(b2(), &["ab", "b"]).unwrap();
        let h = g.act(&phi);
        let opt = optimal_map(&g, &h).unwrap();
        assert_eq!(opt.ratio, qi(2));
        assert_eq!(opt.map.slopes(), vec![qi(2), qi(1)]);
        assert_eq!(opt.map.tension_edges(), vec![0]);
        opt.map.check_homotopy().unwrap();
        let r = rescale(&opt).unwrap();
        assert_eq!(r.end.graph().lengths(), vec![q(2, 3), q(1, 3)]);
        assert_eq!(r.ratio, q(4, 3));
        assert_eq!(distance_ratio(&g, &r.end).unwrap(), q(4, 3));
        assert_eq!(distance_ratio(&r.end, &h).unwrap(), q(3, 2));
        assert!(r.map.slopes().iter().all(|s| *s == q(3, 2)));
        r.map.check_homotopy().unwrap();
    }

    #[test]
    fn random_pairs_reach_the_certificate() {
        use crate::random::random_marked_graph;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for r in [2, 3] {
            let basis = Basis::new(r).unwrap();
            for _ in 0..15 {
                let g = random_marked_graph(basis, 2, &mut rng);
                let h = random_marked_graph(basis, 3, &mut rng);
                let opt = optimal_map(&g, &h).unwrap();
                assert_eq!(opt.map.lipschitz(), opt.ratio);
                opt.map.check_homotopy().unwrap();
                let res = rescale(&opt).unwrap();
                res.map.check_homotopy().unwrap();
                let lip = res.map.lipschitz();
                assert!(res.map.slopes().iter().all(|s| *s == lip));
                assert_eq!(&res.ratio * &lip, opt.ratio);
            }
        }
    }
}
