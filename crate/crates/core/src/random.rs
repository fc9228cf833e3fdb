//! Seeded generators for automorphisms and points of Outer space.

use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::aut::Automorphism;
use crate::graph::{Edge, MetricGraph};
use crate::marked::MarkedGraph;
use crate::rational::{q, Q};
use crate::word::{Basis, Letter, Word};

/// A Nielsen move: `x_i ↦ x_i x_j^{±1}`, `x_i ↦ x_j^{±1} x_i`, or `x_i ↦ x_i^{-1}`.
pub fn random_nielsen<R: Rng>(basis: Basis, rng: &mut R) -> Automorphism {
    let r = basis.rank;
    let i = rng.gen_range(0..r);
    let mut j = rng.gen_range(0..r - 1);
    if j >= i {
        j += 1;
    }
    let xi = i as Letter + 1;
    let xj = if rng.gen_bool(0.5) { j as Letter + 1 } else { -(j as Letter + 1) };
    let image = match rng.gen_range(0..5) {
        0 | 1 => Word::from_letters(&[xi, xj]),
        2 | 3 => Word::from_letters(&[xj, xi]),
        _ => Word::letter(-xi),
    };
    let mut images: Vec<Word> = (0..r).map(|k| Word::letter(k as Letter + 1)).collect();
    images[i] = image;
    Automorphism::new_unchecked(basis, images).expect("Nielsen move")
}

/// Product of `steps` random Nielsen moves.
pub fn random_automorphism<R: Rng>(basis: Basis, steps: usize, rng: &mut R) -> Automorphism {
    let mut phi = Automorphism::identity(basis);
    for _ in 0..steps {
        phi = phi.compose(&random_nielsen(basis, rng));
    }
    phi
}

/// A connected graph with every vertex trivalent (loops and multi-edges
/// allowed), then a random forest collapsed.
pub fn random_topology<R: Rng>(rank: usize, rng: &mut R) -> MetricGraph {
    let n = 2 * rank - 2;
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(rng);
        let edges: Vec<Edge> = stubs.chunks(2).map(|c| Edge { from: c[0], to: c[1], len: Q::one() }).collect();
        let g = MetricGraph::new(n, edges);
        if !g.is_connected() {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        let mut keep = Vec::new();
        let mut comp = vec![0usize; n];
        fn find(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                v = p[v];
            }
            v
        }
        for (e, edge) in g.edges().iter().enumerate() {
            let (a, b) = (find(&mut parent, edge.from), find(&mut parent, edge.to));
            if a != b && rng.gen_bool(0.35) {
                parent[b] = a;
            } else {
                keep.push(e);
            }
        }
        let mut index = vec![usize::MAX; n];
        let mut count = 0;
        for v in 0..n {
            let r = find(&mut parent, v);
            if index[r] == usize::MAX {
                index[r] = count;
                count += 1;
            }
            comp[v] = index[r];
        }
        let edges = keep
            .iter()
            .map(|&e| Edge { from: comp[g.edge(e).from], to: comp[g.edge(e).to], len: Q::one() })
            .collect();
        return MetricGraph::new(count, edges);
    }
}

/// Random positive lengths with denominators up to `den`, volume one.
pub fn random_lengths<R: Rng>(count: usize, den: i64, rng: &mut R) -> Vec<Q> {
    let raw: Vec<Q> = (0..count).map(|_| q(rng.gen_range(1..=den), den)).collect();
    let total: Q = raw.iter().sum();
    raw.into_iter().map(|x| x / &total).collect()
}

/// Random topology, lengths and a standard marking twisted by
/// `twist` Nielsen moves.
pub fn random_marked_graph<R: Rng>(basis: Basis, twist: usize, rng: &mut R) -> MarkedGraph {
    let shape = random_topology(basis.rank, rng);
    let lengths = random_lengths(shape.edge_count(), 9, rng);
    let g = MarkedGraph::standard_marking(basis, shape.with_lengths(lengths), 0).expect("trivalent core graph");
    if twist == 0 {
        g
    } else {
        g.act(&random_automorphism(basis, twist, rng))
    }
}
