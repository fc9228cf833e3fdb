//! Loops carried along a folding path: lengths, illegal turns, the
//! legal/illegal/neutral split and unfolding of subpaths.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fold::{FoldingPath, TrainTrack};
use crate::graph::{HalfEdge, MetricGraph};
use crate::path::{MetricPath, Point};
use crate::rational::{LogScalar, Q};
use crate::word::CyclicWord;

/// Upper bound on illegal turns in a train track structure of the given rank.
pub fn max_illegal_turns(rank: usize) -> usize {
    (2 * rank - 1) * (2 * rank - 2) / 2
}

/// Length threshold for illegal segments.
pub fn illegal_segment_threshold(rank: usize) -> usize {
    let mb = max_illegal_turns(rank);
    (18 * mb * (3 * rank - 3) + 6) * (2 * rank - 1)
}

/// Minimum length of a legal segment counted as legal length.
pub const LONG_LEGAL: i64 = 3;

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct LoopRecord {
    pub time: LogScalar,
    #[serde(with = "crate::rational::q_string")]
    pub length: Q,
    pub illegal_turns: usize,
    #[serde(with = "crate::rational::q_string")]
    pub leg: Q,
    #[serde(with = "crate::rational::q_string")]
    pub ilg: Q,
    #[serde(with = "crate::rational::q_string")]
    pub ntr: Q,
}

/// Turn indices `q` (between edge `q` and edge `q + 1`, cyclically) that
/// are illegal.
pub fn illegal_turns(g: &MetricGraph, tt: &TrainTrack, lp: &[HalfEdge]) -> Vec<usize> {
    let n = lp.len();
    (0..n)
        .filter(|&q| {
            let a = lp[q].rev();
            let b = lp[(q + 1) % n];
            debug_assert_eq!(g.origin(a), g.origin(b));
            a != b && tt.is_illegal(a, b)
        })
        .collect()
}

/// `(leg, ilg, ntr)` for a loop with the given illegal turns.
pub fn decompose(g: &MetricGraph, lp: &[HalfEdge], turns: &[usize], max_turns: usize) -> (Q, Q, Q) {
    let total = g.path_length(lp);
    let k = turns.len();
    if k == 0 {
        return (total, Q::zero(), Q::zero());
    }
    let n = lp.len();
    // segment j runs from turn j to turn j + 1
    let seg_len: Vec<Q> = (0..k)
        .map(|j| {
            let (a, b) = (turns[j], turns[(j + 1) % k]);
            let mut s = Q::zero();
            let mut i = (a + 1) % n;
            loop {
                s += g.len(lp[i]);
                if i == b {
                    break;
                }
                i = (i + 1) % n;
            }
            s
        })
        .collect();
    let long = |x: &Q| *x >= Q::from_integer(LONG_LEGAL.into());
    let mut leg = Q::zero();
    let mut ilg = Q::zero();
    let mut ntr = Q::zero();
    let Some(first_long) = seg_len.iter().position(long) else {
        if k > max_turns {
            ilg = total;
        } else {
            ntr = total;
        }
        return (leg, ilg, ntr);
    };
    let mut run = Q::zero();
    let mut run_segments = 0usize;
    for step in 1..=k {
        let j = (first_long + step) % k;
        let s = &seg_len[j];
        if long(s) {
            if run_segments + 1 > max_turns {
                ilg += &run;
            } else {
                ntr += &run;
            }
            leg += s;
            run = Q::zero();
            run_segments = 0;
        } else {
            run += s;
            run_segments += 1;
        }
    }
    (leg, ilg, ntr)
}

/// A conjugacy class followed through the events of a path.
#[derive(Clone, Debug)]
pub struct TrackedLoop {
    pub class: CyclicWord,
    /// Loop at each event as an edge cycle.
    pub loops: Vec<Vec<HalfEdge>>,
    /// Illegal turn indices at each event.
    pub illegal: Vec<Vec<usize>>,
    /// For event `k ≥ 1`, the illegal turns of event `k − 1` landing on
    /// each illegal turn of event `k`.
    pub parents: Vec<Vec<Vec<usize>>>,
}

/// Pushes a loop through the fold map into event `k` and reports where
/// the marked turns land.
fn push_loop(path: &FoldingPath, k: usize, lp: &[HalfEdge], marked: &[usize]) -> (Vec<HalfEdge>, Vec<Option<usize>>) {
    let ev = &path.events[k];
    let next = ev.graph().graph();
    let prev = path.graph(k - 1).graph();
    let mut stack = MetricPath::trivial(ev.vertex_maps[prev.origin(lp[0])].clone());
    let mut len = Q::zero();
    let mut pos: Vec<Q> = Vec::with_capacity(marked.len());
    let mut mi = 0;
    for (q, &h) in lp.iter().enumerate() {
        let img = if h.forward() { ev.edge_maps[h.edge()].clone() } else { ev.edge_maps[h.edge()].reverse(next) };
        for p in img.pieces {
            stack.push(next, p);
            len = stack.length();
            for x in pos.iter_mut() {
                if *x > len {
                    *x = len.clone();
                }
            }
        }
        while mi < marked.len() && marked[mi] == q {
            pos.push(len.clone());
            mi += 1;
        }
    }
    // cyclic cancellation across the base point
    let mut t = stack;
    let mut shift = Q::zero();
    loop {
        if t.pieces.len() < 2 {
            break;
        }
        let first = t.pieces[0].clone();
        let last = t.pieces[t.pieces.len() - 1].clone();
        if last.half != first.half.rev() {
            break;
        }
        let c = if first.len() < last.len() { first.len() } else { last.len() };
        let total = t.length();
        let lo = &shift + &c;
        let hi = &shift + &total - &c;
        for x in pos.iter_mut() {
            if *x < lo {
                *x = lo.clone();
            }
            if *x > hi {
                *x = hi.clone();
            }
        }
        shift = lo;
        let m = t.pieces.len();
        t.pieces[0].from += &c;
        t.pieces[m - 1].to -= &c;
        t.start = Point::on_half(next, first.half, &t.pieces[0].from);
        t.pieces.retain(|p| p.from < p.to);
    }
    let total = t.length();
    // rotate to start at a vertex
    let (edges, offset) = match &t.start {
        Point::Vertex(_) => (t.pieces.iter().map(|p| p.half).collect::<Vec<_>>(), Q::zero()),
        Point::Interior { .. } => {
            let first = &t.pieces[0];
            let o = first.len();
            let mut e: Vec<HalfEdge> = t.pieces[1..t.pieces.len() - 1].iter().map(|p| p.half).collect();
            e.push(first.half);
            (e, o)
        }
    };
    debug_assert!(edges.iter().zip(t.pieces.iter().skip(usize::from(!offset.is_zero()))).all(|(a, b)| *a == b.half));
    let mut cum = Vec::with_capacity(edges.len());
    let mut acc = Q::zero();
    for &h in &edges {
        acc += next.len(h);
        cum.push(acc.clone());
    }
    let landing = pos
        .iter()
        .map(|x| {
            let mut y = x - &shift - &offset;
            while y < Q::zero() {
                y += &total;
            }
            while y > total {
                y -= &total;
            }
            if y.is_zero() {
                y = total.clone();
            }
            cum.iter().position(|c| *c == y)
        })
        .collect();
    (edges, landing)
}

fn rotate_to_match(edges: &[HalfEdge], target: &[HalfEdge]) -> Option<usize> {
    let n = edges.len();
    if n != target.len() {
        return None;
    }
    (0..n).find(|&r| (0..n).all(|i| edges[(i + r) % n] == target[i]))
}

pub fn track_loop(class: &CyclicWord, path: &FoldingPath) -> Result<TrackedLoop> {
    if class.is_empty() {
        return Err(Error::TrivialClass);
    }
    let g0 = path.graph(0);
    let first = g0.loop_path(class.letters());
    let mut loops = vec![first];
    let mut illegal = vec![illegal_turns(g0.graph(), &path.events[0].train_track, &loops[0])];
    let mut parents = vec![Vec::new()];
    for k in 1..path.len() {
        let (edges, landing) = push_loop(path, k, &loops[k - 1], &illegal[k - 1]);
        let g = path.graph(k);
        debug_assert!(
            rotate_to_match(&edges, &g.loop_path(class.letters())).is_some(),
            "tracked loop differs from the marked loop"
        );
        let turns = illegal_turns(g.graph(), &path.events[k].train_track, &edges);
        let par = turns
            .iter()
            .map(|t| {
                illegal[k - 1]
                    .iter()
                    .zip(&landing)
                    .filter(|(_, l)| **l == Some(*t))
                    .map(|(o, _)| *o)
                    .collect()
            })
            .collect();
        loops.push(edges);
        illegal.push(turns);
        parents.push(par);
    }
    Ok(TrackedLoop { class: class.clone(), loops, illegal, parents })
}

pub fn loop_profile(class: &CyclicWord, path: &FoldingPath) -> Result<Vec<LoopRecord>> {
    let tracked = track_loop(class, path)?;
    Ok(profile_of(&tracked, path))
}

pub fn profile_of(tracked: &TrackedLoop, path: &FoldingPath) -> Vec<LoopRecord> {
    let mb = max_illegal_turns(path.graph(0).rank());
    (0..path.len())
        .map(|k| {
            let g = path.graph(k).graph();
            let lp = &tracked.loops[k];
            let (leg, ilg, ntr) = decompose(g, lp, &tracked.illegal[k], mb);
            LoopRecord {
                time: path.events[k].time.clone(),
                length: g.path_length(lp),
                illegal_turns: tracked.illegal[k].len(),
                leg,
                ilg,
                ntr,
            }
        })
        .collect()
}

/// Lift of a subpath between illegal turns, with the germs beyond it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Unfolded {
    pub event: usize,
    pub start_turn: usize,
    pub end_turn: usize,
    pub entry: HalfEdge,
    pub edges: Vec<HalfEdge>,
    pub exit: HalfEdge,
}

/// Edges strictly after turn `a` up to and including the edge ending at
/// turn `b`; the whole loop when `a == b`.
pub fn between_turns(lp: &[HalfEdge], a: usize, b: usize) -> Vec<HalfEdge> {
    let n = lp.len();
    let mut out = Vec::new();
    let mut i = (a + 1) % n;
    loop {
        out.push(lp[i]);
        if i == b {
            break;
        }
        i = (i + 1) % n;
    }
    out
}

/// Preimage of a subpath of the loop at event `later` (between illegal
/// turns `a` and `b`) in the loop at event `earlier`.
pub fn unfold_subpath(tracked: &TrackedLoop, earlier: usize, later: usize, a: usize, b: usize) -> Result<Unfolded> {
    assert!(earlier <= later);
    for t in [a, b] {
        if !tracked.illegal[later].contains(&t) {
            return Err(Error::NotIllegalEndpoint(t));
        }
    }
    let (mut a, mut b) = (a, b);
    for k in (earlier + 1..=later).rev() {
        let turns = &tracked.illegal[k];
        let pa = &tracked.parents[k][turns.iter().position(|t| *t == a).unwrap()];
        let pb = &tracked.parents[k][turns.iter().position(|t| *t == b).unwrap()];
        if pa.is_empty() || pb.is_empty() {
            return Err(Error::NotIllegalEndpoint(if pa.is_empty() { a } else { b }));
        }
        a = last_of_block(&tracked.illegal[k - 1], pa);
        b = first_of_block(&tracked.illegal[k - 1], pb);
    }
    let lp = &tracked.loops[earlier];
    let n = lp.len();
    Ok(Unfolded {
        event: earlier,
        start_turn: a,
        end_turn: b,
        entry: lp[a].rev(),
        edges: between_turns(lp, a, b),
        exit: lp[(b + 1) % n],
    })
}

/// The member of a cyclically contiguous block of turns that is followed
/// by a turn outside it.
fn last_of_block(all: &[usize], block: &[usize]) -> usize {
    let k = all.len();
    for (i, t) in all.iter().enumerate() {
        if block.contains(t) && !block.contains(&all[(i + 1) % k]) {
            return *t;
        }
    }
    *block.iter().max().unwrap()
}

fn first_of_block(all: &[usize], block: &[usize]) -> usize {
    let k = all.len();
    for (i, t) in all.iter().enumerate() {
        if block.contains(t) && !block.contains(&all[(i + k - 1) % k]) {
            return *t;
        }
    }
    *block.iter().min().unwrap()
}

/// Longest legal stretch (in edges) of a loop, as a path.
pub fn longest_legal(g: &MetricGraph, lp: &[HalfEdge], turns: &[usize]) -> Q {
    if turns.is_empty() {
        return g.path_length(lp);
    }
    let k = turns.len();
    (0..k)
        .map(|j| g.path_length(&between_turns(lp, turns[j], turns[(j + 1) % k])))
        .max()
        .unwrap()
}
