//! Stallings folding of labeled graphs, optionally carrying group-element
//! tags so that loops can be read back in a second basis.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use crate::word::{Letter, Word};

pub trait FoldLabel: Copy + Eq + Ord + Hash + Debug {
    fn inv(self) -> Self;
}

impl FoldLabel for Letter {
    fn inv(self) -> Self {
        -self
    }
}

#[derive(Clone, Debug)]
struct FEdge<L> {
    from: usize,
    to: usize,
    label: L,
    tag: Word,
    alive: bool,
}

/// Two parallel edges with equal labels but different tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagConflict {
    pub relation: Word,
}

#[derive(Clone, Debug)]
pub struct Folder<L> {
    parent: Vec<usize>,
    adj: Vec<Vec<usize>>,
    edges: Vec<FEdge<L>>,
    base: usize,
}

/// Result of folding: vertices renumbered `0..vertex_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Folded<L> {
    pub vertex_count: usize,
    pub base: usize,
    pub edges: Vec<(usize, usize, L, Word)>,
}

impl<L: FoldLabel> Default for Folder<L> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: FoldLabel> Folder<L> {
    /// Starts with a single base vertex `0`.
    pub fn new() -> Self {
        Folder { parent: vec![0], adj: vec![vec![]], edges: vec![], base: 0 }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn add_vertex(&mut self) -> usize {
        let v = self.parent.len();
        self.parent.push(v);
        self.adj.push(vec![]);
        v
    }

    pub fn add_edge(&mut self, from: usize, to: usize, label: L, tag: Word) -> usize {
        let id = self.edges.len();
        self.edges.push(FEdge { from, to, label, tag, alive: true });
        self.adj[from].push(id);
        if to != from {
            self.adj[to].push(id);
        }
        id
    }

    /// Adds a path spelling `labels` from `from` to `to`; the tag sits on the
    /// first edge.
    pub fn add_path(&mut self, from: usize, to: usize, labels: &[L], tag: Word) {
        assert!(!labels.is_empty());
        let mut cur = from;
        let mut tag = Some(tag);
        for (i, &l) in labels.iter().enumerate() {
            let next = if i + 1 == labels.len() { to } else { self.add_vertex() };
            self.add_edge(cur, next, l, tag.take().unwrap_or_default());
            cur = next;
        }
    }

    fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = v;
        while self.parent[x] != r {
            let n = self.parent[x];
            self.parent[x] = r;
            x = n;
        }
        r
    }

    /// Outgoing half-edges at `v`: (label, edge, forward).
    fn half_edges(&mut self, v: usize) -> Vec<(L, usize, bool)> {
        let ids = std::mem::take(&mut self.adj[v]);
        let mut live = Vec::with_capacity(ids.len());
        let mut out = Vec::new();
        for id in ids {
            if !self.edges[id].alive || live.contains(&id) {
                continue;
            }
            live.push(id);
            let (f, t) = (self.find(self.edges[id].from), self.find(self.edges[id].to));
            let e = &self.edges[id];
            if f == v {
                out.push((e.label, id, true));
            }
            if t == v {
                out.push((e.label.inv(), id, false));
            }
        }
        self.adj[v] = live;
        out
    }

    fn half_tag(&self, id: usize, forward: bool) -> Word {
        if forward {
            self.edges[id].tag.clone()
        } else {
            self.edges[id].tag.inverse()
        }
    }

    fn far_end(&mut self, id: usize, forward: bool) -> usize {
        let e = &self.edges[id];
        let v = if forward { e.to } else { e.from };
        self.find(v)
    }

    /// Multiplies tags at `z` so that paths through `z` keep their reading.
    fn gauge(&mut self, z: usize, g: &Word) {
        if g.is_empty() {
            return;
        }
        let mut ids = self.adj[z].clone();
        ids.sort_unstable();
        ids.dedup();
        let ginv = g.inverse();
        for id in ids {
            if !self.edges[id].alive {
                continue;
            }
            let f = self.find(self.edges[id].from);
            let t = self.find(self.edges[id].to);
            let mut tag = self.edges[id].tag.clone();
            if f == z {
                tag = g.mul(&tag);
            }
            if t == z {
                tag = tag.mul(&ginv);
            }
            self.edges[id].tag = tag;
        }
    }

    /// Folds until no vertex has two outgoing half-edges with one label.
    pub fn fold(&mut self) -> Result<(), TagConflict> {
        let mut work: Vec<usize> = (0..self.parent.len()).rev().collect();
        while let Some(v0) = work.pop() {
            let v = self.find(v0);
            if v != v0 {
                continue;
            }
            let hs = self.half_edges(v);
            let mut seen: HashMap<L, (usize, bool)> = HashMap::new();
            let mut pair = None;
            for (l, id, fwd) in hs {
                if let Some(&(id1, fwd1)) = seen.get(&l) {
                    pair = Some(((id1, fwd1), (id, fwd)));
                    break;
                }
                seen.insert(l, (id, fwd));
            }
            let Some(((e1, d1), (e2, d2))) = pair else { continue };
            let t1 = self.half_tag(e1, d1);
            let t2 = self.half_tag(e2, d2);
            let w1 = self.far_end(e1, d1);
            let w2 = self.far_end(e2, d2);
            if w1 == w2 {
                if t1 != t2 {
                    return Err(TagConflict { relation: t1.inverse().mul(&t2) });
                }
                self.edges[e2].alive = false;
            } else {
                // never eliminate the base vertex
                let (keep, z, g) = if w2 != self.base {
                    (w1, w2, t1.inverse().mul(&t2))
                } else {
                    (w2, w1, t2.inverse().mul(&t1))
                };
                self.gauge(z, &g);
                self.parent[z] = keep;
                let moved = std::mem::take(&mut self.adj[z]);
                self.adj[keep].extend(moved);
                let dead = if z == w2 { e2 } else { e1 };
                self.edges[dead].alive = false;
                work.push(keep);
            }
            work.push(v);
        }
        Ok(())
    }

    pub fn finish(mut self) -> Folded<L> {
        let n = self.parent.len();
        let mut index = vec![usize::MAX; n];
        let mut count = 0;
        let base_root = self.find(self.base);
        index[base_root] = count;
        count += 1;
        for v in 0..n {
            let r = self.find(v);
            if index[r] == usize::MAX {
                index[r] = count;
                count += 1;
            }
        }
        let mut edges = Vec::new();
        for id in 0..self.edges.len() {
            if !self.edges[id].alive {
                continue;
            }
            let f = self.find(self.edges[id].from);
            let t = self.find(self.edges[id].to);
            let e = &self.edges[id];
            edges.push((index[f], index[t], e.label, e.tag.clone()));
        }
        Folded { vertex_count: count, base: 0, edges }
    }
}

impl<L: FoldLabel> Folded<L> {
    pub fn valence(&self, v: usize) -> usize {
        self.edges.iter().map(|e| (e.0 == v) as usize + (e.1 == v) as usize).sum()
    }

    /// Removes valence-one vertices repeatedly, never the base when `keep_base`.
    pub fn trim(&self, keep_base: bool) -> Folded<L> {
        let mut alive_e = vec![true; self.edges.len()];
        let mut alive_v = vec![true; self.vertex_count];
        loop {
            let mut val = vec![0usize; self.vertex_count];
            for (i, e) in self.edges.iter().enumerate() {
                if alive_e[i] {
                    val[e.0] += 1;
                    val[e.1] += 1;
                }
            }
            let mut changed = false;
            for v in 0..self.vertex_count {
                if !alive_v[v] || (keep_base && v == self.base) {
                    continue;
                }
                if val[v] <= 1 {
                    alive_v[v] = false;
                    changed = true;
                    for (i, e) in self.edges.iter().enumerate() {
                        if alive_e[i] && (e.0 == v || e.1 == v) {
                            alive_e[i] = false;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut index = vec![usize::MAX; self.vertex_count];
        let mut count = 0;
        for v in 0..self.vertex_count {
            if alive_v[v] {
                index[v] = count;
                count += 1;
            }
        }
        let base = if alive_v[self.base] { index[self.base] } else { 0 };
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| alive_e[*i])
            .map(|(_, e)| (index[e.0], index[e.1], e.2, e.3.clone()))
            .collect();
        Folded { vertex_count: count, base, edges }
    }

    pub fn rank(&self) -> isize {
        self.edges.len() as isize - self.vertex_count as isize + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Basis;

    fn w(s: &str) -> Word {
        Word::parse(&Basis::new(3).unwrap(), s).unwrap()
    }

    fn fold_words(ws: &[&str]) -> Folded<Letter> {
        let mut f = Folder::new();
        for (i, s) in ws.iter().enumerate() {
            let word = w(s);
            f.add_path(0, 0, word.letters(), Word::letter(i as Letter + 1));
        }
        f.fold().unwrap();
        f.finish()
    }

    #[test]
    fn folds_to_rose() {
        let g = fold_words(&["ab", "b"]);
        assert_eq!(g.vertex_count, 1);
        assert_eq!(g.edges.len(), 2);
        // the a-loop reads x1 x2^{-1}
        let a = g.edges.iter().find(|e| e.2.abs() == 1).unwrap();
        let tag = if a.2 > 0 { a.3.clone() } else { a.3.inverse() };
        assert_eq!(tag.to_text(), "aB");
    }

    #[test]
    fn index_two_subgroup() {
        let g = fold_words(&["aa", "ab", "ba"]).trim(false);
        assert_eq!(g.rank(), 3);
        assert_eq!(g.vertex_count, 2);
    }

    #[test]
    fn relation_detected() {
        let mut f = Folder::new();
        f.add_path(0, 0, w("ab").letters(), w("a"));
        f.add_path(0, 0, w("ab").letters(), w("b"));
        assert!(f.fold().is_err());
    }
}
