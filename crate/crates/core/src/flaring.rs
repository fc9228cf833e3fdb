//! Subgroups of `Out(F_r)` given by generators: word metric balls,
//! conjugacy flaring census, growth and the finite-order helpers.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::aut::{Automorphism, IntMatrix};
use crate::error::{Error, Result};
use crate::fold::FoldingPath;
use crate::profile::{illegal_segment_threshold, loop_profile, max_illegal_turns};
use crate::rational::{fmt_q, LogScalar, Q};
use crate::word::{enumerate_cyclic_words, Basis, CyclicWord, Letter, Word};

/// A symmetric generating set in `Out(F_r)`.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    pub basis: Basis,
    pub generators: Vec<Automorphism>,
    pub names: Vec<String>,
    /// Index of each generator's inverse in the list.
    pub inverse: Vec<usize>,
}

impl SubgroupSpec {
    /// Closes under inversion, identifying Out-equal generators.
    pub fn new(basis: Basis, gens: Vec<(String, Automorphism)>) -> Result<Self> {
        let mut generators: Vec<Automorphism> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let id = Automorphism::identity(basis);
        let find = |list: &[Automorphism], x: &Automorphism| -> Result<Option<usize>> {
            for (i, y) in list.iter().enumerate() {
                if y.out_equal(x)?.is_some() {
                    return Ok(Some(i));
                }
            }
            Ok(None)
        };
        for (name, g) in gens {
            if g.basis() != basis {
                return Err(Error::RankMismatch(basis.rank, g.rank()));
            }
            if id.out_equal(&g)?.is_some() {
                return Err(Error::TrivialGenerator(name));
            }
            if find(&generators, &g)?.is_none() {
                generators.push(g.clone());
                names.push(name.clone());
            }
            let inv = g.invert()?;
            if find(&generators, &inv)?.is_none() {
                generators.push(inv);
                names.push(format!("{name}^-1"));
            }
        }
        let mut inverse = Vec::with_capacity(generators.len());
        for g in &generators {
            inverse.push(find(&generators, &g.invert()?)?.expect("closed under inversion"));
        }
        Ok(SubgroupSpec { basis, generators, names, inverse })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Product of generators along a word of indices.
    pub fn evaluate(&self, word: &[usize]) -> Automorphism {
        word.iter().fold(Automorphism::identity(self.basis), |acc, &i| acc.compose(&self.generators[i]))
    }

    pub fn word_text(&self, word: &[usize]) -> String {
        if word.is_empty() {
            return "1".into();
        }
        word.iter().map(|&i| self.names[i].as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// Classes whose images identify an outer class up to rare collisions.
fn out_key(basis: Basis, phi: &Automorphism) -> Vec<CyclicWord> {
    let r = basis.rank;
    let mut tests: Vec<Word> = (1..=r as Letter).map(Word::letter).collect();
    for i in 1..=r as Letter {
        for j in i + 1..=r as Letter {
            tests.push(Word::from_letters(&[i, j]));
            tests.push(Word::from_letters(&[i, -j]));
        }
    }
    tests.iter().map(|w| CyclicWord::new(&phi.apply(w)).expect("nontrivial")).collect()
}

#[derive(Clone, Debug)]
pub struct BallNode {
    pub rep: Automorphism,
    /// A geodesic word in generator indices.
    pub word: Vec<usize>,
    pub dist: usize,
}

/// Breadth-first ball in the Cayley graph of a subgroup, nodes up to
/// outer equivalence.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    pub radius: usize,
    pub nodes: Vec<BallNode>,
    /// `(from, generator, to)` for every generator step inside the ball.
    pub edges: Vec<(usize, usize, usize)>,
    buckets: HashMap<Vec<CyclicWord>, Vec<usize>>,
    basis: Basis,
}

impl CayleyBall {
    pub fn locate(&self, phi: &Automorphism) -> Result<Option<usize>> {
        let Some(ids) = self.buckets.get(&out_key(self.basis, phi)) else { return Ok(None) };
        for &i in ids {
            if self.nodes[i].rep.out_equal(phi)?.is_some() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sphere(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(move |(_, n)| n.dist == d).map(|(i, _)| i)
    }
}

pub const DEFAULT_BALL_CAP: usize = 50_000;

pub fn cayley_ball(spec: &SubgroupSpec, radius: usize, max_nodes: usize) -> Result<CayleyBall> {
    let id = Automorphism::identity(spec.basis);
    let mut ball = CayleyBall {
        radius,
        nodes: vec![BallNode { rep: id.clone(), word: vec![], dist: 0 }],
        edges: vec![],
        buckets: HashMap::new(),
        basis: spec.basis,
    };
    ball.buckets.insert(out_key(spec.basis, &id), vec![0]);
    let mut frontier = vec![0usize];
    for d in 1..=radius {
        let mut next = Vec::new();
        for &v in &frontier {
            for (s, g) in spec.generators.iter().enumerate() {
                let phi = ball.nodes[v].rep.compose(g);
                let to = match ball.locate(&phi)? {
                    Some(i) => i,
                    None => {
                        if ball.nodes.len() >= max_nodes {
                            return Err(Error::BudgetExceeded(format!("Cayley ball exceeds {max_nodes} nodes")));
                        }
                        let mut word = ball.nodes[v].word.clone();
                        word.push(s);
                        let i = ball.nodes.len();
                        ball.buckets.entry(out_key(spec.basis, &phi)).or_default().push(i);
                        ball.nodes.push(BallNode { rep: phi, word, dist: d });
                        next.push(i);
                        i
                    }
                };
                ball.edges.push((v, s, to));
            }
        }
        frontier = next;
    }
    // steps out of the outermost sphere
    for &v in &frontier {
        for (s, g) in spec.generators.iter().enumerate() {
            if let Some(to) = ball.locate(&ball.nodes[v].rep.compose(g))? {
                ball.edges.push((v, s, to));
            }
        }
    }
    Ok(ball)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct FlaringWitness {
    pub g1: String,
    pub g2: String,
    pub g1_word: Vec<usize>,
    pub g2_word: Vec<usize>,
    pub alpha: CyclicWord,
    pub alpha_length: usize,
    pub g1_alpha_length: usize,
    pub g2_inverse_alpha_length: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    pub max_illegal_turns: usize,
    pub illegal_segment_threshold: usize,
    pub torsion_bound: String,
}

impl Constants {
    pub fn for_rank(r: usize) -> Self {
        Constants {
            max_illegal_turns: max_illegal_turns(r),
            illegal_segment_threshold: illegal_segment_threshold(r),
            torsion_bound: torsion_bound(r).to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlaringReport {
    pub lambda: String,
    pub m: usize,
    pub radius: usize,
    pub alpha_len: usize,
    pub ball_size: usize,
    pub pairs_checked: usize,
    pub classes_checked: usize,
    pub verdict: String,
    pub witness: Option<FlaringWitness>,
    /// Least `M` with no violation among the sampled pairs.
    pub empirical_m: Option<usize>,
    pub constants: Constants,
}

impl FlaringReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

pub fn conjugacy_length(w: &Word) -> usize {
    w.cyclic_reduction().len()
}

/// Re-derives the three lengths of a stored witness.
pub fn verify_witness(spec: &SubgroupSpec, lambda: &Q, w: &FlaringWitness) -> Result<bool> {
    let g1 = spec.evaluate(&w.g1_word);
    let g2inv = spec.evaluate(&w.g2_word).invert()?;
    let a = w.alpha.word();
    let l = Q::from_integer(conjugacy_length(&a).into());
    let l1 = conjugacy_length(&g1.apply(&a));
    let l2 = conjugacy_length(&g2inv.apply(&a));
    Ok(l1 == w.g1_alpha_length
        && l2 == w.g2_inverse_alpha_length
        && lambda * l > Q::from_integer(l1.max(l2).into()))
}

/// Classes tested by default: all classes up to `alpha_len`.
pub fn default_classes(basis: &Basis, alpha_len: usize) -> Result<Vec<CyclicWord>> {
    let mut out = enumerate_cyclic_words(basis, alpha_len, Some(2_000_000))?;
    for c in ["ab", "aB"] {
        let w = CyclicWord::parse(&Basis::new(2).unwrap(), c)?;
        if !out.contains(&w) {
            out.push(w);
        }
    }
    Ok(out)
}

pub fn conjugacy_flaring_check(
    spec: &SubgroupSpec,
    lambda: &Q,
    m: usize,
    radius: usize,
    alpha_len: usize,
) -> Result<FlaringReport> {
    if *lambda <= Q::one() || m == 0 {
        return Err(Error::Parse("need lambda > 1 and M >= 1".into()));
    }
    let ball = cayley_ball(spec, radius, DEFAULT_BALL_CAP)?;
    let classes = default_classes(&spec.basis, alpha_len)?;
    let inverses: Vec<Automorphism> = ball.nodes.iter().map(|n| n.rep.invert()).collect::<Result<_>>()?;
    let mut pairs = 0;
    let mut witness: Option<FlaringWitness> = None;
    let mut worst_violation: Option<usize> = None;
    for a in &ball.nodes {
        if a.dist < 1 {
            continue;
        }
        for (j, b) in ball.nodes.iter().enumerate() {
            if b.dist < 1 || a.dist + b.dist > radius {
                continue;
            }
            let prod = a.rep.compose(&b.rep);
            let Some(k) = ball.locate(&prod)? else { continue };
            if ball.nodes[k].dist != a.dist + b.dist {
                continue;
            }
            let lo = a.dist.min(b.dist);
            let counts = lo >= m;
            // violations below M only matter for the empirical threshold
            if !counts && worst_violation.map_or(false, |w| w >= lo) {
                continue;
            }
            if counts {
                pairs += 1;
            }
            for c in &classes {
                let w = c.word();
                let l = Q::from_integer(c.len().into());
                let l1 = conjugacy_length(&a.rep.apply(&w));
                let l2 = conjugacy_length(&inverses[j].apply(&w));
                if lambda * l > Q::from_integer(l1.max(l2).into()) {
                    worst_violation = Some(worst_violation.map_or(lo, |x| x.max(lo)));
                    if counts && witness.is_none() {
                        witness = Some(FlaringWitness {
                            g1: spec.word_text(&a.word),
                            g2: spec.word_text(&b.word),
                            g1_word: a.word.clone(),
                            g2_word: b.word.clone(),
                            alpha: c.clone(),
                            alpha_length: c.len(),
                            g1_alpha_length: l1,
                            g2_inverse_alpha_length: l2,
                        });
                    }
                    break;
                }
            }
        }
    }
    let max_lo = radius / 2;
    let empirical_m = match worst_violation {
        None => Some(1),
        Some(w) if w < max_lo => Some(w + 1),
        Some(_) => None,
    };
    Ok(FlaringReport {
        lambda: fmt_q(lambda),
        m,
        radius,
        alpha_len,
        ball_size: ball.len(),
        pairs_checked: pairs,
        classes_checked: classes.len(),
        verdict: if witness.is_some() { "counterexample".into() } else { "holds-on-sample".into() },
        witness,
        empirical_m,
        constants: Constants::for_rank(spec.basis.rank),
    })
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ScreenVerdict {
    pub len_cap: usize,
    pub pow_cap: usize,
    /// A class with `φ^k(α) = α`, and the least such `k`.
    pub periodic: Option<(CyclicWord, usize)>,
    /// `φ` is trivial in Out, so every class is periodic.
    pub degenerate: bool,
    pub certifying: bool,
    pub verdict: String,
}

pub const NON_CERTIFYING: &str = "NON-CERTIFYING heuristic screen";

pub fn screen_atoroidal(phi: &Automorphism, len_cap: usize, pow_cap: usize) -> Result<ScreenVerdict> {
    let basis = phi.basis();
    let degenerate = Automorphism::identity(basis).out_equal(phi)?.is_some();
    let mut periodic = None;
    'outer: for c in enumerate_cyclic_words(&basis, len_cap, None)? {
        let mut x = c.clone();
        for k in 1..=pow_cap {
            x = phi.apply_cyclic(&x);
            if x == c {
                periodic = Some((c, k));
                break 'outer;
            }
        }
    }
    let verdict = match (&periodic, degenerate) {
        (_, true) => "degenerate: trivial in Out".to_string(),
        (Some((c, k)), _) => format!("periodic class {} with period {k}", c.to_text()),
        (None, _) => "no-short-periodic-class".to_string(),
    };
    Ok(ScreenVerdict { len_cap, pow_cap, periodic, degenerate, certifying: false, verdict })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub lengths: Vec<usize>,
    pub min_stretch: f64,
    pub max_stretch: f64,
}

pub const GROWTH_LENGTH_CAP: usize = 20_000_000;

pub fn growth_fit(phi: &Automorphism, alpha: &CyclicWord, n_max: usize) -> Result<GrowthFit> {
    if alpha.is_empty() {
        return Err(Error::TrivialClass);
    }
    if n_max < 4 {
        return Err(Error::Parse("n_max must be at least 4".into()));
    }
    let mut lengths = Vec::with_capacity(n_max + 1);
    lengths.push(alpha.len());
    let mut x = alpha.clone();
    for _ in 1..=n_max {
        x = phi.apply_cyclic(&x);
        if x.len() > GROWTH_LENGTH_CAP {
            return Err(Error::BudgetExceeded(format!("image longer than {GROWTH_LENGTH_CAP}")));
        }
        lengths.push(x.len());
    }
    let pts: Vec<(f64, f64)> = (1..=n_max).map(|n| (n as f64, (lengths[n] as f64).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let stretches: Vec<f64> = lengths.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    Ok(GrowthFit {
        slope: sxy / sxx,
        min_stretch: stretches.iter().cloned().fold(f64::INFINITY, f64::min),
        max_stretch: stretches.iter().cloned().fold(0.0, f64::max),
        lengths,
    })
}

/// `|GL_r(Z/3Z)|`.
pub fn torsion_bound(r: usize) -> BigInt {
    let three = BigInt::from(3);
    let full = three.pow(r as u32);
    (0..r).fold(BigInt::one(), |acc, k| acc * (&full - three.pow(k as u32)))
}

/// Least `n ≥ 1` with `φ^n` trivial in Out.
pub fn out_order(phi: &Automorphism, cap: usize) -> Result<usize> {
    let id = Automorphism::identity(phi.basis());
    let mut x = phi.clone();
    for n in 1..=cap {
        if id.out_equal(&x)?.is_some() {
            return Ok(n);
        }
        x = x.compose(phi);
    }
    Err(Error::NotFiniteOrder(cap))
}

pub const ORDER_CAP: usize = 64;

/// No element of the generated matrix group equals `−I`.
pub fn projectively_good(h: &[Automorphism]) -> Result<bool> {
    let Some(first) = h.first() else { return Ok(true) };
    let r = first.rank();
    let mut gens = Vec::new();
    for x in h {
        out_order(x, ORDER_CAP)?;
        let m = x.abelianize();
        if !m.is_unimodular() {
            return Err(Error::NonUnimodular);
        }
        gens.push(m);
    }
    let minus = IntMatrix::identity(r).neg();
    let mut seen: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    let mut queue = vec![IntMatrix::identity(r)];
    seen.insert(IntMatrix::identity(r).rows());
    while let Some(m) = queue.pop() {
        if m == minus {
            return Ok(false);
        }
        for g in &gens {
            let p = m.mul(g);
            if seen.insert(p.rows()) {
                if seen.len() > 100_000 {
                    return Err(Error::BudgetExceeded("matrix group closure".into()));
                }
                queue.push(p);
            }
        }
    }
    Ok(true)
}

/// Generators `{h^{±1}} ∪ {f^{±N}}` for a ping-pong experiment.
pub fn pingpong_spec(h: &[Automorphism], f: &Automorphism, n: usize) -> Result<SubgroupSpec> {
    let basis = f.basis();
    let mut gens = Vec::new();
    for (i, x) in h.iter().enumerate() {
        out_order(x, ORDER_CAP)?;
        if Automorphism::identity(basis).out_equal(x)?.is_some() {
            continue;
        }
        gens.push((format!("h{i}"), x.clone()));
    }
    gens.push((format!("f^{n}"), f.pow(n as i64)?));
    SubgroupSpec::new(basis, gens)
}

/// Ball elements fixing the class of `alpha`.
pub fn stabilizer_census(ball: &CayleyBall, alpha: &CyclicWord) -> usize {
    ball.nodes.iter().filter(|n| n.rep.apply_cyclic(alpha) == *alpha).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct FlareRow {
    pub alpha: CyclicWord,
    pub event: usize,
    pub before: usize,
    pub after: usize,
    #[serde(with = "crate::rational::q_string")]
    pub ratio: Q,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlareTable {
    pub gap: LogScalar,
    pub rows: Vec<FlareRow>,
    #[serde(with = "crate::rational::q_string")]
    pub min_ratio: Q,
    /// Per class, the longest time span (as a ratio) where its length
    /// stays at most the threshold.
    pub short_spans: Vec<(CyclicWord, LogScalar)>,
}

fn nearest_event(path: &FoldingPath, target: f64) -> usize {
    let mut best = 0;
    let mut gap = f64::INFINITY;
    for (i, e) in path.events.iter().enumerate() {
        let d = (e.time.log() - target).abs();
        if d < gap {
            gap = d;
            best = i;
        }
    }
    best
}

pub fn folding_flare_probe(path: &FoldingPath, classes: &[CyclicWord], gap: &LogScalar, short: &Q) -> Result<FlareTable> {
    let total = path.total().log();
    let d = gap.log();
    if total < 2.0 * d {
        return Err(Error::SpanTooShort(format!("{d:.6}")));
    }
    let mut rows = Vec::new();
    let mut spans = Vec::new();
    for c in classes {
        let prof = loop_profile(c, path)?;
        for (i, ev) in path.events.iter().enumerate() {
            let t = ev.time.log();
            if t - d < -1e-12 || t + d > total + 1e-12 {
                continue;
            }
            let b = nearest_event(path, t - d);
            let a = nearest_event(path, t + d);
            let m = if prof[b].length > prof[a].length { &prof[b].length } else { &prof[a].length };
            rows.push(FlareRow { alpha: c.clone(), event: i, before: b, after: a, ratio: m / &prof[i].length });
        }
        let mut best = LogScalar::zero();
        let mut start: Option<usize> = None;
        for (i, rec) in prof.iter().enumerate() {
            if rec.length <= *short {
                let s = *start.get_or_insert(i);
                let span = path.span(s, i);
                if span > best {
                    best = span;
                }
            } else {
                start = None;
            }
        }
        spans.push((c.clone(), best));
    }
    let min_ratio = rows.iter().map(|r| r.ratio.clone()).min().unwrap_or_else(Q::zero);
    Ok(FlareTable { gap: gap.clone(), rows, min_ratio, short_spans: spans })
}
