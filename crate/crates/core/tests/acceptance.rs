//! Acceptance criteria, one line each. Runs as a plain binary so the lines
//! show up in the test log.

use std::collections::{HashMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use outspace::bundle::{bundle_ball, fiber_distance, mj_sardar_sampler, prop81_constants, BundleGenerator, BundleSpec, SamplerConfig};
use outspace::factors::{conjugate_into, project_factors, stallings_graph, FactorClass};
use outspace::flaring::{conjugacy_flaring_check, growth_fit, verify_witness, SubgroupSpec};
use outspace::fold::{standard_geodesic, FoldingPath, StandardGeodesic, StepPolicy};
use outspace::graph::HalfEdge;
use outspace::lipschitz::{distance_ratio, lipschitz_distance};
use outspace::marked::MarkedGraph;
use outspace::profile::{illegal_turns, track_loop};
use outspace::random::{random_automorphism, random_marked_graph};
use outspace::rational::{ln_q, q, to_f64};
use outspace::word::{for_each_necklace, letter_key, random_cyclic_word, random_word};
use outspace::{Automorphism, Basis, CyclicWord, Letter, Word, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CANDIDATE_PAIRS_RANK2: usize = 50;
const CANDIDATE_PAIRS_RANK3: usize = 20;
const CANDIDATE_WORD_LEN: usize = 10;
const CANDIDATE_TIME_LIMIT_S: f64 = 120.0;
const PATHS_RANK2: usize = 14;
const PATHS_RANK3: usize = 8;
const SWEEP_CLASSES: usize = 100;
const SWEEP_CLASS_LEN: usize = 12;
const TARGETS_PER_PATH: usize = 5;
const DERIVATIVE_REL_TOL: f64 = 0.10;
const DERIVATIVE_MAX_STEP: f64 = 1e-3;
const DERIVATIVE_MIN_FRACTION: f64 = 0.90;
const RESCALING_MIN_NONTRIVIAL: usize = 3;
const FIBER_TIME_LIMIT_S: f64 = 60.0;
const FIBER_BALL_RADIUS: usize = 4;
const BUNDLE_LAMBDA_TOL: f64 = 1e-9;
const GROWTH_REL_TOL: f64 = 0.05;
const STALLINGS_PAIRS: usize = 200;
const CONJUGATOR_CAP: usize = 6;
const EQUIVARIANCE_PAIRS: usize = 50;
const OUT_TRIPLES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn b2() -> Basis {
    Basis::new(2).unwrap()
}

/// Cyclically tightened loop lengths from the marking alone, in integer
/// units of a common denominator.
struct LengthOracle {
    paths: Vec<Vec<HalfEdge>>,
    units: Vec<i64>,
    denom: BigInt,
}

impl LengthOracle {
    fn new(g: &MarkedGraph) -> Self {
        let r = g.rank();
        let mut paths = vec![Vec::new(); 2 * r];
        for i in 0..r {
            let fwd = g.marking(i).to_vec();
            let back: Vec<HalfEdge> = fwd.iter().rev().map(|h| h.rev()).collect();
            let x = i as Letter + 1;
            paths[letter_key(x) as usize] = fwd;
            paths[letter_key(-x) as usize] = back;
        }
        let lens = g.graph().lengths();
        let denom = lens.iter().fold(BigInt::one(), |acc, l| acc.lcm(l.denom()));
        let units = lens.iter().map(|l| (l.numer() * (&denom / l.denom())).to_i64().unwrap()).collect();
        LengthOracle { paths, units, denom }
    }

    fn eval(&self, letters: &[Letter], stack: &mut Vec<HalfEdge>) -> i64 {
        stack.clear();
        for &l in letters {
            for &h in &self.paths[letter_key(l) as usize] {
                if stack.last() == Some(&h.rev()) {
                    stack.pop();
                } else {
                    stack.push(h);
                }
            }
        }
        let (mut i, mut j) = (0, stack.len());
        while j - i >= 2 && stack[i] == stack[j - 1].rev() {
            i += 1;
            j -= 1;
        }
        stack[i..j].iter().map(|h| self.units[h.edge()]).sum()
    }
}

fn criterion_candidates() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (r, count) in [(2, CANDIDATE_PAIRS_RANK2), (3, CANDIDATE_PAIRS_RANK3)] {
        let basis = Basis::new(r).unwrap();
        let pairs: Vec<(MarkedGraph, MarkedGraph)> = (0..count)
            .map(|_| (random_marked_graph(basis, 1, &mut rng), random_marked_graph(basis, 2, &mut rng)))
            .collect();
        let oracles: Vec<(LengthOracle, LengthOracle)> =
            pairs.iter().map(|(g, h)| (LengthOracle::new(g), LengthOracle::new(h))).collect();
        // best ratio as (H units, G units)
        let mut best: Vec<(i64, i64)> = vec![(0, 1); count];
        let mut stack = Vec::new();
        for n in 1..=CANDIDATE_WORD_LEN {
            for_each_necklace(r, n, &mut |letters| {
                for (k, (og, oh)) in oracles.iter().enumerate() {
                    let lg = og.eval(letters, &mut stack);
                    let lh = oh.eval(letters, &mut stack);
                    if (lh as i128) * (best[k].1 as i128) > (best[k].0 as i128) * (lg as i128) {
                        best[k] = (lh, lg);
                    }
                }
            });
        }
        for (k, (g, h)) in pairs.iter().enumerate() {
            let (og, oh) = &oracles[k];
            let oracle = Q::new(BigInt::from(best[k].0) * &og.denom, BigInt::from(best[k].1) * &oh.denom);
            let got = lipschitz_distance(g, h).unwrap().ratio.ratio;
            if got != oracle {
                mismatches.push(format!("rank {r} pair {k}: candidates {got} vs words {oracle}"));
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && secs < CANDIDATE_TIME_LIMIT_S;
    outcome(
        pass,
        format!(
            "{checked} pairs, words to length {CANDIDATE_WORD_LEN}, {} mismatches, {secs:.1}s (limit {CANDIDATE_TIME_LIMIT_S}s){}",
            mismatches.len(),
            mismatches.first().map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
    )
}

struct TestPath {
    rank: usize,
    geodesic: StandardGeodesic,
}

fn test_paths() -> &'static [TestPath] {
    static PATHS: OnceLock<Vec<TestPath>> = OnceLock::new();
    PATHS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut out = Vec::new();
        for (r, count) in [(2, PATHS_RANK2), (3, PATHS_RANK3)] {
            let basis = Basis::new(r).unwrap();
            for _ in 0..count {
                let g = random_marked_graph(basis, 1, &mut rng);
                let h = random_marked_graph(basis, 3, &mut rng);
                let geodesic = standard_geodesic(&g, &h, &StepPolicy::default()).unwrap();
                out.push(TestPath { rank: r, geodesic });
            }
        }
        out
    })
}

fn folding(p: &TestPath) -> &FoldingPath {
    &p.geodesic.folding
}

fn criterion_geodesy() -> Outcome {
    let mut pairs = 0;
    let mut bad = 0;
    for p in test_paths() {
        let f = folding(p);
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                pairs += 1;
                if distance_ratio(f.graph(i), f.graph(j)).unwrap() != f.span(i, j).ratio {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{} paths, {pairs} event pairs, {bad} violations", test_paths().len()))
}

fn sweep_classes(rank: usize, rng: &mut ChaCha8Rng) -> Vec<CyclicWord> {
    (0..SWEEP_CLASSES).map(|_| random_cyclic_word(rank, rng.gen_range(1..=SWEEP_CLASS_LEN), rng)).collect()
}

fn criterion_quasiconvexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut checks, mut bad) = (0usize, 0usize);
    for p in test_paths() {
        let f = folding(p);
        let six_r = Q::from_integer((6 * p.rank as i64).into());
        for alpha in sweep_classes(p.rank, &mut rng) {
            let l0 = f.start().loop_length(&alpha).unwrap();
            let ll = f.end().loop_length(&alpha).unwrap();
            let bound = &six_r * l0.max(ll);
            for i in 0..f.len() {
                checks += 1;
                if f.graph(i).loop_length(&alpha).unwrap() > bound {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{checks} (class, event) checks, {bad} violations"))
}

fn criterion_legality_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut checks, mut bad) = (0usize, 0usize);
    for p in test_paths() {
        let f = folding(p);
        let g0 = f.start();
        for alpha in sweep_classes(p.rank, &mut rng) {
            let lp = g0.loop_path(alpha.letters());
            let k0 = illegal_turns(g0.graph(), &f.events[0].train_track, &lp).len();
            let bound = Q::from_integer((2 * k0 as i64).into()).max(f.end().loop_length(&alpha).unwrap());
            for i in 0..f.len() {
                checks += 1;
                if f.graph(i).loop_length(&alpha).unwrap() > bound {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{checks} (class, event) checks, {bad} violations"))
}

fn criterion_outgoing_balls() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut checks, mut bad) = (0usize, 0usize);
    for p in test_paths() {
        let f = folding(p);
        let basis = Basis::new(p.rank).unwrap();
        let six_r = Q::from_integer((6 * p.rank as i64).into());
        for _ in 0..TARGETS_PER_PATH {
            let h = random_marked_graph(basis, rng.gen_range(0..=3), &mut rng);
            let radius = distance_ratio(&h, f.start()).unwrap().max(distance_ratio(&h, f.end()).unwrap());
            let bound = &six_r * &radius;
            for i in 0..f.len() {
                checks += 1;
                if distance_ratio(&h, f.graph(i)).unwrap() > bound {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{checks} (target, event) checks with A = log(6r), {bad} violations"))
}

fn criterion_derivative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut samples, mut good) = (0usize, 0usize);
    let mut worst = 0f64;
    for p in test_paths() {
        let f = folding(p);
        let classes: Vec<CyclicWord> = (0..4).map(|_| random_cyclic_word(p.rank, rng.gen_range(2..=8), &mut rng)).collect();
        let tracked: Vec<_> = classes.iter().map(|c| track_loop(c, f).unwrap()).collect();
        for i in 0..f.len() {
            let Some(step) = f.step_after(i).cloned() else { continue };
            let m = f.events[i].illegality();
            let frac = q(rng.gen_range(1..=7), 8);
            let d1 = &step * &frac;
            let mut eps = &step / Q::from_integer(4000.into());
            let (r1, g1) = f.interpolate(i, &d1).unwrap();
            let (r2, g2) = loop {
                let (r2, g2) = f.interpolate(i, &(&d1 + &eps)).unwrap();
                if ln_q(&(&r2.ratio / &r1.ratio)) <= DERIVATIVE_MAX_STEP {
                    break (r2, g2);
                }
                eps /= Q::from_integer(2.into());
            };
            let h = ln_q(&(&r2.ratio / &r1.ratio));
            for (c, t) in classes.iter().zip(&tracked) {
                let k = t.illegal[i].len();
                let l1 = g1.loop_length(c).unwrap();
                let l2 = g2.loop_length(c).unwrap();
                let fd = to_f64(&(&l2 - &l1)) / h;
                let target = to_f64(&l1) - 2.0 * k as f64 / m as f64;
                let err = (fd - target).abs();
                samples += 1;
                let ok = if target == 0.0 { err <= 1e-9 } else { err <= DERIVATIVE_REL_TOL * target.abs() };
                if ok {
                    good += 1;
                }
                if target != 0.0 {
                    worst = worst.max(err / target.abs());
                }
            }
        }
    }
    let fraction = good as f64 / samples.max(1) as f64;
    outcome(
        samples > 0 && fraction >= DERIVATIVE_MIN_FRACTION,
        format!(
            "{good}/{samples} interior samples within {:.0}% (need {:.0}%), worst relative error {worst:.2e}",
            DERIVATIVE_REL_TOL * 100.0,
            DERIVATIVE_MIN_FRACTION * 100.0
        ),
    )
}

fn criterion_rescaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut checked, mut nontrivial, mut bad) = (0usize, 0usize, 0usize);
    let mut geodesics: Vec<&StandardGeodesic> = test_paths().iter().map(|p| &p.geodesic).collect();
    let mut extra = Vec::new();
    for r in [2, 3] {
        let basis = Basis::new(r).unwrap();
        for _ in 0..20 {
            let g = random_marked_graph(basis, 0, &mut rng);
            let h = random_marked_graph(basis, 2, &mut rng);
            extra.push(standard_geodesic(&g, &h, &StepPolicy::default()).unwrap());
        }
    }
    geodesics.extend(extra.iter());
    for sg in geodesics {
        let start = &sg.rescaling.start;
        let eps = start.injectivity_radius();
        checked += 1;
        if sg.has_rescaling() {
            nontrivial += 1;
        }
        if sg.rescaling.ratio > Q::from_integer(2.into()) / eps {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && nontrivial >= RESCALING_MIN_NONTRIVIAL,
        format!("{checked} geodesics, {nontrivial} with a rescaling segment, {bad} exceed log(2/eps)"),
    )
}

fn fixture_groups() -> Vec<(&'static str, SubgroupSpec)> {
    let b = b2();
    let aut = |x: &str, y: &str| Automorphism::from_texts(b, &[x, y]).unwrap();
    vec![
        (
            "<(a,ba),(ab,b)>",
            SubgroupSpec::new(b, vec![("s".into(), aut("a", "ba")), ("t".into(), aut("ab", "b"))]).unwrap(),
        ),
        (
            "<(ab,a),(aB,b)>",
            SubgroupSpec::new(b, vec![("u".into(), aut("ab", "a")), ("v".into(), aut("aB", "b"))]).unwrap(),
        ),
    ]
}

/// Distances from `src` inside the fiber subgraph of the ball.
fn fiber_bfs(adj: &[Vec<usize>], src: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::from([(src, 0)]);
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &w in &adj[v] {
            if !dist.contains_key(&w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Breadth-first search in the whole coset by right multiplication with
/// inner generators, grown from both ends and compared exactly.
fn coset_bfs(from: &Automorphism, to: &Automorphism, inner: &[Automorphism], cap: usize) -> Option<usize> {
    let key = |x: &Automorphism| x.images().to_vec();
    let mut sides = [HashMap::from([(key(from), 0usize)]), HashMap::from([(key(to), 0usize)])];
    let mut frontiers = [vec![from.clone()], vec![to.clone()]];
    if sides[0].contains_key(&key(to)) {
        return Some(0);
    }
    for step in 0..cap {
        let s = step % 2;
        let depth = step / 2 + 1;
        let mut next = Vec::new();
        let mut best: Option<usize> = None;
        for x in &frontiers[s] {
            for g in inner {
                let y = x.compose(g);
                let k = key(&y);
                if sides[s].contains_key(&k) {
                    continue;
                }
                if let Some(&d) = sides[1 - s].get(&k) {
                    best = Some(best.map_or(depth + d, |b| b.min(depth + d)));
                }
                sides[s].insert(k, depth);
                next.push(y);
            }
        }
        if best.is_some() {
            return best;
        }
        frontiers[s] = next;
    }
    None
}

fn criterion_fiber_metric() -> Outcome {
    let mut lib_secs = 0f64;
    let (mut pairs, mut in_ball, mut coset, mut bad) = (0usize, 0usize, 0usize, 0usize);
    let mut sizes = Vec::new();
    for (_, gamma) in fixture_groups() {
        let t = Instant::now();
        let spec = BundleSpec::new(gamma, FIBER_BALL_RADIUS).unwrap();
        let ball = bundle_ball(&spec, FIBER_BALL_RADIUS, 500_000).unwrap();
        lib_secs += t.elapsed().as_secs_f64();
        sizes.push(ball.len());
        let gens = spec.generators();
        let inner: Vec<Automorphism> = gens
            .iter()
            .filter(|g| matches!(g, BundleGenerator::Inner(_)))
            .map(|&g| spec.element(g))
            .collect();
        let mut adj = vec![Vec::new(); ball.len()];
        for &(a, s, b) in &ball.edges {
            if matches!(gens[s], BundleGenerator::Inner(_)) {
                adj[a].push(b);
            }
        }
        let mut fibers: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..ball.len() {
            fibers.entry(ball.points[i].base).or_default().push(i);
        }
        for members in fibers.values() {
            for &u in members {
                let dist = fiber_bfs(&adj, u);
                for &v in members {
                    pairs += 1;
                    let oracle = match dist.get(&v) {
                        Some(&d) => {
                            in_ball += 1;
                            Some(d)
                        }
                        None => {
                            coset += 1;
                            coset_bfs(&ball.elements[u], &ball.elements[v], &inner, 4 * FIBER_BALL_RADIUS + 4)
                        }
                    };
                    let t = Instant::now();
                    let got = fiber_distance(&ball.points[u], &ball.points[v]).unwrap();
                    lib_secs += t.elapsed().as_secs_f64();
                    if oracle != Some(got) {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(
        bad == 0 && lib_secs < FIBER_TIME_LIMIT_S,
        format!(
            "balls of {sizes:?} elements, {pairs} fiber pairs ({in_ball} joined inside the ball, {coset} through the coset), {bad} disagreements, library {lib_secs:.1}s (limit {FIBER_TIME_LIMIT_S}s)"
        ),
    )
}

fn criterion_negative_fixture() -> Outcome {
    let b = b2();
    let phi = Automorphism::from_texts(b, &["a", "ba"]).unwrap();
    let spec = SubgroupSpec::new(b, vec![("phi".into(), phi)]).unwrap();
    let mut failures = Vec::new();
    let mut runs = 0;
    for lambda in [q(3, 2), q(2, 1), q(3, 1)] {
        for m in 1..=6 {
            runs += 1;
            let rep = conjugacy_flaring_check(&spec, &lambda, m, 2 * m, 3).unwrap();
            let ok = rep.verdict == "counterexample"
                && rep.witness.as_ref().is_some_and(|w| w.alpha.to_text() == "a" && verify_witness(&spec, &lambda, w).unwrap());
            if !ok {
                failures.push(format!("lambda {lambda} M {m}: {}", rep.verdict));
            }
        }
    }
    let bspec = BundleSpec::new(spec, 8).unwrap();
    let cfg = SamplerConfig {
        k: 1,
        n: 4,
        m: 1,
        samples: 40,
        seed: 9,
        lambda_target: q(1, 1),
        central: vec![Word::parse(&b, "a").unwrap()],
    };
    let rep = mj_sardar_sampler(&bspec, &cfg).unwrap();
    let lam = to_f64(&rep.min_lambda);
    let sampler_ok = lam <= 1.0 + BUNDLE_LAMBDA_TOL && !rep.witnesses.is_empty();
    outcome(
        failures.is_empty() && sampler_ok,
        format!(
            "{}/{runs} census runs give witness a; sampler min lambda {lam} over {} samples, {} witnesses{}",
            runs - failures.len(),
            rep.samples,
            rep.witnesses.len(),
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_growth() -> Outcome {
    let b = b2();
    let phi = Automorphism::from_texts(b, &["ab", "a"]).unwrap();
    let fit = growth_fit(&phi, &CyclicWord::parse(&b, "a").unwrap(), 12).unwrap();
    let mut fib = vec![1usize, 2];
    while fib.len() < 13 {
        let n = fib.len();
        fib.push(fib[n - 1] + fib[n - 2]);
    }
    let target = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let rel = (fit.slope - target).abs() / target;
    outcome(
        fit.lengths == fib && rel <= GROWTH_REL_TOL,
        format!("slope {:.4} vs {target:.4} (relative error {rel:.4}), lengths follow the Fibonacci recurrence: {}", fit.slope, fit.lengths == fib),
    )
}

fn criterion_prop81() -> Outcome {
    let b = b2();
    let phi = Automorphism::from_texts(b, &["a", "ba"]).unwrap();
    let mut groups = vec![("<(a,ba)>", SubgroupSpec::new(b, vec![("phi".into(), phi)]).unwrap())];
    groups.extend(fixture_groups());
    let lambda = q(3, 1);
    let (n, k) = (1, 1);
    let radius = n + 1 + k * n + k;
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, gamma) in groups {
        let spec = BundleSpec::new(gamma, radius).unwrap();
        let ball = bundle_ball(&spec, radius, 500_000).unwrap();
        let c = prop81_constants(&lambda, n, k, &ball).unwrap();
        // independent read of the properness function: inner elements are
        // the ones trivial in Out
        let id = Automorphism::identity(b);
        let e = (0..ball.len())
            .filter(|&i| ball.dist[i] <= radius)
            .filter_map(|i| id.out_equal(&ball.elements[i]).unwrap().map(|w| w.len()))
            .max()
            .unwrap();
        let raw = Q::from_integer(2.into()) * (&lambda + Q::from_integer((2 * e as i64).into())) / (&lambda - Q::one());
        let (d, rem) = raw.numer().div_rem(raw.denom());
        let expected_m = if rem.is_zero() { d } else { d + 1 };
        let ok = c.lambda_k == q(2, 1) && c.n_k == n && c.e_k == e && c.m_k == expected_m;
        pass &= ok;
        notes.push(format!("{name}: lambda_k {} e_k {} M_k {}", c.lambda_k, c.e_k, c.m_k));
    }
    outcome(pass, notes.join("; "))
}

fn random_subgroup(rng: &mut ChaCha8Rng, count: usize, max_len: usize) -> Vec<Word> {
    (0..count).map(|_| random_word(2, rng.gen_range(1..=max_len), rng)).collect()
}

/// Conjugators up to the cap, membership by reading words in the folded
/// graph of `b`.
fn brute_conjugate_into(a: &[Word], b: &[Word]) -> bool {
    let graph = stallings_graph(b).unwrap();
    let mut found = false;
    let mut check = |w: &Word| {
        if !found && a.iter().all(|x| graph.accepts(&w.mul(x).mul(&w.inverse()))) {
            found = true;
        }
    };
    check(&Word::identity());
    let mut layer = vec![Word::identity()];
    for _ in 0..CONJUGATOR_CAP {
        let mut next = Vec::new();
        for w in &layer {
            for l in [1, -1, 2, -2] {
                if w.letters().last() == Some(&-l) {
                    continue;
                }
                let x = w.mul(&Word::letter(l));
                check(&x);
                next.push(x);
            }
        }
        layer = next;
    }
    found
}

fn criterion_stallings() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let (mut positives, mut bad) = (0usize, Vec::new());
    let mut done = 0;
    while done < STALLINGS_PAIRS {
        let nb = rng.gen_range(1..=2);
        let big = random_subgroup(&mut rng, nb, 3);
        let small: Vec<Word> = if rng.gen_bool(0.5) {
            let c = random_word(2, rng.gen_range(0..=2), &mut rng);
            let p = (0..rng.gen_range(1..=2)).fold(Word::identity(), |acc, _| {
                let g = &big[rng.gen_range(0..big.len())];
                acc.mul(&if rng.gen_bool(0.5) { g.clone() } else { g.inverse() })
            });
            vec![c.mul(&p).mul(&c.inverse())]
        } else {
            let ns = rng.gen_range(1..=2);
            random_subgroup(&mut rng, ns, 4)
        };
        let (Ok(fa), Ok(fb)) = (FactorClass::new(&small), FactorClass::new(&big)) else { continue };
        done += 1;
        let lib = conjugate_into(&fa, &fb);
        let oracle = brute_conjugate_into(&small, &big);
        if lib {
            positives += 1;
        }
        if lib != oracle {
            bad.push(format!("{:?} into {:?}: library {lib}, brute force {oracle}", fa.to_texts(), fb.to_texts()));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{done} pairs ({positives} conjugate into), conjugators to length {CONJUGATOR_CAP}, {} disagreements{}",
            bad.len(),
            bad.first().map(|x| format!("; first: {x}")).unwrap_or_default()
        ),
    )
}

fn criterion_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1313);
    let mut bad = 0;
    let mut sizes = 0;
    for i in 0..EQUIVARIANCE_PAIRS {
        let r = if i % 5 == 4 { 3 } else { 2 };
        let basis = Basis::new(r).unwrap();
        let g = random_marked_graph(basis, 2, &mut rng);
        let phi = random_automorphism(basis, 3, &mut rng);
        let lhs: HashSet<String> = project_factors(&g.act(&phi)).unwrap().iter().map(|f| f.key().to_string()).collect();
        let rhs: HashSet<String> = project_factors(&g).unwrap().iter().map(|f| f.apply(&phi).key().to_string()).collect();
        sizes += lhs.len();
        if lhs != rhs {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{EQUIVARIANCE_PAIRS} (phi, G) pairs, {sizes} factor classes compared, {bad} mismatched sets"))
}

fn criterion_out_equality() -> Outcome {
    let b = b2();
    let phi = Automorphism::from_texts(b, &["ab", "b"]).unwrap();
    let psi = Automorphism::from_texts(b, &["ba", "b"]).unwrap();
    let witness = phi.out_equal(&psi).unwrap().map(|w| w.to_text());
    let mut rng = ChaCha8Rng::seed_from_u64(1414);
    let (mut chained, mut bad, mut budget) = (0usize, 0usize, 0usize);
    for i in 0..OUT_TRIPLES {
        let r = 2 + i % 2;
        let basis = Basis::new(r).unwrap();
        let x = random_automorphism(basis, 3, &mut rng);
        let twist = |a: &Automorphism, rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.8) {
                Automorphism::inner(basis, &random_word(r, rng.gen_range(0..=4), rng)).compose(a)
            } else {
                random_automorphism(basis, 3, rng)
            }
        };
        let y = twist(&x, &mut rng);
        let z = twist(&y, &mut rng);
        match (x.out_equal(&y), y.out_equal(&z), x.out_equal(&z)) {
            (Ok(xy), Ok(yz), Ok(xz)) => {
                if xy.is_some() && yz.is_some() {
                    chained += 1;
                    let w = xz.clone();
                    let ok = match w {
                        Some(w) => Automorphism::inner(basis, &w).compose(&x) == z,
                        None => false,
                    };
                    if !ok {
                        bad += 1;
                    }
                }
            }
            _ => budget += 1,
        }
    }
    outcome(
        witness.as_deref() == Some("b") && bad == 0 && chained > 0,
        format!("witness {witness:?}; {OUT_TRIPLES} triples, {chained} chained, {bad} transitivity failures, {budget} over budget"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("candidate exactness", criterion_candidates),
        ("folding geodesy", criterion_geodesy),
        ("length quasiconvexity 6r max", criterion_quasiconvexity),
        ("legality bound max(2k0, l_L)", criterion_legality_bound),
        ("outgoing balls R + log(6r)", criterion_outgoing_balls),
        ("derivative formula", criterion_derivative),
        ("rescaling bound log(2/eps)", criterion_rescaling),
        ("fiber metric vs BFS", criterion_fiber_metric),
        ("negative flaring fixture", criterion_negative_fixture),
        ("exponential growth fixture", criterion_growth),
        ("lift flaring constants", criterion_prop81),
        ("Stallings oracle equivalence", criterion_stallings),
        ("projection equivariance", criterion_equivariance),
        ("out-equality", criterion_out_equality),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 14 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
