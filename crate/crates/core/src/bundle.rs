//! The extension group generated by inner automorphisms and lifts of a
//! subgroup of Out: fibers, canonical lifts and the flaring sampler.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aut::Automorphism;
use crate::error::{Error, Result};
use crate::flaring::{cayley_ball, CayleyBall, SubgroupSpec, DEFAULT_BALL_CAP};
use crate::rational::{fmt_q, ln_q, Q};
use crate::word::{random_word, Letter, Word};

#[derive(Clone, Debug)]
pub struct BundleSpec {
    pub gamma: SubgroupSpec,
    /// Lift of each generator of the subgroup.
    pub lifts: Vec<Automorphism>,
    /// Ball in the subgroup, used to name base points.
    pub base: CayleyBall,
}

/// A bundle generator: an inner automorphism by a letter, or a lift.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum BundleGenerator {
    Inner(Letter),
    Lift(usize),
}

impl BundleSpec {
    /// Lifts are the given generator representatives.
    pub fn new(gamma: SubgroupSpec, base_radius: usize) -> Result<Self> {
        let base = cayley_ball(&gamma, base_radius, DEFAULT_BALL_CAP)?;
        let lifts = gamma.generators.clone();
        Ok(BundleSpec { gamma, lifts, base })
    }

    pub fn generators(&self) -> Vec<BundleGenerator> {
        let r = self.gamma.basis.rank as Letter;
        let mut out: Vec<BundleGenerator> = (1..=r).flat_map(|x| [BundleGenerator::Inner(x), BundleGenerator::Inner(-x)]).collect();
        out.extend((0..self.lifts.len()).map(BundleGenerator::Lift));
        out
    }

    pub fn element(&self, g: BundleGenerator) -> Automorphism {
        match g {
            BundleGenerator::Inner(x) => Automorphism::inner(self.gamma.basis, &Word::letter(x)),
            BundleGenerator::Lift(i) => self.lifts[i].clone(),
        }
    }

    /// Section lift of a base node: the product of lifts along its word.
    pub fn section(&self, node: usize) -> Automorphism {
        self.base.nodes[node]
            .word
            .iter()
            .fold(Automorphism::identity(self.gamma.basis), |acc, &s| acc.compose(&self.lifts[s]))
    }

    /// Writes an element as a fiber point over the base ball.
    pub fn fiber_point(&self, g: &Automorphism) -> Result<FiberPoint> {
        let node = self
            .base
            .locate(g)?
            .ok_or_else(|| Error::BudgetExceeded("base point outside the explored subgroup ball".into()))?;
        let x = self.section(node).invert()?.compose(g);
        let u = Automorphism::identity(self.gamma.basis)
            .out_equal(&x)?
            .expect("same outer class differs by an inner automorphism");
        Ok(FiberPoint { base: node, coord: u })
    }

    pub fn to_element(&self, p: &FiberPoint) -> Automorphism {
        self.section(p.base).compose(&Automorphism::inner(self.gamma.basis, &p.coord))
    }

    /// `t i_x t^{-1} = i_{t(x)}` for every lift and letter.
    pub fn check_conjugation(&self) -> Result<bool> {
        let basis = self.gamma.basis;
        for t in &self.lifts {
            let tinv = t.invert()?;
            for x in 1..=basis.rank as Letter {
                let lhs = t.compose(&Automorphism::inner(basis, &Word::letter(x))).compose(&tinv);
                let rhs = Automorphism::inner(basis, &t.apply(&Word::letter(x)));
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// An element `section(base) ∘ i_coord`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct FiberPoint {
    pub base: usize,
    pub coord: Word,
}

pub fn fiber_distance(u: &FiberPoint, v: &FiberPoint) -> Result<usize> {
    if u.base != v.base {
        return Err(Error::DifferentFibers);
    }
    Ok(u.coord.inverse().mul(&v.coord).len())
}

/// Breadth-first ball in the Cayley graph of the extension.
#[derive(Clone, Debug)]
pub struct BundleBall {
    pub radius: usize,
    pub elements: Vec<Automorphism>,
    pub dist: Vec<usize>,
    pub points: Vec<FiberPoint>,
    /// `(from, generator index, to)`.
    pub edges: Vec<(usize, usize, usize)>,
    index: HashMap<Vec<Word>, usize>,
}

impl BundleBall {
    pub fn find(&self, g: &Automorphism) -> Option<usize> {
        self.index.get(g.images()).copied()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `f(n)`: the longest inner word reachable within `n` steps.
    pub fn properness(&self, n: usize) -> Option<usize> {
        if n > self.radius {
            return None;
        }
        Some(
            (0..self.len())
                .filter(|&i| self.dist[i] <= n && self.points[i].base == 0)
                .map(|i| self.points[i].coord.len())
                .max()
                .unwrap_or(0),
        )
    }
}

pub fn bundle_ball(spec: &BundleSpec, radius: usize, max_elements: usize) -> Result<BundleBall> {
    if spec.base.radius < radius {
        return Err(Error::BallTooSmall { explored: spec.base.radius, needed: radius });
    }
    let gens: Vec<Automorphism> = spec.generators().into_iter().map(|g| spec.element(g)).collect();
    let id = Automorphism::identity(spec.gamma.basis);
    let mut ball = BundleBall {
        radius,
        elements: vec![id.clone()],
        dist: vec![0],
        points: vec![spec.fiber_point(&id)?],
        edges: vec![],
        index: HashMap::from([(id.images().to_vec(), 0)]),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for (s, g) in gens.iter().enumerate() {
            let x = ball.elements[v].compose(g);
            let to = match ball.find(&x) {
                Some(i) => i,
                None => {
                    if ball.dist[v] == radius {
                        continue;
                    }
                    if ball.len() >= max_elements {
                        return Err(Error::BudgetExceeded(format!("bundle ball exceeds {max_elements} elements")));
                    }
                    let i = ball.len();
                    ball.points.push(spec.fiber_point(&x)?);
                    ball.index.insert(x.images().to_vec(), i);
                    ball.elements.push(x);
                    ball.dist.push(ball.dist[v] + 1);
                    queue.push_back(i);
                    i
                }
            };
            ball.edges.push((v, s, to));
        }
    }
    Ok(ball)
}

/// Checks that a word in subgroup generators is geodesic.
pub fn check_geodesic(spec: &BundleSpec, word: &[usize]) -> Result<()> {
    if spec.base.radius < word.len() {
        return Err(Error::BallTooSmall { explored: spec.base.radius, needed: word.len() });
    }
    let mut h = Automorphism::identity(spec.gamma.basis);
    for (j, &s) in word.iter().enumerate() {
        h = h.compose(&spec.gamma.generators[s]);
        let node = spec.base.locate(&h)?.ok_or_else(|| Error::NotGeodesic(format!("prefix {} left the ball", j + 1)))?;
        if spec.base.nodes[node].dist != j + 1 {
            return Err(Error::NotGeodesic(format!("prefix of length {} has word length {}", j + 1, spec.base.nodes[node].dist)));
        }
    }
    Ok(())
}

/// `γ̃(j) = γ̃(0) t_{s_0} ⋯ t_{s_{j−1}}`.
pub fn canonical_lift(spec: &BundleSpec, word: &[usize], start: &Automorphism) -> Result<Vec<Automorphism>> {
    check_geodesic(spec, word)?;
    let mut out = vec![start.clone()];
    for &s in word {
        let next = out.last().unwrap().compose(&spec.lifts[s]);
        out.push(next);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerWitness {
    pub geodesic: String,
    pub central: Word,
    pub start_distance: usize,
    pub end_distance: usize,
    #[serde(with = "crate::rational::q_string")]
    pub lambda: Q,
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleReport {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    #[serde(with = "crate::rational::q_string")]
    pub min_lambda: Q,
    /// Least ratio seen when the geodesic is cut to half-length `j`.
    pub min_lambda_by_length: Vec<String>,
    /// Least-squares slope of `log λ` against the half-length.
    pub fit_slope: Option<f64>,
    pub witnesses: Vec<SamplerWitness>,
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    /// Witnesses are recorded when the ratio is at most this.
    pub lambda_target: Q,
    /// Fixed central fiber differences; random words of length `m..m+2`
    /// when empty.
    pub central: Vec<Word>,
}

/// Samples geodesics of length `2n` through the identity's fiber and pairs
/// of canonical lifts at central fiber distance at least `m`.
pub fn mj_sardar_sampler(spec: &BundleSpec, cfg: &SamplerConfig) -> Result<BundleReport> {
    if cfg.n == 0 || cfg.samples == 0 || cfg.m == 0 {
        return Err(Error::Parse("n, m and samples must be positive".into()));
    }
    let len = 2 * cfg.n;
    let sphere: Vec<usize> = spec.base.sphere(len).collect();
    if sphere.is_empty() {
        return Err(Error::NoGeodesicOfLength(len));
    }
    let basis = spec.gamma.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut min: Option<Q> = None;
    let mut by_len: Vec<Option<Q>> = vec![None; cfg.n + 1];
    let mut witnesses = Vec::new();
    for _ in 0..cfg.samples {
        let word = spec.base.nodes[sphere[rng.gen_range(0..sphere.len())]].word.clone();
        let alpha = if cfg.central.is_empty() {
            let l = rng.gen_range(cfg.m..=cfg.m + 2);
            random_word(basis.rank, l, &mut rng)
        } else {
            cfg.central[rng.gen_range(0..cfg.central.len())].clone()
        };
        if alpha.len() < cfg.m {
            continue;
        }
        // forward from the centre uses word[n..], backward undoes word[..n]
        let mut fwd = Automorphism::identity(basis);
        let mut back = Automorphism::identity(basis);
        let centre = Q::from_integer((alpha.len() as i64).into());
        for j in 1..=cfg.n {
            fwd = fwd.compose(&spec.lifts[word[cfg.n + j - 1]]);
            back = back.compose(&spec.lifts[spec.gamma.inverse[word[cfg.n - j]]]);
            // lifts through z and z·i_α differ at the far end by i_{H^{-1}(α)}
            let de = fwd.invert()?.apply(&alpha).len();
            let ds = back.invert()?.apply(&alpha).len();
            let ratio = Q::from_integer((de.max(ds) as i64).into()) / &centre;
            if by_len[j].as_ref().map_or(true, |x| ratio < *x) {
                by_len[j] = Some(ratio.clone());
            }
            if j == cfg.n {
                if min.as_ref().map_or(true, |x| ratio < *x) {
                    min = Some(ratio.clone());
                }
                if ratio <= cfg.lambda_target && witnesses.len() < 32 {
                    witnesses.push(SamplerWitness {
                        geodesic: spec.gamma.word_text(&word),
                        central: alpha.clone(),
                        start_distance: ds,
                        end_distance: de,
                        lambda: ratio,
                    });
                }
            }
        }
    }
    let min_lambda = min.ok_or_else(|| Error::Parse("no admissible samples".into()))?;
    let pts: Vec<(f64, f64)> = by_len
        .iter()
        .enumerate()
        .filter_map(|(j, x)| x.as_ref().map(|q| (j as f64, ln_q(q))))
        .collect();
    let fit_slope = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(BundleReport {
        seed: cfg.seed,
        k: cfg.k,
        n: cfg.n,
        m: cfg.m,
        samples: cfg.samples,
        min_lambda,
        min_lambda_by_length: by_len.iter().skip(1).map(|x| x.as_ref().map(fmt_q).unwrap_or_default()).collect(),
        fit_slope,
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftConstants {
    #[serde(with = "crate::rational::q_string")]
    pub lambda_k: Q,
    pub n_k: usize,
    pub e_k: usize,
    #[serde(serialize_with = "big_string")]
    pub m_k: BigInt,
    /// Radius at which the properness function was read.
    pub radius: usize,
}

/// Constants for the qi-lift flaring condition from conjugacy flaring data.
pub fn prop81_constants(lambda: &Q, n: usize, k: usize, ball: &BundleBall) -> Result<LiftConstants> {
    if *lambda <= Q::one() {
        return Err(Error::Parse("lambda must exceed 1".into()));
    }
    let radius = n + 1 + k * n + k;
    let e = ball.properness(radius).ok_or(Error::BallTooSmall { explored: ball.radius, needed: radius })?;
    let raw = Q::from_integer(2.into()) * (lambda + Q::from_integer((2 * e as i64).into())) / (lambda - Q::one());
    let m_k = ceil(&raw);
    Ok(LiftConstants { lambda_k: (lambda + Q::one()) / Q::from_integer(2.into()), n_k: n, e_k: e, m_k, radius })
}

fn big_string<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

fn ceil(x: &Q) -> BigInt {
    let (d, r) = x.numer().div_rem(x.denom());
    if r.is_positive() {
        d + 1
    } else {
        d
    }
}

/// Largest measured `f(n)` table, for reports.
pub fn properness_table(ball: &BundleBall) -> Vec<usize> {
    (0..=ball.radius).map(|n| ball.properness(n).unwrap_or(0)).collect()
}

/// Empirical `λ` as a float, for human output.
pub fn lambda_f64(q: &Q) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::word::Basis;

    fn b2() -> Basis {
        Basis::new(2).unwrap()
    }

    fn fixture() -> BundleSpec {
        let phi = Automorphism::from_texts(b2(), &["a", "ba"]).unwrap();
        let gamma = SubgroupSpec::new(b2(), vec![("phi".into(), phi)]).unwrap();
        BundleSpec::new(gamma, 8).unwrap()
    }

    #[test]
    fn fibers_and_lifts() {
        let spec = fixture();
        assert!(spec.check_conjugation().unwrap());
        let u = FiberPoint { base: 0, coord: Word::identity() };
        assert_eq!(fiber_distance(&u, &u).unwrap(), 0);
        let v = FiberPoint { base: 0, coord: Word::parse(&b2(), "a").unwrap() };
        assert_eq!(fiber_distance(&u, &v).unwrap(), 1);
        let w = FiberPoint { base: 1, coord: Word::identity() };
        assert_eq!(fiber_distance(&u, &w), Err(Error::DifferentFibers));
        let start = Automorphism::identity(b2());
        let lift = canonical_lift(&spec, &[0], &start).unwrap();
        assert_eq!(lift[1], spec.lifts[0]);
        assert_eq!(canonical_lift(&spec, &[], &start).unwrap(), vec![start.clone()]);
        assert!(matches!(canonical_lift(&spec, &[0, 1], &start), Err(Error::NotGeodesic(_))));
    }

    #[test]
    fn fixed_class_gives_no_flaring() {
        let spec = fixture();
        let cfg = SamplerConfig {
            k: 1,
            n: 3,
            m: 1,
            samples: 20,
            seed: 7,
            lambda_target: q(1, 1),
            central: vec![Word::parse(&b2(), "a").unwrap()],
        };
        let rep = mj_sardar_sampler(&spec, &cfg).unwrap();
        assert_eq!(rep.min_lambda, q(1, 1));
        assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn lift_constants() {
        let spec = fixture();
        let ball = bundle_ball(&spec, 4, 100_000).unwrap();
        let table = properness_table(&ball);
        assert!(table.windows(2).all(|w| w[0] <= w[1]));
        let c = prop81_constants(&q(3, 1), 1, 1, &ball).unwrap();
        assert_eq!(c.lambda_k, q(2, 1));
        assert_eq!(c.n_k, 1);
        assert!(matches!(prop81_constants(&q(3, 1), 2, 1, &ball), Err(Error::BallTooSmall { .. })));
    }
}
