//! Automorphisms of the free group given by basis images, and their classes
//! in Out.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stallings::Folder;
use crate::word::{letter_char, Basis, CyclicWord, Letter, Word};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Automorphism {
    basis: Basis,
    images: Vec<Word>,
}

impl Automorphism {
    /// Validates by inverting.
    pub fn new(basis: Basis, images: Vec<Word>) -> Result<Self> {
        let phi = Automorphism::new_unchecked(basis, images)?;
        phi.invert()?;
        Ok(phi)
    }

    /// Skips the basis check; the image count must still match the rank.
    pub fn new_unchecked(basis: Basis, images: Vec<Word>) -> Result<Self> {
        if images.len() != basis.rank {
            return Err(Error::RankMismatch(basis.rank, images.len()));
        }
        for w in &images {
            basis.check(w.letters())?;
        }
        Ok(Automorphism { basis, images })
    }

    pub fn identity(basis: Basis) -> Self {
        let images = (0..basis.rank).map(|i| Word::letter(basis.generator(i))).collect();
        Automorphism { basis, images }
    }

    /// `x ↦ w x w⁻¹`
    pub fn inner(basis: Basis, w: &Word) -> Self {
        let images = (0..basis.rank)
            .map(|i| w.conjugate(&Word::letter(basis.generator(i))))
            .collect();
        Automorphism { basis, images }
    }

    /// Parses images given as text, one per generator in order.
    pub fn from_texts(basis: Basis, texts: &[&str]) -> Result<Self> {
        let images = texts.iter().map(|t| Word::parse(&basis, t)).collect::<Result<Vec<_>>>()?;
        Automorphism::new(basis, images)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &Word {
        &self.images[i]
    }

    pub fn max_image_len(&self) -> usize {
        self.images.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        *self == Automorphism::identity(self.basis)
    }

    pub fn apply_letters(&self, letters: &[Letter]) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for &l in letters {
            let img = &self.images[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                for &m in img.letters() {
                    push_reduced(&mut out, m);
                }
            } else {
                for &m in img.letters().iter().rev() {
                    push_reduced(&mut out, -m);
                }
            }
        }
        Word::from_reduced(out)
    }

    pub fn apply(&self, w: &Word) -> Word {
        self.apply_letters(w.letters())
    }

    pub fn apply_cyclic(&self, c: &CyclicWord) -> CyclicWord {
        CyclicWord::new(&self.apply_letters(c.letters())).expect("automorphisms preserve nontriviality")
    }

    /// `(self ∘ other)(x) = self(other(x))`
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        assert_eq!(self.basis, other.basis, "compose across bases");
        let images = other.images.iter().map(|w| self.apply(w)).collect();
        Automorphism { basis: self.basis, images }
    }

    /// Folds the wedge of image loops; each loop is tagged with its generator,
    /// so the folded rose spells the inverse.
    pub fn invert(&self) -> Result<Automorphism> {
        let r = self.rank();
        let mut folder: Folder<Letter> = Folder::new();
        for (i, w) in self.images.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::NotAnAutomorphism(format!("image of {} is trivial", letter_char(i as Letter + 1))));
            }
            folder.add_path(0, 0, w.letters(), Word::letter(i as Letter + 1));
        }
        folder
            .fold()
            .map_err(|c| Error::NotAnAutomorphism(format!("relation {} in the kernel", c.relation)))?;
        let g = folder.finish();
        if g.vertex_count != 1 || g.edges.len() != r {
            return Err(Error::NotAnAutomorphism(format!(
                "folded image graph has {} vertices and {} edges",
                g.vertex_count,
                g.edges.len()
            )));
        }
        let mut images: Vec<Option<Word>> = vec![None; r];
        for (_, _, label, tag) in &g.edges {
            let i = (label.unsigned_abs() - 1) as usize;
            if images[i].is_some() {
                return Err(Error::NotAnAutomorphism("repeated petal label".into()));
            }
            images[i] = Some(if *label > 0 { tag.clone() } else { tag.inverse() });
        }
        let images = images.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| {
            Error::NotAnAutomorphism("missing petal".into())
        })?;
        Ok(Automorphism { basis: self.basis, images })
    }

    pub fn pow(&self, n: i64) -> Result<Automorphism> {
        let base = if n < 0 { self.invert()? } else { self.clone() };
        let mut out = Automorphism::identity(self.basis);
        for _ in 0..n.unsigned_abs() {
            out = out.compose(&base);
        }
        Ok(out)
    }

    /// Default bound on the centralizer-power search in [`Self::out_equal`].
    pub fn default_out_cap(&self, other: &Automorphism) -> usize {
        4 * self.max_image_len().max(other.max_image_len()) + 8
    }

    /// Decides whether `other = i_w ∘ self` for some `w` and returns that `w`.
    pub fn out_equal(&self, other: &Automorphism) -> Result<Option<Word>> {
        self.out_equal_capped(other, self.default_out_cap(other))
    }

    pub fn out_equal_capped(&self, other: &Automorphism, cap: usize) -> Result<Option<Word>> {
        conjugator(&self.images, &other.images, cap)
    }

    /// Column `j` is the exponent-sum vector of the image of generator `j`.
    pub fn abelianize(&self) -> IntMatrix {
        let r = self.rank();
        let mut m = IntMatrix::zero(r);
        for (j, w) in self.images.iter().enumerate() {
            for (i, e) in w.abelianization(r).into_iter().enumerate() {
                m.set(i, j, e);
            }
        }
        m
    }

    /// `a -> a b` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, w) in self.images.iter().enumerate() {
            let img: Vec<String> = w.letters().iter().map(|&l| letter_char(l).to_string()).collect();
            s.push_str(&format!("{} -> {}\n", letter_char(i as Letter + 1), img.join(" ")));
        }
        s
    }

    /// Parses the line format; `#` starts a comment. The rank is the number of
    /// generator lines.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut entries: Vec<(Letter, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("line {}: expected `x -> word`", n + 1)))?;
            let lhs = lhs.trim();
            let mut cs = lhs.chars();
            let c = match (cs.next(), cs.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => c,
                _ => return Err(Error::Parse(format!("line {}: bad generator {lhs:?}", n + 1))),
            };
            entries.push(((c as u8 - b'a') as Letter + 1, rhs.to_string()));
        }
        let rank = entries.len();
        let basis = Basis::new(rank)?;
        let mut images: Vec<Option<Word>> = vec![None; rank];
        for (g, rhs) in entries {
            let i = (g - 1) as usize;
            if i >= rank || images[i].is_some() {
                return Err(Error::Parse(format!("generator {} repeated or out of range", letter_char(g))));
            }
            images[i] = Some(Word::parse(&basis, &rhs)?);
        }
        let images = images.into_iter().collect::<Option<Vec<_>>>().unwrap();
        Automorphism::new(basis, images)
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&-l) {
        out.pop();
    } else {
        out.push(l);
    }
}

/// Finds `w` with `w v_i w⁻¹ = u_i` for all `i`.
///
/// After cyclic reduction of the first pair, solutions are `a ρ^k c₀ b⁻¹`
/// where `ρ` is the primitive root; a non-commuting later generator bounds
/// `k`, and `cap` bounds how far that search may go.
fn conjugator(v: &[Word], u: &[Word], cap: usize) -> Result<Option<Word>> {
    if v == u {
        return Ok(Some(Word::identity()));
    }
    for (x, y) in v.iter().zip(u) {
        if x.is_empty() || y.is_empty() || CyclicWord::new(x)? != CyclicWord::new(y)? {
            return Ok(None);
        }
    }
    let (b, vbar) = v[0].cyclic_split();
    let (a, ubar) = u[0].cyclic_split();
    let n = ubar.len();
    let ul = ubar.letters();
    let vl = vbar.letters();
    let p = (1..=n).find(|&p| n % p == 0 && (0..n).all(|i| ul[i] == ul[(i + p) % n])).unwrap();
    let rho = Word::from_reduced(ul[..p].to_vec());
    let binv = b.inverse();
    let mut over_cap = false;
    for j in 0..p {
        if (0..n).any(|i| vl[(i + j) % n] != ul[i]) {
            continue;
        }
        let c0 = Word::from_reduced(vl[..j].to_vec()).inverse();
        let tail = c0.mul(&binv);
        // pinning bound from the first generator whose conjugate does not commute with ρ
        let mut bound = 0usize;
        for i in 1..v.len() {
            let vp = tail.conjugate(&v[i]);
            let up = a.inverse().conjugate(&u[i]);
            if rho.mul(&vp) != vp.mul(&rho) {
                bound = (vp.len() + up.len()) / p + 3;
                break;
            }
        }
        let k_max = if bound > cap {
            over_cap = true;
            cap
        } else {
            bound
        };
        for step in 0..=(2 * k_max) {
            let k = if step % 2 == 0 { -((step / 2) as i64) } else { (step / 2 + 1) as i64 };
            let w = a.mul(&rho.pow(k)).mul(&tail);
            if v.iter().zip(u).all(|(x, y)| w.conjugate(x) == *y) {
                return Ok(Some(w));
            }
        }
    }
    if over_cap {
        return Err(Error::SearchBudgetExceeded(cap));
    }
    Ok(None)
}

impl fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{}↦{}", letter_char(i as Letter + 1), w))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl fmt::Display for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Automorphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.images.iter().map(Word::to_text).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Automorphism {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let basis = Basis::new(v.len()).map_err(serde::de::Error::custom)?;
        let texts: Vec<&str> = v.iter().map(String::as_str).collect();
        Automorphism::from_texts(basis, &texts).map_err(serde::de::Error::custom)
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct IntMatrix {
    pub n: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn zero(n: usize) -> Self {
        IntMatrix { n, data: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        IntMatrix { n, data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.n + j] = x;
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut m = IntMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        m
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix { n: self.n, data: self.data.iter().map(|x| -x).collect() }
    }

    /// Fraction-free Gaussian elimination.
    pub fn det(&self) -> i128 {
        let n = self.n;
        let mut a: Vec<Vec<i128>> = self.rows().into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k][k] == 0 {
                match (k + 1..n).find(|&i| a[i][k] != 0) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[n - 1][n - 1]
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs() == 1
    }
}
