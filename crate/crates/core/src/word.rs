//! Reduced words and conjugacy classes in a free group of fixed rank.
//!
//! A letter is a nonzero `i32`: `+(i+1)` is the `i`-th basis element and
//! `-(i+1)` its inverse. Text uses lowercase for generators and uppercase for
//! inverses.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Letter = i32;

pub const MAX_TEXT_RANK: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Basis {
    pub rank: usize,
}

impl Basis {
    pub fn new(rank: usize) -> Result<Self> {
        if rank < 2 {
            return Err(Error::RankTooSmall(rank));
        }
        if rank > MAX_TEXT_RANK {
            return Err(Error::Parse(format!("rank {rank} exceeds letter alphabet")));
        }
        Ok(Basis { rank })
    }

    pub fn generator(&self, i: usize) -> Letter {
        (i + 1) as Letter
    }

    /// All letters in canonical order `a A b B ...`.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.rank).flat_map(|i| [(i + 1) as Letter, -((i + 1) as Letter)]).collect()
    }

    pub fn name(&self, l: Letter) -> char {
        letter_char(l)
    }

    pub fn parse_letter(&self, c: char) -> Result<Letter> {
        let l = char_letter(c).ok_or_else(|| Error::InvalidWord(format!("bad letter {c:?}")))?;
        if l.unsigned_abs() as usize > self.rank {
            return Err(Error::InvalidWord(format!("letter {c:?} outside rank {}", self.rank)));
        }
        Ok(l)
    }

    pub fn check(&self, letters: &[Letter]) -> Result<()> {
        for &l in letters {
            if l == 0 || l.unsigned_abs() as usize > self.rank {
                return Err(Error::InvalidWord(format!("letter {l} outside rank {}", self.rank)));
            }
        }
        Ok(())
    }
}

pub fn letter_char(l: Letter) -> char {
    let i = (l.unsigned_abs() - 1) as u8;
    if l > 0 {
        (b'a' + i) as char
    } else {
        (b'A' + i) as char
    }
}

fn char_letter(c: char) -> Option<Letter> {
    if c.is_ascii_lowercase() {
        Some((c as u8 - b'a') as Letter + 1)
    } else if c.is_ascii_uppercase() {
        Some(-((c as u8 - b'A') as Letter + 1))
    } else {
        None
    }
}

/// Position of a letter in the order `a < A < b < B < ...`.
#[inline]
pub fn letter_key(l: Letter) -> u32 {
    2 * (l.unsigned_abs() - 1) + (l < 0) as u32
}

#[inline]
pub fn key_letter(k: u32) -> Letter {
    let g = (k / 2 + 1) as Letter;
    if k % 2 == 0 {
        g
    } else {
        -g
    }
}

fn cmp_letters(a: &[Letter], b: &[Letter]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            match letter_key(*x).cmp(&letter_key(*y)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

/// Free reduction with a stack.
pub fn reduce(raw: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for &l in raw {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// A freely reduced word.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn from_letters(raw: &[Letter]) -> Self {
        Word { letters: reduce(raw) }
    }

    /// Caller guarantees the letters are reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(reduce(&letters) == letters);
        Word { letters }
    }

    pub fn letter(l: Letter) -> Self {
        Word { letters: vec![l] }
    }

    pub fn parse(basis: &Basis, s: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for c in s.chars() {
            if c.is_whitespace() || c == '1' || c == 'ε' {
                continue;
            }
            raw.push(basis.parse_letter(c)?);
        }
        Ok(Word::from_letters(&raw))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.letters.clone();
        for &l in &other.letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `self · w · self⁻¹`
    pub fn conjugate(&self, w: &Word) -> Word {
        self.mul(w).mul(&self.inverse())
    }

    /// Splits `w = u · c · u⁻¹` with `c` cyclically reduced.
    pub fn cyclic_split(&self) -> (Word, Word) {
        let l = &self.letters;
        let n = l.len();
        let mut i = 0;
        while i + 1 < n - i && l[i] == -l[n - 1 - i] {
            i += 1;
        }
        (
            Word { letters: l[..i].to_vec() },
            Word { letters: l[i..n - i].to_vec() },
        )
    }

    pub fn cyclic_reduction(&self) -> Word {
        if self.letters.is_empty() {
            return Word::identity();
        }
        self.cyclic_split().1
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(a), Some(b)) => self.letters.len() == 1 || *a != -*b,
            _ => true,
        }
    }

    /// Length of the shortest word in the conjugacy class.
    pub fn conjugacy_length(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::TrivialClass);
        }
        Ok(self.cyclic_reduction().len())
    }

    /// Exponent-sum vector.
    pub fn abelianization(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank];
        for &l in &self.letters {
            let i = (l.unsigned_abs() - 1) as usize;
            v[i] += l.signum() as i64;
        }
        v
    }

    pub fn to_text(&self) -> String {
        self.letters.iter().map(|&l| letter_char(l)).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self.to_text())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex in the letter order `a < A < b < ...`.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_letters(&self.letters, &other.letters)
    }
}

/// A conjugacy class, stored as its least cyclically reduced rotation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

fn least_rotation(c: &[Letter]) -> Vec<Letter> {
    let n = c.len();
    let mut best = 0;
    for s in 1..n {
        for k in 0..n {
            let x = letter_key(c[(s + k) % n]);
            let y = letter_key(c[(best + k) % n]);
            if x != y {
                if x < y {
                    best = s;
                }
                break;
            }
        }
    }
    (0..n).map(|k| c[(best + k) % n]).collect()
}

impl CyclicWord {
    pub fn new(w: &Word) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::TrivialClass);
        }
        Ok(CyclicWord { letters: least_rotation(w.cyclic_reduction().letters()) })
    }

    /// Class of an arbitrary letter sequence.
    pub fn from_letters(raw: &[Letter]) -> Result<Self> {
        CyclicWord::new(&Word::from_letters(raw))
    }

    pub fn parse(basis: &Basis, s: &str) -> Result<Self> {
        CyclicWord::new(&Word::parse(basis, s)?)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Representative word (cyclically reduced).
    pub fn word(&self) -> Word {
        Word { letters: self.letters.clone() }
    }

    pub fn inverse(&self) -> CyclicWord {
        let inv: Vec<Letter> = self.letters.iter().rev().map(|l| -l).collect();
        CyclicWord { letters: least_rotation(&inv) }
    }

    /// The smaller of the class and its inverse.
    pub fn unoriented(&self) -> CyclicWord {
        let inv = self.inverse();
        if inv < *self {
            inv
        } else {
            self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        self.letters.iter().map(|&l| letter_char(l)).collect()
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_text())
    }
}

impl PartialOrd for CyclicWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CyclicWord {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_letters(&self.letters, &other.letters)
    }
}

macro_rules! text_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_text())
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                let basis = Basis { rank: MAX_TEXT_RANK };
                Self::parse(&basis, &s).map_err(serde::de::Error::custom)
            }
        }
    };
}

text_serde!(Word);
text_serde!(CyclicWord);

/// Calls `visit` with every cyclically reduced word of length exactly `n`
/// that is the least rotation of its class, in lexicographic order.
pub fn for_each_necklace(rank: usize, n: usize, visit: &mut dyn FnMut(&[Letter])) {
    if n == 0 {
        return;
    }
    let k = 2 * rank as u32;
    let mut keys = vec![0u32; n + 1];
    let mut letters = vec![0 as Letter; n];
    necklace_rec(1, 1, n, k, &mut keys, &mut letters, visit);
}

fn necklace_rec(
    t: usize,
    p: usize,
    n: usize,
    k: u32,
    a: &mut [u32],
    letters: &mut [Letter],
    visit: &mut dyn FnMut(&[Letter]),
) {
    if t > n {
        if n % p == 0 && (n == 1 || a[1] != (a[n] ^ 1)) {
            visit(letters);
        }
        return;
    }
    let start = if t == 1 { 0 } else { a[t - p] };
    for j in start..k {
        if t > 1 && j == (a[t - 1] ^ 1) {
            continue;
        }
        a[t] = j;
        letters[t - 1] = key_letter(j);
        let np = if t == 1 || j != a[t - p] { t } else { p };
        necklace_rec(t + 1, np, n, k, a, letters, visit);
    }
}

/// Every conjugacy class of length `1..=max_len`, each once, ordered by
/// length then lexicographically. `cap` bounds the number of classes.
pub fn enumerate_cyclic_words(
    basis: &Basis,
    max_len: usize,
    cap: Option<usize>,
) -> Result<Vec<CyclicWord>> {
    let mut out = Vec::new();
    let mut over = false;
    for n in 1..=max_len {
        for_each_necklace(basis.rank, n, &mut |l| {
            if over {
                return;
            }
            if let Some(c) = cap {
                if out.len() >= c {
                    over = true;
                    return;
                }
            }
            out.push(CyclicWord { letters: l.to_vec() });
        });
        if over {
            return Err(Error::BudgetExceeded(format!(
                "more than {} cyclic words up to length {max_len}",
                cap.unwrap_or(0)
            )));
        }
    }
    Ok(out)
}

/// Number of cyclically reduced words of length `n` (not up to rotation).
pub fn count_cyclically_reduced(rank: usize, n: usize) -> u128 {
    // trace of the n-th power of the non-backtracking transfer matrix
    let m = 2 * rank as i128 - 1;
    if n == 0 {
        return 1;
    }
    (m.pow(n as u32) + 1 + (rank as i128 - 1) * (1 + if n % 2 == 0 { 1 } else { -1 })) as u128
}

pub fn random_word<R: Rng>(rank: usize, len: usize, rng: &mut R) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let g = rng.gen_range(1..=rank as Letter);
        let l = if rng.gen_bool(0.5) { g } else { -g };
        if letters.last() == Some(&-l) {
            continue;
        }
        letters.push(l);
    }
    Word { letters }
}

pub fn random_cyclic_word<R: Rng>(rank: usize, len: usize, rng: &mut R) -> CyclicWord {
    loop {
        let w = random_word(rank, len, rng);
        if w.is_cyclically_reduced() {
            return CyclicWord::new(&w).unwrap();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn b2() -> Basis {
        Basis::new(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(&b2(), s).unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(w("a b B a").to_text(), "aa");
        assert_eq!(w("").to_text(), "");
        assert_eq!(w("aA").to_text(), "");
    }

    #[test]
    fn conjugacy_length_examples() {
        assert_eq!(w("baB").conjugacy_length().unwrap(), 1);
        assert_eq!(w("abAB").conjugacy_length().unwrap(), 4);
        assert_eq!(w("").conjugacy_length(), Err(Error::TrivialClass));
        assert_eq!(w("abaBA").conjugacy_length().unwrap(), 1);
    }

    #[test]
    fn cyclic_split_recomposes() {
        let x = w("Bab");
        let (u, c) = x.cyclic_split();
        assert_eq!((u.to_text().as_str(), c.to_text().as_str()), ("B", "a"));
        assert_eq!(u.conjugate(&c), x);
        let y = w("abaBA");
        let (u, c) = y.cyclic_split();
        assert_eq!(u.to_text(), "ab");
        assert_eq!(c.to_text(), "a");
    }

    #[test]
    fn canonical_rotation() {
        let c = CyclicWord::parse(&b2(), "bAB a").unwrap();
        assert_eq!(c.to_text(), "abAB");
        assert_eq!(CyclicWord::parse(&b2(), "ba").unwrap().to_text(), "ab");
        assert_eq!(CyclicWord::parse(&b2(), "BaBA").unwrap().to_text(), "aBAB");
    }

    #[test]
    fn enumeration_small_cases() {
        let one = enumerate_cyclic_words(&b2(), 1, None).unwrap();
        let names: Vec<_> = one.iter().map(|c| c.to_text()).collect();
        assert_eq!(names, ["a", "A", "b", "B"]);
        let two = enumerate_cyclic_words(&b2(), 2, None).unwrap();
        assert_eq!(two.len(), 12);
        assert!(enumerate_cyclic_words(&b2(), 0, None).unwrap().is_empty());
        assert!(matches!(
            enumerate_cyclic_words(&b2(), 6, Some(10)),
            Err(Error::BudgetExceeded(_))
        ));
    }

    /// Brute force: all reduced words, closed under rotation.
    fn brute_classes(rank: usize, n: usize) -> HashSet<Vec<Letter>> {
        let basis = Basis::new(rank).unwrap();
        let letters = basis.letters();
        let mut words: Vec<Vec<Letter>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for x in &words {
                for &l in &letters {
                    if x.last() != Some(&-l) {
                        let mut y = x.clone();
                        y.push(l);
                        next.push(y);
                    }
                }
            }
            words = next;
        }
        words
            .into_iter()
            .filter(|x| x.len() == 1 || x[0] != -x[n - 1])
            .map(|x| least_rotation(&x))
            .collect()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for rank in 2..=3 {
            for n in 1..=6 {
                let mut seen = Vec::new();
                for_each_necklace(rank, n, &mut |l| seen.push(l.to_vec()));
                let set: HashSet<_> = seen.iter().cloned().collect();
                assert_eq!(set.len(), seen.len(), "duplicates at rank {rank} n {n}");
                assert_eq!(set, brute_classes(rank, n), "rank {rank} n {n}");
                let mut sorted = seen.clone();
                sorted.sort_by(|a, b| cmp_letters(a, b));
                assert_eq!(sorted, seen, "order at rank {rank} n {n}");
            }
        }
    }

    #[test]
    fn cyclically_reduced_count() {
        // rotations of the enumerated classes recover all cyclically reduced words
        for n in 1..=7 {
            let mut total = 0u128;
            for_each_necklace(2, n, &mut |l| {
                let rots: HashSet<Vec<Letter>> = (0..n)
                    .map(|s| (0..n).map(|k| l[(s + k) % n]).collect())
                    .collect();
                total += rots.len() as u128;
            });
            assert_eq!(total, count_cyclically_reduced(2, n), "n = {n}");
        }
    }
}
