//! Sequence pairs: a pair of permutations `(pi, pi')` over N macros that fixes
//! the relative location of every pair of macros.
//!
//! | order in `pi` | order in `pi'` | relation of `i` to `j` |
//! |---------------|----------------|------------------------|
//! | i .. j        | i .. j         | left of                |
//! | j .. i        | j .. i         | right of               |
//! | i .. j        | j .. i         | below                  |
//! | j .. i        | i .. j         | above                  |

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation of `0..N`, stored as `position -> macro id` together with its
/// inverse `macro id -> position`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::invalid("permutation must have at least one element"));
        }
        let mut inv = vec![usize::MAX; n];
        for (pos, &id) in order.iter().enumerate() {
            if id >= n {
                return Err(Error::invalid(format!(
                    "permutation entry {id} out of range 0..{n}"
                )));
            }
            if inv[id] != usize::MAX {
                return Err(Error::invalid(format!("permutation repeats entry {id}")));
            }
            inv[id] = pos;
        }
        Ok(Self { order, inv })
    }

    pub fn identity(n: usize) -> Self {
        let order: Vec<usize> = (0..n).collect();
        Self {
            inv: order.clone(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Macro ids in position order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of macro `id`.
    #[inline]
    pub fn position(&self, id: usize) -> usize {
        self.inv[id]
    }

    /// All positions indexed by macro id.
    pub fn positions(&self) -> &[usize] {
        &self.inv
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        let n = order.len();
        let inv = self.inv.iter().map(|&p| n - 1 - p).collect();
        Self { order, inv }
    }

    /// Copy with the elements at positions `p` and `p + 1` exchanged.
    pub fn swap_adjacent(&self, p: usize) -> Self {
        let mut out = self.clone();
        let (a, b) = (out.order[p], out.order[p + 1]);
        out.order.swap(p, p + 1);
        out.inv[a] = p + 1;
        out.inv[b] = p;
        out
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut inv = vec![0; n];
        for (pos, &id) in order.iter().enumerate() {
            inv[id] = pos;
        }
        Self { order, inv }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Permutation::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.order
    }
}

// The inverse is a function of `order`, so comparisons only look at `order`.
impl PartialEq for Permutation {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
    }
}

impl Eq for Permutation {}

impl Hash for Permutation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.order.hash(state);
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order.cmp(&other.order)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.order)
    }
}

/// Relative location of macro `i` with respect to macro `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    LeftOf,
    RightOf,
    Below,
    Above,
}

impl Relation {
    pub fn opposite(self) -> Self {
        match self {
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
            Relation::Below => Relation::Above,
            Relation::Above => Relation::Below,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawSequencePair")]
pub struct SequencePair {
    pub pi: Permutation,
    pub pi_prime: Permutation,
}

#[derive(Deserialize)]
struct RawSequencePair {
    pi: Permutation,
    pi_prime: Permutation,
}

impl TryFrom<RawSequencePair> for SequencePair {
    type Error = Error;

    fn try_from(raw: RawSequencePair) -> Result<Self> {
        SequencePair::new(raw.pi, raw.pi_prime)
    }
}

/// Totally ordered, injective key of a sequence pair of fixed size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpKey(Box<[u32]>);

impl SequencePair {
    pub fn new(pi: Permutation, pi_prime: Permutation) -> Result<Self> {
        if pi.len() != pi_prime.len() {
            return Err(Error::invalid(format!(
                "sequence pair permutations differ in length ({} vs {})",
                pi.len(),
                pi_prime.len()
            )));
        }
        Ok(Self { pi, pi_prime })
    }

    pub fn from_orders(pi: Vec<usize>, pi_prime: Vec<usize>) -> Result<Self> {
        Self::new(Permutation::new(pi)?, Permutation::new(pi_prime)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            pi: Permutation::identity(n),
            pi_prime: Permutation::identity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Relation of macro `i` to macro `j`.
    pub fn relation(&self, i: usize, j: usize) -> Result<Relation> {
        let n = self.len();
        if i == j {
            return Err(Error::invalid(format!("relation of macro {i} to itself")));
        }
        if i >= n || j >= n {
            return Err(Error::invalid(format!(
                "macro index ({i}, {j}) out of range 0..{n}"
            )));
        }
        Ok(self.relation_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn relation_unchecked(&self, i: usize, j: usize) -> Relation {
        let first = self.pi.position(i) < self.pi.position(j);
        let second = self.pi_prime.position(i) < self.pi_prime.position(j);
        match (first, second) {
            (true, true) => Relation::LeftOf,
            (false, false) => Relation::RightOf,
            (true, false) => Relation::Below,
            (false, true) => Relation::Above,
        }
    }

    /// The 2(N-1) sequence pairs reachable by one adjacent transposition in
    /// one of the two permutations: all `pi` swaps by ascending position, then
    /// all `pi'` swaps.
    pub fn neighbors(&self) -> Vec<SequencePair> {
        let n = self.len();
        let mut out = Vec::with_capacity(2 * n.saturating_sub(1));
        for p in 0..n.saturating_sub(1) {
            out.push(SequencePair {
                pi: self.pi.swap_adjacent(p),
                pi_prime: self.pi_prime.clone(),
            });
        }
        for p in 0..n.saturating_sub(1) {
            out.push(SequencePair {
                pi: self.pi.clone(),
                pi_prime: self.pi_prime.swap_adjacent(p),
            });
        }
        out
    }

    /// Neighbor number `k` in the order of [`SequencePair::neighbors`].
    pub fn neighbor(&self, k: usize) -> SequencePair {
        let m = self.len() - 1;
        if k < m {
            SequencePair {
                pi: self.pi.swap_adjacent(k),
                pi_prime: self.pi_prime.clone(),
            }
        } else {
            SequencePair {
                pi: self.pi.clone(),
                pi_prime: self.pi_prime.swap_adjacent(k - m),
            }
        }
    }

    pub fn canonical_key(&self) -> SpKey {
        let key: Vec<u32> = self
            .pi
            .order()
            .iter()
            .chain(self.pi_prime.order())
            .map(|&v| v as u32)
            .collect();
        SpKey(key.into_boxed_slice())
    }
}

/// Uniformly random sequence pair with independently shuffled permutations.
pub fn random_sp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SequencePair> {
    if n == 0 {
        return Err(Error::invalid("random sequence pair needs n >= 1"));
    }
    let pi = Permutation::random(n, rng);
    let pi_prime = Permutation::random(n, rng);
    Ok(SequencePair { pi, pi_prime })
}

/// Number of discordant element pairs between two permutations.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> usize {
    let n = a.len();
    let mut d = 0;
    for i in 0..n {
        for j in i + 1..n {
            let x = a.position(i) < a.position(j);
            let y = b.position(i) < b.position(j);
            if x != y {
                d += 1;
            }
        }
    }
    d
}

impl fmt::Debug for SequencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.pi, self.pi_prime)
    }
}

/// `"2 0 1 / 0 1 2"`: the two orders separated by a slash.
impl fmt::Display for SequencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |p: &Permutation| {
            p.order()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(f, "{} / {}", join(&self.pi), join(&self.pi_prime))
    }
}

impl FromStr for SequencePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("sequence pair `{s}` lacks a `/` separator")))?;
        let parse = |part: &str| -> Result<Vec<usize>> {
            part.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::invalid(format!("bad permutation entry `{t}`")))
                })
                .collect()
        };
        SequencePair::from_orders(parse(a)?, parse(b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(a: &[usize], b: &[usize]) -> SequencePair {
        SequencePair::from_orders(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn relation_table_rows() {
        assert_eq!(sp(&[0, 1], &[0, 1]).relation(0, 1).unwrap(), Relation::LeftOf);
        assert_eq!(sp(&[1, 0], &[1, 0]).relation(0, 1).unwrap(), Relation::RightOf);
        assert_eq!(sp(&[0, 1], &[1, 0]).relation(0, 1).unwrap(), Relation::Below);
        assert_eq!(sp(&[1, 0], &[0, 1]).relation(0, 1).unwrap(), Relation::Above);
    }

    #[test]
    fn relation_rejects_identity_and_range() {
        let s = sp(&[0, 1], &[0, 1]);
        assert!(matches!(s.relation(0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(s.relation(0, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn permutation_rejects_bad_orders() {
        assert!(Permutation::new(vec![]).is_err());
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(SequencePair::from_orders(vec![0, 1], vec![0]).is_err());
    }

    #[test]
    fn neighbors_small_cases() {
        assert!(SequencePair::identity(1).neighbors().is_empty());
        let n = SequencePair::identity(2).neighbors();
        assert_eq!(n, vec![sp(&[1, 0], &[0, 1]), sp(&[0, 1], &[1, 0])]);
        assert_eq!(SequencePair::identity(33).neighbors().len(), 64);
    }

    #[test]
    fn neighbor_by_index_matches_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sp(6, &mut rng).unwrap();
        for (k, n) in s.neighbors().iter().enumerate() {
            assert_eq!(&s.neighbor(k), n);
        }
    }

    #[test]
    fn random_sp_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_sp(1, &mut rng).unwrap(), SequencePair::identity(1));
        assert!(random_sp(0, &mut rng).is_err());
        let a = random_sp(12, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_sp(12, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_key_distinguishes() {
        let a = sp(&[0, 1, 2], &[2, 1, 0]);
        let b = sp(&[0, 1, 2], &[2, 1, 0]);
        let c = sp(&[1, 0, 2], &[2, 1, 0]);
        assert_eq!(a.canonical_key(), b.canonical_key());
        assert_ne!(a.canonical_key(), c.canonical_key());
    }

    #[test]
    fn reversed_keeps_inverse_consistent() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let r = p.reversed();
        assert_eq!(r.order(), &[1, 3, 0, 2]);
        for (pos, &id) in r.order().iter().enumerate() {
            assert_eq!(r.position(id), pos);
        }
    }

    #[test]
    fn parse_and_display() {
        let s: SequencePair = "2 0 1 / 0,1,2".parse().unwrap();
        assert_eq!(s, sp(&[2, 0, 1], &[0, 1, 2]));
        assert_eq!(s.to_string(), "2 0 1 / 0 1 2");
        assert!("0 1".parse::<SequencePair>().is_err());
        assert!("0 1 / 0 x".parse::<SequencePair>().is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let s = sp(&[1, 2, 0], &[0, 2, 1]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"pi":[1,2,0],"pi_prime":[0,2,1]}"#);
        let back: SequencePair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.pi.position(0), 2);
        assert!(serde_json::from_str::<SequencePair>(r#"{"pi":[1,1],"pi_prime":[0,1]}"#).is_err());
        assert!(serde_json::from_str::<SequencePair>(r#"{"pi":[1,0],"pi_prime":[0]}"#).is_err());
    }
}
