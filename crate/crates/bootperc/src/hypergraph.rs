//! Random k-uniform hypergraph generation and representation.
//!
//! Two generation paths produce the same edge distribution: a deterministic
//! membership oracle (exhaustive enumeration, tiny n only) and an explicit
//! sampler drawing a binomial edge count followed by rejection sampling.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// SplitMix64 finalizer. Bijective on u64; the avalanche stage only.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed 64-bit mixer: finalize the key, xor with the finalized input,
/// finalize again. Pure function of (seed, x).
pub fn mix64(seed: u64, x: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(x))
}

/// Positional fold of ascending vertex ids: each id is combined with an
/// index-dependent odd multiplier before being mixed into the accumulator,
/// so permuted or shifted sequences hash differently.
fn fold_vertices(vertices: &[u32]) -> u64 {
    let mut acc: u64 = 0x51_7c_c1_b7_27_22_0a_95;
    for (i, &v) in vertices.iter().enumerate() {
        let pos_mult = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(2 * i as u64 + 1);
        acc = splitmix64(acc ^ (u64::from(v) + 1).wrapping_mul(pos_mult));
    }
    acc
}

/// A canonical k-set: strictly ascending vertex ids, length exactly k.
/// Equality and ordering are lexicographic on the sorted sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KSet(Vec<u32>);

impl KSet {
    /// Sorts, validates and canonicalizes a vertex sequence.
    pub fn new(mut vertices: Vec<u32>, k: usize, n: u32) -> Result<Self> {
        if vertices.len() != k {
            return Err(Error::WrongArity {
                expected: k,
                got: vertices.len(),
            });
        }
        vertices.sort_unstable();
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVertex(w[0]));
            }
        }
        if let Some(&v) = vertices.last() {
            if v >= n {
                return Err(Error::OutOfRange { vertex: v, n });
            }
        }
        Ok(KSet(vertices))
    }

    /// Internal constructor for vertices already strictly ascending and in range.
    pub(crate) fn from_sorted_unchecked(vertices: Vec<u32>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        KSet(vertices)
    }

    pub fn vertices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

/// See [`KSet::new`].
pub fn canonical_kset(vertices: &[u32], k: usize, n: u32) -> Result<KSet> {
    KSet::new(vertices.to_vec(), k, n)
}

/// Deterministic edge-membership oracle: a k-set is present iff a keyed hash
/// of its vertex ids falls below `threshold`, giving marginal probability
/// threshold / 2^64 independently across k-sets (up to hash quality).
#[derive(Clone, Debug)]
pub struct EdgeOracle {
    pub n: u32,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
    pub threshold: u64,
    saturated: bool,
}

impl EdgeOracle {
    pub fn new(n: u32, k: usize, p: f64, seed: u64) -> Self {
        // p >= 1 must answer true for every k-set; a strict `< threshold`
        // comparison cannot express that, so it is flagged separately.
        let saturated = p >= 1.0;
        let threshold = if p <= 0.0 {
            0
        } else if saturated {
            u64::MAX
        } else {
            (p * 18_446_744_073_709_551_616.0) as u64
        };
        EdgeOracle {
            n,
            k,
            p,
            seed,
            threshold,
            saturated,
        }
    }

    pub fn edge_present(&self, e: &KSet) -> bool {
        if self.saturated {
            return true;
        }
        mix64(self.seed, fold_vertices(e.vertices())) < self.threshold
    }
}

/// Exact C(n, k) in u128, or None on overflow.
pub fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Explicit k-uniform hypergraph: sorted deduplicated edge list plus
/// per-vertex incidence lists. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: u32,
    k: usize,
    edges: Vec<KSet>,
    incidence: Vec<Vec<u32>>,
}

impl Hypergraph {
    pub fn from_edges(n: u32, k: usize, mut edges: Vec<KSet>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut incidence = vec![Vec::new(); n as usize];
        for (idx, e) in edges.iter().enumerate() {
            debug_assert_eq!(e.len(), k);
            for &v in e.vertices() {
                incidence[v as usize].push(idx as u32);
            }
        }
        Hypergraph {
            n,
            k,
            edges,
            incidence,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[KSet] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn incidence(&self, v: u32) -> &[u32] {
        &self.incidence[v as usize]
    }

    pub fn edge(&self, idx: usize) -> &KSet {
        &self.edges[idx]
    }

    pub fn contains_edge(&self, e: &KSet) -> bool {
        self.edges.binary_search(e).is_ok()
    }

    /// Distinct vertices sharing at least one edge with v, excluding v.
    pub fn neighbours(&self, v: u32) -> Result<Vec<u32>> {
        if v >= self.n {
            return Err(Error::OutOfRange { vertex: v, n: self.n });
        }
        let mut out: Vec<u32> = Vec::new();
        for &e in &self.incidence[v as usize] {
            for &w in self.edges[e as usize].vertices() {
                if w != v {
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Text serialization: "n k m" then m lexicographically sorted lines of
    /// k ascending space-separated vertex ids.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.n, self.k, self.edges.len());
        for e in &self.edges {
            let ids: Vec<String> = e.vertices().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", ids.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = || Error::TooLarge("malformed hypergraph text".to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(parse_err)?;
        let parts: Vec<u64> = header
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|_| parse_err()))
            .collect::<Result<_>>()?;
        if parts.len() != 3 {
            return Err(parse_err());
        }
        let (n, k, m) = (parts[0] as u32, parts[1] as usize, parts[2] as usize);
        let mut edges = Vec::with_capacity(m);
        for line in lines.take(m) {
            let vs: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|_| parse_err()))
                .collect::<Result<_>>()?;
            edges.push(KSet::new(vs, k, n)?);
        }
        if edges.len() != m {
            return Err(parse_err());
        }
        Ok(Hypergraph::from_edges(n, k, edges))
    }
}

/// Visits every k-subset of [0, n) in lexicographic order.
pub(crate) fn for_each_kset(n: u32, k: usize, mut f: impl FnMut(&[u32])) {
    if k == 0 || (k as u64) > u64::from(n) {
        return;
    }
    let mut cur: Vec<u32> = (0..k as u32).collect();
    loop {
        f(&cur);
        // advance to next lexicographic combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < n - (k - i) as u32 {
                break;
            }
            if i == 0 {
                return;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Enumerates all C(n,k) k-sets and keeps those the oracle reports present.
pub fn materialize_from_oracle(oracle: &EdgeOracle) -> Result<Hypergraph> {
    let total = binom_u128(u64::from(oracle.n), oracle.k as u64)
        .ok_or_else(|| Error::TooLarge("C(n,k) overflows".to_string()))?;
    if total > 10_000_000 {
        return Err(Error::TooLarge(format!(
            "C(n,k) = {} exceeds exhaustive cap 10^7",
            total
        )));
    }
    let mut edges = Vec::new();
    for_each_kset(oracle.n, oracle.k, |vs| {
        let e = KSet::from_sorted_unchecked(vs.to_vec());
        if oracle.edge_present(&e) {
            edges.push(e);
        }
    });
    Ok(Hypergraph::from_edges(oracle.n, oracle.k, edges))
}

/// Draws m ~ Binomial(C(n,k), p), then m distinct uniform k-sets by
/// rejection against a membership set. Distribution equals the oracle path.
pub fn sample_explicit(n: u32, k: usize, p: f64, seed: u64) -> Result<Hypergraph> {
    let total = binom_u128(u64::from(n), k as u64)
        .ok_or_else(|| Error::TooLarge("C(n,k) overflows".to_string()))?;
    if total > u128::from(u64::MAX) {
        return Err(Error::TooLarge("C(n,k) exceeds u64".to_string()));
    }
    let expected = total as f64 * p.clamp(0.0, 1.0);
    if expected > 1e8 {
        return Err(Error::TooLarge(format!(
            "expected edge count {:.3e} exceeds cap 10^8",
            expected
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Binomial::new(total as u64, p.clamp(0.0, 1.0))
        .expect("p clamped to [0,1]")
        .sample(&mut rng) as usize;
    let mut seen: HashSet<KSet> = HashSet::with_capacity(m * 2);
    let mut scratch: Vec<u32> = Vec::with_capacity(k);
    while seen.len() < m {
        scratch.clear();
        while scratch.len() < k {
            let v = rng.random_range(0..n);
            if !scratch.contains(&v) {
                scratch.push(v);
            }
        }
        let mut vs = scratch.clone();
        vs.sort_unstable();
        seen.insert(KSet::from_sorted_unchecked(vs));
    }
    Ok(Hypergraph::from_edges(n, k, seen.into_iter().collect()))
}

/// Counts unordered ℓ-tuples of edges that each contain exactly one vertex
/// of `u_set` and none of `vp`, and can be ordered into a chain where
/// consecutive edges share a vertex outside u_set ∪ vp. With `strong`,
/// additionally some pair of the tuple must intersect in ≥ 2 vertices
/// (shared vertices of any kind count there).
pub fn count_intersecting_tuples(
    h: &Hypergraph,
    u_set: &[u32],
    vp: &[u32],
    ell: usize,
    strong: bool,
) -> u64 {
    assert!(ell >= 2, "tuple length must be at least 2");
    let in_u: HashSet<u32> = u_set.iter().copied().collect();
    let in_vp: HashSet<u32> = vp.iter().copied().collect();
    debug_assert!(in_u.is_disjoint(&in_vp));

    let candidates: Vec<usize> = (0..h.num_edges())
        .filter(|&i| {
            let e = h.edge(i);
            let hits_u = e.vertices().iter().filter(|v| in_u.contains(v)).count();
            hits_u == 1 && !e.vertices().iter().any(|v| in_vp.contains(v))
        })
        .collect();

    let free_shared = |a: usize, b: usize| -> bool {
        h.edge(a)
            .vertices()
            .iter()
            .any(|&v| h.edge(b).contains(v) && !in_u.contains(&v) && !in_vp.contains(&v))
    };
    let shared_count = |a: usize, b: usize| -> usize {
        h.edge(a)
            .vertices()
            .iter()
            .filter(|&&v| h.edge(b).contains(v))
            .count()
    };

    let mut found: HashSet<Vec<usize>> = HashSet::new();
    let mut chain: Vec<usize> = Vec::with_capacity(ell);

    fn extend(
        chain: &mut Vec<usize>,
        ell: usize,
        candidates: &[usize],
        free_shared: &dyn Fn(usize, usize) -> bool,
        found: &mut HashSet<Vec<usize>>,
    ) {
        if chain.len() == ell {
            let mut key = chain.clone();
            key.sort_unstable();
            found.insert(key);
            return;
        }
        let last = *chain.last().expect("chain is never empty here");
        for &c in candidates {
            if !chain.contains(&c) && free_shared(last, c) {
                chain.push(c);
                extend(chain, ell, candidates, free_shared, found);
                chain.pop();
            }
        }
    }

    for &start in &candidates {
        chain.push(start);
        extend(&mut chain, ell, &candidates, &free_shared, &mut found);
        chain.pop();
    }

    if strong {
        found
            .iter()
            .filter(|tuple| {
                tuple.iter().enumerate().any(|(i, &a)| {
                    tuple[i + 1..].iter().any(|&b| shared_count(a, b) >= 2)
                })
            })
            .count() as u64
    } else {
        found.len() as u64
    }
}
