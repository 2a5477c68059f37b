//! Pairs, two-cluster partitions and chains of partitions for small
//! particle counts, together with the relabeling action of the symmetric
//! group on them.
//!
//! Particle labels are `1..=N`. Every value is stored in canonical form so
//! that structural equality coincides with set equality, which in turn gives
//! stable block indices for operator assembly.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{FyError, Result};

/// Largest particle count accepted by the enumerators (bitmask width).
const MAX_PARTICLES: usize = 16;

/// An unordered pair of distinct particle labels, stored ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairIndex {
    members: [usize; 2],
}

impl PairIndex {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i == j {
            return Err(FyError::InvalidInput(format!(
                "pair needs two distinct labels >= 1, got ({i}, {j})"
            )));
        }
        Ok(Self {
            members: [i.min(j), i.max(j)],
        })
    }

    pub fn members(&self) -> [usize; 2] {
        self.members
    }

    pub fn first(&self) -> usize {
        self.members[0]
    }

    pub fn second(&self) -> usize {
        self.members[1]
    }

    pub fn contains(&self, label: usize) -> bool {
        self.members.contains(&label)
    }

    pub fn permuted(&self, pi: &Permutation) -> Self {
        let (a, b) = (pi.apply(self.members[0]), pi.apply(self.members[1]));
        Self {
            members: [a.min(b), a.max(b)],
        }
    }

    fn check_against(&self, n: usize) -> Result<()> {
        if self.members[1] > n {
            return Err(FyError::InvalidInput(format!(
                "pair {self} is not valid for {n} particles"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.members[0], self.members[1])
    }
}

/// Cluster-size signature of a two-cluster partition, larger cluster first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionKind {
    pub larger: usize,
    pub smaller: usize,
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.larger, self.smaller)
    }
}

/// A split of `1..=N` into two disjoint nonempty clusters.
///
/// Canonical form: the larger cluster comes first; between clusters of equal
/// size the one with the lexicographically smaller label list comes first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TwoClusterPartition {
    clusters: [Vec<usize>; 2],
}

impl TwoClusterPartition {
    pub fn new(first: &[usize], second: &[usize], n: usize) -> Result<Self> {
        let (a, b) = (labels_to_mask(first, n)?, labels_to_mask(second, n)?);
        if a & b != 0 || a | b != full_mask(n) || a == 0 || b == 0 {
            return Err(FyError::InvalidInput(format!(
                "{first:?} | {second:?} is not a two-cluster partition of 1..={n}"
            )));
        }
        Ok(Self::from_masks(a, b))
    }

    fn from_masks(a: u32, b: u32) -> Self {
        let (mut x, mut y) = (mask_to_labels(a), mask_to_labels(b));
        if y.len() > x.len() || (y.len() == x.len() && y < x) {
            std::mem::swap(&mut x, &mut y);
        }
        Self { clusters: [x, y] }
    }

    pub fn clusters(&self) -> &[Vec<usize>; 2] {
        &self.clusters
    }

    pub fn kind(&self) -> PartitionKind {
        PartitionKind {
            larger: self.clusters[0].len(),
            smaller: self.clusters[1].len(),
        }
    }

    /// `pair ⊂ a`: both particles of the pair sit in the same cluster.
    pub fn contains_pair(&self, pair: &PairIndex) -> bool {
        self.clusters
            .iter()
            .any(|c| c.contains(&pair.first()) && c.contains(&pair.second()))
    }

    /// Pairs internal to the clusters, in canonical pair order.
    pub fn internal_pairs(&self) -> Vec<PairIndex> {
        let mut pairs: Vec<PairIndex> = self
            .clusters
            .iter()
            .flat_map(|c| {
                c.iter().enumerate().flat_map(move |(k, &i)| {
                    c[k + 1..].iter().map(move |&j| PairIndex { members: [i, j] })
                })
            })
            .collect();
        pairs.sort();
        pairs
    }

    pub fn permuted(&self, pi: &Permutation) -> Self {
        let image = |c: &Vec<usize>| c.iter().fold(0u32, |m, &l| m | 1 << (pi.apply(l) - 1));
        Self::from_masks(image(&self.clusters[0]), image(&self.clusters[1]))
    }

    fn sort_key(&self) -> (std::cmp::Reverse<usize>, &[usize], &[usize]) {
        (
            std::cmp::Reverse(self.clusters[0].len()),
            &self.clusters[0],
            &self.clusters[1],
        )
    }
}

impl PartialOrd for TwoClusterPartition {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TwoClusterPartition {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for TwoClusterPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |c: &Vec<usize>| c.iter().map(|l| l.to_string()).collect::<String>();
        write!(f, "({})({})", join(&self.clusters[0]), join(&self.clusters[1]))
    }
}

/// A chain `aα`: a two-cluster partition together with a pair inside it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain {
    partition: TwoClusterPartition,
    pair: PairIndex,
}

impl Chain {
    pub fn new(partition: TwoClusterPartition, pair: PairIndex) -> Result<Self> {
        if !partition.contains_pair(&pair) {
            return Err(FyError::InvalidInput(format!(
                "pair {pair} is not contained in partition {partition}"
            )));
        }
        Ok(Self { partition, pair })
    }

    pub fn partition(&self) -> &TwoClusterPartition {
        &self.partition
    }

    pub fn pair(&self) -> PairIndex {
        self.pair
    }

    pub fn permuted(&self, pi: &Permutation) -> Self {
        Self {
            partition: self.partition.permuted(pi),
            pair: self.pair.permuted(pi),
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.partition, self.pair)
    }
}

/// A permutation of particle labels `1..=N`; `apply(k)` is the new label of
/// particle `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// `images[k - 1]` is the image of label `k`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i == 0 || i > n || std::mem::replace(&mut seen[i - 1], true) {
                return Err(FyError::InvalidInput(format!(
                    "{images:?} is not a permutation of 1..={n}"
                )));
            }
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (1..=n).collect(),
        }
    }

    /// Transposition of labels `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i > n || j > n {
            return Err(FyError::InvalidInput(format!(
                "transposition ({i} {j}) out of range for {n} labels"
            )));
        }
        let mut images: Vec<usize> = (1..=n).collect();
        images.swap(i - 1, j - 1);
        Ok(Self { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, label: usize) -> usize {
        self.images[label - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            images: other.images.iter().map(|&k| self.apply(k)).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (k, &i) in self.images.iter().enumerate() {
            images[i - 1] = k + 1;
        }
        Self { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(k, &i)| i == k + 1)
    }
}

/// All `n!` permutations of `1..=n` in lexicographic order of their image lists.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if prefix.len() == used.len() {
            out.push(Permutation {
                images: prefix.clone(),
            });
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k + 1);
                extend(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

fn full_mask(n: usize) -> u32 {
    (1u32 << n) - 1
}

fn labels_to_mask(labels: &[usize], n: usize) -> Result<u32> {
    let mut mask = 0u32;
    for &l in labels {
        if l == 0 || l > n || mask & (1 << (l - 1)) != 0 {
            return Err(FyError::InvalidInput(format!(
                "bad cluster {labels:?} for {n} particles"
            )));
        }
        mask |= 1 << (l - 1);
    }
    Ok(mask)
}

fn mask_to_labels(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

fn check_count(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_PARTICLES {
        return Err(FyError::InvalidInput(format!(
            "particle count {n} outside supported range {min}..={MAX_PARTICLES}"
        )));
    }
    Ok(())
}

/// All `N(N-1)/2` pairs in lexicographic order.
pub fn enumerate_pairs(n: usize) -> Result<Vec<PairIndex>> {
    check_count(n, 2)?;
    Ok((1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| PairIndex { members: [i, j] }))
        .collect())
}

/// All `2^(N-1) - 1` two-cluster partitions, larger clusters first, then
/// lexicographic.
pub fn enumerate_two_cluster_partitions(n: usize) -> Result<Vec<TwoClusterPartition>> {
    check_count(n, 3)?;
    let full = full_mask(n);
    let top = 1u32 << (n - 1);
    // Masks without the highest label enumerate each bipartition exactly once.
    let mut parts: Vec<TwoClusterPartition> = (1..top)
        .map(|m| TwoClusterPartition::from_masks(m, full & !m))
        .collect();
    parts.sort();
    Ok(parts)
}

/// Chains `aα`, partition-major then pair-minor.
///
/// For `N = 3` every pair lies in exactly one partition, so the three chains
/// are the bare pairs in disguise; this lets the Faddeev and Yakubovsky
/// machinery share one index layout.
pub fn enumerate_chains(n: usize) -> Result<Vec<Chain>> {
    if n != 3 && n != 4 {
        return Err(FyError::InvalidInput(format!(
            "chains are only defined here for 3 or 4 particles, got {n}"
        )));
    }
    Ok(enumerate_two_cluster_partitions(n)?
        .into_iter()
        .flat_map(|a| {
            a.internal_pairs()
                .into_iter()
                .map(move |pair| Chain {
                    partition: a.clone(),
                    pair,
                })
        })
        .collect())
}

/// All partitions `a` with `pair ⊂ a`, in canonical partition order.
pub fn partitions_containing(pair: &PairIndex, n: usize) -> Result<Vec<TwoClusterPartition>> {
    pair.check_against(n)?;
    Ok(enumerate_two_cluster_partitions(n)?
        .into_iter()
        .filter(|a| a.contains_pair(pair))
        .collect())
}

/// Outcome of [`verify_chain_identity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainIdentityReport {
    pub chains_checked: usize,
    pub pairs_checked: usize,
}

/// Checks the two index identities behind the Yakubovsky equations.
///
/// 1. For every chain `aα`, the multiset `{(b, β) : β ⊂ a, β ≠ α, b ⊃ β}`
///    (built from [`partitions_containing`]) equals the multiset of valid
///    chains `bβ` with `β ⊂ a, β ≠ α` (filtered from [`enumerate_chains`]).
/// 2. For every pair `α`, the pairs `β ≠ α` collected over all partitions
///    `a ⊃ α` with `β ⊂ a` are exactly the other pairs, each once.
pub fn verify_chain_identity(n: usize) -> Result<ChainIdentityReport> {
    if n != 4 {
        return Err(FyError::InvalidInput(format!(
            "the chain identity is checked for 4 particles, got {n}"
        )));
    }
    let chains = enumerate_chains(n)?;
    let pairs = enumerate_pairs(n)?;

    for chain in &chains {
        let a = chain.partition();
        let alpha = chain.pair();
        let mut via_partitions: Vec<Chain> = Vec::new();
        for beta in a.internal_pairs().into_iter().filter(|b| *b != alpha) {
            for b in partitions_containing(&beta, n)? {
                via_partitions.push(Chain::new(b, beta)?);
            }
        }
        let mut via_chains: Vec<Chain> = chains
            .iter()
            .filter(|c| c.pair() != alpha && a.contains_pair(&c.pair()))
            .cloned()
            .collect();
        via_partitions.sort();
        via_chains.sort();
        if via_partitions != via_chains {
            return Err(FyError::InternalConsistency(format!(
                "double-sum reordering fails for chain {chain}"
            )));
        }
    }

    for alpha in &pairs {
        let mut counts: BTreeMap<PairIndex, usize> = BTreeMap::new();
        for a in partitions_containing(alpha, n)? {
            for beta in a.internal_pairs().into_iter().filter(|b| b != alpha) {
                *counts.entry(beta).or_default() += 1;
            }
        }
        let others: Vec<PairIndex> = pairs.iter().copied().filter(|b| b != alpha).collect();
        let collected: Vec<PairIndex> = counts.keys().copied().collect();
        if collected != others || counts.values().any(|&c| c != 1) {
            return Err(FyError::InternalConsistency(format!(
                "pairs reached from {alpha} through its partitions: {counts:?}"
            )));
        }
    }

    Ok(ChainIdentityReport {
        chains_checked: chains.len(),
        pairs_checked: pairs.len(),
    })
}

/// An orbit of chains under relabeling; `members` are indices into the
/// canonical chain list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOrbit {
    pub id: usize,
    pub members: Vec<usize>,
}

/// Orbits of the symmetric group `S_N` acting on chains. Orbit ids follow the
/// first appearance of a member in canonical chain order.
pub fn chain_orbits(n: usize) -> Result<Vec<ChainOrbit>> {
    let chains = enumerate_chains(n)?;
    let perms = all_permutations(n);
    let index: BTreeMap<&Chain, usize> = chains.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut orbit_of = vec![usize::MAX; chains.len()];
    let mut orbits = Vec::new();
    for (i, chain) in chains.iter().enumerate() {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members: Vec<usize> = perms
            .iter()
            .map(|p| index[&chain.permuted(p)])
            .collect();
        members.sort_unstable();
        members.dedup();
        for &m in &members {
            orbit_of[m] = id;
        }
        orbits.push(ChainOrbit { id, members });
    }
    Ok(orbits)
}

/// Orbit id of every chain, aligned with [`enumerate_chains`].
pub fn chain_orbit_ids(n: usize) -> Result<Vec<usize>> {
    let orbits = chain_orbits(n)?;
    let mut ids = vec![0; orbits.iter().map(|o| o.members.len()).sum()];
    for orbit in &orbits {
        for &m in &orbit.members {
            ids[m] = orbit.id;
        }
    }
    Ok(ids)
}
