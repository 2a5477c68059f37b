//! Four-body components indexed by chains `aα`, the 18×18 block operator they
//! satisfy, and the identities tying them back to Faddeev components.
//!
//! Row `aα` of the operator reads
//!
//! ```text
//! (H0 + Vα − z) ψ_{aα} + Vα Σ_{b} Σ_{β≠α, β⊂a, β⊂b} ψ_{bβ} = 0
//! ```
//!
//! where the inner sum only runs over valid chains `bβ`. The `b = a` terms are
//! the "same partition" couplings; the rest link chains of different
//! partitions that share the pair `β`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::blockops::{
    dense_eigenvalues, BlockOperator, DenseLu, EigenResult, EigenStrategy, LinearOperator, Operator, SolveRequest,
};
use crate::combinatorics::{chain_orbits, enumerate_chains, enumerate_pairs, Chain, PairIndex, Permutation};
use crate::error::{FyError, Result};
use crate::faddeev::{norm_floor, FaddeevComponents, FewBodySplit};
use crate::lattice::{build_split, covariance_defect, LatticeModel, PermutationOperator};

/// Distance below which an eigenvalue is reported as sitting on a channel
/// or free spectrum point.
pub const SPURIOUS_PROXIMITY: f64 = 1e-6;

/// Covariance defects above this make the symmetry check meaningless.
const COVARIANCE_TOL: f64 = 1e-12;

/// How far `|⟨Ψ, UΨ⟩| / ‖Ψ‖²` may sit from 1 before `Ψ` is treated as not
/// being a `U` eigenvector (a degenerate level).
const SYMMETRY_OVERLAP_TOL: f64 = 1e-6;

/// Index layout for the couplings of one set of chains.
#[derive(Debug, Clone, PartialEq)]
struct ChainLayout {
    pairs: Vec<PairIndex>,
    chains: Vec<Chain>,
    /// Pair slot of each chain's `α`.
    chain_pair: Vec<usize>,
    /// Pair slots `β ≠ α` with `β ⊂ a`, per chain.
    sources: Vec<Vec<usize>>,
    /// Chains `bβ` with `β ≠ α`, `β ⊂ a`, `β ⊂ b`, per chain.
    couplings: Vec<Vec<usize>>,
}

impl ChainLayout {
    fn new(n: usize) -> Result<Self> {
        let pairs = enumerate_pairs(n)?;
        let chains = enumerate_chains(n)?;
        let slot: BTreeMap<PairIndex, usize> = pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let chain_pair = chains.iter().map(|c| slot[&c.pair()]).collect();
        let sources = chains
            .iter()
            .map(|c| {
                c.partition()
                    .internal_pairs()
                    .into_iter()
                    .filter(|b| *b != c.pair())
                    .map(|b| slot[&b])
                    .collect()
            })
            .collect();
        let couplings = chains
            .iter()
            .map(|c| {
                chains
                    .iter()
                    .enumerate()
                    .filter(|(_, other)| other.pair() != c.pair() && c.partition().contains_pair(&other.pair()))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            pairs,
            chains,
            chain_pair,
            sources,
            couplings,
        })
    }
}

/// Sparsity table of the four-body block operator: `table[r][c]` is the pair
/// whose potential sits in block `(r, c)`, rows and columns in canonical
/// chain order. Diagonal cells carry the chain's own pair.
pub fn yakubovsky_pattern() -> Result<Vec<Vec<Option<PairIndex>>>> {
    let layout = ChainLayout::new(4)?;
    let m = layout.chains.len();
    Ok((0..m)
        .map(|r| {
            let alpha = layout.chains[r].pair();
            (0..m)
                .map(|c| (c == r || layout.couplings[r].contains(&c)).then_some(alpha))
                .collect()
        })
        .collect())
}

/// A four-body split together with its 18 chains.
#[derive(Debug, Clone)]
pub struct YakubovskySystem {
    split: FewBodySplit,
    layout: ChainLayout,
}

impl YakubovskySystem {
    /// Potential `k` of `split` belongs to the `k`-th pair in canonical order
    /// (12, 13, 14, 23, 24, 34).
    pub fn new(split: FewBodySplit) -> Result<Self> {
        if split.n() != 6 {
            return Err(FyError::InvalidInput(format!(
                "a four-body system needs 6 pair potentials, got {}",
                split.n()
            )));
        }
        Ok(Self {
            split,
            layout: ChainLayout::new(4)?,
        })
    }

    pub fn from_model(model: &LatticeModel) -> Result<Self> {
        if model.particles() != 4 {
            return Err(FyError::InvalidInput(format!(
                "a four-body system needs 4 particles, got {}",
                model.particles()
            )));
        }
        Self::new(build_split(model)?)
    }

    pub fn split(&self) -> &FewBodySplit {
        &self.split
    }

    pub fn pairs(&self) -> &[PairIndex] {
        &self.layout.pairs
    }

    pub fn chains(&self) -> &[Chain] {
        &self.layout.chains
    }

    pub fn dim(&self) -> usize {
        self.split.dim()
    }

    /// Slot of `pair` among the six potentials.
    pub fn pair_slot(&self, pair: &PairIndex) -> Option<usize> {
        self.layout.pairs.iter().position(|p| p == pair)
    }

    /// Pair slot of chain `k`'s pair.
    pub fn chain_pair_slot(&self, k: usize) -> usize {
        self.layout.chain_pair[k]
    }

    /// Pair slots `β ≠ α` with `β ⊂ a` for chain `k = aα`.
    pub fn sources(&self, k: usize) -> &[usize] {
        &self.layout.sources[k]
    }

    /// Chains coupled into row `k` by the off-diagonal blocks.
    pub fn couplings(&self, k: usize) -> &[usize] {
        &self.layout.couplings[k]
    }
}

/// Components indexed by chains, aligned with the canonical chain list.
///
/// For three particles the chains are the degenerate `(ij)(k):ij` ones and the
/// components are the Faddeev components.
#[derive(Debug, Clone, PartialEq)]
pub struct YakubovskyComponents {
    pub z: f64,
    pub particles: usize,
    pub chains: Vec<Chain>,
    pub components: Vec<DVector<f64>>,
}

impl YakubovskyComponents {
    pub fn get(&self, chain: &Chain) -> Option<&DVector<f64>> {
        self.chains.iter().position(|c| c == chain).map(|k| &self.components[k])
    }

    /// `Σ` over all chains; equals `Ψ` for components of an eigenpair.
    pub fn sum(&self) -> DVector<f64> {
        let d = self.components.first().map_or(0, |c| c.len());
        self.components.iter().fold(DVector::zeros(d), |acc, c| acc + c)
    }

    pub fn stacked_norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Faddeev components of a three-body problem, re-indexed by the
    /// degenerate chains. `faddeev` must follow canonical pair order.
    pub fn from_three_body(faddeev: &FaddeevComponents) -> Result<Self> {
        let layout = ChainLayout::new(3)?;
        if faddeev.components.len() != 3 {
            return Err(FyError::InvalidInput(format!(
                "three-body chains need 3 Faddeev components, got {}",
                faddeev.components.len()
            )));
        }
        let components = layout
            .chain_pair
            .iter()
            .map(|&slot| faddeev.components[slot].clone())
            .collect();
        Ok(Self {
            z: faddeev.z,
            particles: 3,
            chains: layout.chains,
            components,
        })
    }
}

fn check_four_body(sys: &YakubovskySystem, comps: &YakubovskyComponents) -> Result<()> {
    if comps.chains.as_slice() != sys.chains() {
        return Err(FyError::InvalidInput("components are not laid out on the four-body chains".into()));
    }
    if comps.components.iter().any(|c| c.len() != sys.dim()) {
        return Err(FyError::InvalidInput("component length differs from the system dimension".into()));
    }
    Ok(())
}

/// `ψ_{aα} = −(H0 + Vα − z)⁻¹ Vα Σ_{β≠α, β⊂a} ψβ` for all 18 chains.
///
/// A chain whose source vanishes identically gets a zero component without
/// touching its channel operator, so exactly-zero potentials never need a
/// regular channel resolvent.
pub fn yakubovsky_components(
    sys: &YakubovskySystem,
    z: f64,
    faddeev: &FaddeevComponents,
) -> Result<YakubovskyComponents> {
    if faddeev.components.len() != 6 || faddeev.components.iter().any(|c| c.len() != sys.dim()) {
        return Err(FyError::InvalidInput("expected 6 Faddeev components of the system dimension".into()));
    }
    let split = &sys.split;
    let mut factored: BTreeMap<usize, DenseLu> = BTreeMap::new();
    let mut components = Vec::with_capacity(sys.chains().len());
    for k in 0..sys.chains().len() {
        let alpha = sys.chain_pair_slot(k);
        let summed = sys
            .sources(k)
            .iter()
            .fold(DVector::zeros(sys.dim()), |acc, &b| acc + &faddeev.components[b]);
        let source = split.potential(alpha).apply(&summed);
        if source.iter().all(|&s| s == 0.0) {
            components.push(DVector::zeros(sys.dim()));
            continue;
        }
        if !factored.contains_key(&alpha) {
            factored.insert(alpha, split.channel_resolvent(alpha, z)?);
        }
        components.push(-factored[&alpha].solve(&source));
    }
    Ok(YakubovskyComponents {
        z,
        particles: 4,
        chains: sys.chains().to_vec(),
        components,
    })
}

/// Outcome of [`chain_sum_consistency`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSumReport {
    /// `‖Σ_{a⊃α} ψ_{aα} − ψα‖ / max(‖ψα‖, ε)` per pair slot.
    pub per_pair: Vec<f64>,
    /// `‖Σ_{all chains} ψ_{aα} − Σα ψα‖ / max(‖Σα ψα‖, ε)`.
    pub total: f64,
}

impl ChainSumReport {
    pub fn max(&self) -> f64 {
        self.per_pair.iter().copied().fold(self.total, f64::max)
    }
}

pub fn chain_sum_consistency(
    sys: &YakubovskySystem,
    comps: &YakubovskyComponents,
    faddeev: &FaddeevComponents,
) -> Result<ChainSumReport> {
    check_four_body(sys, comps)?;
    if faddeev.components.len() != 6 {
        return Err(FyError::InvalidInput("expected 6 Faddeev components".into()));
    }
    if comps.z != faddeev.z {
        return Err(FyError::InvalidInput(format!(
            "energies differ: {} for the chains, {} for the pairs",
            comps.z, faddeev.z
        )));
    }
    let eps = norm_floor(faddeev.components.iter().map(|c| c.norm()));
    let per_pair = (0..6)
        .map(|alpha| {
            let summed = (0..comps.components.len())
                .filter(|&k| sys.chain_pair_slot(k) == alpha)
                .fold(DVector::zeros(sys.dim()), |acc, k| acc + &comps.components[k]);
            let target = &faddeev.components[alpha];
            (summed - target).norm() / target.norm().max(eps)
        })
        .collect();
    let psi = faddeev.sum();
    let total = (comps.sum() - &psi).norm() / psi.norm().max(eps);
    Ok(ChainSumReport { per_pair, total })
}

/// The 18×18 block operator: `H0 + Vα` on the diagonal of row `aα`, `Vα` in
/// every column `bβ` with `β ≠ α`, `β ⊂ a`, `β ⊂ b`.
pub fn assemble_yakubovsky_operator(sys: &YakubovskySystem) -> Result<BlockOperator> {
    let m = sys.chains().len();
    let mut block = BlockOperator::new(m, sys.dim());
    for k in 0..m {
        let alpha = sys.chain_pair_slot(k);
        block.set(k, k, sys.split.channel(alpha)?)?;
        let v = sys.split.potential(alpha);
        for &j in sys.couplings(k) {
            block.set(k, j, v.clone())?;
        }
    }
    Ok(block)
}

/// Per-chain residual of the four-body equations, each normalized by
/// `max(‖ψ_{aα}‖, ε)`.
pub fn yakubovsky_residual(sys: &YakubovskySystem, comps: &YakubovskyComponents) -> Result<Vec<f64>> {
    check_four_body(sys, comps)?;
    let split = &sys.split;
    let eps = norm_floor(comps.components.iter().map(|c| c.norm()));
    Ok((0..comps.components.len())
        .map(|k| {
            let alpha = sys.chain_pair_slot(k);
            let v = split.potential(alpha);
            let psi = &comps.components[k];
            let coupled = sys
                .couplings(k)
                .iter()
                .fold(DVector::zeros(sys.dim()), |acc, &j| acc + &comps.components[j]);
            let r = split.h0().apply(psi) + v.apply(psi) - psi * comps.z + v.apply(&coupled);
            r.norm() / psi.norm().max(eps)
        })
        .collect())
}

/// An eigenpair of the four-body block operator split into chain components.
#[derive(Debug, Clone)]
pub struct FourBodySolution {
    pub eigen: EigenResult,
    pub components: YakubovskyComponents,
    /// `‖Σ ψ_{aα}‖ / ‖(ψ_{aα})‖`; near zero when the sum vanishes.
    pub sum_fraction: f64,
    /// Set when the eigenvalue sits within [`SPURIOUS_PROXIMITY`] of `σ(H0)`
    /// or some `σ(H0 + Vα)`.
    pub spurious_warning: Option<String>,
}

impl FourBodySolution {
    /// `Ψ = Σ ψ_{aα}` normalized to unit length.
    pub fn wave_function(&self) -> DVector<f64> {
        let psi = self.components.sum();
        let n = psi.norm();
        if n > 0.0 {
            psi / n
        } else {
            psi
        }
    }
}

/// Solves the four-body block eigenproblem near `target`.
///
/// The proximity scan against `σ(H0)` and the channel spectra runs only when
/// `d` fits under `dense_limit`.
pub fn solve_fourbody_ground_state(
    sys: &YakubovskySystem,
    strategy: &dyn EigenStrategy,
    target: f64,
    tol: f64,
    max_iter: usize,
    dense_limit: usize,
) -> Result<FourBodySolution> {
    let m = assemble_yakubovsky_operator(sys)?;
    let eigen = strategy.solve(&SolveRequest {
        a: &m,
        b: None,
        target,
        tol,
        max_iter,
        dense_limit,
    })?;
    let components = YakubovskyComponents {
        z: eigen.eigenvalue,
        particles: 4,
        chains: sys.chains().to_vec(),
        components: m.split(&eigen.eigenvector),
    };
    let sum_fraction = components.sum().norm() / eigen.eigenvector.norm();
    let spurious_warning = if sys.dim() <= dense_limit {
        spurious_proximity(sys, eigen.eigenvalue, dense_limit)?
    } else {
        None
    };
    Ok(FourBodySolution {
        eigen,
        components,
        sum_fraction,
        spurious_warning,
    })
}

fn spurious_proximity(sys: &YakubovskySystem, z: f64, dense_limit: usize) -> Result<Option<String>> {
    let near = |op: &Operator| -> Result<Option<f64>> {
        Ok(dense_eigenvalues(op, dense_limit)?
            .into_iter()
            .map(|lambda| (lambda.re - z).hypot(lambda.im))
            .filter(|&dist| dist <= SPURIOUS_PROXIMITY)
            .reduce(f64::min))
    };
    if let Some(dist) = near(sys.split.h0())? {
        return Ok(Some(format!("eigenvalue {z} lies {dist:.1e} from the free spectrum")));
    }
    for alpha in 0..6 {
        if let Some(dist) = near(&sys.split.channel(alpha)?)? {
            return Ok(Some(format!(
                "eigenvalue {z} lies {dist:.1e} from the spectrum of H0 + V{}",
                sys.pairs()[alpha]
            )));
        }
    }
    Ok(None)
}

/// One permutation's contribution to a [`SymmetryReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationCheck {
    pub permutation: Permutation,
    /// `⟨Ψ, UΨ⟩ / ‖Ψ‖²`.
    pub overlap: f64,
    /// Sign `s` with `UΨ = sΨ`, or `None` when the check was skipped.
    pub sign: Option<f64>,
    /// `max_{aα} ‖U ψ_{aα} − s ψ_{π(a)π(α)}‖ / ‖(ψ_{aα})‖`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub checks: Vec<PermutationCheck>,
    /// Largest deviation over chains in each orbit, by orbit id.
    pub orbit_deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Why some permutations were skipped, if any were.
    pub notice: Option<String>,
}

/// Checks `U_π ψ_{aα} = s(π) ψ_{π(a)π(α)}` for every given permutation,
/// with `s(π)` measured from `Ψ = Σ ψ_{aα}`.
///
/// `split` must carry the potentials of `pairs` in order; its covariance
/// under each `U_π` is verified first. A permutation under which `Ψ` is not
/// an eigenvector (a degenerate level) is skipped and reported in `notice`.
pub fn component_symmetry_check(
    split: &FewBodySplit,
    pairs: &[PairIndex],
    comps: &YakubovskyComponents,
    perms: &[PermutationOperator],
) -> Result<SymmetryReport> {
    let n = comps.particles;
    let orbits = chain_orbits(n)?;
    if comps.components.len() != comps.chains.len() || comps.chains != enumerate_chains(n)? {
        return Err(FyError::InvalidInput("components are not laid out on the canonical chains".into()));
    }
    let index: BTreeMap<&Chain, usize> = comps.chains.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let psi = comps.sum();
    let psi_sq = psi.norm_squared();
    if psi_sq == 0.0 {
        return Err(FyError::InvalidInput("components sum to zero".into()));
    }
    let scale = comps.stacked_norm();
    let mut orbit_deviation = vec![0.0_f64; orbits.len()];
    let mut orbit_of = vec![0; comps.chains.len()];
    for orbit in &orbits {
        for &k in &orbit.members {
            orbit_of[k] = orbit.id;
        }
    }

    let mut checks = Vec::with_capacity(perms.len());
    let mut skipped = 0;
    for u in perms {
        let pi = u.permutation();
        if pi.len() != n {
            return Err(FyError::InvalidInput(format!("permutation of {} labels for {n} particles", pi.len())));
        }
        let defect = covariance_defect(split, pairs, u)?;
        if defect > COVARIANCE_TOL {
            return Err(FyError::InvalidInput(format!(
                "potentials are not covariant under {:?} (defect {defect:e})",
                pi.images()
            )));
        }
        let overlap = psi.dot(&u.apply(&psi)) / psi_sq;
        if (overlap.abs() - 1.0).abs() > SYMMETRY_OVERLAP_TOL {
            skipped += 1;
            checks.push(PermutationCheck {
                permutation: pi.clone(),
                overlap,
                sign: None,
                deviation: 0.0,
            });
            continue;
        }
        let s = overlap.signum();
        let mut deviation: f64 = 0.0;
        for (k, chain) in comps.chains.iter().enumerate() {
            let image = index[&chain.permuted(pi)];
            let d = (u.apply(&comps.components[k]) - &comps.components[image] * s).norm() / scale;
            orbit_deviation[orbit_of[k]] = orbit_deviation[orbit_of[k]].max(d);
            deviation = deviation.max(d);
        }
        checks.push(PermutationCheck {
            permutation: pi.clone(),
            overlap,
            sign: Some(s),
            deviation,
        });
    }
    let max_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let notice = (skipped > 0).then(|| {
        format!("{skipped} of {} permutations skipped: the state is not an eigenvector of them (degenerate level)", perms.len())
    });
    Ok(SymmetryReport {
        checks,
        orbit_deviation,
        max_deviation,
        notice,
    })
}
