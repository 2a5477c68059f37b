//! Hard-core pair interactions: the component sum is forced to vanish inside
//! each pair's core, potentials are zero there, and the result is checked
//! against direct diagonalization on the configurations outside all cores.
//!
//! Three-body solves go through a matrix pencil `(A, B)`. `A` is the Faddeev
//! operator with, for every pair `α` and core site `s`, row `(α, s)` replaced
//! by `Σβ ψβ(s) = 0`; `B` is the identity with those rows zeroed. When a site
//! lies in several cores only the first pair (canonical order) takes the
//! constraint and the others keep their original row, which reduces to the
//! free row `((H0 − z) ψα)(s) = 0` because `Vα` vanishes there.
//!
//! Summing the unconstrained rows over `α` at a site outside every core gives
//! the Schrödinger equation there, and the constraints give `Ψ = 0` on the
//! union of cores, so every pencil root with `Ψ ≠ 0` is an eigenvalue of the
//! restricted problem. This holds whatever the overlap pattern of the cores.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::blockops::{selector_pencil_eigenvalues, shift_invert_eigenpair, BlockOperator, EigenResult, LinearOperator, Operator, ShiftInvertOptions};
use crate::combinatorics::PairIndex;
use crate::error::{FyError, Result};
use crate::faddeev::{assemble_faddeev_operator, FaddeevComponents, FewBodySplit};
use crate::lattice::{build_hamiltonian, build_split, symmetric_lowest, LatticeModel, DENSE_ORACLE_CAP};
use crate::yakubovsky::{yakubovsky_components, YakubovskyComponents, YakubovskySystem};

/// Largest `max_core |Ψ| / ‖Ψ‖` for an accepted solution.
pub const CORE_VANISHING_TOL: f64 = 1e-10;

/// Largest restricted-equation residual `/ max(1, |z|)` for an accepted
/// solution.
pub const RESTRICTED_RESIDUAL_TOL: f64 = 1e-8;

/// Configurations of one pair's hard core, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreRegion {
    pub pair: PairIndex,
    pub sites: Vec<usize>,
}

/// `{x : separation(pair, x) ≤ c}`; empty when the model has no core.
pub fn core_region(model: &LatticeModel, pair: &PairIndex) -> Result<CoreRegion> {
    if pair.second() > model.particles() {
        return Err(FyError::InvalidInput(format!(
            "pair {pair} is invalid for {} particles",
            model.particles()
        )));
    }
    let sites = (0..model.dim())
        .filter(|&i| model.in_core(pair, &model.coordinates(i)))
        .collect();
    Ok(CoreRegion { pair: *pair, sites })
}

/// Union of all core regions, sorted.
pub fn core_union(model: &LatticeModel) -> Result<Vec<usize>> {
    let pairs = model.pairs()?;
    Ok((0..model.dim())
        .filter(|&i| {
            let x = model.coordinates(i);
            pairs.iter().any(|p| model.in_core(p, &x))
        })
        .collect())
}

/// Where the three-body constraint rows go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintPlacement {
    /// Every site with separation `≤ c`.
    #[default]
    FullCore,
    /// Only sites with separation exactly `c`; rows strictly inside keep
    /// their (free) equations.
    SurfaceOnly,
}

impl ConstraintPlacement {
    fn selects(self, model: &LatticeModel, pair: &PairIndex, coords: &[usize]) -> bool {
        match (self, model.core_radius()) {
            (_, None) => false,
            (ConstraintPlacement::FullCore, Some(c)) => model.separation(pair, coords) <= c,
            (ConstraintPlacement::SurfaceOnly, Some(c)) => model.separation(pair, coords) == c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HardcorePencil {
    pub a: BlockOperator,
    pub b: BlockOperator,
    /// `(pair slot, configuration) → row` of the flattened pencil, for every
    /// constraint row.
    pub constraint_rows: BTreeMap<(usize, usize), usize>,
    /// Sites that fell in several selected cores and kept their original row
    /// for all but the first pair.
    pub collisions: usize,
    pub placement: ConstraintPlacement,
}

fn require_three_body(model: &LatticeModel) -> Result<()> {
    if model.particles() != 3 {
        return Err(FyError::InvalidInput(format!(
            "the hard-core pencil is built for 3 particles, got {}",
            model.particles()
        )));
    }
    Ok(())
}

pub fn assemble_hardcore3_pencil(model: &LatticeModel, placement: ConstraintPlacement) -> Result<HardcorePencil> {
    require_three_body(model)?;
    let split = build_split(model)?;
    let pairs = model.pairs()?;
    let d = model.dim();
    let n = pairs.len();

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut collisions = 0;
    for s in 0..d {
        let x = model.coordinates(s);
        let mut selected = pairs.iter().enumerate().filter(|(_, p)| placement.selects(model, p, &x));
        if let Some((alpha, _)) = selected.next() {
            rows[alpha].push(s);
            collisions += selected.count();
        }
    }

    let mut a = assemble_faddeev_operator(&split)?;
    let mut b = BlockOperator::new(n, d);
    let mut constraint_rows = BTreeMap::new();
    for alpha in 0..n {
        for beta in 0..n {
            let block = a.get(alpha, beta).cloned().unwrap_or_else(|| Operator::zero(d));
            a.set(alpha, beta, block.with_rows_replaced(&rows[alpha], 1.0)?)?;
        }
        b.set(alpha, alpha, Operator::identity(d).with_rows_replaced(&rows[alpha], 0.0)?)?;
        for &s in &rows[alpha] {
            constraint_rows.insert((alpha, s), alpha * d + s);
        }
    }
    Ok(HardcorePencil {
        a,
        b,
        constraint_rows,
        collisions,
        placement,
    })
}

/// Eigenvalues of `H` on the configurations outside every core.
#[derive(Debug, Clone)]
pub struct RestrictedSpectrum {
    /// Configurations kept, sorted.
    pub kept: Vec<usize>,
    /// Lowest levels; eigenvectors are extended by zeros to all `L^N`
    /// configurations.
    pub levels: Vec<EigenResult>,
}

/// `H` restricted to the complement of the core union.
pub fn restricted_hamiltonian(model: &LatticeModel) -> Result<(Vec<usize>, DMatrix<f64>)> {
    model.check_dim(DENSE_ORACLE_CAP)?;
    let union = core_union(model)?;
    let kept: Vec<usize> = (0..model.dim()).filter(|i| union.binary_search(i).is_err()).collect();
    let h = build_hamiltonian(model)?.to_dense().select_rows(&kept).select_columns(&kept);
    Ok((kept, h))
}

/// Lowest `k` levels of the restricted problem.
pub fn restricted_oracle(model: &LatticeModel, k: usize) -> Result<RestrictedSpectrum> {
    let (kept, h) = restricted_hamiltonian(model)?;
    if kept.is_empty() {
        return Ok(RestrictedSpectrum { kept, levels: Vec::new() });
    }
    let levels = symmetric_lowest(&h, k, "restricted-oracle")?
        .into_iter()
        .map(|mut level| {
            let mut full = DVector::zeros(model.dim());
            for (i, &site) in kept.iter().enumerate() {
                full[site] = level.eigenvector[i];
            }
            level.eigenvector = full;
            level
        })
        .collect();
    Ok(RestrictedSpectrum { kept, levels })
}

/// A pencil eigenpair with its reconstructed wave function and the checks
/// that separate physical roots from auxiliary ones.
#[derive(Debug, Clone)]
pub struct HardcoreSolution {
    pub eigen: EigenResult,
    pub components: FaddeevComponents,
    /// `Ψ = Σ ψβ`, unit length when nonzero.
    pub psi: DVector<f64>,
    /// `‖Σ ψβ‖ / ‖(ψβ)‖` before normalization.
    pub psi_fraction: f64,
    /// `max_{s ∈ cores} |Ψ(s)| / ‖Ψ‖`.
    pub core_max: f64,
    /// `‖P (H − z) Ψ̃‖ / ‖Ψ̃‖` with `Ψ̃` = `Ψ` zeroed on the cores and `P` the
    /// projection onto the non-core configurations.
    pub restricted_residual: f64,
    /// Auxiliary roots nearer the target that were passed over.
    pub skipped_roots: usize,
    /// Why the root is not accepted as physical, if it is not.
    pub spurious_warning: Option<String>,
}

impl HardcoreSolution {
    pub fn accepted(&self) -> bool {
        self.spurious_warning.is_none()
    }
}

/// Physical pencil eigenpair nearest `target`.
///
/// When the pencil fits under `dense_limit` its finite roots are listed by
/// eliminating the constraint unknowns, and candidates are polished by
/// shift-invert in order of distance from `target` until one passes the
/// reconstruction checks; auxiliary roots passed over are counted in
/// [`HardcoreSolution::skipped_roots`]. Larger pencils get a single
/// shift-invert solve from `target`, whose result may carry a warning.
pub fn solve_hardcore3(
    model: &LatticeModel,
    placement: ConstraintPlacement,
    target: f64,
    tol: f64,
    max_iter: usize,
    dense_limit: usize,
) -> Result<HardcoreSolution> {
    let pencil = assemble_hardcore3_pencil(model, placement)?;
    let checker = Reconstruction::new(model)?;
    let opts = ShiftInvertOptions {
        tol,
        max_iter,
        ..ShiftInvertOptions::default()
    };
    let n = pencil.a.dim();
    if n > dense_limit {
        let eigen = shift_invert_eigenpair(&pencil.a, Some(&pencil.b), target, opts)?;
        return Ok(checker.classify(&pencil, eigen, 0));
    }

    let roots = selector_pencil_eigenvalues(&pencil.a, &pencil.b, dense_limit)?;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut candidates: Vec<f64> = roots
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .collect();
    candidates.sort_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()).then(x.total_cmp(y)));
    let mut distinct: Vec<f64> = Vec::new();
    for z in candidates {
        if distinct.iter().all(|w| (w - z).abs() > 1e-8 * scale) {
            distinct.push(z);
        }
    }

    let mut first = None;
    for (skipped, &root) in distinct.iter().enumerate() {
        let shift = root - 1e-9 * (1.0 + root.abs());
        let eigen = shift_invert_eigenpair(&pencil.a, Some(&pencil.b), shift, opts)?;
        let solution = checker.classify(&pencil, eigen, skipped);
        if solution.accepted() {
            return Ok(solution);
        }
        first.get_or_insert(solution);
    }
    first.ok_or_else(|| FyError::SolverFailure {
        reason: "the pencil has no finite real roots".into(),
        iterations: 0,
        residual: f64::NAN,
    })
}

/// The checks that tell physical pencil roots from auxiliary ones.
struct Reconstruction {
    union: Vec<usize>,
    h: Operator,
}

impl Reconstruction {
    fn new(model: &LatticeModel) -> Result<Self> {
        Ok(Self {
            union: core_union(model)?,
            h: build_hamiltonian(model)?,
        })
    }

    fn classify(&self, pencil: &HardcorePencil, eigen: EigenResult, skipped_roots: usize) -> HardcoreSolution {
        let z = eigen.eigenvalue;
        let components = FaddeevComponents::new(z, pencil.a.split(&eigen.eigenvector));
        let raw = components.sum();
        let psi_fraction = raw.norm() / eigen.eigenvector.norm();
        let psi = if raw.norm() > 0.0 { &raw / raw.norm() } else { raw };

        let core_max = self.union.iter().map(|&s| psi[s].abs()).fold(0.0, f64::max);
        let mut trimmed = psi.clone();
        for &s in &self.union {
            trimmed[s] = 0.0;
        }
        let mut r = self.h.apply(&trimmed) - &trimmed * z;
        for &s in &self.union {
            r[s] = 0.0;
        }
        let restricted_residual = if trimmed.norm() > 0.0 {
            r.norm() / trimmed.norm()
        } else {
            f64::INFINITY
        };

        let spurious_warning = if psi_fraction < 1e-8 {
            Some(format!("component sum vanishes (fraction {psi_fraction:.1e}): auxiliary pencil root"))
        } else if core_max > CORE_VANISHING_TOL {
            Some(format!("wave function does not vanish on the cores (max {core_max:.1e})"))
        } else if restricted_residual > RESTRICTED_RESIDUAL_TOL * z.abs().max(1.0) {
            Some(format!(
                "wave function misses the restricted equation (residual {restricted_residual:.1e})"
            ))
        } else {
            None
        };
        HardcoreSolution {
            eigen,
            components,
            psi,
            psi_fraction,
            core_max,
            restricted_residual,
            skipped_roots,
            spurious_warning,
        }
    }
}

/// Components of a four-body state built without an eigenpair check:
/// `ψα = −(H0 − z)⁻¹ Vα Ψ` then the chain components from those. Exactly
/// zero sources give zero components without any factorization.
pub fn hardcore4_components(
    sys: &YakubovskySystem,
    z: f64,
    psi: &DVector<f64>,
) -> Result<(FaddeevComponents, YakubovskyComponents)> {
    let split: &FewBodySplit = sys.split();
    if psi.len() != split.dim() {
        return Err(FyError::InvalidInput("vector length differs from the system dimension".into()));
    }
    let sources: Vec<DVector<f64>> = split.potentials().iter().map(|v| v.apply(psi)).collect();
    let components = if sources.iter().all(|s| s.iter().all(|&x| x == 0.0)) {
        vec![DVector::zeros(split.dim()); sources.len()]
    } else {
        let (lu, _) = split.free_resolvent(z)?;
        sources
            .iter()
            .map(|s| {
                if s.iter().all(|&x| x == 0.0) {
                    DVector::zeros(split.dim())
                } else {
                    -lu.solve(s)
                }
            })
            .collect()
    };
    let faddeev = FaddeevComponents::new(z, components);
    let chains = yakubovsky_components(sys, z, &faddeev)?;
    Ok((faddeev, chains))
}

/// The four-body core conditions, one per chain `aα` and core site of `α`:
///
/// ```text
/// ψ_{aα} + Σ_{β⊂a} ψ_{aβ} + Σ_{b≠a} Σ_{β≠α, β⊂a} ψ_{bβ}
/// ```
///
/// read term by term, so `ψ_{aα}` enters twice and only valid chains `bβ`
/// appear in the last sum.
#[derive(Debug, Clone)]
pub struct Hardcore4Constraints {
    /// Per chain: the configurations where its condition is imposed.
    sites: Vec<Vec<usize>>,
    /// Per chain: `(chain, coefficient)` terms of the condition.
    terms: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hardcore4Report {
    pub constraint_sites: usize,
    /// `max |C|` per chain (zero for chains with no sites).
    pub per_chain: Vec<f64>,
    pub max_defect: f64,
}

impl Hardcore4Constraints {
    pub fn constraint_sites(&self) -> usize {
        self.sites.iter().map(Vec::len).sum()
    }

    pub fn evaluate(&self, comps: &YakubovskyComponents) -> Result<Hardcore4Report> {
        if comps.components.len() != self.terms.len() {
            return Err(FyError::InvalidInput(format!(
                "{} components for {} chains",
                comps.components.len(),
                self.terms.len()
            )));
        }
        let per_chain: Vec<f64> = self
            .terms
            .iter()
            .zip(&self.sites)
            .map(|(terms, sites)| {
                sites
                    .iter()
                    .map(|&s| terms.iter().map(|&(j, w)| w * comps.components[j][s]).sum::<f64>().abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Hardcore4Report {
            constraint_sites: self.constraint_sites(),
            max_defect: per_chain.iter().copied().fold(0.0, f64::max),
            per_chain,
        })
    }
}

pub fn assemble_hardcore4_constraints(sys: &YakubovskySystem, model: &LatticeModel) -> Result<Hardcore4Constraints> {
    if model.particles() != 4 || model.dim() != sys.dim() {
        return Err(FyError::InvalidInput("the four-body constraints need the matching 4-particle model".into()));
    }
    let chains = sys.chains();
    let mut sites = Vec::with_capacity(chains.len());
    let mut terms = Vec::with_capacity(chains.len());
    for chain in chains {
        let (a, alpha) = (chain.partition(), chain.pair());
        sites.push(core_region(model, &alpha)?.sites);
        let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
        for (j, other) in chains.iter().enumerate() {
            let beta = other.pair();
            let same = other.partition() == a;
            let mut w = 0.0;
            if same && beta == alpha {
                w += 1.0;
            }
            if same && a.contains_pair(&beta) {
                w += 1.0;
            }
            if !same && beta != alpha && a.contains_pair(&beta) {
                w += 1.0;
            }
            if w != 0.0 {
                weights.insert(j, w);
            }
        }
        terms.push(weights.into_iter().collect());
    }
    Ok(Hardcore4Constraints { sites, terms })
}
