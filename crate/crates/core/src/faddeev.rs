//! The n-component Faddeev decomposition of `H = H0 + V1 + … + Vn`.
//!
//! Components `ψα = −(H0 − z)⁻¹ Vα Ψ` of an eigenvector `Ψ` sum back to `Ψ`,
//! satisfy the coupled equations `(H0 + Vα − z)ψα = −Vα Σ_{β≠α} ψβ`, and are a
//! fixed point of the resolvent map built from `(H0 + Vα − z)⁻¹`. The block
//! operator of the coupled equations (the Faddeev operator `H_F`) has
//! spectrum `σ(H) ∪ σ(H0)`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockops::{
    dense_eigenvalues, flatten, match_spectra, BlockOperator, DenseLu, EigenResult, EigenStrategy,
    LinearOperator, Operator, SolveRequest,
};
use crate::error::{FyError, Result};

/// Condition estimates above this make a resolvent solve unusable.
pub(crate) const SINGULAR_CONDITION: f64 = 1e15;
/// Condition estimates above this are flagged but still solved.
pub const ILL_CONDITIONED: f64 = 1e10;
/// Relative eigen-residual accepted as "an eigenpair of H".
pub const EIGENPAIR_TOL: f64 = 1e-8;

/// `H0` together with the ordered split `V = V1 + … + Vn`.
#[derive(Debug, Clone)]
pub struct FewBodySplit {
    h0: Operator,
    potentials: Vec<Operator>,
    labels: Vec<String>,
}

impl FewBodySplit {
    /// Potentials are labeled `1..=n`.
    pub fn new(h0: Operator, potentials: Vec<Operator>) -> Result<Self> {
        let labels = (1..=potentials.len()).map(|k| k.to_string()).collect();
        Self::with_labels(h0, potentials, labels)
    }

    pub fn with_labels(h0: Operator, potentials: Vec<Operator>, labels: Vec<String>) -> Result<Self> {
        if potentials.len() < 2 {
            return Err(FyError::InvalidInput(format!(
                "a split needs at least 2 potentials, got {}",
                potentials.len()
            )));
        }
        if labels.len() != potentials.len() {
            return Err(FyError::InvalidInput("one label per potential required".into()));
        }
        let d = h0.dim();
        if let Some(v) = potentials.iter().find(|v| v.dim() != d) {
            return Err(FyError::InvalidInput(format!(
                "potential of dimension {} does not match H0 of dimension {d}",
                v.dim()
            )));
        }
        Ok(Self { h0, potentials, labels })
    }

    /// Seeded random split with entries uniform in `[-1, 1)`; symmetric parts
    /// when `hermitian` is set.
    pub fn random(n: usize, d: usize, hermitian: bool, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(FyError::InvalidInput("dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            if hermitian {
                Operator::Dense((&m + m.transpose()) * 0.5)
            } else {
                Operator::Dense(m)
            }
        };
        let h0 = draw();
        let potentials = (0..n).map(|_| draw()).collect();
        Self::new(h0, potentials)
    }

    pub fn n(&self) -> usize {
        self.potentials.len()
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn potential(&self, alpha: usize) -> &Operator {
        &self.potentials[alpha]
    }

    pub fn potentials(&self) -> &[Operator] {
        &self.potentials
    }

    pub fn label(&self, alpha: usize) -> &str {
        &self.labels[alpha]
    }

    /// `H0 + Vα`.
    pub fn channel(&self, alpha: usize) -> Result<Operator> {
        self.h0.add(&self.potentials[alpha])
    }

    /// `H = H0 + Σα Vα`.
    pub fn total(&self) -> Result<Operator> {
        self.potentials.iter().try_fold(self.h0.clone(), |acc, v| acc.add(v))
    }

    fn sum_potentials(&self, x: &DVector<f64>) -> DVector<f64> {
        self.potentials
            .iter()
            .fold(DVector::zeros(x.len()), |acc, v| acc + v.apply(x))
    }

    /// `(H0 − z)` factored, with its condition estimate.
    pub(crate) fn free_resolvent(&self, z: f64) -> Result<(DenseLu, f64)> {
        let lu = DenseLu::factor(&self.h0, None, z).map_err(|_| FyError::SpuriousEnergy { z })?;
        let cond = lu.condition_estimate();
        if cond > SINGULAR_CONDITION {
            return Err(FyError::SpuriousEnergy { z });
        }
        Ok((lu, cond))
    }

    /// `(H0 + Vα − z)` factored.
    pub(crate) fn channel_resolvent(&self, alpha: usize, z: f64) -> Result<DenseLu> {
        let channel_error = || FyError::ChannelEnergy {
            pair: self.labels[alpha].clone(),
            z,
        };
        let lu = DenseLu::factor(&self.channel(alpha)?, None, z).map_err(|_| channel_error())?;
        if lu.condition_estimate() > SINGULAR_CONDITION {
            return Err(channel_error());
        }
        Ok(lu)
    }
}

/// Faddeev components `ψ1..ψn` of an eigenvector at energy `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaddeevComponents {
    pub z: f64,
    pub components: Vec<DVector<f64>>,
    /// 1-norm condition estimate of `H0 − z` (NaN when not computed).
    pub condition_estimate: f64,
}

impl FaddeevComponents {
    pub fn new(z: f64, components: Vec<DVector<f64>>) -> Self {
        Self {
            z,
            components,
            condition_estimate: f64::NAN,
        }
    }

    /// `Σα ψα`.
    pub fn sum(&self) -> DVector<f64> {
        let d = self.components.first().map_or(0, |c| c.len());
        self.components.iter().fold(DVector::zeros(d), |acc, c| acc + c)
    }

    /// True when `H0 − z` was close enough to singular to deserve a warning.
    pub fn ill_conditioned(&self) -> bool {
        self.condition_estimate > ILL_CONDITIONED
    }
}

fn relative_eigen_residual(split: &FewBodySplit, z: f64, psi: &DVector<f64>) -> Result<f64> {
    let h = split.total()?;
    Ok((h.apply(psi) - psi * z).norm() / psi.norm())
}

fn check_vector(split: &FewBodySplit, psi: &DVector<f64>) -> Result<()> {
    if psi.len() != split.dim() {
        return Err(FyError::InvalidInput(format!(
            "vector of length {} for a split of dimension {}",
            psi.len(),
            split.dim()
        )));
    }
    if psi.norm() == 0.0 {
        return Err(FyError::InvalidInput("Psi must be nonzero".into()));
    }
    Ok(())
}

/// `‖Ψ + (H0 − z)⁻¹ Σα Vα Ψ‖ / ‖Ψ‖`.
pub fn lippmann_schwinger_residual(split: &FewBodySplit, z: f64, psi: &DVector<f64>) -> Result<f64> {
    check_vector(split, psi)?;
    let (lu, _) = split.free_resolvent(z)?;
    let image = lu.solve(&split.sum_potentials(psi));
    Ok((psi + image).norm() / psi.norm())
}

/// `ψα = −(H0 − z)⁻¹ Vα Ψ` for an eigenpair `(z, Ψ)` of `H`.
pub fn faddeev_components(split: &FewBodySplit, z: f64, psi: &DVector<f64>) -> Result<FaddeevComponents> {
    faddeev_components_with_tol(split, z, psi, EIGENPAIR_TOL)
}

/// As [`faddeev_components`] with an explicit eigenpair acceptance tolerance
/// (relative to `max(1, |z|)`).
pub fn faddeev_components_with_tol(
    split: &FewBodySplit,
    z: f64,
    psi: &DVector<f64>,
    tol: f64,
) -> Result<FaddeevComponents> {
    check_vector(split, psi)?;
    let residual = relative_eigen_residual(split, z, psi)?;
    if residual > tol * z.abs().max(1.0) {
        return Err(FyError::PreconditionViolation { residual });
    }
    let (lu, cond) = split.free_resolvent(z)?;
    let components = split
        .potentials()
        .iter()
        .map(|v| -lu.solve(&v.apply(psi)))
        .collect();
    Ok(FaddeevComponents {
        z,
        components,
        condition_estimate: cond,
    })
}

fn check_components(split: &FewBodySplit, comps: &FaddeevComponents) -> Result<()> {
    if comps.components.len() != split.n() {
        return Err(FyError::InvalidInput(format!(
            "{} components for a split with {} potentials",
            comps.components.len(),
            split.n()
        )));
    }
    if comps.components.iter().any(|c| c.len() != split.dim()) {
        return Err(FyError::InvalidInput("component length differs from the split dimension".into()));
    }
    Ok(())
}

/// Floor for normalizing a residual by a component norm.
pub(crate) fn norm_floor(norms: impl Iterator<Item = f64>) -> f64 {
    (norms.fold(0.0, f64::max) * f64::EPSILON).max(f64::MIN_POSITIVE)
}

/// `rα = ‖(H0 + Vα − z)ψα + Vα Σ_{β≠α} ψβ‖ / max(‖ψα‖, ε)`.
pub fn faddeev_residual(split: &FewBodySplit, comps: &FaddeevComponents) -> Result<Vec<f64>> {
    check_components(split, comps)?;
    let total = comps.sum();
    let eps = norm_floor(comps.components.iter().map(|c| c.norm()));
    Ok(comps
        .components
        .iter()
        .enumerate()
        .map(|(alpha, psi_a)| {
            let v = split.potential(alpha);
            let others = &total - psi_a;
            let lhs = split.h0().apply(psi_a) + v.apply(psi_a) - psi_a * comps.z + v.apply(&others);
            lhs.norm() / psi_a.norm().max(eps)
        })
        .collect())
}

/// One application of `ψα ← −(H0 + Vα − z)⁻¹ Vα Σ_{β≠α} ψβ`.
pub fn faddeev_integral_map(split: &FewBodySplit, z: f64, comps: &FaddeevComponents) -> Result<FaddeevComponents> {
    check_components(split, comps)?;
    let total = comps.sum();
    let components = (0..split.n())
        .map(|alpha| {
            let v = split.potential(alpha);
            let source = v.apply(&(&total - &comps.components[alpha]));
            if source.iter().all(|&s| s == 0.0) {
                return Ok(DVector::zeros(split.dim()));
            }
            let lu = split.channel_resolvent(alpha, z)?;
            Ok(-lu.solve(&source))
        })
        .collect::<Result<_>>()?;
    Ok(FaddeevComponents::new(z, components))
}

/// The `n x n` block operator with `H0 + Vα` on the diagonal and `Vα` in
/// every off-diagonal slot of row `α`.
pub fn assemble_faddeev_operator(split: &FewBodySplit) -> Result<BlockOperator> {
    let n = split.n();
    let mut block = BlockOperator::new(n, split.dim());
    for alpha in 0..n {
        for beta in 0..n {
            let entry = if alpha == beta {
                split.channel(alpha)?
            } else {
                split.potential(alpha).clone()
            };
            block.set(alpha, beta, entry)?;
        }
    }
    Ok(block)
}

/// Outcome of [`spectrum_union_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumUnionReport {
    pub max_matching_distance: f64,
    pub tolerance: f64,
    pub spectrum_faddeev: Vec<Complex<f64>>,
    pub spectrum_h: Vec<Complex<f64>>,
    pub spectrum_h0: Vec<Complex<f64>>,
    /// Each distinct point of `σ(H0)` with the number of `σ(H_F)` values
    /// within `cluster_radius` of it. Measured, not asserted.
    pub multiplicities: Vec<(Complex<f64>, usize)>,
    pub cluster_radius: f64,
}

impl SpectrumUnionReport {
    pub fn holds(&self) -> bool {
        self.max_matching_distance <= self.tolerance
    }

    /// Converts a failed match into a theorem-violation error.
    pub fn require(&self) -> Result<()> {
        if self.holds() {
            Ok(())
        } else {
            Err(FyError::TheoremViolation(format!(
                "σ(H)∪σ(H0) matched into σ(H_F) only to {:e} (tolerance {:e})",
                self.max_matching_distance, self.tolerance
            )))
        }
    }
}

/// Dense check that every point of `σ(H) ∪ σ(H0)` (as a multiset) is matched
/// by a distinct point of `σ(H_F)`.
pub fn spectrum_union_check(split: &FewBodySplit, tolerance: f64, dense_limit: usize) -> Result<SpectrumUnionReport> {
    let hf = flatten(&assemble_faddeev_operator(split)?)?;
    let spectrum_faddeev = dense_eigenvalues(&hf, dense_limit)?;
    let spectrum_h = dense_eigenvalues(&split.total()?, dense_limit)?;
    let spectrum_h0 = dense_eigenvalues(split.h0(), dense_limit)?;

    let reference: Vec<Complex<f64>> = spectrum_h.iter().chain(&spectrum_h0).copied().collect();
    let matching = match_spectra(&reference, &spectrum_faddeev)?;

    let scale = spectrum_faddeev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let cluster_radius = 1e-6 * scale;
    let mut multiplicities: Vec<(Complex<f64>, usize)> = Vec::new();
    for &lambda in &spectrum_h0 {
        if multiplicities.iter().any(|(mu, _)| (mu - lambda).norm() <= cluster_radius) {
            continue;
        }
        let count = spectrum_faddeev
            .iter()
            .filter(|z| (*z - lambda).norm() <= cluster_radius)
            .count();
        multiplicities.push((lambda, count));
    }

    Ok(SpectrumUnionReport {
        max_matching_distance: matching.max_distance,
        tolerance,
        spectrum_faddeev,
        spectrum_h,
        spectrum_h0,
        multiplicities,
        cluster_radius,
    })
}

/// An eigenpair of the Faddeev operator split into components.
#[derive(Debug, Clone)]
pub struct FaddeevSolution {
    pub eigen: EigenResult,
    pub components: FaddeevComponents,
    /// `‖Σ ψα‖ / ‖(ψ1..ψn)‖`; near zero for spurious (`σ(H0)`) eigenvectors.
    pub sum_fraction: f64,
}

impl FaddeevSolution {
    pub fn is_spurious(&self) -> bool {
        self.sum_fraction < 1e-8
    }

    /// `Ψ = Σ ψα` normalized to unit length.
    pub fn wave_function(&self) -> DVector<f64> {
        let psi = self.components.sum();
        let norm = psi.norm();
        if norm > 0.0 {
            psi / norm
        } else {
            psi
        }
    }
}

/// Solves the Faddeev eigenproblem near `target` with the given strategy and
/// splits the eigenvector into its components.
pub fn solve_faddeev(
    split: &FewBodySplit,
    strategy: &dyn EigenStrategy,
    target: f64,
    tol: f64,
    max_iter: usize,
    dense_limit: usize,
) -> Result<FaddeevSolution> {
    let hf = assemble_faddeev_operator(split)?;
    let eigen = strategy.solve(&SolveRequest {
        a: &hf,
        b: None,
        target,
        tol,
        max_iter,
        dense_limit,
    })?;
    let parts = hf.split(&eigen.eigenvector);
    let components = FaddeevComponents::new(eigen.eigenvalue, parts);
    let sum_fraction = components.sum().norm() / eigen.eigenvector.norm();
    Ok(FaddeevSolution {
        eigen,
        components,
        sum_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops::symmetric_eigenpairs;
    use nalgebra::dmatrix;

    fn scalar(v: f64) -> Operator {
        Operator::Dense(DMatrix::from_element(1, 1, v))
    }

    /// Lowest eigenpair of H for a symmetric split, from the dense oracle.
    fn oracle_ground_state(split: &FewBodySplit) -> (f64, DVector<f64>) {
        let (vals, vecs) = symmetric_eigenpairs(&split.total().unwrap().to_dense()).unwrap();
        (vals[0], vecs.column(0).into_owned())
    }

    #[test]
    fn split_validation() {
        assert!(FewBodySplit::new(Operator::identity(2), vec![Operator::zero(2)]).is_err());
        assert!(FewBodySplit::new(Operator::identity(2), vec![Operator::zero(2), Operator::zero(3)]).is_err());
    }

    #[test]
    fn two_potential_scalar_operator() {
        let split = FewBodySplit::new(scalar(0.0), vec![scalar(1.0), scalar(2.0)]).unwrap();
        let hf = flatten(&assemble_faddeev_operator(&split).unwrap()).unwrap();
        assert_eq!(hf.to_dense(), dmatrix![1.0, 1.0; 2.0, 2.0]);
    }

    #[test]
    fn zero_perturbation_is_block_diagonal() {
        let h0 = Operator::Dense(dmatrix![1.0, 0.5; 0.5, 2.0]);
        let split = FewBodySplit::new(h0.clone(), vec![Operator::zero(2); 3]).unwrap();
        let hf = flatten(&assemble_faddeev_operator(&split).unwrap()).unwrap().to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let block = hf.view((2 * i, 2 * j), (2, 2));
                if i == j {
                    assert_eq!(block, h0.to_dense());
                } else {
                    assert!(block.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn lippmann_schwinger_trivial_and_exact() {
        let h0 = Operator::Diagonal(DVector::from_vec(vec![1.0, 2.0]));
        let free = FewBodySplit::new(h0.clone(), vec![Operator::zero(2), Operator::zero(2)]).unwrap();
        let psi = DVector::from_vec(vec![0.3, -0.7]);
        assert!((lippmann_schwinger_residual(&free, 0.0, &psi).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            lippmann_schwinger_residual(&free, 2.0, &psi),
            Err(FyError::SpuriousEnergy { z: 2.0 })
        );

        let split = FewBodySplit::random(3, 6, true, 11).unwrap();
        let (z, psi) = oracle_ground_state(&split);
        assert!(lippmann_schwinger_residual(&split, z, &psi).unwrap() <= 1e-10);
        let wrong = DVector::from_fn(6, |i, _| 1.0 + i as f64);
        assert!(lippmann_schwinger_residual(&split, z, &wrong).unwrap() > 1e-3);
    }

    #[test]
    fn single_active_potential_takes_everything() {
        let h0 = Operator::Dense(dmatrix![2.0, -1.0; -1.0, 2.0]);
        let v1 = Operator::Diagonal(DVector::from_vec(vec![-3.0, 0.0]));
        let split = FewBodySplit::new(h0, vec![v1, Operator::zero(2)]).unwrap();
        let (z, psi) = oracle_ground_state(&split);
        let comps = faddeev_components(&split, z, &psi).unwrap();
        assert!((&comps.components[0] - &psi).norm() < 1e-12);
        assert_eq!(comps.components[1].norm(), 0.0);
        // H0 + V1 is all of H, so z is an eigenvalue of the channel operator:
        // the coupled form holds with a zero source, and the integral map,
        // which only sees the source, sends everything to zero.
        assert!(faddeev_residual(&split, &comps).unwrap().iter().all(|&r| r < 1e-10));
        let mapped = faddeev_integral_map(&split, z, &comps).unwrap();
        assert_eq!(mapped.components[0].norm(), 0.0);
        assert_eq!(mapped.components[1].norm(), 0.0);
    }

    #[test]
    fn seeded_model_components() {
        let split = FewBodySplit::random(3, 6, true, 5).unwrap();
        let (z, psi) = oracle_ground_state(&split);
        let comps = faddeev_components(&split, z, &psi).unwrap();
        assert!((comps.sum() - &psi).norm() <= 1e-10 * psi.norm());
        assert!(faddeev_residual(&split, &comps).unwrap().iter().all(|&r| r <= 1e-9));
        let mapped = faddeev_integral_map(&split, z, &comps).unwrap();
        for (a, b) in mapped.components.iter().zip(&comps.components) {
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn non_eigenpair_rejected() {
        let split = FewBodySplit::random(2, 4, true, 3).unwrap();
        let psi = DVector::from_element(4, 1.0);
        assert!(matches!(
            faddeev_components(&split, 0.123, &psi),
            Err(FyError::PreconditionViolation { .. })
        ));
    }

    #[test]
    fn perturbed_component_is_detected() {
        let split = FewBodySplit::random(3, 5, true, 21).unwrap();
        let (z, psi) = oracle_ground_state(&split);
        let mut comps = faddeev_components(&split, z, &psi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        comps.components[1] += DVector::from_fn(5, |_, _| 1e-3 * rng.gen_range(-1.0..1.0));
        let r = faddeev_residual(&split, &comps).unwrap();
        assert!(r[1] >= 1e-5, "{r:?}");
    }

    #[test]
    fn zero_components_have_zero_residual() {
        let split = FewBodySplit::random(3, 4, true, 1).unwrap();
        let comps = FaddeevComponents::new(0.5, vec![DVector::zeros(4); 3]);
        assert_eq!(faddeev_residual(&split, &comps).unwrap(), vec![0.0; 3]);
        let free = FewBodySplit::new(Operator::identity(4), vec![Operator::zero(4); 3]).unwrap();
        let ones = FaddeevComponents::new(0.5, vec![DVector::from_element(4, 1.0); 3]);
        let mapped = faddeev_integral_map(&free, 0.5, &ones).unwrap();
        assert!(mapped.components.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn spectrum_union_zero_perturbation() {
        let h0 = Operator::Diagonal(DVector::from_vec(vec![1.0, 2.0]));
        let split = FewBodySplit::new(h0, vec![Operator::zero(2), Operator::zero(2)]).unwrap();
        let report = spectrum_union_check(&split, 1e-12, 100).unwrap();
        let re: Vec<f64> = report.spectrum_faddeev.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(report.max_matching_distance, 0.0);
        assert!(report.require().is_ok());
    }

    #[test]
    fn spectrum_union_seeded() {
        for (n, d, seed) in [(3, 5, 1), (6, 3, 2)] {
            let split = FewBodySplit::random(n, d, true, seed).unwrap();
            let report = spectrum_union_check(&split, 1e-8, 4096).unwrap();
            assert!(report.holds(), "n={n} d={d}: {:e}", report.max_matching_distance);
        }
    }

    #[test]
    fn faddeev_solve_recovers_ground_state() {
        let split = FewBodySplit::random(3, 5, true, 7).unwrap();
        let (z, _) = oracle_ground_state(&split);
        let sol = solve_faddeev(
            &split,
            &crate::blockops::ShiftInvertStrategy,
            z - 0.05,
            1e-11,
            500,
            4096,
        )
        .unwrap();
        assert!(!sol.is_spurious());
        assert!((sol.eigen.eigenvalue - z).abs() < 1e-8);
    }
}
