//! N particles on a one-dimensional lattice of L sites, in particle
//! coordinates.
//!
//! A configuration `(x1, …, xN)` with `xk ∈ 0..L` is stored at index
//! `Σ xk · L^(N−k)` (particle 1 most significant). `H0` is a Kronecker sum of
//! one-particle hopping operators; each pair potential is diagonal in this
//! basis. Relabeling particles permutes configurations exactly, so the
//! symmetric group acts by 0/1 matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::blockops::{symmetric_eigenpairs, CsrMatrix, EigenResult, LinearOperator, Operator};
use crate::combinatorics::{enumerate_pairs, PairIndex, Permutation};
use crate::error::{FyError, Result};
use crate::faddeev::FewBodySplit;
use crate::potential::{Gaussian, OnSite, PairPotential};

/// Dimension cap for dense oracle diagonalization.
pub const DENSE_ORACLE_CAP: usize = 4096;
/// Dimension cap for operator construction without dense materialization.
pub const MATRIX_FREE_CAP: usize = 20736;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Hard walls: hopping off either end is forbidden.
    Box,
    /// Periodic: site `L − 1` neighbors site `0`.
    Ring,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Box => "box",
            Boundary::Ring => "ring",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = FyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Boundary::Box),
            "ring" => Ok(Boundary::Ring),
            other => Err(FyError::InvalidInput(format!(
                "unknown boundary {other:?}; expected box or ring"
            ))),
        }
    }
}

/// A few-body lattice model.
#[derive(Clone)]
pub struct LatticeModel {
    particles: usize,
    sites: usize,
    boundary: Boundary,
    hopping: f64,
    potential: Arc<dyn PairPotential>,
    pair_scales: Option<Vec<f64>>,
    core_radius: Option<usize>,
}

impl fmt::Debug for LatticeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeModel")
            .field("particles", &self.particles)
            .field("sites", &self.sites)
            .field("boundary", &self.boundary)
            .field("hopping", &self.hopping)
            .field("potential", &self.potential)
            .field("pair_scales", &self.pair_scales)
            .field("core_radius", &self.core_radius)
            .finish()
    }
}

impl LatticeModel {
    pub fn new(
        particles: usize,
        sites: usize,
        boundary: Boundary,
        hopping: f64,
        potential: Arc<dyn PairPotential>,
    ) -> Result<Self> {
        if particles == 0 || sites == 0 {
            return Err(FyError::InvalidInput(format!(
                "need at least one particle and one site, got N={particles}, L={sites}"
            )));
        }
        if !hopping.is_finite() || hopping < 0.0 {
            return Err(FyError::InvalidInput(format!("hopping must be finite and >= 0, got {hopping}")));
        }
        if (0..sites).any(|r| !potential.value(r).is_finite()) {
            return Err(FyError::InvalidInput("pair potential must be finite on the lattice".into()));
        }
        let dim = (sites as u128).pow(particles as u32);
        if dim > MATRIX_FREE_CAP as u128 {
            return Err(FyError::TooLarge {
                dim: dim.min(usize::MAX as u128) as usize,
                cap: MATRIX_FREE_CAP,
            });
        }
        Ok(Self {
            particles,
            sites,
            boundary,
            hopping,
            potential,
            pair_scales: None,
            core_radius: None,
        })
    }

    /// Three particles, 6-site box, Gaussian well of depth −4 and width 1.
    pub fn tiny3() -> Self {
        Self::new(3, 6, Boundary::Box, 1.0, Arc::new(Gaussian { depth: -4.0, width: 1.0 }))
            .expect("tiny3 preset is valid")
    }

    /// Four particles, 4-site box, on-site well of depth −6.
    pub fn tiny4() -> Self {
        Self::new(4, 4, Boundary::Box, 1.0, Arc::new(OnSite { strength: -6.0 }))
            .expect("tiny4 preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "tiny3" => Ok(Self::tiny3()),
            "tiny4" => Ok(Self::tiny4()),
            other => Err(FyError::InvalidInput(format!("unknown preset {other:?}"))),
        }
    }

    /// Per-pair multipliers of the shared potential (distinguishable
    /// particles), in canonical pair order.
    pub fn with_pair_scales(mut self, scales: Vec<f64>) -> Result<Self> {
        let pairs = self.particles * self.particles.saturating_sub(1) / 2;
        if scales.len() != pairs || scales.iter().any(|s| !s.is_finite()) {
            return Err(FyError::InvalidInput(format!(
                "expected {pairs} finite pair scales, got {scales:?}"
            )));
        }
        self.pair_scales = Some(scales);
        Ok(self)
    }

    /// Hard core of radius `c` (in sites); `None` means no core.
    pub fn with_core_radius(mut self, core: Option<usize>) -> Self {
        self.core_radius = core;
        self
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn potential(&self) -> &Arc<dyn PairPotential> {
        &self.potential
    }

    pub fn pair_scales(&self) -> Option<&[f64]> {
        self.pair_scales.as_deref()
    }

    pub fn core_radius(&self) -> Option<usize> {
        self.core_radius
    }

    /// Identical particles: one potential shared by all pairs.
    pub fn identical(&self) -> bool {
        self.pair_scales
            .as_ref()
            .map_or(true, |s| s.iter().all(|&x| x == s[0]))
    }

    /// `L^N`.
    pub fn dim(&self) -> usize {
        self.sites.pow(self.particles as u32)
    }

    pub fn check_dim(&self, cap: usize) -> Result<()> {
        if self.dim() > cap {
            return Err(FyError::TooLarge { dim: self.dim(), cap });
        }
        Ok(())
    }

    pub fn coordinates(&self, index: usize) -> Vec<usize> {
        let mut x = vec![0; self.particles];
        let mut rest = index;
        for k in (0..self.particles).rev() {
            x[k] = rest % self.sites;
            rest /= self.sites;
        }
        x
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &x| acc * self.sites + x)
    }

    /// Distance of two sites: plain for a box, minimal image on a ring.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Box => d,
            Boundary::Ring => d.min(self.sites - d),
        }
    }

    pub fn separation(&self, pair: &PairIndex, coords: &[usize]) -> usize {
        self.distance(coords[pair.first() - 1], coords[pair.second() - 1])
    }

    /// Whether a configuration lies in the hard core of `pair`.
    pub fn in_core(&self, pair: &PairIndex, coords: &[usize]) -> bool {
        self.core_radius
            .is_some_and(|c| self.separation(pair, coords) <= c)
    }

    fn pair_scale(&self, pair: &PairIndex) -> f64 {
        let Some(scales) = &self.pair_scales else {
            return 1.0;
        };
        let n = self.particles;
        let (i, j) = (pair.first() - 1, pair.second() - 1);
        // Position of (i, j) in lexicographic pair order.
        let k = i * (2 * n - i - 1) / 2 + (j - i - 1);
        scales[k]
    }

    /// Interacting pairs; empty for a single particle.
    pub fn pairs(&self) -> Result<Vec<PairIndex>> {
        if self.particles < 2 {
            return Ok(Vec::new());
        }
        enumerate_pairs(self.particles)
    }

    /// Neighbors of a site for one-particle hopping.
    fn neighbors(&self, x: usize) -> Vec<usize> {
        let l = self.sites;
        match self.boundary {
            Boundary::Box => [x.checked_sub(1), (x + 1 < l).then_some(x + 1)]
                .into_iter()
                .flatten()
                .collect(),
            Boundary::Ring => vec![(x + l - 1) % l, (x + 1) % l],
        }
    }
}

/// `Σk t(2I − S − Sᵀ)` acting on particle `k`, as a sparse operator.
pub fn build_h0(model: &LatticeModel) -> Result<Operator> {
    let dim = model.dim();
    let t = model.hopping;
    let mut triplets = Vec::with_capacity(dim * (2 * model.particles + 1));
    for idx in 0..dim {
        let mut x = model.coordinates(idx);
        triplets.push((idx, idx, 2.0 * t * model.particles as f64));
        for k in 0..model.particles {
            let here = x[k];
            for nb in model.neighbors(here) {
                x[k] = nb;
                triplets.push((idx, model.index(&x), -t));
            }
            x[k] = here;
        }
    }
    Ok(Operator::Sparse(CsrMatrix::from_triplets(dim, triplets)?))
}

/// Diagonal operator `v(|x_i − x_j|)`, zero inside the hard core if any.
pub fn build_pair_potential(model: &LatticeModel, pair: &PairIndex) -> Result<Operator> {
    if pair.second() > model.particles {
        return Err(FyError::InvalidInput(format!(
            "pair {pair} is invalid for {} particles",
            model.particles
        )));
    }
    let scale = model.pair_scale(pair);
    Ok(Operator::Diagonal(DVector::from_fn(model.dim(), |idx, _| {
        let x = model.coordinates(idx);
        if model.in_core(pair, &x) {
            0.0
        } else {
            scale * model.potential.value(model.separation(pair, &x))
        }
    })))
}

/// `H0` with one potential per pair, labeled by pair.
pub fn build_split(model: &LatticeModel) -> Result<FewBodySplit> {
    let pairs = model.pairs()?;
    let potentials = pairs
        .iter()
        .map(|p| build_pair_potential(model, p))
        .collect::<Result<_>>()?;
    let labels = pairs.iter().map(|p| p.to_string()).collect();
    FewBodySplit::with_labels(build_h0(model)?, potentials, labels)
}

/// `H = H0 + Σ Vα`; unlike [`build_split`] this also covers one particle.
pub fn build_hamiltonian(model: &LatticeModel) -> Result<Operator> {
    let mut h = build_h0(model)?;
    for pair in model.pairs()? {
        h = h.add(&build_pair_potential(model, &pair)?)?;
    }
    Ok(h)
}

/// Lowest `k` eigenpairs of `H = H0 + Σ Vα` by dense symmetric diagonalization.
pub fn dense_oracle_spectrum(model: &LatticeModel, k: usize) -> Result<Vec<EigenResult>> {
    model.check_dim(DENSE_ORACLE_CAP)?;
    symmetric_lowest(&build_hamiltonian(model)?.to_dense(), k, "dense-oracle")
}

pub(crate) fn symmetric_lowest(h: &DMatrix<f64>, k: usize, method: &str) -> Result<Vec<EigenResult>> {
    let (values, vectors) = symmetric_eigenpairs(h)?;
    Ok((0..k.min(values.len()))
        .map(|i| {
            let v = vectors.column(i).into_owned();
            let residual_norm = (h * &v - &v * values[i]).norm() / v.norm();
            EigenResult {
                eigenvalue: values[i],
                eigenvector: v,
                residual_norm,
                iterations: 0,
                method: method.to_string(),
            }
        })
        .collect())
}

/// Lowest energy at which the system can split into two clusters, each in
/// its own ground state (identical particles only).
pub fn breakup_threshold(model: &LatticeModel) -> Result<f64> {
    if !model.identical() {
        return Err(FyError::InvalidInput("thresholds are defined for identical particles".into()));
    }
    let n = model.particles;
    if n < 2 {
        return Err(FyError::InvalidInput("a threshold needs at least two particles".into()));
    }
    let cluster_energy = |k: usize| -> Result<f64> {
        let sub = LatticeModel {
            particles: k,
            pair_scales: None,
            ..model.clone()
        };
        Ok(dense_oracle_spectrum(&sub, 1)?[0].eigenvalue)
    };
    let energies: Vec<f64> = (1..n).map(cluster_energy).collect::<Result<_>>()?;
    Ok((1..=n / 2)
        .map(|k| energies[k - 1] + energies[n - k - 1])
        .fold(f64::INFINITY, f64::min))
}

/// The unitary relabeling `U_π`: the configuration `x` is sent to `x'` with
/// `x'_{π(k)} = x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationOperator {
    permutation: Permutation,
    image: Vec<usize>,
}

impl PermutationOperator {
    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    /// `image[i]` is the configuration that index `i` is mapped to.
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (i, &j) in self.image.iter().enumerate() {
            out[j] = v[i];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, &j) in self.image.iter().enumerate() {
            m[(j, i)] = 1.0;
        }
        m
    }

    /// `U_self · U_other`.
    pub fn compose(&self, other: &PermutationOperator) -> PermutationOperator {
        PermutationOperator {
            permutation: self.permutation.compose(&other.permutation),
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        }
    }
}

pub fn build_permutation(model: &LatticeModel, pi: &Permutation) -> Result<PermutationOperator> {
    if pi.len() != model.particles {
        return Err(FyError::InvalidInput(format!(
            "permutation of {} labels for {} particles",
            pi.len(),
            model.particles
        )));
    }
    let image = (0..model.dim())
        .map(|idx| {
            let x = model.coordinates(idx);
            let mut y = vec![0; x.len()];
            for (k, &xk) in x.iter().enumerate() {
                y[pi.apply(k + 1) - 1] = xk;
            }
            model.index(&y)
        })
        .collect();
    Ok(PermutationOperator {
        permutation: pi.clone(),
        image,
    })
}

/// Largest entrywise deviation in `U H0 U⁻¹ = H0` and
/// `U Vα U⁻¹ = V_{π(α)}` over all pairs.
pub fn covariance_defect(split: &FewBodySplit, pairs: &[PairIndex], u: &PermutationOperator) -> Result<f64> {
    if pairs.len() != split.n() || u.dim() != split.dim() {
        return Err(FyError::InvalidInput("split, pairs and permutation do not fit together".into()));
    }
    let mut defect: f64 = 0.0;
    if split.dim() <= DENSE_ORACLE_CAP {
        let h0 = split.h0().to_dense();
        split.h0().for_each_entry(&mut |i, j, v| {
            defect = defect.max((h0[(u.image[i], u.image[j])] - v).abs());
        });
    } else {
        // Commutation on a fixed probe vector.
        let x = DVector::from_fn(split.dim(), |i, _| ((i * 7919) % 104_729) as f64);
        let lhs = u.apply(&split.h0().apply(&x));
        let rhs = split.h0().apply(&u.apply(&x));
        defect = defect.max((lhs - rhs).amax());
    }
    for (alpha, pair) in pairs.iter().enumerate() {
        let target = pairs
            .iter()
            .position(|p| *p == pair.permuted(u.permutation()))
            .ok_or_else(|| FyError::InvalidInput(format!("pair {pair} has no image")))?;
        let va = split.potential(alpha);
        let vb = split.potential(target);
        let e = DVector::from_element(split.dim(), 1.0);
        let (da, db) = (va.apply(&e), vb.apply(&e));
        if !matches!(va, Operator::Diagonal(_)) || !matches!(vb, Operator::Diagonal(_)) {
            return Err(FyError::InvalidInput("covariance check expects diagonal potentials".into()));
        }
        for i in 0..split.dim() {
            defect = defect.max((db[u.image[i]] - da[i]).abs());
        }
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops::dense_eigenvalues;
    use crate::combinatorics::all_permutations;
    use crate::potential::{Free, SquareWell, Tabulated};

    fn free_model(n: usize, l: usize, b: Boundary) -> LatticeModel {
        LatticeModel::new(n, l, b, 1.0, Arc::new(Free)).unwrap()
    }

    fn one_particle_levels(l: usize, b: Boundary, t: f64) -> Vec<f64> {
        use std::f64::consts::PI;
        match b {
            Boundary::Box => (1..=l).map(|k| 2.0 * t * (1.0 - (k as f64 * PI / (l + 1) as f64).cos())).collect(),
            Boundary::Ring => (0..l).map(|k| 2.0 * t * (1.0 - (2.0 * PI * k as f64 / l as f64).cos())).collect(),
        }
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    fn real_spectrum(op: &Operator) -> Vec<f64> {
        sorted(dense_eigenvalues(op, 4096).unwrap().iter().map(|z| z.re).collect())
    }

    #[test]
    fn single_particle_box_levels() {
        let h0 = build_h0(&free_model(1, 3, Boundary::Box)).unwrap();
        let got = real_spectrum(&h0);
        let want = sorted(one_particle_levels(3, Boundary::Box, 1.0));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn kronecker_sum_spectrum() {
        for (n, l, b) in [(2, 4, Boundary::Box), (3, 3, Boundary::Ring), (2, 5, Boundary::Ring)] {
            let h0 = build_h0(&free_model(n, l, b)).unwrap();
            let one = one_particle_levels(l, b, 1.0);
            let mut sums = vec![0.0];
            for _ in 0..n {
                sums = sums.iter().flat_map(|s| one.iter().map(move |e| s + e)).collect();
            }
            let want = sorted(sums);
            let got = real_spectrum(&h0);
            let dev = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-10, "n={n} l={l} {b:?}: {dev:e}");
        }
    }

    #[test]
    fn zero_hopping_zero_operator() {
        let m = LatticeModel::new(2, 3, Boundary::Box, 0.0, Arc::new(Free)).unwrap();
        assert!(build_h0(&m).unwrap().is_zero());
    }

    #[test]
    fn on_site_potential_support() {
        let m = LatticeModel::new(3, 3, Boundary::Box, 1.0, Arc::new(OnSite { strength: -1.0 })).unwrap();
        let pair = PairIndex::new(1, 3).unwrap();
        let v = build_pair_potential(&m, &pair).unwrap();
        let diag = v.apply(&DVector::from_element(m.dim(), 1.0));
        for idx in 0..m.dim() {
            let x = m.coordinates(idx);
            assert_eq!(diag[idx], if x[0] == x[2] { -1.0 } else { 0.0 });
        }
    }

    /// Direct assembly of H, configuration by configuration.
    fn direct_hamiltonian(m: &LatticeModel) -> DMatrix<f64> {
        let d = m.dim();
        let l = m.sites() as isize;
        let mut h = DMatrix::zeros(d, d);
        for idx in 0..d {
            let x = m.coordinates(idx);
            let mut diag = 2.0 * m.hopping() * m.particles() as f64;
            for i in 0..m.particles() {
                for j in i + 1..m.particles() {
                    let raw = (x[i] as isize - x[j] as isize).abs();
                    let r = match m.boundary() {
                        Boundary::Box => raw,
                        Boundary::Ring => raw.min(l - raw),
                    };
                    diag += m.potential().value(r as usize);
                }
            }
            h[(idx, idx)] += diag;
            for k in 0..m.particles() {
                for step in [-1isize, 1] {
                    let mut y: Vec<isize> = x.iter().map(|&v| v as isize).collect();
                    y[k] += step;
                    match m.boundary() {
                        Boundary::Box if y[k] < 0 || y[k] >= l => continue,
                        Boundary::Box => {}
                        Boundary::Ring => y[k] = y[k].rem_euclid(l),
                    }
                    let yi: Vec<usize> = y.iter().map(|&v| v as usize).collect();
                    h[(idx, m.index(&yi))] -= m.hopping();
                }
            }
        }
        h
    }

    #[test]
    fn split_matches_direct_assembly() {
        let models = [
            LatticeModel::tiny3(),
            LatticeModel::new(3, 5, Boundary::Ring, 0.7, Arc::new(SquareWell { depth: -2.0, range: 1 })).unwrap(),
            LatticeModel::new(4, 3, Boundary::Box, 1.0, Arc::new(Tabulated { table: vec![-3.0, 0.5] })).unwrap(),
        ];
        for m in &models {
            let h = build_split(m).unwrap().total().unwrap().to_dense();
            assert_eq!(h, direct_hamiltonian(m));
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn permutations_are_covariant_and_compose() {
        let m = LatticeModel::new(3, 4, Boundary::Ring, 1.0, Arc::new(Gaussian { depth: -2.0, width: 1.5 })).unwrap();
        let split = build_split(&m).unwrap();
        let pairs = m.pairs().unwrap();
        let perms = all_permutations(3);
        let ops: Vec<_> = perms.iter().map(|p| build_permutation(&m, p).unwrap()).collect();
        assert_eq!(ops[0].to_dense(), DMatrix::identity(m.dim(), m.dim()));
        for (p, u) in perms.iter().zip(&ops) {
            assert_eq!(covariance_defect(&split, &pairs, u).unwrap(), 0.0);
            for (q, w) in perms.iter().zip(&ops) {
                let pq = build_permutation(&m, &p.compose(q)).unwrap();
                assert_eq!(u.compose(w).image(), pq.image());
                assert_eq!(u.to_dense() * w.to_dense(), pq.to_dense());
            }
        }
        let t = build_permutation(&m, &Permutation::transposition(3, 1, 2).unwrap()).unwrap();
        assert!(t.compose(&t).image().iter().enumerate().all(|(i, &j)| i == j));
    }

    #[test]
    fn distinguishable_particles_break_covariance() {
        let m = LatticeModel::tiny3().with_pair_scales(vec![1.0, 0.5, 2.0]).unwrap();
        let split = build_split(&m).unwrap();
        let u = build_permutation(&m, &Permutation::transposition(3, 1, 3).unwrap()).unwrap();
        assert!(covariance_defect(&split, &m.pairs().unwrap(), &u).unwrap() > 0.1);
        assert!(!m.identical());
    }

    #[test]
    fn two_particle_two_site_oracle() {
        let m = LatticeModel::new(2, 2, Boundary::Box, 1.0, Arc::new(OnSite { strength: -5.0 })).unwrap();
        // Basis (0,0),(0,1),(1,0),(1,1): diag 4 + v, hops -1 between configs
        // differing in one coordinate.
        let h = nalgebra::dmatrix![
            -1.0, -1.0, -1.0, 0.0;
            -1.0, 4.0, 0.0, -1.0;
            -1.0, 0.0, 4.0, -1.0;
            0.0, -1.0, -1.0, -1.0
        ];
        let (vals, _) = symmetric_eigenpairs(&h).unwrap();
        let got = dense_oracle_spectrum(&m, 4).unwrap();
        for (r, v) in got.iter().zip(vals.iter()) {
            assert!((r.eigenvalue - v).abs() < 1e-12);
            assert!(r.residual_norm < 1e-12);
        }
        // Hand check: the antisymmetric combination of (0,1),(1,0) sits at 4.
        assert!(got.iter().any(|r| (r.eigenvalue - 4.0).abs() < 1e-12));
    }

    #[test]
    fn free_oracle_is_kronecker_sum() {
        let m = free_model(2, 3, Boundary::Box);
        let got: Vec<f64> = dense_oracle_spectrum(&m, 9).unwrap().iter().map(|r| r.eigenvalue).collect();
        let one = one_particle_levels(3, Boundary::Box, 1.0);
        let want = sorted(one.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn presets_bind_and_ground_states_are_symmetric() {
        for m in [LatticeModel::tiny3(), LatticeModel::tiny4()] {
            let spectrum = dense_oracle_spectrum(&m, 2).unwrap();
            let threshold = breakup_threshold(&m).unwrap();
            assert!(spectrum[0].eigenvalue < threshold - 1e-3, "{m:?} not bound");
            assert!(spectrum[1].eigenvalue - spectrum[0].eigenvalue > 1e-6);
            let psi = &spectrum[0].eigenvector;
            for p in all_permutations(m.particles()) {
                let u = build_permutation(&m, &p).unwrap();
                assert!((u.apply(psi) - psi).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn too_large_models_rejected() {
        assert!(matches!(
            LatticeModel::new(4, 13, Boundary::Box, 1.0, Arc::new(Free)),
            Err(FyError::TooLarge { .. })
        ));
        let m = LatticeModel::new(4, 9, Boundary::Box, 1.0, Arc::new(Free)).unwrap();
        assert!(matches!(dense_oracle_spectrum(&m, 1), Err(FyError::TooLarge { .. })));
    }
}
