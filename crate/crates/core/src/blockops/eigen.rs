use faer::{Mat, Side};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseLu, LinearOperator};
use crate::error::{FyError, Result};

const START_VECTOR_SEED: u64 = 0x5eed_f00d;

/// One eigenpair together with how it was obtained.
///
/// `residual_norm` is `‖(A − z·B)x‖ / ‖x‖` for the problem actually solved,
/// with `B` the identity unless a pencil was given.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalue: f64,
    pub eigenvector: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: String,
}

/// All eigenvalues of a general real operator, ordered by `(re, im)`.
pub fn dense_eigenvalues(a: &dyn LinearOperator, dense_limit: usize) -> Result<Vec<Complex<f64>>> {
    let n = a.dim();
    if n > dense_limit {
        return Err(FyError::TooLarge { dim: n, cap: dense_limit });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let dense = a.to_dense();
    let m = Mat::<f64>::from_fn(n, n, |i, j| dense[(i, j)]);
    let raw = m.eigenvalues().map_err(|e| FyError::SolverFailure {
        reason: format!("eigenvalue iteration did not converge on a {n}x{n} matrix: {e:?}"),
        iterations: 0,
        residual: f64::NAN,
    })?;
    let mut values: Vec<Complex<f64>> = raw.iter().map(|z| Complex::new(z.re, z.im)).collect();
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(values)
}

/// Finite eigenvalues of the pencil `A x = z B x` where `B` is diagonal with
/// entries 0 or 1, ordered by `(re, im)`.
///
/// Rows with `B = 0` are algebraic: their unknowns are eliminated through the
/// Schur complement `A_FF − A_FC A_CC⁻¹ A_CF`, whose ordinary spectrum is the
/// finite pencil spectrum. Fails when `A_CC` is singular.
pub fn selector_pencil_eigenvalues(
    a: &dyn LinearOperator,
    b: &dyn LinearOperator,
    dense_limit: usize,
) -> Result<Vec<Complex<f64>>> {
    let n = a.dim();
    if b.dim() != n {
        return Err(FyError::InvalidInput(format!("pencil dimensions differ: {n} and {}", b.dim())));
    }
    if n > dense_limit {
        return Err(FyError::TooLarge { dim: n, cap: dense_limit });
    }
    let mut diag = vec![0.0; n];
    let mut shape_ok = true;
    b.for_each_entry(&mut |i, j, v| {
        if i == j {
            diag[i] += v;
        } else if v != 0.0 {
            shape_ok = false;
        }
    });
    if !shape_ok || diag.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(FyError::InvalidInput("B must be a diagonal 0/1 selector".into()));
    }
    let free: Vec<usize> = (0..n).filter(|&i| diag[i] == 1.0).collect();
    let fixed: Vec<usize> = (0..n).filter(|&i| diag[i] == 0.0).collect();
    let dense = a.to_dense();
    let schur = if fixed.is_empty() {
        dense
    } else {
        let a_cc = dense.select_rows(&fixed).select_columns(&fixed);
        let a_cf = dense.select_rows(&fixed).select_columns(&free);
        let eliminated = a_cc.lu().solve(&a_cf).ok_or_else(|| FyError::SingularMatrix {
            context: "algebraic block of a selector pencil".into(),
        })?;
        let a_ff = dense.select_rows(&free).select_columns(&free);
        let a_fc = dense.select_rows(&free).select_columns(&fixed);
        a_ff - a_fc * eliminated
    };
    dense_eigenvalues(&super::Operator::Dense(schur), dense_limit)
}

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending; column `k`
/// of the returned matrix belongs to eigenvalue `k`.
pub fn symmetric_eigenpairs(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let fm = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = fm.self_adjoint_eigen(Side::Lower).map_err(|e| FyError::SolverFailure {
        reason: format!("symmetric eigensolver did not converge on a {n}x{n} matrix: {e:?}"),
        iterations: 0,
        residual: f64::NAN,
    })?;
    let (s, u) = (eig.S().column_vector(), eig.U());
    let values = DVector::from_fn(n, |k, _| s[k]);
    let mut vectors = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut v = DVector::from_fn(n, |i, _| u[(i, k)]);
        fix_sign(&mut v);
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Result of matching one eigenvalue multiset into another.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatch {
    /// Largest distance among matched pairs.
    pub max_distance: f64,
    /// `assignment[i]` is the candidate index matched to reference `i`.
    pub assignment: Vec<usize>,
}

/// Greedy minimal-distance matching of every reference value to a distinct
/// candidate value.
pub fn match_spectra(reference: &[Complex<f64>], candidates: &[Complex<f64>]) -> Result<SpectrumMatch> {
    if reference.len() > candidates.len() {
        return Err(FyError::InvalidInput(format!(
            "cannot match {} values into {} candidates",
            reference.len(),
            candidates.len()
        )));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(reference.len() * candidates.len());
    for (i, r) in reference.iter().enumerate() {
        for (j, c) in candidates.iter().enumerate() {
            pairs.push(((r - c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut assignment = vec![usize::MAX; reference.len()];
    let mut taken = vec![false; candidates.len()];
    let mut left = reference.len();
    let mut max_distance: f64 = 0.0;
    for (dist, i, j) in pairs {
        if left == 0 {
            break;
        }
        if assignment[i] == usize::MAX && !taken[j] {
            assignment[i] = j;
            taken[j] = true;
            max_distance = max_distance.max(dist);
            left -= 1;
        }
    }
    Ok(SpectrumMatch { max_distance, assignment })
}

/// Hausdorff distance between two finite point sets in the complex plane.
pub fn hausdorff_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let directed = |x: &[Complex<f64>], y: &[Complex<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Tuning for [`shift_invert_eigenpair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftInvertOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Refactor at the current eigenvalue estimate when the residual has
    /// stopped shrinking quickly; at most this many times.
    pub max_refactors: usize,
}

impl Default for ShiftInvertOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            max_refactors: 3,
        }
    }
}

/// Eigenpair of the pencil `(A, B)` nearest `target` by inverse iteration on
/// `(A − σB)⁻¹B` with a reused LU factorization. The eigenvalue estimate is the
/// least-squares quotient `(Bx)ᵀAx / (Bx)ᵀBx`, which minimizes the residual for
/// the current vector. Slow progress triggers a refactorization at that
/// estimate.
pub fn shift_invert_eigenpair(
    a: &dyn LinearOperator,
    b: Option<&dyn LinearOperator>,
    target: f64,
    opts: ShiftInvertOptions,
) -> Result<EigenResult> {
    let n = a.dim();
    if n == 0 {
        return Err(FyError::InvalidInput("empty operator".into()));
    }
    let apply_b = |x: &DVector<f64>| match b {
        Some(b) => b.apply(x),
        None => x.clone(),
    };
    let factor = |shift: f64| {
        DenseLu::factor(a, b, shift).map_err(|e| match e {
            FyError::SingularMatrix { .. } => FyError::ShiftSingular { target: shift },
            other => other,
        })
    };

    let mut lu = factor(target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(START_VECTOR_SEED);
    let mut x = DVector::from_fn(n, |_, _| 1.0 + 0.1 * rng.gen_range(-1.0..1.0));
    x /= x.norm();

    let mut refactors = 0;
    let mut history: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::INFINITY);
    for it in 1..=opts.max_iter {
        let y = lu.solve(&apply_b(&x));
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(FyError::SolverFailure {
                reason: "inverse iteration produced a degenerate vector".into(),
                iterations: it,
                residual: last.1,
            });
        }
        x = y / norm;
        fix_sign(&mut x);
        let (z, residual) = quotient_and_residual(a, &apply_b, &x);
        last = (z, residual);
        if residual <= opts.tol {
            return Ok(EigenResult {
                eigenvalue: z,
                eigenvector: x,
                residual_norm: residual,
                iterations: it,
                method: "shift-invert".into(),
            });
        }
        history.push(residual);
        let k = history.len();
        let stalled = k >= 8 && history[k - 1] > 0.5 * history[k - 8];
        if stalled && refactors < opts.max_refactors && z.is_finite() {
            // Nudge off the estimate so the factorization stays regular.
            let shift = z - 1e-9 * (1.0 + z.abs());
            if let Ok(new_lu) = factor(shift) {
                lu = new_lu;
                refactors += 1;
                history.clear();
            }
        }
    }
    Err(FyError::SolverFailure {
        reason: format!("no convergence to tolerance {:e} near target {target}", opts.tol),
        iterations: opts.max_iter,
        residual: last.1,
    })
}

pub(crate) fn quotient_and_residual(
    a: &dyn LinearOperator,
    apply_b: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
) -> (f64, f64) {
    let ax = a.apply(x);
    let bx = apply_b(x);
    let z = bx.dot(&ax) / bx.dot(&bx);
    let residual = (ax - &bx * z).norm() / x.norm();
    (z, residual)
}

/// Deterministic sign: the entry of largest magnitude is made positive.
pub(crate) fn fix_sign(x: &mut DVector<f64>) {
    if x.is_empty() {
        return;
    }
    if x[x.iamax()] < 0.0 {
        x.neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops::Operator;
    use nalgebra::dmatrix;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn diagonal_eigenvalues() {
        let op = Operator::Diagonal(DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(dense_eigenvalues(&op, 10).unwrap(), vec![c(1.0), c(2.0), c(3.0)]);
    }

    #[test]
    fn involution_eigenvalues() {
        let op = Operator::Dense(dmatrix![0.0, 1.0; 1.0, 0.0]);
        let ev = dense_eigenvalues(&op, 10).unwrap();
        assert!((ev[0] - c(-1.0)).norm() < 1e-14 && (ev[1] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let op = Operator::Dense(dmatrix![0.0, -1.0; 1.0, 0.0]);
        let ev = dense_eigenvalues(&op, 10).unwrap();
        assert!((ev[0] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn dense_limit_enforced() {
        let op = Operator::identity(5);
        assert_eq!(dense_eigenvalues(&op, 4), Err(FyError::TooLarge { dim: 5, cap: 4 }));
    }

    #[test]
    fn greedy_matching_prefers_closest() {
        let m = match_spectra(&[c(1.0), c(2.0)], &[c(2.1), c(0.0), c(1.0)]).unwrap();
        assert_eq!(m.assignment, vec![2, 0]);
        assert!((m.max_distance - 0.1).abs() < 1e-12);
        assert!(match_spectra(&[c(1.0), c(2.0)], &[c(1.0)]).is_err());
    }

    #[test]
    fn shift_invert_on_diagonal() {
        let op = Operator::Diagonal(DVector::from_vec(vec![1.0, 5.0]));
        let r = shift_invert_eigenpair(&op, None, 0.9, ShiftInvertOptions::default()).unwrap();
        assert!((r.eigenvalue - 1.0).abs() < 1e-12);
        assert!((r.eigenvector[0].abs() - 1.0).abs() < 1e-10);
        assert!(r.residual_norm <= 1e-10);
    }

    #[test]
    fn exact_shift_is_singular() {
        let op = Operator::Diagonal(DVector::from_vec(vec![1.0, 5.0]));
        assert_eq!(
            shift_invert_eigenpair(&op, None, 5.0, ShiftInvertOptions::default()),
            Err(FyError::ShiftSingular { target: 5.0 })
        );
    }

    #[test]
    fn selector_pencil_eliminates_algebraic_rows() {
        // Row 2 forces x2 = -x1, leaving 2 x1 - x1 = z x1.
        let a = Operator::Dense(dmatrix![2.0, 1.0; 1.0, 1.0]);
        let b = Operator::Diagonal(DVector::from_vec(vec![1.0, 0.0]));
        let roots = selector_pencil_eigenvalues(&a, &b, 10).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re - 1.0).abs() < 1e-15 && roots[0].im == 0.0);
        let wrong = Operator::Diagonal(DVector::from_vec(vec![1.0, 0.5]));
        assert!(selector_pencil_eigenvalues(&a, &wrong, 10).is_err());
    }

    #[test]
    fn symmetric_pairs_sorted() {
        let (vals, vecs) = symmetric_eigenpairs(&dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let v = vecs.column(1);
        assert!((v[0] - v[1]).abs() < 1e-14 && v[0] > 0.0);
    }
}
