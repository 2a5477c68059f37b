use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use nalgebra::DVector;

use super::LinearOperator;
use crate::error::{FyError, Result};

/// Condition estimates above this are treated as singular to working precision.
const SINGULAR_CONDITION: f64 = 1e15;

/// LU factorization with partial pivoting of `A - shift·B`, reusable across
/// many right-hand sides.
pub struct DenseLu {
    lu: PartialPivLu<f64>,
    dim: usize,
    norm1: f64,
}

impl DenseLu {
    /// Factors `a - shift·b` (`b` defaults to the identity).
    ///
    /// Fails only on an exactly zero or non-finite pivot; near-singular
    /// factorizations are kept, since inverse iteration relies on them.
    pub fn factor(a: &dyn LinearOperator, b: Option<&dyn LinearOperator>, shift: f64) -> Result<Self> {
        let n = a.dim();
        if let Some(b) = b {
            if b.dim() != n {
                return Err(FyError::InvalidInput(format!(
                    "pencil dimensions differ: {n} and {}",
                    b.dim()
                )));
            }
        }
        let mut m = Mat::<f64>::zeros(n, n);
        a.for_each_entry(&mut |i, j, v| m[(i, j)] += v);
        match b {
            Some(b) => b.for_each_entry(&mut |i, j, v| m[(i, j)] -= shift * v),
            None => (0..n).for_each(|i| m[(i, i)] -= shift),
        }
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = m.partial_piv_lu();
        drop(m);
        let u = lu.U();
        let degenerate = (0..n).any(|i| {
            let p = u[(i, i)];
            p == 0.0 || !p.is_finite()
        });
        if degenerate {
            return Err(FyError::SingularMatrix {
                context: format!("zero pivot factoring a {n}x{n} matrix at shift {shift}"),
            });
        }
        Ok(Self { lu, dim: n, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let b = Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        DVector::from_fn(self.dim, |i, _| x[(i, 0)])
    }

    fn solve_transpose(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let b = Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        let x = self.lu.solve_transpose(&b);
        DVector::from_fn(self.dim, |i, _| x[(i, 0)])
    }

    /// Hager's estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 1.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut inv_norm = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            inv_norm = y.lp_norm(1);
            let sign = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&sign);
            let jmax = z.iamax();
            let zmax = z[jmax].abs();
            if zmax <= z.dot(&x) {
                break;
            }
            x.fill(0.0);
            x[jmax] = 1.0;
        }
        if !inv_norm.is_finite() {
            return f64::INFINITY;
        }
        self.norm1 * inv_norm
    }
}

/// Solves `(A - z) x = rhs` by dense LU with partial pivoting.
pub fn linear_solve(a: &dyn LinearOperator, z: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != a.dim() {
        return Err(FyError::InvalidInput(format!(
            "right-hand side has length {} for an operator of dimension {}",
            rhs.len(),
            a.dim()
        )));
    }
    let lu = DenseLu::factor(a, None, z)?;
    let cond = lu.condition_estimate();
    if cond > SINGULAR_CONDITION {
        return Err(FyError::SingularMatrix {
            context: format!("condition estimate {cond:e} at shift {z}"),
        });
    }
    Ok(lu.solve(rhs))
}
