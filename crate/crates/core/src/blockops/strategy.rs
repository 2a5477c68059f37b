//! Interchangeable strategies for locating one eigenpair near a target,
//! registered by name so that configs and the CLI can pick one at runtime.

use std::collections::BTreeMap;

use super::eigen::{dense_eigenvalues, shift_invert_eigenpair, EigenResult, ShiftInvertOptions};
use super::LinearOperator;
use crate::error::{FyError, Result};

/// Everything a strategy needs to find the eigenpair of `(A, B)` nearest
/// `target`.
pub struct SolveRequest<'a> {
    pub a: &'a dyn LinearOperator,
    pub b: Option<&'a dyn LinearOperator>,
    pub target: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_limit: usize,
}

pub trait EigenStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn solve(&self, request: &SolveRequest<'_>) -> Result<EigenResult>;
}

/// Inverse iteration from the target with factorization reuse.
pub struct ShiftInvertStrategy;

impl EigenStrategy for ShiftInvertStrategy {
    fn name(&self) -> &'static str {
        "shift-invert"
    }

    fn description(&self) -> &'static str {
        "inverse iteration on (A - target B)^-1 B with Rayleigh-type refinement"
    }

    fn solve(&self, req: &SolveRequest<'_>) -> Result<EigenResult> {
        shift_invert_eigenpair(
            req.a,
            req.b,
            req.target,
            ShiftInvertOptions {
                tol: req.tol,
                max_iter: req.max_iter,
                ..ShiftInvertOptions::default()
            },
        )
    }
}

/// Full dense spectrum, nearest real eigenvalue picked, eigenvector polished
/// by inverse iteration. Standard problems only.
pub struct DenseStrategy;

impl EigenStrategy for DenseStrategy {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn description(&self) -> &'static str {
        "dense Schur spectrum, nearest real eigenvalue, inverse-iteration polish"
    }

    fn solve(&self, req: &SolveRequest<'_>) -> Result<EigenResult> {
        if req.b.is_some() {
            return Err(FyError::InvalidInput(
                "the dense strategy handles standard eigenproblems only".into(),
            ));
        }
        let spectrum = dense_eigenvalues(req.a, req.dense_limit)?;
        let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let nearest = spectrum
            .iter()
            .filter(|z| z.im.abs() <= 1e-10 * scale)
            .min_by(|x, y| (x.re - req.target).abs().total_cmp(&(y.re - req.target).abs()))
            .ok_or_else(|| FyError::SolverFailure {
                reason: "no real eigenvalue in the spectrum".into(),
                iterations: 0,
                residual: f64::NAN,
            })?;
        let polish_shift = nearest.re - 1e-10 * (1.0 + nearest.re.abs());
        let mut result = shift_invert_eigenpair(
            req.a,
            None,
            polish_shift,
            ShiftInvertOptions {
                tol: req.tol,
                max_iter: req.max_iter,
                ..ShiftInvertOptions::default()
            },
        )?;
        result.method = self.name().into();
        Ok(result)
    }
}

/// Name → strategy table.
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn EigenStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    /// The built-in strategies: `shift-invert` and `dense`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ShiftInvertStrategy));
        r.register(Box::new(DenseStrategy));
        r
    }

    /// Registers a strategy, replacing any previous one of the same name.
    pub fn register(&mut self, strategy: Box<dyn EigenStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn EigenStrategy> {
        self.strategies.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            FyError::InvalidInput(format!(
                "unknown solver method {name:?}; known: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops::Operator;
    use nalgebra::{dmatrix, DVector};

    #[test]
    fn strategies_agree_on_small_matrix() {
        let a = Operator::Dense(dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 1.0; 0.0, 1.0, 4.0]);
        let registry = StrategyRegistry::with_defaults();
        assert_eq!(registry.names(), vec!["dense", "shift-invert"]);
        let req = SolveRequest {
            a: &a,
            b: None,
            target: 0.0,
            tol: 1e-12,
            max_iter: 200,
            dense_limit: 100,
        };
        let d = registry.get("dense").unwrap().solve(&req).unwrap();
        let s = registry.get("shift-invert").unwrap().solve(&req).unwrap();
        assert!((d.eigenvalue - s.eigenvalue).abs() < 1e-12);
        assert_eq!(d.method, "dense");
        assert!(registry.get("lanczos").is_err());
    }

    #[test]
    fn dense_rejects_pencils() {
        let a = Operator::identity(2);
        let b = Operator::Diagonal(DVector::from_vec(vec![1.0, 0.0]));
        let req = SolveRequest {
            a: &a,
            b: Some(&b),
            target: 0.0,
            tol: 1e-12,
            max_iter: 10,
            dense_limit: 100,
        };
        assert!(DenseStrategy.solve(&req).is_err());
    }
}
