//! Pair-potential families, registered by name.
//!
//! A family turns a parameter list into a radial table `v(r)` over integer
//! lattice separations. Configs select a family through
//! `model.potential.kind` and pass `model.potential.params` verbatim.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{FyError, Result};

/// A two-body potential as a function of lattice separation.
pub trait PairPotential: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;

    fn params(&self) -> Vec<f64>;

    fn value(&self, separation: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnSite {
    pub strength: f64,
}

impl PairPotential for OnSite {
    fn kind(&self) -> &'static str {
        "on-site"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.strength]
    }
    fn value(&self, r: usize) -> f64 {
        if r == 0 {
            self.strength
        } else {
            0.0
        }
    }
}

/// `depth` for every separation up to and including `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareWell {
    pub depth: f64,
    pub range: usize,
}

impl PairPotential for SquareWell {
    fn kind(&self) -> &'static str {
        "square-well"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.depth, self.range as f64]
    }
    fn value(&self, r: usize) -> f64 {
        if r <= self.range {
            self.depth
        } else {
            0.0
        }
    }
}

/// `depth · exp(-(r / width)²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub depth: f64,
    pub width: f64,
}

impl PairPotential for Gaussian {
    fn kind(&self) -> &'static str {
        "gaussian"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.depth, self.width]
    }
    fn value(&self, r: usize) -> f64 {
        let x = r as f64 / self.width;
        self.depth * (-x * x).exp()
    }
}

/// `table[r]`, zero beyond the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub table: Vec<f64>,
}

impl PairPotential for Tabulated {
    fn kind(&self) -> &'static str {
        "tabulated"
    }
    fn params(&self) -> Vec<f64> {
        self.table.clone()
    }
    fn value(&self, r: usize) -> f64 {
        self.table.get(r).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Free;

impl PairPotential for Free {
    fn kind(&self) -> &'static str {
        "none"
    }
    fn params(&self) -> Vec<f64> {
        Vec::new()
    }
    fn value(&self, _: usize) -> f64 {
        0.0
    }
}

type Constructor = fn(&[f64]) -> Result<Arc<dyn PairPotential>>;

/// Name → potential-family constructor table.
pub struct PotentialRegistry {
    families: BTreeMap<&'static str, Constructor>,
}

impl PotentialRegistry {
    pub fn empty() -> Self {
        Self {
            families: BTreeMap::new(),
        }
    }

    /// Built-in families: `on-site [g]`, `square-well [depth, range]`,
    /// `gaussian [depth, width]`, `tabulated [v0, v1, ...]`, `none []`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("on-site", |p| {
            let [g] = expect_params::<1>("on-site", p)?;
            Ok(Arc::new(OnSite { strength: g }))
        });
        r.register("square-well", |p| {
            let [depth, range] = expect_params::<2>("square-well", p)?;
            if range < 0.0 || range.fract() != 0.0 {
                return Err(FyError::InvalidInput(format!(
                    "square-well range must be a nonnegative integer, got {range}"
                )));
            }
            Ok(Arc::new(SquareWell {
                depth,
                range: range as usize,
            }))
        });
        r.register("gaussian", |p| {
            let [depth, width] = expect_params::<2>("gaussian", p)?;
            if width <= 0.0 {
                return Err(FyError::InvalidInput(format!("gaussian width must be positive, got {width}")));
            }
            Ok(Arc::new(Gaussian { depth, width }))
        });
        r.register("tabulated", |p| {
            check_finite("tabulated", p)?;
            Ok(Arc::new(Tabulated { table: p.to_vec() }))
        });
        r.register("none", |p| {
            expect_params::<0>("none", p)?;
            Ok(Arc::new(Free))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, constructor: Constructor) {
        self.families.insert(name, constructor);
    }

    pub fn build(&self, kind: &str, params: &[f64]) -> Result<Arc<dyn PairPotential>> {
        let ctor = self.families.get(kind).ok_or_else(|| {
            FyError::InvalidInput(format!(
                "unknown potential kind {kind:?}; known: {}",
                self.names().join(", ")
            ))
        })?;
        ctor(params)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.families.keys().copied().collect()
    }
}

impl Default for PotentialRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

fn check_finite(kind: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(FyError::InvalidInput(format!("{kind} parameters must be finite: {p:?}")));
    }
    Ok(())
}

fn expect_params<const K: usize>(kind: &str, p: &[f64]) -> Result<[f64; K]> {
    check_finite(kind, p)?;
    p.try_into().map_err(|_| {
        FyError::InvalidInput(format!("{kind} takes {K} parameter(s), got {}", p.len()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_evaluate() {
        let r = PotentialRegistry::with_defaults();
        let g = r.build("gaussian", &[-4.0, 1.0]).unwrap();
        assert_eq!(g.value(0), -4.0);
        assert!((g.value(1) - (-4.0 * (-1.0f64).exp())).abs() < 1e-15);
        let w = r.build("square-well", &[-2.0, 1.0]).unwrap();
        assert_eq!((w.value(1), w.value(2)), (-2.0, 0.0));
        let t = r.build("tabulated", &[1.0, 2.0]).unwrap();
        assert_eq!((t.value(1), t.value(5)), (2.0, 0.0));
        assert_eq!(r.build("on-site", &[-6.0]).unwrap().value(0), -6.0);
        assert_eq!(r.build("none", &[]).unwrap().value(0), 0.0);
    }

    #[test]
    fn bad_parameters_rejected() {
        let r = PotentialRegistry::with_defaults();
        assert!(r.build("gaussian", &[-4.0]).is_err());
        assert!(r.build("gaussian", &[-4.0, 0.0]).is_err());
        assert!(r.build("square-well", &[-1.0, 1.5]).is_err());
        assert!(r.build("on-site", &[f64::NAN]).is_err());
        assert!(r.build("yukawa", &[1.0]).is_err());
    }
}
