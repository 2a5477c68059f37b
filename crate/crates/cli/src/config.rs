//! Run configuration: a TOML file with `[model]`, `[solver]`, `[check]` and
//! `[output]` sections. Unknown keys are errors.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fy_core::blockops::DEFAULT_DENSE_LIMIT;
use fy_core::lattice::{Boundary, LatticeModel};
use fy_core::potential::PotentialRegistry;

use crate::error::CliError;

/// Environment variable that overrides `solver.dense_limit`.
pub const DENSE_LIMIT_ENV: &str = "FY_DENSE_LIMIT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Any field left out falls back to the preset named by `preset`, if given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSection>,
    /// One scale per pair in canonical order; makes the particles
    /// distinguishable when the scales differ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_scales: Option<Vec<f64>>,
    /// Sites; any negative value means no core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_limit: usize,
    pub method: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            target: None,
            tol: 1e-10,
            max_iter: 500,
            dense_limit: DEFAULT_DENSE_LIMIT,
            method: "shift-invert".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub seeds: usize,
    pub n: usize,
    pub dim: usize,
    pub hermitian: bool,
    pub tol: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            seeds: 100,
            n: 3,
            dim: 4,
            hermitian: false,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be finite, got {v}")))
            }
        };
        if let Some(t) = self.model.t {
            finite("model.t", t)?;
        }
        if let Some(p) = &self.model.potential {
            for v in &p.params {
                finite("model.potential.params", *v)?;
            }
        }
        if let Some(target) = self.solver.target {
            finite("solver.target", target)?;
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) {
            return Err(CliError::Config(format!("solver.tol must be positive, got {}", self.solver.tol)));
        }
        if !(self.check.tol > 0.0 && self.check.tol.is_finite()) {
            return Err(CliError::Config(format!("check.tol must be positive, got {}", self.check.tol)));
        }
        Ok(())
    }

    /// Applies `FY_DENSE_LIMIT` if set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(DENSE_LIMIT_ENV) {
            self.solver.dense_limit = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{DENSE_LIMIT_ENV} must be a positive integer, got {v:?}")))?;
        }
        Ok(())
    }

    /// Fills every model field from the preset (if any) so the echoed config
    /// is complete.
    pub fn resolve_model(&mut self) -> Result<(), CliError> {
        let m = &mut self.model;
        if let Some(name) = m.preset.clone() {
            let base = LatticeModel::preset(&name).map_err(|e| CliError::Config(e.to_string()))?;
            m.n.get_or_insert(base.particles());
            m.l.get_or_insert(base.sites());
            m.boundary.get_or_insert_with(|| base.boundary().name().to_string());
            m.t.get_or_insert(base.hopping());
            m.potential.get_or_insert_with(|| PotentialSection {
                kind: base.potential().kind().to_string(),
                params: base.potential().params(),
            });
            m.core_radius.get_or_insert(base.core_radius().map_or(-1, |c| c as i64));
        }
        m.boundary.get_or_insert_with(|| "box".into());
        m.t.get_or_insert(1.0);
        m.core_radius.get_or_insert(-1);
        Ok(())
    }

    /// Builds the lattice model; call [`RunConfig::resolve_model`] first.
    pub fn model(&self) -> Result<LatticeModel, CliError> {
        let m = &self.model;
        let missing = |key: &str| CliError::Config(format!("model.{key} is required (or set model.preset)"));
        let n = m.n.ok_or_else(|| missing("N"))?;
        let l = m.l.ok_or_else(|| missing("L"))?;
        let boundary: Boundary = m
            .boundary
            .as_deref()
            .unwrap_or("box")
            .parse()
            .map_err(|e: fy_core::FyError| CliError::Config(e.to_string()))?;
        let potential = m.potential.as_ref().ok_or_else(|| missing("potential"))?;
        let v = PotentialRegistry::with_defaults()
            .build(&potential.kind, &potential.params)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut model = LatticeModel::new(n, l, boundary, m.t.unwrap_or(1.0), Arc::clone(&v))
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(scales) = &m.pair_scales {
            model = model
                .with_pair_scales(scales.clone())
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        let core = m.core_radius.unwrap_or(-1);
        Ok(model.with_core_radius(usize::try_from(core).ok()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[model]\nN = 3\nwidth = 2\n").is_err());
        assert!(RunConfig::parse("[solvr]\ntol = 1e-9\n").is_err());
    }

    #[test]
    fn preset_fills_model() {
        let mut c = RunConfig::parse("[model]\npreset = \"tiny3\"\n").unwrap();
        c.resolve_model().unwrap();
        let m = c.model().unwrap();
        assert_eq!((m.particles(), m.sites(), m.core_radius()), (3, 6, None));
        assert_eq!(c.model.potential.as_ref().unwrap().kind, "gaussian");
    }

    #[test]
    fn overrides_and_core() {
        let mut c = RunConfig::parse(
            "[model]\npreset = \"tiny3\"\nL = 5\ncore_radius = 1\n[model.potential]\nkind = \"on-site\"\nparams = [-2.0]\n",
        )
        .unwrap();
        c.resolve_model().unwrap();
        let m = c.model().unwrap();
        assert_eq!((m.sites(), m.core_radius()), (5, Some(1)));
        assert_eq!(m.potential().kind(), "on-site");
    }

    #[test]
    fn missing_fields_reported() {
        let mut c = RunConfig::parse("[model]\nN = 3\n").unwrap();
        c.resolve_model().unwrap();
        let err = c.model().unwrap_err().to_string();
        assert!(err.contains("model.L"), "{err}");
    }

    #[test]
    fn non_finite_rejected() {
        assert!(RunConfig::parse("[solver]\ntarget = nan\n").is_err());
        assert!(RunConfig::parse("[solver]\ntol = 0.0\n").is_err());
    }
}
