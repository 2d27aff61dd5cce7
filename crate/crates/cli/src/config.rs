//! Experiment plans: the JSON schema, validation and the config hash.

use std::path::{Path, PathBuf};

use fclab_core::{ModelParams, ModelRegistry, ModelSetup};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    /// `p̂(ε)` curves for every (n, σ, α).
    Curve,
    /// `ε(α, p)` for every n; plotted as ε against n.
    Solve,
    /// Same computation as `solve`, plotted as contours over (α, p) per n.
    Contour,
    /// Tabulated posteriors of a few replicates.
    Snapshots,
}

/// A real grid, either listed or evenly spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { from: f64, to: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Linspace { from, to, count } => match count {
                0 => Vec::new(),
                1 => vec![from],
                _ => (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            to
                        } else {
                            from + (to - from) * i as f64 / (count - 1) as f64
                        }
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotPlan {
    /// Replicates tabulated per sample size.
    pub count: u64,
    pub n: Vec<u32>,
    pub psi: Grid,
    /// Ball radius shaded in plots.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    pub kind: PlanKind,
    /// Sample sizes; kind `snapshots` uses `snapshots.n` instead.
    #[serde(default)]
    pub n: Vec<u32>,
    /// Noise levels, for models with a known σ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Grid>,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Grid>,
    #[serde(default = "default_k")]
    pub k: u64,
    #[serde(default = "default_m_post")]
    pub m_post: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<SnapshotPlan>,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_k() -> u64 {
    100_000
}

fn default_m_post() -> usize {
    1000
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn check_probs(field: &str, xs: &[f64], increasing: bool) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(invalid(field, "must be nonempty"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(invalid(field, format!("values must lie in (0, 1), got {x}")));
    }
    if increasing && xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(field, "must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentPlan {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{}:{}:{}: {e}", origin.display(), e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    /// The σ values to sweep; a single "none" entry for models without σ.
    pub fn sigma_values(&self) -> Vec<Option<f64>> {
        match &self.sigma {
            Some(v) => v.iter().map(|&s| Some(s)).collect(),
            None => vec![None],
        }
    }

    pub fn eps_values(&self) -> Vec<f64> {
        self.eps.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn setup(&self, n: u32, sigma: Option<f64>) -> ModelSetup {
        ModelSetup {
            n,
            sigma,
            m_post: self.m_post,
        }
    }

    /// Check the plan against the schema and build every model it will use,
    /// so that anything reported later is a numerical failure.
    pub fn validate(&self, registry: &ModelRegistry) -> Result<(), CliError> {
        let factory = registry.get(&self.model).map_err(|e| invalid("model", e))?;
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.m_post == 0 {
            return Err(invalid("m_post", "must be at least 1"));
        }
        match (&self.sigma, factory.uses_sigma()) {
            (Some(s), true) => {
                if s.is_empty() {
                    return Err(invalid("sigma", "must be nonempty"));
                }
                if let Some(x) = s.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                    return Err(invalid("sigma", format!("values must be positive, got {x}")));
                }
            }
            (None, true) => return Err(invalid("sigma", format!("required by model `{}`", self.model))),
            (Some(_), false) => return Err(invalid("sigma", format!("not used by model `{}`", self.model))),
            (None, false) => {}
        }
        let ns: &[u32] = match (self.kind, &self.snapshots) {
            (PlanKind::Snapshots, Some(s)) => &s.n,
            (PlanKind::Snapshots, None) => return Err(invalid("snapshots", "required for kind `snapshots`")),
            _ => &self.n,
        };
        if self.kind != PlanKind::Snapshots && self.n.is_empty() {
            return Err(invalid("n", "must be nonempty"));
        }
        match self.kind {
            PlanKind::Curve => {
                let eps = self.eps_values();
                if eps.is_empty() {
                    return Err(invalid("eps", "grid must be nonempty"));
                }
                if eps.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(invalid("eps", "grid must be strictly increasing"));
                }
                if let Some(e) = eps.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                    return Err(invalid("eps", format!("values must be finite and nonnegative, got {e}")));
                }
                check_probs("alpha", &self.alpha, false)?;
                if self.p.is_some() {
                    return Err(invalid("p", "only used by kinds `solve` and `contour`"));
                }
            }
            PlanKind::Solve | PlanKind::Contour => {
                check_probs("alpha", &self.alpha, true)?;
                check_probs("p", &self.p_values(), true)?;
                if self.eps.is_some() {
                    return Err(invalid("eps", "only used by kind `curve`"));
                }
                if self.sigma.as_ref().is_some_and(|s| s.len() > 1) {
                    return Err(invalid("sigma", "kinds `solve` and `contour` take a single noise level"));
                }
            }
            PlanKind::Snapshots => check_probs("alpha", &self.alpha, false)?,
        }
        if let Some(s) = &self.snapshots {
            if s.count == 0 {
                return Err(invalid("snapshots.count", "must be at least 1"));
            }
            if s.n.is_empty() {
                return Err(invalid("snapshots.n", "must be nonempty"));
            }
            let psi = s.psi.values();
            if psi.is_empty() {
                return Err(invalid("snapshots.psi", "grid must be nonempty"));
            }
            if psi.iter().any(|x| !x.is_finite()) || psi.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid("snapshots.psi", "grid must be finite and strictly increasing"));
            }
            if !(s.epsilon >= 0.0 && s.epsilon.is_finite()) {
                return Err(invalid("snapshots.epsilon", "must be finite and nonnegative"));
            }
        }
        let eps = self.eps_values();
        let mut sizes: Vec<u32> = self.n.clone();
        sizes.extend_from_slice(ns);
        for &n in &sizes {
            for sigma in self.sigma_values() {
                let model = registry
                    .build(&self.model, &self.params, &self.setup(n, sigma))
                    .map_err(|e| match e {
                        fclab_core::Error::MissingParam { field, .. } => {
                            invalid(&format!("params.{field}"), "missing")
                        }
                        other => invalid(if n == 0 { "n" } else { "params" }, format!("n={n}: {other}")),
                    })?;
                if self.kind == PlanKind::Curve {
                    if let Some(e) = eps.iter().find(|e| **e >= model.radius_limit()) {
                        return Err(invalid(
                            "eps",
                            format!("{e} is not below the radius limit {} of model `{}`", model.radius_limit(), self.model),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the plan without its output
    /// directory.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let json = serde_json::to_string(&canonical).expect("plan serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(json: &str) -> Result<ExperimentPlan, CliError> {
        let p = ExperimentPlan::from_json(json, Path::new("test.json"))?;
        p.validate(&ModelRegistry::with_builtin())?;
        Ok(p)
    }

    const BASE: &str = r#"{"model": "uniform-support", "params": {"theta0": 1}, "kind": "curve",
        "n": [1, 5], "eps": [0, 0.1, 0.3], "alpha": [0.5], "k": 100, "seed": 3}"#;

    #[test]
    fn accepts_base_plan() {
        let p = plan(BASE).unwrap();
        assert_eq!(p.m_post, 1000);
        assert_eq!(p.eps_values(), [0.0, 0.1, 0.3]);
    }

    #[test]
    fn field_named_in_errors() {
        let cases = [
            (BASE.replace("[0, 0.1, 0.3]", "[]"), "eps:"),
            (BASE.replace("[0, 0.1, 0.3]", "[0.3, 0.1]"), "eps:"),
            (BASE.replace("[0, 0.1, 0.3]", "[0.5, 1.0]"), "eps:"),
            (BASE.replace("\"k\": 100", "\"k\": 0"), "k:"),
            (BASE.replace("[0.5]", "[1.5]"), "alpha:"),
            (BASE.replace("uniform-support", "uniform-sup"), "model:"),
            (BASE.replace("\"theta0\": 1", ""), "params.theta0"),
            (BASE.replace("\"theta0\": 1", "\"theta0\": 1, \"mu0\": 2"), "params.mu0"),
            (BASE.replace("[1, 5]", "[]"), "n:"),
            (BASE.replace("\"seed\": 3", "\"seed\": 3, \"sigma\": [1]"), "sigma:"),
        ];
        for (json, field) in cases {
            let err = plan(&json).unwrap_err();
            assert!(matches!(err, CliError::Config(_)));
            assert!(err.to_string().contains(field), "{err} should mention {field}");
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = plan(&BASE.replace("\"kind\"", "\"knd\"")).unwrap_err();
        assert!(err.to_string().starts_with("config error: test.json:1:"), "{err}");
    }

    #[test]
    fn linspace_grid() {
        let g = Grid::Linspace { from: 0.0, to: 0.95, count: 96 };
        let v = g.values();
        assert_eq!(v.len(), 96);
        assert_eq!(v[95], 0.95);
        assert!((v[30] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = plan(BASE).unwrap();
        let h = a.config_hash();
        a.out = Some("elsewhere".into());
        assert_eq!(a.config_hash(), h);
        a.seed = 4;
        assert_ne!(a.config_hash(), h);
        assert_eq!(h.len(), 64);
    }
}
