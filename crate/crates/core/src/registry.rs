//! Name-based model registry.
//!
//! Each model is built by a [`ModelFactory`] from a flat parameter record and
//! the per-run setup (sample size, noise level, posterior draw count). The
//! runner looks factories up by tag, so adding a model means registering one
//! more factory.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::BeliefModel;
use crate::error::{domain, Error, Result};
use crate::models::gaussian::{CoefVarPrior, CoefVariationModel, GaussianConjugateModel, GaussianRatioModel};
use crate::models::uniform::{UniformProductModel, UniformSupportModel};
use crate::numerics::QuadratureRule;

/// Model parameters as they appear in experiment configs. Which fields are
/// required or allowed depends on the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_y0: Option<f64>,
    /// Second sample size for the product model; defaults to `n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<CoefVarPrior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
}

impl ModelParams {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut push = |name, set: bool| {
            if set {
                out.push(name)
            }
        };
        push("theta0", self.theta0.is_some());
        push("theta_x0", self.theta_x0.is_some());
        push("theta_y0", self.theta_y0.is_some());
        push("m", self.m.is_some());
        push("sigma2", self.sigma2.is_some());
        push("prior_mean", self.prior_mean.is_some());
        push("prior_var", self.prior_var.is_some());
        push("mu0", self.mu0.is_some());
        push("sigma0", self.sigma0.is_some());
        push("prior", self.prior.is_some());
        push("quadrature", self.quadrature.is_some());
        push("quad_tol", self.quad_tol.is_some());
        out
    }

    /// Reject fields that the model does not read.
    fn only(&self, model: &'static str, allowed: &[&str]) -> Result<()> {
        match self.present().into_iter().find(|f| !allowed.contains(f)) {
            Some(f) => Err(domain(format!("params.{f} is not a parameter of model `{model}`"))),
            None => Ok(()),
        }
    }
}

fn need<T: Copy>(v: Option<T>, model: &'static str, field: &'static str) -> Result<T> {
    v.ok_or(Error::MissingParam { model, field })
}

/// Per-run settings that vary along an experiment's grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSetup {
    pub n: u32,
    /// Known noise level for the Gaussian-ratio model.
    pub sigma: Option<f64>,
    /// Posterior draws per replicate, for sample-based posteriors.
    pub m_post: usize,
}

impl ModelSetup {
    pub fn new(n: u32) -> Self {
        ModelSetup { n, sigma: None, m_post: 1000 }
    }
}

pub trait ModelFactory: Send + Sync {
    fn tag(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    /// Whether the model reads `ModelSetup::sigma`.
    fn uses_sigma(&self) -> bool {
        false
    }
    fn build(&self, params: &ModelParams, setup: &ModelSetup) -> Result<Box<dyn BeliefModel>>;
}

struct UniformSupportFactory;

impl ModelFactory for UniformSupportFactory {
    fn tag(&self) -> &'static str {
        UniformSupportModel::TAG
    }
    fn describe(&self) -> &'static str {
        "U(0, theta) data, Jeffreys prior; params: theta0"
    }
    fn build(&self, p: &ModelParams, s: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        p.only(self.tag(), &["theta0"])?;
        Ok(Box::new(UniformSupportModel::new(need(p.theta0, self.tag(), "theta0")?, s.n)?))
    }
}

struct UniformProductFactory;

impl ModelFactory for UniformProductFactory {
    fn tag(&self) -> &'static str {
        UniformProductModel::TAG
    }
    fn describe(&self) -> &'static str {
        "product of two uniform supports; params: theta_x0, theta_y0, m (defaults to n)"
    }
    fn build(&self, p: &ModelParams, s: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        p.only(self.tag(), &["theta_x0", "theta_y0", "m"])?;
        Ok(Box::new(UniformProductModel::new(
            need(p.theta_x0, self.tag(), "theta_x0")?,
            need(p.theta_y0, self.tag(), "theta_y0")?,
            s.n,
            p.m.unwrap_or(s.n),
        )?))
    }
}

struct GaussianRatioFactory;

impl ModelFactory for GaussianRatioFactory {
    fn tag(&self) -> &'static str {
        GaussianRatioModel::TAG
    }
    fn describe(&self) -> &'static str {
        "ratio of two Gaussian means, known sigma, flat priors; params: theta_x0, theta_y0, quadrature, quad_tol"
    }
    fn uses_sigma(&self) -> bool {
        true
    }
    fn build(&self, p: &ModelParams, s: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        p.only(self.tag(), &["theta_x0", "theta_y0", "quadrature", "quad_tol"])?;
        let model = GaussianRatioModel::new(
            need(p.theta_x0, self.tag(), "theta_x0")?,
            need(p.theta_y0, self.tag(), "theta_y0")?,
            need(s.sigma, self.tag(), "sigma")?,
            s.n,
        )?;
        let tol = p.quad_tol.unwrap_or(model.tol);
        Ok(Box::new(model.with_quadrature(p.quadrature.unwrap_or_default(), tol)?))
    }
}

struct GaussianConjugateFactory;

impl ModelFactory for GaussianConjugateFactory {
    fn tag(&self) -> &'static str {
        GaussianConjugateModel::TAG
    }
    fn describe(&self) -> &'static str {
        "Gaussian mean with known variance and normal prior; params: theta0, sigma2, prior_mean, prior_var"
    }
    fn build(&self, p: &ModelParams, s: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        p.only(self.tag(), &["theta0", "sigma2", "prior_mean", "prior_var"])?;
        Ok(Box::new(GaussianConjugateModel::new(
            need(p.theta0, self.tag(), "theta0")?,
            need(p.sigma2, self.tag(), "sigma2")?,
            need(p.prior_mean, self.tag(), "prior_mean")?,
            need(p.prior_var, self.tag(), "prior_var")?,
            s.n,
        )?))
    }
}

struct CoefVariationFactory;

impl ModelFactory for CoefVariationFactory {
    fn tag(&self) -> &'static str {
        CoefVariationModel::TAG
    }
    fn describe(&self) -> &'static str {
        "coefficient of variation sigma/theta of Gaussian data; params: mu0, sigma0, prior (inverse-variance | jeffreys)"
    }
    fn build(&self, p: &ModelParams, s: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        p.only(self.tag(), &["mu0", "sigma0", "prior"])?;
        Ok(Box::new(CoefVariationModel::new(
            need(p.mu0, self.tag(), "mu0")?,
            need(p.sigma0, self.tag(), "sigma0")?,
            s.n,
            s.m_post,
            p.prior.unwrap_or_default(),
        )?))
    }
}

#[derive(Clone, Default)]
pub struct ModelRegistry {
    factories: BTreeMap<&'static str, Arc<dyn ModelFactory>>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(UniformSupportFactory));
        reg.register(Arc::new(UniformProductFactory));
        reg.register(Arc::new(GaussianRatioFactory));
        reg.register(Arc::new(GaussianConjugateFactory));
        reg.register(Arc::new(CoefVariationFactory));
        reg
    }

    /// Adds a factory, replacing any previous one with the same tag.
    pub fn register(&mut self, factory: Arc<dyn ModelFactory>) {
        self.factories.insert(factory.tag(), factory);
    }

    pub fn get(&self, tag: &str) -> Result<&Arc<dyn ModelFactory>> {
        self.factories.get(tag).ok_or_else(|| Error::UnknownModel(tag.to_string()))
    }

    pub fn tags(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, tag: &str, params: &ModelParams, setup: &ModelSetup) -> Result<Box<dyn BeliefModel>> {
        self.get(tag)?.build(params, setup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tags() {
        let reg = ModelRegistry::with_builtin();
        let tags: Vec<_> = reg.tags().collect();
        assert_eq!(
            tags,
            ["coef-variation", "gaussian-conjugate", "gaussian-ratio", "uniform-product", "uniform-support"]
        );
        assert!(matches!(reg.get("nope"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn builds_and_checks_params() {
        let reg = ModelRegistry::with_builtin();
        let setup = ModelSetup::new(3);
        let p = ModelParams { theta0: Some(1.0), ..Default::default() };
        let m = reg.build("uniform-support", &p, &setup).unwrap();
        assert_eq!(m.true_value(), 1.0);
        assert_eq!(m.sample_size(), 3);

        let err = reg.build("uniform-product", &p, &setup).unwrap_err();
        assert!(err.to_string().contains("params.theta0"), "{err}");

        let p = ModelParams { theta_x0: Some(0.1), theta_y0: Some(0.01), ..Default::default() };
        let err = reg.build("gaussian-ratio", &p, &setup).unwrap_err();
        assert_eq!(err, Error::MissingParam { model: "gaussian-ratio", field: "sigma" });
        let m = reg
            .build("gaussian-ratio", &p, &ModelSetup { sigma: Some(1.0), ..setup })
            .unwrap();
        assert!((m.true_value() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn params_reject_unknown_fields() {
        let bad = serde_json::from_str::<ModelParams>(r#"{"theta0": 1.0, "thet": 2}"#);
        assert!(bad.is_err());
        let good: ModelParams = serde_json::from_str(r#"{"mu0": 1, "sigma0": 10, "prior": "jeffreys"}"#).unwrap();
        assert_eq!(good.prior, Some(CoefVarPrior::Jeffreys));
    }
}
