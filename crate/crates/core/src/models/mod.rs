//! The five shipped models.

pub mod gaussian;
pub mod uniform;

pub use gaussian::{
    coefvar_fct_probe, conjugate_posterior, ratio_fct_prob_mc, CoefVarPosterior, CoefVarPrior, CoefVariationModel,
    ConjugatePosterior, GaussianConjugateModel, GaussianRatioModel, RatioPosterior,
};
pub use uniform::{
    fct_prob_closed_form, product_fct_prob_mc, ParetoPosterior, ProductPosterior, UniformProductModel,
    UniformSupportModel,
};
