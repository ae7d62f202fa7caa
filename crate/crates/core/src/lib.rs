//! Bayesian model selection and averaging for generalized linear models,
//! with subsampling stochastic-gradient MLE estimation inside a
//! mode-jumping MCMC over the space of covariate subsets.

pub mod error;
pub mod evidence;
pub mod glm;
pub mod harness;
mod linalg;
pub mod mjmcmc;
pub mod model_space;
pub mod optim;
pub mod par;
pub mod rng;
pub mod submcmc;

pub use error::{Error, Result};
