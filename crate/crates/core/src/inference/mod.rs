//! Log-likelihood by midpoint quadrature, maximum likelihood fitting,
//! finite-difference standard errors and AIC.

mod fit;
mod likelihood;
mod optimizer;
mod profile;

pub use fit::{
    aic, finite_difference_hessian, fit_mle, relative_aic, standard_errors,
    standard_errors_from_hessian, AicRow, FitOptions, FitResult, SeStatus, StandardErrors,
};
pub use likelihood::{integrate, log_likelihood, LikelihoodEngine, Quadrature, TermParts};
pub use optimizer::{minimize, Minimum, NelderMeadOptions};
