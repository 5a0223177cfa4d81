//! Quasi-maximum likelihood estimation, Whittle regularization and robust covariance.

mod fit;
mod hybrid;
mod likelihood;
mod optimizer;
mod sandwich;
pub mod transform;
mod whittle;

pub use fit::{fit_qmle, moment_start, reference_params, FitOptions, FitResult, HybridOptions, StartSummary, MIN_USABLE};
pub use hybrid::{hybrid_loglik, HybridLogLik, Penalty};
pub use likelihood::{analytic_score, quasi_loglik, LogLik, Score};
pub use optimizer::{bfgs, BfgsOptions, Convergence, Minimum};
pub use sandwich::{sandwich_covariance, sandwich_from_score, Sandwich, MAX_CONDITION};
pub use transform::{from_natural, from_params, to_natural, to_params, MARGIN};
pub use whittle::{
    local_whittle, periodogram, rolling_whittle, whittle_objective, WhittleEstimate, WhittleFit, ANCHOR_STEP,
    BAND_FRACTION, D_MAX, MIN_WINDOW,
};
