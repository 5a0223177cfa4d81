//! Gated variance recursions: baselines, single gates, pairs and the tri-gate model.

mod admissibility;
mod filter;
mod params;
mod simulate;
mod spec;

pub use admissibility::{admissibility_check, unconditional_mean, AdmissibilityReport, Check, GateStats, LogContraction};
pub use filter::{filter_from, filter_variance, filter_with_gradient, forecast_next, FilterOutput, GatePath, VariancePath};
pub use params::Params;
pub use simulate::{simulate_path, FeatureGenerator, SimulatedPath};
pub use spec::{Family, Layout, ModelSpec, DEFAULT_BURN_IN};
