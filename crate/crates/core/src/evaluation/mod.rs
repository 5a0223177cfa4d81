//! Forecast losses, tail-risk backtests and pairwise model comparisons.

mod backtest;
mod compare;
mod coverage;
mod losses;
mod risk;

pub use backtest::{
    rolling_backtest, BacktestOptions, BacktestReport, ForecastRecord, ModelBacktest, ModelMetrics, PairwiseComparison,
    RefitRecord, VarMethod, LEVELS,
};
pub use compare::{dm_test, vuong_test, MIN_DM_LEN};
pub use coverage::{christoffersen_test, kupiec_test, TestStat};
pub use losses::{qlike_loss, qlike_terms, squared_error_terms, variance_rmse, Qlike};
pub use risk::{fz_loss, fz_terms, var_es_filtered, var_es_forecast, VarEs};
