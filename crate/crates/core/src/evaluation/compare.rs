//! Pairwise forecast comparisons with Bartlett HAC variances.

use super::coverage::TestStat;
use crate::error::{Error, Result};
use crate::stats::{bartlett_lrv, default_bandwidth, mean, two_sided_p};

/// Minimum aligned length for DM.
pub const MIN_DM_LEN: usize = 30;

fn hac_z(diff: &[f64], lags: Option<usize>) -> TestStat {
    let n = diff.len();
    let m = mean(diff);
    let lags = lags.unwrap_or_else(|| default_bandwidth(n));
    let lrv = bartlett_lrv(diff, lags);
    if !(lrv > 0.0) {
        if m == 0.0 {
            return TestStat { stat: 0.0, p_value: 1.0, degenerate: true };
        }
        let stat = m.signum() * f64::INFINITY;
        return TestStat { stat, p_value: 0.0, degenerate: true };
    }
    let stat = m / (lrv / n as f64).sqrt();
    TestStat { stat, p_value: two_sided_p(stat), degenerate: false }
}

fn aligned(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("series lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Diebold–Mariano on `d_t = loss_a − loss_b`; positive values mean model
/// `a` has the larger loss. `lags` defaults to `⌊1.2 N^{1/3}⌋`.
pub fn dm_test(loss_a: &[f64], loss_b: &[f64], lags: Option<usize>) -> Result<TestStat> {
    let d = aligned(loss_a, loss_b)?;
    if d.len() < MIN_DM_LEN {
        return Err(Error::SampleTooShort { len: d.len(), min: MIN_DM_LEN - 1 });
    }
    Ok(hac_z(&d, lags))
}

/// Vuong `V_T = √T m̄ / s` on `m_t = ℓ_t^a − ℓ_t^b`; positive values favor `a`.
pub fn vuong_test(ll_a: &[f64], ll_b: &[f64], lags: Option<usize>) -> Result<TestStat> {
    let d = aligned(ll_a, ll_b)?;
    Ok(hac_z(&d, lags))
}
