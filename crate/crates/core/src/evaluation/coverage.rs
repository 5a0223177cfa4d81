use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::chi2_sf;

/// A likelihood-ratio or asymptotically normal test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub stat: f64,
    pub p_value: f64,
    /// Set when the statistic is undefined and a conventional value is reported.
    pub degenerate: bool,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Unconditional coverage LR
/// `−2[log((1−p)^{N−x} p^x) − log((1−p̂)^{N−x} p̂^x)]`, χ²(1), `0·log 0 = 0`.
pub fn kupiec_test(exceed: usize, n: usize, level: f64) -> Result<TestStat> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if exceed > n {
        return Err(Error::InvalidInput(format!("{exceed} exceedances in {n} periods")));
    }
    let (x, nf) = (exceed as f64, n as f64);
    let ph = x / nf;
    let null = xlogy(nf - x, 1.0 - level) + xlogy(x, level);
    let alt = xlogy(nf - x, 1.0 - ph) + xlogy(x, ph);
    let lr = (-2.0 * (null - alt)).max(0.0);
    Ok(TestStat { stat: lr, p_value: chi2_sf(lr, 1.0), degenerate: false })
}

/// Independence LR from first-order transition counts, χ²(1). Without any
/// exceedance (or without any non-exceedance) the table is degenerate and
/// `p = 1` is reported.
pub fn christoffersen_test(hits: &[bool]) -> Result<TestStat> {
    if hits.len() < 2 {
        return Err(Error::SampleTooShort { len: hits.len(), min: 1 });
    }
    let mut n = [[0.0f64; 2]; 2];
    for w in hits.windows(2) {
        n[w[0] as usize][w[1] as usize] += 1.0;
    }
    let (n00, n01, n10, n11) = (n[0][0], n[0][1], n[1][0], n[1][1]);
    let ones = n01 + n11;
    let total = n00 + n01 + n10 + n11;
    if ones == 0.0 || ones == total || n00 + n01 == 0.0 || n10 + n11 == 0.0 {
        return Ok(TestStat { stat: 0.0, p_value: 1.0, degenerate: true });
    }
    let p = ones / total;
    let p01 = n01 / (n00 + n01);
    let p11 = n11 / (n10 + n11);
    let null = xlogy(n00 + n10, 1.0 - p) + xlogy(ones, p);
    let alt = xlogy(n00, 1.0 - p01) + xlogy(n01, p01) + xlogy(n10, 1.0 - p11) + xlogy(n11, p11);
    let lr = (-2.0 * (null - alt)).max(0.0);
    Ok(TestStat { stat: lr, p_value: chi2_sf(lr, 1.0), degenerate: false })
}
