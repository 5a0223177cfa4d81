use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean QLIKE and the number of squared returns raised to the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qlike {
    pub mean: f64,
    pub floored: usize,
}

fn check(h: &[f64], r: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::EmptySample);
    }
    if h.len() != r.len() {
        return Err(Error::InvalidInput(format!("{} forecasts for {} returns", h.len(), r.len())));
    }
    if let Some(i) = h.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(format!("forecast {i} is not positive: {}", h[i])));
    }
    Ok(())
}

/// Per-period `x − log x − 1` with `x = r²/ĥ`; `r²` below machine epsilon is
/// raised to it.
pub fn qlike_terms(h: &[f64], r: &[f64]) -> Result<(Vec<f64>, usize)> {
    check(h, r)?;
    let mut floored = 0;
    let terms = h
        .iter()
        .zip(r)
        .map(|(h, r)| {
            let mut r2 = r * r;
            if r2 < f64::EPSILON {
                r2 = f64::EPSILON;
                floored += 1;
            }
            let x = r2 / h;
            x - x.ln() - 1.0
        })
        .collect();
    Ok((terms, floored))
}

pub fn qlike_loss(h: &[f64], r: &[f64]) -> Result<Qlike> {
    let (t, floored) = qlike_terms(h, r)?;
    Ok(Qlike { mean: t.iter().sum::<f64>() / t.len() as f64, floored })
}

/// Per-period `(r² − ĥ)²`.
pub fn squared_error_terms(h: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    check(h, r)?;
    Ok(h.iter().zip(r).map(|(h, r)| (r * r - h).powi(2)).collect())
}

pub fn variance_rmse(h: &[f64], r: &[f64]) -> Result<f64> {
    let t = squared_error_terms(h, r)?;
    Ok((t.iter().sum::<f64>() / t.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qlike_reference_values() {
        let r = [0.5, -1.0, 2.0];
        let h: Vec<f64> = r.iter().map(|x| x * x).collect();
        assert_eq!(qlike_loss(&h, &r).unwrap().mean, 0.0);
        let h2: Vec<f64> = h.iter().map(|v| v / 2.0).collect();
        assert!((qlike_loss(&h2, &r).unwrap().mean - (2.0 - 2f64.ln() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_returns_are_floored_and_counted() {
        let q = qlike_loss(&[1.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(q.floored, 1);
        assert!(q.mean.is_finite());
    }

    #[test]
    fn rmse_constant_bias() {
        let r = [1.0, 2.0, -1.0];
        let h: Vec<f64> = r.iter().map(|x| x * x + 0.3).collect();
        assert!((variance_rmse(&h, &r).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(variance_rmse(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!(matches!(variance_rmse(&[], &[]), Err(Error::EmptySample)));
    }

    proptest! {
        #[test]
        fn qlike_nonnegative(pairs in prop::collection::vec((1e-4f64..10.0, -5.0f64..5.0), 1..50)) {
            let (h, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (t, _) = qlike_terms(&h, &r).unwrap();
            prop_assert!(t.iter().all(|v| *v >= -1e-15));
        }
    }
}
