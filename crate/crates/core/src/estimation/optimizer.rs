//! Quasi-Newton minimization with backtracking line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `max |∇f| <` this.
    pub grad_tol: f64,
    /// Stop when `max |Δx| <` this.
    pub step_tol: f64,
    /// Stop when `|Δf| / max(|f|, 1) <` this.
    pub rel_tol: f64,
    /// Largest coordinate move in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-6, step_tol: 1e-7, rel_tol: 1e-10, max_step: 2.0 }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Gradient,
    Step,
    Objective,
    /// No descent found along the search direction, even after a reset.
    LineSearch,
    MaxIterations,
}

impl Convergence {
    pub fn converged(self) -> bool {
        matches!(self, Convergence::Gradient | Convergence::Step | Convergence::Objective)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub convergence: Convergence,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS on `f`, which returns the value and gradient. Search directions use
/// the gradient clipped coordinatewise to `±clip[j]` when given; stopping
/// rules use the raw gradient. Points where `f` fails or is non-finite are
/// rejected by the line search.
pub fn bfgs<F>(f: F, x0: &[f64], clip: Option<&[f64]>, opts: &BfgsOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let (mut fx, mut g) = f(x0)?;
    if !fx.is_finite() {
        return Err(Error::NonFinite { t: 0, what: "objective at start" });
    }
    let clipped = |g: &[f64]| -> Vec<f64> {
        match clip {
            Some(c) => g
                .iter()
                .zip(c)
                .map(|(&v, &c)| if c > 0.0 && c.is_finite() { v.clamp(-c, c) } else { v })
                .collect(),
            None => g.to_vec(),
        }
    };
    let mut x = x0.to_vec();
    let mut hinv = vec![vec![0.0; n]; n];
    let reset = |h: &mut Vec<Vec<f64>>| {
        for (i, row) in h.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[i] = 1.0;
        }
    };
    reset(&mut hinv);
    let mut fresh = true;
    let mut iterations = 0;
    let mut status = Convergence::MaxIterations;
    if sup(&g) < opts.grad_tol {
        status = Convergence::Gradient;
    }
    while status == Convergence::MaxIterations && iterations < opts.max_iter {
        iterations += 1;
        let gc = clipped(&g);
        let mut dir: Vec<f64> = hinv.iter().map(|row| -dot(row, &gc)).collect();
        if dot(&dir, &gc) >= 0.0 {
            reset(&mut hinv);
            fresh = true;
            dir = gc.iter().map(|v| -v).collect();
        }
        let big = sup(&dir);
        if big > opts.max_step {
            dir.iter_mut().for_each(|d| *d *= opts.max_step / big);
        }
        let slope = dot(&dir, &gc);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Ok((fnew, gnew)) = f(&xn) {
                if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope && gnew.iter().all(|v| v.is_finite()) {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if fresh {
                status = Convergence::LineSearch;
                break;
            }
            reset(&mut hinv);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let df = (fx - fnew).abs() / fx.abs().max(1.0);
        x = xn;
        fx = fnew;
        g = gnew;
        if sup(&g) < opts.grad_tol {
            status = Convergence::Gradient;
        } else if sup(&s) < opts.step_tol {
            status = Convergence::Step;
        } else if df < opts.rel_tol {
            status = Convergence::Objective;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().enumerate().for_each(|(i, row)| {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                });
            }
            let hy: Vec<f64> = hinv.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
    }
    Ok(Minimum { x, value: fx, grad: g, iterations, convergence: status })
}
