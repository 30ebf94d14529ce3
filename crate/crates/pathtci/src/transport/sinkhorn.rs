//! Log-domain Sinkhorn iteration for entropic-regularized transport.
//!
//! Alternating dual updates with log-sum-exp keep the scheme stable for
//! small epsilon. The converged (or iteration-capped) plan is rounded onto
//! the transport polytope, so downstream comparisons against the exact
//! optimum see a genuinely feasible, therefore dominating, plan.

use super::CostMatrix;

#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    pub plan: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn logsumexp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Entropic OT by alternating marginal scaling in the log domain.
///
/// `tol` bounds the sup-norm marginal violation at which the iteration is
/// declared converged. The iteration count includes the final check.
pub fn solve_sinkhorn(
    cost: &CostMatrix,
    a: &[f64],
    b: &[f64],
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> SinkhornSolution {
    let n = cost.rows();
    let m = cost.cols();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    let mut converged = false;
    let mut iterations = 0;
    let check_every = 10;
    for iter in 0..max_iters {
        for i in 0..n {
            let lse = logsumexp((0..m).map(|j| (g[j] - cost.get(i, j)) / epsilon));
            f[i] = epsilon * (log_a[i] - lse);
        }
        for j in 0..m {
            let lse = logsumexp((0..n).map(|i| (f[i] - cost.get(i, j)) / epsilon));
            g[j] = epsilon * (log_b[j] - lse);
        }
        iterations = iter + 1;
        if iterations % check_every == 0 || iterations == max_iters {
            if marginal_violation(cost, a, b, &f, &g, epsilon) < tol {
                converged = true;
                break;
            }
        }
    }

    let mut plan = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            plan[i * m + j] = ((f[i] + g[j] - cost.get(i, j)) / epsilon).exp();
        }
    }
    round_to_feasible(&mut plan, a, b);
    SinkhornSolution {
        plan,
        iterations,
        converged,
    }
}

fn marginal_violation(
    cost: &CostMatrix,
    a: &[f64],
    b: &[f64],
    f: &[f64],
    g: &[f64],
    epsilon: f64,
) -> f64 {
    let n = cost.rows();
    let m = cost.cols();
    let mut err: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..m)
            .map(|j| ((f[i] + g[j] - cost.get(i, j)) / epsilon).exp())
            .sum();
        err = err.max((row - a[i]).abs());
    }
    for j in 0..m {
        let col: f64 = (0..n)
            .map(|i| ((f[i] + g[j] - cost.get(i, j)) / epsilon).exp())
            .sum();
        err = err.max((col - b[j]).abs());
    }
    err
}

/// Project an approximately feasible plan onto the transport polytope:
/// shrink overfull rows and columns, then repair the deficit with a
/// rank-one filler. Never increases feasibility error.
fn round_to_feasible(plan: &mut [f64], a: &[f64], b: &[f64]) {
    let n = a.len();
    let m = b.len();
    let mut row: Vec<f64> = (0..n)
        .map(|i| plan[i * m..(i + 1) * m].iter().sum())
        .collect();
    for i in 0..n {
        if row[i] > a[i] && row[i] > 0.0 {
            let s = a[i] / row[i];
            for j in 0..m {
                plan[i * m + j] *= s;
            }
            row[i] = a[i];
        }
    }
    let mut col = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            col[j] += plan[i * m + j];
        }
    }
    for j in 0..m {
        if col[j] > b[j] && col[j] > 0.0 {
            let s = b[j] / col[j];
            for i in 0..n {
                plan[i * m + j] *= s;
            }
            col[j] = b[j];
        }
    }
    let mut err_a = vec![0.0; n];
    for i in 0..n {
        let r: f64 = plan[i * m..(i + 1) * m].iter().sum();
        err_a[i] = (a[i] - r).max(0.0);
    }
    let mut err_b = vec![0.0; m];
    let mut mass_b = 0.0;
    for j in 0..m {
        let c: f64 = (0..n).map(|i| plan[i * m + j]).sum();
        err_b[j] = (b[j] - c).max(0.0);
        mass_b += err_b[j];
    }
    if mass_b > 0.0 {
        for i in 0..n {
            if err_a[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                plan[i * m + j] += err_a[i] * err_b[j] / mass_b;
            }
        }
    }
}
