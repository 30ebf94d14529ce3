//! Exact finite-support optimal transport.
//!
//! Uniform equal-size marginals reduce to an assignment problem, solved by
//! shortest augmenting paths with dual potentials (Jonker–Volgenant style,
//! O(n^3), exact for arbitrary real costs). General weights go through a
//! transportation simplex with a northwest-corner start and Bland's rule as
//! an anti-cycling safeguard.

use super::CostMatrix;
use crate::error::{Error, Result};

/// Solve `min <C, plan>` subject to `plan 1 = a`, `plan^T 1 = b` exactly.
/// Returns the row-major plan.
pub fn solve_exact(cost: &CostMatrix, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = cost.rows();
    let m = cost.cols();
    if a.len() != n || b.len() != m {
        return Err(Error::InvalidArgument(format!(
            "marginal lengths ({}, {}) do not match the {n}x{m} cost matrix",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::InvalidArgument(
            "marginal weights must be positive (drop zero-weight atoms first)".into(),
        ));
    }
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    if (sum_a - sum_b).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "marginals carry different total mass: {sum_a} vs {sum_b}"
        )));
    }

    let uniform = |w: &[f64]| {
        let u = 1.0 / w.len() as f64;
        w.iter().all(|x| (x - u).abs() <= 1e-12)
    };
    if n == m && uniform(a) && uniform(b) {
        let row_of_col = assignment(cost);
        let mut plan = vec![0.0; n * m];
        let mass = 1.0 / n as f64;
        for (j, &i) in row_of_col.iter().enumerate() {
            plan[i * m + j] = mass;
        }
        return Ok(plan);
    }
    transportation_simplex(cost, a, b)
}

/// Shortest-augmenting-path assignment; returns, for each column, the
/// assigned row. Potentials make every augmentation exact, so the result is
/// the true optimum for arbitrary real costs.
fn assignment(cost: &CostMatrix) -> Vec<usize> {
    let n = cost.rows();
    let inf = f64::INFINITY;
    // 1-indexed working arrays; index 0 is the virtual unassigned column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| row_of[j] - 1).collect()
}

#[derive(Debug, Clone, Copy)]
struct BasicCell {
    row: usize,
    col: usize,
    flow: f64,
}

fn transportation_simplex(cost: &CostMatrix, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = cost.rows();
    let m = cost.cols();
    let mut basis = northwest_corner(a, b);
    let scale = cost.data().iter().cloned().fold(1.0f64, f64::max);
    let opt_tol = 1e-13 * scale;
    let max_pivots = 200 * (n + m) * (n + m) + 10_000;
    let bland_after = 20 * (n + m);

    for pivot in 0..max_pivots {
        let (u, v) = duals(&basis, cost, n, m);

        // Entering cell: most negative reduced cost (Dantzig), switching to
        // Bland's first-negative rule if pivoting drags on.
        let mut entering: Option<(usize, usize)> = None;
        let mut most_negative = -opt_tol;
        'scan: for i in 0..n {
            for j in 0..m {
                let r = cost.get(i, j) - u[i] - v[j];
                if r < most_negative {
                    entering = Some((i, j));
                    if pivot >= bland_after {
                        break 'scan;
                    }
                    most_negative = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(plan_from_basis(&basis, n, m));
        };

        // Unique cycle: tree path from the entering column back to the
        // entering row, alternating -,+,-,... along the path.
        let path = tree_path(&basis, n, m, ei, n + ej);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        let mut leaving_key = (usize::MAX, usize::MAX);
        for (pos, &cell_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                // Cells that lose flow; ties leave by smallest (row, col).
                let c = &basis[cell_idx];
                let key = (c.row, c.col);
                if c.flow < theta || (c.flow == theta && key < leaving_key) {
                    theta = c.flow;
                    leaving = cell_idx;
                    leaving_key = key;
                }
            }
        }
        debug_assert!(leaving != usize::MAX);
        for (pos, &cell_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[cell_idx].flow = (basis[cell_idx].flow - theta).max(0.0);
            } else {
                basis[cell_idx].flow += theta;
            }
        }
        basis[leaving] = BasicCell {
            row: ei,
            col: ej,
            flow: theta,
        };
    }
    Err(Error::NoConvergence {
        context: "transportation simplex".into(),
        residual: f64::NAN,
    })
}

fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<BasicCell> {
    let n = a.len();
    let m = b.len();
    let mut a_rem = a.to_vec();
    let mut b_rem = b.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = a_rem[i].min(b_rem[j]);
        cells.push(BasicCell {
            row: i,
            col: j,
            flow: f,
        });
        if a_rem[i] <= b_rem[j] {
            b_rem[j] -= a_rem[i];
            a_rem[i] = 0.0;
        } else {
            a_rem[i] -= b_rem[j];
            b_rem[j] = 0.0;
        }
        if i == n - 1 && j == m - 1 {
            break;
        }
        if a_rem[i] == 0.0 && i < n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(cells.len(), n + m - 1);
    cells
}

/// Dual potentials solving `u_i + v_j = c_ij` on the basis tree, `u_0 = 0`.
fn duals(basis: &[BasicCell], cost: &CostMatrix, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let adj = adjacency(basis, n, m);
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; m];
    u[0] = 0.0;
    let mut stack = vec![0usize];
    let mut seen = vec![false; n + m];
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &cell_idx in &adj[node] {
            let c = &basis[cell_idx];
            let other = if node < n { n + c.col } else { c.row };
            if !seen[other] {
                seen[other] = true;
                if other >= n {
                    v[other - n] = cost.get(c.row, c.col) - u[c.row];
                } else {
                    u[other] = cost.get(c.row, c.col) - v[c.col];
                }
                stack.push(other);
            }
        }
    }
    (u, v)
}

fn adjacency(basis: &[BasicCell], n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n + m];
    for (idx, c) in basis.iter().enumerate() {
        adj[c.row].push(idx);
        adj[n + c.col].push(idx);
    }
    adj
}

/// Basis-tree path from `from` to `to` as a sequence of cell indices.
fn tree_path(basis: &[BasicCell], n: usize, m: usize, from: usize, to: usize) -> Vec<usize> {
    let adj = adjacency(basis, n, m);
    let mut parent_edge = vec![usize::MAX; n + m];
    let mut parent_node = vec![usize::MAX; n + m];
    let mut seen = vec![false; n + m];
    seen[to] = true;
    let mut queue = std::collections::VecDeque::from([to]);
    while let Some(node) = queue.pop_front() {
        if node == from {
            break;
        }
        for &cell_idx in &adj[node] {
            let c = &basis[cell_idx];
            let other = if node < n { n + c.col } else { c.row };
            if !seen[other] {
                seen[other] = true;
                parent_edge[other] = cell_idx;
                parent_node[other] = node;
                queue.push_back(other);
            }
        }
    }
    // Walk from the entering row back toward the entering column; the first
    // edge touched leaves the row side, so it loses flow.
    let mut path = Vec::new();
    let mut node = from;
    while node != to {
        path.push(parent_edge[node]);
        node = parent_node[node];
    }
    path
}

fn plan_from_basis(basis: &[BasicCell], n: usize, m: usize) -> Vec<f64> {
    let mut plan = vec![0.0; n * m];
    for c in basis {
        plan[c.row * m + c.col] += c.flow;
    }
    plan
}
