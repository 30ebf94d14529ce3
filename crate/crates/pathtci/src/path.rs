use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::la;

/// One discrete-time trajectory in `R^d`, together with the Gaussian
/// increments that produced it (absent for externally loaded paths).
///
/// Values are stored flat, node-major: node `k` occupies
/// `values[k*d..(k+1)*d]`. Increments are step-major with the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    dim: usize,
    values: Vec<f64>,
    noise: Option<Vec<f64>>,
}

impl PathSample {
    pub fn new(dim: usize, values: Vec<f64>, noise: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if values.is_empty() || values.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "values length {} is not a positive multiple of dimension {}",
                values.len(),
                dim
            )));
        }
        let n_nodes = values.len() / dim;
        if let Some(ref dw) = noise {
            if dw.len() != (n_nodes - 1) * dim {
                return Err(Error::InvalidArgument(format!(
                    "noise length {} does not match {} steps of dimension {}",
                    dw.len(),
                    n_nodes - 1,
                    dim
                )));
            }
        }
        Ok(Self { dim, values, noise })
    }

    /// Convenience constructor from per-node slices.
    pub fn from_nodes(nodes: &[&[f64]]) -> Result<Self> {
        let dim = nodes.first().map_or(0, |n| n.len());
        let mut values = Vec::with_capacity(nodes.len() * dim);
        for n in nodes {
            if n.len() != dim {
                return Err(Error::InvalidArgument(
                    "all nodes must share the dimension".into(),
                ));
            }
            values.extend_from_slice(n);
        }
        Self::new(dim, values, None)
    }

    /// Path constant at `value` over `n_nodes` nodes.
    pub fn constant(value: &[f64], n_nodes: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(n_nodes * value.len());
        for _ in 0..n_nodes {
            values.extend_from_slice(value);
        }
        Self::new(value.len(), values, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.n_nodes() - 1
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.node(self.n_nodes() - 1)
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_flat(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    /// Increment of step `k` (driving the move from node `k` to `k+1`).
    pub fn noise_step(&self, k: usize) -> Option<&[f64]> {
        self.noise
            .as_ref()
            .map(|dw| &dw[k * self.dim..(k + 1) * self.dim])
    }
}

/// Distance between two paths under the uniform (sup) norm on the grid:
/// `max_k |a(t_k) - b(t_k)|_2`.
///
/// The grid sup understates the continuous-time uniform norm; it is reported
/// as-is, a lower bound of the continuous sup, with no correction factor.
pub fn sup_norm_distance(a: &PathSample, b: &PathSample) -> Result<f64> {
    if a.dim() != b.dim() || a.n_nodes() != b.n_nodes() {
        return Err(Error::GridMismatch(format!(
            "paths have shape ({} nodes, d={}) vs ({} nodes, d={})",
            a.n_nodes(),
            a.dim(),
            b.n_nodes(),
            b.dim()
        )));
    }
    let mut sup: f64 = 0.0;
    for k in 0..a.n_nodes() {
        sup = sup.max(la::dist(a.node(k), b.node(k)));
    }
    Ok(sup)
}

/// Read-only view of a trajectory up to and including the current node.
///
/// This is what path-dependent evaluators receive: the grid restriction of
/// the path to `[0, t_k]`.
#[derive(Debug, Clone, Copy)]
pub struct PastPath<'a> {
    times: &'a [f64],
    dim: usize,
    values: &'a [f64],
}

impl<'a> PastPath<'a> {
    pub fn new(times: &'a [f64], dim: usize, values: &'a [f64]) -> Self {
        debug_assert_eq!(times.len() * dim, values.len());
        Self { times, dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn node(&self, k: usize) -> &'a [f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// State at the current node `t_k`.
    pub fn current(&self) -> &'a [f64] {
        self.node(self.n_nodes() - 1)
    }

    /// Running sup of the Euclidean norm, `sup_{s <= t_k} |x_s|`.
    pub fn running_sup_norm(&self) -> f64 {
        (0..self.n_nodes())
            .map(|k| la::norm(self.node(k)))
            .fold(0.0, f64::max)
    }

    /// Full view over a stored path.
    pub fn full(path: &'a PathSample, grid: &'a TimeGrid) -> Self {
        Self::new(grid.times(), path.dim(), path.values_flat())
    }
}

/// An ensemble of paths on a shared grid: the empirical stand-in for the law
/// of a process.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    paths: Vec<PathSample>,
    seed: u64,
    weights: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub fn new(grid: TimeGrid, paths: Vec<PathSample>, seed: u64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidArgument(
                "ensemble must contain at least one path".into(),
            ));
        }
        let dim = paths[0].dim();
        for (i, p) in paths.iter().enumerate() {
            if p.dim() != dim || p.n_nodes() != grid.n_nodes() {
                return Err(Error::GridMismatch(format!(
                    "path {i} has {} nodes, d={}, expected {} nodes, d={dim}",
                    p.n_nodes(),
                    p.dim(),
                    grid.n_nodes()
                )));
            }
        }
        Ok(Self {
            grid,
            paths,
            seed,
            weights: None,
        })
    }

    /// Attach explicit weights (nonnegative, summing to 1 within 1e-12).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.paths.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} paths",
                weights.len(),
                self.paths.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1 within 1e-12"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn dim(&self) -> usize {
        self.paths[0].dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, i: usize) -> &PathSample {
        &self.paths[i]
    }

    pub fn paths(&self) -> &[PathSample] {
        &self.paths
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.paths.len() as f64,
        }
    }

    pub fn explicit_weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_uniform(&self) -> bool {
        match &self.weights {
            None => true,
            Some(w) => {
                let u = 1.0 / w.len() as f64;
                w.iter().all(|x| (x - u).abs() <= 1e-12)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn sup_distance_identity() {
        let a = PathSample::from_nodes(&[&[0.0], &[1.0], &[0.5]]).unwrap();
        assert_eq!(sup_norm_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn sup_distance_scalar() {
        let a = PathSample::constant(&[0.0], 3).unwrap();
        let b = PathSample::from_nodes(&[&[0.0], &[1.0], &[0.5]]).unwrap();
        assert_eq!(sup_norm_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn sup_distance_euclidean() {
        let a = PathSample::constant(&[0.0, 0.0], 4).unwrap();
        let b = PathSample::constant(&[3.0, 4.0], 4).unwrap();
        assert_eq!(sup_norm_distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn sup_distance_rejects_mismatch() {
        let a = PathSample::constant(&[0.0], 3).unwrap();
        let b = PathSample::constant(&[0.0], 4).unwrap();
        assert!(matches!(
            sup_norm_distance(&a, &b),
            Err(Error::GridMismatch(_))
        ));
        let c = PathSample::constant(&[0.0, 0.0], 3).unwrap();
        assert!(sup_norm_distance(&a, &c).is_err());
    }

    #[test]
    fn weights_must_sum_to_one() {
        let g = grid(2);
        let paths = vec![
            PathSample::constant(&[0.0], 3).unwrap(),
            PathSample::constant(&[1.0], 3).unwrap(),
        ];
        let ens = PathEnsemble::new(g.clone(), paths.clone(), 7).unwrap();
        assert!(ens.is_uniform());
        assert!(PathEnsemble::new(g.clone(), paths.clone(), 7)
            .unwrap()
            .with_weights(vec![0.6, 0.5])
            .is_err());
        let ok = PathEnsemble::new(g, paths, 7)
            .unwrap()
            .with_weights(vec![0.25, 0.75])
            .unwrap();
        assert_eq!(ok.weight(1), 0.75);
        assert!(!ok.is_uniform());
    }

    #[test]
    fn ensemble_rejects_shape_mismatch() {
        let g = grid(2);
        let paths = vec![
            PathSample::constant(&[0.0], 3).unwrap(),
            PathSample::constant(&[1.0], 4).unwrap(),
        ];
        assert!(PathEnsemble::new(g, paths, 0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sup_distance_triangle_inequality(
                a in prop::collection::vec(-10.0f64..10.0, 12),
                b in prop::collection::vec(-10.0f64..10.0, 12),
                c in prop::collection::vec(-10.0f64..10.0, 12),
            ) {
                let pa = PathSample::new(3, a, None).unwrap();
                let pb = PathSample::new(3, b, None).unwrap();
                let pc = PathSample::new(3, c, None).unwrap();
                let ab = sup_norm_distance(&pa, &pb).unwrap();
                let ac = sup_norm_distance(&pa, &pc).unwrap();
                let cb = sup_norm_distance(&pc, &pb).unwrap();
                prop_assert!(ab <= ac + cb + 1e-12);
                // Symmetry and identity come along for free.
                prop_assert_eq!(ab, sup_norm_distance(&pb, &pa).unwrap());
                prop_assert_eq!(sup_norm_distance(&pa, &pa).unwrap(), 0.0);
            }
        }
    }
}
