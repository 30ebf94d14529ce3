use crate::error::{Error, Result};

/// Uniform time grid `0 = t_0 < t_1 < ... < t_n = horizon`.
///
/// Only uniform grids are supported; every bound verified by this crate has a
/// horizon-uniform constant, so nonuniform grids add nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument(
                "n_steps must be at least 1".into(),
            ));
        }
        let times = (0..=n_steps)
            .map(|k| horizon * k as f64 / n_steps as f64)
            .collect();
        Ok(Self {
            horizon,
            n_steps,
            times,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// Uniform spacing `h = horizon / n_steps`.
    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    /// Whether two grids are interchangeable for path operations.
    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && self.horizon == other.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_three_node_grid() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.step(), 0.5);
    }

    #[test]
    fn single_step_grid() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        assert_eq!(g.times(), &[0.0, 1.0]);
    }

    #[test]
    fn horizon_two_four_steps() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.n_nodes(), 5);
    }

    #[test]
    fn endpoints_exact() {
        let g = TimeGrid::new(0.7, 13).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(13), 0.7);
        for k in 0..13 {
            assert!(g.time(k + 1) > g.time(k));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(-1.0, 4).is_err());
        assert!(TimeGrid::new(f64::NAN, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }
}
