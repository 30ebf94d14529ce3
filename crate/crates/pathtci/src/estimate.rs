use serde::Serialize;

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_err: 0.0,
            n: 1,
        }
    }

    /// Sample mean and standard error of the mean.
    ///
    /// A sample whose min equals its max has zero variance by definition;
    /// short-circuiting avoids reporting rounding noise from the two-pass
    /// variance formula as a spurious standard error.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Estimate {
                value: f64::NAN,
                std_err: f64::NAN,
                n: 0,
            };
        }
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        if lo == hi {
            return Estimate {
                value: lo,
                std_err: 0.0,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n as f64 - 1.0);
        Estimate {
            value: mean,
            std_err: (var / n as f64).sqrt(),
            n,
        }
    }
}
