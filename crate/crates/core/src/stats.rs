//! Compensated sums and sample moments.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample covariance of paired observations.
pub fn covariance(a: &[f64], b: &[f64], mean_a: f64, mean_b: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return 0.0;
    }
    compensated_sum(a.iter().zip(b).map(|(x, y)| (x - mean_a) * (y - mean_b)))
        / (a.len() as f64 - 1.0)
}

/// Standard error of a binomial proportion `q` estimated from `count` trials.
pub fn binomial_se(q: f64, count: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    (q * (1.0 - q) / count as f64).sqrt()
}
