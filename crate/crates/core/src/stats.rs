use serde::{Deserialize, Serialize};

/// Time-average estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Length of the averaging window.
    pub sample_time: f64,
}

impl ErgodicEstimate {
    /// True when `target` lies within `k` standard errors of the estimate.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

pub const DEFAULT_BATCHES: usize = 50;

/// Combine per-batch time integrals over equal-length batches.
pub fn batch_means(integrals: &[f64], batch_len: f64) -> ErgodicEstimate {
    let n = integrals.len();
    let means: Vec<f64> = integrals.iter().map(|x| x / batch_len).collect();
    let value = means.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    ErgodicEstimate {
        value,
        std_error,
        sample_time: batch_len * n as f64,
    }
}

/// Largest absolute gap between two CDFs tabulated on the same points.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_batches_have_zero_error() {
        let e = batch_means(&[2.0; 10], 4.0);
        assert_eq!(e.value, 0.5);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.sample_time, 40.0);
    }

    #[test]
    fn standard_error_of_two_values() {
        let e = batch_means(&[0.0, 2.0], 1.0);
        assert_eq!(e.value, 1.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
        assert!(e.covers(2.0, 1.0));
    }
}
