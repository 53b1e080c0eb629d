use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Success-rate estimate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub ci_half: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub attempts: u64,
    pub successes: u64,
}

impl McEstimate {
    /// `None` when there were no attempts.
    pub fn wilson(successes: u64, attempts: u64, trials: usize) -> Option<Self> {
        if attempts == 0 {
            return None;
        }
        let n = attempts as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Some(McEstimate {
            mean: p,
            ci_half: half,
            ci_lo: (centre - half).max(0.0),
            ci_hi: (centre + half).min(1.0),
            trials,
            attempts,
            successes,
        })
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}
