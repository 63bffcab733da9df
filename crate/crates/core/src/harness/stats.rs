//! Small statistics helpers for the harness: windowed Welford moments,
//! percentiles, and least-squares fits.

use std::collections::VecDeque;

/// Welford accumulation over the most recent `capacity` values.
#[derive(Debug, Clone)]
pub struct RollingStats {
    capacity: usize,
    buf: VecDeque<f64>,
    mean: f64,
    m2: f64,
}

impl RollingStats {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 2);
        Self {
            capacity,
            buf: VecDeque::with_capacity(capacity),
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn push(&mut self, value: f64) {
        if self.buf.len() == self.capacity {
            let old = self.buf.pop_front().expect("non-empty at capacity");
            let n = self.buf.len() as f64 + 1.0;
            let mean_without = (n * self.mean - old) / (n - 1.0);
            self.m2 = (self.m2 - (old - self.mean) * (old - mean_without)).max(0.0);
            self.mean = mean_without;
        }
        self.buf.push_back(value);
        let n = self.buf.len() as f64;
        let delta = value - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> usize {
        self.buf.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> Option<f64> {
        if self.buf.len() < 2 {
            return None;
        }
        let var = self.m2 / (self.buf.len() as f64 - 1.0);
        if var > 0.0 {
            Some(var.sqrt())
        } else {
            None
        }
    }
}

/// Nearest-rank percentile of a sorted sample.
pub fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Ordinary least squares `y = a + b x`; returns `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, intercept, r2))
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().any(|&x| x <= 0.0) || ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).map(|(slope, _, _)| slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolling_stats_match_direct_computation() {
        let mut rs = RollingStats::new(4);
        for v in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            rs.push(v);
        }
        // Window holds 3,4,5,6.
        assert_eq!(rs.count(), 4);
        assert!((rs.mean() - 4.5).abs() < 1e-12);
        let direct_var = [3.0f64, 4.0, 5.0, 6.0]
            .iter()
            .map(|v| (v - 4.5) * (v - 4.5))
            .sum::<f64>()
            / 3.0;
        assert!((rs.std().unwrap() - direct_var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn std_is_none_for_degenerate_windows() {
        let mut rs = RollingStats::new(8);
        rs.push(1.0);
        assert!(rs.std().is_none());
        rs.push(1.0);
        assert!(rs.std().is_none(), "zero variance has no usable std");
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 50.0), 50);
        assert_eq!(percentile(&v, 95.0), 95);
        assert_eq!(percentile(&v, 100.0), 100);
        assert_eq!(percentile(&[], 50.0), 0);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let (slope, intercept, r2) = linear_fit(&xs, &ys).unwrap();
        assert!((slope - 3.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loglog_slope_of_quadratic_is_two() {
        let xs: Vec<f64> = (1..=6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
    }
}
