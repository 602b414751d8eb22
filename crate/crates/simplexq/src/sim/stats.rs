//! Replication statistics: batch means, Student-t confidence intervals, and
//! nearest-rank percentiles.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Per-replication summary of one request class.
#[derive(Debug, Clone)]
pub(crate) struct RepClass {
    pub count: u64,
    pub sum: f64,
    pub batch_means: Vec<f64>,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Summarizes one replication's post-warmup sojourn samples.
pub(crate) fn summarize(samples: &[f64]) -> Option<RepClass> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len();
    let batches = if n >= 400 {
        20
    } else if n >= 100 {
        10
    } else {
        0
    };
    let batch_means = (0..batches)
        .map(|b| {
            let lo = b * n / batches;
            let hi = (b + 1) * n / batches;
            samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(RepClass {
        count: n as u64,
        sum: samples.iter().sum(),
        batch_means,
        p50: nearest_rank(&sorted, 0.50),
        p90: nearest_rank(&sorted, 0.90),
        p99: nearest_rank(&sorted, 0.99),
    })
}

/// Aggregated statistics for one request class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    /// Post-warmup completions across all replications.
    pub count: u64,
    /// Pooled mean sojourn time.
    pub mean: f64,
    /// 95% half-width on the mean from pooled batch means, when at least
    /// ten batches are available.
    pub ci_half_width: Option<f64>,
    /// Replication-averaged nearest-rank percentiles.
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

/// Pools per-replication class summaries.
pub(crate) fn combine_class(reps: &[Option<RepClass>]) -> Option<ClassStats> {
    let reps: Vec<&RepClass> = reps.iter().flatten().collect();
    let count: u64 = reps.iter().map(|r| r.count).sum();
    if count == 0 {
        return None;
    }
    let mean = reps.iter().map(|r| r.sum).sum::<f64>() / count as f64;
    let batch_means: Vec<f64> =
        reps.iter().flat_map(|r| r.batch_means.iter().copied()).collect();
    let ci_half_width = (batch_means.len() >= 10).then(|| {
        let b = batch_means.len() as f64;
        let bm = batch_means.iter().sum::<f64>() / b;
        let var = batch_means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (b - 1.0);
        let quantile = StudentsT::new(0.0, 1.0, b - 1.0)
            .expect("valid t distribution")
            .inverse_cdf(0.975);
        quantile * (var / b).sqrt()
    });
    let weighted = |f: fn(&RepClass) -> f64| {
        reps.iter().map(|r| f(r) * r.count as f64).sum::<f64>() / count as f64
    };
    Some(ClassStats {
        count,
        mean,
        ci_half_width,
        p50: weighted(|r| r.p50),
        p90: weighted(|r| r.p90),
        p99: weighted(|r| r.p99),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let sorted: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&sorted, 0.50), 50.0);
        assert_eq!(nearest_rank(&sorted, 0.90), 90.0);
        assert_eq!(nearest_rank(&sorted, 0.99), 99.0);
        assert_eq!(nearest_rank(&[7.0], 0.99), 7.0);
    }

    #[test]
    fn small_samples_get_no_ci() {
        let r = summarize(&[1.0; 50]).unwrap();
        assert!(r.batch_means.is_empty());
        let combined = combine_class(&[Some(r)]).unwrap();
        assert_eq!(combined.ci_half_width, None);
        assert_eq!(combined.count, 50);
    }

    #[test]
    fn constant_samples_have_zero_width() {
        let r = summarize(&vec![2.5; 1000]).unwrap();
        assert_eq!(r.batch_means.len(), 20);
        let combined = combine_class(&[Some(r)]).unwrap();
        assert_eq!(combined.mean, 2.5);
        assert_eq!(combined.ci_half_width, Some(0.0));
        assert_eq!(combined.p50, 2.5);
    }

    #[test]
    fn ci_covers_known_mean() {
        // deterministic synthetic noise around 10.0
        let samples: Vec<f64> =
            (0..2000).map(|i| 10.0 + ((i * 2654435761u64 % 1000) as f64 / 1000.0 - 0.5)).collect();
        let r = summarize(&samples).unwrap();
        let c = combine_class(&[Some(r)]).unwrap();
        let hw = c.ci_half_width.unwrap();
        assert!(hw > 0.0);
        assert!((c.mean - 10.0).abs() < 3.0 * hw + 0.05, "mean {} hw {hw}", c.mean);
    }

    #[test]
    fn pooling_weighs_by_count() {
        let a = summarize(&vec![1.0; 100]).unwrap();
        let b = summarize(&vec![3.0; 300]).unwrap();
        let c = combine_class(&[Some(a), Some(b)]).unwrap();
        assert_eq!(c.count, 400);
        assert!((c.mean - 2.5).abs() < 1e-12);
        assert!((c.p50 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empty_class_is_none() {
        assert!(summarize(&[]).is_none());
        assert!(combine_class(&[None, None]).is_none());
    }
}
