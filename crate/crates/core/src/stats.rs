//! Small descriptive statistics used by the diagnostics.

/// Sample mean and standard error of the mean (`sd/√n`, with the `n − 1`
/// variance). A single observation has standard error zero.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Two-sided mean-zero check at `sigmas` standard errors. The small absolute
/// slack absorbs floating-point accumulation in otherwise exact zeros.
pub fn passes_mean_zero(mean: f64, stderr: f64, sigmas: f64) -> bool {
    mean.abs() <= sigmas * stderr + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let xs = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(median(&xs), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        assert_eq!(quantile(&xs, 0.75), 4.0);
        assert_eq!(median(&[1.0, 2.0]), 1.5);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, s) = mean_stderr(&[2.0; 10]);
        assert_eq!((m, s), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
