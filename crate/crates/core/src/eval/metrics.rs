use crate::error::{ensure, Result};

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    ensure!(pred.len() == truth.len(), "{} predictions for {} labels", pred.len(), truth.len());
    ensure!(!truth.is_empty(), "accuracy of an empty set");
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean and sample standard deviation (n − 1); the deviation is 0 for
/// fewer than two values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!(libm::fabs(s - libm::sqrt(32.0 / 7.0)) < 1e-12);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }
}
