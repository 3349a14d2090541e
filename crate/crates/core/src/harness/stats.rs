//! Significance test for the training-improvement check.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// One-sided p-value for a positive mean difference.
    pub p_value: f64,
}

/// One-sided paired t-test of `after > before`.
///
/// Returns `None` for fewer than two pairs. Identical differences give a
/// p-value of 0 when positive and 1 otherwise.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Option<PairedTTest> {
    assert_eq!(before.len(), after.len(), "unpaired samples");
    let n = before.len();
    if n < 2 {
        return None;
    }
    let d: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    if se == 0.0 {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        let t = if mean > 0.0 { f64::INFINITY } else if mean < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        return Some(PairedTTest { n, mean_diff: mean, t, p_value: p });
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid degrees of freedom");
    Some(PairedTTest {
        n,
        mean_diff: mean,
        t,
        p_value: 1.0 - dist.cdf(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matches_tabulated_critical_value() {
        // t = 3.747 is the one-sided 1% point for 4 degrees of freedom
        let before = [0.0; 5];
        let sd = 1.0;
        let mean = 3.747 * sd / 5f64.sqrt();
        // differences with sample sd 1 and the chosen mean
        let base = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let s = (base.iter().map(|x: &f64| x * x).sum::<f64>() / 4.0).sqrt();
        let after: Vec<f64> = base.iter().map(|x| mean + x / s).collect();
        let r = paired_t_test(&before, &after).unwrap();
        assert_relative_eq!(r.t, 3.747, epsilon = 1e-9);
        assert_relative_eq!(r.p_value, 0.01, epsilon = 1e-4);
    }

    #[test]
    fn direction_matters() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 2.5, 4.5, 5.0];
        assert!(paired_t_test(&a, &b).unwrap().p_value < 0.05);
        assert!(paired_t_test(&b, &a).unwrap().p_value > 0.95);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_none());
        assert_eq!(paired_t_test(&[0.0, 0.0], &[1.0, 1.0]).unwrap().p_value, 0.0);
        assert_eq!(paired_t_test(&[0.0, 0.0], &[0.0, 0.0]).unwrap().p_value, 1.0);
    }
}
