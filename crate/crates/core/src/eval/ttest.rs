use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub degrees_of_freedom: usize,
    pub mean_difference: f64,
}

/// Paired two-tailed Student t-test on `a[i] − b[i]`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DegenerateTest(format!("{} vs {} paired values", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateTest("need at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let scale = d.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if !(sd > 1e-12 * scale) {
        return Err(Error::DegenerateTest("differences have zero variance".into()));
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dof = n - 1;
    Ok(TTest {
        t,
        p: two_tailed_p(t, dof),
        degrees_of_freedom: dof,
        mean_difference: mean,
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `dof` degrees of freedom.
pub fn two_tailed_p(t: f64, dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_value() {
        assert!((two_tailed_p(2.262, 9) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn worked_differences() {
        let d = [0.02, 0.00, 0.01, 0.02, 0.01, 0.00, 0.02, 0.01, 0.01, 0.02];
        let zeros = [0.0; 10];
        let r = paired_ttest(&d, &zeros).unwrap();
        let mean = 0.012;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 9.0).sqrt();
        assert!((r.t - mean / (sd / 10f64.sqrt())).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 9);
        let swapped = paired_ttest(&zeros, &d).unwrap();
        assert_eq!(swapped.t, -r.t);
        assert_eq!(swapped.p, r.p);
    }

    #[test]
    fn constant_differences_are_degenerate() {
        let a = [0.9; 10];
        assert!(matches!(paired_ttest(&a, &a), Err(Error::DegenerateTest(_))));
        let b: Vec<f64> = a.iter().map(|x| x - 0.01).collect();
        assert!(matches!(paired_ttest(&a, &b), Err(Error::DegenerateTest(_))));
    }
}
