use statrs::function::beta::beta_reg;

use crate::error::{contract, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    /// Positive when `a` scores higher than `b` on average.
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
}

/// Two-tailed paired t-test on `a - b`.
///
/// Zero-variance differences: a zero mean gives `t = 0, p = 1`, otherwise
/// `t = ±inf, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(contract!("paired samples differ in length ({} vs {})", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(contract!("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let df = n - 1;
    let m = mean(&d);
    let sd = sample_sd(&d);
    if sd == 0.0 {
        return Ok(if m == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: f64::INFINITY.copysign(m),
                p: 0.0,
                df,
            }
        });
    }
    let t = m / (sd / (n as f64).sqrt());
    let nu = df as f64;
    let p = beta_reg(nu / 2.0, 0.5, nu / (nu + t * t)).clamp(0.0, 1.0);
    Ok(TTest { t, p, df })
}

pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons.max(1) as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_test_reference_case() {
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((r.t - 4.242641).abs() < 1e-6);
        assert_eq!(r.df, 4);
        assert!((r.p - 0.0132).abs() < 1e-3, "{}", r.p);
    }

    #[test]
    fn degenerate_cases() {
        let a = [0.1, 0.5, 0.3];
        assert_eq!(paired_t_test(&a, &a).unwrap().p, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        let r = paired_t_test(&a, &b).unwrap();
        assert_eq!(r.p, 0.0);
        assert_eq!(r.t, f64::NEG_INFINITY);
        assert!(paired_t_test(&a, &a[..2]).is_err());
        assert!(paired_t_test(&a[..1], &a[..1]).is_err());
    }

    #[test]
    fn bonferroni_cases() {
        assert!((bonferroni(0.01, 3) - 0.03).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 3), 1.0);
        assert_eq!(bonferroni(0.2, 1), 0.2);
    }

    #[test]
    fn sd_is_sample() {
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
