//! Summary statistics and the paired two-sided t-test used to compare
//! planners run with common random numbers.

use crate::error::{Error, Result};

/// Mean and population standard deviation of a group of runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    /// Population standard deviation (divide by count).
    pub std: f64,
    pub count: usize,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("cannot summarize an empty group".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(SummaryStats { mean, std: var.sqrt(), count: values.len() })
    }
}

/// Result of a paired two-sided t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_statistic: f64,
    /// n - 1 for n pairs.
    pub degrees_of_freedom: usize,
    /// Two-sided p-value in [0, 1].
    pub p_value: f64,
}

/// Paired two-sided t-test on per-seed differences `a_i - b_i`.
///
/// `t = mean(d) * sqrt(n) / sample_std(d)` with the sample standard
/// deviation (divide by n - 1); the p-value comes from the t-distribution
/// with n - 1 degrees of freedom. A population of identical pairs gives
/// t = 0, p = 1 by definition; identical nonzero differences give an
/// infinite statistic and p = 0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Parameter("paired t-test needs at least 2 pairs".into()));
    }
    for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidReturn(i));
        }
    }
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    let dof = n - 1;

    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean * (n as f64).sqrt() / var.sqrt();
        (t, student_t_two_sided_p(t, dof as f64))
    };

    Ok(TTestResult { t_statistic: t, degrees_of_freedom: dof, p_value: p })
}

/// Two-sided p-value of Student's t: `I_{nu/(nu+t^2)}(nu/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    regularized_incomplete_beta(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function `I_x(a, b)` via the standard
/// continued-fraction expansion (modified Lentz iteration). Absolute
/// accuracy well below 1e-8 over the t-test parameter range.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    // The continued fraction converges fast only for x up to the split
    // point; beyond it, flip the arguments (the flipped x then falls
    // strictly below the flipped split, so the recursion terminates).
    if x <= (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - regularized_incomplete_beta(b, a, 1.0 - x)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation of ln Gamma (g = 7, 9 coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_hand_examples() {
        let s = SummaryStats::of(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (1.0, 0.0, 3));
        let s = SummaryStats::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (2.0, 1.0, 2));
        let s = SummaryStats::of(&[4.5]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (4.5, 0.0, 1));
        assert!(SummaryStats::of(&[]).is_err());
    }

    #[test]
    fn t_test_frozen_example() {
        // differences {1, 2, 3}: t = 2 sqrt(3), dof 2, p = 1 - sqrt(6/7)
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t_statistic - 2.0 * 3.0f64.sqrt()).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 2);
        let exact = 1.0 - (6.0f64 / 7.0).sqrt();
        assert!((r.p_value - exact).abs() < 1e-10);
        assert!((r.p_value - 0.0742).abs() < 1e-4);
    }

    #[test]
    fn identical_samples_give_t0_p1() {
        let a = [0.4, -1.0, 2.5, 3.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn constant_nonzero_difference_saturates() {
        let r = paired_t_test(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!(r.t_statistic.is_infinite() && r.t_statistic > 0.0);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn antisymmetry() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0];
        let b = [0.5, 4.5, 1.0, 6.0, 5.5];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert!((ab.t_statistic + ba.t_statistic).abs() < 1e-12);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0, f64::NAN], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1/2) = 1 - sqrt(1 - x)
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let got = regularized_incomplete_beta(1.0, 0.5, x);
            let want = 1.0 - (1.0 - x).sqrt();
            assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
        // I_x(1/2, 1/2) = (2/pi) asin(sqrt(x))
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let got = regularized_incomplete_beta(0.5, 0.5, x);
            let want = 2.0 / std::f64::consts::PI * x.sqrt().asin();
            assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-11);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn p_values_match_reference_distribution() {
        // statrs implements the same t CDF independently.
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let mut vals = Vec::new();
        for dof in [1usize, 2, 5, 9, 30, 49] {
            for k in 0..20 {
                vals.push((0.1 + 0.35 * k as f64, dof));
            }
        }
        for (t, dof) in vals {
            let ours = student_t_two_sided_p(t, dof as f64);
            let dist = StudentsT::new(0.0, 1.0, dof as f64).unwrap();
            let reference = 2.0 * (1.0 - dist.cdf(t));
            assert!(
                (ours - reference).abs() < 1e-9,
                "t={t}, dof={dof}: {ours} vs {reference}"
            );
        }
    }
}
