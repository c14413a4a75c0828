//! Paired t-test and Bonferroni correction.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples cover different query sets")]
    MismatchedQids,
    #[error("paired test needs at least 2 queries, got {0}")]
    TooFew(usize),
    #[error("correction family size must be at least 1")]
    EmptyFamily,
}

/// Two-sided paired t-test over per-query scores; returns the raw p-value.
///
/// Zero-variance differences give p = 1 when the mean difference is 0 and
/// p = 0 otherwise.
pub fn paired_t_test(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<f64, StatsError> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(StatsError::MismatchedQids);
    }
    let diffs: Vec<f64> = a.values().zip(b.values()).map(|(x, y)| x - y).collect();
    t_test_differences(&diffs)
}

/// One-sample two-sided t-test of `diffs` against zero.
pub fn t_test_differences(diffs: &[f64]) -> Result<f64, StatsError> {
    let n = diffs.len();
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    // Differences that agree to rounding noise count as zero variance.
    if sd <= 1e-12 * (1.0 + mean.abs()) {
        return Ok(if mean.abs() <= 1e-12 { 1.0 } else { 0.0 });
    }
    let t = mean / (sd / nf.sqrt());
    Ok(student_t_two_sided(t, nf - 1.0))
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Bonferroni-adjusted p-value, capped at 1.
pub fn bonferroni(raw_p: f64, m: usize) -> Result<f64, StatsError> {
    if m == 0 {
        return Err(StatsError::EmptyFamily);
    }
    Ok((raw_p * m as f64).min(1.0))
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// I_x(a, b) via the continued fraction, using the symmetry relation for
/// fast convergence.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> BTreeMap<String, f64> {
        v.iter().enumerate().map(|(i, &x)| (format!("q{i:03}"), x)).collect()
    }

    #[test]
    fn identical_samples_give_one() {
        let a = scores(&[0.1, 0.5, 0.9]);
        assert_eq!(paired_t_test(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn constant_nonzero_difference_gives_zero() {
        assert_eq!(t_test_differences(&[0.1, 0.1, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn worked_example() {
        // scipy.stats.ttest_1samp([0.2, -0.1, 0.3, 0.0], 0): t = 1.0954451150103324, p = 0.35338746628869805
        let p = t_test_differences(&[0.2, -0.1, 0.3, 0.0]).unwrap();
        assert!((p - 0.353_387_466_288_698_05).abs() < 1e-9, "{p}");
        // scipy.stats.ttest_rel([.5,.2,.9,.4,.3], [.1,.3,.2,.4,0]): p = 0.14429445285927497
        let p = paired_t_test(&scores(&[0.5, 0.2, 0.9, 0.4, 0.3]), &scores(&[0.1, 0.3, 0.2, 0.4, 0.0])).unwrap();
        assert!((p - 0.144_294_452_859_274_97).abs() < 1e-9, "{p}");
    }

    #[test]
    fn symmetric_in_sign() {
        let a = scores(&[0.5, 0.2, 0.9, 0.4]);
        let b = scores(&[0.1, 0.3, 0.2, 0.45]);
        assert_eq!(paired_t_test(&a, &b).unwrap(), paired_t_test(&b, &a).unwrap());
    }

    #[test]
    fn errors() {
        assert_eq!(paired_t_test(&scores(&[0.1]), &scores(&[0.2])), Err(StatsError::TooFew(1)));
        let mut b = scores(&[0.1, 0.2]);
        b.insert("other".into(), 0.0);
        assert_eq!(paired_t_test(&scores(&[0.1, 0.2]), &b), Err(StatsError::MismatchedQids));
        assert_eq!(bonferroni(0.1, 0), Err(StatsError::EmptyFamily));
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni(0.01, 3).unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 4).unwrap(), 1.0);
        assert_eq!(bonferroni(0.0, 100).unwrap(), 0.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!(ln_gamma(2.0).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn incomplete_beta_edges_and_symmetry() {
        assert_eq!(regularized_incomplete_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(regularized_incomplete_beta(1.0, 2.0, 3.0), 1.0);
        // I_x(1, 1) = x; I_x(a, b) = 1 - I_{1-x}(b, a).
        assert!((regularized_incomplete_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        let l = regularized_incomplete_beta(0.2, 2.5, 0.5);
        let r = 1.0 - regularized_incomplete_beta(0.8, 0.5, 2.5);
        assert!((l - r).abs() < 1e-13);
    }
}
