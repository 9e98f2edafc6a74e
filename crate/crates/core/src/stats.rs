//! Goodness-of-fit checks of sampled frequencies against analytic predictions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::particle::EnsembleReport;

/// Categories with predicted probability at or below this are left out of
/// the chi-square sum; they must never be observed.
pub const EXCLUDE_BELOW: f64 = 1e-12;

pub const DEFAULT_ALPHA: f64 = 0.001;

/// Any outcome further than this many standard deviations fails outright.
pub const MAX_SIGMA: f64 = 5.0;

/// Pearson statistic `sum (count - n p)^2 / (n p)` and its degrees of freedom.
pub fn chi_square(
    observed: &BTreeMap<String, u64>,
    expected: &BTreeMap<String, f64>,
    n: u64,
) -> Result<(f64, usize)> {
    if n == 0 {
        return Err(Error::Stats("chi-square needs n > 0".into()));
    }
    let total: f64 = expected.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Stats(format!("expected probabilities sum to {total}")));
    }
    let n = n as f64;
    let mut stat = 0.0;
    let mut categories = 0;
    for (label, &p) in expected {
        if p <= EXCLUDE_BELOW {
            continue;
        }
        let count = observed.get(label).copied().unwrap_or(0) as f64;
        let e = n * p;
        stat += (count - e) * (count - e) / e;
        categories += 1;
    }
    if categories == 0 {
        return Err(Error::Stats("no categories with non-zero expectation".into()));
    }
    Ok((stat, categories - 1))
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_p_value(statistic: f64, dof: usize) -> Result<f64> {
    if statistic.is_nan() || statistic < 0.0 {
        return Err(Error::Stats(format!("negative chi-square statistic {statistic}")));
    }
    if dof == 0 {
        return Ok(if statistic <= 1e-12 { 1.0 } else { 0.0 });
    }
    Ok(gamma_q(dof as f64 / 2.0, statistic / 2.0))
}

/// Natural log of the gamma function (Lanczos, g = 7).
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
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut ap = a;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// modified Lentz
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeCheck {
    pub frequency: f64,
    pub predicted: f64,
    /// `|frequency - predicted| / sqrt(p (1 - p) / n)`; infinite when a
    /// certain or impossible outcome is contradicted.
    pub sigma_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub per_outcome: BTreeMap<String, OutcomeCheck>,
}

impl Verdict {
    pub fn max_sigma_distance(&self) -> f64 {
        self.per_outcome
            .values()
            .map(|c| c.sigma_distance)
            .fold(0.0, f64::max)
    }
}

fn sigma_distance(frequency: f64, predicted: f64, n: f64) -> f64 {
    let sigma = (predicted * (1.0 - predicted) / n).sqrt();
    let diff = (frequency - predicted).abs();
    if sigma > 0.0 {
        diff / sigma
    } else if diff <= EXCLUDE_BELOW {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Tests a sampled ensemble against the prediction it carries.
pub fn compare(report: &EnsembleReport, alpha: f64) -> Result<Verdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Stats(format!("alpha {alpha} outside (0, 1)")));
    }
    if report.n_trials == 0 {
        return Err(Error::Stats("report has zero trials".into()));
    }
    let n = report.n_trials as f64;
    let expected: BTreeMap<String, f64> = report
        .predicted
        .iter()
        .filter(|(_, p)| *p > EXCLUDE_BELOW)
        .map(|(k, p)| (k.to_owned(), p))
        .collect();
    let (chi_square, dof) = chi_square(&report.counts, &expected, report.n_trials)?;
    let p_value = chi_square_p_value(chi_square, dof)?;

    let mut per_outcome = BTreeMap::new();
    let labels = report
        .counts
        .keys()
        .map(String::as_str)
        .chain(report.predicted.labels());
    for label in labels {
        let frequency = report.count(label) as f64 / n;
        let predicted = report.predicted.get(label);
        per_outcome.insert(
            label.to_owned(),
            OutcomeCheck {
                frequency,
                predicted,
                sigma_distance: sigma_distance(frequency, predicted, n),
            },
        );
    }
    let impossible_seen = report
        .counts
        .iter()
        .any(|(label, &c)| c > 0 && report.predicted.get(label) <= EXCLUDE_BELOW);
    let pass = p_value > alpha
        && !impossible_seen
        && per_outcome.values().all(|c| c.sigma_distance <= MAX_SIGMA);
    Ok(Verdict {
        pass,
        chi_square,
        dof,
        p_value,
        per_outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::OutcomeDistribution;
    use proptest::prelude::*;

    fn counts(entries: &[(&str, u64)]) -> BTreeMap<String, u64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn probs(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    // Gamma(k / 2) by the recurrence from Gamma(1/2) = sqrt(pi), Gamma(1) = 1.
    fn gamma_of_half(k: usize) -> f64 {
        let (mut g, mut x) = if k % 2 == 1 { (std::f64::consts::PI.sqrt(), 0.5) } else { (1.0, 1.0) };
        while x < k as f64 / 2.0 {
            g *= x;
            x += 1.0;
        }
        g
    }

    // Simpson's rule on the chi-square density, substituting x = u^2 to
    // remove the singularity at zero for dof = 1.
    fn tail_by_quadrature(stat: f64, dof: usize) -> f64 {
        let k = dof as f64;
        let norm = (k / 2.0) * 2f64.ln() + gamma_of_half(dof).ln();
        let pdf_u = |u: f64| {
            if u == 0.0 {
                return if dof == 1 { 2.0 * (-norm).exp() } else { 0.0 };
            }
            let x = u * u;
            2.0 * u * ((k / 2.0 - 1.0) * x.ln() - x / 2.0 - norm).exp()
        };
        let upper = stat.sqrt();
        let steps = 20_000;
        let h = upper / steps as f64;
        let mut s = pdf_u(0.0) + pdf_u(upper);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf_u(i as f64 * h);
        }
        1.0 - s * h / 3.0
    }

    #[test]
    fn quadrature_oracle_agrees() {
        for &(stat, dof) in &[(3.841, 1), (4.0, 1), (1.0, 2), (7.5, 3), (12.0, 5), (25.0, 20)] {
            let want = tail_by_quadrature(stat, dof);
            let got = chi_square_p_value(stat, dof).unwrap();
            assert!((got - want).abs() < 1e-8, "stat {stat} dof {dof}: {got} vs {want}");
        }
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(chi_square_p_value(0.0, 1).unwrap(), 1.0);
        assert!((chi_square_p_value(3.841, 1).unwrap() - 0.05).abs() < 1e-3);
        // frozen from the quadrature oracle: 0.04550026...
        assert!((chi_square_p_value(4.0, 1).unwrap() - 0.0455).abs() < 1e-3);
        assert_eq!(chi_square_p_value(0.0, 0).unwrap(), 1.0);
        assert_eq!(chi_square_p_value(0.5, 0).unwrap(), 0.0);
        assert!(chi_square_p_value(-1.0, 2).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_examples() {
        let (s, d) = chi_square(&counts(&[("A", 50), ("B", 50)]), &probs(&[("A", 0.5), ("B", 0.5)]), 100).unwrap();
        assert_eq!((s, d), (0.0, 1));
        let (s, d) = chi_square(&counts(&[("A", 60), ("B", 40)]), &probs(&[("A", 0.5), ("B", 0.5)]), 100).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
        assert_eq!(d, 1);
        let (s, d) = chi_square(&counts(&[("A", 37)]), &probs(&[("A", 1.0)]), 37).unwrap();
        assert_eq!((s, d), (0.0, 0));
    }

    #[test]
    fn chi_square_errors() {
        let p = probs(&[("A", 1.0)]);
        assert!(chi_square(&counts(&[]), &p, 0).is_err());
        assert!(chi_square(&counts(&[]), &probs(&[]), 10).is_err());
        assert!(chi_square(&counts(&[]), &probs(&[("A", 0.4)]), 10).is_err());
    }

    fn report(c: &[(&str, u64)], p: &[(&str, f64)]) -> EnsembleReport {
        EnsembleReport::from_counts(counts(c), 0, OutcomeDistribution::from_entries(p.iter().map(|(k, v)| (*k, *v)))).unwrap()
    }

    #[test]
    fn compare_examples() {
        let v = compare(&report(&[("D2", 10_000)], &[("D1", 0.0), ("D2", 1.0)]), DEFAULT_ALPHA).unwrap();
        assert!(v.pass);
        assert_eq!(v.p_value, 1.0);

        let wrong = report(&[("D1", 50_112), ("D2", 49_888)], &[("D1", 0.9), ("D2", 0.1)]);
        assert!(!compare(&wrong, DEFAULT_ALPHA).unwrap().pass);

        // an impossible click fails even though chi-square ignores it
        let click = report(&[("D1", 1), ("D2", 9_999)], &[("D1", 0.0), ("D2", 1.0)]);
        let v = compare(&click, DEFAULT_ALPHA).unwrap();
        assert!(!v.pass);
        assert!(v.per_outcome["D1"].sigma_distance.is_infinite());

        assert!(compare(&wrong, 0.0).is_err());
        assert!(compare(&wrong, 1.0).is_err());
    }

    #[test]
    fn sigma_guard_fails_outliers() {
        // 21 equiprobable categories: one sits 5.8 sigma high while the
        // chi-square p-value (statistic 34.02, dof 20) is still about 0.026
        let labels: Vec<String> = (0..21).map(|i| format!("c{i:02}")).collect();
        let mut c = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            c.insert(l.clone(), if i == 0 { 1_180 } else { 991 });
        }
        let predicted = OutcomeDistribution::from_entries(labels.iter().map(|l| (l.clone(), 1.0 / 21.0)));
        let v = compare(&EnsembleReport::from_counts(c, 0, predicted).unwrap(), DEFAULT_ALPHA).unwrap();
        assert!((v.chi_square - 34.02).abs() < 1e-9);
        assert!(v.p_value > DEFAULT_ALPHA);
        assert!(v.max_sigma_distance() > MAX_SIGMA);
        assert!(!v.pass);
    }

    proptest! {
        #[test]
        fn chi_square_ignores_label_names(a in 0u64..500, b in 0u64..500, c in 1u64..500, pa in 0.05f64..0.45, pb in 0.05f64..0.45) {
            let n = a + b + c;
            let p = probs(&[("x", pa), ("y", pb), ("z", 1.0 - pa - pb)]);
            let q = probs(&[("q", 1.0 - pa - pb), ("r", pa), ("s", pb)]);
            let (s1, d1) = chi_square(&counts(&[("x", a), ("y", b), ("z", c)]), &p, n).unwrap();
            let (s2, d2) = chi_square(&counts(&[("r", a), ("s", b), ("q", c)]), &q, n).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-9 * s1.max(1.0));
            prop_assert_eq!(d1, d2);
        }

        #[test]
        fn p_value_decreases_with_statistic(s in 0.0f64..60.0, ds in 0.001f64..10.0, dof in 1usize..20) {
            let lo = chi_square_p_value(s, dof).unwrap();
            let hi = chi_square_p_value(s + ds, dof).unwrap();
            prop_assert!(hi <= lo + 1e-15);
        }
    }
}
