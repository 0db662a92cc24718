//! Summary statistics and significance tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::Argument(format!("need at least {min} values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value".into()));
    }
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let m = mean(x);
    Some((m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()))
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target, 1)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

fn two_tailed(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed p-value against zero correlation.
    pub p: f64,
    pub n: usize,
}

/// Sample Pearson correlation with a Student-t p-value on n − 2 degrees of freedom.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y, 3)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Validation("correlation is undefined for a constant series".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let n = x.len();
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        two_tailed(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    /// Set when the differences have zero variance, so t is not a real statistic.
    pub degenerate: bool,
}

/// Two-tailed paired t-test on `a − b`.
///
/// All-zero differences give t = 0, p = 1; constant nonzero differences give
/// t = ±∞, p = 0. Both are flagged degenerate.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedT> {
    check_pair(a, b, 2)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let m = mean(&d);
    let var = d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if var == 0.0 {
        return Ok(if m == 0.0 {
            PairedT { t: 0.0, p: 1.0, df, degenerate: true }
        } else {
            PairedT { t: m.signum() * f64::INFINITY, p: 0.0, df, degenerate: true }
        });
    }
    let t = m / (var / n as f64).sqrt();
    Ok(PairedT { t, p: two_tailed(t, df as f64), df, degenerate: false })
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Argument("kappa needs two equal-length, non-empty rating lists".into()));
    }
    let n = a.len() as f64;
    let mut cats: Vec<i64> = a.iter().chain(b).copied().collect();
    cats.sort_unstable();
    cats.dedup();
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let expected: f64 = cats
        .iter()
        .map(|c| {
            let pa = a.iter().filter(|x| *x == c).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == c).count() as f64 / n;
            pa * pb
        })
        .sum();
    if expected == 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[2.0, 3.0], &[2.0, 3.0]).unwrap(), 0.0);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn perfect_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap().r - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &neg).unwrap().r + 1.0).abs() < 1e-15);
        assert!(pearson_r(&x, &[1.0; 4]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn p_value_matches_known_table_value() {
        // r = 0.5 with n = 12: t = 0.5·√(10/0.75) ≈ 1.8257, two-tailed p ≈ 0.0979
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-6.0..6.0)).collect();
        let c = pearson_r(&x, &y).unwrap();
        let t = c.r * (10.0 / (1.0 - c.r * c.r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, 10.0).unwrap();
        assert!((c.p - 2.0 * dist.sf(t.abs())).abs() < 1e-12);
        assert!((two_tailed(1.8257418583505538, 10.0) - 0.09785).abs() < 1e-4);
    }

    #[test]
    fn paired_t_conventions() {
        let a = [1.0, 2.0, 3.0];
        let same = paired_t_test(&a, &a).unwrap();
        assert_eq!((same.t, same.p, same.degenerate), (0.0, 1.0, true));
        let shifted: Vec<f64> = a.iter().map(|v| v - 1.0).collect();
        let s = paired_t_test(&a, &shifted).unwrap();
        assert_eq!((s.p, s.degenerate), (0.0, true));
        assert!(s.t.is_infinite() && s.t > 0.0);
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn paired_t_textbook() {
        let a = [5.0, 7.0, 6.0, 9.0];
        let b = [4.0, 5.0, 6.0, 6.0];
        // d = [1, 2, 0, 3], mean 1.5, sd = √(5/3)
        let t = 1.5 / ((5.0f64 / 3.0).sqrt() / 2.0);
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t - t).abs() < 1e-12);
        assert_eq!(r.df, 3);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&[1, 0, -1], &[1, 0, -1]).unwrap(), 1.0);
        // observed 0.5, expected 0.5 → 0
        assert_eq!(cohen_kappa(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap(), 0.0);
        assert_eq!(cohen_kappa(&[1, 1], &[1, 1]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn r_affine_invariant(
            xs in prop::collection::vec(-10.0f64..10.0, 5..30),
            noise in prop::collection::vec(-3.0f64..3.0, 30),
            a in 0.1f64..10.0, b in -5.0f64..5.0,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
            let Ok(base) = pearson_r(&xs, &ys) else { return Ok(()) };
            let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            prop_assert!((pearson_r(&moved, &ys).unwrap().r - base.r).abs() < 1e-10);
            let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
            prop_assert!((pearson_r(&xs, &neg).unwrap().r + base.r).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base.p));
        }

        #[test]
        fn mae_zero_iff_equal(xs in prop::collection::vec(-5.0f64..5.0, 1..20), j in 0usize..20, delta in 0.01f64..1.0) {
            prop_assert_eq!(mae(&xs, &xs).unwrap(), 0.0);
            let mut ys = xs.clone();
            let j = j % ys.len();
            ys[j] += delta;
            prop_assert!(mae(&xs, &ys).unwrap() > 0.0);
        }
    }
}
