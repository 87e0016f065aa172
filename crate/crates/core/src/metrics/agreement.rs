use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::TooFewPoints);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricError::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(MetricError::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    /// Both raters used a single label each; the statistic says little.
    pub degenerate: bool,
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<Kappa, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricError::Empty("cohen_kappa"));
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ma: BTreeMap<&T, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&T, usize> = BTreeMap::new();
    for x in a {
        *ma.entry(x).or_default() += 1;
    }
    for y in b {
        *mb.entry(y).or_default() += 1;
    }
    let expected: f64 = ma
        .iter()
        .map(|(label, ca)| *ca as f64 / n * mb.get(label).copied().unwrap_or(0) as f64 / n)
        .sum();
    let degenerate = ma.len() == 1 && mb.len() == 1;
    if (1.0 - expected).abs() < 1e-15 {
        return if observed == 1.0 {
            Ok(Kappa {
                kappa: 1.0,
                observed,
                expected,
                degenerate,
            })
        } else {
            Err(MetricError::DegenerateKappa)
        };
    }
    Ok(Kappa {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 7.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        // mean-centred: dx = (-1, 0, 1), dy = (-4/3, -1/3, 5/3)
        let hand = 3.0 / (2.0f64 * 42.0 / 9.0).sqrt();
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - hand).abs() < 1e-12);
        assert!((r - 0.9820).abs() < 1e-4);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson(&[1.0], &[1.0]), Err(MetricError::TooFewPoints));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricError::ZeroVariance("xs")));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(MetricError::LengthMismatch(2, 1)));
    }

    #[test]
    fn kappa_examples() {
        let k = cohen_kappa(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap();
        assert_eq!(k.kappa, 1.0);
        let k = cohen_kappa(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!((k.observed, k.expected), (0.5, 0.5));
        assert!(k.kappa.abs() < 1e-12);
        let k = cohen_kappa(&["x", "x"], &["y", "y"]).unwrap();
        assert_eq!((k.observed, k.expected, k.kappa), (0.0, 0.0, 0.0));
        assert!(k.degenerate);
    }

    #[test]
    fn kappa_full_chance_agreement() {
        assert_eq!(cohen_kappa(&[1, 1], &[1, 1]).unwrap().kappa, 1.0);
        let empty: [u8; 0] = [];
        assert!(cohen_kappa(&empty, &empty).is_err());
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant(
            xs in proptest::collection::vec(-100.0..100.0f64, 3..20),
            noise in proptest::collection::vec(-50.0..50.0f64, 20),
            scale in 0.1..10.0f64,
            shift in -100.0..100.0f64,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
            if let Ok(r) = pearson(&xs, &ys) {
                let xs2: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
                let r2 = pearson(&xs2, &ys).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
