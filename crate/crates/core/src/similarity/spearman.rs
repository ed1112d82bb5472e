use crate::error::{Error, Result};

/// 1-based ranks with ties given their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dimension(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::validation(format!("need at least 3 observations, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite value in rank correlation input"));
    }
    pearson(&ranks(x), &ranks(y))
        .ok_or_else(|| Error::Undefined("rank correlation of a constant vector".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman_rho(&x, &[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rho(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_tie_matches_hand_ranking() {
        // y ranks: 10 -> 1, 20 -> 2.5, 20 -> 2.5, 40 -> 4; x ranks 1,2,3,4
        // centered: x (-1.5,-.5,.5,1.5), y (-1.5,0,0,1.5)
        // sxy = 4.5, sxx = 5, syy = 4.5 -> rho = 4.5 / sqrt(22.5)
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 40.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert!((rho - 4.5 / 22.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_and_short_inputs() {
        assert!(matches!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Undefined(_))));
        assert!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_transform(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(rho) = spearman_rho(&x, &y) {
                prop_assert!((-1.0..=1.0).contains(&rho));
                let tx: Vec<f64> = x.iter().map(|v| (v / 50.0).exp() + 3.0 * v).collect();
                let ty: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
                let rho2 = spearman_rho(&tx, &ty).unwrap();
                prop_assert!((rho - rho2).abs() < 1e-12);
            }
        }
    }
}
