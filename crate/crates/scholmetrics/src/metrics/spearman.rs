//! Spearman rank correlation with average-rank tie handling.

use crate::metrics::MetricsError;

/// Rank correlation of two paired samples.
///
/// Values are converted to ranks (ties receive the average of the ranks
/// they occupy) and the Pearson correlation of the rank vectors is
/// returned. On tie-free input this is exactly `1 - 6*sum(d^2) / (n*(n^2-1))`.
///
/// Returns `Ok(None)` when either rank vector has zero variance, in which
/// case the coefficient is undefined.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::Argument(format!(
            "sample length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(MetricsError::Argument(format!(
            "need at least 2 paired observations, got {}",
            xs.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys.iter()).find(|v| !v.is_finite()) {
        return Err(MetricsError::Argument(format!("non-finite observation {v}")));
    }

    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    Ok(pearson(&rx, &ry))
}

/// 1-based ranks; tied values share the mean of the positions they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));

    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) hold ranks i+1..=j+1.
        let avg = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either sample is constant.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rho(xs: &[f64], ys: &[f64]) -> f64 {
        spearman_rho(xs, ys).unwrap().unwrap()
    }

    #[test]
    fn single_adjacent_swap_gives_one_half() {
        assert_eq!(rho(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]), 0.5);
    }

    #[test]
    fn identical_order_is_one() {
        assert_eq!(rho(&[10.0, 20.0, 35.0, 36.0], &[1.0, 2.0, 3.0, 4.0]), 1.0);
    }

    #[test]
    fn reversed_order_is_minus_one() {
        assert_eq!(rho(&[1.0, 2.0, 3.0, 4.0], &[9.0, 7.0, 5.0, 3.0]), -1.0);
    }

    #[test]
    fn ties_use_average_ranks() {
        // x ranks: [1.5, 1.5, 3]; y ranks: [1, 2, 3].
        let got = rho(&[1.0, 1.0, 2.0], &[3.0, 5.0, 9.0]);
        let want = 1.5 / (1.5f64 * 2.0).sqrt();
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
    }

    #[test]
    fn constant_sample_is_undefined() {
        assert_eq!(spearman_rho(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[7.0, 7.0, 7.0]).unwrap(), None);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            spearman_rho(&[1.0, 2.0], &[1.0]),
            Err(MetricsError::Argument(_))
        ));
    }

    #[test]
    fn fewer_than_two_observations_is_an_error() {
        assert!(matches!(spearman_rho(&[], &[]), Err(MetricsError::Argument(_))));
        assert!(matches!(
            spearman_rho(&[1.0], &[2.0]),
            Err(MetricsError::Argument(_))
        ));
    }

    #[test]
    fn non_finite_values_are_an_error() {
        assert!(matches!(
            spearman_rho(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(MetricsError::Argument(_))
        ));
        assert!(matches!(
            spearman_rho(&[1.0, 2.0], &[f64::INFINITY, 2.0]),
            Err(MetricsError::Argument(_))
        ));
    }

    fn distinct_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        proptest::collection::btree_set(-10_000i64..10_000, 2..30)
            .prop_map(|s| s.into_iter().map(|v| v as f64).collect::<Vec<_>>())
            .prop_flat_map(|v| (Just(v.clone()).prop_shuffle(), Just(v).prop_shuffle()))
    }

    proptest! {
        // Tie-free inputs must match the closed-form rank-difference formula.
        #[test]
        fn tie_free_matches_closed_form((xs, ys) in distinct_pair()) {
            let n = xs.len();
            let rx = average_ranks(&xs);
            let ry = average_ranks(&ys);
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
            let closed = 1.0 - 6.0 * d2 / (n as f64 * ((n * n - 1) as f64));
            let got = rho(&xs, &ys);
            prop_assert!((got - closed).abs() <= 1e-12, "pearson {got} vs closed {closed}");
        }

        #[test]
        fn symmetric_and_bounded(
            pairs in proptest::collection::vec((-50i64..50, -50i64..50), 2..40)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let ab = spearman_rho(&xs, &ys).unwrap();
            let ba = spearman_rho(&ys, &xs).unwrap();
            prop_assert_eq!(ab, ba);
            if let Some(r) = ab {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r), "rho {r}");
            }
        }
    }
}
