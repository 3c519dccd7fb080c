use proptest::prelude::*;
use rdeid::esprit::{esprit_fit, index_match, recover, EspritError, FitConfig};
use rdeid::expmodel::ExponentialModel;
use rdeid::numkernel::{Mp32, Real};

/// Rates with gaps of at least 0.5 and amplitudes away from zero.
fn terms(max_n1: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_n1).prop_flat_map(|n1| {
        (
            0.5f64..1.5,
            prop::collection::vec(0.5f64..1.0, n1 - 1),
            prop::collection::vec(0.5f64..2.0, n1),
        )
            .prop_map(|(first, gaps, amps)| {
                let mut rates = vec![first];
                for g in gaps {
                    rates.push(rates.last().unwrap() + g);
                }
                (rates, amps)
            })
    })
}

fn samples<R: Real>(rates: &[f64], amps: &[f64], delta: f64, count: usize) -> Vec<R> {
    let d = R::from_f64(delta);
    (0..count)
        .map(|k| {
            let t = R::from_usize(k) * &d;
            rates.iter().zip(amps).fold(R::zero(), |s, (l, y)| {
                s + R::from_f64(*y) * (-(R::from_f64(*l) * &t)).exp()
            })
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_fit_is_exact((rates, amps) in terms(3)) {
        let n1 = rates.len();
        let data = samples::<f64>(&rates, &amps, 0.5, 2 * n1);
        let fit = esprit_fit(&data, &FitConfig::new(n1, 0.5)).unwrap();
        for n in 0..n1 {
            prop_assert!((fit.rates[n] - rates[n]).abs() <= 1e-7 * rates[n]);
            prop_assert!((fit.amplitudes[n] - amps[n]).abs() <= 1e-7 * amps[n]);
        }
    }

    #[test]
    fn fit_scales_with_the_data((rates, amps) in terms(3), c in 0.1f64..10.0) {
        let n1 = rates.len();
        let data = samples::<f64>(&rates, &amps, 0.5, 2 * n1);
        let scaled: Vec<f64> = data.iter().map(|v| c * v).collect();
        let cfg = FitConfig::new(n1, 0.5);
        let a = esprit_fit(&data, &cfg).unwrap();
        let b = esprit_fit(&scaled, &cfg).unwrap();
        for n in 0..n1 {
            prop_assert!((a.rates[n] - b.rates[n]).abs() <= 1e-8 * a.rates[n]);
            prop_assert!((c * a.amplitudes[n] - b.amplitudes[n]).abs() <= 1e-8 * b.amplitudes[n].abs());
        }
    }

    #[test]
    fn matching_commutes_with_permutations(
        values in prop::collection::vec(0.0f64..10.0, 1..8),
        perm in any::<u64>(),
    ) {
        let truth = values.clone();
        // A deterministic shuffle of the estimates.
        let mut order: Vec<usize> = (0..values.len()).collect();
        let mut state = perm;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let est: Vec<f64> = order.iter().map(|&i| values[i] + 1e-12).collect();
        let m = index_match(&est, &truth).unwrap();
        let mut seen = m.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..values.len()).collect::<Vec<_>>());
        for (t, &e) in m.iter().enumerate() {
            prop_assert!((est[e] - truth[t]).abs() <= 1e-12 + 1e-15 * truth[t]);
        }
    }

    #[test]
    fn extra_samples_do_not_change_a_noiseless_fit((rates, amps) in terms(2), extra in 1usize..10) {
        let n1 = rates.len();
        let data = samples::<f64>(&rates, &amps, 0.5, 2 * n1 + extra);
        let fit = esprit_fit(&data, &FitConfig::new(n1, 0.5)).unwrap();
        for n in 0..n1 {
            prop_assert!((fit.amplitudes[n] - amps[n]).abs() <= 1e-7 * amps[n]);
        }
    }
}

#[test]
fn five_terms_at_32_digits() {
    let rates = [1.0, 4.0, 9.0, 16.0, 25.0];
    let amps = [1.0, 1.0, 1.0, 1.0, 1.0];
    let data = samples::<Mp32>(&rates, &amps, 0.2, 10);
    let fit = esprit_fit(&data, &FitConfig::new(5, Mp32::from_f64(0.2))).unwrap();
    for n in 0..5 {
        assert!((fit.rates[n].to_f64() - rates[n]).abs() < 1e-12 * rates[n]);
        assert!((fit.amplitudes[n].to_f64() - amps[n]).abs() < 1e-12);
    }
}

#[test]
fn recovery_errors_are_rescaled() {
    let rates: Vec<Mp32> = [1.0, 4.0, 9.0].iter().map(|&x| Mp32::from_f64(x)).collect();
    let amps = vec![Mp32::one(); 3];
    let eps = Mp32::parse_decimal("1e-6").unwrap();
    let model = ExponentialModel::from_lists(&rates, &amps, 2, eps).unwrap();
    let r = recover(&model, &Mp32::from_f64(0.5)).unwrap();
    let errs = r.rate_errors.unwrap();
    // Errors are O(eps), so the rescaled values stay O(1).
    for e in errs {
        assert!(e.to_f64() > 0.0 && e.to_f64() < 100.0);
    }
    let clean = model.with_epsilon(Mp32::zero()).unwrap();
    assert!(recover(&clean, &Mp32::from_f64(0.5))
        .unwrap()
        .rate_errors
        .is_none());
}

#[test]
fn input_validation() {
    assert!(matches!(
        esprit_fit(&[1.0, 0.5, 0.25], &FitConfig::new(2, 1.0)),
        Err(EspritError::TooFewSamples { got: 3, need: 4 })
    ));
    assert!(matches!(
        esprit_fit(&[1.0], &FitConfig::new(0, 1.0)),
        Err(EspritError::ZeroOrder)
    ));
    assert!(matches!(
        esprit_fit(&[1.0, f64::NAN], &FitConfig::new(1, 1.0)),
        Err(EspritError::NonFinite)
    ));
    assert!(matches!(
        esprit_fit(&[1.0, -0.5], &FitConfig::new(1, 1.0)),
        Err(EspritError::NonPositiveNode { .. })
    ));
    assert!(matches!(
        index_match(&[1.0], &[1.0, 2.0]),
        Err(EspritError::LengthMismatch { .. })
    ));
}
