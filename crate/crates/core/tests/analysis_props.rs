use std::f64::consts::PI;

use proptest::prelude::*;
use spinbath::analysis::{
    dft_peak, fit_trace_distance, non_markovianity_integral, non_markovianity_revival_sum, trace_distance_model,
    TraceDistanceSeries,
};
use spinbath::bath::{BathSpectrum, PolarizationModel};
use spinbath::paper_default_spectrum;
use spinbath::protocols::{run_markov_transition, run_trace_distance_experiment};
use spinbath::EnsembleMethod;

fn series(values: Vec<f64>) -> TraceDistanceSeries {
    let t = (0..values.len()).map(|i| i as f64 * 10.0).collect();
    TraceDistanceSeries::new(t, values).unwrap()
}

proptest! {
    #[test]
    fn integral_is_non_negative_and_zero_iff_non_increasing(v in prop::collection::vec(0.0..=1.0f64, 2..60)) {
        let n = non_markovianity_integral(&series(v.clone()));
        prop_assert!(n >= 0.0);
        let non_increasing = v.windows(2).all(|w| w[1] <= w[0]);
        prop_assert_eq!(n == 0.0, non_increasing);
    }

    #[test]
    fn revival_sum_without_threshold_is_the_integral(v in prop::collection::vec(0.0..=1.0f64, 3..60)) {
        let s = series(v);
        let rev = non_markovianity_revival_sum(&s, 0.0).unwrap().n_value;
        prop_assert!((rev - non_markovianity_integral(&s)).abs() < 1e-9);
    }

    #[test]
    fn decreasing_tail_adds_nothing(v in prop::collection::vec(0.0..=1.0f64, 3..40), drops in prop::collection::vec(0.0..0.2f64, 1..20)) {
        let base = series(v.clone());
        let mut extended = v;
        let mut last = *extended.last().unwrap();
        for d in drops {
            last = (last - d).max(0.0);
            extended.push(last);
        }
        let ext = series(extended);
        prop_assert!((non_markovianity_integral(&ext) - non_markovianity_integral(&base)).abs() < 1e-12);
        let (a, b) = (
            non_markovianity_revival_sum(&ext, 0.0).unwrap().n_value,
            non_markovianity_revival_sum(&base, 0.0).unwrap().n_value,
        );
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn model_curves_fit_exactly(a in 0.15..0.5f64, ratio in 0.8..2.5f64, delta in 1.0..4.0f64, envelope in 800.0..2500.0f64) {
        let b = (1.0 - a).min(a * ratio);
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 10.0).collect();
        let d: Vec<f64> = t.iter().map(|&t| trace_distance_model(a, b, delta, envelope, t)).collect();
        let fit = fit_trace_distance(&TraceDistanceSeries::new(t, d).unwrap()).unwrap();
        prop_assert!(fit.residual_rms < 1e-6, "{fit:?}");
    }

    #[test]
    fn dft_finds_a_pure_tone(n in 64usize..400, dt in 1.0..20.0f64, u in 0.0..1.0f64, amp in 0.1..1.0f64, phase in 0.0..2.0 * PI) {
        let nyquist = 1.0 / (2.0 * dt * 1e-3);
        let margin = 2.0 / (n as f64 * dt * 1e-3);
        let f = margin + u * (nyquist - 2.0 * margin);
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let v: Vec<f64> = t.iter().map(|&t| amp * (2.0 * PI * f * t * 1e-3 + phase).cos()).collect();
        let peak = dft_peak(&t, &v).unwrap();
        prop_assert!((peak.frequency_mhz - f).abs() <= peak.bin_width_mhz, "{} vs {f}", peak.frequency_mhz);
    }
}

#[test]
fn dft_over_random_tones() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    let t: Vec<f64> = (0..=300).map(|i| i as f64 * 5.0).collect();
    for _ in 0..50 {
        let f = rng.random_range(1.5..95.0);
        let v: Vec<f64> = t.iter().map(|&t| (2.0 * PI * f * t * 1e-3).sin()).collect();
        let peak = dft_peak(&t, &v).unwrap();
        assert!((peak.frequency_mhz - f).abs() <= peak.bin_width_mhz, "{} vs {f}", peak.frequency_mhz);
    }
}

#[test]
fn flat_input_is_flagged() {
    let t: Vec<f64> = (0..32).map(|i| i as f64).collect();
    assert!(dft_peak(&t, &[0.4; 32]).unwrap().flat);
}

#[test]
fn single_gaussian_bath_is_markovian() {
    let t: Vec<f64> = (0..=200).map(|i| i as f64 * 10.0).collect();
    let method = EnsembleMethod::Quadrature { nodes_per_mode: 64 };
    for center in [0.0, 1.3, -2.17] {
        let s = run_trace_distance_experiment(&BathSpectrum::single_mode(center, 1382.0), 5.37, &t, &method, true)
            .unwrap();
        assert!(non_markovianity_integral(&s) < 1e-6);
        assert!(non_markovianity_revival_sum(&s, 1e-3).unwrap().n_value < 1e-6);
    }
    let fields: Vec<f64> = (0..=10).map(|i| i as f64 * 5.0).collect();
    let model = PolarizationModel::default();
    let sweep = run_markov_transition(&paper_default_spectrum(), &model, &fields, 5.37, &t, &method, true, 1e-3)
        .unwrap();
    for p in sweep.iter().filter(|p| model.polarization(p.field_mt) >= 1.0 - 1e-12) {
        assert!(p.n_integral < 1e-6 && p.n_revival < 1e-6, "{p:?}");
    }
}
