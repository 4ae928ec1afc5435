use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinbath::bath::{
    coherence_function, polarize_spectrum, quadrature_nodes, sample_detuning, BathSpectrum, Mode, PolarizationModel,
};
use spinbath::paper_default_spectrum;

prop_compose! {
    fn spectrum()(raw in prop::collection::vec((0.01..1.0f64, -5.0..5.0f64, 0.0..0.5f64), 1..5)) -> BathSpectrum {
        BathSpectrum::new(raw.into_iter().map(|(w, c, s)| Mode::new(w, c, s)).collect()).unwrap()
    }
}

/// The analytic form evaluated at any real t, negative included.
fn analytic(s: &BathSpectrum, t_ns: f64) -> Complex64 {
    let t = t_ns * 1e-3;
    s.modes()
        .iter()
        .map(|m| {
            let env = (-(2.0 * PI * m.sigma_mhz * t).powi(2) / 2.0).exp();
            Complex64::from_polar(m.weight * env, 2.0 * PI * m.center_mhz * t)
        })
        .sum()
}

fn grid_2us() -> Vec<f64> {
    (0..=200).map(|i| i as f64 * 10.0).collect()
}

proptest! {
    #[test]
    fn coherence_is_bounded(s in spectrum(), t in 0.0..5000.0f64) {
        prop_assert!(coherence_function(&s, t).norm() <= 1.0 + 1e-12);
        prop_assert!((coherence_function(&s, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn coherence_is_hermitian_in_time(s in spectrum(), t in 0.0..5000.0f64) {
        prop_assert!((analytic(&s, -t) - analytic(&s, t).conj()).norm() < 1e-12);
        prop_assert!((analytic(&s, t) - coherence_function(&s, t)).norm() < 1e-12);
    }

    #[test]
    fn symmetric_spectra_have_real_coherence(
        half in prop::collection::vec((0.01..1.0f64, 0.1..5.0f64, 0.0..0.5f64), 1..3),
        center in prop::option::of(0.01..1.0f64),
        t in 0.0..5000.0f64,
    ) {
        let mut modes = Vec::new();
        for &(w, c, s) in &half {
            modes.push(Mode::new(w, c, s));
            modes.push(Mode::new(w, -c, s));
        }
        if let Some(w) = center {
            modes.push(Mode::new(w, 0.0, 0.2));
        }
        let s = BathSpectrum::new(modes).unwrap();
        prop_assert!(coherence_function(&s, t).im.abs() < 1e-12);
    }

    #[test]
    fn polarization_keeps_a_probability_distribution(s in spectrum(), b in 0.0..100.0f64, bsat in 1.0..80.0f64, k in 0.2..3.0f64) {
        let model = PolarizationModel::new(bsat, k).unwrap();
        let p = polarize_spectrum(&s, b, &model).unwrap();
        let total: f64 = p.modes().iter().map(|m| m.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.modes().iter().all(|m| m.weight >= 0.0));
    }

    #[test]
    fn single_gaussian_decays_monotonically(center in -5.0..5.0f64, envelope in 200.0..5000.0f64) {
        let s = BathSpectrum::single_mode(center, envelope);
        let w: Vec<f64> = (0..=400).map(|i| coherence_function(&s, i as f64 * 10.0).norm()).collect();
        for pair in w.windows(2) {
            prop_assert!(pair[1] < pair[0] || pair[0] == 0.0, "{pair:?}");
        }
    }
}

#[test]
fn quadrature_matches_analytic_coherence() {
    let s = paper_default_spectrum();
    let nodes = quadrature_nodes(&s, 32).unwrap();
    let worst = grid_2us()
        .into_iter()
        .map(|t| {
            let q: Complex64 =
                nodes.iter().map(|(d, w)| Complex64::from_polar(*w, 2.0 * PI * d.mhz() * t * 1e-3)).sum();
            (q - coherence_function(&s, t)).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn monte_carlo_matches_analytic_coherence() {
    let s = paper_default_spectrum();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples: Vec<f64> = (0..100_000).map(|_| sample_detuning(&s, &mut rng).mhz()).collect();
    let n = samples.len() as f64;
    let worst = grid_2us()
        .into_iter()
        .map(|t| {
            let mc: Complex64 =
                samples.iter().map(|d| Complex64::from_polar(1.0 / n, 2.0 * PI * d * t * 1e-3)).sum();
            (mc - coherence_function(&s, t)).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst < 0.01, "{worst}");
}
