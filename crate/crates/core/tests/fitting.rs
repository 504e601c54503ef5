mod support;

use ladderkit::fitting::{fit_mbvd, fit_report, initial_guess, rms_residual, FitError, FitOptions, Weighting};
use ladderkit::mbvd::{admittance_sweep, mbvd_from_spec, resonance_frequencies, MbvdError, MbvdParams, ResonatorSpec};
use ladderkit::sweep::{FrequencyGrid, FrequencySweep};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use support::*;

fn example_spec() -> ResonatorSpec {
    ResonatorSpec::new(20e9, 0.42, 50.0, 50e-15)
}

fn default_fit(sweep: &FrequencySweep) -> (MbvdParams, ladderkit::fitting::FitResult) {
    let init = initial_guess(sweep).unwrap();
    let fit = fit_mbvd(sweep, &init, &FitOptions::default()).unwrap();
    (init, fit)
}

#[test]
fn initial_guess_within_five_percent_on_clean_data() {
    let (truth, sweep) = synthetic(&example_spec());
    let g = initial_guess(&sweep).unwrap();
    assert!(max_element_error(&g, &truth) < 0.05, "{g:?}");
    assert_eq!((g.rs, g.ls), (0.0, 0.0));

    // Below Q·k2 ≈ 10 the |Y| extrema are too smeared by loss to read k2 to 5%.
    let mut r = rng(11);
    let mut tested = 0;
    while tested < 20 {
        let spec = random_spec(&mut r);
        if spec.q * spec.k2 < 10.0 {
            continue;
        }
        tested += 1;
        let (truth, sweep) = synthetic(&spec);
        let g = initial_guess(&sweep).unwrap();
        assert!(max_element_error(&g, &truth) < 0.05, "{spec:?} -> {g:?}");
    }
}

#[test]
fn capacitor_has_no_resonance() {
    let freqs = FrequencyGrid::linear(1e9, 10e9, 101).unwrap().frequencies();
    let y = freqs
        .iter()
        .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * 1e-12))
        .collect();
    let sweep = FrequencySweep::new(freqs).unwrap().with_trace("Y", y).unwrap();
    assert_eq!(
        initial_guess(&sweep).unwrap_err(),
        FitError::Resonator(MbvdError::NoResonance)
    );
}

#[test]
fn initial_guess_fs_under_one_percent_noise() {
    // Argmax wander under noise scales as 1/Q; this is the measured device.
    let spec = ResonatorSpec::new(20e9, 0.42, 80.0, 50e-15);
    let (truth, sweep) = synthetic(&spec);
    let (fs, _) = resonance_frequencies(&truth);
    let mut r = rng(7);
    let pass = (0..100)
        .filter(|_| {
            let g = initial_guess(&with_noise(&sweep, 0.01, &mut r)).unwrap();
            rel(resonance_frequencies(&g).0, fs) < 1e-3
        })
        .count();
    assert!(pass >= 95, "{pass}/100 within 0.1%");
}

#[test]
fn clean_fit_recovers_generating_values() {
    let (truth, sweep) = synthetic(&example_spec());
    let (_, fit) = default_fit(&sweep);
    assert!(fit.converged);
    assert!(max_element_error(&fit.params, &truth) < 1e-4, "{:?}", fit.params);
    assert!(fit.residual < 1e-10, "{}", fit.residual);

    let report = fit_report(&fit);
    assert!(rel(report.resonator.k2, 0.42) < 1e-3);
    assert!(rel(report.resonator.q.unwrap(), 50.0) < 1e-3);
}

#[test]
fn starting_at_truth_is_a_fixed_point() {
    let (truth, sweep) = synthetic(&example_spec());
    let fit = fit_mbvd(&sweep, &truth, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.iterations <= 2, "{}", fit.iterations);
    assert!(fit.residual < 1e-14, "{}", fit.residual);
}

#[test]
fn parasitic_fit_beats_core_fit() {
    let spec = example_spec().with_parasitics(2.0, 50e-12);
    let truth = mbvd_from_spec(&spec).unwrap();
    let sweep = fit_sweep(&spec, &truth);
    let init = initial_guess(&sweep).unwrap();
    let off = fit_mbvd(&sweep, &init, &FitOptions::default()).unwrap();
    let opts = FitOptions {
        fit_parasitics: true,
        ..FitOptions::default()
    };
    let on = fit_mbvd(&sweep, &init, &opts).unwrap();
    assert!(on.residual < off.residual, "{} vs {}", on.residual, off.residual);
    assert!(rel(on.params.rs, 2.0) < 0.1, "rs = {}", on.params.rs);
    assert!(rel(on.params.ls, 50e-12) < 0.1, "ls = {}", on.params.ls);
    assert_eq!((off.params.rs, off.params.ls), (0.0, 0.0));
}

#[test]
fn paper_device_report() {
    let (_, sweep) = synthetic(&ResonatorSpec::new(20e9, 0.42, 80.0, 50e-15));
    let (_, fit) = default_fit(&sweep);
    let report = fit_report(&fit);
    assert!(rel(report.resonator.k2, 0.42) < 1e-3, "{report:?}");
    assert!(rel(report.resonator.q.unwrap(), 80.0) < 1e-3, "{report:?}");
    assert!(!report.resonator.q_infinite);
}

#[test]
fn iteration_cap_reports_not_converged() {
    let (_, sweep) = synthetic(&example_spec());
    let init = initial_guess(&sweep).unwrap();
    let opts = FitOptions {
        max_iterations: 1,
        tolerance: 1e-300,
        ..FitOptions::default()
    };
    let fit = fit_mbvd(&sweep, &init, &opts).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.iterations, 1);
    let report = fit_report(&fit);
    assert!(!report.converged);
    let json = serde_json::to_value(report).unwrap();
    assert_eq!(json["converged"], false);
    assert!(json.get("k2").is_some() && json.get("residual_s").is_some());
}

#[test]
fn objective_history_never_increases() {
    let mut r = rng(3);
    let (_, sweep) = synthetic(&random_spec(&mut r));
    let noisy = with_noise(&sweep, 0.01, &mut r);
    let (_, fit) = default_fit(&noisy);
    assert!(fit.history.len() > 10);
    for w in fit.history.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn shuffled_input_gives_identical_fit() {
    let mut r = rng(5);
    let (_, sweep) = synthetic(&random_spec(&mut r));
    let noisy = with_noise(&sweep, 0.01, &mut r);
    let mut points: Vec<_> = noisy
        .frequencies()
        .iter()
        .zip(noisy.trace("Y").unwrap())
        .map(|(&f, &y)| (f, vec![("Y".to_string(), y)]))
        .collect();
    points.shuffle(&mut r);
    let resorted = FrequencySweep::from_unsorted(points).unwrap();
    assert_eq!(resorted, noisy);

    let (_, a) = default_fit(&noisy);
    let (_, b) = default_fit(&resorted);
    assert_eq!(a.params, b.params);
    assert_eq!(a.residual.to_bits(), b.residual.to_bits());
}

#[test]
fn clean_residual_relative_to_signal() {
    let mut r = rng(2024);
    for _ in 0..100 {
        let spec = random_spec(&mut r);
        let (truth, sweep) = synthetic(&spec);
        let (_, fit) = default_fit(&sweep);
        let y = sweep.trace("Y").unwrap();
        let rms = (y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64).sqrt();
        assert!(fit.residual < 1e-8 * rms, "{spec:?}: {} vs {rms}", fit.residual);
        let p = fit.params;
        assert!(p.c0 > 0.0 && p.rm > 0.0 && p.lm > 0.0 && p.cm > 0.0);
        assert!(max_element_error(&p, &truth) < 1e-4);
    }
}

#[test]
fn window_and_uniform_weighting() {
    let spec = example_spec();
    let (truth, sweep) = synthetic(&spec);
    let init = initial_guess(&sweep).unwrap();
    for opts in [
        FitOptions {
            window: Some((0.9 * spec.fs, 1.1 * spec.fp())),
            ..FitOptions::default()
        },
        FitOptions {
            weighting: Weighting::Uniform,
            ..FitOptions::default()
        },
    ] {
        let fit = fit_mbvd(&sweep, &init, &opts).unwrap();
        assert!(max_element_error(&fit.params, &truth) < 1e-4, "{opts:?}: {:?}", fit.params);
    }
}

#[test]
fn residual_is_rms_of_complex_error() {
    let (truth, sweep) = synthetic(&example_spec());
    assert_eq!(rms_residual(&truth, &sweep).unwrap(), 0.0);
    let shifted = admittance_sweep(&truth, sweep.frequencies().to_vec()).unwrap();
    let y: Vec<_> = shifted.trace("Y").unwrap().iter().map(|v| v + Complex64::new(3e-3, 4e-3)).collect();
    let off = FrequencySweep::new(sweep.frequencies().to_vec()).unwrap().with_trace("Y", y).unwrap();
    assert!((rms_residual(&truth, &off).unwrap() - 5e-3).abs() < 1e-15);
}

#[test]
fn invalid_options_rejected() {
    let (truth, sweep) = synthetic(&example_spec());
    for opts in [
        FitOptions {
            max_iterations: 0,
            ..FitOptions::default()
        },
        FitOptions {
            tolerance: 0.0,
            ..FitOptions::default()
        },
        FitOptions {
            window: Some((2e10, 1e10)),
            ..FitOptions::default()
        },
    ] {
        assert!(matches!(fit_mbvd(&sweep, &truth, &opts), Err(FitError::InvalidOptions(_))));
    }
}

#[test]
fn unsupported_parasitics_stay_positive() {
    let (truth, sweep) = synthetic(&example_spec());
    let init = initial_guess(&sweep).unwrap();
    let opts = FitOptions {
        fit_parasitics: true,
        ..FitOptions::default()
    };
    let fit = fit_mbvd(&sweep, &init, &opts).unwrap();
    assert!(fit.params.rs > 0.0 && fit.params.ls > 0.0, "{:?}", fit.params);
    assert!(max_element_error(&fit.params, &truth) < 1e-3, "{:?}", fit.params);
}
