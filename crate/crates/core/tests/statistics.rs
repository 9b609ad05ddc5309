use dce_core::model::{DerivedParams, Mode, ModelParams};
use dce_core::observables::{
    asymptotic_chi, closed_form_observables, iup_closed, mean_quanta_closed, propagate_covariance,
    vacuum_moments, CovarianceMatrix,
};
use dce_core::photonstats::{erf, legendre_argument, pdf, pdf_auto, pdf_universal_approx};
use dce_core::pipeline::{closed_observables, numeric_kappa, numeric_observables};
use dce_core::symplectic::{evolve_lambda, invert_lambda, IntegratorConfig};

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn worst_mode_error(beta: f64, kappa: f64, taus: &[f64]) -> f64 {
    let p = ModelParams::from_beta(beta, kappa).unwrap();
    let numeric = numeric_observables(&p, taus, IntegratorConfig::for_params(&p).dt).unwrap();
    let closed = closed_observables(&p.derive().unwrap(), taus).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in numeric.iter().zip(&closed) {
        for m in 0..2 {
            let (x, y) = (&a.modes[m], &b.modes[m]);
            // Fast corrections are O(ε) in absolute terms; skip points with few quanta.
            if y.n_mean < 1.0 {
                continue;
            }
            worst = worst.max(rel(x.n_mean, y.n_mean)).max(rel(x.iup, y.iup));
        }
    }
    worst
}

#[test]
fn closed_forms_track_numeric_solution() {
    let taus = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    for beta in [0.2, 0.5, 1.0, 2.0] {
        let err = worst_mode_error(beta, 6.25e-4, &taus);
        assert!(err < 0.01, "beta {beta}: {err}");
    }
    let err = worst_mode_error(10.0, 1.25e-4, &[0.2, 0.35, 0.5]);
    assert!(err < 0.01, "beta 10: {err}");
}

#[test]
fn closed_form_error_is_first_order_in_epsilon() {
    let taus = [1.0, 2.0, 3.0];
    let coarse = worst_mode_error(2.0, 2.5e-3, &taus);
    let fine = worst_mode_error(2.0, 6.25e-4, &taus);
    let ratio = coarse / fine;
    assert!((2.5..6.0).contains(&ratio), "{coarse} / {fine} = {ratio}");
}

#[test]
fn z_of_field_matches_numeric() {
    let p = ModelParams::from_beta(1.0, numeric_kappa(1.0)).unwrap();
    let numeric = numeric_observables(&p, &[2.0], IntegratorConfig::for_params(&p).dt).unwrap();
    let closed = closed_form_observables(2.0, &p.derive().unwrap(), Mode::Field).unwrap();
    assert!(rel(numeric[0].modes[0].z, closed.z) < 0.01);
}

#[test]
fn variance_approaches_twice_mean_squared() {
    for beta in [0.2, 1.0, 3.0] {
        let d = DerivedParams::for_beta(beta).unwrap();
        for i in 1..=80 {
            let tau = 0.1 * i as f64;
            for m in Mode::BOTH {
                let o = closed_form_observables(tau, &d, m).unwrap();
                if o.n_mean >= 50.0 {
                    let r = o.sigma_n / (2.0 * o.n_mean * o.n_mean);
                    assert!((0.9..=1.1).contains(&r), "beta {beta} tau {tau} {m:?}: {r}");
                }
            }
        }
    }
}

#[test]
fn growth_is_monotone_at_resonant_coupling() {
    let d = DerivedParams::for_beta(1.0).unwrap();
    for m in Mode::BOTH {
        let mut last = 0.0;
        for i in 1..=400 {
            let n = mean_quanta_closed(0.01 * i as f64, &d, m).unwrap();
            assert!(n > last, "{m:?} at step {i}");
            last = n;
        }
    }
}

#[test]
fn universal_approximation_near_mean() {
    let d = DerivedParams::for_beta(1.0).unwrap();
    let n = mean_quanta_closed(2.0, &d, Mode::Detector).unwrap();
    assert!((n - 38.7).abs() < 0.2);
    let exact = pdf(n, iup_closed(2.0, &d), 40).unwrap().get(38);
    let approx = pdf_universal_approx(n, 38.0);
    assert!(rel(approx, exact) < 0.1, "{approx} vs {exact}");
}

/// `∫ f(k) dk` over `k ≥ k0` with `k = (v² − 1)/2`, which removes the
/// `1/√(2k+1)` singularity at `k = −½`.
fn integrate_universal(n: f64, k0: f64) -> f64 {
    let v0 = (2.0 * k0 + 1.0).sqrt();
    let v1 = 40.0 * n.sqrt();
    let steps = 200_000;
    let h = (v1 - v0) / steps as f64;
    (0..steps)
        .map(|i| {
            let v = v0 + h * (i as f64 + 0.5);
            pdf_universal_approx(n, (v * v - 1.0) / 2.0) * v
        })
        .sum::<f64>()
        * h
}

#[test]
fn universal_approximation_normalised() {
    let n = 50.0;
    let from_half = integrate_universal(n, -0.5);
    assert!((from_half - 1.0).abs() < 1e-3, "{from_half}");
    // Starting at k = 0 drops erf(1/(2√n̄)) of the mass.
    let from_zero = integrate_universal(n, 0.0);
    let expect = 1.0 - erf(0.5 / n.sqrt());
    assert!((from_zero - expect).abs() < 1e-6, "{from_zero} vs {expect}");
}

#[test]
fn legendre_argument_limits() {
    // Field mode: imaginary and of order 1/(4β²), approached as β grows.
    for beta in [2.0, 3.0, 5.0, 10.0] {
        let d = DerivedParams::for_beta(beta).unwrap();
        for i in 0..=100 {
            let tau = d.tau_for_tau_mu(6.0 + 0.14 * i as f64);
            let n = mean_quanta_closed(tau, &d, Mode::Field).unwrap();
            let arg = legendre_argument(n, iup_closed(tau, &d));
            let scaled = arg.magnitude * 4.0 * beta * beta;
            assert!(arg.imaginary, "beta {beta} tau {tau}");
            let band = if beta >= 10.0 { 0.05 } else { 0.35 };
            assert!((scaled - 1.0).abs() < band, "beta {beta} tau {tau}: {scaled}");
        }
    }
    // Detector mode: no small limit; the magnitude stays above 1 for β ≫ 1.
    for beta in [3.0, 5.0, 10.0] {
        let d = DerivedParams::for_beta(beta).unwrap();
        for i in 0..=100 {
            let tau = d.tau_for_tau_mu(10.0 + 0.1 * i as f64);
            let n = mean_quanta_closed(tau, &d, Mode::Detector).unwrap();
            let arg = legendre_argument(n, iup_closed(tau, &d));
            assert!(arg.magnitude > 1.0, "beta {beta} tau {tau}: {arg:?}");
        }
    }
}

#[test]
fn ratio_of_first_probabilities_is_bounded() {
    let d = DerivedParams::for_beta(0.5).unwrap();
    for i in 1..=40 {
        let tau = 0.1 * i as f64;
        for m in Mode::BOTH {
            let n = mean_quanta_closed(tau, &d, m).unwrap();
            let iup = iup_closed(tau, &d);
            let dist = pdf(n, iup, 2).unwrap();
            let arg = legendre_argument(n, iup);
            assert!(dist.get(1) / dist.get(0) <= arg.magnitude * (1.0 + 1e-12));
        }
    }
}

#[test]
fn thermal_input_is_geometric() {
    for n in [0.3, 2.0, 40.0] {
        let dist = pdf_auto(n, (n + 0.5) * (n + 0.5)).unwrap();
        let q = n / (n + 1.0);
        for k in 0..200 {
            let expect = q.powi(k as i32) / (n + 1.0);
            assert!((dist.get(k) - expect).abs() < 1e-12 + 1e-9 * expect, "n {n} k {k}");
            assert!(dist.get(k + 1) <= dist.get(k));
        }
    }
}

#[test]
fn long_time_squeezing_coefficient() {
    for beta in [0.5, 1.0, 2.0] {
        let d = DerivedParams::for_beta(beta).unwrap();
        let tau = d.tau_for_tau_mu(15.0);
        for m in Mode::BOTH {
            let exact = iup_closed(tau, &d) / mean_quanta_closed(tau, &d, m).unwrap();
            let asym = asymptotic_chi(d.tau_nu(tau), &d, m);
            assert!(rel(asym, exact) < 1e-3, "beta {beta} {m:?}: {asym} vs {exact}");
        }
    }
}

#[test]
fn covariance_propagation_agrees_with_minors() {
    let p = ModelParams::from_beta(1.0, 0.005).unwrap();
    let traj = evolve_lambda(&p, p.fast_time(1.0), IntegratorConfig::for_params(&p).dt).unwrap();
    let lam = traj.last();
    let cov = propagate_covariance(&invert_lambda(lam), &CovarianceMatrix::vacuum());
    for m in Mode::BOTH {
        let (n, iup) = vacuum_moments(lam, m).unwrap();
        assert!(rel(cov.mean_quanta(m).unwrap(), n) < 1e-9);
        assert!(rel(cov.iup(m), iup) < 1e-9);
    }
    assert!(cov.min_eigenvalue() > 0.0);
}
