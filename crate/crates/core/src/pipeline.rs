//! Observables along a slow-time grid from either the integrated ODE or the
//! closed forms, and the envelope comparison between analytic and numeric `Λ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fmt::num;
use crate::error::{Error, Result};
use crate::model::{DerivedParams, ModelParams};
use crate::multiscale::{analytic_lambda_with, CoefficientSet};
use crate::observables::{closed_form_observables, observables_from_lambda, ModeObservables};
use crate::symplectic::{evolve_to_times, IntegratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// RK4 integration of `Λ`.
    Numeric,
    /// Closed-form slow-time expressions.
    #[default]
    Analytic,
    Both,
}

impl std::str::FromStr for Pipeline {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "numeric" => Ok(Pipeline::Numeric),
            "analytic" => Ok(Pipeline::Analytic),
            "both" => Ok(Pipeline::Both),
            other => Err(format!("unknown pipeline `{other}` (numeric, analytic, both)")),
        }
    }
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Numeric => "numeric",
            Pipeline::Analytic => "analytic",
            Pipeline::Both => "both",
        }
    }
}

/// Coupling used when only `β` is given and the ODE has to be integrated:
/// keeps `γ = 2βκ <= 0.02`.
pub fn numeric_kappa(beta: f64) -> f64 {
    0.01 / (2.0 * beta.abs()).max(1.0)
}

/// Evenly spaced grid with `count >= 2` points on `[start, stop]`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(stop > start) || start < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "need count >= 2 and stop > start >= 0, got [{start}, {stop}] x {count}"
        )));
    }
    let h = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start + i as f64 * h })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub tau: f64,
    pub modes: [ModeObservables; 2],
}

/// Both modes from the integrated `Λ` at `t = τ/κ`.
pub fn numeric_observables(p: &ModelParams, taus: &[f64], dt: f64) -> Result<Vec<ObservableRow>> {
    IntegratorConfig { dt, stride: 1 }.validate(p)?;
    let times: Vec<f64> = taus.iter().map(|&tau| p.fast_time(tau)).collect();
    let lams = evolve_to_times(p, &times, dt)?;
    taus.iter()
        .zip(&lams)
        .map(|(&tau, lam)| {
            Ok(ObservableRow {
                tau,
                modes: observables_from_lambda(lam)?,
            })
        })
        .collect()
}

/// Both modes from the closed forms.
pub fn closed_observables(d: &DerivedParams, taus: &[f64]) -> Result<Vec<ObservableRow>> {
    taus.iter()
        .map(|&tau| {
            Ok(ObservableRow {
                tau,
                modes: [
                    closed_form_observables(tau, d, crate::model::Mode::Field)?,
                    closed_form_observables(tau, d, crate::model::Mode::Detector)?,
                ],
            })
        })
        .collect()
}

pub const OBSERVABLES_HEADER: &str = "tau,mode,n_mean,sigma_n,D,purity,Z,chi";

pub fn write_observables_csv<W: Write>(
    mut w: W,
    rows: &[ObservableRow],
    metadata: &[(&str, String)],
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{OBSERVABLES_HEADER}")?;
    for row in rows {
        for o in &row.modes {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                num(row.tau),
                o.mode.index(),
                num(o.n_mean),
                num(o.sigma_n),
                num(o.iup),
                num(o.purity),
                num(o.z),
                num(o.chi)
            )?;
        }
    }
    Ok(())
}

/// Amplitude of the component oscillating at `omega`, fitted by least squares
/// to `a cos ωt + b sin ωt` over sliding windows of `window` samples, advanced
/// by a quarter window. Returns `(window centre, √(a² + b²))`.
pub fn fit_envelope(times: &[f64], values: &[f64], omega: f64, window: usize) -> Vec<(f64, f64)> {
    let step = (window / 4).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start + window < times.len() {
        let (mut cc, mut cs, mut ss, mut yc, mut ys, mut tsum) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in start..start + window {
            let (s, c) = (omega * times[i]).sin_cos();
            cc += c * c;
            cs += c * s;
            ss += s * s;
            yc += values[i] * c;
            ys += values[i] * s;
            tsum += times[i];
        }
        let det = cc * ss - cs * cs;
        let a = (yc * ss - ys * cs) / det;
        let b = (ys * cc - yc * cs) / det;
        out.push((tsum / window as f64, a.hypot(b)));
        start += step;
    }
    out
}

/// Samples per fast period used for envelope fits.
pub const ENVELOPE_SAMPLES_PER_PERIOD: usize = 40;

/// Numeric and analytic `λ₁⁽¹¹⁾` on a shared grid, and their fitted envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeComparison {
    pub times: Vec<f64>,
    pub numeric: Vec<f64>,
    pub analytic: Vec<f64>,
    /// `(τ, numeric envelope, analytic envelope)`.
    pub envelopes: Vec<(f64, f64, f64)>,
}

impl EnvelopeComparison {
    /// Largest relative envelope difference over window centres with `τ <= tau_max`.
    pub fn max_relative_error(&self, tau_max: f64) -> f64 {
        self.envelopes
            .iter()
            .filter(|(tau, _, _)| *tau <= tau_max)
            .map(|(_, n, a)| (n - a).abs() / a.abs())
            .fold(0.0, f64::max)
    }

    /// First window centre where the relative difference exceeds `tol`.
    pub fn first_exceeding(&self, tol: f64) -> Option<f64> {
        self.envelopes
            .iter()
            .find(|(_, n, a)| (n - a).abs() / a.abs() > tol)
            .map(|(tau, _, _)| *tau)
    }
}

/// Compares the integrated `λ₁⁽¹¹⁾` with the multiple-scales one up to `tau_max`.
pub fn compare_envelopes(
    p: &ModelParams,
    coeffs: &CoefficientSet,
    tau_max: f64,
    dt: f64,
) -> Result<EnvelopeComparison> {
    let d = p.derive()?;
    let h = p.fast_period() / ENVELOPE_SAMPLES_PER_PERIOD as f64;
    let t_max = p.fast_time(tau_max);
    let count = (t_max / h).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|i| i as f64 * h).collect();
    let lams = evolve_to_times(p, &times, dt)?;
    let numeric: Vec<f64> = lams.iter().map(|l| l.matrix[(0, 0)]).collect();
    let analytic: Vec<f64> = times
        .iter()
        .map(|&t| analytic_lambda_with(t, p, &d, coeffs).matrix[(0, 0)])
        .collect();
    let omega = p.omega_minus();
    let en = fit_envelope(&times, &numeric, omega, ENVELOPE_SAMPLES_PER_PERIOD);
    let ea = fit_envelope(&times, &analytic, omega, ENVELOPE_SAMPLES_PER_PERIOD);
    let envelopes = en
        .iter()
        .zip(&ea)
        .map(|(&(t, n), &(_, a))| (p.slow_time(t), n, a))
        .collect();
    Ok(EnvelopeComparison {
        times,
        numeric,
        analytic,
        envelopes,
    })
}
