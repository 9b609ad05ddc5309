//! Photon-number distribution of a zero-mean single-mode Gaussian state.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fmt::num;
use crate::error::{Error, Result};
use crate::observables::{photon_variance, MOMENT_SLACK};

/// Largest cutoff picked automatically.
pub const MAX_DEFAULT_CUTOFF: usize = 10_000_000;
/// Tail mass above which a cutoff is reported as too small.
pub const TAIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    pub probabilities: Vec<f64>,
    pub k_max: usize,
    /// `1 − Σ P(k)` over `0..=k_max`.
    pub tail_mass: f64,
    pub n_mean: f64,
    pub iup: f64,
}

impl PhotonDistribution {
    pub fn get(&self, k: usize) -> f64 {
        self.probabilities.get(k).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `Σ k P(k)`.
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// `Σ k² P(k) − (Σ k P(k))²`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// `Y± = 1 + 4D ± 2(1 + 2n̄)`.
pub fn y_pm(n: f64, d: f64) -> (f64, f64) {
    let a = 1.0 + 4.0 * d;
    let b = 2.0 * (1.0 + 2.0 * n);
    (a + b, a - b)
}

/// Cutoff used when none is given: the tail of a strongly squeezed state
/// decays like `exp(−k/2n̄)`, so `60(n̄ + 1)` leaves well under 1e-9.
pub fn default_cutoff(n: f64) -> usize {
    let k = (60.0 * (n + 1.0)).ceil();
    if k >= MAX_DEFAULT_CUTOFF as f64 {
        MAX_DEFAULT_CUTOFF
    } else {
        k as usize
    }
}

fn check_pair(n: f64, d: f64) -> Result<()> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::NegativeMeanQuanta(n));
    }
    if !(d >= 0.25 - MOMENT_SLACK) {
        return Err(Error::InvalidUncertainty(d));
    }
    photon_variance(n, d).map(|_| ())
}

/// `P(0..=k_max)` for mean quanta `n` and uncertainty product `d`.
///
/// With `Q_k = (Y₋/Y₊)^{k/2} P_k(x)`, `x = (4D − 1)/√(Y₊Y₋)`, the Legendre
/// recurrence becomes `(k+1) Q_{k+1} = (2k+1) a Q_k − k b Q_{k−1}` with
/// `a = (4D − 1)/Y₊`, `b = Y₋/Y₊`, and `P(k) = 2 Q_k / √Y₊`. Everything stays
/// real and bounded, also for `Y₋ ≤ 0`.
pub fn pdf(n: f64, d: f64, k_max: usize) -> Result<PhotonDistribution> {
    check_pair(n, d)?;
    let d = d.max(0.25);
    let (yp, ym) = y_pm(n, d);
    let a = (4.0 * d - 1.0) / yp;
    let b = if ym.abs() < 1e-13 { 0.0 } else { ym / yp };
    let scale = 2.0 / yp.sqrt();

    let mut probabilities = Vec::with_capacity(k_max + 1);
    let (mut q_prev, mut q) = (0.0, 1.0);
    for k in 0..=k_max {
        let p = scale * q;
        if p < -1e-12 {
            log::warn!("P({k}) = {p:e} is negative beyond round-off");
        }
        probabilities.push(p.max(0.0));
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * a * q - kf * b * q_prev) / (kf + 1.0);
        q_prev = q;
        q = next;
    }
    let tail_mass = 1.0 - probabilities.iter().sum::<f64>();
    if tail_mass > TAIL_TOLERANCE {
        log::warn!("cutoff k_max = {k_max} leaves tail mass {tail_mass:e}");
    }
    Ok(PhotonDistribution {
        probabilities,
        k_max,
        tail_mass,
        n_mean: n,
        iup: d,
    })
}

/// [`pdf`] with [`default_cutoff`].
pub fn pdf_auto(n: f64, d: f64) -> Result<PhotonDistribution> {
    pdf(n, d, default_cutoff(n))
}

/// Magnitude of the nominal Legendre argument `(4D − 1)/√(Y₊Y₋)`, imaginary
/// when `Y₋ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreArgument {
    pub magnitude: f64,
    pub imaginary: bool,
}

pub fn legendre_argument(n: f64, d: f64) -> LegendreArgument {
    let (yp, ym) = y_pm(n, d);
    LegendreArgument {
        magnitude: (4.0 * d - 1.0) / (yp * ym.abs()).sqrt(),
        imaginary: ym < 0.0,
    }
}

/// Large-`n̄` form `exp[−(2k+1)/4n̄] / √(π n̄ (2k+1))`, meant for `1 ≪ k ~ n̄`.
pub fn pdf_universal_approx(n: f64, k: f64) -> f64 {
    if n < 1.0 {
        log::warn!("universal approximation used at n = {n} < 1");
    }
    let s = 2.0 * k + 1.0;
    (-s / (4.0 * n)).exp() / (std::f64::consts::PI * n * s).sqrt()
}

/// `Σ P(k)` over integers `k < n̄`.
pub fn prob_below_mean(dist: &PhotonDistribution, n: f64) -> f64 {
    let below = if n <= 0.0 { 0 } else { n.ceil() as usize };
    dist.probabilities.iter().take(below).sum()
}

pub fn erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

/// Two distributions side by side as `k,P1,P2`.
pub fn write_pdf_csv<W: Write>(
    mut w: W,
    field: &PhotonDistribution,
    detector: &PhotonDistribution,
    metadata: &[(&str, String)],
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "k,P1,P2")?;
    for k in 0..=field.k_max.max(detector.k_max) {
        writeln!(w, "{k},{},{}", num(field.get(k)), num(detector.get(k)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum() {
        let p = pdf(0.0, 0.25, 5).unwrap();
        assert_eq!(p.probabilities, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.tail_mass, 0.0);
    }

    #[test]
    fn thermal_is_geometric() {
        let p = pdf(2.0, 6.25, 60).unwrap();
        for k in 0..=60 {
            let exact = 2f64.powi(k as i32) / 3f64.powi(k as i32 + 1);
            assert!((p.get(k) - exact).abs() < 1e-12, "k = {k}");
        }
        assert!((prob_below_mean(&p, 2.0) - 5.0 / 9.0).abs() < 1e-15);
        let arg = legendre_argument(2.0, 6.25);
        assert!((arg.magnitude - 1.0).abs() < 1e-12 && !arg.imaginary);
    }

    #[test]
    fn squeezed_vacuum() {
        let p = pdf(1.0, 0.25, 40).unwrap();
        assert!((p.get(0) - 0.5f64.sqrt()).abs() < 1e-12);
        for k in (1..40).step_by(2) {
            assert!(p.get(k).abs() < 1e-12);
        }
        // P(2) = P(0) tanh²(r) / 2 with sinh²r = 1.
        assert!((p.get(2) - p.get(0) * 0.25).abs() < 1e-12);
        assert_eq!(legendre_argument(1.0, 0.25).magnitude, 0.0);
    }

    #[test]
    fn rejects_inconsistent_pair() {
        assert!(pdf(1.0, 3.0, 10).is_err());
        assert!(pdf(1.0, 0.1, 10).is_err());
    }

    #[test]
    fn default_cutoff_values() {
        assert_eq!(default_cutoff(0.0), 60);
        assert_eq!(default_cutoff(1e9), MAX_DEFAULT_CUTOFF);
    }

    #[test]
    fn erf_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(0.5f64.sqrt()) - 0.682_689_492_137).abs() < 1e-10);
        assert_eq!(erf(-1.3), -erf(1.3));
    }

    #[test]
    fn universal_tail_decays() {
        let ratio = pdf_universal_approx(100.0, 1000.0) / pdf_universal_approx(100.0, 100.0);
        let expected = (-4.5f64).exp() * (201.0f64 / 2001.0).sqrt();
        assert!((ratio - expected).abs() < 1e-15);
        assert!(ratio < 4e-3);
    }

    #[test]
    fn csv_layout() {
        let a = pdf(0.0, 0.25, 1).unwrap();
        let b = pdf(2.0, 6.25, 2).unwrap();
        let mut out = Vec::new();
        write_pdf_csv(&mut out, &a, &b, &[("beta", "1".into())]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# beta=1");
        assert_eq!(lines[1], "k,P1,P2");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("2,0,"));
    }
}
