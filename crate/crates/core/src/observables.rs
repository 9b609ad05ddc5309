//! Second moments and photon statistics of the two-mode Gaussian state that
//! evolves from the vacuum.
//!
//! Two routes are provided and kept independent: the covariance matrix built
//! from an evolution matrix (numeric or analytic), and the closed-form slow-time
//! expressions in `(β, τ)`.

use std::f64::consts::SQRT_2;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DerivedParams, Mode};
use crate::symplectic::{invert_lambda, EvolutionMatrix, Mat4};

/// Negative mean quanta above this are treated as round-off and clamped.
pub const MEAN_QUANTA_SLACK: f64 = 1e-10;
/// Tolerance on `¼ <= D <= (n + ½)²`.
pub const MOMENT_SLACK: f64 = 1e-9;
/// Below this value of `τ·max(1, μ)` the small-τ series replaces the closed
/// form for Z. The series carries `β²τ⁴` terms, so the switch must shrink
/// with `μ ≈ 2β` at large `β`.
pub const Z_SERIES_CROSSOVER: f64 = 0.05;

pub fn clamp_mean_quanta(n: f64) -> Result<f64> {
    if n >= 0.0 {
        Ok(n)
    } else if n >= -MEAN_QUANTA_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeMeanQuanta(n))
    }
}

/// Symmetrized second central moments over `(p1, p2, x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Mat4,
}

impl CovarianceMatrix {
    /// Both modes in the ground state: `½ I₄`.
    pub fn vacuum() -> Self {
        CovarianceMatrix {
            matrix: Mat4::identity() * 0.5,
        }
    }

    /// `M(t) = L M(0) Lᵀ`.
    pub fn propagate(&self, l: &EvolutionMatrix) -> Self {
        let m = l.matrix * self.matrix * l.matrix.transpose();
        CovarianceMatrix {
            matrix: (m + m.transpose()) * 0.5,
        }
    }

    pub fn mean_quanta(&self, m: Mode) -> Result<f64> {
        let (p, x) = (m.p_row(), m.x_row());
        clamp_mean_quanta(0.5 * (self.matrix[(p, p)] + self.matrix[(x, x)]) - 0.5)
    }

    /// Determinant of the mode's 2×2 block.
    pub fn iup(&self, m: Mode) -> f64 {
        let (p, x) = (m.p_row(), m.x_row());
        self.matrix[(p, p)] * self.matrix[(x, x)] - self.matrix[(p, x)] * self.matrix[(x, p)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `(D − ¼)` from a covariance entry triple, evaluated without cancellation
/// for vacuum input: for rows `a`, `b` of `L` the block determinant is
/// `¼ Σ_{i<j} (a_i b_j − a_j b_i)²` (Cauchy–Binet), and the lower bound `¼`
/// is the contribution of the symplectic pairing.
fn vacuum_block_moments(l: &Mat4, m: Mode) -> (f64, f64) {
    let a = l.row(m.p_row());
    let b = l.row(m.x_row());
    let trace = 0.5 * (a.norm_squared() + b.norm_squared());
    let mut det = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let minor = a[i] * b[j] - a[j] * b[i];
            det += minor * minor;
        }
    }
    (0.5 * trace - 0.5, 0.25 * det)
}

/// `(n̄, D)` of mode `m` for vacuum input, straight from `Λ`.
pub fn vacuum_moments(lam: &EvolutionMatrix, m: Mode) -> Result<(f64, f64)> {
    let l = invert_lambda(lam);
    let (n, d) = vacuum_block_moments(&l.matrix, m);
    Ok((clamp_mean_quanta(n)?, d))
}

/// Statistics of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeObservables {
    pub mode: Mode,
    pub n_mean: f64,
    pub sigma_n: f64,
    /// Invariant uncertainty product `D`.
    pub iup: f64,
    pub purity: f64,
    /// `σₙ / [n̄(n̄ + 1)]`; NaN when `n̄ = 0`.
    pub z: f64,
    /// Invariant squeezing coefficient.
    pub chi: f64,
    /// Mandel parameter `(σₙ − n̄)/n̄`. Unbounded here, so `z` is preferred.
    pub mandel_q: f64,
}

impl ModeObservables {
    pub fn from_moments(mode: Mode, n_mean: f64, iup: f64) -> Result<Self> {
        let n_mean = clamp_mean_quanta(n_mean)?;
        let iup = check_iup(n_mean, iup)?;
        let sigma_n = photon_variance(n_mean, iup)?;
        let denom = n_mean * (n_mean + 1.0);
        let z = if denom > 0.0 {
            2.0 - (iup - 0.25) / denom
        } else {
            f64::NAN
        };
        Ok(ModeObservables {
            mode,
            n_mean,
            sigma_n,
            iup,
            purity: purity(iup),
            z,
            chi: squeezing_coefficient(n_mean, iup)?,
            mandel_q: mandel_q(n_mean, sigma_n),
        })
    }

    /// Same as [`ModeObservables::from_moments`] with `z` replaced by a value
    /// computed elsewhere (the small-τ series).
    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }
}

fn check_iup(n: f64, d: f64) -> Result<f64> {
    if !(d >= 0.25 - MOMENT_SLACK) {
        return Err(Error::InvalidUncertainty(d));
    }
    let upper = (n + 0.5) * (n + 0.5);
    if d > upper + MOMENT_SLACK + 1e-12 * upper {
        return Err(Error::InconsistentMoments { n_mean: n, iup: d });
    }
    Ok(d.max(0.25))
}

/// Observables of both modes for vacuum input evolved by `Λ`.
pub fn observables_from_lambda(lam: &EvolutionMatrix) -> Result<[ModeObservables; 2]> {
    let field = vacuum_moments(lam, Mode::Field)?;
    let det = vacuum_moments(lam, Mode::Detector)?;
    Ok([
        ModeObservables::from_moments(Mode::Field, field.0, field.1)?,
        ModeObservables::from_moments(Mode::Detector, det.0, det.1)?,
    ])
}

pub fn propagate_covariance(l: &EvolutionMatrix, m0: &CovarianceMatrix) -> CovarianceMatrix {
    m0.propagate(l)
}

/// Slow functions of `τ`, with `C_μ C_ν − 1` evaluated without cancellation.
struct Slow {
    s_mu: f64,
    c_mu: f64,
    s_nu: f64,
    c_nu: f64,
    cc_minus_one: f64,
}

impl Slow {
    fn new(tau: f64, d: &DerivedParams) -> Self {
        let (x, y) = (d.tau_mu(tau), d.tau_nu(tau));
        let (s_nu, c_nu) = y.sin_cos();
        let half_sinh = (0.5 * x).sinh();
        let half_sin = (0.5 * y).sin();
        Slow {
            s_mu: x.sinh(),
            c_mu: x.cosh(),
            s_nu,
            c_nu,
            cc_minus_one: 2.0 * half_sinh * half_sinh * c_nu - 2.0 * half_sin * half_sin,
        }
    }
}

/// `η − 1`, accurate for small `β`.
fn eta_minus_one(d: &DerivedParams) -> f64 {
    let b2 = d.beta * d.beta;
    b2 * (b2 - 1.0) / (d.eta + 1.0)
}

/// Closed-form mean quanta of mode `m` at slow time `tau`.
pub fn mean_quanta_closed(tau: f64, d: &DerivedParams, m: Mode) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::InvalidGrid(format!("slow time must be >= 0, got {tau}")));
    }
    let s = Slow::new(tau, d);
    let (b, e, u) = (d.beta, d.eta, m.sign());
    let b2 = b * b;
    let growing = e + 1.0 + (1.0 + u) * b2 * (e + b2);
    let oscillating = eta_minus_one(d) + (1.0 + u) * b2 * (e - b2);
    let n = (growing * s.s_mu * s.s_mu + oscillating * s.s_nu * s.s_nu
        - 2.0 * b2 * s.cc_minus_one
        + 2.0 * b * u * s.s_mu * s.s_nu)
        / (4.0 * e * e);
    clamp_mean_quanta(n)
}

/// Asymptotic regimes with their simplified mean-quanta formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `β ≪ 1`: modes share quanta up to O(β) beats.
    BetaSmall,
    /// `β = 1`.
    BetaOne,
    /// `β ≫ 1`: the field behaves as without detector, the detector lags by `1/4β²`.
    BetaLarge,
    /// `τ → 0`.
    TauSmall,
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "beta-small" | "beta_small" => Ok(Regime::BetaSmall),
            "beta-one" | "beta_one" => Ok(Regime::BetaOne),
            "beta-large" | "beta_large" => Ok(Regime::BetaLarge),
            "tau-small" | "tau_small" => Ok(Regime::TauSmall),
            other => Err(format!("unknown regime `{other}`")),
        }
    }
}

pub fn mean_quanta_limit(tau: f64, d: &DerivedParams, m: Mode, regime: Regime) -> f64 {
    let (b, u) = (d.beta, m.sign());
    let in_band = match regime {
        Regime::BetaSmall => b.abs() <= 0.1,
        Regime::BetaOne => (b - 1.0).abs() <= 1e-6,
        Regime::BetaLarge => b.abs() >= 5.0,
        Regime::TauSmall => tau <= 0.1,
    };
    if !in_band {
        log::warn!("{regime:?} formula used outside its range (beta = {b}, tau = {tau})");
    }
    match regime {
        Regime::BetaSmall => {
            let s = Slow::new(tau, d);
            0.5 * s.s_mu * s.s_mu + 0.5 * b * u * s.s_nu * s.s_mu
        }
        Regime::BetaOne => {
            let x = SQRT_2 * tau;
            let (sh, ch) = (x.sinh(), x.cosh());
            let (sn, cs) = x.sin_cos();
            0.5 * (sh * sh + ch * (ch - cs) + u * sh * (sh + sn))
        }
        Regime::BetaLarge => {
            let s = Slow::new(tau, d);
            match m {
                Mode::Field => s.s_mu * s.s_mu,
                Mode::Detector => {
                    ((s.c_mu - s.c_nu).powi(2) + 2.0 * s.s_nu * s.s_nu) / (4.0 * b * b)
                }
            }
        }
        Regime::TauSmall => match m {
            Mode::Field => 4.0 * b * b * tau * tau,
            Mode::Detector => b * b * tau.powi(4),
        },
    }
}

/// `D − ¼` from the closed form; identical for both modes.
pub fn iup_excess_closed(tau: f64, d: &DerivedParams) -> f64 {
    let s = Slow::new(tau, d);
    let (b, e) = (d.beta, d.eta);
    let (b2, e2) = (b * b, e * e);
    let sm2 = s.s_mu * s.s_mu;
    let sn2 = s.s_nu * s.s_nu;
    let brace = e2 * e * (sm2 + sn2) - 4.0 * b2 * (b2 - 1.0) * sm2 * sn2
        + (3.0 * e2 + e2 * b2 - 2.0) * (sm2 - sn2)
        - 2.0 * b * e2 * s.c_mu * s.s_mu * s.c_nu * s.s_nu
        + 4.0 * b2 * b * s.cc_minus_one * (s.s_mu * s.s_nu - b2 * b);
    brace / (8.0 * e2 * e2)
}

/// Closed-form invariant uncertainty product.
pub fn iup_closed(tau: f64, d: &DerivedParams) -> f64 {
    0.25 + iup_excess_closed(tau, d)
}

/// `D(τ) ≈ ¼ + β²τ⁴[1 + (2/9)(3β² − 4)τ²]`.
pub fn iup_small_tau(tau: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let t2 = tau * tau;
    0.25 + b2 * t2 * t2 * (1.0 + 2.0 / 9.0 * (3.0 * b2 - 4.0) * t2)
}

/// `D ≈ ¼ + [C_μ² + 1 − 2 C_μ C_ν] / 4β²` for `β ≫ 1`.
pub fn iup_large_beta(tau: f64, d: &DerivedParams) -> f64 {
    let s = Slow::new(tau, d);
    0.25 + (s.c_mu * s.c_mu + 1.0 - 2.0 * s.c_mu * s.c_nu) / (4.0 * d.beta * d.beta)
}

/// `σₙ = 2n̄² + 2n̄ − D + ¼`.
pub fn photon_variance(n: f64, d: f64) -> Result<f64> {
    let upper = (n + 0.5) * (n + 0.5);
    if d > upper + MOMENT_SLACK + 1e-12 * upper {
        return Err(Error::InconsistentMoments { n_mean: n, iup: d });
    }
    Ok((2.0 * n * (n + 1.0) - (d - 0.25)).max(0.0))
}

/// Purity `Tr ρ² = (4D)^(−1/2)`.
pub fn purity(d: f64) -> f64 {
    1.0 / (4.0 * d).sqrt()
}

pub fn mandel_q(n: f64, sigma_n: f64) -> f64 {
    if n > 0.0 {
        (sigma_n - n) / n
    } else {
        f64::NAN
    }
}

/// Small-τ expansion of `Z_m`.
pub fn z_series(tau: f64, beta: f64, m: Mode) -> f64 {
    let t2 = tau * tau;
    let b2 = beta * beta;
    match m {
        Mode::Field => 2.0 - t2 / 4.0 * (1.0 - 5.0 / 36.0 * t2) + 7.0 / 6.0 * b2 * t2 * t2,
        Mode::Detector => 1.0 + t2 / 9.0 * (4.0 - 19.0 / 45.0 * t2) + 128.0 / 135.0 * b2 * t2 * t2,
    }
}

/// `Z_m = σₙ/[n̄(n̄+1)]` from the closed forms, switching to the series below
/// [`Z_SERIES_CROSSOVER`].
pub fn z_ratio(tau: f64, d: &DerivedParams, m: Mode) -> Result<f64> {
    if tau * d.mu.max(1.0) < Z_SERIES_CROSSOVER {
        return Ok(z_series(tau.max(0.0), d.beta, m));
    }
    z_closed(tau, d, m)
}

/// Closed-form `Z_m` without the series fallback.
pub fn z_closed(tau: f64, d: &DerivedParams, m: Mode) -> Result<f64> {
    let n = mean_quanta_closed(tau, d, m)?;
    let excess = iup_excess_closed(tau, d);
    Ok(2.0 - excess / (n * (n + 1.0)))
}

/// Invariant squeezing coefficient `χ = 4D / [2n̄ + 1 + √((2n̄+1)² − 4D)]`.
pub fn squeezing_coefficient(n: f64, d: f64) -> Result<f64> {
    let a = 2.0 * n + 1.0;
    let radicand = a * a - 4.0 * d;
    if radicand < -(4.0 * MOMENT_SLACK + 1e-12 * a * a) {
        return Err(Error::InconsistentMoments { n_mean: n, iup: d });
    }
    Ok(4.0 * d / (a + radicand.max(0.0).sqrt()))
}

/// Long-time squeezing coefficient `D/n̄_m` as a function of `τ_ν`.
pub fn asymptotic_chi(tau_nu: f64, d: &DerivedParams, m: Mode) -> f64 {
    let (b, e, u) = (d.beta, d.eta, m.sign());
    let (b2, e2) = (b * b, e * e);
    let (sn, cs) = tau_nu.sin_cos();
    let num = e2 * (e + b2) + (3.0 * e2 - 2.0) * cs * cs + (2.0 - e2) * sn * sn
        - 2.0 * b * (e2 - 2.0 * b2) * cs * sn;
    let den = 2.0 * e2 * (b2 * (e + b2) * (1.0 + u) + 1.0 + e);
    num / den
}

/// Minimum over slow time of the detector's long-time squeezing coefficient,
/// `½ + β(β − 1) / 2[1 + η(β)]`.
pub fn chi2_min(beta: f64) -> Result<f64> {
    let d = DerivedParams::for_beta(beta)?;
    Ok(0.5 + beta * (beta - 1.0) / (2.0 * (1.0 + d.eta)))
}

/// Minimizer of [`chi2_min`] over `β`: `(√3 − 1)/√2`.
pub const BETA_AT_CHI2_MIN: f64 = (SQRT_3 - 1.0) / SQRT_2;

/// Global minimum of [`chi2_min`]: `(1 + √3)(√3 − √2)/2 ≈ 0.434174`.
pub const CHI2_GLOBAL_MIN: f64 = (1.0 + SQRT_3) * (SQRT_3 - SQRT_2) / 2.0;

/// Closed-form observables of one mode.
pub fn closed_form_observables(tau: f64, d: &DerivedParams, m: Mode) -> Result<ModeObservables> {
    let n = mean_quanta_closed(tau, d, m)?;
    let iup = iup_closed(tau, d);
    let obs = ModeObservables::from_moments(m, n, iup)?;
    Ok(obs.with_z(z_ratio(tau, d, m)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(beta: f64) -> DerivedParams {
        DerivedParams::for_beta(beta).unwrap()
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_mean_quanta(-5e-11).unwrap(), 0.0);
        assert_eq!(clamp_mean_quanta(3.0).unwrap(), 3.0);
        assert!(matches!(
            clamp_mean_quanta(-1e-6),
            Err(Error::NegativeMeanQuanta(_))
        ));
    }

    #[test]
    fn vacuum_covariance_is_stationary() {
        let m = CovarianceMatrix::vacuum();
        let out = m.propagate(&EvolutionMatrix::identity(0.0));
        assert_eq!(out.matrix, Mat4::identity() * 0.5);
        assert_eq!(out.mean_quanta(Mode::Field).unwrap(), 0.0);
        assert_eq!(out.iup(Mode::Detector), 0.25);
    }

    #[test]
    fn closed_forms_vanish_at_origin() {
        for beta in [0.2, 1.0, 3.0] {
            assert_eq!(mean_quanta_closed(0.0, &d(beta), Mode::Field).unwrap(), 0.0);
            assert_eq!(mean_quanta_closed(0.0, &d(beta), Mode::Detector).unwrap(), 0.0);
            assert_eq!(iup_closed(0.0, &d(beta)), 0.25);
        }
    }

    #[test]
    fn reported_mean_quanta_at_beta_one() {
        let n1 = mean_quanta_closed(2.0, &d(1.0), Mode::Field).unwrap();
        let n2 = mean_quanta_closed(2.0, &d(1.0), Mode::Detector).unwrap();
        assert!((n1 - 112.4).abs() / 112.4 < 0.01, "{n1}");
        assert!((n2 - 38.7).abs() / 38.7 < 0.01, "{n2}");
    }

    #[test]
    fn ratio_three_at_beta_one() {
        let tau = 12.0 / SQRT_2;
        let r = mean_quanta_closed(tau, &d(1.0), Mode::Field).unwrap()
            / mean_quanta_closed(tau, &d(1.0), Mode::Detector).unwrap();
        assert!((r - 3.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn beta_one_limit_is_exact() {
        for tau in [0.1, 0.8, 2.5] {
            for m in Mode::BOTH {
                let full = mean_quanta_closed(tau, &d(1.0), m).unwrap();
                let lim = mean_quanta_limit(tau, &d(1.0), m, Regime::BetaOne);
                assert!((full - lim).abs() <= 1e-12 * full.max(1.0));
            }
        }
    }

    #[test]
    fn small_tau_limit_values() {
        let dd = d(0.5);
        let n1 = mean_quanta_limit(0.05, &dd, Mode::Field, Regime::TauSmall);
        let n2 = mean_quanta_limit(0.05, &dd, Mode::Detector, Regime::TauSmall);
        assert!((n1 - 0.0025).abs() < 1e-15);
        assert!((n2 - 1.5625e-6).abs() < 1e-18);
    }

    #[test]
    fn small_beta_limit_tracks_half_sinh_squared() {
        let dd = d(0.01);
        let tau = 100.0;
        // tau_mu ~ gamma t / 2 = beta tau
        let x = 0.01 * tau;
        for m in Mode::BOTH {
            let lim = mean_quanta_limit(tau, &dd, m, Regime::BetaSmall);
            let target = 0.5 * x.sinh().powi(2);
            assert!((lim - target).abs() / target < 0.02, "{lim} vs {target}");
        }
    }

    #[test]
    fn large_beta_ratio() {
        let dd = d(10.0);
        let tau = dd.tau_for_tau_mu(8.0);
        let n1 = mean_quanta_limit(tau, &dd, Mode::Field, Regime::BetaLarge);
        let n2 = mean_quanta_limit(tau, &dd, Mode::Detector, Regime::BetaLarge);
        assert!((n1 / n2 / 400.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn regime_parse() {
        assert_eq!("beta_small".parse::<Regime>().unwrap(), Regime::BetaSmall);
        assert!("nope".parse::<Regime>().is_err());
    }

    #[test]
    fn iup_small_tau_series() {
        let dd = d(1.0);
        let full = iup_closed(0.1, &dd);
        assert!((full - iup_small_tau(0.1, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn iup_large_beta_form() {
        let dd = d(20.0);
        let tau = dd.tau_for_tau_mu(2.0);
        let full = iup_closed(tau, &dd);
        let approx = iup_large_beta(tau, &dd);
        // O(1/beta) relative correction on the excess.
        assert!(((full - 0.25) / (approx - 0.25) - 1.0).abs() < 0.1);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(photon_variance(0.0, 0.25).unwrap(), 0.0);
        assert_eq!(photon_variance(3.0, 0.25).unwrap(), 24.0);
        assert_eq!(photon_variance(2.0, 6.25).unwrap(), 6.0);
        assert!(matches!(
            photon_variance(2.0, 6.3),
            Err(Error::InconsistentMoments { .. })
        ));
    }

    #[test]
    fn z_endpoints_and_series_value() {
        for beta in [0.2, 0.5, 1.0] {
            assert_eq!(z_ratio(0.0, &d(beta), Mode::Field).unwrap(), 2.0);
            assert_eq!(z_ratio(0.0, &d(beta), Mode::Detector).unwrap(), 1.0);
        }
        let z1 = z_ratio(0.1, &d(0.5), Mode::Field).unwrap();
        let series = z_series(0.1, 0.5, Mode::Field);
        assert!((series - 1.99753).abs() < 1e-5, "{series}");
        assert!((z1 - series).abs() < 1e-5);
    }

    #[test]
    fn z_crossover_overlap() {
        for beta in [0.2, 0.5, 1.0, 2.0] {
            for tau in [0.04, 0.05, 0.06] {
                for m in Mode::BOTH {
                    let a = z_series(tau, beta, m);
                    let b = z_closed(tau, &d(beta), m).unwrap();
                    assert!((a - b).abs() < 1e-5, "beta {beta} tau {tau} {m:?}: {a} {b}");
                }
            }
        }
        for beta in [2.0, 5.0, 10.0, 20.0] {
            let dd = d(beta);
            let tau = Z_SERIES_CROSSOVER / dd.mu;
            for m in Mode::BOTH {
                let a = z_series(tau, beta, m);
                let b = z_closed(tau, &dd, m).unwrap();
                assert!((a - b).abs() < 1e-5, "beta {beta} {m:?}: {a} {b}");
                let below = z_ratio(0.99 * tau, &dd, m).unwrap();
                assert!((1.0..=2.0).contains(&below), "beta {beta} {m:?}: {below}");
            }
        }
    }

    #[test]
    fn chi_examples() {
        assert_eq!(squeezing_coefficient(0.0, 0.25).unwrap(), 1.0);
        assert!(squeezing_coefficient(1.0, 2.3).is_err());
        let b1 = d(1.0);
        for k in 0..50 {
            let x = k as f64 * 0.13;
            let c1 = asymptotic_chi(x, &b1, Mode::Field);
            let c2 = asymptotic_chi(x, &b1, Mode::Detector);
            assert!((c1 - (3.0 + (2.0 * x).sin()) / 12.0).abs() < 1e-14);
            assert!((c2 - 3.0 * c1).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_large_beta_detector_is_unsqueezed() {
        let dd = d(50.0);
        for k in 0..20 {
            let x = k as f64 * 0.31;
            let c2 = asymptotic_chi(x, &dd, Mode::Detector);
            let approx = 1.0 - x.cos() * x.sin() / 50.0;
            assert!((c2 - approx).abs() < 2e-3, "{c2} {approx}");
        }
    }

    #[test]
    fn chi_small_beta_is_half() {
        let dd = d(1e-3);
        for x in [0.0, 1.0, 2.0] {
            assert!((asymptotic_chi(x, &dd, Mode::Field) - 0.5).abs() < 2e-3);
        }
    }

    #[test]
    fn chi2_min_values() {
        assert_eq!(chi2_min(1.0).unwrap(), 0.5);
        let at_min = chi2_min(BETA_AT_CHI2_MIN).unwrap();
        assert!((at_min - CHI2_GLOBAL_MIN).abs() < 1e-12);
        assert!((CHI2_GLOBAL_MIN - 0.434_174).abs() < 1e-6);
        let two = chi2_min(2.0).unwrap();
        assert!((two - (0.5 + 1.0 / (1.0 + 13f64.sqrt()))).abs() < 1e-15);
        assert!((two - 0.7171).abs() < 1e-4);
    }

    #[test]
    fn chi2_min_matches_scan_of_asymptotic_chi() {
        for beta in [0.3, BETA_AT_CHI2_MIN, 2.0] {
            let dd = d(beta);
            let scan = (0..20_000)
                .map(|k| asymptotic_chi(k as f64 * std::f64::consts::TAU / 20_000.0, &dd, Mode::Detector))
                .fold(f64::INFINITY, f64::min);
            assert!((scan - chi2_min(beta).unwrap()).abs() < 1e-7, "{beta}: {scan}");
        }
    }

    #[test]
    fn thermal_and_vacuum_observables() {
        let vac = ModeObservables::from_moments(Mode::Field, 0.0, 0.25).unwrap();
        assert_eq!(vac.chi, 1.0);
        assert_eq!(vac.purity, 1.0);
        assert!(vac.z.is_nan());
        let th = ModeObservables::from_moments(Mode::Detector, 2.0, 6.25).unwrap();
        assert!((th.z - 1.0).abs() < 1e-15);
        assert!((th.purity - 0.2).abs() < 1e-15);
        let sq = ModeObservables::from_moments(Mode::Field, 3.0, 0.25).unwrap();
        assert!((sq.z - 2.0).abs() < 1e-15);
        assert!(ModeObservables::from_moments(Mode::Field, 1.0, 0.2).is_err());
    }
}
