//! Physical parameters of the modulated cavity mode coupled to an oscillator
//! detector, and the slow-dynamics constants derived from them.
//!
//! Units are dimensionless with the unperturbed frequency fixed to one. The
//! quadrature ordering used throughout the crate is `(p1, p2, x1, x2)`: mode 1
//! is the resonant cavity field, mode 2 is the detector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unperturbed frequency of both oscillators.
pub const OMEGA0: f64 = 1.0;

/// Hard upper bound on |gamma| and |kappa|.
pub const WEAK_LIMIT: f64 = 0.1;

/// Above this, first-order accuracy of the slow-time solution degrades noticeably.
pub const ACCURATE_LIMIT: f64 = 0.01;

/// How the lower normal frequency (and hence the pump frequency `2 omega_-`)
/// is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyConvention {
    /// `omega_- = sqrt(1 - 2 kappa)`.
    #[default]
    Exact,
    /// `omega_- = 1 - kappa`.
    FirstOrder,
}

/// Field mode (1) or detector mode (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Field,
    Detector,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Field, Mode::Detector];

    pub fn from_index(m: usize) -> Result<Self> {
        match m {
            1 => Ok(Mode::Field),
            2 => Ok(Mode::Detector),
            other => Err(Error::ModeIndex(other)),
        }
    }

    /// 1-based mode number.
    pub fn index(self) -> usize {
        match self {
            Mode::Field => 1,
            Mode::Detector => 2,
        }
    }

    /// Row of the momentum quadrature in `(p1, p2, x1, x2)`.
    pub fn p_row(self) -> usize {
        self.index() - 1
    }

    /// Row of the position quadrature in `(p1, p2, x1, x2)`.
    pub fn x_row(self) -> usize {
        self.index() + 1
    }

    /// `+1` for the field, `-1` for the detector.
    pub fn sign(self) -> f64 {
        match self {
            Mode::Field => 1.0,
            Mode::Detector => -1.0,
        }
    }
}

/// Modulation depth and coupling, kept in both the physical `(gamma, kappa)`
/// and the rescaled `(epsilon, gamma0, kappa0)` representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    gamma: f64,
    kappa: f64,
    epsilon: f64,
    gamma0: f64,
    kappa0: f64,
    convention: FrequencyConvention,
}

impl ModelParams {
    /// Builds from physical values. The formal small parameter is taken as
    /// `epsilon = |kappa|`, so `kappa0 = ±1` and `gamma0 = ±2 beta`.
    pub fn new(gamma: f64, kappa: f64) -> Result<Self> {
        Self::with_epsilon(gamma, kappa, kappa.abs())
    }

    pub fn with_epsilon(gamma: f64, kappa: f64, epsilon: f64) -> Result<Self> {
        if kappa == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InconsistentParameters(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let p = ModelParams {
            gamma,
            kappa,
            epsilon,
            gamma0: gamma / epsilon,
            kappa0: kappa / epsilon,
            convention: FrequencyConvention::Exact,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds from the rescaled representation `gamma = epsilon gamma0`,
    /// `kappa = epsilon kappa0`.
    pub fn from_scaled(epsilon: f64, gamma0: f64, kappa0: f64) -> Result<Self> {
        if kappa0 == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InconsistentParameters(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let p = ModelParams {
            gamma: epsilon * gamma0,
            kappa: epsilon * kappa0,
            epsilon,
            gamma0,
            kappa0,
            convention: FrequencyConvention::Exact,
        };
        p.validate()?;
        Ok(p)
    }

    /// `gamma = 2 beta kappa`.
    pub fn from_beta(beta: f64, kappa: f64) -> Result<Self> {
        Self::new(2.0 * beta * kappa, kappa)
    }

    pub fn with_convention(mut self, convention: FrequencyConvention) -> Self {
        self.convention = convention;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [("gamma", self.gamma), ("kappa", self.kappa)] {
            if !value.is_finite() || value.abs() >= WEAK_LIMIT {
                return Err(Error::ParameterOutOfRange {
                    name,
                    value,
                    limit: WEAK_LIMIT,
                });
            }
            if value.abs() > ACCURATE_LIMIT {
                log::warn!(
                    "{name} = {value} exceeds {ACCURATE_LIMIT}; the slow-time solution loses accuracy"
                );
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn convention(&self) -> FrequencyConvention {
        self.convention
    }

    pub fn beta(&self) -> f64 {
        self.gamma / (2.0 * self.kappa)
    }

    pub fn omega_minus(&self) -> f64 {
        match self.convention {
            FrequencyConvention::Exact => OMEGA0 * (1.0 - 2.0 * self.kappa).sqrt(),
            FrequencyConvention::FirstOrder => OMEGA0 * (1.0 - self.kappa),
        }
    }

    pub fn omega_plus(&self) -> f64 {
        match self.convention {
            FrequencyConvention::Exact => OMEGA0 * (1.0 + 2.0 * self.kappa).sqrt(),
            FrequencyConvention::FirstOrder => OMEGA0 * (1.0 + self.kappa),
        }
    }

    /// Pump frequency, locked to twice the lower normal frequency.
    pub fn modulation_frequency(&self) -> f64 {
        2.0 * self.omega_minus()
    }

    /// One period of the pump, `2 pi / Omega`.
    pub fn modulation_period(&self) -> f64 {
        2.0 * PI / self.modulation_frequency()
    }

    /// Period of the fast oscillation `cos(omega_- t)`.
    pub fn fast_period(&self) -> f64 {
        2.0 * PI / self.omega_minus()
    }

    /// Instantaneous cavity frequency `omega0 [1 + 2 gamma cos(Omega t)]`.
    pub fn omega_at(&self, t: f64) -> f64 {
        OMEGA0 * (1.0 + 2.0 * self.gamma * (self.modulation_frequency() * t).cos())
    }

    /// Slow time `tau = kappa t`.
    pub fn slow_time(&self, t: f64) -> f64 {
        self.kappa * t
    }

    /// Fast time corresponding to a slow time.
    pub fn fast_time(&self, tau: f64) -> f64 {
        tau / self.kappa
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive_params(self)
    }
}

/// Constants of the slow dynamics. `omega_minus` and `omega_plus` are the
/// split normal frequencies of the unmodulated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub nu: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
}

const RADICAND_SLACK: f64 = -1e-14;

fn checked_sqrt(what: &'static str, value: f64) -> Result<f64> {
    if value < RADICAND_SLACK || value.is_nan() {
        Err(Error::Domain { what, value })
    } else {
        Ok(value.max(0.0).sqrt())
    }
}

pub fn derive_params(p: &ModelParams) -> Result<DerivedParams> {
    if p.kappa == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let mut d = DerivedParams::for_beta(p.beta())?;
    d.omega_minus = p.omega_minus();
    d.omega_plus = p.omega_plus();
    Ok(d)
}

impl DerivedParams {
    /// Slow constants for a bare ratio `beta`, in the `kappa -> 0` limit where
    /// both normal frequencies equal `omega0`. The closed-form observables only
    /// depend on `beta`, so this is all they need.
    pub fn for_beta(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::Domain {
                what: "beta",
                value: beta,
            });
        }
        let b2 = beta * beta;
        let eta = checked_sqrt("eta", b2 * (b2 - 1.0) + 1.0)?;
        let mu = checked_sqrt("mu", 2.0 * eta + 2.0 * (b2 - 1.0))?;
        let nu = checked_sqrt("nu", 2.0 * eta - 2.0 * (b2 - 1.0))?;
        Ok(DerivedParams {
            beta,
            eta,
            mu,
            nu,
            omega_minus: OMEGA0,
            omega_plus: OMEGA0,
        })
    }

    /// `tau_mu = mu tau`, argument of the hyperbolic (growing) functions.
    pub fn tau_mu(&self, tau: f64) -> f64 {
        self.mu * tau
    }

    /// `tau_nu = nu tau`, argument of the slow trigonometric functions.
    pub fn tau_nu(&self, tau: f64) -> f64 {
        self.nu * tau
    }

    /// Slow time at which `tau_mu` reaches the given value.
    pub fn tau_for_tau_mu(&self, tau_mu: f64) -> f64 {
        tau_mu / self.mu
    }
}

/// Optional model keys as they arrive from flags or a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSpec {
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma0: Option<f64>,
    pub kappa0: Option<f64>,
    pub beta: Option<f64>,
    pub convention: Option<FrequencyConvention>,
}

const CONSISTENCY_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl ParamSpec {
    /// Model keys understood by [`ParamSpec::set`].
    pub const KEYS: [&'static str; 7] = [
        "gamma",
        "kappa",
        "epsilon",
        "gamma0",
        "kappa0",
        "beta",
        "convention",
    ];

    /// Sets one key from its textual value. Returns `Ok(false)` for keys that
    /// are not model keys.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<bool, String> {
        let number = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("`{key}`: cannot parse `{value}` as a number ({e})"))
        };
        match key {
            "gamma" => self.gamma = Some(number()?),
            "kappa" => self.kappa = Some(number()?),
            "epsilon" => self.epsilon = Some(number()?),
            "gamma0" => self.gamma0 = Some(number()?),
            "kappa0" => self.kappa0 = Some(number()?),
            "beta" => self.beta = Some(number()?),
            "convention" => {
                self.convention = Some(match value.trim() {
                    "exact" => FrequencyConvention::Exact,
                    "first-order" => FrequencyConvention::FirstOrder,
                    other => return Err(format!("unknown frequency convention `{other}`")),
                })
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Fills every unset field from `other`.
    pub fn or(self, other: &ParamSpec) -> ParamSpec {
        ParamSpec {
            gamma: self.gamma.or(other.gamma),
            kappa: self.kappa.or(other.kappa),
            epsilon: self.epsilon.or(other.epsilon),
            gamma0: self.gamma0.or(other.gamma0),
            kappa0: self.kappa0.or(other.kappa0),
            beta: self.beta.or(other.beta),
            convention: self.convention.or(other.convention),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_none()
            && self.kappa.is_none()
            && self.epsilon.is_none()
            && self.gamma0.is_none()
            && self.kappa0.is_none()
            && self.beta.is_none()
    }

    /// Normalizes to a [`ModelParams`], rejecting over- or under-determined
    /// combinations.
    pub fn resolve(&self) -> Result<ModelParams> {
        let inconsistent = |msg: String| Err(Error::InconsistentParameters(msg));

        let scaled = match (self.epsilon, self.gamma0, self.kappa0) {
            (Some(e), Some(g0), Some(k0)) => Some((e * g0, e * k0)),
            (_, None, None) => None,
            _ => {
                return inconsistent(
                    "gamma0 and kappa0 must be given together with epsilon".to_string(),
                )
            }
        };

        let kappa = match (self.kappa, scaled) {
            (Some(k), Some((_, ks))) if !close(k, ks) => {
                return inconsistent(format!("kappa = {k} but epsilon * kappa0 = {ks}"))
            }
            (Some(k), _) => k,
            (None, Some((_, ks))) => ks,
            (None, None) => return inconsistent("kappa (or epsilon, kappa0) is required".into()),
        };

        let mut gamma = self.gamma.or(scaled.map(|(g, _)| g));
        if let (Some(g), Some((gs, _))) = (self.gamma, scaled) {
            if !close(g, gs) {
                return inconsistent(format!("gamma = {g} but epsilon * gamma0 = {gs}"));
            }
        }
        if let Some(beta) = self.beta {
            let from_beta = 2.0 * beta * kappa;
            match gamma {
                Some(g) if !close(g, from_beta) => {
                    return inconsistent(format!("gamma = {g} but 2 beta kappa = {from_beta}"))
                }
                _ => gamma = Some(from_beta),
            }
        }
        let gamma = match gamma {
            Some(g) => g,
            None => return inconsistent("gamma (or beta, or epsilon and gamma0) is required".into()),
        };

        let params = match self.epsilon {
            Some(e) => ModelParams::with_epsilon(gamma, kappa, e)?,
            None => ModelParams::new(gamma, kappa)?,
        };
        Ok(params.with_convention(self.convention.unwrap_or_default()))
    }
}
