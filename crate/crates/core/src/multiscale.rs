//! First-order multiple-scales solution for the evolution matrix.
//!
//! Every element of the four 2×2 blocks has the form
//!
//! ```text
//! λ_k(ij) = cos(ω₋t)/(2η) · [F cosh τ_μ + G sinh τ_μ/μ + U cos τ_ν + V sin τ_ν/ν]
//!         + sin(ω₋t)/(2η) · [f cosh τ_μ + g sinh τ_μ/μ + u cos τ_ν + v sin τ_ν/ν]
//! ```
//!
//! with `τ = κt`, `τ_μ = μτ`, `τ_ν = ντ`. The coefficient tables for blocks 1 and
//! 3 are written out below; blocks 2 and 4 follow from them by
//! `cos(ω₋t) → sin(ω₋t)`, `sin(ω₋t) → −cos(ω₋t)`. All O(ε) amplitude corrections
//! are dropped.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DerivedParams, Mode, ModelParams};
use crate::observables::clamp_mean_quanta;
use crate::symplectic::{from_blocks, EvolutionMatrix, Mat2, Trajectory, TrajectorySource};

/// Coefficients of the four slow functions `cosh τ_μ`, `sinh τ_μ / μ`,
/// `cos τ_ν`, `sin τ_ν / ν` (before the common `1/2η`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlowAmplitudes {
    pub cosh: Mat2,
    pub sinh: Mat2,
    pub cos: Mat2,
    pub sin: Mat2,
}

impl SlowAmplitudes {
    fn neg(&self) -> Self {
        SlowAmplitudes {
            cosh: -self.cosh,
            sinh: -self.sinh,
            cos: -self.cos,
            sin: -self.sin,
        }
    }

    fn evaluate(&self, s: &SlowFunctions) -> Mat2 {
        (self.cosh * s.cosh_mu + self.sinh * s.sinh_mu_over + self.cos * s.cos_nu
            + self.sin * s.sin_nu_over)
            * s.inv_two_eta
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        [&self.cosh, &self.sinh, &self.cos, &self.sin]
            .into_iter()
            .flat_map(|m| m.iter().copied())
    }
}

/// One block: the amplitude multiplying `cos(ω₋t)` and the one multiplying `sin(ω₋t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockCoefficients {
    pub in_phase: SlowAmplitudes,
    pub quadrature: SlowAmplitudes,
}

impl BlockCoefficients {
    /// Coefficients of `−dλ/dt` at leading order: `cos → sin`, `sin → −cos`.
    fn rotated(&self) -> Self {
        BlockCoefficients {
            in_phase: self.quadrature.neg(),
            quadrature: self.in_phase,
        }
    }
}

/// Where the last entry of the block-1 `sin τ_ν` family goes. Its label says
/// `(21)`, but every other family of that kind is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableReading {
    /// Entry placed at `(22)`; matches the direct numerical solution.
    #[default]
    Diagonal,
    /// Entry placed at `(21)` as printed, leaving `(22)` zero.
    Literal,
}

/// Coefficient tables for all four blocks at a given `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub beta: f64,
    pub eta: f64,
    pub blocks: [BlockCoefficients; 4],
}

impl CoefficientSet {
    /// Block `k` in `1..=4`.
    pub fn block(&self, k: usize) -> &BlockCoefficients {
        &self.blocks[k - 1]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut BlockCoefficients {
        &mut self.blocks[k - 1]
    }

    /// Number of nonzero entries over blocks 1 and 3.
    pub fn nonzero_count(&self) -> usize {
        [0, 2]
            .iter()
            .flat_map(|&i| {
                let b = &self.blocks[i];
                b.in_phase.entries().chain(b.quadrature.entries()).collect::<Vec<_>>()
            })
            .filter(|v| *v != 0.0)
            .count()
    }
}

fn offdiag(a12: f64, a21: f64) -> Mat2 {
    Mat2::new(0.0, a12, a21, 0.0)
}

fn diag(a11: f64, a22: f64) -> Mat2 {
    Mat2::new(a11, 0.0, 0.0, a22)
}

pub fn coefficient_tables(d: &DerivedParams) -> CoefficientSet {
    coefficient_tables_with(d, TableReading::default())
}

pub fn coefficient_tables_with(d: &DerivedParams, reading: TableReading) -> CoefficientSet {
    let b = d.beta;
    let e = d.eta;
    let b2 = b * b;

    let last_v1 = -b * (b + 1.0) - 1.0 - e;
    let v1 = match reading {
        TableReading::Diagonal => diag((b2 - e) * (2.0 * b + 1.0) - b - 1.0, last_v1),
        TableReading::Literal => Mat2::new((b2 - e) * (2.0 * b + 1.0) - b - 1.0, 0.0, last_v1, 0.0),
    };

    let block1 = BlockCoefficients {
        in_phase: SlowAmplitudes {
            cosh: diag(e + b2, e - b2),
            sinh: offdiag(-e + 1.0 - b * (b - 1.0), e - 1.0 + b * (b + 1.0)),
            cos: diag(e - b2, e + b2),
            sin: offdiag(-e - 1.0 + b * (b - 1.0), e + 1.0 - b * (b + 1.0)),
        },
        quadrature: SlowAmplitudes {
            cosh: offdiag(1.0 + b, -1.0 - b),
            sinh: diag(
                b + 1.0 - (b2 + e) * (2.0 * b + 1.0),
                b * (b + 1.0) + 1.0 - e,
            ),
            cos: offdiag(-1.0 - b, 1.0 + b),
            sin: v1,
        },
    };

    let block3 = BlockCoefficients {
        in_phase: SlowAmplitudes {
            cosh: offdiag(1.0 - b, b - 1.0),
            sinh: diag(
                1.0 - b + (b2 + e) * (2.0 * b - 1.0),
                b * (b - 1.0) + 1.0 - e,
            ),
            cos: offdiag(b - 1.0, 1.0 - b),
            sin: diag(
                (e - b2) * (2.0 * b - 1.0) + b - 1.0,
                -b * (b - 1.0) - 1.0 - e,
            ),
        },
        quadrature: SlowAmplitudes {
            cosh: diag(-e - b2, b2 - e),
            sinh: offdiag(e - 1.0 + b * (b + 1.0), 1.0 - e - b * (b - 1.0)),
            cos: diag(b2 - e, -e - b2),
            sin: offdiag(e + 1.0 - b * (b + 1.0), b * (b - 1.0) - e - 1.0),
        },
    };

    CoefficientSet {
        beta: b,
        eta: e,
        blocks: [block1, block1.rotated(), block3, block3.rotated()],
    }
}

/// `sinh(μτ)/μ`, continuous at `μ = 0`.
fn sinh_over(rate: f64, tau: f64) -> f64 {
    let x = rate * tau;
    if x.abs() < 1e-8 {
        tau * (1.0 + x * x / 6.0)
    } else {
        x.sinh() / rate
    }
}

fn sin_over(rate: f64, tau: f64) -> f64 {
    let x = rate * tau;
    if x.abs() < 1e-8 {
        tau * (1.0 - x * x / 6.0)
    } else {
        x.sin() / rate
    }
}

struct SlowFunctions {
    cosh_mu: f64,
    sinh_mu_over: f64,
    cos_nu: f64,
    sin_nu_over: f64,
    inv_two_eta: f64,
}

impl SlowFunctions {
    fn new(d: &DerivedParams, tau: f64) -> Self {
        SlowFunctions {
            cosh_mu: d.tau_mu(tau).cosh(),
            sinh_mu_over: sinh_over(d.mu, tau),
            cos_nu: d.tau_nu(tau).cos(),
            sin_nu_over: sin_over(d.nu, tau),
            inv_two_eta: 0.5 / d.eta,
        }
    }
}

/// Slow amplitudes of all four blocks at slow time `tau`: `(A, B)` with
/// `Λ = A cos(ω₋t) + B sin(ω₋t)`.
pub fn slow_envelopes(
    tau: f64,
    d: &DerivedParams,
    coeffs: &CoefficientSet,
) -> (nalgebra::Matrix4<f64>, nalgebra::Matrix4<f64>) {
    let s = SlowFunctions::new(d, tau);
    let a: Vec<Mat2> = coeffs.blocks.iter().map(|b| b.in_phase.evaluate(&s)).collect();
    let q: Vec<Mat2> = coeffs.blocks.iter().map(|b| b.quadrature.evaluate(&s)).collect();
    (
        from_blocks(&a[0], &a[1], &a[2], &a[3]),
        from_blocks(&q[0], &q[1], &q[2], &q[3]),
    )
}

/// Two-time form: fast time `t` and slow time `tau` treated as independent.
pub fn analytic_lambda_two_time(
    t: f64,
    tau: f64,
    omega_minus: f64,
    d: &DerivedParams,
    coeffs: &CoefficientSet,
) -> EvolutionMatrix {
    let (a, b) = slow_envelopes(tau, d, coeffs);
    let (sn, cs) = (omega_minus * t).sin_cos();
    EvolutionMatrix {
        t,
        matrix: a * cs + b * sn,
    }
}

/// Analytic `Λ(t)` with `τ = κt` and the fast phase `ω₋t` of the model's
/// frequency convention.
pub fn analytic_lambda(t: f64, p: &ModelParams) -> Result<EvolutionMatrix> {
    let d = p.derive()?;
    Ok(analytic_lambda_with(t, p, &d, &coefficient_tables(&d)))
}

pub fn analytic_lambda_with(
    t: f64,
    p: &ModelParams,
    d: &DerivedParams,
    coeffs: &CoefficientSet,
) -> EvolutionMatrix {
    analytic_lambda_two_time(t, p.slow_time(t), p.omega_minus(), d, coeffs)
}

/// Analytic matrices on a time grid.
pub fn analytic_trajectory(
    p: &ModelParams,
    times: &[f64],
    coeffs: &CoefficientSet,
) -> Result<Trajectory> {
    let d = p.derive()?;
    Ok(Trajectory {
        source: TrajectorySource::Analytic,
        samples: times
            .iter()
            .map(|&t| analytic_lambda_with(t, p, &d, coeffs))
            .collect(),
    })
}

/// Mean quanta for vacuum input, `¼ (Σ_k λ_kᵀ λ_k)_(mm) − ½`.
pub fn mean_quanta_from_lambda(lam: &EvolutionMatrix, m: Mode) -> Result<f64> {
    let i = m.index() - 1;
    let sum: f64 = (1..=4)
        .map(|k| {
            let l = lam.lambda(k);
            (l.transpose() * l)[(i, i)]
        })
        .sum();
    clamp_mean_quanta(0.25 * sum - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::Mat4;

    fn at(beta: f64) -> CoefficientSet {
        coefficient_tables(&DerivedParams::for_beta(beta).unwrap())
    }

    #[test]
    fn beta_one_entries() {
        let c = at(1.0);
        let b1 = c.block(1).in_phase;
        assert_eq!(b1.cosh[(0, 0)], 2.0);
        assert_eq!(b1.cosh[(1, 1)], 0.0);
        assert_eq!(b1.sinh[(0, 1)], 0.0);
        assert_eq!(b1.sinh[(1, 0)], 2.0);
    }

    #[test]
    fn beta_zero_entries() {
        let c = at(0.0);
        let b1 = c.block(1).in_phase;
        assert_eq!(b1.cosh[(0, 0)], 1.0);
        assert_eq!(b1.cosh[(1, 1)], 1.0);
        assert_eq!(b1.cos[(0, 0)], 1.0);
        assert_eq!(b1.cos[(1, 1)], 1.0);
        assert_eq!(b1.sinh[(0, 1)], 0.0);
        assert_eq!(b1.sin[(0, 1)], -2.0);
    }

    #[test]
    fn sparsity_pattern() {
        for beta in [0.3, 1.7, 4.0] {
            let c = at(beta);
            let b1 = c.block(1);
            let b3 = c.block(3);
            let is_diag = |m: &Mat2| m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0;
            let is_off = |m: &Mat2| m[(0, 0)] == 0.0 && m[(1, 1)] == 0.0;
            assert!(is_diag(&b1.in_phase.cosh) && is_diag(&b1.in_phase.cos));
            assert!(is_off(&b1.in_phase.sinh) && is_off(&b1.in_phase.sin));
            assert!(is_off(&b1.quadrature.cosh) && is_off(&b1.quadrature.cos));
            assert!(is_diag(&b1.quadrature.sinh) && is_diag(&b1.quadrature.sin));
            assert!(is_off(&b3.in_phase.cosh) && is_diag(&b3.in_phase.sinh));
            assert!(is_diag(&b3.quadrature.cosh) && is_off(&b3.quadrature.sinh));
            // 32 listed entries; generic beta makes all of them nonzero.
            assert_eq!(c.nonzero_count(), 32);
        }
    }

    #[test]
    fn literal_reading_moves_one_entry() {
        let d = DerivedParams::for_beta(2.0).unwrap();
        let diag = coefficient_tables_with(&d, TableReading::Diagonal);
        let lit = coefficient_tables_with(&d, TableReading::Literal);
        let (a, b) = (diag.block(1).quadrature.sin, lit.block(1).quadrature.sin);
        assert_eq!(a[(1, 1)], b[(1, 0)]);
        assert_eq!(a[(1, 0)], 0.0);
        assert_eq!(b[(1, 1)], 0.0);
    }

    #[test]
    fn initial_value_sums() {
        for beta in [-1.3, 0.0, 0.2, 1.0, 2.0, 10.0] {
            let c = at(beta);
            let two_eta = 2.0 * c.eta;
            let b1 = c.block(1).in_phase;
            let b3 = c.block(3).in_phase;
            let l1 = (b1.cosh + b1.cos) / two_eta;
            let l3 = (b3.cosh + b3.cos) / two_eta;
            assert!((l1 - Mat2::identity()).abs().max() < 1e-14);
            assert!(l3.abs().max() < 1e-14);
            assert_eq!(b3.cosh[(0, 1)] + b3.cos[(0, 1)], 0.0);
        }
    }

    #[test]
    fn replacement_rule() {
        let c = at(0.7);
        let b1 = c.block(1);
        let b2 = c.block(2);
        assert_eq!(b2.in_phase.cosh, -b1.quadrature.cosh);
        assert_eq!(b2.quadrature.sinh, b1.in_phase.sinh);
        let b4 = c.block(4);
        assert_eq!(b4.in_phase.sin, -c.block(3).quadrature.sin);
    }

    #[test]
    fn identity_at_origin() {
        let p = ModelParams::from_scaled(0.01, 4.0, 1.0).unwrap();
        let lam = analytic_lambda(0.0, &p).unwrap();
        assert!((lam.matrix - Mat4::identity()).abs().max() < 1e-14);
    }

    #[test]
    fn block3_initial_slope() {
        let p = ModelParams::from_scaled(1e-3, 4.0, 1.0).unwrap();
        let h = 1e-5;
        let plus = analytic_lambda(h, &p).unwrap().lambda(3)[(0, 0)];
        let minus = analytic_lambda(-h, &p).unwrap().lambda(3)[(0, 0)];
        let slope = (plus - minus) / (2.0 * h);
        assert!((slope + p.omega_minus()).abs() < 10.0 * p.epsilon(), "{slope}");
        let c = coefficient_tables(&p.derive().unwrap());
        let q = c.block(3).quadrature;
        assert!(((q.cosh[(0, 0)] + q.cos[(0, 0)]) / (2.0 * c.eta) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn vacuum_mean_quanta() {
        let lam = EvolutionMatrix::identity(0.0);
        assert_eq!(mean_quanta_from_lambda(&lam, Mode::Field).unwrap(), 0.0);
        assert_eq!(mean_quanta_from_lambda(&lam, Mode::Detector).unwrap(), 0.0);
    }

    #[test]
    fn fast_slow_separability() {
        let p = ModelParams::from_scaled(0.01, 4.0, 1.0).unwrap();
        let d = p.derive().unwrap();
        let c = coefficient_tables(&d);
        let w = p.omega_minus();
        for (t, tau) in [(3.0, 0.4), (120.0, 1.7), (7.5, 2.9)] {
            let a = analytic_lambda_two_time(t, tau, w, &d, &c);
            let b = analytic_lambda_two_time(t + 2.0 * std::f64::consts::PI / w, tau, w, &d, &c);
            let scale = a.matrix.abs().max();
            assert!((a.matrix - b.matrix).abs().max() < 1e-12 * scale);
        }
    }
}
