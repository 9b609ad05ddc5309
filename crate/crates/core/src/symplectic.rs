//! Exact linear dynamics of the two quadratic oscillators.
//!
//! The evolution matrix obeys `dΛ/dt = Λ Σ B(t)` with `Λ(0) = I₄`, where `B`
//! is the Hamiltonian matrix in the `(p1, p2, x1, x2)` ordering and
//! `Σ = [[0, I₂], [-I₂, 0]]`. It is integrated with a fixed-step classical
//! fourth-order Runge–Kutta scheme; symplecticity is monitored, not enforced.

use std::io::Write;

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::fmt::num;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type Mat2 = Matrix2<f64>;
pub type Mat4 = Matrix4<f64>;

/// Default number of RK4 steps per modulation period.
pub const STEPS_PER_PERIOD: f64 = 200.0;
/// Minimum number of steps per modulation period accepted by the integrator.
pub const MIN_STEPS_PER_PERIOD: f64 = 40.0;
/// Default number of stored samples per modulation period.
pub const SAMPLES_PER_PERIOD: f64 = 8.0;
/// Entries above this magnitude abort the integration.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// The symplectic form `[[0, I₂], [-I₂, 0]]`.
pub fn sigma() -> Mat4 {
    let mut s = Mat4::zeros();
    s[(0, 2)] = 1.0;
    s[(1, 3)] = 1.0;
    s[(2, 0)] = -1.0;
    s[(3, 1)] = -1.0;
    s
}

/// 2×2 block `k` (1 = upper-left, 2 = upper-right, 3 = lower-left, 4 = lower-right).
pub fn block(m: &Mat4, k: usize) -> Mat2 {
    let (r, c) = match k {
        1 => (0, 0),
        2 => (0, 2),
        3 => (2, 0),
        4 => (2, 2),
        _ => panic!("block index {k} out of range 1..=4"),
    };
    m.fixed_view::<2, 2>(r, c).into_owned()
}

pub fn from_blocks(b1: &Mat2, b2: &Mat2, b3: &Mat2, b4: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(b1);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(b2);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(b3);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(b4);
    m
}

pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Symmetric Hamiltonian matrix `B(t)` of `H = ½ q B q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix {
    pub t: f64,
    pub matrix: Mat4,
}

impl HamiltonianMatrix {
    pub fn b(&self, k: usize) -> Mat2 {
        block(&self.matrix, k)
    }
}

/// Blocks: `b1 = I₂`, `b2 = [[0, 0], [-2κ, 0]]`, `b3 = b2ᵀ`, `b4 = diag(ω²(t), 1)`.
pub fn build_b(t: f64, p: &ModelParams) -> HamiltonianMatrix {
    let w = p.omega_at(t);
    let mut m = Mat4::identity();
    m[(2, 2)] = w * w;
    // x1 p2 coupling: row x1 (2), column p2 (1), and its mirror.
    m[(2, 1)] = -2.0 * p.kappa();
    m[(1, 2)] = -2.0 * p.kappa();
    HamiltonianMatrix { t, matrix: m }
}

/// Snapshot of `Λ(t)` (or of its inverse `L(t)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionMatrix {
    pub t: f64,
    pub matrix: Mat4,
}

impl EvolutionMatrix {
    pub fn identity(t: f64) -> Self {
        EvolutionMatrix {
            t,
            matrix: Mat4::identity(),
        }
    }

    /// Block `λ_k`, `k` in `1..=4`.
    pub fn lambda(&self, k: usize) -> Mat2 {
        block(&self.matrix, k)
    }

    /// `max |Λ Σ Λᵀ − Σ|`.
    pub fn symplectic_defect(&self) -> f64 {
        let s = sigma();
        max_abs(&(self.matrix * s * self.matrix.transpose() - s))
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn invert(&self) -> EvolutionMatrix {
        invert_lambda(self)
    }
}

/// Inverse via the symplectic identity `Λ⁻¹ = −Σ Λᵀ Σ`, assembled blockwise as
/// `[[λ₄ᵀ, −λ₂ᵀ], [−λ₃ᵀ, λ₁ᵀ]]`. Exact for symplectic input and free of the
/// cancellation a general-purpose inverse suffers once entries grow large.
pub fn invert_lambda(lam: &EvolutionMatrix) -> EvolutionMatrix {
    let l1 = lam.lambda(1);
    let l2 = lam.lambda(2);
    let l3 = lam.lambda(3);
    let l4 = lam.lambda(4);
    EvolutionMatrix {
        t: lam.t,
        matrix: from_blocks(
            &l4.transpose(),
            &(-l2.transpose()),
            &(-l3.transpose()),
            &l1.transpose(),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectorySource {
    Numeric,
    Analytic,
}

impl TrajectorySource {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectorySource::Numeric => "numeric",
            TrajectorySource::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub source: TrajectorySource,
    pub samples: Vec<EvolutionMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &EvolutionMatrix {
        self.samples.last().expect("trajectory always holds Λ(0)")
    }

    /// Largest symplectic defect over the stored samples.
    pub fn max_symplectic_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(EvolutionMatrix::symplectic_defect)
            .fold(0.0, f64::max)
    }

    /// CSV with `#`-prefixed metadata, a `t,L11,...,L44` header and one
    /// row-major row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[(&str, String)]) -> Result<()> {
        writeln!(w, "# source={}", self.source.as_str())?;
        for (k, v) in metadata {
            writeln!(w, "# {k}={v}")?;
        }
        write!(w, "t")?;
        for i in 1..=4 {
            for j in 1..=4 {
                write!(w, ",L{i}{j}")?;
            }
        }
        writeln!(w)?;
        for s in &self.samples {
            write!(w, "{}", num(s.t))?;
            for i in 0..4 {
                for j in 0..4 {
                    write!(w, ",{}", num(s.matrix[(i, j)]))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Fixed-step settings. `stride` is the number of RK4 steps between stored samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub stride: usize,
}

impl IntegratorConfig {
    /// 200 steps per modulation period, 8 stored samples per period.
    pub fn for_params(p: &ModelParams) -> Self {
        Self::with_dt(p, p.modulation_period() / STEPS_PER_PERIOD)
    }

    /// Given step with the default stride of 8 samples per modulation period.
    pub fn with_dt(p: &ModelParams, dt: f64) -> Self {
        let stride = (p.modulation_period() / (SAMPLES_PER_PERIOD * dt)).ceil();
        IntegratorConfig {
            dt,
            stride: if stride.is_finite() && stride >= 1.0 {
                stride as usize
            } else {
                1
            },
        }
    }

    /// Store every step.
    pub fn full_resolution(mut self) -> Self {
        self.stride = 1;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn max_dt(p: &ModelParams) -> f64 {
        p.modulation_period() / MIN_STEPS_PER_PERIOD
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        let max = Self::max_dt(p);
        if !(self.dt > 0.0) || self.dt > max || !self.dt.is_finite() {
            return Err(Error::StepSize { dt: self.dt, max });
        }
        Ok(())
    }
}

#[inline]
fn generator(p: &ModelParams, t: f64, s: &Mat4) -> Mat4 {
    s * build_b(t, p).matrix
}

#[inline]
fn rk4_step(p: &ModelParams, s: &Mat4, t: f64, h: f64, lam: &Mat4) -> Mat4 {
    let a0 = generator(p, t, s);
    let ah = generator(p, t + 0.5 * h, s);
    let a1 = generator(p, t + h, s);
    let k1 = lam * a0;
    let k2 = (lam + k1 * (0.5 * h)) * ah;
    let k3 = (lam + k2 * (0.5 * h)) * ah;
    let k4 = (lam + k3 * h) * a1;
    lam + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

fn check_divergence(m: &Mat4, t: f64) -> Result<()> {
    let big = max_abs(m);
    if big > DIVERGENCE_LIMIT || !big.is_finite() {
        return Err(Error::Divergence { t, value: big });
    }
    Ok(())
}

/// Integrates `Λ` from `Λ(0) = I₄` to `t_final` with the default stride.
pub fn evolve_lambda(p: &ModelParams, t_final: f64, dt: f64) -> Result<Trajectory> {
    evolve_with(p, t_final, &IntegratorConfig::with_dt(p, dt))
}

/// Integrates with explicit settings. The step is shrunk so that an integer
/// number of steps lands exactly on `t_final`; the final state is always stored.
pub fn evolve_with(p: &ModelParams, t_final: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate(p)?;
    if !(t_final >= 0.0) {
        return Err(Error::InvalidGrid(format!(
            "final time must be non-negative, got {t_final}"
        )));
    }
    let steps = (t_final / cfg.dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let s = sigma();
    let mut lam = Mat4::identity();
    let mut samples = Vec::with_capacity(steps / cfg.stride + 2);
    samples.push(EvolutionMatrix::identity(0.0));
    for i in 0..steps {
        let t = i as f64 * h;
        lam = rk4_step(p, &s, t, h, &lam);
        let t_next = (i + 1) as f64 * h;
        check_divergence(&lam, t_next)?;
        if (i + 1) % cfg.stride == 0 || i + 1 == steps {
            samples.push(EvolutionMatrix {
                t: t_next,
                matrix: lam,
            });
        }
    }
    Ok(Trajectory {
        source: TrajectorySource::Numeric,
        samples,
    })
}

/// Integrates from an arbitrary state to `t_end` (forwards or backwards),
/// returning only the final matrix.
pub fn propagate(
    p: &ModelParams,
    start: &EvolutionMatrix,
    t_end: f64,
    dt: f64,
) -> Result<EvolutionMatrix> {
    IntegratorConfig { dt, stride: 1 }.validate(p)?;
    let span = t_end - start.t;
    let steps = (span.abs() / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };
    let s = sigma();
    let mut lam = start.matrix;
    for i in 0..steps {
        let t = start.t + i as f64 * h;
        lam = rk4_step(p, &s, t, h, &lam);
        check_divergence(&lam, t + h)?;
    }
    Ok(EvolutionMatrix {
        t: t_end,
        matrix: lam,
    })
}

/// `Λ` at each requested time, integrating straight through the sorted list.
pub fn evolve_to_times(p: &ModelParams, times: &[f64], dt: f64) -> Result<Vec<EvolutionMatrix>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = EvolutionMatrix::identity(0.0);
    for &t in times {
        if t < current.t {
            return Err(Error::InvalidGrid(format!(
                "times must be non-decreasing and non-negative, got {t} after {}",
                current.t
            )));
        }
        current = propagate(p, &current, t, dt)?;
        out.push(current);
    }
    Ok(out)
}

/// Largest sample spacing accepted by [`second_order_residual`].
pub const MAX_RESIDUAL_SPACING: f64 = 0.01;

/// Central-difference residual of `λ̈ − λ̇ R₁ + λ R₃ = 0` for `λ₁` and `λ₃`, with
/// `R₁ = 2κ [[0, −1], [1, 0]]` and `R₃ = diag(ω²(t) − 4κ², 1)`.
///
/// Returns `(t, max |residual|)` at each interior sample with equal spacing on
/// both sides.
pub fn second_order_residual(traj: &Trajectory, p: &ModelParams) -> Result<Vec<(f64, f64)>> {
    let s = &traj.samples;
    let mut out = Vec::new();
    let k = p.kappa();
    let r1 = Mat2::new(0.0, -2.0 * k, 2.0 * k, 0.0);
    for w in s.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let h1 = b.t - a.t;
        let h2 = c.t - b.t;
        if h1.max(h2) > MAX_RESIDUAL_SPACING {
            return Err(Error::InsufficientSampling {
                spacing: h1.max(h2),
                max: MAX_RESIDUAL_SPACING,
            });
        }
        if (h1 - h2).abs() > 1e-9 * h1 {
            continue;
        }
        let h = h1;
        let w2 = p.omega_at(b.t).powi(2);
        let r3 = Mat2::new(w2 - 4.0 * k * k, 0.0, 0.0, 1.0);
        let mut worst = 0.0f64;
        for blk in [1, 3] {
            let prev = a.lambda(blk);
            let mid = b.lambda(blk);
            let next = c.lambda(blk);
            let d2 = (next - mid * 2.0 + prev) / (h * h);
            let d1 = (next - prev) / (2.0 * h);
            let res = d2 - d1 * r1 + mid * r3;
            worst = worst.max(res.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        out.push((b.t, worst));
    }
    if s.len() >= 2 && out.is_empty() {
        return Err(Error::InsufficientSampling {
            spacing: s[1].t - s[0].t,
            max: MAX_RESIDUAL_SPACING,
        });
    }
    Ok(out)
}
