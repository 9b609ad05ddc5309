//! `(β, τ)` parameter sweeps. Points are independent, so they are mapped in
//! parallel when the `parallel` feature is on; row order never depends on
//! scheduling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fmt::num;
use crate::error::{Error, Result};
use crate::model::{DerivedParams, ModelParams};
use crate::observables::ModeObservables;
use crate::pipeline::{closed_observables, numeric_kappa, numeric_observables, Pipeline};
use crate::symplectic::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

/// Order-preserving map over `items`.
pub fn map_points<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        Execution::Sequential => items.iter().map(f).collect(),
    }
}

/// Runs `f` on a pool of `jobs` threads (`None`: available parallelism).
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidGrid(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    if jobs.is_some_and(|n| n > 1) {
        log::warn!("built without the `parallel` feature; ignoring --jobs");
    }
    Ok(f())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub tau: f64,
    pub obs: ModeObservables,
    /// `n̄₁/n̄₂` at this point, repeated on both mode rows.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub taus: Vec<f64>,
    /// `Analytic` (closed forms) or `Numeric`.
    pub pipeline: Pipeline,
    /// Step size for the numeric pipeline; default per point otherwise.
    pub dt: Option<f64>,
}

fn check_grid(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} grid has non-finite values")));
    }
    Ok(())
}

/// Observables of both modes at every `(β, τ)`, rows ordered by `β`, then
/// `τ`, then mode. The numeric pipeline integrates one trajectory per `β`
/// with `κ` from [`numeric_kappa`].
pub fn sweep(cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    check_grid("beta", &cfg.betas)?;
    check_grid("tau", &cfg.taus)?;
    if cfg.taus.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidGrid("tau values must be >= 0".into()));
    }
    if cfg.pipeline == Pipeline::Numeric && cfg.taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("numeric sweeps need a sorted tau grid".into()));
    }
    let per_beta = map_points(&cfg.betas, exec, |&beta| -> Result<Vec<SweepRow>> {
        let rows = match cfg.pipeline {
            Pipeline::Numeric => {
                let p = ModelParams::from_beta(beta, numeric_kappa(beta))?;
                let dt = cfg.dt.unwrap_or(IntegratorConfig::for_params(&p).dt);
                numeric_observables(&p, &cfg.taus, dt)?
            }
            Pipeline::Analytic => closed_observables(&DerivedParams::for_beta(beta)?, &cfg.taus)?,
            Pipeline::Both => {
                return Err(Error::InvalidGrid(
                    "sweeps take a single pipeline (numeric or analytic)".into(),
                ))
            }
        };
        Ok(rows
            .into_iter()
            .flat_map(|row| {
                let ratio = row.modes[0].n_mean / row.modes[1].n_mean;
                row.modes.map(|obs| SweepRow {
                    beta,
                    tau: row.tau,
                    obs,
                    ratio,
                })
            })
            .collect())
    });
    let mut out = Vec::with_capacity(cfg.betas.len() * cfg.taus.len() * 2);
    for rows in per_beta {
        out.extend(rows?);
    }
    Ok(out)
}

pub const SWEEP_HEADER: &str = "beta,tau,mode,n_mean,sigma_n,D,purity,Z,chi,ratio";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow], metadata: &[(&str, String)]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let o = &r.obs;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.beta),
            num(r.tau),
            o.mode.index(),
            num(o.n_mean),
            num(o.sigma_n),
            num(o.iup),
            num(o.purity),
            num(o.z),
            num(o.chi),
            num(r.ratio)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(betas: Vec<f64>, taus: Vec<f64>) -> SweepConfig {
        SweepConfig {
            betas,
            taus,
            pipeline: Pipeline::Analytic,
            dt: None,
        }
    }

    #[test]
    fn single_point_gives_two_rows() {
        let rows = sweep(&cfg(vec![1.0], vec![2.0]), Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].obs.mode.index(), 1);
        assert_eq!(rows[1].obs.mode.index(), 2);
    }

    #[test]
    fn ordering_is_beta_then_tau() {
        let rows = sweep(&cfg(vec![0.5, 2.0], vec![0.5, 1.0, 1.5]), Execution::default()).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.beta, r.tau)).collect();
        assert_eq!(keys[0], (0.5, 0.5));
        assert_eq!(keys[5], (0.5, 1.5));
        assert_eq!(keys[6], (2.0, 0.5));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(sweep(&cfg(vec![], vec![1.0]), Execution::Sequential).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let c = cfg(vec![0.2, 1.0, 3.0, 10.0], vec![0.1, 1.0, 2.0]);
        let a = sweep(&c, Execution::Parallel).unwrap();
        let b = sweep(&c, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
