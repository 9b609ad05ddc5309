//! Data series behind the four figures.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::fmt::num;
use crate::error::{Error, Result};
use crate::model::{DerivedParams, Mode, ModelParams};
use crate::multiscale::coefficient_tables;
use crate::observables::{iup_closed, mean_quanta_closed};
use crate::photonstats::{default_cutoff, pdf, prob_below_mean};
use crate::pipeline::{compare_envelopes, linspace, numeric_kappa, numeric_observables, Pipeline};
use crate::symplectic::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureName {
    /// `λ₁⁽¹¹⁾(t)`, analytic over numeric.
    Fig1,
    /// `ln(1 + n̄_m)` against `τ`.
    Fig2,
    /// `Z_m(τ)`.
    Fig3,
    /// Photon distributions at one slow time.
    Fig4,
}

impl std::str::FromStr for FigureName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fig1" => Ok(FigureName::Fig1),
            "fig2" => Ok(FigureName::Fig2),
            "fig3" => Ok(FigureName::Fig3),
            "fig4" => Ok(FigureName::Fig4),
            other => Err(format!("unknown figure `{other}` (fig1..fig4)")),
        }
    }
}

pub const FIG1_GAMMA0: f64 = 4.0;
pub const FIG1_KAPPA0: f64 = 1.0;
pub const FIG1_EPSILON: f64 = 0.01;
pub const FIG1_TAU_MAX: f64 = 3.0;
pub const FIG23_BETAS: [f64; 3] = [0.2, 0.5, 1.0];
/// Not stated with the original plots; chosen to show the growth and the beats.
pub const FIG23_TAU_MAX: f64 = 4.0;
pub const FIG23_SAMPLES: usize = 401;
pub const FIG4_BETA: f64 = 1.0;
pub const FIG4_TAU: f64 = 2.0;

/// Overrides for the defaults above.
#[derive(Debug, Clone, Default)]
pub struct FigureOptions {
    /// fig1: model parameters; fig4: `β` taken from them.
    pub params: Option<ModelParams>,
    /// fig1–fig3: end of the `τ` axis; fig4: the slow time of the snapshot.
    pub tau_max: Option<f64>,
    pub samples: Option<usize>,
    pub pipeline: Pipeline,
    pub dt: Option<f64>,
}

/// Columns of numbers with `#` metadata, written as CSV or JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

pub fn figure(name: FigureName, opts: &FigureOptions) -> Result<Table> {
    match name {
        FigureName::Fig1 => fig1(opts),
        FigureName::Fig2 => fig23(opts, false),
        FigureName::Fig3 => fig23(opts, true),
        FigureName::Fig4 => fig4(opts),
    }
}

fn fig1(opts: &FigureOptions) -> Result<Table> {
    let p = match opts.params {
        Some(p) => p,
        None => ModelParams::from_scaled(FIG1_EPSILON, FIG1_GAMMA0, FIG1_KAPPA0)?,
    };
    let tau_max = opts.tau_max.unwrap_or(FIG1_TAU_MAX);
    let dt = opts.dt.unwrap_or(IntegratorConfig::for_params(&p).dt);
    IntegratorConfig { dt, stride: 1 }.validate(&p)?;
    let d = p.derive()?;
    let cmp = compare_envelopes(&p, &coefficient_tables(&d), tau_max, dt)?;
    let mut t = Table::new(&["t", "tau", "L11_numeric", "L11_analytic"]);
    t.meta("figure", "fig1");
    t.meta("gamma", num(p.gamma()));
    t.meta("kappa", num(p.kappa()));
    t.meta("beta", num(p.beta()));
    t.meta("dt", num(dt));
    t.meta("envelope_max_rel_error", num(cmp.max_relative_error(tau_max)));
    for ((&time, &n), &a) in cmp.times.iter().zip(&cmp.numeric).zip(&cmp.analytic) {
        t.rows.push(vec![time, p.slow_time(time), n, a]);
    }
    Ok(t)
}

fn fig23(opts: &FigureOptions, z: bool) -> Result<Table> {
    let taus = linspace(
        0.0,
        opts.tau_max.unwrap_or(FIG23_TAU_MAX),
        opts.samples.unwrap_or(FIG23_SAMPLES),
    )?;
    let (closed, numeric) = match opts.pipeline {
        Pipeline::Analytic => (true, false),
        Pipeline::Numeric => (false, true),
        Pipeline::Both => (true, true),
    };
    let prefix = if z { "Z" } else { "Y" };
    let mut cols = vec!["beta".to_string(), "tau".to_string()];
    if closed {
        cols.extend([format!("{prefix}1"), format!("{prefix}2")]);
    }
    if numeric {
        cols.extend([format!("{prefix}1_numeric"), format!("{prefix}2_numeric")]);
    }
    let mut t = Table {
        metadata: BTreeMap::new(),
        columns: cols,
        rows: Vec::new(),
    };
    t.meta("figure", if z { "fig3" } else { "fig2" });
    t.meta("pipeline", opts.pipeline.as_str());
    let pick = |o: &crate::observables::ModeObservables| {
        if z {
            o.z
        } else {
            o.n_mean.ln_1p()
        }
    };
    for beta in FIG23_BETAS {
        let closed_rows = if closed {
            Some(crate::pipeline::closed_observables(&DerivedParams::for_beta(beta)?, &taus)?)
        } else {
            None
        };
        let numeric_rows = if numeric {
            let p = ModelParams::from_beta(beta, numeric_kappa(beta))?;
            let dt = opts.dt.unwrap_or(IntegratorConfig::for_params(&p).dt);
            Some(numeric_observables(&p, &taus, dt)?)
        } else {
            None
        };
        for (i, &tau) in taus.iter().enumerate() {
            let mut row = vec![beta, tau];
            for rows in [&closed_rows, &numeric_rows].into_iter().flatten() {
                row.push(pick(&rows[i].modes[0]));
                row.push(pick(&rows[i].modes[1]));
            }
            t.rows.push(row);
        }
    }
    Ok(t)
}

fn fig4(opts: &FigureOptions) -> Result<Table> {
    let beta = opts.params.map(|p| p.beta()).unwrap_or(FIG4_BETA);
    let tau = opts.tau_max.unwrap_or(FIG4_TAU);
    if !(tau > 0.0) {
        return Err(Error::InvalidGrid(format!("fig4 needs tau > 0, got {tau}")));
    }
    let d = DerivedParams::for_beta(beta)?;
    let iup = iup_closed(tau, &d);
    let n1 = mean_quanta_closed(tau, &d, Mode::Field)?;
    let n2 = mean_quanta_closed(tau, &d, Mode::Detector)?;
    let k_max = default_cutoff(n1.max(n2));
    let p1 = pdf(n1, iup, k_max)?;
    let p2 = pdf(n2, iup, k_max)?;
    let mut t = Table::new(&["k", "P1", "P2"]);
    t.meta("figure", "fig4");
    t.meta("beta", num(beta));
    t.meta("tau", num(tau));
    t.meta("n1", num(n1));
    t.meta("n2", num(n2));
    t.meta("D", num(iup));
    t.meta("prob1_below_mean", num(prob_below_mean(&p1, n1)));
    t.meta("prob2_below_mean", num(prob_below_mean(&p2, n2)));
    t.meta("tail1", num(p1.tail_mass));
    t.meta("tail2", num(p2.tail_mass));
    for k in 0..=k_max {
        t.rows.push(vec![k as f64, p1.get(k), p2.get(k)]);
    }
    Ok(t)
}
