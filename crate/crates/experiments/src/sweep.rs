//! λ and τ sweeps over noisy draws.
//!
//! For every scenario (grid configuration × offset) the Lasso is swept over
//! `λ_k = λ_max·k/count`, `k = 1..count`, with `λ_max = ‖Φ_Xᵀy₀‖_∞`. The SR-Lasso is
//! then swept over τ at the Lasso minimizer `λ*`. C-BP, when requested, uses the
//! Lasso λ grid.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use srlasso::{
    build_cbp_design, build_sr_design, forward, lambda_max, lasso_design, lasso_measure, mmd_distance, recover_measure,
    solve_cbp, solve_group_lasso, DesignMatrix, DiscreteMeasure, Error, Grid, MeasurementOperator, SolveResult,
    SolverConfig,
};

use crate::error::RunError;
use crate::noise::add_noise;
use crate::spec::{ExperimentSpec, Method};

/// One grid configuration paired with one offset pattern.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid_index: usize,
    pub offset_index: usize,
    pub grid: Grid,
    pub offsets: Vec<f64>,
    pub mu0: DiscreteMeasure,
    pub y0: DVector<f64>,
    pub lambda_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrawRecord {
    pub draw: usize,
    pub mmd: f64,
    pub support_size: usize,
    pub converged: bool,
}

/// All draws for one `(scenario, method, λ, τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub scenario: usize,
    pub method: Method,
    /// Position of the cell within its method's sweep.
    pub index: usize,
    pub lambda: f64,
    /// τ per axis (SR-Lasso only).
    pub tau: Option<Vec<f64>>,
    pub draws: Vec<DrawRecord>,
}

impl Cell {
    pub fn converged(&self) -> bool {
        self.draws.iter().all(|d| d.converged)
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().map(|d| d.mmd).sum::<f64>() / self.draws.len() as f64
    }

    /// Sample standard deviation; zero for a single draw.
    pub fn std(&self) -> f64 {
        let n = self.draws.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.draws.iter().map(|d| (d.mmd - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub scenarios: Vec<Scenario>,
    /// Sorted by scenario, method, then index.
    pub cells: Vec<Cell>,
}

impl SweepResult {
    pub fn curve(&self, scenario: usize, method: Method) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.scenario == scenario && c.method == method)
    }

    /// Converged cell with the smallest mean error; ties go to the earlier cell.
    pub fn argmin(&self, scenario: usize, method: Method) -> Option<&Cell> {
        let mut best: Option<&Cell> = None;
        for c in self.curve(scenario, method).filter(|c| c.converged()) {
            if best.is_none_or(|b| c.mean() < b.mean()) {
                best = Some(c);
            }
        }
        best
    }

    pub fn lambda_star(&self, scenario: usize) -> Option<f64> {
        self.argmin(scenario, Method::Lasso).map(|c| c.lambda)
    }

    pub fn tau_star(&self, scenario: usize) -> Option<&[f64]> {
        self.argmin(scenario, Method::Srlasso).and_then(|c| c.tau.as_deref())
    }

    pub fn not_converged_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.converged()).count()
    }

    /// Index of the scenario with the given grid configuration and offset pattern.
    pub fn scenario_index(&self, grid_index: usize, offset_index: usize) -> Option<usize> {
        self.scenarios.iter().position(|s| s.grid_index == grid_index && s.offset_index == offset_index)
    }
}

pub fn scenarios(spec: &ExperimentSpec, op: &dyn MeasurementOperator) -> Result<Vec<Scenario>, RunError> {
    let mut out = Vec::new();
    for gi in 0..spec.grid.points.len() {
        let grid = spec.grid(gi)?;
        let lasso = lasso_design(op, &grid)?;
        for oi in 0..spec.truth.offsets.len() {
            let mu0 = spec.truth_measure(gi, oi)?;
            let y0 = forward(op, &mu0)?;
            let lambda_max = lambda_max(&lasso, &y0);
            out.push(Scenario {
                grid_index: gi,
                offset_index: oi,
                grid: grid.clone(),
                offsets: spec.truth.offsets[oi].clone(),
                mu0,
                y0,
                lambda_max,
            });
        }
    }
    Ok(out)
}

/// `λ_max·k/count` for `k = 1..=count`.
pub fn lambda_grid(lambda_max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| lambda_max * k as f64 / count as f64).collect()
}

/// Cartesian product of `count` uniform points on `[0, tau_max]` per axis, first axis slowest.
pub fn tau_grid(dims: usize, count: usize, tau_max: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..count).map(|i| tau_max * i as f64 / (count - 1) as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&t| {
                    let mut v = prefix.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}

fn unwrap_solve(r: srlasso::Result<SolveResult>) -> Result<(SolveResult, bool), RunError> {
    match r {
        Ok(res) => Ok((res, true)),
        Err(Error::NotConverged { best }) => Ok((*best, false)),
        Err(e) => Err(e.into()),
    }
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    rho_rel: f64,
    draws: usize,
    seed: u64,
}

impl Context<'_> {
    fn config(&self, lambda: f64) -> SolverConfig {
        let s = self.spec.sweep.as_ref().expect("validated sweep section");
        let mut cfg = SolverConfig::new(lambda);
        if let Some(t) = s.gap_tol {
            cfg = cfg.with_gap_tol(t);
        }
        if let Some(m) = s.max_iters {
            cfg = cfg.with_max_iters(m);
        }
        cfg
    }

    fn observation(&self, sc: &Scenario, draw: usize) -> DVector<f64> {
        add_noise(&sc.y0, self.rho_rel, self.seed, draw as u64)
    }

    fn record(
        &self,
        sc: &Scenario,
        draw: usize,
        mu: &DiscreteMeasure,
        converged: bool,
    ) -> Result<DrawRecord, RunError> {
        Ok(DrawRecord { draw, mmd: mmd_distance(mu, &sc.mu0)?, support_size: mu.len(), converged })
    }

    fn lasso_cell(
        &self,
        si: usize,
        sc: &Scenario,
        design: &DesignMatrix,
        k: usize,
        lambda: f64,
    ) -> Result<Cell, RunError> {
        let cfg = self.config(lambda);
        let draws = (0..self.draws)
            .map(|d| {
                let (res, ok) = unwrap_solve(solve_group_lasso(design, &self.observation(sc, d), &cfg))?;
                self.record(sc, d, &lasso_measure(&sc.grid, &res.z, cfg.support_tol), ok)
            })
            .collect::<Result<_, _>>()?;
        Ok(Cell { scenario: si, method: Method::Lasso, index: k, lambda, tau: None, draws })
    }

    fn cbp_cell(
        &self,
        si: usize,
        sc: &Scenario,
        op: &dyn MeasurementOperator,
        k: usize,
        lambda: f64,
    ) -> Result<Cell, RunError> {
        let design = build_cbp_design(op, &sc.grid)?;
        let cfg = self.config(lambda);
        let draws = (0..self.draws)
            .map(|d| match solve_cbp(&design, &self.observation(sc, d), &cfg) {
                Ok(sol) => self.record(sc, d, &sol.measure, true),
                Err(Error::NotConverged { best }) => {
                    let n = sc.grid.len();
                    let (r, l) = best.z.data().split_at(n);
                    let (_, _, mu) = srlasso::cbp::cbp_from_rl(&design, r, l, cfg.support_tol);
                    self.record(sc, d, &mu, false)
                }
                Err(e) => Err(e.into()),
            })
            .collect::<Result<_, _>>()?;
        Ok(Cell { scenario: si, method: Method::Cbp, index: k, lambda, tau: None, draws })
    }

    fn sr_cell(
        &self,
        si: usize,
        sc: &Scenario,
        op: &Arc<dyn MeasurementOperator>,
        k: usize,
        lambda: f64,
        tau: &[f64],
    ) -> Result<Cell, RunError> {
        let design = build_sr_design(op.clone(), &sc.grid, tau)?;
        let cfg = self.config(lambda);
        let draws = (0..self.draws)
            .map(|d| {
                let (res, ok) = unwrap_solve(solve_group_lasso(design.matrix(), &self.observation(sc, d), &cfg))?;
                self.record(sc, d, &recover_measure(&design, &res.z, cfg.support_tol).measure, ok)
            })
            .collect::<Result<_, _>>()?;
        Ok(Cell { scenario: si, method: Method::Srlasso, index: k, lambda, tau: Some(tau.to_vec()), draws })
    }
}

/// Runs every requested sweep on the current rayon pool.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult, RunError> {
    let sweep = spec.sweep.as_ref().ok_or_else(|| crate::error::SpecError::Invalid {
        field: "sweep".into(),
        message: "section is required for run".into(),
    })?;
    let noise = spec.noise.as_ref().expect("validated noise section");
    let op = spec.build_operator()?;
    let scen = scenarios(spec, op.as_ref())?;
    let ctx = Context { spec, rho_rel: noise.rho_rel, draws: noise.draws, seed: sweep.seed };
    let methods = &sweep.methods;

    let mut first_jobs = Vec::new();
    for (si, sc) in scen.iter().enumerate() {
        for (k, lam) in lambda_grid(sc.lambda_max, sweep.lambda_count).into_iter().enumerate() {
            for &m in methods.iter().filter(|m| matches!(m, Method::Lasso | Method::Cbp)) {
                first_jobs.push((si, m, k, lam));
            }
        }
    }
    let designs: Vec<DesignMatrix> =
        scen.iter().map(|sc| lasso_design(op.as_ref(), &sc.grid)).collect::<Result<_, _>>()?;
    let mut cells: Vec<Cell> = first_jobs
        .par_iter()
        .map(|&(si, m, k, lam)| match m {
            Method::Lasso => ctx.lasso_cell(si, &scen[si], &designs[si], k, lam),
            _ => ctx.cbp_cell(si, &scen[si], op.as_ref(), k, lam),
        })
        .collect::<Result<_, _>>()?;

    if methods.contains(&Method::Srlasso) {
        let partial = SweepResult { scenarios: Vec::new(), cells: cells.clone() };
        let taus = tau_grid(spec.dims(), sweep.tau_count, spec.tau_max());
        let mut jobs = Vec::new();
        for si in 0..scen.len() {
            if let Some(lam) = partial.lambda_star(si) {
                for (k, t) in taus.iter().enumerate() {
                    jobs.push((si, k, lam, t));
                }
            }
        }
        let sr: Vec<Cell> = jobs
            .par_iter()
            .map(|&(si, k, lam, t)| ctx.sr_cell(si, &scen[si], &op, k, lam, t))
            .collect::<Result<_, _>>()?;
        cells.extend(sr);
    }
    cells.sort_by_key(|c| (c.scenario, c.method, c.index));
    Ok(SweepResult { scenarios: scen, cells })
}
