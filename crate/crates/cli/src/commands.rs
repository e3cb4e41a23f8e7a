use serde_json::json;

use roqam::costing::{roqam_total_t, RoqamCostConfig, StepCostOptions};
use roqam::emulation::{default_timestep, max_timestep, Budget, NoiseModel};
use roqam::exact::{diagonalize, GroundPair, Spectrum};
use roqam::fermion::{build_siam, two_site_dmft_params, FermionHamiltonian};
use roqam::greens::{
    exact_greens_estimate, exact_thermal_estimate, mean_relative_error, median, roqam_greens_diagonal,
    select_convergence_inputs, thermal_greens, Axis, FrequencyGrid, GreensEstimate, RoqamConfig,
    DEFAULT_IMAG_MAX, DEFAULT_IMAG_POINTS, DEFAULT_REAL_POINTS,
};
use roqam::qsvt::{qsvt_sweep, ErrorTarget};
use roqam::{Error, Result};

use crate::config::RunConfig;
use crate::output::{Cell, Payload, Table};

/// Trace-formula reference columns are produced up to this bath size.
const TRACE_REFERENCE_MAX_BATH: usize = 2;
/// Depth cap when searching for the ROQAM convergence inputs.
const SELECTION_MAX_DEPTH: usize = 12;

pub struct Model {
    pub h: FermionHamiltonian,
    pub spec: Spectrum,
    pub ground: GroundPair,
}

pub fn model(cfg: &RunConfig, n_bath: usize) -> Result<Model> {
    let mut params = two_site_dmft_params(cfg.u, n_bath)?;
    params.bandwidth = cfg.bandwidth;
    let h = build_siam(&params)?;
    let spec = diagonalize(h.dense.as_ref())?;
    let ground = spec.ground();
    Ok(Model { h, spec, ground })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn grid(cfg: &RunConfig, default_axis: Axis) -> Result<FrequencyGrid> {
    match cfg.axis_or(default_axis)? {
        Axis::Real => {
            let w = cfg.u / 2.0 + 4.0;
            let lo = cfg.omega_min.unwrap_or(-w);
            let hi = cfg.omega_max.unwrap_or(w);
            FrequencyGrid::real(lo, hi, cfg.points.unwrap_or(DEFAULT_REAL_POINTS), cfg.gamma)
        }
        Axis::Imaginary => {
            let n = cfg.points.unwrap_or(DEFAULT_IMAG_POINTS);
            let hi = cfg.omega_max.unwrap_or(DEFAULT_IMAG_MAX);
            match cfg.omega_min {
                Some(lo) => FrequencyGrid::new(Axis::Imaginary, linspace(lo, hi, n), 0.0),
                None => FrequencyGrid::imaginary(hi, n),
            }
        }
    }
}

fn roqam_config(cfg: &RunConfig, noise: NoiseModel) -> Result<RoqamConfig> {
    let mut rc = RoqamConfig::new(noise);
    rc.dt = cfg.dt()?;
    rc.repair = cfg.repair()?;
    Ok(rc)
}

fn noise(cfg: &RunConfig, budget: Budget, delta1: f64, seed: u64, r: usize) -> NoiseModel {
    if delta1 == 0.0 {
        NoiseModel::noiseless(r)
    } else {
        NoiseModel { budget, delta_base: delta1, seed: cfg.seed.wrapping_add(seed), r }
    }
}

fn value_cells(est: &GreensEstimate, k: usize, with_a: bool) -> Vec<Cell> {
    let g = est.values[k];
    let mut cells = vec![Cell::Num(g.re), Cell::Num(g.im)];
    if with_a {
        cells.push(Cell::Num(-g.im / std::f64::consts::PI));
    }
    cells
}

fn value_columns(prefix: &str, with_a: bool) -> Vec<String> {
    let mut cols = vec![format!("{prefix}_re"), format!("{prefix}_im")];
    if with_a {
        cols.push(format!("{prefix}_A"));
    }
    cols
}

/// Exact and ROQAM estimates at each requested depth.
pub fn spectral(cfg: &RunConfig) -> Result<Payload> {
    let m = model(cfg, cfg.n_bath)?;
    let grid = grid(cfg, Axis::Real)?;
    let with_a = grid.axis == Axis::Real;
    let exact = exact_greens_estimate(&m.spec, &m.ground, cfg.p, cfg.p, &grid)?;
    let mut estimates = Vec::new();
    for &r in &cfg.depths {
        let rc = roqam_config(cfg, noise(cfg, cfg.budget()?, cfg.delta1, 0, r))?;
        estimates.push((r, roqam_greens_diagonal(&m.spec, &m.ground, cfg.p, &grid, &rc)?));
    }
    let mut table = Table::default();
    table.columns.push("omega".into());
    table.columns.extend(value_columns("exact", with_a));
    for (r, _) in &estimates {
        table.columns.extend(value_columns(&format!("depth{r}"), with_a));
    }
    for (r, est) in &estimates {
        table.note(&format!("relative_error_depth{r}"), mean_relative_error(est, &exact)?);
        for n in &est.notes {
            table.note(&format!("status_depth{r}"), n);
        }
    }
    for k in 0..grid.len() {
        let mut row = vec![Cell::Num(grid.points[k])];
        row.extend(value_cells(&exact, k, with_a));
        for (_, est) in &estimates {
            row.extend(value_cells(est, k, with_a));
        }
        table.push(row);
    }
    Ok(Payload::Table(table))
}

fn median_error(
    m: &Model,
    cfg: &RunConfig,
    grid: &FrequencyGrid,
    exact: &GreensEstimate,
    budget: Budget,
    delta1: f64,
    r: usize,
) -> Result<f64> {
    let seeds = if delta1 == 0.0 { 1 } else { cfg.seeds };
    let errs = (0..seeds as u64)
        .map(|s| {
            let rc = roqam_config(cfg, noise(cfg, budget, delta1, s, r))?;
            mean_relative_error(&roqam_greens_diagonal(&m.spec, &m.ground, cfg.p, grid, &rc)?, exact)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(median(&errs))
}

/// Error versus depth, noiseless and for each noise level.
pub fn convergence(cfg: &RunConfig) -> Result<Payload> {
    let m = model(cfg, cfg.n_bath)?;
    let grid = grid(cfg, Axis::Real)?;
    let exact = exact_greens_estimate(&m.spec, &m.ground, cfg.p, cfg.p, &grid)?;
    let budget = cfg.budget()?;
    let mut cols = vec!["depth".to_string(), "error_noiseless".to_string()];
    cols.extend(cfg.deltas.iter().map(|d| format!("error_seeded_median_{d:e}")));
    let mut table = Table { columns: cols, ..Default::default() };
    for r in 1..=cfg.r_max {
        let mut row = vec![Cell::from(r), Cell::Num(median_error(&m, cfg, &grid, &exact, budget, 0.0, r)?)];
        for &d in &cfg.deltas {
            row.push(Cell::Num(median_error(&m, cfg, &grid, &exact, budget, d, r)?));
        }
        table.push(row);
    }
    Ok(Payload::Table(table))
}

/// Error versus time step on `(0, 1.5 x bound]`.
pub fn timestep_scan(cfg: &RunConfig) -> Result<Payload> {
    let m = model(cfg, cfg.n_bath)?;
    let grid = grid(cfg, Axis::Real)?;
    let exact = exact_greens_estimate(&m.spec, &m.ground, cfg.p, cfg.p, &grid)?;
    let bound = max_timestep(m.spec.norm());
    let r = cfg.r.unwrap_or(4);
    let budget = cfg.budget()?;
    let mut table = Table::new(&["dt", "error"]);
    table.note("no_aliasing_bound", bound);
    for k in 1..=cfg.dt_points {
        let dt = 1.5 * bound * k as f64 / cfg.dt_points as f64;
        let mut local = cfg.clone();
        local.dt = dt.to_string();
        let err = match median_error(&m, &local, &grid, &exact, budget, cfg.delta1, r) {
            Ok(e) => Cell::Num(e),
            Err(Error::Singular(_) | Error::Infeasible(_) | Error::Eigen(_)) => Cell::Empty,
            Err(e) => return Err(e),
        };
        table.push(vec![Cell::Num(dt), err]);
    }
    Ok(Payload::Table(table))
}

/// Median errors under the three budgets at a fixed first-moment level.
pub fn budget_compare(cfg: &RunConfig) -> Result<Payload> {
    if cfg.delta1 <= 0.0 {
        return Err(Error::Validation("delta1: budget comparison needs a positive noise level".into()));
    }
    let m = model(cfg, cfg.n_bath)?;
    let grid = grid(cfg, Axis::Real)?;
    let exact = exact_greens_estimate(&m.spec, &m.ground, cfg.p, cfg.p, &grid)?;
    let mut table = Table::new(&["depth", "eb1_median", "eb2_median", "eb3_median"]);
    table.note("seeds", cfg.seeds);
    for r in 1..=cfg.r_max {
        let mut row = vec![Cell::from(r)];
        for b in [Budget::Eb1, Budget::Eb2, Budget::Eb3] {
            row.push(Cell::Num(median_error(&m, cfg, &grid, &exact, b, cfg.delta1, r)?));
        }
        table.push(row);
    }
    Ok(Payload::Table(table))
}

/// Thermal Green's function from the doubled-space run, with references.
pub fn thermal(cfg: &RunConfig) -> Result<Payload> {
    let beta = cfg.beta.ok_or_else(|| Error::Validation("beta: required for the thermal command".into()))?;
    let m = model(cfg, cfg.n_bath)?;
    let grid = grid(cfg, Axis::Real)?;
    let with_a = grid.axis == Axis::Real;
    let r = cfg.r.unwrap_or(64);
    let mut rc = roqam_config(cfg, noise(cfg, cfg.budget()?, cfg.delta1, 0, r))?;
    if rc.dt.is_none() {
        // the doubled generator spans [-spread, spread]
        let spread = m.spec.eigenvalues[m.spec.dim() - 1] - m.spec.eigenvalues[0];
        rc.dt = Some(0.9 * max_timestep(spread));
    }
    let est = thermal_greens(&m.spec, beta, cfg.p, cfg.p, &grid, &rc)?;
    let zero_t = exact_greens_estimate(&m.spec, &m.ground, cfg.p, cfg.p, &grid)?;
    let trace = (cfg.n_bath <= TRACE_REFERENCE_MAX_BATH)
        .then(|| exact_thermal_estimate(&m.spec, beta, cfg.p, cfg.p, &grid))
        .transpose()?;
    let mut table = Table::default();
    table.columns.push("omega".into());
    table.columns.extend(value_columns("thermal", with_a));
    if trace.is_some() {
        table.columns.extend(value_columns("trace", with_a));
    }
    table.columns.extend(value_columns("zero_t", with_a));
    table.note("dt", rc.dt.unwrap_or_default());
    if let Some(t) = &trace {
        table.note("max_deviation_from_trace", est.values.iter().zip(&t.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    for k in 0..grid.len() {
        let mut row = vec![Cell::Num(grid.points[k])];
        row.extend(value_cells(&est, k, with_a));
        if let Some(t) = &trace {
            row.extend(value_cells(t, k, with_a));
        }
        row.extend(value_cells(&zero_t, k, with_a));
        table.push(row);
    }
    Ok(Payload::Table(table))
}

/// Which resource estimate to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Roqam,
    Qsvt,
    Compare,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Roqam => "roqam",
            Method::Qsvt => "qsvt",
            Method::Compare => "compare",
        }
    }
}

fn trotter_dt(cfg: &RunConfig, spec: &Spectrum) -> Result<f64> {
    Ok(cfg.dt()?.unwrap_or_else(|| default_timestep(spec.norm())))
}

fn roqam_report(cfg: &RunConfig, m: &Model) -> Result<(serde_json::Value, u64)> {
    let grid = grid(cfg, Axis::Imaginary)?;
    let budget = cfg.budget()?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|s| cfg.seed.wrapping_add(s)).collect();
    let choice = select_convergence_inputs(&m.spec, &m.ground, cfg.p, &grid, cfg.target, budget, &seeds, SELECTION_MAX_DEPTH)?;
    let cost_cfg = RoqamCostConfig {
        r: choice.r,
        delta1: choice.delta1,
        budget,
        p: cfg.p,
        options: StepCostOptions::new(trotter_dt(cfg, &m.spec)?),
    };
    let (report, plans) = roqam_total_t(&m.h, &m.spec, &m.ground, &cost_cfg)?;
    let t = report.t_count;
    let plans: Vec<_> = plans.iter().map(|(branch, plan)| json!({ "branch": branch, "plan": plan })).collect();
    Ok((json!({ "selection": choice, "report": report.to_json(), "plans": plans }), t))
}

fn breakdown_table(report: &roqam::costing::ResourceReport) -> Table {
    let mut table = Table::new(&["label", "t_count"]);
    for (label, t) in &report.breakdown {
        table.push(vec![Cell::Text(label.clone()), Cell::from(*t)]);
    }
    table.push(vec![Cell::Text("total".into()), Cell::from(report.t_count)]);
    table
}

pub fn resources(cfg: &RunConfig, method: Method) -> Result<Payload> {
    match method {
        Method::Roqam => {
            let m = model(cfg, cfg.n_bath)?;
            let (json, _) = roqam_report(cfg, &m)?;
            let report: roqam::costing::ResourceReport =
                serde_json::from_value(json["report"].clone()).expect("report round-trips");
            let mut table = breakdown_table(&report);
            table.note("r", &json["selection"]["r"]);
            table.note("delta1", &json["selection"]["delta1"]);
            Ok(Payload::Report { json, table })
        }
        Method::Qsvt => {
            let m = model(cfg, cfg.n_bath)?;
            let grid = grid(cfg, Axis::Imaginary)?;
            let sweep = qsvt_sweep(&m.h, &m.spec, &m.ground, cfg.p, &grid, ErrorTarget::Relative(cfg.target))?;
            let mut table = Table::new(&["omega", "kappa", "degree", "t_count"]);
            for p in &sweep.points {
                table.push(vec![Cell::Num(p.omega), Cell::Num(p.kappa), Cell::from(p.degree), Cell::from(p.t_count)]);
            }
            table.note("total_t_count", sweep.total.t_count);
            table.note("hardest_t_count", sweep.hardest.t_count);
            if !sweep.infeasible.is_empty() {
                table.note("infeasible", format!("{:?}", sweep.infeasible));
            }
            let json = json!({
                "total": sweep.total.to_json(),
                "hardest": sweep.hardest.to_json(),
                "points": sweep.points,
                "infeasible": sweep.infeasible,
            });
            Ok(Payload::Report { json, table })
        }
        Method::Compare => {
            let mut table = Table::new(&["n_bath", "roqam_t", "qsvt_total_100", "qsvt_total_1000", "qsvt_hardest"]);
            let hi = cfg.omega_max.unwrap_or(DEFAULT_IMAG_MAX);
            for n_bath in 1..=cfg.n_bath_max {
                let m = model(cfg, n_bath)?;
                let (_, roqam_t) = roqam_report(cfg, &m)?;
                let target = ErrorTarget::Relative(cfg.target);
                let coarse = qsvt_sweep(&m.h, &m.spec, &m.ground, cfg.p, &FrequencyGrid::imaginary(hi, 100)?, target)?;
                let fine = qsvt_sweep(&m.h, &m.spec, &m.ground, cfg.p, &FrequencyGrid::imaginary(hi, 1000)?, target)?;
                let hardest = coarse.hardest.t_count.max(fine.hardest.t_count);
                table.push(vec![
                    Cell::from(n_bath),
                    Cell::from(roqam_t),
                    Cell::from(coarse.total.t_count),
                    Cell::from(fine.total.t_count),
                    Cell::from(hardest),
                ]);
            }
            Ok(Payload::Table(table))
        }
    }
}
