//! T-gate costing of ROQAM moment estimation: product-formula evolution,
//! directly evaluated Trotter error, amplitude-estimation query bounds,
//! rotation synthesis and the per-power step-cost scan.

use std::collections::BTreeMap;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::emulation::{error_budget, Budget, NoiseModel};
use crate::error::{invalid, Error, Result};
use crate::exact::{GroundPair, Spectrum};
use crate::fermion::{apply_ladder, FermionHamiltonian, Ladder, PauliMasks};
use crate::linalg::{inner, norm_sq, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrotterOrder {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
    #[serde(rename = "4")]
    Fourth,
}

impl TrotterOrder {
    pub const ALL: [TrotterOrder; 3] = [TrotterOrder::First, TrotterOrder::Second, TrotterOrder::Fourth];

    pub fn from_int(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            _ => invalid(format!("unsupported Trotter order {k} (expected 1, 2 or 4)")),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    /// Exponentials per step over `n_terms` terms.
    pub fn rotations_per_step(self, n_terms: usize) -> usize {
        let strang = (2 * n_terms).saturating_sub(1);
        match self {
            Self::First => n_terms,
            Self::Second => strang,
            Self::Fourth => 5 * strang,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterSpec {
    pub order: TrotterOrder,
    pub steps: usize,
    pub dt: f64,
}

/// Nonzero Pauli terms prepared for repeated application.
pub struct TermList {
    terms: Vec<(f64, PauliMasks)>,
    identity: f64,
    dim: usize,
}

impl TermList {
    pub fn new(h: &FermionHamiltonian) -> Result<Self> {
        let terms = h
            .terms
            .nonzero()
            .map(|t| Ok((t.coefficient, PauliMasks::parse(&t.word)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms, identity: h.identity, dim: h.dim() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `x <- exp(-i c tau P) x`.
    fn rotate(&self, k: usize, tau: f64, x: &mut [c64], scratch: &mut [c64]) {
        let (c, p) = self.terms[k];
        let (s, co) = (c * tau).sin_cos();
        for (i, &xi) in x.iter().enumerate() {
            let (j, ph) = p.act(i);
            scratch[j] = ph * xi;
        }
        let f = -I * s;
        for (xi, &pi) in x.iter_mut().zip(scratch.iter()) {
            *xi = *xi * co + f * pi;
        }
    }

    fn first(&self, tau: f64, x: &mut [c64], scratch: &mut [c64]) {
        for k in 0..self.len() {
            self.rotate(k, tau, x, scratch);
        }
    }

    fn strang(&self, tau: f64, x: &mut [c64], scratch: &mut [c64]) {
        let n = self.len();
        for k in 0..n {
            let w = if k + 1 == n { tau } else { tau / 2.0 };
            self.rotate(k, w, x, scratch);
        }
        for k in (0..n.saturating_sub(1)).rev() {
            self.rotate(k, tau / 2.0, x, scratch);
        }
    }

    fn step(&self, order: TrotterOrder, tau: f64, x: &mut [c64], scratch: &mut [c64]) {
        match order {
            TrotterOrder::First => self.first(tau, x, scratch),
            TrotterOrder::Second => self.strang(tau, x, scratch),
            TrotterOrder::Fourth => {
                let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
                for w in [p, p, 1.0 - 4.0 * p, p, p] {
                    self.strang(w * tau, x, scratch);
                }
            }
        }
        let phase = (-I * (self.identity * tau)).exp();
        for xi in x.iter_mut() {
            *xi *= phase;
        }
    }

    /// One application of the product formula for `exp(-i H dt)`.
    pub fn apply(&self, spec: &TrotterSpec, x: &mut [c64]) -> Result<()> {
        if spec.steps < 1 {
            return invalid("steps must be at least 1");
        }
        if x.len() != self.dim {
            return invalid("state has the wrong dimension");
        }
        let tau = spec.dt / spec.steps as f64;
        let mut scratch = vec![ZERO; self.dim];
        for _ in 0..spec.steps {
            self.step(spec.order, tau, x, &mut scratch);
        }
        Ok(())
    }
}

/// Dense dimension limit for [`trotter_unitary`].
pub const MAX_TROTTER_DIM: usize = 4096;

/// Dense product-formula approximation of `exp(-i H dt)`.
pub fn trotter_unitary(h: &FermionHamiltonian, spec: &TrotterSpec) -> Result<Mat<c64>> {
    let dim = h.dim();
    if dim > MAX_TROTTER_DIM {
        return Err(Error::DimensionCap(format!("dimension {dim} exceeds {MAX_TROTTER_DIM}")));
    }
    let terms = TermList::new(h)?;
    let mut u = Mat::<c64>::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|c| *c = ZERO);
        col[j] = c64::new(1.0, 0.0);
        terms.apply(spec, &mut col)?;
        for (i, &c) in col.iter().enumerate() {
            u[(i, j)] = c;
        }
    }
    Ok(u)
}

/// `exp(-i H t) x` through the eigenbasis.
fn evolve_exact(spec: &Spectrum, x: &[c64], t: f64) -> Vec<c64> {
    let c = spec.coefficients(x);
    let v = &spec.eigenvectors;
    let mut out = vec![ZERO; x.len()];
    for (n, &cn) in c.iter().enumerate() {
        let a = cn * (-I * (spec.eigenvalues[n] * t)).exp();
        if a == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += v[(i, n)] * a;
        }
    }
    out
}

fn normalized(chi: &[c64]) -> Result<Vec<c64>> {
    let n = norm_sq(chi).sqrt();
    if n == 0.0 {
        return invalid("starting state has zero norm");
    }
    Ok(chi.iter().map(|c| c / n).collect())
}

/// `|<chi|U_trot^l - U^l|chi>|` for powers `1..=max_l` of a normalized `chi`.
pub fn trotter_errors(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    chi: &[c64],
    max_l: usize,
    trotter: &TrotterSpec,
) -> Result<Vec<f64>> {
    let terms = TermList::new(h)?;
    let x = normalized(chi)?;
    let mut y = x.clone();
    let mut out = Vec::with_capacity(max_l);
    for l in 1..=max_l {
        terms.apply(trotter, &mut y)?;
        let exact = evolve_exact(spec, &x, trotter.dt * l as f64);
        out.push((inner(&x, &y) - inner(&x, &exact)).norm());
    }
    Ok(out)
}

pub fn trotter_error(h: &FermionHamiltonian, spec: &Spectrum, chi: &[c64], l: usize, trotter: &TrotterSpec) -> Result<f64> {
    if l < 1 {
        return invalid("power l must be at least 1");
    }
    Ok(trotter_errors(h, spec, chi, l, trotter)?[l - 1])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Iterative amplitude estimation queries
/// `ceil((0.8 / eps) log(2 / (p_fail log(pi / (4 eps)))))`.
pub fn iqae_queries(eps_qae: f64, p_fail: f64, base: LogBase) -> Result<u64> {
    if !(eps_qae > 0.0 && eps_qae < 1.0) || !(p_fail > 0.0 && p_fail < 1.0) {
        return invalid("eps_qae and p_fail must lie in (0, 1)");
    }
    let inner = base.log(std::f64::consts::PI / (4.0 * eps_qae));
    if !(inner > 0.0) {
        return invalid(format!("eps_qae = {eps_qae} is too large for the query bound"));
    }
    let outer = base.log(2.0 / (p_fail * inner));
    if !(outer > 0.0) {
        return invalid(format!("query bound is nonpositive at eps_qae = {eps_qae}, p_fail = {p_fail}"));
    }
    Ok((0.8 / eps_qae * outer).ceil() as u64)
}

/// T gates per synthesized single-qubit rotation at precision `eps_syn`.
pub fn rotation_t_cost(eps_syn: f64) -> Result<f64> {
    if !(eps_syn > 0.0 && eps_syn < 1.0) {
        return invalid("eps_syn must lie in (0, 1)");
    }
    Ok(0.53 * (1.0 / eps_syn).log2() + 4.86)
}

/// Queries to `U` per controlled-`U` when the state is not an eigenstate.
pub fn controlled_query_multiplier() -> u64 {
    2
}

/// Controlled-`U^l` applications per generalized Grover iterate.
pub const CONTROLLED_PER_ITERATE: u64 = 2;

/// Amplitude-estimation failure probability used by default.
pub const DEFAULT_P_FAIL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    pub orders: Vec<TrotterOrder>,
    /// Ascending step counts.
    pub steps: Vec<usize>,
    /// Fractions `(qae, trot, syn)` of `delta_l`.
    pub splits: Vec<(f64, f64, f64)>,
}

impl Default for CandidateGrid {
    fn default() -> Self {
        Self {
            orders: TrotterOrder::ALL.to_vec(),
            steps: (0..=10).map(|k| 1usize << k).collect(),
            splits: vec![
                (0.10, 0.45, 0.45),
                (0.45, 0.10, 0.45),
                (0.45, 0.45, 0.10),
                (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCostPlan {
    pub l: usize,
    pub delta_l: f64,
    pub trotter: TrotterSpec,
    pub eps_qae: f64,
    pub eps_trot: f64,
    pub eps_syn: f64,
    pub queries: u64,
    pub rotations: u64,
    pub t_count: u64,
}

impl StepCostPlan {
    pub fn is_feasible(&self) -> bool {
        self.eps_qae + self.eps_trot + self.eps_syn <= self.delta_l
    }
}

/// Settings shared by the per-power scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCostOptions {
    pub dt: f64,
    pub p_fail: f64,
    pub log_base: LogBase,
    pub grid: CandidateGrid,
}

impl StepCostOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, p_fail: DEFAULT_P_FAIL, log_base: LogBase::Natural, grid: CandidateGrid::default() }
    }
}

/// Cost of estimating one complex moment `<chi|U^l|chi>` to the given split.
fn plan_cost(l: usize, trotter: TrotterSpec, n_terms: usize, eps_qae: f64, eps_syn: f64, opts: &StepCostOptions) -> Result<(u64, u64, u64)> {
    let queries = iqae_queries(eps_qae, opts.p_fail, opts.log_base)?;
    let per_iterate = CONTROLLED_PER_ITERATE
        * controlled_query_multiplier()
        * l as u64
        * trotter.steps as u64
        * trotter.order.rotations_per_step(n_terms) as u64;
    // real and imaginary parts are separate estimates
    let rotations = 2 * queries * per_iterate;
    let per_rotation = rotation_t_cost(eps_syn / rotations.max(1) as f64)?;
    let t = (rotations as f64 * per_rotation).ceil() as u64;
    Ok((queries, rotations, t))
}

/// Trotter errors per (order, steps) for powers `1..=max_l`, filled lazily.
pub struct TrotterErrorCache<'a> {
    h: &'a FermionHamiltonian,
    spec: &'a Spectrum,
    chi: Vec<c64>,
    max_l: usize,
    dt: f64,
    cache: BTreeMap<(u32, usize), Vec<f64>>,
}

impl<'a> TrotterErrorCache<'a> {
    pub fn new(h: &'a FermionHamiltonian, spec: &'a Spectrum, chi: &[c64], max_l: usize, dt: f64) -> Self {
        Self { h, spec, chi: chi.to_vec(), max_l, dt, cache: BTreeMap::new() }
    }

    pub fn get(&mut self, order: TrotterOrder, steps: usize, l: usize) -> Result<f64> {
        let key = (order.as_int(), steps);
        if !self.cache.contains_key(&key) {
            let spec = TrotterSpec { order, steps, dt: self.dt };
            let errs = trotter_errors(self.h, self.spec, &self.chi, self.max_l, &spec)?;
            self.cache.insert(key, errs);
        }
        Ok(self.cache[&key][l - 1])
    }
}

fn scan(
    cache: &mut TrotterErrorCache<'_>,
    n_terms: usize,
    l: usize,
    delta_l: f64,
    opts: &StepCostOptions,
) -> Result<StepCostPlan> {
    if !(delta_l > 0.0) {
        return invalid("delta_l must be positive");
    }
    let mut best: Option<StepCostPlan> = None;
    for &order in &opts.grid.orders {
        for &(fq, ft, fs) in &opts.grid.splits {
            let (eps_qae, eps_syn) = (fq * delta_l, fs * delta_l);
            if eps_qae >= 1.0 || eps_syn >= 1.0 || ft <= 0.0 {
                continue;
            }
            // cost grows with steps, so the first feasible count is optimal
            for &steps in &opts.grid.steps {
                let eps_trot = cache.get(order, steps, l)?;
                if eps_qae + eps_trot + eps_syn > delta_l {
                    continue;
                }
                let trotter = TrotterSpec { order, steps, dt: opts.dt };
                let (queries, rotations, t_count) = plan_cost(l, trotter, n_terms, eps_qae, eps_syn, opts)?;
                let plan = StepCostPlan { l, delta_l, trotter, eps_qae, eps_trot, eps_syn, queries, rotations, t_count };
                if best.as_ref().is_none_or(|b| plan.t_count < b.t_count) {
                    best = Some(plan);
                }
                break;
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no candidate meets delta_{l} = {delta_l:e}")))
}

/// Cheapest candidate estimating `<chi|U^l|chi>` within `delta_l`.
pub fn optimize_step_cost(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    chi: &[c64],
    l: usize,
    delta_l: f64,
    opts: &StepCostOptions,
) -> Result<StepCostPlan> {
    if l < 1 {
        return invalid("power l must be at least 1");
    }
    let n_terms = h.terms.nonzero_count();
    let mut cache = TrotterErrorCache::new(h, spec, chi, l, opts.dt);
    scan(&mut cache, n_terms, l, delta_l, opts)
}

/// Labeled T-count report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub t_count: u64,
    pub rotation_count: u64,
    pub queries: u64,
    pub breakdown: BTreeMap<String, u64>,
    pub context: BTreeMap<String, Value>,
}

impl ResourceReport {
    pub fn add(&mut self, label: impl Into<String>, t: u64) {
        *self.breakdown.entry(label.into()).or_insert(0) += t;
        self.t_count += t;
    }

    pub fn to_json(&self) -> Value {
        json!(self)
    }
}

/// Inputs fixed beforehand by emulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoqamCostConfig {
    pub r: usize,
    pub delta1: f64,
    pub budget: Budget,
    pub p: usize,
    pub options: StepCostOptions,
}

/// Total T count over both branches and powers `1..=r`.
pub fn roqam_total_t(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    ground: &GroundPair,
    cfg: &RoqamCostConfig,
) -> Result<(ResourceReport, Vec<(String, StepCostPlan)>)> {
    let deltas = error_budget(&NoiseModel { budget: cfg.budget, delta_base: cfg.delta1, seed: 0, r: cfg.r })?;
    let n_terms = h.terms.nonzero_count();
    let mut report = ResourceReport::default();
    let mut plans = Vec::new();
    for (label, kind) in [("G+", Ladder::Create), ("G-", Ladder::Annihilate)] {
        let chi = apply_ladder(kind, cfg.p, &ground.psi0);
        if norm_sq(&chi) == 0.0 {
            continue;
        }
        let mut cache = TrotterErrorCache::new(h, spec, &chi, cfg.r, cfg.options.dt);
        for l in 1..=cfg.r {
            let plan = scan(&mut cache, n_terms, l, deltas[l - 1], &cfg.options)?;
            report.add(format!("{label} l={l}"), plan.t_count);
            report.rotation_count += plan.rotations;
            report.queries += plan.queries;
            plans.push((label.to_string(), plan));
        }
    }
    report.context.insert("method".into(), json!("roqam"));
    report.context.insert("r".into(), json!(cfg.r));
    report.context.insert("delta1".into(), json!(cfg.delta1));
    report.context.insert("budget".into(), json!(cfg.budget));
    report.context.insert("dt".into(), json!(cfg.options.dt));
    report.context.insert("n_terms".into(), json!(n_terms));
    Ok((report, plans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::diagonalize;
    use crate::fermion::{build_siam, two_site_dmft_params};
    use crate::linalg::max_abs_diff;
    use crate::testing::{expm, rng, random_state};

    fn siam1() -> (FermionHamiltonian, Spectrum) {
        let h = build_siam(&two_site_dmft_params(5.0, 1).unwrap()).unwrap();
        let s = diagonalize(h.dense.as_ref()).unwrap();
        (h, s)
    }

    fn exact_u(h: &FermionHamiltonian, dt: f64) -> Mat<c64> {
        expm(&h.dense, c64::new(0.0, -dt))
    }

    fn dist(h: &FermionHamiltonian, order: TrotterOrder, steps: usize, dt: f64) -> f64 {
        let u = trotter_unitary(h, &TrotterSpec { order, steps, dt }).unwrap();
        max_abs_diff(u.as_ref(), exact_u(h, dt).as_ref())
    }

    #[test]
    fn commuting_terms_are_exact() {
        let mut p = two_site_dmft_params(5.0, 2).unwrap();
        p.v = vec![0.0; 2];
        p.eps_bath = vec![1.0, -0.5];
        let h = build_siam(&p).unwrap();
        for order in TrotterOrder::ALL {
            assert!(dist(&h, order, 1, 0.7) < 1e-12);
        }
        let s = diagonalize(h.dense.as_ref()).unwrap();
        let chi = random_state(h.dim(), &mut rng(1));
        let spec = TrotterSpec { order: TrotterOrder::First, steps: 1, dt: 0.7 };
        assert!(trotter_errors(&h, &s, &chi, 4, &spec).unwrap().iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn product_formulas_are_unitary() {
        let (h, _) = siam1();
        for order in TrotterOrder::ALL {
            let u = trotter_unitary(&h, &TrotterSpec { order, steps: 3, dt: 0.5 }).unwrap();
            let g = u.adjoint() * &u;
            let id = Mat::<c64>::from_fn(16, 16, |i, j| if i == j { c64::new(1.0, 0.0) } else { ZERO });
            assert!(max_abs_diff(g.as_ref(), id.as_ref()) < 1e-10);
        }
    }

    #[test]
    fn convergence_orders() {
        let (h, _) = siam1();
        let e: Vec<f64> = [4, 8, 16].iter().map(|&s| dist(&h, TrotterOrder::Second, s, 0.5)).collect();
        for w in e.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.8, "{e:?}");
        }
        let e1: Vec<f64> = [100, 200, 400].iter().map(|&s| dist(&h, TrotterOrder::First, s, 0.5)).collect();
        for w in e1.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 1.0).abs() < 0.25, "{e1:?}");
        }
        assert!(dist(&h, TrotterOrder::Fourth, 1000, 0.5) < 1e-8);
        let f = [4, 8].map(|s| dist(&h, TrotterOrder::Fourth, s, 0.5));
        assert!((f[0] / f[1]).log2() > 3.5, "{f:?}");
    }

    #[test]
    fn trotter_error_grows_with_power() {
        let (h, s) = siam1();
        let g = s.ground();
        let chi = apply_ladder(Ladder::Create, 0, &g.psi0);
        for order in TrotterOrder::ALL {
            let spec = TrotterSpec { order, steps: 2, dt: 0.2 };
            let e = trotter_errors(&h, &s, &chi, 6, &spec).unwrap();
            for w in e.windows(2) {
                assert!(w[1] * 1.05 >= w[0], "{order:?} {e:?}");
            }
            assert!((trotter_error(&h, &s, &chi, 3, &spec).unwrap() - e[2]).abs() == 0.0);
        }
        // equal total time with halved step size shrinks the error at second order
        let coarse = trotter_error(&h, &s, &chi, 2, &TrotterSpec { order: TrotterOrder::Second, steps: 4, dt: 0.5 }).unwrap();
        let fine = trotter_error(&h, &s, &chi, 4, &TrotterSpec { order: TrotterOrder::Second, steps: 4, dt: 0.25 }).unwrap();
        assert!(fine < coarse / 2.0 && fine > coarse / 8.0, "{coarse} {fine}");
    }

    #[test]
    fn query_and_rotation_costs() {
        assert_eq!(iqae_queries(1e-3, 0.05, LogBase::Natural).unwrap(), 1434);
        // the slowly varying log factor keeps the ratio just under 2
        for eps in [1e-4, 1e-6, 1e-8] {
            let a = iqae_queries(eps, 0.05, LogBase::Natural).unwrap() as f64;
            let b = iqae_queries(eps / 2.0, 0.05, LogBase::Natural).unwrap() as f64;
            assert!(b >= 1.9 * a && b < 2.0 * a);
        }
        for eps in [1e-2, 1e-3] {
            let a = iqae_queries(eps, 0.05, LogBase::Natural).unwrap() as f64;
            let b = iqae_queries(eps / 2.0, 0.05, LogBase::Natural).unwrap() as f64;
            assert!(b >= 1.8 * a && b < 2.0 * a);
        }
        assert!(iqae_queries(1e-3, 0.01, LogBase::Natural).unwrap() > iqae_queries(1e-3, 0.1, LogBase::Natural).unwrap());
        assert!(iqae_queries(1e-3, 0.05, LogBase::Two).unwrap() > 0);
        assert!(iqae_queries(0.0, 0.05, LogBase::Natural).is_err());
        assert!(iqae_queries(0.9, 0.05, LogBase::Natural).is_err());
        assert!((rotation_t_cost(1e-10).unwrap() - (0.53 * 1e10f64.log2() + 4.86)).abs() < 1e-12);
        assert!((rotation_t_cost(1e-10).unwrap() - 22.466).abs() < 1e-3);
        assert!((rotation_t_cost(0.5).unwrap() - 5.39).abs() < 1e-12);
        assert_eq!(controlled_query_multiplier(), 2);
        assert_eq!(CONTROLLED_PER_ITERATE * controlled_query_multiplier() * 10, 40);
    }

    #[test]
    fn rotation_counts() {
        assert_eq!(TrotterOrder::First.rotations_per_step(9), 9);
        assert_eq!(TrotterOrder::Second.rotations_per_step(9), 17);
        assert_eq!(TrotterOrder::Fourth.rotations_per_step(9), 85);
        assert!(TrotterOrder::from_int(3).is_err());
    }

    #[test]
    fn step_cost_scan() {
        let (h, s) = siam1();
        let g = s.ground();
        let chi = apply_ladder(Ladder::Create, 0, &g.psi0);
        let opts = StepCostOptions::new(0.5);
        let loose = optimize_step_cost(&h, &s, &chi, 1, 0.5, &opts).unwrap();
        assert_eq!(loose.trotter.steps, 1);
        assert!(loose.is_feasible());
        let mid = optimize_step_cost(&h, &s, &chi, 2, 1e-3, &opts).unwrap();
        let tight = optimize_step_cost(&h, &s, &chi, 2, 1e-4, &opts).unwrap();
        assert!(mid.is_feasible() && tight.is_feasible());
        assert!(tight.t_count > mid.t_count);
        assert!(matches!(optimize_step_cost(&h, &s, &chi, 1, 1e-300, &opts), Err(Error::Infeasible(_))));
    }

    #[test]
    fn totals() {
        let (h, s) = siam1();
        let g = s.ground();
        let opts = StepCostOptions::new(0.5);
        let cfg = |r, budget, delta1| RoqamCostConfig { r, delta1, budget, p: 0, options: opts.clone() };
        let (one, plans) = roqam_total_t(&h, &s, &g, &cfg(1, Budget::Eb3, 1e-3)).unwrap();
        let single = optimize_step_cost(&h, &s, &apply_ladder(Ladder::Create, 0, &g.psi0), 1, 1e-3, &opts).unwrap();
        assert_eq!(plans[0].1, single);
        assert_eq!(one.breakdown["G+ l=1"], single.t_count);
        assert_eq!(one.t_count, one.breakdown.values().sum::<u64>());
        let eb3 = roqam_total_t(&h, &s, &g, &cfg(3, Budget::Eb3, 1e-3)).unwrap().0;
        let eb1 = roqam_total_t(&h, &s, &g, &cfg(3, Budget::Eb1, 1e-3)).unwrap().0;
        assert!(eb3.t_count < eb1.t_count);
        assert!(plans.iter().all(|(_, p)| p.is_feasible()));
        let again = roqam_total_t(&h, &s, &g, &cfg(3, Budget::Eb3, 1e-3)).unwrap().0;
        assert_eq!(again, eb3);
        let finer = roqam_total_t(&h, &s, &g, &cfg(3, Budget::Eb3, 1e-4)).unwrap().0;
        assert!(finer.t_count >= eb3.t_count);
    }
}
