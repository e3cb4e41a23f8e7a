//! Green's-function and spectral-function estimates: zero-temperature
//! diagonal and off-diagonal elements, thermofield-double thermal elements,
//! error metrics and the a posteriori bound.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arnoldi::{ArnoldiStatus, DEFAULT_TOL};
use crate::emulation::{
    default_timestep, run_roqam, Budget, GeneratorKind, GeneratorSpec, KrylovRepresentation, NoiseModel, Repair,
    SpectralMeasure,
};
use crate::error::{invalid, Error, Result};
use crate::exact::{tfd_state, ExactGreens, GroundPair, Spectrum, ThermalGreens, MAX_DOUBLED_DIM};
use crate::fermion::{apply_ladder, Ladder};
use crate::linalg::{axpy, I, ZERO};

pub const DEFAULT_REAL_POINTS: usize = 1000;
pub const DEFAULT_IMAG_POINTS: usize = 200;
pub const DEFAULT_IMAG_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Real,
    Imaginary,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Axis::Real),
            "imaginary" | "imag" => Ok(Axis::Imaginary),
            _ => invalid(format!("unknown axis {s:?} (expected real or imaginary)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub axis: Axis,
    pub points: Vec<f64>,
    /// Broadening; only used on the real axis.
    pub gamma: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

impl FrequencyGrid {
    pub fn new(axis: Axis, points: Vec<f64>, gamma: f64) -> Result<Self> {
        let g = Self { axis, points, gamma };
        g.validate()?;
        Ok(g)
    }

    /// `n` evenly spaced points on `[lo, hi]`.
    pub fn real(lo: f64, hi: f64, n: usize, gamma: f64) -> Result<Self> {
        if n < 1 || !(hi >= lo) {
            return invalid("real grid needs n >= 1 and hi >= lo");
        }
        Self::new(Axis::Real, linspace(lo, hi, n), gamma)
    }

    /// `n` evenly spaced points on `(0, hi]`.
    pub fn imaginary(hi: f64, n: usize) -> Result<Self> {
        if n < 1 || !(hi > 0.0) {
            return invalid("imaginary grid needs n >= 1 and hi > 0");
        }
        Self::new(Axis::Imaginary, (1..=n).map(|k| hi * k as f64 / n as f64).collect(), 0.0)
    }

    /// `DEFAULT_REAL_POINTS` points on `[-(u/2 + 4), u/2 + 4]`.
    pub fn default_real(u: f64, gamma: f64) -> Result<Self> {
        let w = u / 2.0 + 4.0;
        Self::real(-w, w, DEFAULT_REAL_POINTS, gamma)
    }

    pub fn default_imaginary() -> Result<Self> {
        Self::imaginary(DEFAULT_IMAG_MAX, DEFAULT_IMAG_POINTS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return invalid("grid has no points");
        }
        if self.points.iter().any(|x| !x.is_finite()) {
            return invalid("grid points must be finite");
        }
        if self.points.windows(2).any(|w| w[1] < w[0]) {
            return invalid("grid points must be sorted ascending");
        }
        if self.axis == Axis::Real && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return invalid("real-axis grid needs gamma > 0");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Complex frequency at grid point `k`: `omega + i gamma` or `i omega`.
    pub fn z(&self, k: usize) -> c64 {
        let w = self.points[k];
        match self.axis {
            Axis::Real => c64::new(w, self.gamma),
            Axis::Imaginary => c64::new(0.0, w),
        }
    }

    pub fn zs(&self) -> impl Iterator<Item = c64> + '_ {
        (0..self.len()).map(|k| self.z(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Exact,
    Roqam,
    AtomicLimit,
}

#[derive(Clone, Debug)]
pub struct GreensEstimate {
    pub grid: FrequencyGrid,
    pub values: Vec<c64>,
    pub source: Source,
    pub depth: Option<usize>,
    pub p: usize,
    pub q: usize,
    pub seed: Option<u64>,
    pub repair: Option<Repair>,
    /// Branch status notes (breakdowns, empty starting states, branch warnings).
    pub notes: Vec<String>,
}

impl GreensEstimate {
    fn exact(grid: &FrequencyGrid, values: Vec<c64>, p: usize, q: usize) -> Self {
        Self {
            grid: grid.clone(),
            values,
            source: Source::Exact,
            depth: None,
            p,
            q,
            seed: None,
            repair: None,
            notes: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,re_G,im_G,A\n");
        for (w, g) in self.grid.points.iter().zip(&self.values) {
            match self.grid.axis {
                Axis::Real => out.push_str(&format!("{w},{},{},{}\n", g.re, g.im, -g.im / std::f64::consts::PI)),
                Axis::Imaginary => out.push_str(&format!("{w},{},{},\n", g.re, g.im)),
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "axis": self.grid.axis,
            "gamma": self.grid.gamma,
            "n_points": self.grid.len(),
            "omega_min": self.grid.points.first(),
            "omega_max": self.grid.points.last(),
            "source": self.source,
            "depth": self.depth,
            "p": self.p,
            "q": self.q,
            "seed": self.seed,
            "repair": self.repair,
            "notes": self.notes,
            "omega": self.grid.points,
            "re_G": self.values.iter().map(|g| g.re).collect::<Vec<_>>(),
            "im_G": self.values.iter().map(|g| g.im).collect::<Vec<_>>(),
        })
    }
}

/// Settings shared by every ROQAM run behind one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoqamConfig {
    pub kind: GeneratorKind,
    /// Time step; `None` selects `default_timestep` of the operator norm.
    pub dt: Option<f64>,
    /// Subnormalization; `None` selects the operator norm.
    pub lam: Option<f64>,
    pub noise: NoiseModel,
    pub repair: Repair,
    pub tol: f64,
}

impl RoqamConfig {
    pub fn new(noise: NoiseModel) -> Self {
        Self {
            kind: GeneratorKind::TimeEvolution,
            dt: None,
            lam: None,
            noise,
            repair: Repair::UnitaryProjection,
            tol: DEFAULT_TOL,
        }
    }

    pub fn noiseless(r: usize) -> Self {
        Self::new(NoiseModel::noiseless(r))
    }

    pub fn generator(&self, operator_norm: f64) -> GeneratorSpec {
        let norm = if operator_norm > 0.0 { operator_norm } else { 1.0 };
        match self.kind {
            GeneratorKind::TimeEvolution => GeneratorSpec {
                kind: self.kind,
                dt: self.dt.unwrap_or_else(|| default_timestep(norm)),
                lam: self.lam.unwrap_or(1.0),
            },
            _ => GeneratorSpec { kind: self.kind, dt: 0.0, lam: self.lam.unwrap_or(norm) },
        }
    }
}

/// One branch: `None` when the starting state vanishes.
#[derive(Clone, Debug)]
pub struct Branch {
    pub rep: Option<KrylovRepresentation>,
}

impl Branch {
    fn run(measure: &SpectralMeasure, cfg: &RoqamConfig, stream: u64) -> Result<Self> {
        if measure.is_zero() {
            return Ok(Self { rep: None });
        }
        let gen = cfg.generator(measure.operator_norm);
        let rep = run_roqam(measure, &gen, &cfg.noise, stream, cfg.repair, cfg.tol)?;
        Ok(Self { rep: Some(rep) })
    }

    /// `norm_sq * f([H])_00`, zero for an empty branch.
    pub fn quadrature(&self, f: impl Fn(c64) -> c64) -> c64 {
        self.rep.as_ref().map_or(ZERO, |r| r.quadrature(f))
    }

    fn note(&self, label: &str) -> Option<String> {
        match &self.rep {
            None => Some(format!("{label}: starting state has zero norm, branch contributes 0")),
            Some(r) => {
                let mut parts = Vec::new();
                match r.status {
                    ArnoldiStatus::Complete => {}
                    ArnoldiStatus::Breakdown { at } => parts.push(format!("breakdown at depth {at}")),
                    ArnoldiStatus::NoiseDominated { at } => parts.push(format!("noise-dominated at depth {at}")),
                }
                if r.branch_warning {
                    parts.push("eigenphase near the branch cut".to_string());
                }
                (!parts.is_empty()).then(|| format!("{label}: {}", parts.join(", ")))
            }
        }
    }
}

/// Noise streams are separated per (mode pair, starting state).
fn stream_id(p: usize, q: usize, slot: u64) -> u64 {
    ((p as u64) << 40) | ((q as u64) << 16) | slot
}

/// Both zero-temperature branches for starting states `chi_plus`, `chi_minus`.
struct ZeroTemp {
    plus: Branch,
    minus: Branch,
    e0: f64,
}

impl ZeroTemp {
    fn run(spec: &Spectrum, ground: &GroundPair, chi_plus: &[c64], chi_minus: &[c64], cfg: &RoqamConfig, stream: u64) -> Result<Self> {
        let plus = Branch::run(&SpectralMeasure::from_state(spec, chi_plus), cfg, stream)?;
        let minus = Branch::run(&SpectralMeasure::from_state(spec, chi_minus), cfg, stream + 1)?;
        Ok(Self { plus, minus, e0: ground.e0 })
    }

    fn eval(&self, z: c64) -> c64 {
        let e0 = self.e0;
        self.plus.quadrature(|h| (z + e0 - h).inv()) + self.minus.quadrature(|h| (z - e0 + h).inv())
    }

    fn notes(&self, label: &str) -> Vec<String> {
        [self.plus.note(&format!("{label} G+")), self.minus.note(&format!("{label} G-"))]
            .into_iter()
            .flatten()
            .collect()
    }
}

fn check_mode(spec: &Spectrum, mode: usize) -> Result<()> {
    match spec.n_modes() {
        Some(n) if mode < n => Ok(()),
        Some(n) => invalid(format!("mode {mode} out of range for {n} modes")),
        None => invalid("Hilbert-space dimension is not a power of two"),
    }
}

fn check_ground(spec: &Spectrum, ground: &GroundPair) -> Result<()> {
    if ground.psi0.len() != spec.dim() {
        return invalid("ground state dimension does not match the Hamiltonian");
    }
    Ok(())
}

fn roqam_estimate(grid: &FrequencyGrid, values: Vec<c64>, p: usize, q: usize, cfg: &RoqamConfig, notes: Vec<String>) -> GreensEstimate {
    GreensEstimate {
        grid: grid.clone(),
        values,
        source: Source::Roqam,
        depth: Some(cfg.noise.r),
        p,
        q,
        seed: Some(cfg.noise.seed),
        repair: Some(cfg.repair),
        notes,
    }
}

/// `G_pp` from two ROQAM runs on `a_p^+ psi0` and `a_p psi0`.
pub fn roqam_greens_diagonal(
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    grid: &FrequencyGrid,
    cfg: &RoqamConfig,
) -> Result<GreensEstimate> {
    grid.validate()?;
    check_mode(spec, p)?;
    check_ground(spec, ground)?;
    let plus = apply_ladder(Ladder::Create, p, &ground.psi0);
    let minus = apply_ladder(Ladder::Annihilate, p, &ground.psi0);
    let run = ZeroTemp::run(spec, ground, &plus, &minus, cfg, stream_id(p, p, 0))?;
    let values = grid.zs().map(|z| run.eval(z)).collect();
    Ok(roqam_estimate(grid, values, p, p, cfg, run.notes("diagonal")))
}

/// `(G_pq, G_qp)` from runs on `(a_p^+ + a_q^+) psi0` and
/// `(a_p^+ + i a_q^+) psi0` (annihilators for the removal branch) combined
/// with the diagonal estimates.
#[allow(clippy::too_many_arguments)]
pub fn roqam_greens_offdiagonal(
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    q: usize,
    grid: &FrequencyGrid,
    cfg: &RoqamConfig,
    diag_p: &GreensEstimate,
    diag_q: &GreensEstimate,
) -> Result<(GreensEstimate, GreensEstimate)> {
    grid.validate()?;
    check_mode(spec, p)?;
    check_mode(spec, q)?;
    check_ground(spec, ground)?;
    if diag_p.grid != *grid || diag_q.grid != *grid {
        return invalid("diagonal estimates must share the requested grid");
    }
    let combo = |kind, coeff: c64| {
        let mut v = apply_ladder(kind, p, &ground.psi0);
        axpy(&mut v, coeff, &apply_ladder(kind, q, &ground.psi0));
        v
    };
    let one = c64::new(1.0, 0.0);
    let sum = ZeroTemp::run(spec, ground, &combo(Ladder::Create, one), &combo(Ladder::Annihilate, one), cfg, stream_id(p, q, 2))?;
    let rot = ZeroTemp::run(spec, ground, &combo(Ladder::Create, I), &combo(Ladder::Annihilate, I), cfg, stream_id(p, q, 4))?;
    let mut pq = Vec::with_capacity(grid.len());
    let mut qp = Vec::with_capacity(grid.len());
    for (k, z) in grid.zs().enumerate() {
        let s = diag_p.values[k] + diag_q.values[k];
        let real_part = (sum.eval(z) - s) * 0.5;
        let imag_part = (rot.eval(z) - s) * (I * 0.5);
        pq.push(real_part - imag_part);
        qp.push(real_part + imag_part);
    }
    let mut notes = sum.notes("sum");
    notes.extend(rot.notes("rotated"));
    Ok((
        roqam_estimate(grid, pq, p, q, cfg, notes.clone()),
        roqam_estimate(grid, qp, q, p, cfg, notes),
    ))
}

/// Exact `G_pq` on a grid.
pub fn exact_greens_estimate(
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    q: usize,
    grid: &FrequencyGrid,
) -> Result<GreensEstimate> {
    grid.validate()?;
    let g = ExactGreens::new(spec, ground, p, q)?;
    let values = grid.zs().map(|z| g.eval(z)).collect::<Result<_>>()?;
    Ok(GreensEstimate::exact(grid, values, p, q))
}

/// Exact thermal `G_pq` on a grid.
pub fn exact_thermal_estimate(spec: &Spectrum, beta: f64, p: usize, q: usize, grid: &FrequencyGrid) -> Result<GreensEstimate> {
    grid.validate()?;
    let g = ThermalGreens::new(spec, beta, p, q)?;
    let values = grid.zs().map(|z| g.eval(z)).collect::<Result<_>>()?;
    Ok(GreensEstimate::exact(grid, values, p, q))
}

/// Atomic-limit impurity function `1/2 (z - u/2)^{-1} + 1/2 (z + u/2)^{-1}`.
pub fn atomic_limit_estimate(u: f64, grid: &FrequencyGrid) -> Result<GreensEstimate> {
    grid.validate()?;
    let values = grid.zs().map(|z| ((z - u / 2.0).inv() + (z + u / 2.0).inv()) * 0.5).collect();
    let mut g = GreensEstimate::exact(grid, values, 0, 0);
    g.source = Source::AtomicLimit;
    Ok(g)
}

/// `A(omega) = -Im G(omega) / pi`.
pub fn spectral_function(g: &GreensEstimate) -> Result<Vec<f64>> {
    if g.grid.axis != Axis::Real {
        return invalid("spectral function needs a real-axis grid");
    }
    Ok(g.values.iter().map(|v| -v.im / std::f64::consts::PI).collect())
}

/// Trapezoid rule over the grid points.
pub fn trapezoid(points: &[f64], values: &[f64]) -> f64 {
    points
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Spectral measure of a doubled-space state under `H^T (x) I - I (x) H`.
///
/// The component of `chi` on `conj(v_n) (x) v_m` is `(V^T Y conj(V))_nm`
/// where `Y[j][i] = chi[j * dim + i]`; its eigenvalue is `E_n - E_m`.
pub fn doubled_measure(spec: &Spectrum, chi: &[c64]) -> Result<SpectralMeasure> {
    let d = spec.dim();
    if chi.len() != d * d {
        return invalid("doubled state has the wrong length");
    }
    let y = Mat::<c64>::from_fn(d, d, |j, i| chi[j * d + i]);
    let v = &spec.eigenvectors;
    let c = v.transpose() * &y * v.conjugate();
    let e = &spec.eigenvalues;
    let mut energies = Vec::with_capacity(d * d);
    let mut weights = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            energies.push(e[n] - e[m]);
            weights.push(c[(n, m)].norm_sqr());
        }
    }
    let spread = e[d - 1] - e[0];
    Ok(SpectralMeasure::from_weights(energies, weights, spread))
}

/// Apply a ladder operator on the second tensor factor of a doubled state.
fn ladder_on_second(kind: Ladder, mode: usize, chi: &[c64], d: usize) -> Vec<c64> {
    let mut out = Vec::with_capacity(chi.len());
    for block in chi.chunks(d) {
        out.extend(apply_ladder(kind, mode, block));
    }
    out
}

/// Thermal runs on the doubled generator for one pair of starting states.
struct Thermal {
    plus: Branch,
    minus: Branch,
}

impl Thermal {
    fn run(spec: &Spectrum, chi_plus: &[c64], chi_minus: &[c64], cfg: &RoqamConfig, stream: u64) -> Result<Self> {
        let plus = Branch::run(&doubled_measure(spec, chi_plus)?, cfg, stream)?;
        let minus = Branch::run(&doubled_measure(spec, chi_minus)?, cfg, stream + 1)?;
        Ok(Self { plus, minus })
    }

    fn eval(&self, z: c64) -> c64 {
        self.plus.quadrature(|k| (z + k).inv()) + self.minus.quadrature(|k| (z - k).inv())
    }

    fn notes(&self, label: &str) -> Vec<String> {
        [self.plus.note(&format!("{label} G+")), self.minus.note(&format!("{label} G-"))]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Thermal `G_pq` from ROQAM on the doubled generator with the
/// thermofield-double state; no eigenvalue of `H` enters the quadrature.
pub fn thermal_greens(
    spec: &Spectrum,
    beta: f64,
    p: usize,
    q: usize,
    grid: &FrequencyGrid,
    cfg: &RoqamConfig,
) -> Result<GreensEstimate> {
    grid.validate()?;
    let d = spec.dim();
    if d * d > MAX_DOUBLED_DIM {
        return Err(Error::DimensionCap(format!("doubled dimension {} exceeds {MAX_DOUBLED_DIM}", d * d)));
    }
    check_mode(spec, p)?;
    check_mode(spec, q)?;
    let psi = tfd_state(spec, beta)?;
    let states = |kind, coeff: Option<c64>| {
        let mut v = ladder_on_second(kind, p, &psi, d);
        if let Some(c) = coeff {
            axpy(&mut v, c, &ladder_on_second(kind, q, &psi, d));
        }
        v
    };
    let run = |coeff, slot| {
        Thermal::run(spec, &states(Ladder::Create, coeff), &states(Ladder::Annihilate, coeff), cfg, stream_id(p, q, slot))
    };
    let (values, notes) = if p == q {
        let t = run(None, 8)?;
        (grid.zs().map(|z| t.eval(z)).collect(), t.notes("thermal"))
    } else {
        let one = c64::new(1.0, 0.0);
        let dp = run(None, 8)?;
        let dq = Thermal::run(
            spec,
            &ladder_on_second(Ladder::Create, q, &psi, d),
            &ladder_on_second(Ladder::Annihilate, q, &psi, d),
            cfg,
            stream_id(q, q, 8),
        )?;
        let sum = run(Some(one), 10)?;
        let rot = run(Some(I), 12)?;
        let values = grid
            .zs()
            .map(|z| {
                let s = dp.eval(z) + dq.eval(z);
                (sum.eval(z) - s) * 0.5 - (rot.eval(z) - s) * (I * 0.5)
            })
            .collect();
        let mut notes = dp.notes("thermal p");
        notes.extend(dq.notes("thermal q"));
        notes.extend(sum.notes("thermal sum"));
        notes.extend(rot.notes("thermal rotated"));
        (values, notes)
    };
    Ok(roqam_estimate(grid, values, p, q, cfg, notes))
}

/// Relative L1 error `sum |est - ref| / sum |ref|`.
pub fn mean_relative_error(est: &GreensEstimate, reference: &GreensEstimate) -> Result<f64> {
    if est.grid != reference.grid {
        return invalid("estimates are on different grids");
    }
    let num: f64 = est.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm()).sum();
    let den: f64 = reference.values.iter().map(|b| b.norm()).sum();
    if den == 0.0 {
        return invalid("reference estimate vanishes on the grid");
    }
    Ok(num / den)
}

/// `delta_trusted + |est - trusted|`.
pub fn a_posteriori_bound(delta_trusted: f64, est_at_point: c64, trusted_at_point: c64) -> f64 {
    delta_trusted + (est_at_point - trusted_at_point).norm()
}

/// Depth and first-moment precision chosen by emulation for an error target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceChoice {
    pub r: usize,
    pub delta1: f64,
    pub noiseless_error: f64,
    pub median_error: f64,
}

/// Candidate `delta1` values, loosest first.
pub const DELTA1_CANDIDATES: [f64; 19] = [
    1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7, 3e-8, 1e-8, 3e-9, 1e-9, 3e-10, 1e-10,
];

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Smallest depth whose noiseless `G_pp` error is below half of `target`,
/// then the loosest `delta1` whose median error over `seeds` meets `target`.
#[allow(clippy::too_many_arguments)]
pub fn select_convergence_inputs(
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    grid: &FrequencyGrid,
    target: f64,
    budget: Budget,
    seeds: &[u64],
    r_max: usize,
) -> Result<ConvergenceChoice> {
    if !(target > 0.0) || seeds.is_empty() || r_max == 0 {
        return invalid("target, seeds and r_max must be positive");
    }
    let reference = exact_greens_estimate(spec, ground, p, p, grid)?;
    let mut found = None;
    for r in 1..=r_max {
        let est = roqam_greens_diagonal(spec, ground, p, grid, &RoqamConfig::noiseless(r))?;
        let err = mean_relative_error(&est, &reference)?;
        if err <= target / 2.0 {
            found = Some((r, err));
            break;
        }
    }
    let (r, noiseless_error) = found.ok_or_else(|| Error::Infeasible(format!("no depth up to {r_max} reaches {target}")))?;
    for delta1 in DELTA1_CANDIDATES {
        let errs = seeds
            .iter()
            .map(|&seed| {
                let noise = NoiseModel { budget, delta_base: delta1, seed, r };
                let est = roqam_greens_diagonal(spec, ground, p, grid, &RoqamConfig::new(noise))?;
                mean_relative_error(&est, &reference)
            })
            .collect::<Result<Vec<_>>>()?;
        let m = median(&errs);
        if m <= target {
            return Ok(ConvergenceChoice { r, delta1, noiseless_error, median_error: m });
        }
    }
    Err(Error::Infeasible(format!("no delta1 candidate reaches {target}")))
}
