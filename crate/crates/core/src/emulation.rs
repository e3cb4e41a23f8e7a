//! Emulated moment estimation and reconstruction of the projected
//! Hamiltonian: noise schedules, generating matrices, projection repairs and
//! the principal-branch matrix logarithm.

use faer::{c64, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arnoldi::{arnoldi_from_moments, ArnoldiStatus, HessenbergMatrix, MomentKind, Moments};
use crate::error::{invalid, Error, Result};
use crate::exact::Spectrum;
use crate::linalg::{general_eigen, condition_number, PoleExpansion, I, MAX_EIGVEC_CONDITION, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Budget {
    /// Constant precision at every power.
    Eb1,
    /// `delta_l = delta_1 (r^2 + 3r - 2) / (r^2 + 3r - l^2 - l)`.
    Eb2,
    /// `delta_l = l delta_1`.
    Eb3,
}

impl std::str::FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EB1" => Ok(Budget::Eb1),
            "EB2" => Ok(Budget::Eb2),
            "EB3" => Ok(Budget::Eb3),
            _ => invalid(format!("unknown budget {s:?} (expected EB1, EB2 or EB3)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub budget: Budget,
    pub delta_base: f64,
    pub seed: u64,
    /// Planned depth; the schedule covers powers `1..=r`.
    pub r: usize,
}

impl NoiseModel {
    pub fn noiseless(r: usize) -> Self {
        Self { budget: Budget::Eb1, delta_base: 0.0, seed: 0, r }
    }
}

/// Per-power standard deviations `delta_1..=delta_r`.
pub fn error_budget(model: &NoiseModel) -> Result<Vec<f64>> {
    let r = model.r;
    if r < 1 {
        return invalid("depth r must be at least 1");
    }
    if !(model.delta_base >= 0.0) || !model.delta_base.is_finite() {
        return invalid("delta must be finite and non-negative");
    }
    let d = model.delta_base;
    (1..=r)
        .map(|l| match model.budget {
            Budget::Eb1 => Ok(d),
            Budget::Eb3 => Ok(l as f64 * d),
            Budget::Eb2 => {
                let (rf, lf) = (r as f64, l as f64);
                let den = rf * rf + 3.0 * rf - lf * lf - lf;
                if den <= 0.0 {
                    return invalid(format!("EB2 denominator vanishes at l = {l}"));
                }
                Ok(d * (rf * rf + 3.0 * rf - 2.0) / den)
            }
        })
        .collect()
}

/// Structurally nonzero entries of an `r x r` upper-Hessenberg matrix.
pub fn hessenberg_nonzero_count(r: usize) -> usize {
    r * (r + 3) / 2 - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `exp(-i (H / lam) dt)`.
    TimeEvolution,
    /// `H / lam`.
    ScaledHamiltonian,
    /// `exp(i arccos(H / lam))`.
    QubitizedWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dt: f64,
    pub lam: f64,
}

impl GeneratorSpec {
    pub fn time_evolution(dt: f64) -> Self {
        Self { kind: GeneratorKind::TimeEvolution, dt, lam: 1.0 }
    }

    pub fn scaled_hamiltonian(lam: f64) -> Self {
        Self { kind: GeneratorKind::ScaledHamiltonian, dt: 0.0, lam }
    }

    pub fn qubitized_walk(lam: f64) -> Self {
        Self { kind: GeneratorKind::QubitizedWalk, dt: 0.0, lam }
    }

    pub fn moment_kind(&self) -> MomentKind {
        match self.kind {
            GeneratorKind::ScaledHamiltonian => MomentKind::Hermitian,
            _ => MomentKind::Unitary,
        }
    }

    /// Time step applied to `H` itself.
    pub fn effective_dt(&self) -> f64 {
        self.dt / self.lam
    }

    pub fn validate(&self, operator_norm: f64) -> Result<()> {
        if !(self.lam > 0.0) || !self.lam.is_finite() {
            return invalid("lam must be positive");
        }
        match self.kind {
            GeneratorKind::TimeEvolution if !(self.dt > 0.0) || !self.dt.is_finite() => {
                invalid("dt must be positive for time evolution")
            }
            GeneratorKind::QubitizedWalk if self.lam < operator_norm * (1.0 - 1e-12) => invalid(format!(
                "lam = {} is below the operator norm {operator_norm}",
                self.lam
            )),
            _ => Ok(()),
        }
    }

    /// Eigenvalue of the generator for an eigenvalue `e` of `H`, raised to `l`.
    fn eigen_power(&self, e: f64, l: usize) -> c64 {
        let l = l as f64;
        match self.kind {
            GeneratorKind::TimeEvolution => (-I * (e * self.effective_dt() * l)).exp(),
            GeneratorKind::ScaledHamiltonian => c64::new((e / self.lam).powf(l), 0.0),
            GeneratorKind::QubitizedWalk => {
                let x = (e / self.lam).clamp(-1.0, 1.0);
                (I * (x.acos() * l)).exp()
            }
        }
    }
}

/// Spectral measure of a starting state: supported eigenvalues of the
/// generator's Hamiltonian with normalized weights.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    /// Squared norm of the unnormalized starting state.
    pub norm_sq: f64,
    /// Spectral norm of the full Hamiltonian.
    pub operator_norm: f64,
}

impl SpectralMeasure {
    pub fn from_state(spec: &Spectrum, chi: &[c64]) -> Self {
        let c = spec.coefficients(chi);
        let w: Vec<f64> = c.iter().map(|x| x.norm_sqr()).collect();
        Self::from_weights(spec.eigenvalues.clone(), w, spec.norm())
    }

    /// From unnormalized weights; zero weights are dropped.
    pub fn from_weights(energies: Vec<f64>, raw: Vec<f64>, operator_norm: f64) -> Self {
        let norm_sq: f64 = raw.iter().sum();
        let (mut e, mut w) = (Vec::new(), Vec::new());
        if norm_sq > 0.0 {
            for (x, y) in energies.into_iter().zip(raw) {
                if y > 0.0 {
                    e.push(x);
                    w.push(y / norm_sq);
                }
            }
        }
        Self { energies: e, weights: w, norm_sq, operator_norm }
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sq == 0.0
    }

    /// Noiseless `<chi|G^l|chi>` for a normalized starting state.
    pub fn exact_moment(&self, gen: &GeneratorSpec, l: usize) -> c64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| gen.eigen_power(e, l) * w)
            .sum()
    }
}

/// Noisy moments: exact values in the eigenbasis plus independent Gaussian
/// noise of standard deviation `delta_l` on real and imaginary parts.
///
/// Noise is drawn from ChaCha20 keyed by `noise.seed` on stream `stream`,
/// real part then imaginary part for `l = 1, 2, ...`.
pub fn estimate_moments(
    measure: &SpectralMeasure,
    gen: &GeneratorSpec,
    noise: &NoiseModel,
    stream: u64,
) -> Result<Moments> {
    if measure.is_zero() {
        return invalid("starting state has zero norm");
    }
    gen.validate(measure.operator_norm)?;
    let kind = gen.moment_kind();
    let powers = Moments::powers_needed(kind, noise.r);
    let schedule = error_budget(&NoiseModel { r: powers, ..*noise })?;
    let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
    rng.set_stream(stream);
    let mut m = vec![ONE];
    let mut deltas = vec![0.0];
    for l in 1..=powers {
        let d = schedule[l - 1];
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        m.push(measure.exact_moment(gen, l) + c64::new(d * re, d * im));
        deltas.push(d);
    }
    Ok(Moments { kind, m, deltas, dt: gen.dt, norm_sq: measure.norm_sq })
}

/// Largest time step free of phase aliasing: `pi / e_abs_max`.
pub fn max_timestep(e_abs_max: f64) -> f64 {
    std::f64::consts::PI / e_abs_max
}

/// Default time step, half the aliasing bound.
pub fn default_timestep(norm: f64) -> f64 {
    0.5 * max_timestep(norm)
}

/// Eigenphases within this distance of the branch cut trigger a warning.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// Matrix with given eigen-decomposition `W diag(vals) W^{-1}`.
fn from_eigen(vals: &[c64], vecs: MatRef<'_, c64>) -> Mat<c64> {
    let inv = crate::linalg::inverse(vecs);
    let n = vals.len();
    let scaled = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * vals[k]);
    scaled * inv
}

struct Recovered {
    h: Mat<c64>,
    poles: PoleExpansion,
    branch_warning: bool,
}

fn recover(u: MatRef<'_, c64>, f: impl Fn(c64) -> c64, warn: impl Fn(c64) -> bool) -> Result<Recovered> {
    let (vals, vecs) = general_eigen(u)?;
    let cond = condition_number(vecs.as_ref())?;
    if !(cond <= MAX_EIGVEC_CONDITION) {
        return Err(Error::Infeasible(format!(
            "projected generator is numerically non-diagonalizable (condition {cond:.3e})"
        )));
    }
    let branch_warning = vals.iter().any(|&v| warn(v));
    let hv: Vec<c64> = vals.iter().map(|&v| f(v)).collect();
    let h = from_eigen(&hv, vecs.as_ref());
    let poles = PoleExpansion::from_eigen(hv, vecs.as_ref())?;
    Ok(Recovered { h, poles, branch_warning })
}

fn near_cut(v: c64) -> bool {
    v.arg().abs() > std::f64::consts::PI - BRANCH_MARGIN
}

/// `[H] = i dt^{-1} log [U]` on the principal branch. The flag reports
/// eigenphases within [`BRANCH_MARGIN`] of the cut.
pub fn hamiltonian_from_u(u_proj: MatRef<'_, c64>, dt: f64) -> Result<(Mat<c64>, bool)> {
    if !(dt > 0.0) {
        return invalid("dt must be positive");
    }
    let r = recover(u_proj, |v| I * v.ln() / dt, near_cut)?;
    Ok((r.h, r.branch_warning))
}

/// Nearest unitary in Frobenius norm: the polar factor `P V^H` of `P S V^H`.
pub fn project_to_unitary(m: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let svd = m.svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let smax = s.iter().map(|x| x.re).fold(0.0, f64::max);
    let smin = s.iter().map(|x| x.re).fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::Singular("matrix is numerically singular".into()));
    }
    Ok(svd.U() * svd.V().adjoint())
}

/// `(M + M^H) / 2`.
pub fn project_to_hermitian(m: MatRef<'_, c64>) -> Mat<c64> {
    let n = m.nrows();
    let mut out = Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    for i in 0..n {
        out[(i, i)].im = 0.0;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repair {
    None,
    UnitaryProjection,
    HermitianProjection,
}

impl std::str::FromStr for Repair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Repair::None),
            "unitary" | "unitary_projection" => Ok(Repair::UnitaryProjection),
            "hermitian" | "hermitian_projection" => Ok(Repair::HermitianProjection),
            _ => invalid(format!("unknown repair {s:?} (expected none, unitary or hermitian)")),
        }
    }
}

/// Reconstructed projected generator and Hamiltonian.
#[derive(Clone, Debug)]
pub struct KrylovRepresentation {
    pub u_proj: HessenbergMatrix,
    /// Projected generator after unitary repair, when applied.
    pub u_repaired: Option<Mat<c64>>,
    pub h_proj: Mat<c64>,
    /// Eigen-decomposition of `h_proj` for fast resolvent evaluation.
    pub poles: PoleExpansion,
    pub generator: GeneratorSpec,
    pub noise: NoiseModel,
    pub stream: u64,
    pub norm_sq_chi0: f64,
    pub depth: usize,
    pub requested_depth: usize,
    pub repaired: Repair,
    pub status: ArnoldiStatus,
    pub branch_warning: bool,
}

fn matrix_json(m: MatRef<'_, c64>) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

impl KrylovRepresentation {
    /// Quadrature `norm_sq * f([H])_00`.
    pub fn quadrature(&self, f: impl Fn(c64) -> c64) -> c64 {
        self.poles.apply(f) * self.norm_sq_chi0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "u_proj": matrix_json(self.u_proj.entries()),
            "u_repaired": self.u_repaired.as_ref().map(|m| matrix_json(m.as_ref())),
            "h_proj": matrix_json(self.h_proj.as_ref()),
            "generator": self.generator,
            "dt": self.generator.dt,
            "seed": self.noise.seed,
            "stream": self.stream,
            "noise": self.noise,
            "norm_sq_chi0": self.norm_sq_chi0,
            "depth": self.depth,
            "requested_depth": self.requested_depth,
            "repair": self.repaired,
            "status": self.status,
            "branch_warning": self.branch_warning,
        })
    }
}

/// Moments, reconstruction, optional repair and recovery of `[H]`.
pub fn run_roqam(
    measure: &SpectralMeasure,
    gen: &GeneratorSpec,
    noise: &NoiseModel,
    stream: u64,
    repair: Repair,
    tol: f64,
) -> Result<KrylovRepresentation> {
    let moments = estimate_moments(measure, gen, noise, stream)?;
    let arn = arnoldi_from_moments(&moments, noise.r, tol)?;
    let u = arn.projected.entries();
    let lam = gen.lam;
    let mut u_repaired = None;
    let rec = match gen.kind {
        GeneratorKind::TimeEvolution | GeneratorKind::QubitizedWalk => {
            let base = if repair == Repair::UnitaryProjection {
                u_repaired = Some(project_to_unitary(u)?);
                u_repaired.as_ref().unwrap().as_ref()
            } else {
                u
            };
            if gen.kind == GeneratorKind::TimeEvolution {
                let dt = gen.effective_dt();
                recover(base, |v| I * v.ln() / dt, near_cut)?
            } else {
                recover(base, |v| (v + v.inv()) * (0.5 * lam), |_| false)?
            }
        }
        GeneratorKind::ScaledHamiltonian => {
            if repair == Repair::UnitaryProjection {
                return invalid("unitary projection does not apply to a Hermitian generator");
            }
            recover(u, |v| v * lam, |_| false)?
        }
    };
    let (h_proj, poles) = if repair == Repair::HermitianProjection {
        let h = project_to_hermitian(rec.h.as_ref());
        let p = PoleExpansion::from_hermitian(h.as_ref())?;
        (h, p)
    } else {
        (rec.h, rec.poles)
    };
    Ok(KrylovRepresentation {
        depth: arn.projected.dim(),
        u_proj: arn.projected,
        u_repaired,
        h_proj,
        poles,
        generator: *gen,
        noise: *noise,
        stream,
        norm_sq_chi0: measure.norm_sq,
        requested_depth: noise.r,
        repaired: repair,
        status: arn.status,
        branch_warning: rec.branch_warning,
    })
}
