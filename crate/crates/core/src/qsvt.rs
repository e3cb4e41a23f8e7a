//! Matrix-inversion costing by singular value transformation: the
//! inversion and rectangle polynomials, their degrees, effective condition
//! numbers, block-encoding costs and per-frequency T counts.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::costing::{iqae_queries, rotation_t_cost, LogBase, ResourceReport, CONTROLLED_PER_ITERATE, DEFAULT_P_FAIL};
use crate::error::{invalid, Error, Result};
use crate::exact::{ExactGreens, GroundPair, Spectrum};
use crate::fermion::{apply_ladder, FermionHamiltonian, Ladder};
use crate::greens::FrequencyGrid;
use crate::linalg::norm_sq;
use faer::c64;

/// `lam / sigma_min`.
pub fn effective_kappa(lam: f64, sigma_min: f64) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return invalid("sigma_min must be positive");
    }
    if lam < sigma_min {
        return invalid("lam must be at least sigma_min");
    }
    Ok(lam / sigma_min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionPolyParams {
    pub kappa: f64,
    pub eps_qsvt: f64,
    pub b: u64,
    pub d: u64,
    pub eps_rect: f64,
    pub t: u64,
    pub n: u64,
    /// Slope of each error-function step.
    pub k: f64,
    /// Bessel argument of the step expansion; the unbound constant of the
    /// `t` formula.
    pub beta: f64,
    /// Step positions `+-delta0`.
    pub delta0: f64,
}

impl InversionPolyParams {
    pub fn degree(&self) -> u64 {
        self.d + self.n
    }
}

/// Parameters of the inversion polynomial for condition number `kappa` and
/// precision `eps_qsvt`; natural logarithms throughout.
pub fn inversion_poly_params(kappa: f64, eps_qsvt: f64) -> Result<InversionPolyParams> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return invalid("kappa must exceed 1");
    }
    if !(eps_qsvt > 0.0 && eps_qsvt < 1.0) {
        return invalid("eps_qsvt must lie in (0, 1)");
    }
    let b = (kappa * kappa * (kappa / eps_qsvt).ln()).ceil();
    let d = (b * (4.0 * b / eps_qsvt).ln()).sqrt().ceil();
    let eps_rect = (2.0 * eps_qsvt / (5.0 * kappa)).min(kappa / (2.0 * d));
    // each step rises from eps_rect to 1 - eps_rect across a window of 1/(2 kappa)
    let k = std::f64::consts::SQRT_2 * kappa * (2.0 / (std::f64::consts::PI * eps_rect * eps_rect)).ln().sqrt();
    let beta = 2.0 * k * k;
    let log_term = (4.0 / eps_rect).ln();
    let t = (beta * std::f64::consts::E.powi(2)).max(log_term).ceil();
    let n = (2.0 * t * log_term).sqrt().ceil();
    Ok(InversionPolyParams {
        kappa,
        eps_qsvt,
        b: b as u64,
        d: d as u64,
        eps_rect,
        t: t as u64,
        n: n as u64,
        k,
        beta,
        delta0: 1.0 / (4.0 * kappa),
    })
}

/// `ln k!` for `k = 0..len`.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut lnfact = vec![0.0; len];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..len {
        let y = (k as f64).ln() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        lnfact[k] = sum;
    }
    lnfact
}

/// `exp(-a) I_j(a)` for `j = 0..=jmax` by the power series
/// `sum_m (a/2)^{2m+j} / (m! (m+j)!)`, summed in log space.
pub fn scaled_bessel_i(jmax: usize, a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0) || !a.is_finite() {
        return invalid("Bessel argument must be positive");
    }
    let half = a / 2.0;
    let span = (a / 2.0 + 60.0 * a.sqrt() + 100.0) as usize;
    let lnfact = ln_factorials(span + jmax + 2);
    let lh = half.ln();
    let mut out = Vec::with_capacity(jmax + 1);
    for j in 0..=jmax {
        let peak = (-(j as f64) / 2.0 + (j as f64 * j as f64 / 4.0 + half * half).sqrt()).max(0.0);
        let mut sum = 0.0;
        let mut m = 0usize;
        loop {
            if m + j + 1 >= lnfact.len() {
                return Err(Error::Infeasible(format!("Bessel series for j = {j} did not converge")));
            }
            let lt = (2 * m + j) as f64 * lh - lnfact[m] - lnfact[m + j] - a;
            let term = if lt > -745.0 { lt.exp() } else { 0.0 };
            sum += term;
            if m as f64 > peak && term <= 1e-18 * sum {
                break;
            }
            m += 1;
        }
        out.push(sum);
    }
    Ok(out)
}

/// Chebyshev sum `sum_m c_m T_m(x)` by Clenshaw's recurrence.
pub fn clenshaw(coef: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coef.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coef.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Chebyshev coefficients of the odd inversion polynomial
/// `4 sum_j (-1)^j [2^{-2b} sum_{i>j} C(2b, b+i)] T_{2j+1}`.
fn inversion_coefficients(b: usize, d: usize) -> Vec<f64> {
    // log of 2^{-2b} C(2b, b+i) by ratios from i = 0
    let mut logc = Vec::with_capacity(b + 1);
    let mut l0 = -(2.0 * b as f64) * std::f64::consts::LN_2;
    for m in 1..=b {
        l0 += ((b + m) as f64 / m as f64).ln();
    }
    logc.push(l0);
    for i in 0..b {
        let next = logc[i] + ((b - i) as f64 / (b + i + 1) as f64).ln();
        logc.push(next);
    }
    // compensated tail sums from the top
    let mut tail = vec![0.0; b + 2];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in (0..=b).rev() {
        let y = logc[i].exp() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        tail[i] = sum;
    }
    let mut coef = vec![0.0; 2 * d + 2];
    for j in 0..=d.min(b.saturating_sub(1)) {
        let sign = if j % 2 == 0 { 4.0 } else { -4.0 };
        coef[2 * j + 1] = sign * tail[j + 1];
    }
    coef
}

/// Chebyshev coefficients of the error-function step of slope `kp` on
/// `[-1, 1]` truncated to `(n-1)/2` Bessel terms.
fn step_coefficients(kp: f64, n: usize) -> Result<Vec<f64>> {
    let a = kp * kp / 2.0;
    let terms = n.saturating_sub(1) / 2;
    let bes = scaled_bessel_i(terms, a)?;
    let pref = 2.0 * kp / std::f64::consts::PI.sqrt();
    let mut coef = vec![0.0; 2 * terms + 2];
    coef[1] += pref * bes[0];
    for j in 1..=terms {
        let s = if j % 2 == 0 { pref } else { -pref } * bes[j];
        coef[2 * j + 1] += s / (2 * j + 1) as f64;
        coef[2 * j - 1] -= s / (2 * j - 1) as f64;
    }
    Ok(coef)
}

/// Inversion polynomial with precomputed expansions.
#[derive(Clone, Debug)]
pub struct InversionPolynomial {
    pub params: InversionPolyParams,
    inv: Vec<f64>,
    step: Vec<f64>,
}

impl InversionPolynomial {
    pub fn new(params: InversionPolyParams) -> Result<Self> {
        let inv = inversion_coefficients(params.b as usize, params.d as usize);
        // steps at +-delta0 evaluated at (x -+ delta0)/2, which doubles the slope
        let step = step_coefficients(2.0 * params.k, params.n as usize)?;
        Ok(Self { params, inv, step })
    }

    pub fn p_inv(&self, x: f64) -> f64 {
        clenshaw(&self.inv, x)
    }

    /// `1 + (E(x - delta0) - E(x + delta0)) / 2`: near 0 inside the steps, near 1 outside.
    pub fn p_rect(&self, x: f64) -> f64 {
        let d0 = self.params.delta0;
        1.0 + 0.5 * (clenshaw(&self.step, (x - d0) / 2.0) - clenshaw(&self.step, (x + d0) / 2.0))
    }
}

/// `p_inv(x) p_rect(x) / (2 kappa)`, approximating `1 / (2 kappa x)` on `[1/kappa, 1]`.
pub fn eval_p_mi(x: f64, poly: &InversionPolynomial) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return invalid("x must lie in [-1, 1]");
    }
    Ok(poly.p_inv(x) * poly.p_rect(x) / (2.0 * poly.params.kappa))
}

/// Block-encoding costs for an LCU over `n_terms` Pauli terms:
/// `(prepare rotations, select T gates)`.
pub fn lcu_costs(n_terms: usize, with_shift: bool) -> Result<(u64, u64)> {
    if n_terms < 1 {
        return invalid("LCU needs at least one term");
    }
    let prepare = (n_terms - 1 + usize::from(with_shift)) as u64;
    let select = 4 * (n_terms as u64) - 4;
    Ok((prepare, select))
}

/// Fractions of a branch's error assigned to amplitude estimation,
/// polynomial approximation and rotation synthesis.
pub const QAE_SHARE: f64 = 0.90;
pub const QSVT_SHARE: f64 = 0.09;
pub const SYN_SHARE: f64 = 0.01;

/// Weights below this are outside the support of a starting state.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Per-branch quantities of one frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCost {
    pub label: String,
    pub sigma_min: f64,
    pub lam: f64,
    pub kappa: f64,
    pub degree: u64,
    pub eps_qae: f64,
    pub eps_qsvt: f64,
    pub queries: u64,
    pub select_t: u64,
    pub rotation_t: u64,
    pub rotations: u64,
}

fn branch_cost(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    label: &str,
    chi: &[c64],
    shift: c64,
    sign: f64,
    eps_branch: f64,
) -> Result<BranchCost> {
    // shifted operator shift I - sign H, eigenvalues shift - sign E_n
    let nsq = norm_sq(chi);
    let c = spec.coefficients(chi);
    let sigma_min = spec
        .eigenvalues
        .iter()
        .zip(&c)
        .filter(|(_, cn)| cn.norm_sqr() / nsq > SUPPORT_TOL)
        .map(|(&e, _)| (shift - sign * e).norm())
        .fold(f64::INFINITY, f64::min);
    if !(sigma_min > 1e-12) {
        return Err(Error::Infeasible(format!("{label}: frequency sits on a supported pole")));
    }
    let n_terms = h.terms.nonzero_count();
    let lam = h.terms.one_norm() + (shift - sign * h.identity).norm();
    let kappa = effective_kappa(lam, sigma_min)?;
    // error of <S^-1> per part: (2/sigma_min) (eps_qae + eps_qsvt/(2 kappa) + eps_syn)
    let unit = eps_branch * sigma_min / 2.0;
    let eps_qae = (QAE_SHARE * unit).min(0.25);
    let eps_qsvt = (QSVT_SHARE * unit * 2.0 * kappa).min(0.5);
    let eps_syn = SYN_SHARE * unit;
    let params = inversion_poly_params(kappa, eps_qsvt)?;
    let degree = params.degree();
    let queries = iqae_queries(eps_qae, DEFAULT_P_FAIL, LogBase::Natural)?;
    let (prepare, select) = lcu_costs(n_terms, true)?;
    // real and imaginary parts, each Grover iterate calls the circuit twice
    let calls = 2 * queries * CONTROLLED_PER_ITERATE;
    let block_queries = calls * degree;
    let rotations = block_queries * (2 * prepare + 1);
    let per_rotation = rotation_t_cost((eps_syn / rotations as f64).min(0.5))?;
    Ok(BranchCost {
        label: label.to_string(),
        sigma_min,
        lam,
        kappa,
        degree,
        eps_qae,
        eps_qsvt,
        queries,
        select_t: block_queries * select,
        rotation_t: (rotations as f64 * per_rotation).ceil() as u64,
        rotations,
    })
}

/// T count for `G_pp(z)` to absolute precision `eps_target`.
pub fn qsvt_t_count(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    z: c64,
    eps_target: f64,
) -> Result<(ResourceReport, Vec<BranchCost>)> {
    if !(eps_target > 0.0) {
        return invalid("eps_target must be positive");
    }
    let plus = apply_ladder(Ladder::Create, p, &ground.psi0);
    let minus = apply_ladder(Ladder::Annihilate, p, &ground.psi0);
    let branches: Vec<_> = [("G+", plus, z + ground.e0, 1.0), ("G-", minus, z - ground.e0, -1.0)]
        .into_iter()
        .filter(|(_, chi, _, _)| norm_sq(chi) > 0.0)
        .collect();
    let mut report = ResourceReport::default();
    let mut costs = Vec::new();
    for (label, chi, shift, sign) in &branches {
        let eps_branch = eps_target / (branches.len() as f64 * norm_sq(chi));
        let c = branch_cost(h, spec, label, chi, *shift, *sign, eps_branch)?;
        report.add(format!("{label} select"), c.select_t);
        report.add(format!("{label} rotations"), c.rotation_t);
        report.rotation_count += c.rotations;
        report.queries += c.queries;
        costs.push(c);
    }
    report.context.insert("method".into(), json!("qsvt"));
    report.context.insert("omega_re".into(), json!(z.re));
    report.context.insert("omega_im".into(), json!(z.im));
    report.context.insert("eps_target".into(), json!(eps_target));
    report.context.insert("branches".into(), json!(costs));
    Ok((report, costs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ErrorTarget {
    Absolute(f64),
    /// Fraction of `|G(z)|` at each point.
    Relative(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub kappa: f64,
    pub degree: u64,
    pub t_count: u64,
}

#[derive(Clone, Debug)]
pub struct QsvtSweep {
    pub total: ResourceReport,
    pub hardest: ResourceReport,
    pub points: Vec<SweepPoint>,
    /// Frequencies excluded as infeasible.
    pub infeasible: Vec<f64>,
}

impl QsvtSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,kappa,degree,t_count\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.omega, p.kappa, p.degree, p.t_count));
        }
        s
    }
}

/// Per-frequency costs over a grid with their sum and maximum.
pub fn qsvt_sweep(
    h: &FermionHamiltonian,
    spec: &Spectrum,
    ground: &GroundPair,
    p: usize,
    grid: &FrequencyGrid,
    target: ErrorTarget,
) -> Result<QsvtSweep> {
    grid.validate()?;
    let exact = ExactGreens::new(spec, ground, p, p)?;
    let mut total = ResourceReport::default();
    let mut hardest: Option<ResourceReport> = None;
    let mut points = Vec::with_capacity(grid.len());
    let mut infeasible = Vec::new();
    for (k, z) in grid.zs().enumerate() {
        let eps = match target {
            ErrorTarget::Absolute(e) => e,
            ErrorTarget::Relative(r) => match exact.eval(z) {
                Ok(g) => r * g.norm(),
                Err(_) => {
                    infeasible.push(grid.points[k]);
                    continue;
                }
            },
        };
        match qsvt_t_count(h, spec, ground, p, z, eps) {
            Ok((rep, costs)) => {
                points.push(SweepPoint {
                    omega: grid.points[k],
                    kappa: costs.iter().map(|c| c.kappa).fold(0.0, f64::max),
                    degree: costs.iter().map(|c| c.degree).max().unwrap_or(0),
                    t_count: rep.t_count,
                });
                for (label, &t) in &rep.breakdown {
                    *total.breakdown.entry(label.clone()).or_insert(0) += t;
                }
                total.t_count += rep.t_count;
                total.rotation_count += rep.rotation_count;
                total.queries += rep.queries;
                if hardest.as_ref().is_none_or(|hd| rep.t_count > hd.t_count) {
                    hardest = Some(rep);
                }
            }
            Err(Error::Infeasible(_)) => infeasible.push(grid.points[k]),
            Err(e) => return Err(e),
        }
    }
    let hardest = hardest.ok_or_else(|| Error::Infeasible("no feasible frequency on the grid".into()))?;
    total.context.insert("method".into(), json!("qsvt"));
    total.context.insert("n_points".into(), json!(points.len()));
    total.context.insert("infeasible".into(), json!(infeasible));
    Ok(QsvtSweep { total, hardest, points, infeasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::diagonalize;
    use crate::fermion::{build_siam, two_site_dmft_params};
    use crate::linalg::singular_values;
    use faer::Mat;
    use proptest::prelude::*;

    fn siam1() -> (FermionHamiltonian, Spectrum, GroundPair) {
        let h = build_siam(&two_site_dmft_params(5.0, 1).unwrap()).unwrap();
        let s = diagonalize(h.dense.as_ref()).unwrap();
        let g = s.ground();
        (h, s, g)
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(effective_kappa(10.0, 2.0).unwrap(), 5.0);
        assert_eq!(effective_kappa(3.0, 3.0).unwrap(), 1.0);
        assert!(effective_kappa(1.0, 0.0).is_err());
    }

    #[test]
    fn parameter_formulas() {
        let p = inversion_poly_params(10.0, 0.01).unwrap();
        assert_eq!(p.b, 691);
        assert_eq!(p.d, 94);
        assert_eq!(p.eps_rect, (2.0 * 0.01 / 50.0f64).min(10.0 / 188.0));
        let lt = (4.0 / p.eps_rect).ln();
        assert_eq!(p.t, (p.beta * std::f64::consts::E.powi(2)).max(lt).ceil() as u64);
        assert_eq!(p.n, (2.0 * p.t as f64 * lt).sqrt().ceil() as u64);
        assert_eq!(p.degree(), p.d + p.n);
        for eps in [0.1, 0.01] {
            let mut last = 0;
            for kappa in [2.0, 4.0, 8.0, 16.0] {
                let deg = inversion_poly_params(kappa, eps).unwrap().degree();
                assert!(deg > last);
                last = deg;
            }
        }
        assert!(inversion_poly_params(1.0, 0.1).is_err());
        assert!(inversion_poly_params(5.0, 1.0).is_err());
    }

    #[test]
    fn bessel_series() {
        let v = scaled_bessel_i(2, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((v[0] - 1.2660658777520082 * e).abs() < 1e-15);
        assert!((v[1] - 0.5651591039924851 * e).abs() < 1e-15);
        assert!((v[2] - 0.1357476697670383 * e).abs() < 1e-15);
        for a in [30.0, 2000.0] {
            let jmax = (40.0 * f64::sqrt(a)) as usize + 40;
            let v = scaled_bessel_i(jmax, a).unwrap();
            let total = v[0] + 2.0 * v[1..].iter().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-10, "{a}: {total}");
        }
        let big = scaled_bessel_i(0, 1e4).unwrap()[0];
        let asym = 1.0 / (2.0 * std::f64::consts::PI * 1e4f64).sqrt() * (1.0 + 1.0 / 8e4 + 9.0 / (2.0 * 64e8));
        assert!((big - asym).abs() / asym < 1e-10);
    }

    #[test]
    fn clenshaw_matches_cosines() {
        let c = [0.3, -1.2, 0.5, 0.25];
        for x in [-0.9, -0.2, 0.0, 0.4, 1.0] {
            let th = f64::acos(x);
            let direct: f64 = c.iter().enumerate().map(|(m, cm)| cm * (m as f64 * th).cos()).sum();
            assert!((clenshaw(&c, x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn inversion_polynomial_shape() {
        let poly = InversionPolynomial::new(inversion_poly_params(5.0, 0.1).unwrap()).unwrap();
        assert_eq!(eval_p_mi(0.0, &poly).unwrap(), 0.0);
        for k in 0..=200 {
            let x = -1.0 + 2.0 * k as f64 / 200.0;
            let a = eval_p_mi(x, &poly).unwrap();
            let b = eval_p_mi(-x, &poly).unwrap();
            assert!((a + b).abs() < 1e-10);
        }
        assert!(eval_p_mi(1.5, &poly).is_err());
        // the binomial-tail form reproduces (1 - (1 - x^2)^b) / x up to truncation
        let b = poly.params.b as i32;
        for x in [0.3f64, 0.6, 0.95] {
            let g = (1.0 - (1.0 - x * x).powi(b)) / x;
            assert!((poly.p_inv(x) - g).abs() < 0.1);
        }
        assert!(poly.p_rect(0.0) < 0.2);
        assert!((poly.p_rect(0.5) - 1.0).abs() < 1e-6);
        for k in 0..=400 {
            let x = -1.0 + 2.0 * k as f64 / 400.0;
            assert!(eval_p_mi(x, &poly).unwrap().abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn approximation_bound_small_case() {
        let poly = InversionPolynomial::new(inversion_poly_params(5.0, 0.1).unwrap()).unwrap();
        let kappa = 5.0;
        for k in 0..1000 {
            let x = 1.0 / kappa + (1.0 - 1.0 / kappa) * k as f64 / 999.0;
            let err = (eval_p_mi(x, &poly).unwrap() - 1.0 / (2.0 * kappa * x)).abs();
            assert!(err <= 0.1 / (2.0 * kappa), "{x}: {err}");
        }
    }

    #[test]
    fn lcu_examples() {
        assert_eq!(lcu_costs(27, false).unwrap().1, 104);
        assert_eq!(lcu_costs(9, false).unwrap().0, 8);
        assert_eq!(lcu_costs(9, true).unwrap().0, 9);
        assert_eq!(lcu_costs(1, false).unwrap().1, 0);
        assert!(lcu_costs(0, false).is_err());
    }

    #[test]
    fn sigma_min_matches_dense_singular_values() {
        let (h, s, g) = siam1();
        let z = c64::new(0.7, 0.4);
        let chi = apply_ladder(Ladder::Create, 0, &g.psi0);
        let c = branch_cost(&h, &s, "G+", &chi, z + g.e0, 1.0, 1e-3).unwrap();
        let dim = s.dim();
        let shifted = Mat::<c64>::from_fn(dim, dim, |i, j| if i == j { z + g.e0 } else { c64::new(0.0, 0.0) }) - &h.dense;
        // restrict to the support through its eigenvectors
        let c_all = s.coefficients(&chi);
        let nsq = norm_sq(&chi);
        let cols: Vec<usize> = (0..dim).filter(|&n| c_all[n].norm_sqr() / nsq > SUPPORT_TOL).collect();
        let vs = Mat::<c64>::from_fn(dim, cols.len(), |i, k| s.eigenvectors[(i, cols[k])]);
        let sv = singular_values((&shifted * &vs).as_ref()).unwrap();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((smin - c.sigma_min).abs() < 1e-10);
        assert!((c.kappa - c.lam / c.sigma_min).abs() < 1e-12);
    }

    #[test]
    fn frequency_costs() {
        let (h, s, g) = siam1();
        let eg = ExactGreens::new(&s, &g, 0, 0).unwrap();
        let pole = eg.plus.poles.iter().zip(&eg.plus.weights).find(|(_, w)| w.norm() > 1e-3).unwrap().0;
        let near = qsvt_t_count(&h, &s, &g, 0, c64::new(*pole, 0.05), 1e-3).unwrap().0;
        let far = qsvt_t_count(&h, &s, &g, 0, c64::new(0.0, 5.0), 1e-3).unwrap().0;
        assert!(near.t_count > far.t_count);
        let mut eps = 1e-4;
        let mut last = u64::MAX;
        while eps < 0.1 {
            let t = qsvt_t_count(&h, &s, &g, 0, c64::new(0.3, 0.4), eps).unwrap().0.t_count;
            assert!(t <= last);
            last = t;
            eps *= 2.0;
        }
        assert!(matches!(
            qsvt_t_count(&h, &s, &g, 0, c64::new(*pole, 0.0), 1e-3),
            Err(Error::Infeasible(_))
        ));
        assert_eq!(near.t_count, near.breakdown.values().sum::<u64>());
    }

    #[test]
    fn sweeps() {
        let (h, s, g) = siam1();
        let coarse = FrequencyGrid::imaginary(10.0, 100).unwrap();
        let fine = FrequencyGrid::imaginary(10.0, 1000).unwrap();
        let a = qsvt_sweep(&h, &s, &g, 0, &coarse, ErrorTarget::Absolute(1e-3)).unwrap();
        let b = qsvt_sweep(&h, &s, &g, 0, &fine, ErrorTarget::Absolute(1e-3)).unwrap();
        let sum: u64 = a.points.iter().map(|p| p.t_count).sum();
        assert_eq!(sum, a.total.t_count);
        let ratio = b.total.t_count as f64 / a.total.t_count as f64;
        assert!((ratio / 10.0 - 1.0).abs() < 0.25, "{ratio}");
        assert!(a.hardest.t_count as f64 >= a.total.t_count as f64 / 100.0);

        let real = FrequencyGrid::default_real(5.0, 0.05).unwrap();
        let r = qsvt_sweep(&h, &s, &g, 0, &real, ErrorTarget::Absolute(1e-3)).unwrap();
        let top = r.points.iter().max_by_key(|p| p.t_count).unwrap();
        let eg = ExactGreens::new(&s, &g, 0, 0).unwrap();
        let poles: Vec<f64> = eg.plus.poles.iter().zip(&eg.plus.weights)
            .chain(eg.minus.poles.iter().zip(&eg.minus.weights))
            .filter(|(_, w)| w.norm() > 1e-10)
            .map(|(p, _)| *p)
            .collect();
        let nearest = |w: f64| poles.iter().map(|p| (p - w).abs()).fold(f64::INFINITY, f64::min);
        let spacing = real.points[1] - real.points[0];
        assert!(nearest(top.omega) <= spacing, "{} {:?}", top.omega, poles);
        assert!(r.to_csv().starts_with("omega,kappa,degree,t_count\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cost_is_monotone(kappa in 1.5f64..30.0, eps in 0.001f64..0.5) {
            let base = inversion_poly_params(kappa, eps).unwrap().degree();
            prop_assert!(inversion_poly_params(kappa * 1.5, eps).unwrap().degree() >= base);
            prop_assert!(inversion_poly_params(kappa, eps / 2.0).unwrap().degree() >= base);
        }
    }
}
