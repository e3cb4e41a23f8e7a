//! Arnoldi machinery: vector iteration, reconstruction of the projected
//! matrix from moments alone, and matrix-function quadrature.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{inner, matvec, norm_sq, PoleExpansion, ZERO};

/// Default breakdown tolerance on normalized subdiagonal norms.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Square upper-Hessenberg matrix. Entries below the subdiagonal are never
/// written and the subdiagonal is real and non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct HessenbergMatrix {
    entries: Mat<c64>,
}

impl HessenbergMatrix {
    pub fn zeros(r: usize) -> Self {
        Self { entries: Mat::zeros(r, r) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.entries[(i, j)]
    }

    /// Set an entry on or above the diagonal.
    pub fn set_upper(&mut self, i: usize, j: usize, v: c64) {
        assert!(i <= j, "({i}, {j}) is below the diagonal");
        self.entries[(i, j)] = v;
    }

    pub fn set_subdiagonal(&mut self, j: usize, v: f64) {
        assert!(v >= 0.0, "subdiagonal must be non-negative");
        self.entries[(j + 1, j)] = c64::new(v, 0.0);
    }

    /// Leading `k x k` block.
    pub fn truncated(&self, k: usize) -> Self {
        Self { entries: self.entries.as_ref().submatrix(0, 0, k, k).to_owned() }
    }

    /// True when the structural invariants hold bit-exactly.
    pub fn is_well_formed(&self) -> bool {
        let r = self.dim();
        (0..r).all(|j| {
            (j + 2..r).all(|i| self.entries[(i, j)] == ZERO)
                && (j + 1 >= r || {
                    let s = self.entries[(j + 1, j)];
                    s.im == 0.0 && s.re >= 0.0
                })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,re,im\n");
        let r = self.dim();
        for i in 0..r {
            for j in 0..r {
                let x = self.entries[(i, j)];
                s.push_str(&format!("{i},{j},{:e},{:e}\n", x.re, x.im));
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ArnoldiResult {
    pub projected: HessenbergMatrix,
    pub basis: Option<Mat<c64>>,
    pub breakdown_at: Option<usize>,
    pub norm_sq_chi0: f64,
}

/// Arnoldi iteration with single-pass classical Gram–Schmidt.
///
/// The residual norm is checked after every column; `breakdown_at = k`
/// means the Krylov space stabilized at dimension `k`.
pub fn arnoldi_standard(m: MatRef<'_, c64>, chi0: &[c64], r: usize, tol: f64) -> Result<ArnoldiResult> {
    if r < 1 {
        return invalid("depth r must be at least 1");
    }
    if m.nrows() != m.ncols() || m.nrows() != chi0.len() {
        return invalid("matrix and starting vector dimensions disagree");
    }
    let norm_sq_chi0 = norm_sq(chi0);
    if norm_sq_chi0 == 0.0 {
        return invalid("starting vector is zero");
    }
    let nrm = norm_sq_chi0.sqrt();
    let mut q: Vec<Vec<c64>> = vec![chi0.iter().map(|x| x / nrm).collect()];
    let mut h = HessenbergMatrix::zeros(r);
    let mut breakdown_at = None;
    for j in 0..r {
        let w = matvec(m, &q[j]);
        let coeffs: Vec<c64> = (0..=j).map(|i| inner(&q[i], &w)).collect();
        let mut resid = w;
        for (i, &c) in coeffs.iter().enumerate() {
            h.set_upper(i, j, c);
            for (x, y) in resid.iter_mut().zip(&q[i]) {
                *x -= c * y;
            }
        }
        let beta = norm_sq(&resid).sqrt();
        if beta < tol {
            breakdown_at = Some(j + 1);
            break;
        }
        if j + 1 < r {
            h.set_subdiagonal(j, beta);
            q.push(resid.iter().map(|x| x / beta).collect());
        }
    }
    let k = breakdown_at.unwrap_or(r);
    let dim = chi0.len();
    let basis = Mat::from_fn(dim, k, |i, j| q[j][i]);
    Ok(ArnoldiResult { projected: h.truncated(k), basis: Some(basis), breakdown_at, norm_sq_chi0 })
}

/// How moments relate to the generating matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentKind {
    /// `m[l] = <chi|U^l|chi>` for unitary `U`; `m[-l] = conj(m[l])`.
    Unitary,
    /// `m[l] = <chi|M^l|chi>` for Hermitian `M`; inner products need `m[0..=2r]`.
    Hermitian,
}

/// Moments of a normalized starting state; `m[0] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub kind: MomentKind,
    #[serde(with = "complex_vec")]
    pub m: Vec<c64>,
    /// Noise standard deviation per power; `deltas[0] = 0`.
    pub deltas: Vec<f64>,
    pub dt: f64,
    /// Squared norm of the unnormalized starting state.
    pub norm_sq: f64,
}

impl Moments {
    /// Highest stored power.
    pub fn max_power(&self) -> usize {
        self.m.len() - 1
    }

    /// Moment at a possibly negative power.
    pub fn at(&self, l: isize) -> c64 {
        if l >= 0 {
            self.m[l as usize]
        } else {
            self.m[(-l) as usize].conj()
        }
    }

    /// Powers needed to reach depth `r`.
    pub fn powers_needed(kind: MomentKind, r: usize) -> usize {
        match kind {
            MomentKind::Unitary => r,
            MomentKind::Hermitian => 2 * r,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,re_m,im_m,delta_l\n");
        for (l, (m, d)) in self.m.iter().zip(&self.deltas).enumerate() {
            s.push_str(&format!("{l},{:e},{:e},{:e}\n", m.re, m.im, d));
        }
        s
    }
}

pub(crate) mod complex_vec {
    use faer::c64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[c64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<c64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| c64::new(re, im)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ArnoldiStatus {
    /// Requested depth reached.
    Complete,
    /// Residual norm below tolerance: the Krylov space has stabilized.
    Breakdown { at: usize },
    /// Residual squared norm came out negative, so noise dominates.
    NoiseDominated { at: usize },
}

impl ArnoldiStatus {
    pub fn depth(&self, requested: usize) -> usize {
        match *self {
            ArnoldiStatus::Complete => requested,
            ArnoldiStatus::Breakdown { at } | ArnoldiStatus::NoiseDominated { at } => at,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentArnoldi {
    pub projected: HessenbergMatrix,
    pub status: ArnoldiStatus,
}

/// Relative size of rounding error in a moment-space inner product, as a
/// multiple of machine epsilon times the coefficient scale.
const ROUNDOFF_FACTOR: f64 = 64.0;

fn moment_inner(mom: &Moments, pi: &[c64], pj: &[c64], k: isize) -> (c64, f64) {
    let mut acc = ZERO;
    let mut scale = 0.0;
    for (a, &ca) in pi.iter().enumerate() {
        if ca == ZERO {
            continue;
        }
        let ca = ca.conj();
        for (b, &cb) in pj.iter().enumerate() {
            let l = match mom.kind {
                MomentKind::Unitary => b as isize - a as isize + k,
                MomentKind::Hermitian => a as isize + b as isize + k,
            };
            let m = mom.at(l);
            let t = ca * cb;
            acc += t * m;
            scale += t.norm() * m.norm().max(1.0);
        }
    }
    (acc, scale)
}

/// Reconstruct the projected matrix from moments. Each Krylov vector is a
/// polynomial `P_j` in the generator, stored as monomial coefficients, and
/// every inner product is a weighted sum of moments.
pub fn arnoldi_from_moments(moments: &Moments, r: usize, tol: f64) -> Result<MomentArnoldi> {
    if r < 1 {
        return invalid("depth r must be at least 1");
    }
    let need = Moments::powers_needed(moments.kind, r);
    if moments.max_power() < need {
        return invalid(format!(
            "depth {r} needs moments up to power {need}, have {}",
            moments.max_power()
        ));
    }
    let mut h = HessenbergMatrix::zeros(r);
    let mut polys: Vec<Vec<c64>> = vec![vec![c64::new(1.0, 0.0)]];
    let mut status = ArnoldiStatus::Complete;
    for j in 0..r {
        let mut next = vec![ZERO; j + 2];
        next[1..].copy_from_slice(&polys[j]);
        for i in 0..=j {
            let (hij, _) = moment_inner(moments, &polys[i], &polys[j], 1);
            h.set_upper(i, j, hij);
            for (x, y) in next.iter_mut().zip(&polys[i]) {
                *x -= hij * y;
            }
        }
        // second Gram-Schmidt pass against roundoff
        for i in 0..=j {
            let (c, _) = moment_inner(moments, &polys[i], &next, 0);
            h.set_upper(i, j, h.get(i, j) + c);
            for (x, y) in next.iter_mut().zip(&polys[i]) {
                *x -= c * y;
            }
        }
        let (nsq, scale) = moment_inner(moments, &next, &next, 0);
        let nsq = nsq.re;
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * scale;
        if nsq.abs() <= floor || (nsq > 0.0 && nsq < tol * tol) {
            status = ArnoldiStatus::Breakdown { at: j + 1 };
            break;
        }
        if nsq < 0.0 {
            status = ArnoldiStatus::NoiseDominated { at: j + 1 };
            break;
        }
        if j + 1 < r {
            let beta = nsq.sqrt();
            h.set_subdiagonal(j, beta);
            polys.push(next.iter().map(|x| x / beta).collect());
        }
    }
    let k = status.depth(r);
    Ok(MomentArnoldi { projected: h.truncated(k), status })
}

/// `norm_sq * f(M)_00` through the eigen-decomposition of `M`.
pub fn quadrature(f: impl Fn(c64) -> c64, projected: MatRef<'_, c64>, norm_sq_chi0: f64) -> Result<c64> {
    let poles = PoleExpansion::from_matrix(projected)?;
    Ok(poles.apply(f) * norm_sq_chi0)
}
