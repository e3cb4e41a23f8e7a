//! Exact-diagonalization reference: spectra, ground states, zero- and
//! finite-temperature Green's functions, thermofield-double states.

use faer::{c64, Mat, MatRef};

use crate::error::{invalid, Error, Result};
use crate::fermion::{apply_ladder, Ladder};
use crate::linalg::{adjoint_matvec, hermitian_eigen, norm_sq, ZERO};

/// Largest dense dimension accepted by [`diagonalize`].
pub const MAX_DIM: usize = 16384;
/// Largest doubled-space dimension for thermofield constructions.
pub const MAX_DOUBLED_DIM: usize = 65536;

/// Full eigen-decomposition, eigenvalues ascending. Each eigenvector's
/// largest-magnitude entry is real and positive.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<c64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of fermionic modes, when the dimension is a power of two.
    pub fn n_modes(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    /// Spectral norm `max |E_n|`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, e| a.max(e.abs()))
    }

    pub fn eigenvector(&self, n: usize) -> Vec<c64> {
        self.eigenvectors.col(n).iter().copied().collect()
    }

    /// Eigenbasis coefficients `V^H x`.
    pub fn coefficients(&self, x: &[c64]) -> Vec<c64> {
        adjoint_matvec(self.eigenvectors.as_ref(), x)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{e:e}\n"));
        }
        s
    }

    pub fn ground(&self) -> GroundPair {
        ground_pair(self)
    }
}

#[derive(Clone, Debug)]
pub struct GroundPair {
    pub e0: f64,
    pub psi0: Vec<c64>,
}

fn check_hermitian(h: MatRef<'_, c64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return invalid("matrix is not square");
    }
    let scale = h.norm_max().max(1.0);
    for j in 0..h.ncols() {
        for i in 0..=j {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > 1e-10 * scale {
                return invalid(format!("matrix is not Hermitian at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

fn fix_phase(v: &mut [c64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        for x in v.iter_mut() {
            *x *= phase;
        }
        v[best] = c64::new(best_abs, 0.0);
    }
}

pub fn diagonalize(h: MatRef<'_, c64>) -> Result<Spectrum> {
    if h.nrows() > MAX_DIM {
        return Err(Error::DimensionCap(format!("dimension {} exceeds {MAX_DIM}", h.nrows())));
    }
    check_hermitian(h)?;
    let (eigenvalues, mut vecs) = hermitian_eigen(h)?;
    for k in 0..vecs.ncols() {
        let mut col: Vec<c64> = vecs.col(k).iter().copied().collect();
        fix_phase(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vecs[(i, k)] = x;
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors: vecs })
}

/// Energy window, relative to `max(1, |E_0|)`, inside which states count as
/// ground-state degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Ground state. A degenerate ground manifold is resolved to the first
/// column of its reduced column-echelon basis, which depends only on the
/// manifold and not on the eigensolver's choice of basis inside it.
pub fn ground_pair(spec: &Spectrum) -> GroundPair {
    let e0 = spec.eigenvalues[0];
    let window = DEGENERACY_TOL * e0.abs().max(1.0);
    let k = spec.eigenvalues.iter().take_while(|&&e| e - e0 <= window).count();
    let mut psi0 = if k == 1 {
        spec.eigenvector(0)
    } else {
        echelon_first(spec.eigenvectors.as_ref().subcols(0, k))
    };
    let n = norm_sq(&psi0).sqrt();
    psi0.iter_mut().for_each(|x| *x /= n);
    fix_phase(&mut psi0);
    GroundPair { e0, psi0 }
}

fn echelon_first(basis: MatRef<'_, c64>) -> Vec<c64> {
    let (rows, k) = (basis.nrows(), basis.ncols());
    let mut cols: Vec<Vec<c64>> = (0..k).map(|c| basis.col(c).iter().copied().collect()).collect();
    let tol = 1e-8;
    let mut row = 0;
    for c in 0..k {
        let pivot = loop {
            if row >= rows {
                break None;
            }
            let best = (c..k).max_by(|&a, &b| cols[a][row].norm().total_cmp(&cols[b][row].norm()));
            match best {
                Some(b) if cols[b][row].norm() > tol => break Some(b),
                _ => row += 1,
            }
        };
        let Some(b) = pivot else { break };
        cols.swap(c, b);
        let inv = cols[c][row].inv();
        cols[c].iter_mut().for_each(|x| *x *= inv);
        for other in 0..k {
            if other != c {
                let f = cols[other][row];
                if f != ZERO {
                    let pc = cols[c].clone();
                    for (x, y) in cols[other].iter_mut().zip(&pc) {
                        *x -= f * y;
                    }
                }
            }
        }
        row += 1;
    }
    cols.swap_remove(0)
}

fn check_mode(spec: &Spectrum, p: usize) -> Result<()> {
    match spec.n_modes() {
        Some(n) if p < n => Ok(()),
        Some(n) => invalid(format!("mode {p} out of range for {n} modes")),
        None => invalid("dimension is not a power of two"),
    }
}

/// Pole/weight lists of a Green's function: `G(z) = sum w/(z - pole)`.
#[derive(Clone, Debug, Default)]
pub struct PoleSum {
    pub poles: Vec<f64>,
    pub weights: Vec<c64>,
}

impl PoleSum {
    pub fn eval(&self, z: c64) -> Result<c64> {
        let mut acc = ZERO;
        for (&p, &w) in self.poles.iter().zip(&self.weights) {
            let d = z - p;
            if d.norm() < 1e-14 {
                return Err(Error::Singular(format!("z = {z} coincides with pole {p}")));
            }
            acc += w / d;
        }
        Ok(acc)
    }

    pub fn total_weight(&self) -> c64 {
        self.weights.iter().sum()
    }

    fn push(&mut self, pole: f64, w: c64) {
        if w.norm() > 1e-300 {
            self.poles.push(pole);
            self.weights.push(w);
        }
    }
}

/// Zero-temperature `G_pq = G^+ + G^-` as two pole sums.
#[derive(Clone, Debug)]
pub struct ExactGreens {
    pub plus: PoleSum,
    pub minus: PoleSum,
}

impl ExactGreens {
    pub fn new(spec: &Spectrum, ground: &GroundPair, p: usize, q: usize) -> Result<Self> {
        check_mode(spec, p)?;
        check_mode(spec, q)?;
        let coeffs = |kind, mode| spec.coefficients(&apply_ladder(kind, mode, &ground.psi0));
        let (cp, cq) = (coeffs(Ladder::Create, p), coeffs(Ladder::Create, q));
        let (ap, aq) = (coeffs(Ladder::Annihilate, p), coeffs(Ladder::Annihilate, q));
        let mut plus = PoleSum::default();
        let mut minus = PoleSum::default();
        for (n, &e) in spec.eigenvalues.iter().enumerate() {
            let de = e - ground.e0;
            plus.push(de, cp[n].conj() * cq[n]);
            // G^- has poles at -(E_n - E_0)
            minus.push(-de, ap[n].conj() * aq[n]);
        }
        Ok(Self { plus, minus })
    }

    pub fn eval(&self, z: c64) -> Result<c64> {
        Ok(self.plus.eval(z)? + self.minus.eval(z)?)
    }
}

pub fn exact_greens(spec: &Spectrum, ground: &GroundPair, p: usize, q: usize, z: c64) -> Result<c64> {
    ExactGreens::new(spec, ground, p, q)?.eval(z)
}

/// Boltzmann weights `exp(-beta (E_n - E_0)) / Z`.
pub fn boltzmann_weights(spec: &Spectrum, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid("beta must be finite and non-negative");
    }
    let e0 = spec.eigenvalues[0];
    let w: Vec<f64> = spec.eigenvalues.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

fn check_doubled(spec: &Spectrum) -> Result<()> {
    let d = spec.dim();
    if d * d > MAX_DOUBLED_DIM {
        return Err(Error::DimensionCap(format!(
            "doubled dimension {} exceeds {MAX_DOUBLED_DIM}",
            d * d
        )));
    }
    Ok(())
}

/// Column-stacking map `sum M_ij |i><j| -> sum M_ij |j>|i>`; the first
/// tensor factor is the more significant index.
pub fn vectorize(m: MatRef<'_, c64>) -> Vec<c64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = vec![ZERO; r * c];
    for j in 0..c {
        for i in 0..r {
            out[j * r + i] = m[(i, j)];
        }
    }
    out
}

/// Thermofield double `vec(exp(-beta H / 2)) / sqrt(Z)`.
pub fn tfd_state(spec: &Spectrum, beta: f64) -> Result<Vec<c64>> {
    check_doubled(spec)?;
    let rho = boltzmann_weights(spec, beta)?;
    let d = spec.dim();
    let v = &spec.eigenvectors;
    let mut half = Mat::<c64>::zeros(d, d);
    for n in 0..d {
        let w = rho[n].sqrt();
        if w == 0.0 {
            continue;
        }
        for j in 0..d {
            let vj = v[(j, n)].conj() * w;
            for i in 0..d {
                half[(i, j)] += v[(i, n)] * vj;
            }
        }
    }
    Ok(vectorize(half.as_ref()))
}

/// Eigenbasis matrix elements `<m| op |n>` of a ladder operator.
pub fn ladder_in_eigenbasis(spec: &Spectrum, kind: Ladder, mode: usize) -> Mat<c64> {
    let d = spec.dim();
    let mut applied = Mat::<c64>::zeros(d, d);
    for n in 0..d {
        let col = apply_ladder(kind, mode, &spec.eigenvector(n));
        for (i, x) in col.into_iter().enumerate() {
            applied[(i, n)] = x;
        }
    }
    spec.eigenvectors.adjoint() * &applied
}

/// Finite-temperature `G_pq` from the double spectral sum over eigenstates.
#[derive(Clone, Debug)]
pub struct ThermalGreens {
    pub plus: PoleSum,
    pub minus: PoleSum,
}

impl ThermalGreens {
    pub fn new(spec: &Spectrum, beta: f64, p: usize, q: usize) -> Result<Self> {
        check_doubled(spec)?;
        check_mode(spec, p)?;
        check_mode(spec, q)?;
        let rho = boltzmann_weights(spec, beta)?;
        let mp = ladder_in_eigenbasis(spec, Ladder::Create, p);
        let mq = ladder_in_eigenbasis(spec, Ladder::Create, q);
        let e = &spec.eigenvalues;
        let mut plus = PoleSum::default();
        let mut minus = PoleSum::default();
        for n in 0..spec.dim() {
            if rho[n] == 0.0 {
                continue;
            }
            for m in 0..spec.dim() {
                // <n|a_p|m><m|a_q^+|n> / (z - (E_m - E_n))
                plus.push(e[m] - e[n], mp[(m, n)].conj() * mq[(m, n)] * rho[n]);
                // <n|a_p^+|m><m|a_q|n> / (z + (E_m - E_n))
                minus.push(e[n] - e[m], mp[(n, m)] * mq[(n, m)].conj() * rho[n]);
            }
        }
        Ok(Self { plus, minus })
    }

    pub fn eval(&self, z: c64) -> Result<c64> {
        Ok(self.plus.eval(z)? + self.minus.eval(z)?)
    }
}

pub fn exact_thermal_greens(spec: &Spectrum, beta: f64, p: usize, q: usize, z: c64) -> Result<c64> {
    ThermalGreens::new(spec, beta, p, q)?.eval(z)
}
