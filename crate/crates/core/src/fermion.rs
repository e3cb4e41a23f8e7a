//! Single-impurity Anderson model: parameters, dense many-body matrix,
//! Jordan–Wigner Pauli decomposition and fermionic ladder operators.
//!
//! Mode `k` is qubit `k` and bit `k` of a computational-basis index
//! (little-endian). Modes are ordered impurity-up, impurity-down, then for
//! each bath site `j` the pair (up, down): mode `2 + 2j + spin`.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::ZERO;

/// Largest supported mode count for dense matrices (16384-dim).
pub const MAX_MODES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

pub fn impurity_mode(spin: Spin) -> usize {
    spin as usize
}

pub fn bath_mode(site: usize, spin: Spin) -> usize {
    2 + 2 * site + spin as usize
}

/// Human-readable label for each mode, in mode order.
pub fn mode_labels(n_bath: usize) -> Vec<String> {
    let mut out = vec!["imp_up".to_string(), "imp_dn".to_string()];
    for j in 0..n_bath {
        out.push(format!("bath{j}_up"));
        out.push(format!("bath{j}_dn"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiamParams {
    pub u: f64,
    pub mu: f64,
    pub eps_imp: f64,
    pub eps_bath: Vec<f64>,
    pub v: Vec<f64>,
    pub n_bath: usize,
    pub bandwidth: f64,
}

impl SiamParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bath < 1 {
            return invalid("n_bath must be at least 1");
        }
        if self.eps_bath.len() != self.n_bath || self.v.len() != self.n_bath {
            return invalid(format!(
                "eps_bath and v must both have length n_bath = {}",
                self.n_bath
            ));
        }
        let scalars = [self.u, self.mu, self.eps_imp, self.bandwidth];
        if scalars.iter().chain(&self.eps_bath).chain(&self.v).any(|x| !x.is_finite()) {
            return invalid("model parameters must be finite");
        }
        if self.bandwidth <= 0.0 {
            return invalid("bandwidth must be positive");
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        2 * (self.n_bath + 1)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes()
    }

    /// Default broadening: one tenth of the bandwidth.
    pub fn default_gamma(&self) -> f64 {
        0.1 * self.bandwidth
    }

    /// Serialize as `key = value` lines.
    pub fn to_key_value(&self) -> String {
        toml::to_string(self).expect("parameters are always serializable")
    }

    pub fn from_key_value(text: &str) -> Result<Self> {
        let p: SiamParams = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Analytic two-site DMFT bath at half filling, split evenly over `n_bath`
/// sites so the hybridization function is independent of `n_bath`.
pub fn two_site_dmft_params(u: f64, n_bath: usize) -> Result<SiamParams> {
    if !(u >= 0.0) || !u.is_finite() {
        return invalid("u must be finite and non-negative");
    }
    if n_bath < 1 {
        return invalid("n_bath must be at least 1");
    }
    let mu = u / 2.0;
    let v1 = if u < 6.0 { (1.0 - u * u / 36.0).sqrt() } else { 0.0 };
    let vj = v1 / (n_bath as f64).sqrt();
    Ok(SiamParams {
        u,
        mu,
        eps_imp: 0.0,
        eps_bath: vec![mu; n_bath],
        v: vec![vj; n_bath],
        n_bath,
        bandwidth: 4.0,
    })
}

/// Bath hybridization `sum_j V_j^2 / (z - (eps_j - mu))`.
pub fn hybridization(params: &SiamParams, z: c64) -> Result<c64> {
    let mut acc = ZERO;
    for (&e, &v) in params.eps_bath.iter().zip(&params.v) {
        let d = z - (e - params.mu);
        if d.norm() < 1e-14 {
            if v == 0.0 {
                continue;
            }
            return Err(Error::Singular(format!("z = {z} sits on bath level {}", e - params.mu)));
        }
        acc += v * v / d;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Action of a ladder operator on one basis index: target index and the
/// Jordan–Wigner sign, or `None` when the state is annihilated.
#[inline]
pub fn ladder_on_basis(kind: Ladder, mode: usize, index: usize) -> Option<(usize, f64)> {
    let bit = 1usize << mode;
    let occupied = index & bit != 0;
    let target = match (kind, occupied) {
        (Ladder::Create, false) | (Ladder::Annihilate, true) => index ^ bit,
        _ => return None,
    };
    let parity = (index & (bit - 1)).count_ones();
    Some((target, if parity % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Apply `a_p` or `a_p^dagger` to a state vector.
pub fn apply_ladder(kind: Ladder, mode: usize, state: &[c64]) -> Vec<c64> {
    let mut out = vec![ZERO; state.len()];
    for (i, &amp) in state.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        if let Some((t, s)) = ladder_on_basis(kind, mode, i) {
            out[t] += amp * s;
        }
    }
    out
}

/// Dense `a_p` / `a_p^dagger` on `n_modes` modes.
pub fn mode_operator(kind: Ladder, mode: usize, n_modes: usize) -> Result<Mat<c64>> {
    if n_modes > MAX_MODES {
        return Err(Error::DimensionCap(format!("{n_modes} modes exceeds {MAX_MODES}")));
    }
    if mode >= n_modes {
        return invalid(format!("mode index {mode} out of range for {n_modes} modes"));
    }
    let dim = 1usize << n_modes;
    let mut m = Mat::<c64>::zeros(dim, dim);
    for i in 0..dim {
        if let Some((t, s)) = ladder_on_basis(kind, mode, i) {
            m[(t, i)] = c64::new(s, 0.0);
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub word: String,
}

/// Pauli string as bit masks: `P|i> = i^n_y (-1)^{|i & z_mask|} |i ^ x_mask>`.
#[derive(Clone, Copy, Debug)]
pub struct PauliMasks {
    pub x_mask: usize,
    pub z_mask: usize,
    pub n_y: u32,
}

impl PauliMasks {
    pub fn parse(word: &str) -> Result<Self> {
        let mut m = PauliMasks { x_mask: 0, z_mask: 0, n_y: 0 };
        for (k, ch) in word.chars().enumerate() {
            let bit = 1usize << k;
            match ch {
                'I' => {}
                'X' => m.x_mask |= bit,
                'Z' => m.z_mask |= bit,
                'Y' => {
                    m.x_mask |= bit;
                    m.z_mask |= bit;
                    m.n_y += 1;
                }
                other => return invalid(format!("invalid Pauli letter {other:?}")),
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn act(&self, index: usize) -> (usize, c64) {
        let sign = if (index & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let phase = match self.n_y % 4 {
            0 => c64::new(sign, 0.0),
            1 => c64::new(0.0, sign),
            2 => c64::new(-sign, 0.0),
            _ => c64::new(0.0, -sign),
        };
        (index ^ self.x_mask, phase)
    }
}

/// Pauli decomposition of a Hamiltonian, identity word excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTermSum {
    pub n_modes: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliTermSum {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms with nonzero coefficient.
    pub fn nonzero(&self) -> impl Iterator<Item = &PauliTerm> {
        self.terms.iter().filter(|t| t.coefficient != 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzero().count()
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Dense matrix of `shift * I + sum_k c_k P_k`.
    pub fn to_dense(&self, shift: f64) -> Result<Mat<c64>> {
        if self.n_modes > MAX_MODES {
            return Err(Error::DimensionCap(format!("{} modes", self.n_modes)));
        }
        let dim = 1usize << self.n_modes;
        let mut m = Mat::<c64>::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] += c64::new(shift, 0.0);
        }
        for t in &self.terms {
            let p = PauliMasks::parse(&t.word)?;
            for i in 0..dim {
                let (j, ph) = p.act(i);
                m[(j, i)] += ph * t.coefficient;
            }
        }
        Ok(m)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("coefficient,word\n");
        for t in &self.terms {
            s.push_str(&format!("{:e},{}\n", t.coefficient, t.word));
        }
        s
    }
}

fn word_with(n_modes: usize, letters: &[(usize, char)]) -> String {
    let mut w = vec!['I'; n_modes];
    for &(k, c) in letters {
        w[k] = c;
    }
    w.into_iter().collect()
}

fn hopping_word(n_modes: usize, p: usize, q: usize, letter: char) -> String {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let mut letters = vec![(lo, letter), (hi, letter)];
    letters.extend((lo + 1..hi).map(|k| (k, 'Z')));
    word_with(n_modes, &letters)
}

/// Jordan–Wigner Pauli terms and the identity coefficient that was dropped.
///
/// The word list is fixed by the model's structure (`3 + 6 n_bath` words).
/// On-site `Z` coefficients cancel exactly at particle-hole symmetric
/// filling and are then kept as zero entries.
pub fn jordan_wigner_terms(params: &SiamParams) -> Result<(PauliTermSum, f64)> {
    params.validate()?;
    let n = params.n_modes();
    let e_imp = params.eps_imp - params.mu;
    let mut terms = Vec::with_capacity(3 + 6 * params.n_bath);
    let mut identity = e_imp + params.u / 4.0;
    for spin in [Spin::Up, Spin::Down] {
        terms.push(PauliTerm {
            coefficient: -e_imp / 2.0 - params.u / 4.0,
            word: word_with(n, &[(impurity_mode(spin), 'Z')]),
        });
    }
    terms.push(PauliTerm {
        coefficient: params.u / 4.0,
        word: word_with(n, &[(0, 'Z'), (1, 'Z')]),
    });
    for j in 0..params.n_bath {
        let e = params.eps_bath[j] - params.mu;
        identity += e;
        for spin in [Spin::Up, Spin::Down] {
            terms.push(PauliTerm {
                coefficient: -e / 2.0,
                word: word_with(n, &[(bath_mode(j, spin), 'Z')]),
            });
        }
    }
    for j in 0..params.n_bath {
        for spin in [Spin::Up, Spin::Down] {
            for letter in ['X', 'Y'] {
                terms.push(PauliTerm {
                    coefficient: params.v[j] / 2.0,
                    word: hopping_word(n, impurity_mode(spin), bath_mode(j, spin), letter),
                });
            }
        }
    }
    Ok((PauliTermSum { n_modes: n, terms }, identity))
}

/// LCU one-norm `sum |c_k| + |shift|`.
pub fn subnormalization(terms: &PauliTermSum, shift: f64) -> f64 {
    terms.one_norm() + shift.abs()
}

#[derive(Clone, Debug)]
pub struct FermionHamiltonian {
    pub params: SiamParams,
    pub n_modes: usize,
    pub dense: Mat<c64>,
    pub terms: PauliTermSum,
    /// Coefficient of the identity word omitted from `terms`.
    pub identity: f64,
    pub mode_labels: Vec<String>,
}

impl FermionHamiltonian {
    pub fn dim(&self) -> usize {
        self.dense.nrows()
    }
}

/// Dense many-body Hamiltonian assembled from ladder-operator actions.
pub fn build_siam(params: &SiamParams) -> Result<FermionHamiltonian> {
    params.validate()?;
    let n = params.n_modes();
    if n > MAX_MODES {
        return Err(Error::DimensionCap(format!(
            "{n} modes exceeds the dense cap of {MAX_MODES}"
        )));
    }
    let dim = 1usize << n;
    let mut h = Mat::<c64>::zeros(dim, dim);
    let occ = |i: usize, m: usize| ((i >> m) & 1) as f64;
    for i in 0..dim {
        let mut diag = (params.eps_imp - params.mu) * (occ(i, 0) + occ(i, 1))
            + params.u * occ(i, 0) * occ(i, 1);
        for j in 0..params.n_bath {
            let e = params.eps_bath[j] - params.mu;
            diag += e * (occ(i, bath_mode(j, Spin::Up)) + occ(i, bath_mode(j, Spin::Down)));
        }
        h[(i, i)] += c64::new(diag, 0.0);
        for j in 0..params.n_bath {
            let v = params.v[j];
            if v == 0.0 {
                continue;
            }
            for spin in [Spin::Up, Spin::Down] {
                let a = impurity_mode(spin);
                let c = bath_mode(j, spin);
                for (from, to) in [(c, a), (a, c)] {
                    if let Some((k, s1)) = ladder_on_basis(Ladder::Annihilate, from, i) {
                        if let Some((t, s2)) = ladder_on_basis(Ladder::Create, to, k) {
                            h[(t, i)] += c64::new(v * s1 * s2, 0.0);
                        }
                    }
                }
            }
        }
    }
    let (terms, identity) = jordan_wigner_terms(params)?;
    Ok(FermionHamiltonian {
        params: params.clone(),
        n_modes: n,
        dense: h,
        terms,
        identity,
        mode_labels: mode_labels(params.n_bath),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, max_abs_diff};
    use crate::testing::{kron_ladder, kron_siam};

    fn generic_params(n_bath: usize) -> SiamParams {
        SiamParams {
            u: 3.3,
            mu: 1.1,
            eps_imp: -0.4,
            eps_bath: (0..n_bath).map(|j| 0.3 * j as f64 - 0.2).collect(),
            v: (0..n_bath).map(|j| 0.5 + 0.1 * j as f64).collect(),
            n_bath,
            bandwidth: 4.0,
        }
    }

    #[test]
    fn two_site_values() {
        let p = two_site_dmft_params(5.0, 1).unwrap();
        assert!((p.v[0] - 11f64.sqrt() / 6.0).abs() < 1e-15);
        assert!((p.v[0] - 0.55277).abs() < 1e-5);
        assert_eq!(p.eps_bath[0], 2.5);
        assert_eq!(p.mu, 2.5);
        assert_eq!(two_site_dmft_params(6.0, 1).unwrap().v[0], 0.0);
        let p0 = two_site_dmft_params(0.0, 4).unwrap();
        assert!(p0.v.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(two_site_dmft_params(-1.0, 1).is_err());
        assert!(two_site_dmft_params(1.0, 0).is_err());
    }

    #[test]
    fn atomic_limit_levels() {
        let mut p = two_site_dmft_params(5.0, 1).unwrap();
        p.v = vec![0.0];
        let h = build_siam(&p).unwrap();
        // impurity block with bath empty: indices 0..4 (bits 0, 1)
        let levels: Vec<f64> = (0..4).map(|i| h.dense[(i, i)].re).collect();
        assert_eq!(levels, vec![0.0, -2.5, -2.5, 0.0]);
    }

    #[test]
    fn dense_matches_kronecker_assembler() {
        for p in [two_site_dmft_params(5.0, 1).unwrap(), generic_params(2)] {
            let h = build_siam(&p).unwrap();
            let k = kron_siam(&p);
            assert!(max_abs_diff(h.dense.as_ref(), k.as_ref()) < 1e-12);
        }
    }

    #[test]
    fn ground_energy_matches_kronecker_assembler() {
        let p = two_site_dmft_params(5.0, 1).unwrap();
        let (e1, _) = hermitian_eigen(build_siam(&p).unwrap().dense.as_ref()).unwrap();
        let (e2, _) = hermitian_eigen(kron_siam(&p).as_ref()).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-9);
        }
        // singlet sector: [[-U/2, 2V], [2V, 0]] shifted by nothing
        let v = 11f64.sqrt() / 6.0;
        let closed = -1.25 - (25.0 / 16.0 + 4.0 * v * v).sqrt();
        assert!((e2[0] - closed).abs() < 1e-12);
        assert!((e2[0] - (-2.918_748_699_541_731)).abs() < 1e-12);
    }

    #[test]
    fn pauli_round_trip() {
        for p in [two_site_dmft_params(5.0, 4).unwrap(), generic_params(1), generic_params(3)] {
            let h = build_siam(&p).unwrap();
            assert_eq!(h.terms.len(), 3 + 6 * p.n_bath);
            let rec = h.terms.to_dense(h.identity).unwrap();
            assert!(max_abs_diff(rec.as_ref(), h.dense.as_ref()) < 1e-12);
        }
        assert_eq!(jordan_wigner_terms(&two_site_dmft_params(5.0, 4).unwrap()).unwrap().0.len(), 27);
        assert_eq!(jordan_wigner_terms(&two_site_dmft_params(5.0, 1).unwrap()).unwrap().0.len(), 9);
    }

    #[test]
    fn terms_have_unique_non_identity_words() {
        let (t, _) = jordan_wigner_terms(&generic_params(3)).unwrap();
        let mut words: Vec<&str> = t.terms.iter().map(|t| t.word.as_str()).collect();
        assert!(words.iter().all(|w| w.chars().any(|c| c != 'I')));
        words.sort();
        words.dedup();
        assert_eq!(words.len(), t.len());
        assert!(t.terms.iter().all(|t| t.coefficient != 0.0));
    }

    #[test]
    fn half_filling_cancels_on_site_z() {
        let (t, id) = jordan_wigner_terms(&two_site_dmft_params(5.0, 2).unwrap()).unwrap();
        assert_eq!(t.nonzero_count(), 1 + 4 * 2);
        assert_eq!(id, -1.25);
    }

    #[test]
    fn hybridization_cases() {
        let p = two_site_dmft_params(5.0, 1).unwrap();
        let d = hybridization(&p, c64::new(0.0, 1.0)).unwrap();
        let v1sq = 11.0 / 36.0;
        assert!((d - c64::new(0.0, -v1sq)).norm() < 1e-15);
        for z in [c64::new(0.3, 0.1), c64::new(-2.0, 0.4), c64::new(0.0, 5.0)] {
            let base = hybridization(&p, z).unwrap();
            for n in 2..=5 {
                let q = two_site_dmft_params(5.0, n).unwrap();
                assert!((hybridization(&q, z).unwrap() - base).norm() < 1e-12);
            }
        }
        let mut q = p.clone();
        q.v = vec![0.0];
        assert_eq!(hybridization(&q, c64::new(0.2, 0.0)).unwrap(), ZERO);
        assert!(hybridization(&p, ZERO).is_err());
    }

    #[test]
    fn ladder_algebra() {
        let a = mode_operator(Ladder::Annihilate, 0, 1).unwrap();
        assert_eq!(a[(0, 1)], c64::new(1.0, 0.0));
        let aa = &a * &a;
        assert!(aa.norm_max() == 0.0);
        let n = 4;
        let dim = 1 << n;
        for p in 0..n {
            for q in 0..n {
                let ap = mode_operator(Ladder::Annihilate, p, n).unwrap();
                let aq = mode_operator(Ladder::Create, q, n).unwrap();
                let ac = &ap * &aq + &aq * &ap;
                let expect = Mat::<c64>::from_fn(dim, dim, |i, j| {
                    if i == j && p == q { c64::new(1.0, 0.0) } else { ZERO }
                });
                assert!(max_abs_diff(ac.as_ref(), expect.as_ref()) < 1e-12);
                assert!(max_abs_diff(ap.as_ref(), kron_ladder(false, p, n).as_ref()) == 0.0);
            }
        }
        assert!(mode_operator(Ladder::Create, 4, 4).is_err());
    }

    #[test]
    fn subnormalization_cases() {
        let single = PauliTermSum {
            n_modes: 1,
            terms: vec![PauliTerm { coefficient: -0.7, word: "Z".into() }],
        };
        assert_eq!(subnormalization(&single, 0.0), 0.7);
        let p = two_site_dmft_params(5.0, 1).unwrap();
        let (t, _) = jordan_wigner_terms(&p).unwrap();
        // independent enumeration: |U/4| for ZZ, |V/2| for four hopping words
        let brute = 5.0 / 4.0 + 4.0 * (11f64.sqrt() / 6.0) / 2.0;
        assert!((subnormalization(&t, 0.0) - brute).abs() < 1e-14);
        assert!((subnormalization(&t, 2.0) - subnormalization(&t, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn key_value_round_trip() {
        let p = generic_params(2);
        let text = p.to_key_value();
        assert!(text.contains("n_bath = 2"));
        assert_eq!(SiamParams::from_key_value(&text).unwrap(), p);
        assert!(SiamParams::from_key_value("u = 1").is_err());
    }

    #[test]
    fn mode_cap_enforced() {
        let p = two_site_dmft_params(2.0, 7).unwrap();
        assert!(matches!(build_siam(&p), Err(Error::DimensionCap(_))));
    }
}
