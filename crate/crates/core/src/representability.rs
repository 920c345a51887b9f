//! Linear N-representability maps `L_P`, `L_Q`, `L_G`, their adjoints, and the lift of dual
//! blocks into the polar cone.
//!
//! Adjoints are taken with respect to the Hilbert–Schmidt inner products of the pair space
//! and of `h⊗h` (see [`crate::pairspace`]). `L_Q` is self-adjoint in that inner product.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pairspace::{
    pair_dim, pair_list, signed_pair, symmetrize_in_place, GSpaceOperator, OneBodyOperator, TwoBodyOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Condition {
    P,
    Q,
    G,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::P => "P",
            Condition::Q => "Q",
            Condition::G => "G",
        })
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P" => Ok(Condition::P),
            "Q" => Ok(Condition::Q),
            "G" => Ok(Condition::G),
            other => Err(Error::InvalidInput(format!("unknown condition '{other}' (supported: P, Q, G)"))),
        }
    }
}

/// Which positivity conditions define the approximate cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConditionSet {
    pub p: bool,
    pub q: bool,
    pub g: bool,
}

impl Default for ConditionSet {
    fn default() -> Self {
        Self::PQG
    }
}

impl ConditionSet {
    pub const PQG: ConditionSet = ConditionSet { p: true, q: true, g: true };
    pub const P_ONLY: ConditionSet = ConditionSet { p: true, q: false, g: false };

    pub fn from_conditions(conditions: &[Condition]) -> Result<Self> {
        let mut set = ConditionSet { p: false, q: false, g: false };
        for c in conditions {
            match c {
                Condition::P => set.p = true,
                Condition::Q => set.q = true,
                Condition::G => set.g = true,
            }
        }
        if !set.p {
            return Err(Error::InvalidInput("the P condition is required (it guarantees delta = 0 below mu*)".into()));
        }
        Ok(set)
    }

    /// Parses a comma-separated list such as `P,Q,G`.
    pub fn parse(tags: &str) -> Result<Self> {
        let conditions =
            tags.split(',').filter(|t| !t.trim().is_empty()).map(Condition::from_str).collect::<Result<Vec<_>>>()?;
        Self::from_conditions(&conditions)
    }

    pub fn conditions(&self) -> Vec<Condition> {
        let mut out = Vec::new();
        if self.p {
            out.push(Condition::P);
        }
        if self.q {
            out.push(Condition::Q);
        }
        if self.g {
            out.push(Condition::G);
        }
        out
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<String> = self.conditions().iter().map(|c| c.to_string()).collect();
        f.write_str(&tags.join(","))
    }
}

/// Dual blocks `B_P`, `B_Q` on `h∧h` and `B_G` on `h⊗h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBlocks {
    pub b_p: TwoBodyOperator,
    pub b_q: TwoBodyOperator,
    pub b_g: GSpaceOperator,
}

impl DualBlocks {
    pub fn zeros(n_orbitals: usize) -> Self {
        Self {
            b_p: TwoBodyOperator::zeros(n_orbitals),
            b_q: TwoBodyOperator::zeros(n_orbitals),
            b_g: GSpaceOperator::zeros(n_orbitals),
        }
    }

    fn check(&self) -> Result<usize> {
        let r = self.b_p.n_orbitals();
        if self.b_q.n_orbitals() != r || self.b_g.n_orbitals() != r {
            return Err(Error::Dimension(format!(
                "dual blocks over r = {}, {}, {}",
                r,
                self.b_q.n_orbitals(),
                self.b_g.n_orbitals()
            )));
        }
        Ok(r)
    }
}

fn check_n(n_electrons: usize) -> Result<f64> {
    if n_electrons < 2 {
        return Err(Error::InvalidInput(format!("need N >= 2, got {n_electrons}")));
    }
    Ok(n_electrons as f64)
}

/// Signed pair lookup table: `table[i*r + j] = (pair index, sign)`, sign 0 on the diagonal.
struct PairTable {
    r: usize,
    entries: Vec<(usize, f64)>,
}

impl PairTable {
    fn new(r: usize) -> Self {
        let mut entries = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                entries.push(signed_pair(r, i, j).unwrap_or((0, 0.0)));
            }
        }
        Self { r, entries }
    }

    /// Tensor component `Γ[a,b; c,d]` from a pair matrix.
    #[inline]
    fn component(&self, m: &DMatrix<f64>, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let (x, sx) = self.entries[a * self.r + b];
        let (y, sy) = self.entries[c * self.r + d];
        if sx == 0.0 || sy == 0.0 {
            return 0.0;
        }
        0.5 * sx * sy * m[(x, y)]
    }
}

/// `γ_ij = (1/(N−1)) Σ_k Γ[i,k; j,k]`.
pub fn contract_to_1rdm(gamma2: &TwoBodyOperator, n_electrons: usize) -> Result<OneBodyOperator> {
    let n = check_n(n_electrons)?;
    let r = gamma2.n_orbitals();
    let table = PairTable::new(r);
    let m = gamma2.matrix();
    let mut g = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..r {
                acc += table.component(m, i, k, j, k);
            }
            let v = acc / (n - 1.0);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(OneBodyOperator::from_symmetric(g))
}

/// The P map is the identity.
pub fn apply_p(gamma2: &TwoBodyOperator) -> TwoBodyOperator {
    gamma2.clone()
}

/// `L_Q(Γ) = Γ − δγ − δγ + δγ + δγ + (δδ − δδ) tr(Γ)/(N(N−1))`.
pub fn apply_q(gamma2: &TwoBodyOperator, n_electrons: usize) -> Result<TwoBodyOperator> {
    let n = check_n(n_electrons)?;
    let r = gamma2.n_orbitals();
    let gamma = contract_to_1rdm(gamma2, n_electrons)?;
    let g = gamma.matrix();
    let t = gamma2.matrix().trace() / (n * (n - 1.0));
    let pairs = pair_list(r);
    let mut out = gamma2.matrix().clone();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            let mut v = 0.0;
            if i == k {
                v -= g[(j, l)];
            }
            if j == l {
                v -= g[(i, k)];
            }
            if i == l {
                v += g[(j, k)];
            }
            if j == k {
                v += g[(i, l)];
            }
            if i == k && j == l {
                v += t;
            }
            out[(a, b)] += 2.0 * v;
        }
    }
    symmetrize_in_place(&mut out);
    Ok(TwoBodyOperator::from_matrix_unchecked(r, out))
}

/// `L_G(Γ)[(i1,i2),(j1,j2)] = −Γ[i1,j2; j1,i2] + δ_i1j1 γ_i2j2` on `h⊗h`.
pub fn apply_g(gamma2: &TwoBodyOperator, n_electrons: usize) -> Result<GSpaceOperator> {
    let r = gamma2.n_orbitals();
    let gamma = contract_to_1rdm(gamma2, n_electrons)?;
    let g = gamma.matrix();
    let table = PairTable::new(r);
    let m = gamma2.matrix();
    let d = r * r;
    let mut out = DMatrix::zeros(d, d);
    for a in 0..r {
        for b in 0..r {
            let row = a * r + b;
            for c in 0..r {
                for e in 0..r {
                    let mut v = -table.component(m, a, e, c, b);
                    if a == c {
                        v += g[(b, e)];
                    }
                    out[(row, c * r + e)] = v;
                }
            }
        }
    }
    symmetrize_in_place(&mut out);
    Ok(GSpaceOperator::from_matrix_unchecked(r, out))
}

pub fn adjoint_p(b: &TwoBodyOperator) -> TwoBodyOperator {
    b.clone()
}

/// `(L_Q)* = L_Q`.
pub fn adjoint_q(b: &TwoBodyOperator, n_electrons: usize) -> Result<TwoBodyOperator> {
    apply_q(b, n_electrons)
}

/// Adjoint of [`apply_g`]: with `ω_bd = Σ_a W[(a,b),(a,d)]`,
/// `M[(p<q),(s<t)] = ½(−W[pt,sq] + W[qt,sp] + W[ps,tq] − W[qs,tp])
///                  + (1/(2(N−1)))(δ_qt ω_ps − δ_pt ω_qs − δ_qs ω_pt + δ_ps ω_qt)`.
pub fn adjoint_g(b: &GSpaceOperator, n_electrons: usize) -> Result<TwoBodyOperator> {
    let n = check_n(n_electrons)?;
    let r = b.n_orbitals();
    let w = b.matrix();
    let at = |x: usize, y: usize, u: usize, v: usize| w[(x * r + y, u * r + v)];
    let mut omega = DMatrix::zeros(r, r);
    for p in 0..r {
        for q in 0..r {
            omega[(p, q)] = (0..r).map(|a| at(a, p, a, q)).sum::<f64>();
        }
    }
    let c = 1.0 / (2.0 * (n - 1.0));
    let pairs = pair_list(r);
    let d = pair_dim(r);
    let mut out = DMatrix::zeros(d, d);
    for (x, &(p, q)) in pairs.iter().enumerate() {
        for (y, &(s, t)) in pairs.iter().enumerate() {
            let mut v = 0.5 * (-at(p, t, s, q) + at(q, t, s, p) + at(p, s, t, q) - at(q, s, t, p));
            let mut dv = 0.0;
            if q == t {
                dv += omega[(p, s)];
            }
            if p == t {
                dv -= omega[(q, s)];
            }
            if q == s {
                dv -= omega[(p, t)];
            }
            if p == s {
                dv += omega[(q, t)];
            }
            v += c * dv;
            out[(x, y)] = v;
        }
    }
    symmetrize_in_place(&mut out);
    Ok(TwoBodyOperator::from_matrix_unchecked(r, out))
}

/// `Σ_ℓ (L_ℓ)* B_ℓ`, a point of the polar cone whenever the blocks are PSD.
pub fn lift_dual(blocks: &DualBlocks, n_electrons: usize) -> Result<TwoBodyOperator> {
    blocks.check()?;
    let q = adjoint_q(&blocks.b_q, n_electrons)?;
    let g = adjoint_g(&blocks.b_g, n_electrons)?;
    adjoint_p(&blocks.b_p).add_scaled(&q, 1.0)?.add_scaled(&g, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{contract_2rdm, enumerate_basis, hamiltonian_matrix_shared, WaveFunction};
    use crate::hamiltonians::{hubbard_dimer, random_two_body, spinify};
    use crate::pairspace::{inner, inner_g, min_eigenvalue, tensor_trace};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        symmetrize_in_place(&mut m);
        m
    }

    fn determinant_rdm(r: usize, n: usize, det: u64) -> TwoBodyOperator {
        let spin = spinify(&random_two_body(0, r, n, 1.0).unwrap()).unwrap();
        let dets = Arc::new(enumerate_basis(spin.basis(), 1000).unwrap());
        let h = hamiltonian_matrix_shared(dets.clone(), &spin).unwrap();
        let mut c = DVector::zeros(dets.len());
        c[dets.position(det).unwrap()] = 1.0;
        contract_2rdm(&WaveFunction::from_coefficients(&h, c).unwrap())
    }

    /// Brute-force `L_Q` straight from the component formula over all index orders.
    fn brute_q(gamma2: &TwoBodyOperator, n: usize) -> TwoBodyOperator {
        let r = gamma2.n_orbitals();
        let gamma = contract_to_1rdm(gamma2, n).unwrap();
        let g = gamma.matrix();
        let t = tensor_trace(gamma2) / (n * (n - 1)) as f64;
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        TwoBodyOperator::from_components(r, |i1, i2, j1, j2| {
            gamma2.component(i1, i2, j1, j2) - d(i1, j1) * g[(i2, j2)] - d(i2, j2) * g[(i1, j1)]
                + d(i1, j2) * g[(i2, j1)]
                + d(i2, j1) * g[(i1, j2)]
                + (d(i1, j1) * d(i2, j2) - d(i1, j2) * d(i2, j1)) * t
        })
    }

    #[test]
    fn one_rdm_examples() {
        let zero = contract_to_1rdm(&TwoBodyOperator::zeros(4), 2).unwrap();
        assert!(zero.matrix().iter().all(|&x| x == 0.0));
        let g = contract_to_1rdm(&determinant_rdm(4, 2, 0b0011), 2).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]));
        assert!((g.matrix() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn one_rdm_of_hubbard_ground_state_has_trace_n() {
        let spin = spinify(&hubbard_dimer(1.0, 4.0).unwrap()).unwrap();
        let psi = crate::fci::solve_fci(&spin, 100).unwrap();
        let g = contract_to_1rdm(&contract_2rdm(&psi), 2).unwrap();
        assert!((g.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn p_is_identity() {
        let id = TwoBodyOperator::identity(4);
        assert_eq!(apply_p(&id.scale(-1.0)), id.scale(-1.0));
        assert_eq!(adjoint_p(&id), id);
    }

    #[test]
    fn q_examples() {
        assert!(apply_q(&TwoBodyOperator::zeros(4), 2).unwrap().matrix().iter().all(|&x| x == 0.0));
        let gamma = determinant_rdm(4, 2, 0b0011);
        let q = apply_q(&gamma, 2).unwrap();
        assert!(min_eigenvalue(&q).unwrap() >= -1e-12);
        // Q annihilates the occupied pair direction.
        assert!(q.matrix().row(0).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn q_matches_component_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (r, n) in [(4, 2), (6, 3), (7, 4)] {
            let gamma = TwoBodyOperator::new(r, random_sym(&mut rng, pair_dim(r))).unwrap();
            let fast = apply_q(&gamma, n).unwrap();
            let slow = brute_q(&gamma, n);
            assert!((fast.matrix() - slow.matrix()).abs().max() < 1e-13);
        }
    }

    #[test]
    fn q_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gamma = TwoBodyOperator::new(6, random_sym(&mut rng, 15)).unwrap();
        let a = apply_q(&gamma.scale(3.5), 3).unwrap();
        let b = apply_q(&gamma, 3).unwrap().scale(3.5);
        assert!((a.matrix() - b.matrix()).abs().max() < 1e-13);
    }

    #[test]
    fn g_examples() {
        assert!(apply_g(&TwoBodyOperator::zeros(4), 2).unwrap().matrix().iter().all(|&x| x == 0.0));
        let g = apply_g(&determinant_rdm(4, 2, 0b0011), 2).unwrap();
        assert_eq!(g.matrix(), &g.matrix().transpose());
        assert!(min_eigenvalue(&g).unwrap() >= -1e-12);
    }

    #[test]
    fn g_output_is_not_antisymmetric() {
        let gamma = determinant_rdm(4, 2, 0b0011);
        let g = apply_g(&gamma, 2).unwrap();
        // (0,2),(0,2) = γ_22 − Γ[0,2;0,2] = 0, (2,0),(2,0) = γ_00 − Γ[2,0;2,0] = 1
        assert!((g.matrix()[(2, 2)]).abs() < 1e-15);
        assert!((g.matrix()[(8, 8)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adjoint_identities_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for r in [4, 5, 6] {
            let n = 3;
            for _ in 0..10 {
                let gamma = TwoBodyOperator::new(r, random_sym(&mut rng, pair_dim(r))).unwrap();
                let bq = TwoBodyOperator::new(r, random_sym(&mut rng, pair_dim(r))).unwrap();
                let bg = GSpaceOperator::new(r, random_sym(&mut rng, r * r)).unwrap();
                let scale_q = gamma.frobenius_norm() * bq.frobenius_norm();
                let lhs = inner(&apply_q(&gamma, n).unwrap(), &bq).unwrap();
                let rhs = inner(&gamma, &adjoint_q(&bq, n).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-11 * scale_q);
                let scale_g = gamma.frobenius_norm() * bg.frobenius_norm();
                let lhs = inner_g(&apply_g(&gamma, n).unwrap(), &bg).unwrap();
                let rhs = inner(&gamma, &adjoint_g(&bg, n).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-11 * scale_g, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn adjoints_of_zero() {
        assert_eq!(adjoint_q(&TwoBodyOperator::zeros(4), 2).unwrap(), TwoBodyOperator::zeros(4));
        assert_eq!(adjoint_g(&GSpaceOperator::zeros(4), 2).unwrap(), TwoBodyOperator::zeros(4));
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift_dual(&DualBlocks::zeros(4), 2).unwrap(), TwoBodyOperator::zeros(4));
        let mut blocks = DualBlocks::zeros(4);
        blocks.b_p = TwoBodyOperator::identity(4);
        assert_eq!(lift_dual(&blocks, 2).unwrap(), TwoBodyOperator::identity(4));
    }

    #[test]
    fn lift_pairs_nonnegatively_with_representable_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spin = spinify(&random_two_body(6, 6, 3, 1.0).unwrap()).unwrap();
        let psi = crate::fci::solve_fci(&spin, 1000).unwrap();
        let gamma = contract_2rdm(&psi);
        for _ in 0..10 {
            let cp = random_sym(&mut rng, 15);
            let cq = random_sym(&mut rng, 15);
            let cg = random_sym(&mut rng, 36);
            let blocks = DualBlocks {
                b_p: sym_op(6, &cp * &cp),
                b_q: sym_op(6, &cq * &cq),
                b_g: GSpaceOperator::from_matrix_unchecked(6, {
                    let mut m = &cg * &cg;
                    symmetrize_in_place(&mut m);
                    m
                }),
            };
            let v = inner(&lift_dual(&blocks, 3).unwrap(), &gamma).unwrap();
            assert!(v >= -1e-9);
        }
    }

    fn sym_op(r: usize, mut m: DMatrix<f64>) -> TwoBodyOperator {
        symmetrize_in_place(&mut m);
        TwoBodyOperator::from_matrix_unchecked(r, m)
    }

    #[test]
    fn condition_tags() {
        assert_eq!(ConditionSet::parse("P,Q,G").unwrap(), ConditionSet::PQG);
        assert_eq!(ConditionSet::parse("p").unwrap(), ConditionSet::P_ONLY);
        assert!(ConditionSet::parse("Q,G").is_err());
        assert!(ConditionSet::parse("P,T1").is_err());
        assert_eq!(ConditionSet::PQG.to_string(), "P,Q,G");
    }
}
