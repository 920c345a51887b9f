//! Full configuration interaction in the `N`-electron determinant basis.
//!
//! Determinants are `u64` occupation words, bit `k` set when spin orbital `k` is occupied.
//! `|D⟩ = a†_{k1} a†_{k2} … |0⟩` with `k1 < k2 < …`, so a creation or annihilation on
//! orbital `k` picks up `(−1)^(number of occupied orbitals below k)`.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonians::SpinIntegrals;
use crate::pairspace::{pair_dim, pair_index_unchecked, symmetric_eigen, BasisSpec, TwoBodyOperator};

pub const DEFAULT_DETERMINANT_CAP: usize = 50_000;

/// Above this dimension the ground state is found with Lanczos instead of a dense solve.
pub const DENSE_LIMIT: usize = 2000;

/// Residual tolerance for the iterative ground-state solver.
pub const LANCZOS_TOLERANCE: f64 = 1e-10;

const LANCZOS_SUBSPACE: usize = 80;
const LANCZOS_MAX_RESTARTS: usize = 500;

#[derive(Debug, Clone)]
pub struct DeterminantBasis {
    basis: BasisSpec,
    determinants: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl DeterminantBasis {
    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.determinants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.determinants.is_empty()
    }

    pub fn determinants(&self) -> &[u64] {
        &self.determinants
    }

    pub fn position(&self, det: u64) -> Option<usize> {
        self.lookup.get(&det).copied()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

/// All determinants with `N` of `r` orbitals occupied, in lexicographic order of the
/// occupied-orbital tuples.
pub fn enumerate_basis(basis: BasisSpec, cap: usize) -> Result<DeterminantBasis> {
    let r = basis.n_orbitals();
    let n = basis.n_electrons();
    let dimension = binomial(r, n);
    if dimension > cap {
        return Err(Error::CapExceeded { n_orbitals: r, n_electrons: n, dimension, cap });
    }
    let determinants: Vec<u64> =
        (0..r).combinations(n).map(|occ| occ.iter().fold(0u64, |w, &k| w | (1u64 << k))).collect();
    let lookup = determinants.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    Ok(DeterminantBasis { basis, determinants, lookup })
}

#[inline]
fn sign_below(det: u64, k: usize) -> f64 {
    if (det & ((1u64 << k) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn annihilate(det: u64, k: usize) -> Option<(u64, f64)> {
    if det & (1u64 << k) == 0 {
        return None;
    }
    Some((det & !(1u64 << k), sign_below(det, k)))
}

#[inline]
pub(crate) fn create(det: u64, k: usize) -> Option<(u64, f64)> {
    if det & (1u64 << k) != 0 {
        return None;
    }
    Some((det | (1u64 << k), sign_below(det, k)))
}

fn occupied(det: u64) -> impl Iterator<Item = usize> {
    let mut w = det;
    std::iter::from_fn(move || {
        if w == 0 {
            None
        } else {
            let k = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(k)
        }
    })
}

/// `⟨D|H|D⟩ = Σ h_ii + ½ Σ ⟨ij||ij⟩ + e_core` over occupied orbitals.
pub fn diagonal_element(det: u64, ints: &SpinIntegrals) -> f64 {
    let h = ints.one_body().matrix();
    let occ: Vec<usize> = occupied(det).collect();
    let mut e = ints.e_core();
    for (a, &i) in occ.iter().enumerate() {
        e += h[(i, i)];
        for &j in &occ[a + 1..] {
            e += ints.antisym(i, j, i, j);
        }
    }
    e
}

/// Slater–Condon element `⟨bra|H|ket⟩`.
pub fn slater_condon(bra: u64, ket: u64, ints: &SpinIntegrals) -> f64 {
    let diff = bra ^ ket;
    match diff.count_ones() {
        0 => diagonal_element(ket, ints),
        2 => {
            let i = (ket & diff).trailing_zeros() as usize;
            let a = (bra & diff).trailing_zeros() as usize;
            let (mid, s1) = annihilate(ket, i).expect("i occupied in ket");
            let (_, s2) = create(mid, a).expect("a empty after removal");
            let h = ints.one_body().matrix();
            let mut v = h[(a, i)];
            for k in occupied(ket) {
                if k != i {
                    v += ints.antisym(a, k, i, k);
                }
            }
            s1 * s2 * v
        }
        4 => {
            let holes: Vec<usize> = occupied(ket & diff).collect();
            let parts: Vec<usize> = occupied(bra & diff).collect();
            let (i, j) = (holes[0], holes[1]);
            let (a, b) = (parts[0], parts[1]);
            // a†_a a†_b a_j a_i |ket⟩
            let (w, s1) = annihilate(ket, i).expect("hole");
            let (w, s2) = annihilate(w, j).expect("hole");
            let (w, s3) = create(w, b).expect("particle");
            let (_, s4) = create(w, a).expect("particle");
            s1 * s2 * s3 * s4 * ints.antisym(a, b, i, j)
        }
        _ => 0.0,
    }
}

/// Determinants reachable from `det` by at most a double excitation.
fn connected(det: u64, n_orbitals: usize) -> Vec<u64> {
    let occ: Vec<usize> = occupied(det).collect();
    let virt: Vec<usize> = (0..n_orbitals).filter(|&k| det & (1u64 << k) == 0).collect();
    let mut out = vec![det];
    for &i in &occ {
        for &a in &virt {
            out.push(det ^ (1u64 << i) ^ (1u64 << a));
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[y + 1..] {
                    out.push(det ^ (1u64 << i) ^ (1u64 << j) ^ (1u64 << a) ^ (1u64 << b));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum CiStorage {
    Dense(DMatrix<f64>),
    Sparse(Vec<Vec<(usize, f64)>>),
}

/// The `N`-electron Hamiltonian in a determinant basis, including `e_core` on the diagonal.
#[derive(Debug, Clone)]
pub struct CiHamiltonian {
    dets: Arc<DeterminantBasis>,
    storage: CiStorage,
}

impl CiHamiltonian {
    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn determinants(&self) -> &Arc<DeterminantBasis> {
        &self.dets
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, CiStorage::Dense(_))
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            CiStorage::Dense(m) => m.clone(),
            CiStorage::Sparse(rows) => {
                let n = rows.len();
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        m[(i, j)] = v;
                    }
                }
                m
            }
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        match &self.storage {
            CiStorage::Dense(m) => m.diagonal(),
            CiStorage::Sparse(rows) => DVector::from_iterator(
                rows.len(),
                rows.iter().enumerate().map(|(i, row)| row.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1)),
            ),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.storage {
            CiStorage::Dense(m) => m * x,
            CiStorage::Sparse(rows) => {
                let y: Vec<f64> = rows.par_iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()).collect();
                DVector::from_vec(y)
            }
        }
    }

    /// `⟨x|H|x⟩ / ⟨x|x⟩`.
    pub fn expectation(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.apply(x)) / x.norm_squared()
    }
}

pub fn hamiltonian_matrix(dets: &DeterminantBasis, ints: &SpinIntegrals) -> Result<CiHamiltonian> {
    hamiltonian_matrix_shared(Arc::new(dets.clone()), ints)
}

pub fn hamiltonian_matrix_shared(dets: Arc<DeterminantBasis>, ints: &SpinIntegrals) -> Result<CiHamiltonian> {
    if dets.basis() != ints.basis() {
        return Err(Error::Dimension(format!(
            "determinant basis {:?} does not match integrals {:?}",
            dets.basis(),
            ints.basis()
        )));
    }
    let r = dets.basis().n_orbitals();
    let rows: Vec<Vec<(usize, f64)>> = dets
        .determinants
        .par_iter()
        .map(|&bra| {
            let mut row: Vec<(usize, f64)> = connected(bra, r)
                .into_iter()
                .filter_map(|ket| {
                    let j = dets.position(ket)?;
                    let v = slater_condon(bra, ket, ints);
                    (v != 0.0 || ket == bra).then_some((j, v))
                })
                .collect();
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    let dim = dets.len();
    let storage = if dim <= DENSE_LIMIT {
        let mut m = DMatrix::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        // Slater–Condon is symmetric analytically; enforce it bitwise.
        crate::pairspace::symmetrize_in_place(&mut m);
        CiStorage::Dense(m)
    } else {
        CiStorage::Sparse(rows)
    };
    Ok(CiHamiltonian { dets, storage })
}

/// Normalized state over a determinant basis with its energy expectation.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    dets: Arc<DeterminantBasis>,
    coefficients: DVector<f64>,
    energy: f64,
}

impl WaveFunction {
    /// Normalizes `coefficients` and records `⟨Ψ|H|Ψ⟩`.
    pub fn from_coefficients(h: &CiHamiltonian, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.len() != h.dim() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a {}-determinant basis",
                coefficients.len(),
                h.dim()
            )));
        }
        let norm = coefficients.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput("wavefunction has zero or non-finite norm".into()));
        }
        let coefficients = coefficients / norm;
        let energy = h.expectation(&coefficients);
        Ok(Self { dets: h.dets.clone(), coefficients, energy })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn determinants(&self) -> &Arc<DeterminantBasis> {
        &self.dets
    }
}

/// Lowest eigenpair: dense symmetric solve up to [`DENSE_LIMIT`], restarted Lanczos above.
pub fn ground_state(h: &CiHamiltonian) -> Result<WaveFunction> {
    let (energy, vector) = match &h.storage {
        CiStorage::Dense(m) => lowest_dense(m)?,
        CiStorage::Sparse(_) => lanczos_lowest(|x| h.apply(x), &h.diagonal(), LANCZOS_TOLERANCE)?,
    };
    let mut coefficients = vector;
    // Fix the global sign for reproducibility: largest-magnitude coefficient positive.
    let imax = coefficients.iamax();
    if coefficients[imax] < 0.0 {
        coefficients = -coefficients;
    }
    Ok(WaveFunction { dets: h.dets.clone(), coefficients, energy })
}

fn lowest_dense(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = symmetric_eigen(m)?;
    let (k, &e) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    Ok((e, eig.eigenvectors.column(k).into_owned()))
}

/// Restarted Lanczos with full reorthogonalization; only matrix–vector products are used.
pub fn lanczos_lowest<F>(apply: F, diagonal: &DVector<f64>, tol: f64) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = diagonal.len();
    if dim == 0 {
        return Err(Error::Dimension("empty operator".into()));
    }
    // Start on the lowest diagonal entry with a deterministic spread over all components.
    let imin = diagonal.imin();
    let mut start = DVector::from_fn(dim, |i, _| 1e-3 / (1.0 + i as f64).sqrt());
    start[imin] += 1.0;
    let mut x = start.normalize();
    let m = LANCZOS_SUBSPACE.min(dim);
    let mut last_residual = f64::INFINITY;
    for _ in 0..LANCZOS_MAX_RESTARTS {
        let mut basis: Vec<DVector<f64>> = vec![x.clone()];
        let mut alphas = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        for k in 0..m {
            let mut w = apply(&basis[k]);
            let alpha = basis[k].dot(&w);
            alphas.push(alpha);
            for _ in 0..2 {
                for v in &basis {
                    let c = v.dot(&w);
                    w.axpy(-c, v, 1.0);
                }
            }
            let beta = w.norm();
            if k + 1 == m || beta < 1e-14 {
                break;
            }
            betas.push(beta);
            basis.push(w / beta);
        }
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let (theta, y) = lowest_dense(&t)?;
        let mut ritz = DVector::zeros(dim);
        for (v, &c) in basis.iter().zip(y.iter()) {
            ritz.axpy(c, v, 1.0);
        }
        let ritz = ritz.normalize();
        let residual = (apply(&ritz) - &ritz * theta).norm();
        if residual <= tol {
            return Ok((theta, ritz));
        }
        last_residual = residual;
        x = ritz;
    }
    Err(Error::Eigensolver(format!(
        "Lanczos did not reach residual {tol:.1e} after {LANCZOS_MAX_RESTARTS} restarts (last residual {last_residual:.3e})"
    )))
}

/// Transition 2-RDM `⟨bra|a†_p a†_q a_s a_r|ket⟩` on the pair basis (times the factor 2 of
/// the pair-matrix convention).
pub fn transition_2rdm(bra: &WaveFunction, ket: &WaveFunction) -> Result<TwoBodyOperator> {
    if !Arc::ptr_eq(&bra.dets, &ket.dets) && bra.dets.determinants != ket.dets.determinants {
        return Err(Error::Dimension("wavefunctions over different determinant bases".into()));
    }
    let dets = &ket.dets;
    let r = dets.basis().n_orbitals();
    let d = pair_dim(r);
    let mut m = DMatrix::zeros(d, d);
    for (jdx, &ket_det) in dets.determinants.iter().enumerate() {
        let cj = ket.coefficients[jdx];
        if cj == 0.0 {
            continue;
        }
        let occ: Vec<usize> = occupied(ket_det).collect();
        for (x, &rr) in occ.iter().enumerate() {
            for &ss in &occ[x + 1..] {
                let (w, s1) = annihilate(ket_det, rr).expect("occupied");
                let (core, s2) = annihilate(w, ss).expect("occupied");
                let col = pair_index_unchecked(r, rr, ss);
                for p in 0..r {
                    if core & (1u64 << p) != 0 {
                        continue;
                    }
                    for q in p + 1..r {
                        if core & (1u64 << q) != 0 {
                            continue;
                        }
                        let (w, s3) = create(core, q).expect("empty");
                        let (bra_det, s4) = create(w, p).expect("empty");
                        if let Some(idx) = dets.position(bra_det) {
                            let ci = bra.coefficients[idx];
                            m[(pair_index_unchecked(r, p, q), col)] += 2.0 * ci * cj * s1 * s2 * s3 * s4;
                        }
                    }
                }
            }
        }
    }
    Ok(TwoBodyOperator::from_matrix_unchecked(r, m))
}

/// 2-RDM of a pure state, normalized to trace `N(N−1)`.
pub fn contract_2rdm(psi: &WaveFunction) -> TwoBodyOperator {
    transition_2rdm(psi, psi).expect("same basis").symmetrized()
}

/// Determinant filling the `N` spin orbitals with the lowest one-body diagonal (ties by index).
pub fn aufbau_determinant(ints: &SpinIntegrals) -> u64 {
    let h = ints.one_body().matrix();
    let r = ints.basis().n_orbitals();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| h[(a, a)].total_cmp(&h[(b, b)]).then(a.cmp(&b)));
    order.iter().take(ints.basis().n_electrons()).fold(0u64, |w, &k| w | (1u64 << k))
}

/// `⟨D|H|D⟩` for the Aufbau determinant; a variational upper bound on the ground energy.
pub fn aufbau_diagonal(ints: &SpinIntegrals) -> f64 {
    diagonal_element(aufbau_determinant(ints), ints)
}

/// Convenience: FCI ground state of a spin-integral system.
pub fn solve_fci(ints: &SpinIntegrals, cap: usize) -> Result<WaveFunction> {
    let dets = Arc::new(enumerate_basis(ints.basis(), cap)?);
    let h = hamiltonian_matrix_shared(dets, ints)?;
    ground_state(&h)
}
