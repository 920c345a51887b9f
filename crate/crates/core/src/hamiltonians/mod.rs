//! Integrals, their spin-orbital expansion, and the reduced two-body Hamiltonian `K_N`.

mod fcidump;
mod models;

pub use fcidump::{load_fcidump, load_fcidump_path, write_fcidump};
pub use models::{hubbard_dimer, random_two_body, RANDOM_GENERATOR};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pairspace::{pair_list, BasisSpec, OneBodyOperator, TwoBodyOperator};

/// Tolerance for the 8-fold permutational symmetry of `(pq|rs)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Spatial-orbital integrals in chemists' notation, Hartree units.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    n_spatial: usize,
    n_electrons: usize,
    h_core: DMatrix<f64>,
    two_electron: Vec<f64>,
    e_core: f64,
}

impl IntegralSet {
    /// Validates symmetry of `h_core` and the 8-fold symmetry of `two_electron`
    /// (dense, indexed `((p*n + q)*n + r)*n + s`).
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        h_core: DMatrix<f64>,
        two_electron: Vec<f64>,
        e_core: f64,
    ) -> Result<Self> {
        let n = n_spatial;
        if n == 0 {
            return Err(Error::InvalidInput("no orbitals".into()));
        }
        if h_core.nrows() != n || h_core.ncols() != n {
            return Err(Error::Dimension(format!("h_core must be {n}x{n}, got {}x{}", h_core.nrows(), h_core.ncols())));
        }
        if two_electron.len() != n.pow(4) {
            return Err(Error::Dimension(format!(
                "two-electron table must hold {} values, got {}",
                n.pow(4),
                two_electron.len()
            )));
        }
        let ints = Self { n_spatial, n_electrons, h_core, two_electron, e_core };
        ints.check_symmetry(SYMMETRY_TOLERANCE)?;
        Ok(ints)
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn h_core(&self) -> &DMatrix<f64> {
        &self.h_core
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    /// `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.two_electron[((p * n + q) * n + r) * n + s]
    }

    pub fn two_electron(&self) -> &[f64] {
        &self.two_electron
    }

    /// Spin-orbital basis after expansion (`r = 2 n_spatial`).
    pub fn spin_basis(&self) -> Result<BasisSpec> {
        BasisSpec::new(2 * self.n_spatial, self.n_electrons)
    }

    fn check_symmetry(&self, tol: f64) -> Result<()> {
        let n = self.n_spatial;
        for p in 0..n {
            for q in 0..n {
                if (self.h_core[(p, q)] - self.h_core[(q, p)]).abs() > tol {
                    return Err(Error::Data(format!("h_core not symmetric at ({p}, {q})")));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        for (a, b, c, d) in permutations(p, q, r, s) {
                            if (self.eri(a, b, c, d) - v).abs() > tol {
                                return Err(Error::Data(format!(
                                    "two-electron integrals violate permutational symmetry: ({p}{q}|{r}{s}) = {v} but ({a}{b}|{c}{d}) = {}",
                                    self.eri(a, b, c, d)
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The 8 index permutations leaving real `(pq|rs)` invariant.
pub(crate) fn permutations(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r), (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)]
}

/// Spin-orbital one-body matrix and antisymmetrized two-body elements `⟨ij||kl⟩`.
///
/// Spin orbitals interleave spins: spatial orbital `p` becomes `2p` (up) and `2p+1` (down).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinIntegrals {
    basis: BasisSpec,
    one_body: OneBodyOperator,
    antisym: Vec<f64>,
    e_core: f64,
}

impl SpinIntegrals {
    /// Assembles spin-orbital integrals directly; `antisym` is indexed `((i*r + j)*r + k)*r + l`.
    pub fn new(basis: BasisSpec, one_body: OneBodyOperator, antisym: Vec<f64>, e_core: f64) -> Result<Self> {
        let r = basis.n_orbitals();
        if one_body.n_orbitals() != r || antisym.len() != r.pow(4) {
            return Err(Error::Dimension(format!(
                "spin integrals for r = {r} need a {r}x{r} one-body matrix and {} two-body values",
                r.pow(4)
            )));
        }
        Ok(Self { basis, one_body, antisym, e_core })
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn one_body(&self) -> &OneBodyOperator {
        &self.one_body
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    /// `⟨ij||kl⟩ = ⟨ij|kl⟩ − ⟨ij|lk⟩` in physicists' notation.
    #[inline]
    pub fn antisym(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let r = self.basis.n_orbitals();
        self.antisym[((i * r + j) * r + k) * r + l]
    }

    pub fn antisym_table(&self) -> &[f64] {
        &self.antisym
    }
}

/// Expands spatial integrals to interleaved spin orbitals and antisymmetrizes.
pub fn spinify(ints: &IntegralSet) -> Result<SpinIntegrals> {
    let basis = ints.spin_basis()?;
    let n = ints.n_spatial;
    let r = 2 * n;
    let one_body = DMatrix::from_fn(r, r, |i, j| if i % 2 == j % 2 { ints.h_core[(i / 2, j / 2)] } else { 0.0 });
    // ⟨ij|kl⟩ = (ik|jl) δ(σi,σk) δ(σj,σl)
    let coulomb = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        if i % 2 == k % 2 && j % 2 == l % 2 {
            ints.eri(i / 2, k / 2, j / 2, l / 2)
        } else {
            0.0
        }
    };
    let mut antisym = vec![0.0; r.pow(4)];
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                for l in 0..r {
                    antisym[((i * r + j) * r + k) * r + l] = coulomb(i, j, k, l) - coulomb(i, j, l, k);
                }
            }
        }
    }
    Ok(SpinIntegrals { basis, one_body: OneBodyOperator::from_symmetric(one_body), antisym, e_core: ints.e_core })
}

/// `K_N` on the pair basis together with the constant it omits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedHamiltonian {
    k_matrix: TwoBodyOperator,
    basis: BasisSpec,
    e_core: f64,
}

impl ReducedHamiltonian {
    pub fn new(k_matrix: TwoBodyOperator, basis: BasisSpec, e_core: f64) -> Result<Self> {
        if k_matrix.n_orbitals() != basis.n_orbitals() {
            return Err(Error::Dimension(format!(
                "K_N over r = {} does not match basis r = {}",
                k_matrix.n_orbitals(),
                basis.n_orbitals()
            )));
        }
        if k_matrix.matrix().iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("reduced Hamiltonian has non-finite entries".into()));
        }
        Ok(Self { k_matrix, basis, e_core })
    }

    pub fn k_matrix(&self) -> &TwoBodyOperator {
        &self.k_matrix
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    /// Frobenius norm of `K_N`, used to scale solver tolerances.
    pub fn norm(&self) -> f64 {
        self.k_matrix.frobenius_norm()
    }
}

/// Builds `K_N = (h₁ + h₂)/(2(N−1)) + V/2` on the antisymmetric pair basis.
pub fn build_reduced_hamiltonian(ints: &SpinIntegrals) -> Result<ReducedHamiltonian> {
    let basis = ints.basis;
    let n = basis.n_electrons();
    if n < 2 {
        return Err(Error::InvalidInput("the reduced Hamiltonian needs N >= 2".into()));
    }
    let r = basis.n_orbitals();
    let h = ints.one_body.matrix();
    let one_weight = 1.0 / (2.0 * (n - 1) as f64);
    let pairs = pair_list(r);
    let d = pairs.len();
    let mut k = DMatrix::zeros(d, d);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(p, q)) in pairs.iter().enumerate() {
            let mut one = 0.0;
            if j == q {
                one += h[(i, p)];
            }
            if i == p {
                one += h[(j, q)];
            }
            if j == p {
                one -= h[(i, q)];
            }
            if i == q {
                one -= h[(j, p)];
            }
            k[(a, b)] = one_weight * one + 0.5 * ints.antisym(i, j, p, q);
        }
    }
    let k = TwoBodyOperator::from_matrix_unchecked(r, k).symmetrized();
    ReducedHamiltonian::new(k, basis, ints.e_core)
}

/// Parses, expands, and builds `K_N` in one step.
pub fn reduced_from_integrals(ints: &IntegralSet) -> Result<(SpinIntegrals, ReducedHamiltonian)> {
    let spin = spinify(ints)?;
    let k = build_reduced_hamiltonian(&spin)?;
    Ok((spin, k))
}
