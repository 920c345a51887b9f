//! One-body, antisymmetric pair, and tensor pair spaces.
//!
//! Two-body operators live on the orthonormal basis `e_i ∧ e_j = (e_i⊗e_j − e_j⊗e_i)/√2`
//! with `i < j`. In that basis the Hilbert–Schmidt inner product and the trace of an
//! operator on `h⊗h` coincide with the plain Frobenius inner product and matrix trace of the
//! stored `d_A × d_A` matrix, so the convention factor between tensor sums and matrix sums
//! is exactly 1.
//!
//! Tensor components `Γ[i1,i2; j1,j2]` (antisymmetric in each index pair) relate to matrix
//! entries by `M[(i1<i2), (j1<j2)] = 2 Γ[i1,i2; j1,j2]`. With this choice the 2-RDM of an
//! `N`-electron pure state has trace `N(N−1)`, and `inner(K_N, Γ_Ψ) = ⟨Ψ|H − e_core|Ψ⟩`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ratio between tensor-convention traces/inner products and pair-matrix ones.
pub const CONVENTION_FACTOR: f64 = 1.0;

/// Default absolute tolerance for [`min_eigenvalue`].
pub const EIGEN_TOLERANCE: f64 = 1e-10;

const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Size of the one-body space and the electron count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BasisSpec {
    n_orbitals: usize,
    n_electrons: usize,
}

impl BasisSpec {
    pub fn new(n_orbitals: usize, n_electrons: usize) -> Result<Self> {
        if n_electrons < 2 || n_electrons > n_orbitals {
            return Err(Error::InvalidInput(format!("need 2 <= N <= r, got N = {n_electrons}, r = {n_orbitals}")));
        }
        if n_orbitals > 64 {
            return Err(Error::InvalidInput(format!("at most 64 spin orbitals are supported, got {n_orbitals}")));
        }
        Ok(Self { n_orbitals, n_electrons })
    }

    /// Number of spin orbitals `r`.
    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    /// Number of electrons `N`.
    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    /// `N(N−1)`, the trace of a normalized 2-RDM.
    pub fn pair_count(&self) -> f64 {
        (self.n_electrons * (self.n_electrons - 1)) as f64
    }

    pub fn pair_dim(&self) -> usize {
        pair_dim(self.n_orbitals)
    }

    pub fn tensor_dim(&self) -> usize {
        self.n_orbitals * self.n_orbitals
    }

    pub fn pair_index(&self, i: usize, j: usize) -> Result<usize> {
        pair_index(self.n_orbitals, i, j)
    }
}

pub fn pair_dim(n_orbitals: usize) -> usize {
    n_orbitals * n_orbitals.saturating_sub(1) / 2
}

/// Position of the ordered pair `(i, j)`, `i < j`, in lexicographic enumeration.
pub fn pair_index(n_orbitals: usize, i: usize, j: usize) -> Result<usize> {
    if i >= j || j >= n_orbitals {
        return Err(Error::Index(format!(
            "pair ({i}, {j}) is not an ordered pair of distinct orbitals below {n_orbitals}"
        )));
    }
    Ok(pair_index_unchecked(n_orbitals, i, j))
}

#[inline]
pub(crate) fn pair_index_unchecked(n_orbitals: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n_orbitals);
    i * (2 * n_orbitals - i - 1) / 2 + (j - i - 1)
}

/// Ordered pairs `(i, j)` in index order.
pub fn pair_list(n_orbitals: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_dim(n_orbitals));
    for i in 0..n_orbitals {
        for j in i + 1..n_orbitals {
            out.push((i, j));
        }
    }
    out
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(n_orbitals: usize, index: usize) -> Result<(usize, usize)> {
    if index >= pair_dim(n_orbitals) {
        return Err(Error::Index(format!("pair index {index} out of range for r = {n_orbitals}")));
    }
    let mut start = 0;
    for i in 0..n_orbitals {
        let row = n_orbitals - i - 1;
        if index < start + row {
            return Ok((i, i + 1 + index - start));
        }
        start += row;
    }
    unreachable!("index checked against pair_dim")
}

/// Signed position of `(i, j)` in the pair basis: `e_j ∧ e_i = −e_i ∧ e_j`.
#[inline]
pub(crate) fn signed_pair(n_orbitals: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    use std::cmp::Ordering;
    match i.cmp(&j) {
        Ordering::Less => Some((pair_index_unchecked(n_orbitals, i, j), 1.0)),
        Ordering::Greater => Some((pair_index_unchecked(n_orbitals, j, i), -1.0)),
        Ordering::Equal => None,
    }
}

/// Real symmetric `r × r` matrix (one-body Hamiltonian, 1-RDM).
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyOperator {
    entries: DMatrix<f64>,
}

impl OneBodyOperator {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&entries, 0.0, "one-body operator")?;
        Ok(Self { entries })
    }

    pub(crate) fn from_symmetric(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn zeros(n_orbitals: usize) -> Self {
        Self { entries: DMatrix::zeros(n_orbitals, n_orbitals) }
    }

    pub fn n_orbitals(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

/// Self-adjoint operator on `h∧h`, stored on the orthonormal ordered-pair basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyOperator {
    n_orbitals: usize,
    entries: DMatrix<f64>,
}

impl TwoBodyOperator {
    /// Wraps a pair-basis matrix; fails unless it is square of size `r(r−1)/2` and symmetric.
    pub fn new(n_orbitals: usize, entries: DMatrix<f64>) -> Result<Self> {
        let d = pair_dim(n_orbitals);
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::Dimension(format!(
                "pair operator for r = {n_orbitals} must be {d}x{d}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_symmetric(&entries, 0.0, "two-body operator")?;
        Ok(Self { n_orbitals, entries })
    }

    pub(crate) fn from_matrix_unchecked(n_orbitals: usize, entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), pair_dim(n_orbitals));
        Self { n_orbitals, entries }
    }

    pub fn zeros(n_orbitals: usize) -> Self {
        let d = pair_dim(n_orbitals);
        Self { n_orbitals, entries: DMatrix::zeros(d, d) }
    }

    /// The operator whose tensor components are `δ_i1j1 δ_i2j2 − δ_i1j2 δ_i2j1`.
    pub fn identity(n_orbitals: usize) -> Self {
        let d = pair_dim(n_orbitals);
        Self { n_orbitals, entries: DMatrix::identity(d, d) }
    }

    /// Builds the operator from a tensor-component function `f(i1, i2, j1, j2)`.
    ///
    /// `f` is only sampled on ordered pairs; callers are expected to supply
    /// components that are antisymmetric under `i1↔i2` and `j1↔j2`.
    pub fn from_components<F>(n_orbitals: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize, usize, usize) -> f64,
    {
        let pairs = pair_list(n_orbitals);
        let d = pairs.len();
        let mut m = DMatrix::zeros(d, d);
        for (a, &(i1, i2)) in pairs.iter().enumerate() {
            for (b, &(j1, j2)) in pairs.iter().enumerate() {
                m[(a, b)] = 2.0 * f(i1, i2, j1, j2);
            }
        }
        Self { n_orbitals, entries: m }
    }

    /// Tensor component `Γ[i1,i2; j1,j2]`, zero when either pair repeats an orbital.
    pub fn component(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        match (signed_pair(self.n_orbitals, i1, i2), signed_pair(self.n_orbitals, j1, j2)) {
            (Some((a, sa)), Some((b, sb))) => 0.5 * sa * sb * self.entries[(a, b)],
            _ => 0.0,
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { n_orbitals: self.n_orbitals, entries: &self.entries * factor }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &TwoBodyOperator, factor: f64) -> Result<Self> {
        same_pair_space(self, other)?;
        Ok(Self { n_orbitals: self.n_orbitals, entries: &self.entries + &other.entries * factor })
    }

    /// Returns `self − mu·I₂`.
    pub fn shift(&self, mu: f64) -> Self {
        let mut m = self.entries.clone();
        for k in 0..m.nrows() {
            m[(k, k)] -= mu;
        }
        Self { n_orbitals: self.n_orbitals, entries: m }
    }

    pub(crate) fn symmetrized(mut self) -> Self {
        symmetrize_in_place(&mut self.entries);
        self
    }
}

/// Self-adjoint operator on the full tensor space `h⊗h`, indexed by `i*r + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GSpaceOperator {
    n_orbitals: usize,
    entries: DMatrix<f64>,
}

impl GSpaceOperator {
    pub fn new(n_orbitals: usize, entries: DMatrix<f64>) -> Result<Self> {
        let d = n_orbitals * n_orbitals;
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::Dimension(format!(
                "tensor-space operator for r = {n_orbitals} must be {d}x{d}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_symmetric(&entries, 0.0, "tensor-space operator")?;
        Ok(Self { n_orbitals, entries })
    }

    pub(crate) fn from_matrix_unchecked(n_orbitals: usize, entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), n_orbitals * n_orbitals);
        Self { n_orbitals, entries }
    }

    pub fn zeros(n_orbitals: usize) -> Self {
        let d = n_orbitals * n_orbitals;
        Self { n_orbitals, entries: DMatrix::zeros(d, d) }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_orbitals + j
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Hilbert–Schmidt inner product of two pair-space operators.
pub fn inner(a: &TwoBodyOperator, b: &TwoBodyOperator) -> Result<f64> {
    same_pair_space(a, b)?;
    Ok(CONVENTION_FACTOR * a.entries.dot(&b.entries))
}

/// Hilbert–Schmidt inner product on the tensor pair space.
pub fn inner_g(a: &GSpaceOperator, b: &GSpaceOperator) -> Result<f64> {
    if a.n_orbitals != b.n_orbitals {
        return Err(Error::Dimension(format!(
            "tensor-space operators over r = {} and r = {}",
            a.n_orbitals, b.n_orbitals
        )));
    }
    Ok(a.entries.dot(&b.entries))
}

/// Trace over `h⊗h`; equals `N(N−1)` for a normalized 2-RDM.
pub fn tensor_trace(a: &TwoBodyOperator) -> f64 {
    CONVENTION_FACTOR * a.entries.trace()
}

/// Operators whose smallest eigenvalue can be queried.
pub trait SymmetricMatrix {
    fn symmetric_matrix(&self) -> &DMatrix<f64>;
}

impl SymmetricMatrix for TwoBodyOperator {
    fn symmetric_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

impl SymmetricMatrix for GSpaceOperator {
    fn symmetric_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

impl SymmetricMatrix for OneBodyOperator {
    fn symmetric_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

impl SymmetricMatrix for DMatrix<f64> {
    fn symmetric_matrix(&self) -> &DMatrix<f64> {
        self
    }
}

pub fn min_eigenvalue<A: SymmetricMatrix + ?Sized>(a: &A) -> Result<f64> {
    let eig = symmetric_eigen(a.symmetric_matrix())?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<nalgebra::SymmetricEigen<f64, nalgebra::Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry passed to eigensolver".into()));
    }
    nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITERATIONS).ok_or_else(|| {
        Error::Eigensolver(format!(
            "symmetric QR did not converge within {EIGEN_MAX_ITERATIONS} iterations on a {}x{} matrix",
            m.nrows(),
            m.ncols()
        ))
    })
}

/// Splits a symmetric matrix into its positive part `V max(λ,0) Vᵀ` and returns
/// the matrix square root of that part as well.
pub(crate) fn positive_part_sqrt(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = symmetric_eigen(m)?;
    let v = &eig.eigenvectors;
    let clipped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| l.max(0.0)));
    let roots = clipped.map(f64::sqrt);
    let part = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    let mut part = part;
    let mut root = root;
    symmetrize_in_place(&mut part);
    symmetrize_in_place(&mut root);
    Ok((part, root))
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{what} is {}x{}", m.nrows(), m.ncols())));
    }
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "{what} is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

fn same_pair_space(a: &TwoBodyOperator, b: &TwoBodyOperator) -> Result<()> {
    if a.n_orbitals != b.n_orbitals {
        return Err(Error::Dimension(format!("pair operators over r = {} and r = {}", a.n_orbitals, b.n_orbitals)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        symmetrize_in_place(&mut m);
        m
    }

    #[test]
    fn pair_index_examples() {
        assert_eq!(pair_index(4, 0, 1).unwrap(), 0);
        assert_eq!(pair_index(4, 2, 3).unwrap(), 5);
        assert!(matches!(pair_index(4, 1, 1), Err(Error::Index(_))));
        assert!(pair_index(4, 2, 1).is_err());
        assert!(pair_index(4, 1, 4).is_err());
    }

    #[test]
    fn pair_index_is_lexicographic_bijection() {
        for r in 2..12 {
            let pairs = pair_list(r);
            assert_eq!(pairs.len(), pair_dim(r));
            for (k, &(i, j)) in pairs.iter().enumerate() {
                assert_eq!(pair_index(r, i, j).unwrap(), k);
                assert_eq!(pair_from_index(r, k).unwrap(), (i, j));
            }
        }
        assert!(pair_from_index(4, 6).is_err());
    }

    #[test]
    fn inner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = 5;
        let a = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
        let b = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
        assert_eq!(inner(&TwoBodyOperator::zeros(r), &b).unwrap(), 0.0);
        let id = TwoBodyOperator::identity(r);
        assert_eq!(inner(&id, &id).unwrap(), CONVENTION_FACTOR * pair_dim(r) as f64);
        let ab = inner(&a, &b).unwrap();
        let ba = inner(&b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
        assert!(inner(&a, &TwoBodyOperator::zeros(4)).is_err());
    }

    #[test]
    fn inner_matches_full_tensor_sum() {
        // Hilbert–Schmidt on h⊗h summed over all index orders.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = 4;
        let a = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
        let b = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
        let mut full = 0.0;
        let mut trace = 0.0;
        for i in 0..r {
            for j in 0..r {
                trace += a.component(i, j, i, j);
                for k in 0..r {
                    for l in 0..r {
                        full += a.component(i, j, k, l) * b.component(i, j, k, l);
                    }
                }
            }
        }
        assert!((full - inner(&a, &b).unwrap()).abs() < 1e-12);
        assert!((trace - tensor_trace(&a)).abs() < 1e-12);
    }

    #[test]
    fn tensor_trace_of_zero() {
        assert_eq!(tensor_trace(&TwoBodyOperator::zeros(4)), 0.0);
    }

    #[test]
    fn component_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = 5;
        let a = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
        let b = TwoBodyOperator::from_components(r, |i, j, k, l| a.component(i, j, k, l));
        assert_eq!(a, b);
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    for l in 0..r {
                        let c = a.component(i, j, k, l);
                        assert_eq!(c, -a.component(j, i, k, l));
                        assert_eq!(c, -a.component(i, j, l, k));
                        assert_eq!(c, a.component(k, l, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn min_eigenvalue_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((min_eigenvalue(&id).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 0.0, 3.0]));
        assert!((min_eigenvalue(&d).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_matches_characteristic_polynomial_root() {
        // Independent route: bisection on det(M − λI) via LU, bracketed by Gershgorin.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = random_symmetric(&mut rng, 6);
        let det = |lambda: f64| (&m - DMatrix::identity(6, 6) * lambda).lu().determinant();
        let radius = (0..6).map(|i| (0..6).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        // Scan for the first sign change from below, then bisect.
        let mut lo = -radius - 1.0;
        let steps = 20_000;
        let h = 2.0 * (radius + 1.0) / steps as f64;
        let mut hi = lo;
        for _ in 0..steps {
            hi = lo + h;
            if det(lo).signum() != det(hi).signum() {
                break;
            }
            lo = hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if det(lo).signum() == det(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((min_eigenvalue(&m).unwrap() - root).abs() < 1e-9);
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(1, 1)] = f64::NAN;
        assert!(matches!(min_eigenvalue(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn shift_subtracts_identity() {
        let r = 4;
        let k = TwoBodyOperator::identity(r).scale(3.0);
        let shifted = k.shift(3.0);
        assert_eq!(shifted.frobenius_norm(), 0.0);
        assert!((tensor_trace(&k.shift(1.0)) - tensor_trace(&k) + pair_dim(r) as f64).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TwoBodyOperator::new(4, DMatrix::zeros(5, 5)).is_err());
        assert!(GSpaceOperator::new(3, DMatrix::zeros(8, 8)).is_err());
        let mut m = DMatrix::<f64>::zeros(6, 6);
        m[(0, 1)] = 1.0;
        assert!(TwoBodyOperator::new(4, m).is_err());
        assert!(BasisSpec::new(4, 1).is_err());
        assert!(BasisSpec::new(3, 4).is_err());
    }

    proptest! {
        #[test]
        fn inner_is_positive_definite(seed in 0u64..10_000, r in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
            let aa = inner(&a, &a).unwrap();
            prop_assert!(aa >= 0.0);
            prop_assert!(aa > 0.0 || a.matrix().iter().all(|x| x.abs() < 1e-14));
        }

        #[test]
        fn tensor_trace_is_linear(seed in 0u64..10_000, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = 5;
            let a = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
            let b = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r))).unwrap();
            let combo = a.scale(x).add_scaled(&b, y).unwrap();
            let lhs = tensor_trace(&combo);
            let rhs = x * tensor_trace(&a) + y * tensor_trace(&b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
