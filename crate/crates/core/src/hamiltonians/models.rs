use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{permutations, IntegralSet};
use crate::error::{Error, Result};

/// PRNG behind [`random_two_body`]: `ChaCha8Rng::seed_from_u64(seed)`, values drawn as
/// `scale * (2u − 1)` with `u` the standard `[0, 1)` double, in a fixed traversal order.
pub const RANDOM_GENERATOR: &str = "ChaCha8Rng::seed_from_u64";

/// Two-site Hubbard model at half filling: hopping `−t`, on-site repulsion `U`.
///
/// Ground energy is `(U − √(U² + 16t²))/2`.
pub fn hubbard_dimer(t: f64, u: f64) -> Result<IntegralSet> {
    if !(t > 0.0) || !(u >= 0.0) || !t.is_finite() || !u.is_finite() {
        return Err(Error::InvalidInput(format!("Hubbard dimer needs t > 0 and U >= 0, got t = {t}, U = {u}")));
    }
    let n = 2;
    let mut h = DMatrix::zeros(n, n);
    h[(0, 1)] = -t;
    h[(1, 0)] = -t;
    let mut eri = vec![0.0; n.pow(4)];
    for p in 0..n {
        eri[((p * n + p) * n + p) * n + p] = u;
    }
    IntegralSet::new(n, 2, h, eri, 0.0)
}

/// Seeded random integrals over `n_orbitals / 2` spatial orbitals with entries in `[−scale, scale]`.
///
/// `n_orbitals` counts spin orbitals and must be even.
pub fn random_two_body(seed: u64, n_orbitals: usize, n_electrons: usize, scale: f64) -> Result<IntegralSet> {
    if !n_orbitals.is_multiple_of(2) || n_electrons < 2 || n_electrons > n_orbitals {
        return Err(Error::InvalidInput(format!(
            "random system needs even r >= N >= 2, got r = {n_orbitals}, N = {n_electrons}"
        )));
    }
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::InvalidInput(format!("scale must be finite and >= 0, got {scale}")));
    }
    let n = n_orbitals / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || scale * (2.0 * rng.random::<f64>() - 1.0);

    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = draw();
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    let mut eri = vec![0.0; n.pow(4)];
    for p in 0..n {
        for q in 0..=p {
            let pq = p * (p + 1) / 2 + q;
            for r in 0..n {
                for s in 0..=r {
                    if r * (r + 1) / 2 + s > pq {
                        continue;
                    }
                    let v = draw();
                    for (a, b, c, d) in permutations(p, q, r, s) {
                        eri[((a * n + b) * n + c) * n + d] = v;
                    }
                }
            }
        }
    }
    IntegralSet::new(n, n_electrons, h, eri, 0.0)
}
