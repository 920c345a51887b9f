//! Invariant suites run by `dualrdm check`.
//!
//! Each suite is seeded and deterministic. A suite reports its worst observed violation
//! against a fixed tolerance.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fci::{contract_2rdm, enumerate_basis, hamiltonian_matrix, solve_fci, WaveFunction};
use crate::hamiltonians::{hubbard_dimer, random_two_body, reduced_from_integrals, spinify};
use crate::pairspace::{inner, inner_g, min_eigenvalue, pair_dim, GSpaceOperator, TwoBodyOperator};
use crate::projection::{objective_and_gradient, project, DualCertificate, ProjectionOptions};
use crate::representability::{adjoint_g, adjoint_q, apply_g, apply_p, apply_q, lift_dual, DualBlocks};

pub const DEFAULT_SEED: u64 = 20_050_101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub seed: u64,
    /// Test hook: perturbs the G adjoint so the adjoint suite must fail.
    pub corrupt_adjoint: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, corrupt_adjoint: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest violation measure seen, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<14} {}  cases={:<4} worst={:.3e} tol={:.1e}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

pub const SUITES: [&str; 6] = ["adjoint", "gradient", "orthogonality", "necessity", "energy-chain", "polar"];

/// Runs every suite; an `Err` means a suite could not run at all.
pub fn run_all(opts: &CheckOptions) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|name| run_suite(name, opts)).collect()
}

pub fn run_suite(name: &str, opts: &CheckOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let (name, cases, worst, tolerance) = match name {
        "adjoint" => ("adjoint", 100, adjoint_suite(opts)?, 1e-11),
        "gradient" => ("gradient", 20, gradient_suite(opts.seed)?, 1e-6),
        "orthogonality" => {
            let (cases, worst) = orthogonality_suite(opts.seed)?;
            ("orthogonality", cases, worst, 1e-5)
        }
        "necessity" => {
            let (cases, worst) = necessity_suite(opts.seed)?;
            ("necessity", cases, worst, 1e-8)
        }
        "energy-chain" => ("energy-chain", 100, energy_chain_suite(opts.seed)?, 1e-10),
        "polar" => {
            let (cases, worst) = polar_suite(opts.seed)?;
            ("polar", cases, worst, 1e-10)
        }
        other => {
            return Err(crate::error::Error::InvalidInput(format!(
                "unknown suite '{other}'; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        name,
        passed: worst <= tolerance,
        cases,
        worst,
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Worst `|⟨L(Γ), B⟩ − ⟨Γ, L*(B)⟩| / (‖Γ‖‖B‖)` over Q and G at `r = 6`.
fn adjoint_suite(opts: &CheckOptions) -> Result<f64> {
    let (r, n) = (6, 3);
    let mut rng = suite_rng(opts.seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let gamma = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r)))?;
        let bq = TwoBodyOperator::new(r, random_symmetric(&mut rng, pair_dim(r)))?;
        let bg = GSpaceOperator::new(r, random_symmetric(&mut rng, r * r))?;
        let mut g_star = adjoint_g(&bg, n)?;
        if opts.corrupt_adjoint {
            g_star = g_star.scale(1.0 + 1e-3);
        }
        let q_gap = inner(&apply_q(&gamma, n)?, &bq)? - inner(&gamma, &adjoint_q(&bq, n)?)?;
        let g_gap = inner_g(&apply_g(&gamma, n)?, &bg)? - inner(&gamma, &g_star)?;
        let gn = gamma.frobenius_norm();
        worst = worst.max(q_gap.abs() / (gn * bq.frobenius_norm())).max(g_gap.abs() / (gn * bg.frobenius_norm()));
    }
    Ok(worst)
}

/// Worst relative mismatch between directional central differences and the gradient.
fn gradient_suite(seed: u64) -> Result<f64> {
    let mut rng = suite_rng(seed, 2);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let (r, n) = if i % 2 == 0 { (6, 3) } else { (4, 2) };
        let (_, k) = reduced_from_integrals(&random_two_body(seed.wrapping_add(i), r, n, 1.0)?)?;
        let mu = rng.random_range(-1.0..1.0);
        let mut factor = |scale: f64| {
            let (da, dg) = (pair_dim(r), r * r);
            let c_p = random_symmetric(&mut rng, da) * scale;
            let c_q = random_symmetric(&mut rng, da) * scale;
            let c_g = random_symmetric(&mut rng, dg) * scale;
            DualCertificate::new(r, c_p, c_q, c_g)
        };
        let point = factor(0.3)?;
        let dir = factor(1.0)?;
        let shifted = |s: f64| {
            DualCertificate::new(r, &point.c_p + &dir.c_p * s, &point.c_q + &dir.c_q * s, &point.c_g + &dir.c_g * s)
        };
        let plus = objective_and_gradient(&k, mu, &shifted(h)?)?.0;
        let minus = objective_and_gradient(&k, mu, &shifted(-h)?)?.0;
        let fd = (plus - minus) / (2.0 * h);
        let (_, grad) = objective_and_gradient(&k, mu, &point)?;
        let analytic = grad.c_p.dot(&dir.c_p) + grad.c_q.dot(&dir.c_q) + grad.c_g.dot(&dir.c_g);
        worst = worst.max((fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-12));
    }
    Ok(worst)
}

/// Worst `|⟨R, A_μ⟩| / (‖R‖‖A_μ‖)` over converged projections with `δ > 1e-6`.
fn orthogonality_suite(seed: u64) -> Result<(usize, f64)> {
    let mut systems = vec![reduced_from_integrals(&hubbard_dimer(1.0, 4.0)?)?.1];
    for i in 0..3u64 {
        let (r, n) = [(4, 2), (6, 2), (6, 3)][i as usize];
        systems.push(reduced_from_integrals(&random_two_body(seed.wrapping_add(100 + i), r, n, 1.0)?)?.1);
    }
    let opts = ProjectionOptions::default();
    let mut cases = 0;
    let mut worst = 0.0f64;
    for k in &systems {
        let lowest = min_eigenvalue(k.k_matrix())?;
        for offset in [0.05, 0.2, 0.5, 1.0] {
            let res = project(k, lowest + offset, None, &opts)?;
            if res.distance > 1e-6 {
                cases += 1;
                worst = worst.max(res.orthogonality);
            }
        }
    }
    Ok((cases, worst))
}

/// Oracle ground states of seeded systems satisfy P, Q and G; reports the most negative
/// eigenvalue found, negated.
fn necessity_suite(seed: u64) -> Result<(usize, f64)> {
    let mut states = Vec::new();
    states.push(solve_fci(&spinify(&hubbard_dimer(1.0, 4.0)?)?, 100)?);
    for (i, (r, n)) in [(4, 2), (6, 2), (6, 3), (6, 4), (8, 3), (8, 4), (8, 5), (10, 3)].into_iter().enumerate() {
        states.push(solve_fci(&spinify(&random_two_body(seed.wrapping_add(200 + i as u64), r, n, 1.0)?)?, 50_000)?);
    }
    let mut worst = 0.0f64;
    for psi in &states {
        let n = psi.determinants().basis().n_electrons();
        let gamma = contract_2rdm(psi);
        let lowest = min_eigenvalue(&apply_p(&gamma))?
            .min(min_eigenvalue(&apply_q(&gamma, n)?)?)
            .min(min_eigenvalue(&apply_g(&gamma, n)?)?);
        worst = worst.max(-lowest);
    }
    Ok((states.len(), worst))
}

/// `⟨Ψ|H|Ψ⟩ = ⟨K_N, Γ_Ψ⟩ + e_core` for random normalized states at `r = 6, N = 3`.
fn energy_chain_suite(seed: u64) -> Result<f64> {
    let ints = random_two_body(seed.wrapping_add(300), 6, 3, 1.0)?;
    let (spin, k) = reduced_from_integrals(&ints)?;
    let dets = enumerate_basis(spin.basis(), 100)?;
    let h = hamiltonian_matrix(&dets, &spin)?;
    let mut rng = suite_rng(seed, 3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let coefficients = DVector::from_fn(h.dim(), |_, _| rng.random_range(-1.0..1.0));
        let psi = WaveFunction::from_coefficients(&h, coefficients)?;
        let chain = inner(k.k_matrix(), &contract_2rdm(&psi))? + k.e_core();
        worst = worst.max((chain - psi.energy()).abs() / psi.energy().abs().max(1.0));
    }
    Ok(worst)
}

/// Lifted PSD dual blocks pair nonnegatively with oracle 2-RDMs; reports the most
/// negative relative pairing found, negated.
fn polar_suite(seed: u64) -> Result<(usize, f64)> {
    let mut rng = suite_rng(seed, 4);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (i, (r, n)) in [(4, 2), (6, 3), (6, 4), (8, 3)].into_iter().enumerate() {
        let psi = solve_fci(&spinify(&random_two_body(seed.wrapping_add(400 + i as u64), r, n, 1.0)?)?, 50_000)?;
        let gamma = contract_2rdm(&psi);
        for _ in 0..5 {
            let square = |m: DMatrix<f64>| &m * &m;
            let blocks = DualBlocks {
                b_p: TwoBodyOperator::new(r, square(random_symmetric(&mut rng, pair_dim(r))))?,
                b_q: TwoBodyOperator::new(r, square(random_symmetric(&mut rng, pair_dim(r))))?,
                b_g: GSpaceOperator::new(r, square(random_symmetric(&mut rng, r * r)))?,
            };
            let lifted = lift_dual(&blocks, n)?;
            let pairing = inner(&lifted, &gamma)? / (lifted.frobenius_norm() * gamma.frobenius_norm());
            worst = worst.max(-pairing);
            cases += 1;
        }
    }
    Ok((cases, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        let opts = CheckOptions::default();
        for name in ["adjoint", "gradient", "energy-chain"] {
            let report = run_suite(name, &opts).unwrap();
            assert!(report.passed, "{report}");
        }
    }

    #[test]
    fn corrupted_adjoint_fails() {
        let opts = CheckOptions { corrupt_adjoint: true, ..CheckOptions::default() };
        let report = run_suite("adjoint", &opts).unwrap();
        assert!(!report.passed);
        assert!(report.to_string().contains("adjoint"));
    }

    #[test]
    fn seeded_runs_repeat() {
        let opts = CheckOptions { seed: 12345, corrupt_adjoint: false };
        let a = run_suite("adjoint", &opts).unwrap();
        let b = run_suite("adjoint", &opts).unwrap();
        assert_eq!(a.worst.to_bits(), b.worst.to_bits());
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", &CheckOptions::default()).is_err());
    }
}
