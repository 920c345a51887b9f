//! Damped Newton iteration for the zero of `δ(μ)`, and `δ`-curve sampling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, NewtonFailure, Result};
use crate::fci::aufbau_diagonal;
use crate::hamiltonians::{build_reduced_hamiltonian, ReducedHamiltonian, SpinIntegrals};
use crate::pairspace::tensor_trace;
use crate::projection::{project, DualCertificate, ProjectionOptions, ProjectionResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct NewtonConfig {
    /// Starting shift; must lie above the zero of `δ`.
    pub mu0: Option<f64>,
    /// Fraction of the Newton step taken after the first one.
    pub damping: f64,
    /// Slope test tolerance: extrapolate once `p ≤ (1 + ε)·δ′`.
    pub epsilon: f64,
    pub max_outer: usize,
    pub projection: ProjectionOptions,
    /// Run the two confirmation projections around the extrapolated zero.
    pub confirm: bool,
    /// Gradient tolerance factor for re-projecting the last iterate before extrapolating;
    /// `1.0` skips the extra projection.
    pub polish: f64,
    /// Extra full Newton steps taken from the extrapolated zero at the polish tolerance.
    pub refine: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            mu0: None,
            damping: 0.8,
            epsilon: 0.05,
            max_outer: 50,
            projection: ProjectionOptions::default(),
            confirm: true,
            polish: 1e-3,
            refine: 2,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.polish > 0.0 && self.polish <= 1.0) {
            return Err(Error::InvalidInput(format!("polish must lie in (0, 1], got {}", self.polish)));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidInput("max_outer must be at least 1".into()));
        }
        if let Some(mu0) = self.mu0 {
            if !mu0.is_finite() {
                return Err(Error::InvalidInput(format!("mu0 must be finite, got {mu0}")));
            }
        }
        self.projection.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Initial,
    Newton,
    /// Taken after extrapolation to sharpen the located zero.
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub kind: StepKind,
    pub mu: f64,
    pub delta: f64,
    pub derivative: f64,
    /// Secant slope against the previous record; absent for the first.
    pub slope: Option<f64>,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Slope test fired and the last step was extrapolated.
    SlopeTest,
    /// A Newton iterate landed on the zero set of `δ`.
    ZeroDistance,
    /// The default starting value already had zero distance.
    StartAtZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfirmationProbe {
    pub mu_above: f64,
    pub delta_above: Option<f64>,
    pub mu_below: f64,
    pub delta_below: Option<f64>,
    /// `δ` positive just above and below the floor just under the extrapolated zero.
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonTrace {
    pub iterations: Vec<IterationRecord>,
    pub mu_star: Option<f64>,
    pub energy: Option<f64>,
    pub e_core: f64,
    pub n_electrons: usize,
    pub stop: Option<StopReason>,
    pub probe: Option<ConfirmationProbe>,
    #[serde(skip)]
    pub certificate: Option<DualCertificate>,
}

impl NewtonTrace {
    fn new(k: &ReducedHamiltonian) -> Self {
        Self {
            iterations: Vec::new(),
            mu_star: None,
            energy: None,
            e_core: k.e_core(),
            n_electrons: k.basis().n_electrons(),
            stop: None,
            probe: None,
            certificate: None,
        }
    }

    /// Newton updates performed after the initial projection, excluding refinement.
    pub fn outer_iterations(&self) -> usize {
        self.iterations.iter().filter(|r| r.kind == StepKind::Newton).count()
    }

    pub fn refinements(&self) -> usize {
        self.iterations.iter().filter(|r| r.kind == StepKind::Refine).count()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.iterations.iter().map(|r| r.inner_iterations).sum()
    }

    fn finish(&mut self, mu_star: f64, stop: StopReason) {
        let n = self.n_electrons as f64;
        self.mu_star = Some(mu_star);
        self.energy = Some(n * (n - 1.0) * mu_star + self.e_core);
        self.stop = Some(stop);
    }

    fn push(&mut self, kind: StepKind, res: &ProjectionResult, slope: Option<f64>) {
        self.iterations.push(IterationRecord {
            kind,
            mu: res.mu,
            delta: res.distance,
            derivative: res.derivative,
            slope,
            inner_iterations: res.inner_iterations,
        });
    }
}

/// Starting shift from a variational upper bound `⟨D|H|D⟩` on the energy.
pub fn default_mu0(k: &ReducedHamiltonian, oracle_diag: f64) -> f64 {
    let n = k.basis().n_electrons() as f64;
    (oracle_diag - k.e_core()) / (n * (n - 1.0))
}

/// Shift of the maximally mixed state, `tr(K_N)/dim`; always an upper bound.
pub fn mixed_state_mu0(k: &ReducedHamiltonian) -> f64 {
    tensor_trace(k.k_matrix()) / k.basis().pair_dim() as f64
}

/// Locates the zero of `δ` and reports `E = N(N−1)·μ* + e_core`.
///
/// Without `mu0` the maximally mixed shift is used; use [`solve_system`] to start from
/// the Aufbau determinant instead.
pub fn solve_dual(k: &ReducedHamiltonian, cfg: &NewtonConfig) -> Result<NewtonTrace> {
    cfg.validate()?;
    match cfg.mu0 {
        Some(mu0) => run(k, mu0, true, cfg),
        None => run(k, mixed_state_mu0(k), false, cfg),
    }
}

/// Builds `K_N` and solves, defaulting `mu0` to the Aufbau determinant bound.
pub fn solve_system(ints: &SpinIntegrals, cfg: &NewtonConfig) -> Result<(ReducedHamiltonian, NewtonTrace)> {
    cfg.validate()?;
    let k = build_reduced_hamiltonian(ints)?;
    let trace = match cfg.mu0 {
        Some(mu0) => run(&k, mu0, true, cfg)?,
        None => run(&k, default_mu0(&k, aufbau_diagonal(ints)), false, cfg)?,
    };
    Ok((k, trace))
}

fn fail(reason: NewtonFailure, trace: &NewtonTrace) -> Error {
    Error::NewtonFailed { reason, trace: Box::new(trace.clone()) }
}

fn run(k: &ReducedHamiltonian, mu0: f64, user_mu0: bool, cfg: &NewtonConfig) -> Result<NewtonTrace> {
    let opts = &cfg.projection;
    let mut trace = NewtonTrace::new(k);
    let projection_failure =
        |mu: f64, e: Error, trace: &NewtonTrace| fail(NewtonFailure::Projection { mu, source: Box::new(e) }, trace);

    let first = project(k, mu0, None, opts).map_err(|e| projection_failure(mu0, e, &trace))?;
    trace.push(StepKind::Initial, &first, None);
    if first.distance == 0.0 {
        if user_mu0 {
            return Err(fail(NewtonFailure::InitialBelowOptimum { mu0 }, &trace));
        }
        // An upper bound with zero distance is the zero itself.
        trace.certificate = Some(first.certificate);
        trace.finish(mu0, StopReason::StartAtZero);
        return Ok(trace);
    }

    let mut current = first;
    loop {
        if current.derivative <= 0.0 {
            let e = Error::Numerical(format!(
                "non-positive derivative {:.3e} at mu = {} with distance {:.3e}",
                current.derivative, current.mu, current.distance
            ));
            return Err(projection_failure(current.mu, e, &trace));
        }
        if trace.outer_iterations() >= cfg.max_outer {
            return Err(fail(NewtonFailure::MaxOuterExceeded { max_outer: cfg.max_outer }, &trace));
        }
        let a = if trace.iterations.len() == 1 { 1.0 } else { cfg.damping };
        let mu_next = current.mu - a * current.distance / current.derivative;
        let next = project(k, mu_next, Some(&current.certificate), opts)
            .map_err(|e| projection_failure(mu_next, e, &trace))?;
        if next.distance == 0.0 {
            // The zero lies in [mu_next, current.mu]; redo the last step from a sharper projection.
            let sharp = polish(k, &current, cfg).unwrap_or(current);
            let mu_star = (sharp.mu - sharp.distance / sharp.derivative).clamp(mu_next, sharp.mu);
            trace.push(StepKind::Newton, &next, None);
            trace.finish(mu_star, StopReason::ZeroDistance);
            trace.certificate = Some(next.certificate);
            break;
        }
        let slope = (current.distance - next.distance) / (current.mu - next.mu);
        trace.push(StepKind::Newton, &next, Some(slope));
        current = next;
        if slope <= (1.0 + cfg.epsilon) * current.derivative {
            if let Some(res) = polish(k, &current, cfg) {
                let last = trace.iterations.last_mut().expect("recorded");
                last.delta = res.distance;
                last.derivative = res.derivative;
                last.inner_iterations += res.inner_iterations;
                current = res;
            }
            let mu_hat = current.mu - current.distance / current.derivative;
            let (mu_star, certificate) = refine(k, mu_hat, current.certificate, cfg, &mut trace);
            trace.finish(mu_star, StopReason::SlopeTest);
            trace.certificate = Some(certificate);
            break;
        }
    }

    if cfg.confirm && trace.stop == Some(StopReason::SlopeTest) {
        trace.probe = Some(confirm(k, &trace, opts));
    }
    Ok(trace)
}

/// Full Newton steps from the extrapolated value at the polish tolerance. The extrapolation
/// of a convex `δ` never lands below its zero, so each step moves down toward it.
fn refine(
    k: &ReducedHamiltonian,
    mut mu: f64,
    mut certificate: DualCertificate,
    cfg: &NewtonConfig,
    trace: &mut NewtonTrace,
) -> (f64, DualCertificate) {
    let tight = cfg.projection.tightened(k, cfg.polish);
    for _ in 0..cfg.refine {
        let Some(res) = tight_projection(k, mu, &certificate, &tight, cfg) else {
            break;
        };
        trace.push(StepKind::Refine, &res, None);
        certificate = res.certificate;
        if res.distance == 0.0 || res.derivative <= 0.0 {
            break;
        }
        let step = res.distance / res.derivative;
        mu -= step;
        if step <= 1e-9 * mu.abs().max(1.0) {
            break;
        }
    }
    (mu, certificate)
}

/// Re-projects at `res.mu` with the polish tolerance. `None` when disabled or unusable,
/// in which case the regular-tolerance values stand.
fn polish(k: &ReducedHamiltonian, res: &ProjectionResult, cfg: &NewtonConfig) -> Option<ProjectionResult> {
    if cfg.polish >= 1.0 {
        return None;
    }
    let tight = cfg.projection.tightened(k, cfg.polish);
    tight_projection(k, res.mu, &res.certificate, &tight, cfg).filter(|r| r.distance > 0.0 && r.derivative > 0.0)
}

/// Projection at a tightened tolerance; an unconverged best point still counts when it
/// meets the regular tolerance.
fn tight_projection(
    k: &ReducedHamiltonian,
    mu: f64,
    warm: &DualCertificate,
    tight: &ProjectionOptions,
    cfg: &NewtonConfig,
) -> Option<ProjectionResult> {
    match project(k, mu, Some(warm), tight) {
        Ok(res) => Some(res),
        Err(Error::ProjectionNotConverged { best, .. })
            if best.gradient_norm <= cfg.projection.gradient_tolerance(k) =>
        {
            Some(*best)
        }
        Err(_) => None,
    }
}

fn confirm(k: &ReducedHamiltonian, trace: &NewtonTrace, opts: &ProjectionOptions) -> ConfirmationProbe {
    let mu_star = trace.mu_star.unwrap_or_default();
    let scale = if mu_star == 0.0 { 1.0 } else { mu_star.abs() };
    let mu_above = mu_star + 1e-6 * scale;
    let mu_below = mu_star - 1e-4 * scale;
    let delta_above = project(k, mu_above, trace.certificate.as_ref(), opts).ok().map(|r| r.distance);
    let delta_below = project(k, mu_below, None, opts).ok().map(|r| r.distance);
    let passed =
        matches!(delta_above, Some(d) if d > 0.0) && matches!(delta_below, Some(d) if d <= opts.distance_floor);
    ConfirmationProbe { mu_above, delta_above, mu_below, delta_below, passed }
}

/// One point of a sampled `δ` curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub delta: Option<f64>,
    pub derivative: Option<f64>,
    pub error: Option<String>,
}

/// Independent projections at each grid point, in grid order.
///
/// A non-converged projection keeps its best values and records the error.
pub fn sample_delta_curve(k: &ReducedHamiltonian, grid: &[f64], opts: &ProjectionOptions) -> Result<Vec<CurvePoint>> {
    opts.validate()?;
    if let Some(bad) = grid.iter().find(|m| !m.is_finite()) {
        return Err(Error::InvalidInput(format!("grid contains non-finite value {bad}")));
    }
    Ok(grid
        .par_iter()
        .map(|&mu| match project(k, mu, None, opts) {
            Ok(res) => CurvePoint { mu, delta: Some(res.distance), derivative: Some(res.derivative), error: None },
            Err(Error::ProjectionNotConverged { best, .. }) => CurvePoint {
                mu,
                delta: Some(best.distance),
                derivative: Some(best.derivative),
                error: Some("projection not converged".into()),
            },
            Err(e) => CurvePoint { mu, delta: None, derivative: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || points < 2 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid needs finite mu_min < mu_max and at least 2 points, got [{lo}, {hi}] with {points}"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::solve_fci;
    use crate::hamiltonians::{hubbard_dimer, random_two_body, reduced_from_integrals, spinify};

    fn fci_energy(ints: &SpinIntegrals) -> f64 {
        solve_fci(ints, 50_000).unwrap().energy()
    }

    fn check_trace(trace: &NewtonTrace) {
        for w in trace.iterations.windows(2) {
            assert!(w[1].mu < w[0].mu, "mu not decreasing: {:?}", trace.iterations);
        }
        let last = trace.iterations.len() - 1;
        assert!(trace.iterations[..last].iter().all(|r| r.delta > 0.0));
    }

    #[test]
    fn n2_matches_fci() {
        let ints = spinify(&random_two_body(3, 4, 2, 1.0).unwrap()).unwrap();
        let (_, trace) = solve_system(&ints, &NewtonConfig::default()).unwrap();
        check_trace(&trace);
        assert!((trace.energy.unwrap() - fci_energy(&ints)).abs() < 1e-6);
        assert!(trace.outer_iterations() <= 5);
    }

    #[test]
    fn hubbard_dimer_in_band() {
        let ints = spinify(&hubbard_dimer(1.0, 4.0).unwrap()).unwrap();
        let (_, trace) = solve_system(&ints, &NewtonConfig::default()).unwrap();
        let exact = 2.0 - 8f64.sqrt();
        let e = trace.energy.unwrap();
        assert!(e >= exact - 1e-4 && e <= exact + 1e-6, "{e} vs {exact}");
    }

    #[test]
    fn n3_is_lower_bound() {
        let ints = spinify(&random_two_body(21, 6, 3, 1.0).unwrap()).unwrap();
        let (_, trace) = solve_system(&ints, &NewtonConfig::default()).unwrap();
        check_trace(&trace);
        assert!(trace.energy.unwrap() <= fci_energy(&ints) + 1e-6);
        assert!(trace.outer_iterations() <= 5, "{:?}", trace.iterations);
    }

    #[test]
    fn default_mu0_examples() {
        let ints = spinify(&hubbard_dimer(1.0, 4.0).unwrap()).unwrap();
        let k = build_reduced_hamiltonian(&ints).unwrap();
        let mu0 = default_mu0(&k, aufbau_diagonal(&ints));
        assert!(mu0 >= (2.0 - 8f64.sqrt()) / 2.0);
        assert!(mixed_state_mu0(&k) >= (2.0 - 8f64.sqrt()) / 2.0);
    }

    #[test]
    fn noninteracting_start_is_the_answer() {
        // Aufbau is exact without interaction, so the default start already has zero distance.
        let mut ints = random_two_body(2, 6, 2, 0.0).unwrap();
        let h = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 0.5, 2.0]));
        ints = crate::hamiltonians::IntegralSet::new(3, 2, h, ints.two_electron().to_vec(), 0.0).unwrap();
        let spin = spinify(&ints).unwrap();
        let (_, trace) = solve_system(&spin, &NewtonConfig::default()).unwrap();
        assert!((trace.energy.unwrap() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn user_mu0_below_zero_errors() {
        let (_, k) = reduced_from_integrals(&hubbard_dimer(1.0, 4.0).unwrap()).unwrap();
        let cfg = NewtonConfig { mu0: Some(-10.0), ..NewtonConfig::default() };
        match solve_dual(&k, &cfg) {
            Err(Error::NewtonFailed { reason: NewtonFailure::InitialBelowOptimum { mu0 }, trace }) => {
                assert_eq!(mu0, -10.0);
                assert_eq!(trace.iterations.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn max_outer_reports_trace() {
        let (_, k) = reduced_from_integrals(&random_two_body(21, 6, 3, 1.0).unwrap()).unwrap();
        let cfg = NewtonConfig { max_outer: 1, epsilon: 1e-12, ..NewtonConfig::default() };
        match solve_dual(&k, &cfg) {
            Err(e @ Error::NewtonFailed { .. }) => assert!(e.is_non_convergence()),
            Ok(t) => assert!(t.outer_iterations() <= 1),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn scaling_leaves_zero_in_place() {
        let (_, k) = reduced_from_integrals(&random_two_body(5, 6, 3, 1.0).unwrap()).unwrap();
        let base = NewtonConfig::default();
        let mut scaled = base;
        scaled.projection.metric_scale = 9.0;
        let a = solve_dual(&k, &base).unwrap();
        let b = solve_dual(&k, &scaled).unwrap();
        assert!((a.mu_star.unwrap() - b.mu_star.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        let (_, k) = reduced_from_integrals(&hubbard_dimer(1.0, 1.0).unwrap()).unwrap();
        for cfg in [
            NewtonConfig { damping: 0.0, ..NewtonConfig::default() },
            NewtonConfig { damping: 1.5, ..NewtonConfig::default() },
            NewtonConfig { epsilon: 0.0, ..NewtonConfig::default() },
            NewtonConfig { mu0: Some(f64::NAN), ..NewtonConfig::default() },
        ] {
            assert!(matches!(solve_dual(&k, &cfg), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn curve_below_zero_is_flat() {
        let (_, k) = reduced_from_integrals(&hubbard_dimer(1.0, 4.0).unwrap()).unwrap();
        let grid = linear_grid(-5.0, -3.0, 5).unwrap();
        let pts = sample_delta_curve(&k, &grid, &ProjectionOptions::default()).unwrap();
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().zip(&grid).all(|(p, &m)| p.mu == m && p.delta == Some(0.0)));
    }

    #[test]
    fn grid_validation() {
        assert!(linear_grid(1.0, 0.0, 3).is_err());
        assert!(linear_grid(0.0, 1.0, 1).is_err());
        assert_eq!(linear_grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
