//! Projection of `K_N − μ` onto the polar cone of the approximate representability conditions.
//!
//! The projection minimizes `J(C) = ½‖K_N − μ − Σ_ℓ L_ℓ*(C_ℓ²)‖²` over symmetric factors
//! `C_ℓ` by L-BFGS. Any certificate lifts to a point of the polar cone, so the residual norm
//! is always an upper bound on the true distance `δ(μ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonians::ReducedHamiltonian;
use crate::lbfgs::{self, LbfgsOptions, Problem, Status};
use crate::pairspace::{positive_part_sqrt, symmetrize_in_place, tensor_trace, GSpaceOperator, TwoBodyOperator};
use crate::representability::{adjoint_g, adjoint_q, apply_g, apply_q, ConditionSet, DualBlocks};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionOptions {
    /// Max-norm gradient tolerance; `None` means `1e-7 · max(1, ‖K_N‖)`.
    pub tol_g: Option<f64>,
    pub max_inner: usize,
    /// L-BFGS history length.
    pub memory: usize,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub wolfe_c1: f64,
    /// Curvature constant of the Wolfe conditions.
    pub wolfe_c2: f64,
    /// Distances below this are reported as exactly zero.
    pub distance_floor: f64,
    /// Tolerance of the Moreau orthogonality diagnostic.
    pub ortho_tol: f64,
    /// Multiplies the pair-space inner product used for `J`, `δ` and `δ′`.
    pub metric_scale: f64,
    pub conditions: ConditionSet,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol_g: None,
            max_inner: 20_000,
            memory: 3,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            distance_floor: 1e-9,
            ortho_tol: 1e-5,
            metric_scale: 1.0,
            conditions: ConditionSet::PQG,
        }
    }
}

impl ProjectionOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(what.to_string()));
        if let Some(t) = self.tol_g {
            if !(t > 0.0) {
                return bad("tol_g must be positive");
            }
        }
        if self.memory == 0 {
            return bad("L-BFGS memory must be at least 1");
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad("Wolfe constants must satisfy 0 < c1 < c2 < 1");
        }
        if !(self.distance_floor >= 0.0) || !(self.ortho_tol > 0.0) {
            return bad("distance_floor must be >= 0 and ortho_tol > 0");
        }
        if !(self.metric_scale > 0.0) || !self.metric_scale.is_finite() {
            return bad("metric_scale must be positive and finite");
        }
        Ok(())
    }

    /// Gradient tolerance for a given `K_N`.
    pub fn gradient_tolerance(&self, k: &ReducedHamiltonian) -> f64 {
        let base = self.tol_g.unwrap_or_else(|| 1e-7 * k.norm().max(1.0));
        base * self.metric_scale
    }

    /// Same options with the gradient tolerance for `k` multiplied by `factor`.
    pub fn tightened(&self, k: &ReducedHamiltonian, factor: f64) -> Self {
        Self { tol_g: Some(self.gradient_tolerance(k) * factor / self.metric_scale), ..*self }
    }
}

/// Symmetric factors whose squares are the dual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    n_orbitals: usize,
    pub c_p: DMatrix<f64>,
    pub c_q: DMatrix<f64>,
    pub c_g: DMatrix<f64>,
}

impl DualCertificate {
    pub fn zeros(n_orbitals: usize) -> Self {
        let da = crate::pairspace::pair_dim(n_orbitals);
        let dg = n_orbitals * n_orbitals;
        Self { n_orbitals, c_p: DMatrix::zeros(da, da), c_q: DMatrix::zeros(da, da), c_g: DMatrix::zeros(dg, dg) }
    }

    /// Checks shapes and symmetrizes the factors.
    pub fn new(n_orbitals: usize, c_p: DMatrix<f64>, c_q: DMatrix<f64>, c_g: DMatrix<f64>) -> Result<Self> {
        let da = crate::pairspace::pair_dim(n_orbitals);
        let dg = n_orbitals * n_orbitals;
        let ok = |m: &DMatrix<f64>, d: usize| m.nrows() == d && m.ncols() == d;
        if !ok(&c_p, da) || !ok(&c_q, da) || !ok(&c_g, dg) {
            return Err(Error::Dimension(format!(
                "certificate for r = {n_orbitals} needs {da}x{da}, {da}x{da}, {dg}x{dg} factors"
            )));
        }
        let mut cert = Self { n_orbitals, c_p, c_q, c_g };
        symmetrize_in_place(&mut cert.c_p);
        symmetrize_in_place(&mut cert.c_q);
        symmetrize_in_place(&mut cert.c_g);
        Ok(cert)
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    /// `(C_P², C_Q², C_G²)`, PSD by construction.
    pub fn blocks(&self) -> DualBlocks {
        DualBlocks {
            b_p: TwoBodyOperator::from_matrix_unchecked(self.n_orbitals, sym_square(&self.c_p)),
            b_q: TwoBodyOperator::from_matrix_unchecked(self.n_orbitals, sym_square(&self.c_q)),
            b_g: GSpaceOperator::from_matrix_unchecked(self.n_orbitals, sym_square(&self.c_g)),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.c_p.norm_squared() + self.c_q.norm_squared() + self.c_g.norm_squared()).sqrt()
    }

    fn layout(&self, conditions: ConditionSet) -> Vec<Block> {
        let mut out = Vec::new();
        if conditions.p {
            out.push(Block::P);
        }
        if conditions.q {
            out.push(Block::Q);
        }
        if conditions.g {
            out.push(Block::G);
        }
        out
    }

    fn factor(&self, block: Block) -> &DMatrix<f64> {
        match block {
            Block::P => &self.c_p,
            Block::Q => &self.c_q,
            Block::G => &self.c_g,
        }
    }

    fn factor_mut(&mut self, block: Block) -> &mut DMatrix<f64> {
        match block {
            Block::P => &mut self.c_p,
            Block::Q => &mut self.c_q,
            Block::G => &mut self.c_g,
        }
    }

    fn to_vector(&self, layout: &[Block]) -> Vec<f64> {
        let mut v = Vec::new();
        for &b in layout {
            v.extend_from_slice(self.factor(b).as_slice());
        }
        v
    }

    fn with_vector(&self, layout: &[Block], v: &[f64]) -> Self {
        let mut out = self.clone();
        let mut offset = 0;
        for &b in layout {
            let m = out.factor_mut(b);
            let len = m.len();
            m.as_mut_slice().copy_from_slice(&v[offset..offset + len]);
            offset += len;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    P,
    Q,
    G,
}

/// Outcome of one projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub mu: f64,
    /// Projected point `A_μ = Σ L_ℓ*(C_ℓ²)`.
    pub a_mu: TwoBodyOperator,
    /// `K_N − μ − A_μ`.
    pub residual: TwoBodyOperator,
    /// `δ(μ)`, exactly zero below the distance floor.
    pub distance: f64,
    /// `δ′(μ) = −tr(R)/‖R‖` (in the scaled metric), zero where the distance is zero.
    pub derivative: f64,
    pub certificate: DualCertificate,
    pub inner_iterations: usize,
    pub gradient_norm: f64,
    /// Final value of `J`.
    pub objective: f64,
    /// `|⟨R, A_μ⟩| / (‖R‖‖A_μ‖)`, zero when either norm vanishes.
    pub orthogonality: f64,
}

impl ProjectionResult {
    /// True when the Moreau orthogonality diagnostic is within `ortho_tol`.
    pub fn is_orthogonal(&self, ortho_tol: f64) -> bool {
        self.orthogonality <= ortho_tol
    }
}

fn sym_square(c: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = c * c;
    symmetrize_in_place(&mut b);
    b
}

/// `C·L + L·C`, symmetrized.
fn anticommutator(c: &DMatrix<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = c * l + l * c;
    symmetrize_in_place(&mut m);
    m
}

/// `K_N − μ·I₂ − lift_dual(C²)`.
pub fn residual(k: &ReducedHamiltonian, mu: f64, cert: &DualCertificate) -> Result<TwoBodyOperator> {
    check_cert(k, cert)?;
    let lifted = crate::representability::lift_dual(&cert.blocks(), k.basis().n_electrons())?;
    k.k_matrix().shift(mu).add_scaled(&lifted, -1.0)
}

fn check_cert(k: &ReducedHamiltonian, cert: &DualCertificate) -> Result<()> {
    if cert.n_orbitals != k.basis().n_orbitals() {
        return Err(Error::Dimension(format!(
            "certificate over r = {} for a Hamiltonian over r = {}",
            cert.n_orbitals,
            k.basis().n_orbitals()
        )));
    }
    Ok(())
}

/// Objective value and its gradient with respect to each factor, for all three blocks.
pub fn objective_and_gradient(
    k: &ReducedHamiltonian,
    mu: f64,
    cert: &DualCertificate,
) -> Result<(f64, DualCertificate)> {
    objective_and_gradient_with(k, mu, cert, ConditionSet::PQG, 1.0)
}

pub fn objective_and_gradient_with(
    k: &ReducedHamiltonian,
    mu: f64,
    cert: &DualCertificate,
    conditions: ConditionSet,
    metric_scale: f64,
) -> Result<(f64, DualCertificate)> {
    let n = k.basis().n_electrons();
    let mut masked = cert.clone();
    if !conditions.q {
        masked.c_q.fill(0.0);
    }
    if !conditions.g {
        masked.c_g.fill(0.0);
    }
    let r = residual(k, mu, &masked)?;
    let value = 0.5 * metric_scale * r.matrix().norm_squared();
    let mut grad = DualCertificate::zeros(cert.n_orbitals);
    if conditions.p {
        grad.c_p = anticommutator(&masked.c_p, r.matrix()) * -metric_scale;
    }
    if conditions.q {
        let lq = apply_q(&r, n)?;
        grad.c_q = anticommutator(&masked.c_q, lq.matrix()) * -metric_scale;
    }
    if conditions.g {
        let lg = apply_g(&r, n)?;
        grad.c_g = anticommutator(&masked.c_g, lg.matrix()) * -metric_scale;
    }
    Ok((value, grad))
}

struct FactorProblem<'a> {
    k: &'a ReducedHamiltonian,
    mu: f64,
    template: DualCertificate,
    layout: Vec<Block>,
    conditions: ConditionSet,
    metric_scale: f64,
    /// Coefficients of `J(x + αd)` as a quartic in `α`.
    line: [f64; 5],
}

impl FactorProblem<'_> {
    fn lift_blocks(&self, p: &DMatrix<f64>, q: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let r = self.template.n_orbitals;
        let n = self.k.basis().n_electrons();
        let mut out = p.clone();
        if self.conditions.q {
            out += adjoint_q(&TwoBodyOperator::from_matrix_unchecked(r, q.clone()), n)?.into_matrix();
        }
        if self.conditions.g {
            out += adjoint_g(&GSpaceOperator::from_matrix_unchecked(r, g.clone()), n)?.into_matrix();
        }
        Ok(out)
    }
}

impl Problem for FactorProblem<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let cert = self.template.with_vector(&self.layout, x);
        let (value, grad) = objective_and_gradient_with(self.k, self.mu, &cert, self.conditions, self.metric_scale)?;
        Ok((value, grad.to_vector(&self.layout)))
    }

    fn begin_line(&mut self, x: &[f64], direction: &[f64]) -> Result<()> {
        let c = self.template.with_vector(&self.layout, x);
        let d = self.template.with_vector(&self.layout, direction);
        let r0 = residual(self.k, self.mu, &c)?.into_matrix();
        let cross = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = a * b + b * a;
            symmetrize_in_place(&mut m);
            m
        };
        let u = self.lift_blocks(&cross(&c.c_p, &d.c_p), &cross(&c.c_q, &d.c_q), &cross(&c.c_g, &d.c_g))?;
        let v = self.lift_blocks(&sym_square(&d.c_p), &sym_square(&d.c_q), &sym_square(&d.c_g))?;
        // R(α) = R0 − αU − α²V
        let s = 0.5 * self.metric_scale;
        self.line = [
            s * r0.norm_squared(),
            s * -2.0 * r0.dot(&u),
            s * (u.norm_squared() - 2.0 * r0.dot(&v)),
            s * 2.0 * u.dot(&v),
            s * v.norm_squared(),
        ];
        Ok(())
    }

    fn line_value(&mut self, _x: &[f64], _direction: &[f64], alpha: f64) -> Result<(f64, f64)> {
        let c = &self.line;
        let f = c[0] + alpha * (c[1] + alpha * (c[2] + alpha * (c[3] + alpha * c[4])));
        let df = c[1] + alpha * (2.0 * c[2] + alpha * (3.0 * c[3] + alpha * 4.0 * c[4]));
        Ok((f, df))
    }
}

/// Starting factors: `C_P = √(K_N − μ)₊`; `C_Q`, `C_G` from the positive parts of the
/// forward maps of the remaining residual with an exact step along that direction, plus a
/// small multiple of the identity so no block starts at the stationary point `C = 0`.
pub fn initial_certificate(k: &ReducedHamiltonian, mu: f64, opts: &ProjectionOptions) -> Result<DualCertificate> {
    let r = k.basis().n_orbitals();
    let n = k.basis().n_electrons();
    let shifted = k.k_matrix().shift(mu);
    let (positive, root) = positive_part_sqrt(shifted.matrix())?;
    let mut cert = DualCertificate::zeros(r);
    cert.c_p = root;
    let r0 = TwoBodyOperator::from_matrix_unchecked(r, shifted.matrix() - positive);
    let r0_norm = r0.frobenius_norm();
    if opts.metric_scale.sqrt() * r0_norm <= opts.distance_floor {
        return Ok(cert);
    }
    let (bq, cq) = if opts.conditions.q {
        positive_part_sqrt(apply_q(&r0, n)?.matrix())?
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    };
    let (bg, cg) = if opts.conditions.g {
        positive_part_sqrt(apply_g(&r0, n)?.matrix())?
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    };
    let mut direction = DMatrix::zeros(r0.dim(), r0.dim());
    if opts.conditions.q {
        direction += adjoint_q(&TwoBodyOperator::from_matrix_unchecked(r, bq), n)?.into_matrix();
    }
    if opts.conditions.g {
        direction += adjoint_g(&GSpaceOperator::from_matrix_unchecked(r, bg), n)?.into_matrix();
    }
    let dd = direction.norm_squared();
    let step = if dd > 0.0 { (r0.matrix().dot(&direction) / dd).max(0.0) } else { 0.0 };
    let root_step = step.sqrt();
    let da = r0.dim();
    let jitter_a = 1e-2 * (r0_norm / da as f64).sqrt();
    let jitter_g = 1e-2 * (r0_norm / (r * r) as f64).sqrt();
    if opts.conditions.q {
        cert.c_q = cq * root_step + DMatrix::identity(da, da) * jitter_a;
    }
    if opts.conditions.g {
        cert.c_g = cg * root_step + DMatrix::identity(r * r, r * r) * jitter_g;
    }
    Ok(cert)
}

/// Largest relative positive part `‖L_ℓ(R)₊‖/‖R‖` tolerated at a stationary point.
const SADDLE_TOL: f64 = 1e-3;
const MAX_ESCAPES: usize = 20;

/// Leaves a spurious stationary point of `J`.
///
/// A stationary factorization is optimal only if every `L_ℓ(R)` is negative semidefinite.
/// Otherwise the positive parts `P_ℓ` give a direction `D = Σ L_ℓ*(P_ℓ)` with
/// `⟨R, D⟩ = Σ‖P_ℓ‖² > 0`; the blocks move to `C_ℓ² + t P_ℓ` with the exact step `t`.
fn escape_saddle(
    k: &ReducedHamiltonian,
    cert: &DualCertificate,
    r: &TwoBodyOperator,
    opts: &ProjectionOptions,
) -> Result<Option<DualCertificate>> {
    let n = k.basis().n_electrons();
    let orbitals = k.basis().n_orbitals();
    let r_norm = r.frobenius_norm();
    if r_norm == 0.0 {
        return Ok(None);
    }
    let (pp, _) = positive_part_sqrt(r.matrix())?;
    let (pq, pg) = (
        if opts.conditions.q { positive_part_sqrt(apply_q(r, n)?.matrix())?.0 } else { DMatrix::zeros(0, 0) },
        if opts.conditions.g { positive_part_sqrt(apply_g(r, n)?.matrix())?.0 } else { DMatrix::zeros(0, 0) },
    );
    let worst = pp.norm().max(pq.norm()).max(pg.norm());
    if worst <= SADDLE_TOL * r_norm {
        return Ok(None);
    }
    let mut direction = pp.clone();
    if opts.conditions.q {
        direction += adjoint_q(&TwoBodyOperator::from_matrix_unchecked(orbitals, pq.clone()), n)?.into_matrix();
    }
    if opts.conditions.g {
        direction += adjoint_g(&GSpaceOperator::from_matrix_unchecked(orbitals, pg.clone()), n)?.into_matrix();
    }
    let dd = direction.norm_squared();
    if dd == 0.0 {
        return Ok(None);
    }
    let t = r.matrix().dot(&direction) / dd;
    let mut next = cert.clone();
    next.c_p = positive_part_sqrt(&(sym_square(&cert.c_p) + pp * t))?.1;
    if opts.conditions.q {
        next.c_q = positive_part_sqrt(&(sym_square(&cert.c_q) + pq * t))?.1;
    }
    if opts.conditions.g {
        next.c_g = positive_part_sqrt(&(sym_square(&cert.c_g) + pg * t))?.1;
    }
    Ok(Some(next))
}

/// `C_P = √(K_N − μ)` when `K_N − μ` is positive semidefinite up to the distance floor.
fn psd_certificate(k: &ReducedHamiltonian, mu: f64, opts: &ProjectionOptions) -> Result<Option<DualCertificate>> {
    let shifted = k.k_matrix().shift(mu);
    let (positive, root) = positive_part_sqrt(shifted.matrix())?;
    let negative = (shifted.matrix() - positive).norm();
    if opts.metric_scale.sqrt() * negative > opts.distance_floor {
        return Ok(None);
    }
    let mut cert = DualCertificate::zeros(k.basis().n_orbitals());
    cert.c_p = root;
    Ok(Some(cert))
}

/// Projects `K_N − μ` onto the approximate polar cone.
pub fn project(
    k: &ReducedHamiltonian,
    mu: f64,
    warm: Option<&DualCertificate>,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    opts.validate()?;
    if !mu.is_finite() {
        return Err(Error::InvalidInput(format!("mu must be finite, got {mu}")));
    }
    let start = match warm {
        Some(c) => {
            check_cert(k, c)?;
            if let Some(zero) = psd_certificate(k, mu, opts)? {
                return finish(k, mu, zero, 0, 0.0, opts);
            }
            let mut c = c.clone();
            if !opts.conditions.q {
                c.c_q.fill(0.0);
            }
            if !opts.conditions.g {
                c.c_g.fill(0.0);
            }
            // A certificate from a distant shift can start far worse than the cold guess.
            let cold = initial_certificate(k, mu, opts)?;
            if residual(k, mu, &cold)?.frobenius_norm() < residual(k, mu, &c)?.frobenius_norm() {
                cold
            } else {
                c
            }
        }
        None => initial_certificate(k, mu, opts)?,
    };
    let layout = start.layout(opts.conditions);
    let tolerance = opts.gradient_tolerance(k);
    let floor = opts.distance_floor;
    let lbfgs_opts = LbfgsOptions {
        memory: opts.memory,
        max_iterations: opts.max_inner,
        gradient_tolerance: tolerance,
        // Well below the reporting floor: δ < floor/10.
        objective_floor: 0.5 * (0.1 * floor).powi(2),
        c1: opts.wolfe_c1,
        c2: opts.wolfe_c2,
        ..LbfgsOptions::default()
    };
    let mut problem = FactorProblem {
        k,
        mu,
        template: start.clone(),
        layout: layout.clone(),
        conditions: opts.conditions,
        metric_scale: opts.metric_scale,
        line: [0.0; 5],
    };
    let mut lbfgs_opts = lbfgs_opts;
    let mut x = start.to_vector(&layout);
    let mut iterations = 0;
    let mut escapes = 0;
    loop {
        lbfgs_opts.max_iterations = opts.max_inner - iterations;
        let outcome = lbfgs::minimize(&mut problem, x, &lbfgs_opts)?;
        iterations += outcome.iterations;
        let certificate = start.with_vector(&layout, &outcome.x);
        let mut result = finish(k, mu, certificate, iterations, outcome.gradient_max_norm(), opts)?;
        result.objective = outcome.value;
        match outcome.status {
            Status::ObjectiveFloor => return Ok(result),
            Status::GradientTolerance => {
                if result.distance > 0.0 && escapes < MAX_ESCAPES && iterations < opts.max_inner {
                    if let Some(next) = escape_saddle(k, &result.certificate, &result.residual, opts)? {
                        escapes += 1;
                        x = next.to_vector(&layout);
                        continue;
                    }
                }
                // Stationarity only bounds ⟨R, A⟩ absolutely; tighten until it is small relative
                // to the norms as well.
                let tighter = lbfgs_opts.gradient_tolerance * 0.1;
                if result.distance == 0.0
                    || result.is_orthogonal(opts.ortho_tol)
                    || tighter < tolerance * 1e-4
                    || iterations >= opts.max_inner
                {
                    return Ok(result);
                }
                lbfgs_opts.gradient_tolerance = tighter;
                x = outcome.x;
            }
            Status::MaxIterations | Status::LineSearchFailed => {
                // The floor test is decisive: a residual below it is an exact zero.
                if result.distance == 0.0 || result.gradient_norm <= tolerance {
                    return Ok(result);
                }
                return Err(Error::ProjectionNotConverged {
                    iterations,
                    gradient_norm: result.gradient_norm,
                    tolerance,
                    best: Box::new(result),
                });
            }
        }
    }
}

fn finish(
    k: &ReducedHamiltonian,
    mu: f64,
    certificate: DualCertificate,
    inner_iterations: usize,
    gradient_norm: f64,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    let mut masked = certificate.clone();
    if !opts.conditions.q {
        masked.c_q.fill(0.0);
    }
    if !opts.conditions.g {
        masked.c_g.fill(0.0);
    }
    let a_mu = crate::representability::lift_dual(&masked.blocks(), k.basis().n_electrons())?;
    let residual = k.k_matrix().shift(mu).add_scaled(&a_mu, -1.0)?;
    let r_norm = residual.frobenius_norm();
    if !r_norm.is_finite() {
        return Err(Error::Numerical("non-finite residual".into()));
    }
    let scale = opts.metric_scale;
    let raw_distance = scale.sqrt() * r_norm;
    let (distance, derivative) = if raw_distance <= opts.distance_floor {
        (0.0, 0.0)
    } else {
        (raw_distance, -scale * tensor_trace(&residual) / raw_distance)
    };
    let a_norm = a_mu.frobenius_norm();
    let orthogonality = if r_norm > 0.0 && a_norm > 0.0 {
        (residual.matrix().dot(a_mu.matrix()) / (r_norm * a_norm)).abs()
    } else {
        0.0
    };
    Ok(ProjectionResult {
        mu,
        a_mu,
        residual,
        distance,
        derivative,
        certificate: masked,
        inner_iterations,
        gradient_norm,
        objective: 0.5 * scale * r_norm * r_norm,
        orthogonality,
    })
}
