//! Limited-memory BFGS with a strong Wolfe line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the max-norm of the gradient falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the objective falls below this.
    pub objective_floor: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_evaluations: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 3,
            max_iterations: 20_000,
            gradient_tolerance: 1e-7,
            objective_floor: 0.0,
            c1: 1e-4,
            c2: 0.9,
            max_line_evaluations: 40,
        }
    }
}

/// Objective with an optional cheap restriction to a search line.
pub(crate) trait Problem {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Called once per iteration before any [`Problem::line_value`] along `direction`.
    fn begin_line(&mut self, _x: &[f64], _direction: &[f64]) -> Result<()> {
        Ok(())
    }

    /// `(φ(α), φ'(α))` for `φ(α) = f(x + α d)`.
    fn line_value(&mut self, x: &[f64], direction: &[f64], alpha: f64) -> Result<(f64, f64)> {
        let trial: Vec<f64> = x.iter().zip(direction).map(|(a, b)| a + alpha * b).collect();
        let (f, g) = self.eval(&trial)?;
        Ok((f, dot(&g, direction)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    GradientTolerance,
    ObjectiveFloor,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
}

impl Outcome {
    pub fn gradient_max_norm(&self) -> f64 {
        max_norm(&self.gradient)
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

pub(crate) fn minimize<P: Problem>(problem: &mut P, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<Outcome> {
    let mut x = x0;
    let (mut f, mut g) = problem.eval(&x)?;
    check_finite(f)?;
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut restarted = false;

    loop {
        if max_norm(&g) <= opts.gradient_tolerance {
            return Ok(Outcome { x, value: f, gradient: g, iterations, status: Status::GradientTolerance });
        }
        if f <= opts.objective_floor {
            return Ok(Outcome { x, value: f, gradient: g, iterations, status: Status::ObjectiveFloor });
        }
        if iterations >= opts.max_iterations {
            return Ok(Outcome { x, value: f, gradient: g, iterations, status: Status::MaxIterations });
        }

        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let alpha0 = if history.is_empty() { (1.0 / norm(&g)).min(1.0) } else { 1.0 };

        problem.begin_line(&x, &d)?;
        let step = strong_wolfe(problem, &x, &d, f, slope, alpha0, opts)?;
        let Some(alpha) = step else {
            if restarted || history.is_empty() {
                return Ok(Outcome { x, value: f, gradient: g, iterations, status: Status::LineSearchFailed });
            }
            history.clear();
            restarted = true;
            continue;
        };
        restarted = false;

        let x_new: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
        let (f_new, g_new) = problem.eval(&x_new)?;
        check_finite(f_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
    }
}

fn two_loop(g: &[f64], history: &VecDeque<Pair>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        axpy(-a, &pair.y, &mut q);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        axpy(a - b, &pair.s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Bracketing phase followed by zoom; returns `None` if no acceptable step was found.
fn strong_wolfe<P: Problem>(
    problem: &mut P,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    alpha0: f64,
    opts: &LbfgsOptions,
) -> Result<Option<f64>> {
    let mut evals = 0;
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = alpha0;
    let alpha_max = 1e10 * alpha0.max(1.0);
    loop {
        let (f, slope) = problem.line_value(x, d, alpha)?;
        evals += 1;
        if !f.is_finite() {
            // Back off toward the last good point.
            alpha = 0.5 * (alpha_prev + alpha);
            if evals >= opts.max_line_evaluations {
                return Ok(None);
            }
            continue;
        }
        if f > f0 + opts.c1 * alpha * slope0 || (evals > 1 && f >= f_prev) {
            return zoom(problem, x, d, f0, slope0, (alpha_prev, f_prev, slope_prev), (alpha, f, slope), evals, opts);
        }
        if slope.abs() <= -opts.c2 * slope0 {
            return Ok(Some(alpha));
        }
        if slope >= 0.0 {
            return zoom(problem, x, d, f0, slope0, (alpha, f, slope), (alpha_prev, f_prev, slope_prev), evals, opts);
        }
        if evals >= opts.max_line_evaluations || alpha >= alpha_max {
            return Ok(None);
        }
        alpha_prev = alpha;
        f_prev = f;
        slope_prev = slope;
        alpha *= 2.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<P: Problem>(
    problem: &mut P,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    lo: (f64, f64, f64),
    hi: (f64, f64, f64),
    mut evals: usize,
    opts: &LbfgsOptions,
) -> Result<Option<f64>> {
    let (mut a_lo, mut f_lo, mut s_lo) = lo;
    let (mut a_hi, mut f_hi, mut s_hi) = hi;
    while evals < opts.max_line_evaluations {
        let alpha = interpolate(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi);
        if (a_hi - a_lo).abs() <= 1e-16 * a_lo.abs().max(1e-300) {
            return Ok(None);
        }
        let (f, slope) = problem.line_value(x, d, alpha)?;
        evals += 1;
        if !f.is_finite() || f > f0 + opts.c1 * alpha * slope0 || f >= f_lo {
            a_hi = alpha;
            f_hi = f;
            s_hi = slope;
            continue;
        }
        if slope.abs() <= -opts.c2 * slope0 {
            return Ok(Some(alpha));
        }
        if slope * (a_hi - a_lo) >= 0.0 {
            a_hi = a_lo;
            f_hi = f_lo;
            s_hi = s_lo;
        }
        a_lo = alpha;
        f_lo = f;
        s_lo = slope;
    }
    // Accept a sufficient-decrease point even without the curvature condition.
    if a_lo > 0.0 && f_lo < f0 {
        return Ok(Some(a_lo));
    }
    Ok(None)
}

/// Cubic interpolation minimizer safeguarded into the interior of the bracket.
fn interpolate(a0: f64, f0: f64, s0: f64, a1: f64, f1: f64, s1: f64) -> f64 {
    let (lo, hi) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let width = hi - lo;
    let fallback = 0.5 * (a0 + a1);
    if !f1.is_finite() || !s1.is_finite() {
        return fallback;
    }
    let d1 = s0 + s1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = d1 * d1 - s0 * s1;
    if disc < 0.0 {
        return fallback;
    }
    let d2 = (a1 - a0).signum() * disc.sqrt();
    let denom = s1 - s0 + 2.0 * d2;
    if denom == 0.0 {
        return fallback;
    }
    let a = a1 - (a1 - a0) * (s1 + d2 - d1) / denom;
    if !a.is_finite() || a <= lo + 0.1 * width || a >= hi - 0.1 * width {
        return fallback;
    }
    a
}

fn check_finite(f: f64) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("objective evaluated to {f}")))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock {
        evals: usize,
        values: Vec<f64>,
    }

    impl Problem for Rosenbrock {
        fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            self.evals += 1;
            let n = x.len();
            let mut f = 0.0;
            let mut g = vec![0.0; n];
            for i in 0..n - 1 {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                f += 100.0 * a * a + b * b;
                g[i] += -400.0 * x[i] * a - 2.0 * b;
                g[i + 1] += 200.0 * a;
            }
            self.values.push(f);
            Ok((f, g))
        }
    }

    #[test]
    fn rosenbrock_converges() {
        let mut p = Rosenbrock { evals: 0, values: Vec::new() };
        let opts = LbfgsOptions { gradient_tolerance: 1e-9, ..LbfgsOptions::default() };
        let out = minimize(&mut p, vec![-1.2, 1.0, -0.5, 0.8], &opts).unwrap();
        assert_eq!(out.status, Status::GradientTolerance);
        for v in &out.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", out.x);
        }
    }

    #[test]
    fn quadratic_with_exact_memory() {
        struct Quad;
        impl Problem for Quad {
            fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
                let w = [1.0, 10.0, 100.0];
                let f = x.iter().zip(w).map(|(v, w)| 0.5 * w * v * v).sum();
                Ok((f, x.iter().zip(w).map(|(v, w)| w * v).collect()))
            }
        }
        let out = minimize(&mut Quad, vec![1.0, 1.0, 1.0], &LbfgsOptions::default()).unwrap();
        assert_eq!(out.status, Status::GradientTolerance);
        assert!(out.iterations < 30);
    }

    #[test]
    fn accepted_steps_never_increase_objective() {
        let mut p = Rosenbrock { evals: 0, values: Vec::new() };
        let x0 = vec![-1.2, 1.0, 0.3];
        let mut opts = LbfgsOptions::default();
        let mut previous = f64::INFINITY;
        for iters in 1..40 {
            opts.max_iterations = iters;
            let out = minimize(&mut p, x0.clone(), &opts).unwrap();
            assert!(out.value <= previous + 1e-15);
            previous = out.value;
        }
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        struct Bad;
        impl Problem for Bad {
            fn eval(&mut self, _x: &[f64]) -> Result<(f64, Vec<f64>)> {
                Ok((f64::NAN, vec![1.0]))
            }
        }
        assert!(matches!(minimize(&mut Bad, vec![0.0], &LbfgsOptions::default()), Err(Error::Numerical(_))));
    }

    #[test]
    fn cubic_interpolation_stays_inside() {
        let a = interpolate(0.0, 1.0, -1.0, 1.0, 2.0, 3.0);
        assert!(a > 0.0 && a < 1.0);
    }
}
