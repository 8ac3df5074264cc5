//! High-precision solvers.
//!
//! - Logistic loss: damped Newton, in the primal for the linear kernel and on
//!   the expansion coefficients otherwise. Certificate: `‖w + C Σ∇ℓᵢ(w)‖`.
//! - Hinge loss: coordinate ascent on the box-constrained dual (there is no
//!   bias term, so no equality constraint), finished by solving the free-set
//!   linear system exactly. Certificate: norm of the projected dual gradient.
//! - Lasso: cyclic coordinate descent stopped on the duality gap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::KernelSpec;
use crate::error::{invalid, Error, Result};
use crate::geometry::{quad_form, FeatureVector};
use crate::loss::{LossKind, Problem};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Gradient-norm threshold (duality gap for the Lasso).
    pub tolerance: f64,
    pub max_iters: usize,
    pub warm_start: Option<FeatureVector>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iters: 1000,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Optimum `w*_C` of `½‖w‖² + C Σᵢ ℓᵢ(w)` with its convergence certificate.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub w: FeatureVector,
    pub c: f64,
    pub loss: LossKind,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Dual variables `αᵢ ∈ [0, C]` (hinge only); `w = Σ αᵢ yᵢ φᵢ`.
    pub dual: Option<DVector<f64>>,
}

pub fn train(problem: &Problem, c: f64, cfg: &SolverConfig) -> Result<TrainedModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    cfg.validate()?;
    if problem.is_empty() {
        return Err(invalid("cannot train on an empty dataset"));
    }
    match (problem.loss(), problem.is_primal()) {
        (LossKind::Logistic, true) => logistic_primal(problem, c, cfg),
        (LossKind::Logistic, false) => logistic_span(problem, c, cfg),
        (LossKind::Hinge, _) => hinge_dual(problem, c, cfg),
    }
}

/// `‖w + C Σᵢ ∇ℓᵢ(w)‖` with the problem's subgradient convention.
pub fn stationarity_residual(problem: &Problem, w: &FeatureVector, c: f64) -> Result<f64> {
    let g = problem.loss_gradient_sum(w)?;
    Ok(w.lin_comb(1.0, &g, c)?.norm())
}

/// `init + Σ aₖbₖ` as if computed in twice the working precision: product
/// errors are recovered with a fused multiply-add and summed with the rest.
/// At large `C` the terms of margins and gradients are orders of magnitude
/// above the certificate threshold, so plain sums stall the solvers.
fn compensated_dot(init: f64, pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut comp) = (init, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let product_err = a.mul_add(b, -p);
        let t = sum + p;
        comp += if sum.abs() >= p.abs() {
            (sum - t) + p
        } else {
            (p - t) + sum
        };
        comp += product_err;
        sum = t;
    }
    sum + comp
}

/// `A v` with compensated row sums.
fn mat_vec(a: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        compensated_dot(0.0, (0..a.ncols()).map(|j| (a[(i, j)], v[j])))
    })
}

fn objective_from_margins(
    loss: LossKind,
    y: &[f64],
    z: &DVector<f64>,
    sq_norm: f64,
    c: f64,
) -> f64 {
    0.5 * sq_norm
        + c * z
            .iter()
            .zip(y)
            .map(|(&z, &y)| loss.value(y, z))
            .sum::<f64>()
}

fn logistic_primal(problem: &Problem, c: f64, cfg: &SolverConfig) -> Result<TrainedModel> {
    let x = problem.data().dense_matrix();
    let y = problem.labels();
    let loss = LossKind::Logistic;
    let d = x.ncols();
    let mut w = match &cfg.warm_start {
        Some(w0) => w0.to_primal(d)?.rows(0, d).into_owned(),
        None => DVector::zeros(d),
    };

    let eval = |w: &DVector<f64>| {
        let z = mat_vec(&x, w);
        let f = objective_from_margins(loss, y, &z, w.norm_squared(), c);
        let dl = DVector::from_iterator(
            z.len(),
            z.iter().zip(y).map(|(&z, &y)| loss.derivative(y, z)),
        );
        let g = DVector::from_fn(d, |k, _| {
            compensated_dot(w[k], (0..x.nrows()).map(|i| (x[(i, k)], c * dl[i])))
        });
        (z, f, g)
    };

    let (mut z, mut f, mut g) = eval(&w);
    let mut iterations = 0;
    loop {
        let gn = g.norm();
        if gn <= cfg.tolerance {
            return Ok(TrainedModel {
                w: FeatureVector::primal(w),
                c,
                loss,
                grad_norm: gn,
                iterations,
                dual: None,
            });
        }
        if iterations >= cfg.max_iters {
            return Err(Error::NotConverged {
                iterations,
                certificate: gn,
            });
        }
        let h = DVector::from_iterator(
            z.len(),
            z.iter().zip(y).map(|(&z, &y)| loss.second_derivative(y, z)),
        );
        let mut hess = x.tr_mul(&DMatrix::from_fn(x.nrows(), d, |i, j| x[(i, j)] * h[i])) * c;
        for k in 0..d {
            hess[(k, k)] += 1.0;
        }
        let step = match hess.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -&g,
        };
        iterations += 1;
        match line_search(
            f,
            gn,
            g.dot(&step),
            |t| {
                let cand = &w + &step * t;
                let (zc, fc, gc) = eval(&cand);
                (cand, zc, fc, gc)
            },
            |g| g.norm(),
        ) {
            Some((wn, zn, fn_, gn_)) => {
                w = wn;
                z = zn;
                f = fn_;
                g = gn_;
            }
            None => {
                return Err(Error::NotConverged {
                    iterations,
                    certificate: gn,
                })
            }
        }
    }
}

/// Backtracking on the objective. Once the predicted decrease is lost in the
/// rounding of `f`, only a full step that shrinks the gradient is accepted.
fn line_search<T, F, G>(
    f0: f64,
    gnorm0: f64,
    slope: f64,
    mut at: F,
    gnorm: G,
) -> Option<(T, DVector<f64>, f64, DVector<f64>)>
where
    F: FnMut(f64) -> (T, DVector<f64>, f64, DVector<f64>),
    G: Fn(&DVector<f64>) -> f64,
{
    let full = at(1.0);
    let full_gnorm = gnorm(&full.3);
    let flat = slope.abs() <= 1e-9 * f0.abs().max(1.0);
    if flat {
        return (full_gnorm < gnorm0).then_some(full);
    }
    if full.2 <= f0 + 1e-4 * slope {
        return Some(full);
    }
    let mut t = 0.5;
    while t > 1e-12 {
        let cand = at(t);
        if cand.2 <= f0 + 1e-4 * t * slope {
            return Some(cand);
        }
        t *= 0.5;
    }
    (full_gnorm < gnorm0).then_some(full)
}

fn logistic_span(problem: &Problem, c: f64, cfg: &SolverConfig) -> Result<TrainedModel> {
    let g = problem.basis().gram().clone();
    let y = problem.labels();
    let n = problem.len();
    let loss = LossKind::Logistic;
    let mut coef = match &cfg.warm_start {
        Some(w0) => problem
            .coerce(w0)?
            .as_span()
            .filter(|s| std::sync::Arc::ptr_eq(s.basis(), problem.basis()))
            .map(|s| s.coef().clone())
            .ok_or_else(|| Error::Incompatible("warm start is not on the training basis".into()))?,
        None => DVector::zeros(n),
    };

    // Returns margins, objective and the residual coefficients v = c + C dℓ,
    // whose G-norm is the feature-space gradient norm.
    let eval = |coef: &DVector<f64>| {
        let z = mat_vec(&g, coef);
        let f = objective_from_margins(loss, y, &z, coef.dot(&z), c);
        let v = DVector::from_iterator(
            n,
            coef.iter()
                .zip(z.iter())
                .zip(y)
                .map(|((&a, &z), &y)| a + c * loss.derivative(y, z)),
        );
        (z, f, v)
    };

    let (mut z, mut f, mut v) = eval(&coef);
    let mut iterations = 0;
    loop {
        let gn = quad_form(&g, &v).max(0.0).sqrt();
        if gn <= cfg.tolerance {
            return Ok(TrainedModel {
                w: problem.combine(&coef),
                c,
                loss,
                grad_norm: gn,
                iterations,
                dual: None,
            });
        }
        if iterations >= cfg.max_iters {
            return Err(Error::NotConverged {
                iterations,
                certificate: gn,
            });
        }
        let h: Vec<f64> = z
            .iter()
            .zip(y)
            .map(|(&z, &y)| loss.second_derivative(y, z))
            .collect();
        let mut a = DMatrix::from_fn(n, n, |i, j| c * h[i] * g[(i, j)]);
        for k in 0..n {
            a[(k, k)] += 1.0;
        }
        let step = a.lu().solve(&(-&v)).unwrap_or_else(|| -&v);
        let slope = v.dot(&(&g * &step));
        iterations += 1;
        let result = line_search(
            f,
            gn,
            slope,
            |t| {
                let cand = &coef + &step * t;
                let (zc, fc, vc) = eval(&cand);
                (cand, zc, fc, vc)
            },
            |v| quad_form(&g, v).max(0.0).sqrt(),
        );
        match result {
            Some((cn, zn, fn_, vn)) => {
                coef = cn;
                z = zn;
                f = fn_;
                v = vn;
            }
            None => {
                return Err(Error::NotConverged {
                    iterations,
                    certificate: gn,
                })
            }
        }
    }
}

/// Projected gradient of the (maximized) hinge dual.
fn projected_gradient(grad: &DVector<f64>, alpha: &DVector<f64>, c: f64) -> DVector<f64> {
    DVector::from_iterator(
        grad.len(),
        grad.iter().zip(alpha.iter()).map(|(&g, &a)| {
            if a <= 0.0 {
                g.max(0.0)
            } else if a >= c {
                g.min(0.0)
            } else {
                g
            }
        }),
    )
}

fn hinge_dual(problem: &Problem, c: f64, cfg: &SolverConfig) -> Result<TrainedModel> {
    let n = problem.len();
    let y = DVector::from_column_slice(problem.labels());
    let gram = problem.basis().gram();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram[(i, j)]);
    let ones = DVector::from_element(n, 1.0);

    let mut alpha = match cfg.warm_start.as_ref().and_then(|w| w.as_span()) {
        Some(s) if std::sync::Arc::ptr_eq(s.basis(), problem.basis()) => {
            s.coef().component_mul(&y).map(|a| a.clamp(0.0, c))
        }
        _ => DVector::zeros(n),
    };

    // Coordinate ascent gets close to the right active set cheaply.
    const WARMUP_EPOCHS: usize = 50;
    let mut grad = &ones - &q * &alpha;
    for _ in 0..WARMUP_EPOCHS {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let qii = q[(i, i)];
            let new = if qii > 0.0 {
                (alpha[i] + grad[i] / qii).clamp(0.0, c)
            } else if grad[i] > 0.0 {
                c
            } else {
                alpha[i]
            };
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                grad.axpy(-delta, &q.column(i), 1.0);
                moved = moved.max(delta.abs());
            }
        }
        if moved <= 1e-3 * c {
            break;
        }
    }

    let iterations = active_set(&q, &mut alpha, c, cfg)?;
    let grad = dual_gradient(&q, &alpha);
    let certificate = projected_gradient(&grad, &alpha, c).norm();
    if certificate > cfg.tolerance {
        return Err(Error::NotConverged {
            iterations,
            certificate,
        });
    }
    let w = problem.combine(&alpha.component_mul(&y));
    Ok(TrainedModel {
        w,
        c,
        loss: LossKind::Hinge,
        grad_norm: certificate,
        iterations,
        dual: Some(alpha),
    })
}

const MAX_REFINEMENTS: usize = 3;

/// `1 − Qα` with compensated row sums.
fn dual_gradient(q: &DMatrix<f64>, alpha: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(alpha.len(), |i, _| {
        compensated_dot(1.0, alpha.iter().enumerate().map(|(j, &a)| (-q[(i, j)], a)))
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

/// Primal active-set method for `min ½αᵀQα − 1ᵀα` over `0 ≤ α ≤ C` with a
/// positive semidefinite `Q`. On a singular free block with no stationary
/// point, the objective falls linearly along a null-space direction, which is
/// followed to the next bound. Returns the number of iterations.
fn active_set(
    q: &DMatrix<f64>,
    alpha: &mut DVector<f64>,
    c: f64,
    cfg: &SolverConfig,
) -> Result<usize> {
    let n = alpha.len();
    let mut state: Vec<Bound> = alpha
        .iter()
        .map(|&a| {
            if a <= 0.0 {
                Bound::Lower
            } else if a >= c {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    for (a, s) in alpha.iter_mut().zip(&state) {
        match s {
            Bound::Lower => *a = 0.0,
            Bound::Upper => *a = c,
            Bound::Free => {}
        }
    }
    let release_tol = cfg.tolerance / (4.0 * (n as f64).sqrt());
    let q_scale = q.diagonal().amax().max(f64::MIN_POSITIVE);

    // Set after an unblocked Newton step, which solves the free-set problem exactly.
    let mut stationary = false;
    let mut refinements = 0;
    for iteration in 0..cfg.max_iters {
        let g = -dual_gradient(q, alpha);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        // Rounding in the free-set solve can leave a residual above the
        // threshold; a few refinement steps remove it.
        if stationary
            && refinements < MAX_REFINEMENTS
            && free.iter().any(|&i| g[i].abs() > release_tol)
        {
            stationary = false;
            refinements += 1;
        }

        let mut direction: Option<(DVector<f64>, bool)> = None;
        if !free.is_empty() && !stationary {
            let q_ff = q.select_rows(&free).select_columns(&free);
            let g_f = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
            let svd = q_ff.svd(true, true);
            let u = svd.u.as_ref().expect("u requested");
            let cutoff = 1e-12 * q_scale * free.len() as f64;
            let rank: Vec<usize> = (0..free.len())
                .filter(|&k| svd.singular_values[k] > cutoff)
                .collect();
            let u_r = u.select_columns(&rank);
            let outside = &g_f - &u_r * u_r.tr_mul(&g_f);
            if outside.norm() > 1e-9 * g_f.norm().max(1e-300) && outside.norm() > 1e-14 {
                direction = Some((-outside, true));
            } else {
                let p = -svd.solve(&g_f, cutoff).expect("singular vectors requested");
                let size = p.amax();
                if size > 1e-15 * c.max(1.0) {
                    direction = Some((p, false));
                }
            }
        }

        match direction {
            Some((p, unbounded)) => {
                let mut step = if unbounded { f64::INFINITY } else { 1.0 };
                let mut blocking = None;
                for (k, &i) in free.iter().enumerate() {
                    let limit = if p[k] < 0.0 {
                        alpha[i] / -p[k]
                    } else if p[k] > 0.0 {
                        (c - alpha[i]) / p[k]
                    } else {
                        continue;
                    };
                    if limit < step {
                        step = limit;
                        blocking = Some((i, p[k] < 0.0));
                    }
                }
                if !step.is_finite() {
                    return Err(Error::NotConverged {
                        iterations: iteration,
                        certificate: f64::INFINITY,
                    });
                }
                for (k, &i) in free.iter().enumerate() {
                    alpha[i] = (alpha[i] + step * p[k]).clamp(0.0, c);
                }
                if let Some((i, lower)) = blocking {
                    alpha[i] = if lower { 0.0 } else { c };
                    state[i] = if lower { Bound::Lower } else { Bound::Upper };
                }
                stationary = !unbounded && blocking.is_none();
            }
            None => {
                // Stationary on the free set: release the worst bound violator.
                let mut worst = None;
                let mut worst_val = release_tol;
                for i in 0..n {
                    let v = match state[i] {
                        Bound::Lower => -g[i],
                        Bound::Upper => g[i],
                        Bound::Free => continue,
                    };
                    if v > worst_val {
                        worst_val = v;
                        worst = Some(i);
                    }
                }
                stationary = false;
                refinements = 0;
                match worst {
                    Some(i) => state[i] = Bound::Free,
                    None => return Ok(iteration + 1),
                }
            }
        }
    }
    let g = dual_gradient(q, alpha);
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        certificate: projected_gradient(&g, alpha, c).norm(),
    })
}

/// Lasso solution `β*_λ` with the dual point `α = (y − Xβ)/max(λ, ‖Xᵀ(y − Xβ)‖∞)`.
#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub beta: DVector<f64>,
    pub alpha: DVector<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// `½‖y − Xβ‖² + λ‖β‖₁`
pub fn lasso_primal_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
) -> f64 {
    0.5 * (y - x * beta).norm_squared() + lambda * beta.lp_norm(1)
}

/// Dual-feasible point obtained by rescaling the residual of `β`.
///
/// At the optimum this is exactly `α*_λ = (y − Xβ*)/λ`, the projection of
/// `y/λ` onto `{α : ‖Xᵀα‖∞ ≤ 1}`.
pub fn lasso_dual_point(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
) -> DVector<f64> {
    let r = y - x * beta;
    let scale = lambda.max(x.tr_mul(&r).amax());
    r / scale
}

/// Primal objective minus the dual objective `½‖y‖² − (λ²/2)‖α − y/λ‖²` at [`lasso_dual_point`].
pub fn lasso_gap(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let alpha = lasso_dual_point(x, y, beta, lambda);
    let dual =
        0.5 * y.norm_squared() - 0.5 * lambda * lambda * (&alpha - y / lambda).norm_squared();
    lasso_primal_objective(x, y, beta, lambda) - dual
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_lasso_args(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Runs `epochs` sweeps of coordinate descent from `beta0` without a stopping test.
pub fn lasso_epochs(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    beta0: Option<&DVector<f64>>,
    epochs: usize,
) -> Result<LassoSolution> {
    check_lasso_args(x, y, lambda)?;
    let mut beta = beta0.cloned().unwrap_or_else(|| DVector::zeros(x.ncols()));
    let col_sq: Vec<f64> = x.column_iter().map(|z| z.norm_squared()).collect();
    let mut r = y - x * &beta;
    for _ in 0..epochs {
        cd_sweep(x, &col_sq, lambda, &mut beta, &mut r);
    }
    Ok(LassoSolution {
        alpha: lasso_dual_point(x, y, &beta, lambda),
        gap: lasso_gap(x, y, &beta, lambda),
        beta,
        iterations: epochs,
    })
}

fn cd_sweep(
    x: &DMatrix<f64>,
    col_sq: &[f64],
    lambda: f64,
    beta: &mut DVector<f64>,
    r: &mut DVector<f64>,
) {
    for j in 0..x.ncols() {
        if col_sq[j] == 0.0 {
            beta[j] = 0.0;
            continue;
        }
        let z = x.column(j);
        let rho = z.dot(r) + col_sq[j] * beta[j];
        let new = soft_threshold(rho, lambda) / col_sq[j];
        let delta = new - beta[j];
        if delta != 0.0 {
            r.axpy(-delta, &z, 1.0);
            beta[j] = new;
        }
    }
}

/// Coordinate descent on `½‖y − Xβ‖² + λ‖β‖₁` until the duality gap is at most `cfg.tolerance`.
pub fn train_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<LassoSolution> {
    check_lasso_args(x, y, lambda)?;
    cfg.validate()?;
    let mut beta = match &cfg.warm_start {
        Some(w) => w.to_primal(x.ncols())?.rows(0, x.ncols()).into_owned(),
        None => DVector::zeros(x.ncols()),
    };
    let col_sq: Vec<f64> = x.column_iter().map(|z| z.norm_squared()).collect();
    let mut r = y - x * &beta;
    let mut iterations = 0;
    loop {
        let gap = lasso_gap(x, y, &beta, lambda);
        if gap <= cfg.tolerance {
            return Ok(LassoSolution {
                alpha: lasso_dual_point(x, y, &beta, lambda),
                gap,
                beta,
                iterations,
            });
        }
        if iterations >= cfg.max_iters * 100 {
            return Err(Error::NotConverged {
                iterations,
                certificate: gap,
            });
        }
        cd_sweep(x, &col_sq, lambda, &mut beta, &mut r);
        iterations += 1;
        if iterations % 64 == 0 {
            // drift control for the running residual
            r = y - x * &beta;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Primal,
    Span,
}

/// On-disk form of a [`TrainedModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub loss: LossKind,
    pub c: f64,
    pub kernel: KernelSpec,
    pub grad_norm: f64,
    pub iterations: usize,
    pub representation: Representation,
    /// Dense weights, or expansion coefficients over the training instances.
    pub weights: Vec<f64>,
}

impl TrainedModel {
    pub fn to_record(&self, kernel: KernelSpec) -> ModelRecord {
        let (representation, weights) = match &self.w {
            FeatureVector::Primal(v) => (Representation::Primal, v.as_slice().to_vec()),
            FeatureVector::Span(s) => (Representation::Span, s.coef().as_slice().to_vec()),
        };
        ModelRecord {
            loss: self.loss,
            c: self.c,
            kernel,
            grad_norm: self.grad_norm,
            iterations: self.iterations,
            representation,
            weights,
        }
    }

    /// Rebuilds a model; span weights must match `problem`'s training instances.
    pub fn from_record(rec: &ModelRecord, problem: &Problem) -> Result<Self> {
        if &rec.kernel != problem.kernel() {
            return Err(Error::Incompatible(
                "model kernel differs from the problem's".into(),
            ));
        }
        let w = match rec.representation {
            Representation::Primal => problem.coerce(&FeatureVector::primal(
                DVector::from_column_slice(&rec.weights),
            ))?,
            Representation::Span => FeatureVector::span(
                problem.basis().clone(),
                DVector::from_column_slice(&rec.weights),
            )?,
        };
        let dual = (rec.loss == LossKind::Hinge && rec.representation == Representation::Span)
            .then(|| {
                DVector::from_iterator(
                    rec.weights.len(),
                    rec.weights.iter().zip(problem.labels()).map(|(a, y)| a * y),
                )
            });
        Ok(TrainedModel {
            w,
            c: rec.c,
            loss: rec.loss,
            grad_norm: rec.grad_norm,
            iterations: rec.iterations,
            dual,
        })
    }
}
