//! Model selection over a grid of regularization parameters, ε-approximate
//! regularization paths, fast leave-one-out CV, and logistic-regression
//! inference from an SVM solution.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::bounds::{
    ball_from_gradient, ball_from_suboptimal, error_bounds, sign_stability_all, CBoundCurve,
};
use crate::dataset::{Dataset, SparseVector};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    bound_inner, bound_inner_intersection, inner, lens_bounds, FeatureVector, Interval, LensScalars,
};
use crate::loss::{EvalSet, LossKind, Problem};
use crate::trainer::{train, SolverConfig, TrainedModel};

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("C must be positive, got {c}")))
    }
}

/// `count` values spaced evenly in `log C` from `c_min` to `c_max`, both included.
pub fn log_grid(c_min: f64, c_max: f64, count: usize) -> Result<Vec<f64>> {
    check_c(c_min)?;
    check_c(c_max)?;
    if c_max < c_min {
        return Err(invalid(format!("c_max {c_max} is below c_min {c_min}")));
    }
    match count {
        0 => Err(invalid("grid needs at least one value")),
        1 => Ok(vec![c_min]),
        _ => {
            let (a, b) = (c_min.ln(), c_max.ln());
            let step = (b - a) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|t| (a + step * t as f64).exp()).collect();
            v[0] = c_min;
            v[count - 1] = c_max;
            // exp rounding must not break the ordering
            for t in 1..count {
                if v[t] < v[t - 1] {
                    v[t] = v[t - 1];
                }
            }
            Ok(v)
        }
    }
}

/// Candidate values of `C` with their current validation-error bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateGrid {
    values: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    trained: Vec<bool>,
}

impl CandidateGrid {
    /// Values must be positive and non-decreasing. Bounds start at `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("candidate grid is empty"));
        }
        for &c in &values {
            check_c(c)?;
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("candidate values must be non-decreasing"));
        }
        let n = values.len();
        Ok(Self {
            values,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
            trained: vec![false; n],
        })
    }

    pub fn from_log_range(c_min: f64, c_max: f64, count: usize) -> Result<Self> {
        Self::new(log_grid(c_min, c_max, count)?)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn trained(&self) -> &[bool] {
        &self.trained
    }

    /// Tightens candidate `t` to `[max(lo, lo'), min(hi, hi')]`.
    pub fn merge(&mut self, t: usize, lo: f64, hi: f64) {
        self.lower[t] = self.lower[t].max(lo);
        self.upper[t] = self.upper[t].min(hi);
    }

    /// Records the exact error of a trained candidate.
    pub fn mark_trained(&mut self, t: usize, error: f64) {
        self.trained[t] = true;
        self.lower[t] = error;
        self.upper[t] = error;
    }
}

/// The untrained candidate with the smallest lower bound among those whose
/// lower bound is below `best`; ties go to the smaller `C`.
pub fn choose_next(grid: &CandidateGrid, best: f64) -> Option<usize> {
    let mut pick: Option<usize> = None;
    for t in 0..grid.len() {
        if grid.trained[t] || grid.lower[t] >= best {
            continue;
        }
        match pick {
            Some(p) if grid.lower[p] <= grid.lower[t] => {}
            _ => pick = Some(t),
        }
    }
    pick
}

/// One bound update applied to a candidate after a training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundUpdate {
    /// Number of models trained when the update was made.
    pub after: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainingStep {
    pub index: usize,
    pub c: f64,
    pub error: f64,
    /// Best error after this step.
    pub best_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub best_index: usize,
    pub best_c: f64,
    pub best_error: f64,
    pub trained_count: usize,
    pub grid: CandidateGrid,
    pub steps: Vec<TrainingStep>,
    /// Per-candidate bound history, oldest first.
    pub history: Vec<Vec<BoundUpdate>>,
}

/// Model selection stopped by a solver failure; carries what was done so far.
#[derive(Debug, thiserror::Error)]
#[error("model selection failed after {trained_count} trained models: {source}")]
pub struct SelectionFailure {
    pub source: Error,
    pub trained_count: usize,
    pub grid: CandidateGrid,
    pub steps: Vec<TrainingStep>,
}

struct Fitted {
    model: TrainedModel,
    /// Validation decision values `φ′ᵢᵀw*`.
    scores: DVector<f64>,
    norm: f64,
}

/// Path-bound state shared by the selection loop.
struct PathBounds<'a> {
    eval: &'a EvalSet,
    fitted: HashMap<usize, Fitted>,
    cross: HashMap<(usize, usize), f64>,
}

impl<'a> PathBounds<'a> {
    fn intervals(
        &mut self,
        c: f64,
        below: Option<usize>,
        above: Option<usize>,
    ) -> Result<Vec<Interval>> {
        let norms = self.eval.norms();
        let curve = |f: &Fitted, i: usize| {
            CBoundCurve::from_scalars(f.model.c, f.scores[i], norms[i], f.norm).eval(c)
        };
        match (below, above) {
            (None, None) => Err(invalid("no trained neighbor")),
            (Some(k), None) | (None, Some(k)) => {
                let f = &self.fitted[&k];
                (0..self.eval.len()).map(|i| curve(f, i)).collect()
            }
            (Some(k1), Some(k2)) => {
                let w12 = match self.cross.get(&(k1, k2)) {
                    Some(&v) => v,
                    None => {
                        let v = inner(&self.fitted[&k1].model.w, &self.fitted[&k2].model.w)?;
                        self.cross.insert((k1, k2), v);
                        v
                    }
                };
                let (f1, f2) = (&self.fitted[&k1], &self.fitted[&k2]);
                let (a1, a2) = (0.5 * (1.0 + c / f1.model.c), 0.5 * (1.0 + c / f2.model.c));
                let r1 = 0.5 * (1.0 - c / f1.model.c).abs() * f1.norm;
                let r2 = 0.5 * (1.0 - c / f2.model.c).abs() * f2.norm;
                let alpha_sq =
                    a1 * a1 * f1.norm * f1.norm - 2.0 * a1 * a2 * w12 + a2 * a2 * f2.norm * f2.norm;
                let alpha_norm = alpha_sq.max(0.0).sqrt();
                (0..self.eval.len())
                    .map(|i| {
                        let scalars = LensScalars {
                            theta_m1: a1 * f1.scores[i],
                            theta_m2: a2 * f2.scores[i],
                            theta_norm: norms[i],
                            r1,
                            r2,
                            alpha_norm,
                            theta_alpha: a1 * f1.scores[i] - a2 * f2.scores[i],
                        };
                        match lens_bounds(&scalars) {
                            Ok(iv) => Ok(iv),
                            // Both balls contain w*_C; a reported gap is
                            // solver inaccuracy, so fall back to the overlap
                            // of the two single-ball intervals.
                            Err(Error::EmptyIntersection { .. }) => {
                                let (one, two) = (curve(f1, i)?, curve(f2, i)?);
                                let (lo, hi) = (one.lo.max(two.lo), one.hi.min(two.hi));
                                Ok(if lo <= hi {
                                    Interval::new(lo, hi)
                                } else {
                                    Interval::point(0.5 * (lo + hi))
                                })
                            }
                            Err(e) => Err(e),
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Trains the first candidate, then repeatedly trains the candidate with the
/// smallest lower error bound until no untrained candidate can beat the best
/// error found. Bounds of untrained candidates come from the path balls of
/// their nearest trained neighbors on each side, intersected when both exist.
pub fn select_model(
    problem: &Problem,
    val: &Dataset,
    grid: CandidateGrid,
    cfg: &SolverConfig,
) -> std::result::Result<SelectionReport, Box<SelectionFailure>> {
    let mut grid = grid;
    let mut steps = Vec::new();
    let fail = |source: Error, grid: CandidateGrid, steps: Vec<TrainingStep>, n: usize| {
        Box::new(SelectionFailure {
            source,
            trained_count: n,
            grid,
            steps,
        })
    };
    let eval = match EvalSet::new(problem, val).and_then(|e| {
        if e.is_empty() {
            Err(invalid("validation set is empty"))
        } else {
            val.check_classification().map(|_| e)
        }
    }) {
        Ok(e) => e,
        Err(e) => return Err(fail(e, grid, steps, 0)),
    };

    let t_count = grid.len();
    let mut state = PathBounds {
        eval: &eval,
        fitted: HashMap::new(),
        cross: HashMap::new(),
    };
    let mut history: Vec<Vec<BoundUpdate>> = vec![Vec::new(); t_count];
    let mut best: Option<(usize, f64)> = None;
    let mut next = Some(0);

    while let Some(h) = next {
        let c = grid.values[h];
        let fitted = match train(problem, c, cfg).and_then(|model| {
            let scores = eval.decision_values(&model.w)?;
            let norm = model.w.norm();
            Ok(Fitted {
                model,
                scores,
                norm,
            })
        }) {
            Ok(f) => f,
            Err(e) => {
                let n = state.fitted.len();
                return Err(fail(e, grid, steps, n));
            }
        };
        let error = crate::loss::validation_error(eval.labels(), &fitted.scores);
        state.fitted.insert(h, fitted);
        grid.mark_trained(h, error);
        if best.is_none_or(|(_, b)| error < b) {
            best = Some((h, error));
        }
        let best_error = best.map(|(_, b)| b).unwrap_or(1.0);
        steps.push(TrainingStep {
            index: h,
            c,
            error,
            best_error,
        });
        let trained_now = state.fitted.len();
        history[h].push(BoundUpdate {
            after: trained_now,
            lower: error,
            upper: error,
        });

        // Only candidates between h's trained neighbors change neighbors.
        let left = (0..h).rev().find(|&t| grid.trained[t]);
        let right = (h + 1..t_count).find(|&t| grid.trained[t]);
        let span = left.map_or(0, |l| l + 1)..right.unwrap_or(t_count);
        for t in span {
            if grid.trained[t] {
                continue;
            }
            let (below, above) = if t < h {
                (left, Some(h))
            } else {
                (Some(h), right)
            };
            let update = state
                .intervals(grid.values[t], below, above)
                .and_then(|iv| error_bounds(eval.labels(), &iv));
            match update {
                Ok((lo, hi)) => {
                    grid.merge(t, lo, hi);
                    history[t].push(BoundUpdate {
                        after: trained_now,
                        lower: grid.lower[t],
                        upper: grid.upper[t],
                    });
                }
                Err(e) => return Err(fail(e, grid, steps, trained_now)),
            }
        }
        next = choose_next(&grid, best_error);
    }

    let (best_index, best_error) = best.expect("at least one model is trained");
    Ok(SelectionReport {
        best_index,
        best_c: grid.values[best_index],
        best_error,
        trained_count: state.fitted.len(),
        grid,
        steps,
        history,
    })
}

/// A range of `C` over which one trained model's validation error is certified
/// to be within `ε` of the optimal model's error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSegment {
    pub c_start: f64,
    /// Exclusive, except for the last segment which ends at `c_max` inclusive.
    pub c_end: f64,
    /// Validation error of the model trained at `c_start`.
    pub error: f64,
    /// False when no certificate advanced past `c_start` and the segment is a
    /// forced minimal step.
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub epsilon: f64,
    pub segments: Vec<PathSegment>,
    pub trained_count: usize,
    /// Ranges `[c_start, c_end)` without a certificate.
    pub gaps: Vec<(f64, f64)>,
}

impl PathReport {
    /// `(C, error)` at every segment start.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|s| (s.c_start, s.error)).collect()
    }

    /// The segment covering `c`, if any.
    pub fn segment_at(&self, c: f64) -> Option<&PathSegment> {
        let last = self.segments.len().checked_sub(1)?;
        self.segments
            .iter()
            .enumerate()
            .find(|(i, s)| s.c_start <= c && (c < s.c_end || (*i == last && c <= s.c_end)))
            .map(|(_, s)| s)
    }
}

/// Relative step taken when no sign certificate reaches past the current `C`.
const MIN_STEP: f64 = 1.001;

/// Builds a piecewise-constant path over `[c_min, c_max]` whose error is
/// within `ε` of the true path error everywhere outside reported gaps.
///
/// At each trained `C̃`, at most `⌊n′ε⌋` validation signs may change before
/// the error can drift by more than `ε`, so the next model is trained where
/// the `(⌊n′ε⌋ + 1)`-th sign certificate expires.
pub fn epsilon_path(
    problem: &Problem,
    val: &Dataset,
    c_min: f64,
    c_max: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<PathReport> {
    check_c(c_min)?;
    check_c(c_max)?;
    if c_max < c_min {
        return Err(invalid(format!("c_max {c_max} is below c_min {c_min}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must be in [0, 1], got {epsilon}")));
    }
    val.check_classification()?;
    let eval = EvalSet::new(problem, val)?;
    if eval.is_empty() {
        return Err(invalid("validation set is empty"));
    }
    let n = eval.len();
    // guard against n′ε landing a hair below an integer
    let budget = ((n as f64) * epsilon * (1.0 + 1e-12)).floor() as usize;

    let mut segments = Vec::new();
    let mut gaps = Vec::new();
    let mut c = c_min;
    loop {
        let model = train(problem, c, cfg)?;
        let scores = eval.decision_values(&model.w)?;
        let error = crate::loss::validation_error(eval.labels(), &scores);
        let mut expiry: Vec<f64> = sign_stability_all(&model, &eval)?
            .iter()
            .map(|s| if s.sign.is_some() { s.upper } else { c })
            .collect();
        expiry.sort_by(f64::total_cmp);
        let mut next = if budget >= n {
            f64::INFINITY
        } else {
            expiry[budget]
        };
        let certified = next > c;
        if !certified {
            next = c * MIN_STEP;
            gaps.push((c, next.min(c_max)));
        }
        segments.push(PathSegment {
            c_start: c,
            c_end: next.min(c_max),
            error,
            certified,
        });
        if next > c_max {
            break;
        }
        c = next;
    }
    Ok(PathReport {
        epsilon,
        trained_count: segments.len(),
        segments,
        gaps,
    })
}

/// Leave-one-out outcome for one training instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LooInstance {
    /// Bounds on the held-out decision value.
    pub interval: Interval,
    /// True when the sign was certified without training.
    pub skipped: bool,
    pub wrong: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoocvReport {
    pub c: f64,
    pub loocv_error: f64,
    pub errors: usize,
    pub solved_count: usize,
    pub skipped_count: usize,
    pub instances: Vec<LooInstance>,
}

/// Held-out decision value `φⱼᵀw*₋ⱼ` from training without instance `j`.
pub fn loo_decision_value(problem: &Problem, j: usize, c: f64, cfg: &SolverConfig) -> Result<f64> {
    if j >= problem.len() {
        return Err(invalid(format!(
            "instance {j} out of range (n = {})",
            problem.len()
        )));
    }
    let sub = problem.without(j);
    let model = train(&sub, c, cfg)?;
    let theta = FeatureVector::feature_map(problem.data().instance(j), problem.kernel())?;
    inner(&theta, &model.w)
}

/// Leave-one-out error at `C`, training only for instances whose held-out
/// sign is not certified by the ball built from the full-data optimum.
///
/// With `w` optimal on all `n` instances and `g = Σᵢ∇ℓᵢ(w)`, the ball for the
/// problem without `j` uses `Σ_{i≠j}∇ℓᵢ(w) = g − dⱼφⱼ`, so every ball follows
/// from `w`, `g` and kernel values.
pub fn fast_loocv(problem: &Problem, c: f64, cfg: &SolverConfig) -> Result<LoocvReport> {
    check_c(c)?;
    let n = problem.len();
    if n < 2 {
        return Err(invalid("leave-one-out needs at least two instances"));
    }
    let model = train(problem, c, cfg)?;
    let w = &model.w;
    let d = problem.gradient_coefficients(w)?;
    let g = problem.combine(&d);
    let u = w.lin_comb(1.0, &g, c)?;
    let u_sq = u.sq_norm();
    let zw = problem.decision_values(w)?;
    let zg = problem.decision_values(&g)?;
    let zu = problem.decision_values(&u)?;
    let kdiag = problem.basis().gram().diagonal();

    let labels = problem.labels();
    let mut instances = Vec::with_capacity(n);
    let (mut errors, mut solved, mut skipped) = (0, 0, 0);
    for j in 0..n {
        let (dj, kjj) = (d[j], kdiag[j]);
        let center = 0.5 * (zw[j] - c * (zg[j] - dj * kjj));
        let radius = 0.5
            * (u_sq - 2.0 * c * dj * zu[j] + c * c * dj * dj * kjj)
                .max(0.0)
                .sqrt();
        let spread = kjj.max(0.0).sqrt() * radius;
        let interval = Interval::new(center - spread, center + spread);
        let y = labels[j];
        let (wrong, skip) = if interval.is_positive() {
            (y < 0.0, true)
        } else if interval.is_negative() {
            (y > 0.0, true)
        } else {
            let z = loo_decision_value(problem, j, c, cfg)?;
            (y * z < 0.0, false)
        };
        if skip {
            skipped += 1;
        } else {
            solved += 1;
        }
        errors += wrong as usize;
        instances.push(LooInstance {
            interval,
            skipped: skip,
            wrong,
        });
    }
    Ok(LoocvReport {
        c,
        loocv_error: errors as f64 / n as f64,
        errors,
        solved_count: solved,
        skipped_count: skipped,
        instances,
    })
}

/// Single-ball and two-ball bounds on one linear functional of the LR optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalBound {
    pub single: Interval,
    pub refined: Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct LrInference {
    pub c: f64,
    pub radius: f64,
    pub refined_radius: f64,
    /// Bounds per requested coefficient (0-based feature index).
    pub coefficients: Vec<(usize, FunctionalBound)>,
    /// Bounds on the log-odds `xᵀw*` of each new input.
    pub log_odds: Vec<FunctionalBound>,
}

/// Bounds on the logistic-regression optimum at `C` from any linear-kernel
/// `w̃`: the ball around `w̃` intersected with the ball around its center.
pub fn lr_inference_from_point(
    problem: &Problem,
    w_tilde: &FeatureVector,
    c: f64,
    coefficients: &[usize],
    new_inputs: &[SparseVector],
) -> Result<LrInference> {
    if !problem.is_primal() {
        return Err(Error::Incompatible(
            "logistic-regression inference needs the linear kernel".into(),
        ));
    }
    let lr = problem.with_loss(LossKind::Logistic);
    let dim = lr
        .data()
        .dim()
        .max(new_inputs.iter().map(|x| x.max_index()).max().unwrap_or(0));
    let w = FeatureVector::primal(w_tilde.to_primal(dim)?);
    let first = ball_from_suboptimal(&lr, &w, c)?;
    let grad = lr.loss_gradient_sum(&lr.coerce(&first.center)?)?;
    let second = ball_from_gradient(&first.center, &grad, c)?;
    let bound = |theta: &FeatureVector| -> Result<FunctionalBound> {
        Ok(FunctionalBound {
            single: bound_inner(&first, theta)?,
            refined: bound_inner_intersection(&first, &second, theta)?,
        })
    };
    let coefficients = coefficients
        .iter()
        .map(|&j| {
            if j >= dim {
                return Err(invalid(format!("coefficient {j} out of range (d = {dim})")));
            }
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            Ok((j, bound(&FeatureVector::primal(e))?))
        })
        .collect::<Result<_>>()?;
    let log_odds = new_inputs
        .iter()
        .map(|x| bound(&FeatureVector::primal(x.to_dense(dim))))
        .collect::<Result<_>>()?;
    Ok(LrInference {
        c,
        radius: first.radius,
        refined_radius: second.radius,
        coefficients,
        log_odds,
    })
}

/// Trains a linear SVM at `C` and bounds the logistic-regression optimum at
/// the same `C` from it.
pub fn lr_inference_from_svm(
    problem: &Problem,
    c: f64,
    coefficients: &[usize],
    new_inputs: &[SparseVector],
    cfg: &SolverConfig,
) -> Result<(TrainedModel, LrInference)> {
    if !problem.is_primal() {
        return Err(Error::Incompatible(
            "logistic-regression inference needs the linear kernel".into(),
        ));
    }
    let svm = train(&problem.with_loss(LossKind::Hinge), c, cfg)?;
    let inference = lr_inference_from_point(problem, &svm.w, c, coefficients, new_inputs)?;
    Ok((svm, inference))
}
