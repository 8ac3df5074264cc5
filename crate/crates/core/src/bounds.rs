//! Balls around unknown optima and the bounds they imply.
//!
//! For any `w̃`, the optimum `w*_C` lies in the ball with center
//! `m = ½(w̃ − C Σ∇ℓᵢ(w̃))` and radius `r = ½‖w̃ + C Σ∇ℓᵢ(w̃)‖`. When `w̃` is
//! itself the optimum at another parameter `C̃`, `Σ∇ℓᵢ(w̃) = −w̃/C̃` and the
//! ball depends on `C` only through `C/C̃`, which yields closed-form bound
//! curves over the whole regularization path.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{inner, Ball, FeatureVector, Interval};
use crate::loss::{EvalSet, Problem};
use crate::trainer::TrainedModel;

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("C must be positive, got {c}")))
    }
}

/// Ball certified to contain `w*_C`, built from an arbitrary `w̃`.
pub fn ball_from_suboptimal(problem: &Problem, w_tilde: &FeatureVector, c: f64) -> Result<Ball> {
    check_c(c)?;
    let w = problem.coerce(w_tilde)?;
    let grad = problem.loss_gradient_sum(&w)?;
    ball_from_gradient(&w, &grad, c)
}

/// Ball from `w̃` and a precomputed (sub)gradient sum `Σ∇ℓᵢ(w̃)`.
pub fn ball_from_gradient(w: &FeatureVector, grad_sum: &FeatureVector, c: f64) -> Result<Ball> {
    check_c(c)?;
    let center = w.lin_comb(0.5, grad_sum, -0.5 * c)?;
    let radius = 0.5 * w.lin_comb(1.0, grad_sum, c)?.norm();
    Ball::new(center, radius)
}

/// The ball at `C` implied by an optimum at `C̃`: center `½(1 + C/C̃) w̃`,
/// radius `½|1 − C/C̃| ‖w̃‖`.
pub fn path_ball(model: &TrainedModel, c: f64) -> Result<Ball> {
    check_c(c)?;
    let k = c / model.c;
    Ball::new(
        model.w.scale(0.5 * (1.0 + k)),
        0.5 * (1.0 - k).abs() * model.w.norm(),
    )
}

/// Bounds on `θᵀw*_C` for every `C > 0` from a single optimum at `C̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CBoundCurve {
    pub c_ref: f64,
    /// `θᵀw*_C̃`
    pub inner: f64,
    /// `‖θ‖ ‖w*_C̃‖`
    pub scale: f64,
}

impl CBoundCurve {
    pub fn from_scalars(c_ref: f64, inner: f64, theta_norm: f64, w_norm: f64) -> Self {
        Self {
            c_ref,
            inner,
            scale: theta_norm * w_norm,
        }
    }

    pub fn eval(&self, c: f64) -> Result<Interval> {
        check_c(c)?;
        let (s, a) = (self.inner, self.scale);
        let k = c / self.c_ref;
        // s − a ≤ 0 ≤ s + a (Cauchy–Schwarz)
        let (lo, hi) = if c > self.c_ref {
            (
                0.5 * (s + a) + 0.5 * k * (s - a),
                0.5 * (s - a) + 0.5 * k * (s + a),
            )
        } else if c < self.c_ref {
            (
                0.5 * (s - a) + 0.5 * k * (s + a),
                0.5 * (s + a) + 0.5 * k * (s - a),
            )
        } else {
            (s, s)
        };
        Ok(Interval::new(lo.min(hi), hi.max(lo)))
    }
}

pub fn cbound_curve(model: &TrainedModel, theta: &FeatureVector) -> Result<CBoundCurve> {
    check_c(model.c)?;
    Ok(CBoundCurve::from_scalars(
        model.c,
        inner(theta, &model.w)?,
        theta.norm(),
        model.w.norm(),
    ))
}

/// Per-instance bounds on validation decision values and the error range they imply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationBounds {
    pub intervals: Vec<Interval>,
    pub error_lo: f64,
    pub error_hi: f64,
}

/// Where the decision-value intervals come from.
#[derive(Debug, Clone, Copy)]
pub enum BoundSource<'a> {
    Ball(&'a Ball),
    /// Path bounds from a trained model, evaluated at `c`.
    Curve {
        model: &'a TrainedModel,
        c: f64,
    },
}

/// Counts certified-wrong and certified-right instances. A decision value of
/// exactly 0 predicts +1, so `lo ≥ 0` certifies a positive prediction while a
/// negative one needs `hi < 0`.
pub fn error_bounds(labels: &[f64], intervals: &[Interval]) -> Result<(f64, f64)> {
    if labels.is_empty() {
        return Err(invalid("validation set is empty"));
    }
    if labels.len() != intervals.len() {
        return Err(invalid("one interval per validation label required"));
    }
    let (mut wrong, mut right) = (0usize, 0usize);
    for (&y, iv) in labels.iter().zip(intervals) {
        // a decision value of exactly 0 predicts +1
        let predicts_pos = iv.lo >= 0.0;
        if y > 0.0 {
            wrong += iv.is_negative() as usize;
            right += predicts_pos as usize;
        } else {
            wrong += predicts_pos as usize;
            right += iv.is_negative() as usize;
        }
    }
    let n = labels.len() as f64;
    Ok((wrong as f64 / n, (labels.len() - right) as f64 / n))
}

pub fn validation_bounds(source: BoundSource<'_>, eval: &EvalSet) -> Result<ValidationBounds> {
    if eval.is_empty() {
        return Err(invalid("validation set is empty"));
    }
    let norms = eval.norms();
    let intervals: Vec<Interval> = match source {
        BoundSource::Ball(ball) => {
            let centers = eval.decision_values(&ball.center)?;
            centers
                .iter()
                .zip(norms.iter())
                .map(|(&t, &tn)| Interval::new(t - tn * ball.radius, t + tn * ball.radius))
                .collect()
        }
        BoundSource::Curve { model, c } => {
            check_c(c)?;
            let s = eval.decision_values(&model.w)?;
            let wn = model.w.norm();
            s.iter()
                .zip(norms.iter())
                .map(|(&s, &tn)| CBoundCurve::from_scalars(model.c, s, tn, wn).eval(c))
                .collect::<Result<_>>()?
        }
    };
    let (error_lo, error_hi) = error_bounds(eval.labels(), &intervals)?;
    Ok(ValidationBounds {
        intervals,
        error_lo,
        error_hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

/// Range of `C` around `C̃` over which the sign of `φ′ᵀw*_C` is certified.
///
/// The sign holds for `C ∈ (lower, c_ref]` and `C ∈ [c_ref, upper)`; `upper`
/// is `+∞` when the certificate never expires. `sign` is `None` when the
/// decision value at `C̃` is exactly zero (nothing certified).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignStability {
    pub sign: Option<Sign>,
    pub lower: f64,
    pub upper: f64,
}

impl SignStability {
    pub fn certifies(&self, c: f64) -> bool {
        self.sign.is_some() && self.lower < c && c < self.upper
    }
}

/// From `s = φ′ᵀw*_C̃` and `a = ‖φ′‖‖w*_C̃‖`.
pub fn sign_stability_from_scalars(c_ref: f64, s: f64, a: f64) -> SignStability {
    // ratio(p, q) = c_ref·p/q, with q ≤ 0 meaning "never expires".
    let ratio = |p: f64, q: f64| {
        if q > 0.0 {
            c_ref * p / q
        } else {
            f64::INFINITY
        }
    };
    if s > 0.0 {
        SignStability {
            sign: Some(Sign::Positive),
            upper: ratio(a + s, a - s),
            lower: (c_ref * (a - s) / (a + s)).max(0.0),
        }
    } else if s < 0.0 {
        SignStability {
            sign: Some(Sign::Negative),
            upper: ratio(a - s, a + s),
            lower: (c_ref * (a + s) / (a - s)).max(0.0),
        }
    } else {
        SignStability {
            sign: None,
            lower: c_ref,
            upper: c_ref,
        }
    }
}

pub fn sign_stability_interval(model: &TrainedModel, x: &FeatureVector) -> Result<SignStability> {
    check_c(model.c)?;
    let s = inner(x, &model.w)?;
    Ok(sign_stability_from_scalars(
        model.c,
        s,
        x.norm() * model.w.norm(),
    ))
}

/// Sign-stability ranges for every instance of an evaluation set.
pub fn sign_stability_all(model: &TrainedModel, eval: &EvalSet) -> Result<Vec<SignStability>> {
    let s: DVector<f64> = eval.decision_values(&model.w)?;
    let wn = model.w.norm();
    Ok(s.iter()
        .zip(eval.norms().iter())
        .map(|(&s, &tn)| sign_stability_from_scalars(model.c, s, tn * wn))
        .collect())
}
