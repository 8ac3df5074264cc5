//! Feature-space vectors, certifying balls and interval bounds on inner products.
//!
//! A [`FeatureVector`] is either an explicit dense vector (linear kernel) or a
//! kernel expansion `Σᵢ cᵢ φ(xᵢ)` over a shared [`Basis`]. Every bound in this
//! crate reduces to inner products and norms of such vectors, so nothing ever
//! needs the (possibly infinite-dimensional) feature map itself.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bounds::ball_from_suboptimal;
use crate::dataset::{cross_kernel, gram_of, KernelSpec, SparseVector};
use crate::error::{invalid, Error, Result};
use crate::loss::Problem;

/// Points and kernel spanning a family of [`FeatureVector::Span`] vectors, with their Gram matrix.
#[derive(Debug)]
pub struct Basis {
    points: Vec<SparseVector>,
    kernel: KernelSpec,
    gram: DMatrix<f64>,
    max_index: usize,
}

impl Basis {
    pub fn new(points: Vec<SparseVector>, kernel: KernelSpec) -> Result<Arc<Self>> {
        kernel.validate()?;
        let gram = gram_of(&points, &kernel);
        Ok(Self::from_parts(points, kernel, gram))
    }

    pub(crate) fn from_parts(
        points: Vec<SparseVector>,
        kernel: KernelSpec,
        gram: DMatrix<f64>,
    ) -> Arc<Self> {
        let max_index = points
            .iter()
            .map(SparseVector::max_index)
            .max()
            .unwrap_or(0);
        Arc::new(Self {
            points,
            kernel,
            gram,
            max_index,
        })
    }

    pub fn points(&self) -> &[SparseVector] {
        &self.points
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Basis without point `j`; the Gram matrix is sliced, not recomputed.
    pub(crate) fn without(&self, j: usize) -> Arc<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != j).collect();
        let points = keep.iter().map(|&i| self.points[i].clone()).collect();
        let gram = self.gram.select_rows(&keep).select_columns(&keep);
        Self::from_parts(points, self.kernel, gram)
    }
}

/// Kernel expansion `Σᵢ cᵢ φ(xᵢ)` with a cached squared norm.
#[derive(Debug, Clone)]
pub struct SpanVector {
    basis: Arc<Basis>,
    coef: DVector<f64>,
    sq_norm: f64,
}

impl SpanVector {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coef(&self) -> &DVector<f64> {
        &self.coef
    }

    fn materialize(&self, dim: usize) -> DVector<f64> {
        let mut out = DVector::zeros(dim.max(self.basis.max_index));
        for (c, x) in self.coef.iter().zip(&self.basis.points) {
            if *c != 0.0 {
                for (i, v) in x.iter() {
                    out[i - 1] += c * v;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum FeatureVector {
    Primal(DVector<f64>),
    Span(SpanVector),
}

impl FeatureVector {
    pub fn primal(v: DVector<f64>) -> Self {
        FeatureVector::Primal(v)
    }

    pub fn span(basis: Arc<Basis>, coef: DVector<f64>) -> Result<Self> {
        if coef.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coef.len(),
            });
        }
        // cᵀGc can dip below zero by rounding when G is near-singular.
        let sq_norm = quad_form(&basis.gram, &coef).max(0.0);
        Ok(FeatureVector::Span(SpanVector {
            basis,
            coef,
            sq_norm,
        }))
    }

    /// `φ(x)` for a single input: dense for the linear kernel, a one-point expansion otherwise.
    pub fn feature_map(x: &SparseVector, kernel: &KernelSpec) -> Result<Self> {
        match kernel {
            KernelSpec::Linear => Ok(FeatureVector::Primal(x.to_dense(x.max_index()))),
            _ => FeatureVector::span(
                Basis::new(vec![x.clone()], *kernel)?,
                DVector::from_element(1, 1.0),
            ),
        }
    }

    pub fn sq_norm(&self) -> f64 {
        match self {
            FeatureVector::Primal(v) => v.norm_squared(),
            FeatureVector::Span(s) => s.sq_norm,
        }
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm().sqrt()
    }

    pub fn as_primal(&self) -> Option<&DVector<f64>> {
        match self {
            FeatureVector::Primal(v) => Some(v),
            FeatureVector::Span(_) => None,
        }
    }

    pub fn as_span(&self) -> Option<&SpanVector> {
        match self {
            FeatureVector::Span(s) => Some(s),
            FeatureVector::Primal(_) => None,
        }
    }

    /// Dense form, available for primal vectors and linear-kernel expansions.
    pub fn to_primal(&self, dim: usize) -> Result<DVector<f64>> {
        match self {
            FeatureVector::Primal(v) => Ok(pad(v, dim)),
            FeatureVector::Span(s) if s.basis.kernel.is_linear() => Ok(s.materialize(dim)),
            FeatureVector::Span(_) => Err(Error::Incompatible(
                "a non-linear kernel expansion has no dense form".into(),
            )),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            FeatureVector::Primal(v) => FeatureVector::Primal(v * s),
            FeatureVector::Span(sp) => FeatureVector::Span(SpanVector {
                basis: sp.basis.clone(),
                coef: &sp.coef * s,
                sq_norm: sp.sq_norm * s * s,
            }),
        }
    }

    /// `a·self + b·other`
    pub fn lin_comb(&self, a: f64, other: &FeatureVector, b: f64) -> Result<Self> {
        match (self, other) {
            (FeatureVector::Primal(x), FeatureVector::Primal(y)) => {
                let dim = x.len().max(y.len());
                Ok(FeatureVector::Primal(pad(x, dim) * a + pad(y, dim) * b))
            }
            (FeatureVector::Span(x), FeatureVector::Span(y)) if Arc::ptr_eq(&x.basis, &y.basis) => {
                FeatureVector::span(x.basis.clone(), &x.coef * a + &y.coef * b)
            }
            _ => {
                let dim = self.primal_dim().max(other.primal_dim());
                let (x, y) = (self.to_primal(dim)?, other.to_primal(dim)?);
                Ok(FeatureVector::Primal(x * a + y * b))
            }
        }
    }

    pub fn sub(&self, other: &FeatureVector) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    fn primal_dim(&self) -> usize {
        match self {
            FeatureVector::Primal(v) => v.len(),
            FeatureVector::Span(s) => s.basis.max_index,
        }
    }
}

fn pad(v: &DVector<f64>, dim: usize) -> DVector<f64> {
    if v.len() >= dim {
        return v.clone();
    }
    let mut out = DVector::zeros(dim);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

pub(crate) fn quad_form(g: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    c.dot(&(g * c))
}

/// Exact inner product in feature space.
pub fn inner(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    match (a, b) {
        (FeatureVector::Primal(x), FeatureVector::Primal(y)) => {
            let k = x.len().min(y.len());
            Ok(x.rows(0, k).dot(&y.rows(0, k)))
        }
        (FeatureVector::Span(x), FeatureVector::Span(y)) => {
            if Arc::ptr_eq(&x.basis, &y.basis) {
                return Ok(x.coef.dot(&(&x.basis.gram * &y.coef)));
            }
            if x.basis.kernel != y.basis.kernel {
                return Err(Error::Incompatible(
                    "expansions use different kernels".into(),
                ));
            }
            let k = cross_kernel(&x.basis.points, &y.basis.points, &x.basis.kernel);
            Ok(x.coef.dot(&(k * &y.coef)))
        }
        (FeatureVector::Primal(p), FeatureVector::Span(s))
        | (FeatureVector::Span(s), FeatureVector::Primal(p)) => {
            if !s.basis.kernel.is_linear() {
                return Err(Error::Incompatible(
                    "dense vector mixed with a non-linear kernel expansion".into(),
                ));
            }
            Ok(s.coef
                .iter()
                .zip(&s.basis.points)
                .map(|(c, x)| c * x.dot_dense(p))
                .sum())
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            lo <= hi || lo.is_nan() || hi.is_nan(),
            "interval [{lo}, {hi}] is inverted"
        );
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        self.lo - slack <= v && v <= self.hi + slack
    }

    pub fn is_subset_of(&self, other: &Interval, slack: f64) -> bool {
        other.lo - slack <= self.lo && self.hi <= other.hi + slack
    }

    pub fn negate(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s >= 0.0 {
            Self::new(self.lo * s, self.hi * s)
        } else {
            Self::new(self.hi * s, self.lo * s)
        }
    }

    /// Certified strictly positive.
    pub fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    /// Certified strictly negative.
    pub fn is_negative(&self) -> bool {
        self.hi < 0.0
    }
}

/// `{w : ‖w − center‖ ≤ radius}`
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: FeatureVector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: FeatureVector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(invalid(format!(
                "ball radius must be finite and ≥ 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, w: &FeatureVector, slack: f64) -> Result<bool> {
        Ok(self.center.sub(w)?.norm() <= self.radius + slack)
    }

    /// JSON dump `{center_repr, radius}` for debugging.
    pub fn debug_json(&self) -> BallDump {
        let center_repr = match &self.center {
            FeatureVector::Primal(v) => CenterRepr::Primal(v.as_slice().to_vec()),
            FeatureVector::Span(s) => CenterRepr::Span {
                kernel: s.basis.kernel,
                coef: s.coef.as_slice().to_vec(),
            },
        };
        BallDump {
            center_repr,
            radius: self.radius,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BallDump {
    pub center_repr: CenterRepr,
    pub radius: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterRepr {
    Primal(Vec<f64>),
    Span { kernel: KernelSpec, coef: Vec<f64> },
}

/// `θᵀm ∓ ‖θ‖r`
pub fn bound_inner(ball: &Ball, theta: &FeatureVector) -> Result<Interval> {
    let tn = theta.norm();
    if tn == 0.0 {
        return Ok(Interval::point(0.0));
    }
    let t = inner(theta, &ball.center)?;
    Ok(Interval::new(t - tn * ball.radius, t + tn * ball.radius))
}

/// Scalars that determine the extremes of `θᵀw` over the lens `S₁ ∩ S₂`.
#[derive(Debug, Clone, Copy)]
pub struct LensScalars {
    /// `θᵀm₁`
    pub theta_m1: f64,
    /// `θᵀm₂`
    pub theta_m2: f64,
    pub theta_norm: f64,
    pub r1: f64,
    pub r2: f64,
    /// `‖m₁ − m₂‖`
    pub alpha_norm: f64,
    /// `θᵀ(m₁ − m₂)`
    pub theta_alpha: f64,
}

/// Extremes of `θᵀw` over the intersection of two balls.
///
/// With `α = m₁ − m₂` the two spheres meet in the hyperplane at signed
/// distance `β` from `m₂` along `α`; the intersection rim is centered at
/// `γ = m₂ + β α/‖α‖` with radius `δ`. The maximizer is ball 1's own maximizer
/// when that lies inside ball 2, ball 2's when it lies inside ball 1, and a
/// point of the rim otherwise. The minimum is the maximum for `−θ`.
pub fn lens_bounds(s: &LensScalars) -> Result<Interval> {
    let LensScalars {
        theta_m1,
        theta_m2,
        theta_norm: tn,
        r1,
        r2,
        alpha_norm: a,
        theta_alpha: ta,
    } = *s;
    if tn == 0.0 {
        return Ok(Interval::point(0.0));
    }
    let one = Interval::new(theta_m1 - tn * r1, theta_m1 + tn * r1);
    let two = Interval::new(theta_m2 - tn * r2, theta_m2 + tn * r2);

    let scale = r1.max(r2).max(a).max(f64::MIN_POSITIVE);
    if a > r1 + r2 + 1e-12 * scale {
        return Err(Error::EmptyIntersection {
            distance: a,
            radius_sum: r1 + r2,
        });
    }
    if a <= 1e-15 * scale {
        return Ok(if r2 < r1 { two } else { one });
    }
    if a + r2 <= r1 {
        return Ok(two);
    }
    if a + r1 <= r2 {
        return Ok(one);
    }

    let beta = (a * a + r2 * r2 - r1 * r1) / (2.0 * a);
    let delta = (r2 * r2 - beta * beta).max(0.0).sqrt();
    let cos = ta / (tn * a);
    let perp = (tn * tn - ta * ta / (a * a)).max(0.0).sqrt();
    let theta_gamma = theta_m2 + beta * ta / a;

    let hi = if cos < (beta - a) / r1 {
        one.hi
    } else if beta / r2 < cos {
        two.hi
    } else {
        theta_gamma + delta * perp
    };
    let lo = if -cos < (beta - a) / r1 {
        one.lo
    } else if beta / r2 < -cos {
        two.lo
    } else {
        theta_gamma - delta * perp
    };

    // Rounding can push the rim value a hair outside the single-ball bounds.
    let lo = lo.max(one.lo).max(two.lo);
    let hi = hi.min(one.hi).min(two.hi);
    if lo > hi {
        let mid = 0.5 * (lo + hi);
        return Ok(Interval::point(mid));
    }
    Ok(Interval::new(lo, hi))
}

/// Bounds of `θᵀw` over `b1 ∩ b2`.
pub fn bound_inner_intersection(b1: &Ball, b2: &Ball, theta: &FeatureVector) -> Result<Interval> {
    let tn = theta.norm();
    if tn == 0.0 {
        return Ok(Interval::point(0.0));
    }
    let alpha = b1.center.sub(&b2.center)?;
    lens_bounds(&LensScalars {
        theta_m1: inner(theta, &b1.center)?,
        theta_m2: inner(theta, &b2.center)?,
        theta_norm: tn,
        r1: b1.radius,
        r2: b2.radius,
        alpha_norm: alpha.norm(),
        theta_alpha: inner(theta, &alpha)?,
    })
}

/// Balls `S(w̃₁), …, S(w̃ₛ)` where each next suboptimal point is the previous ball's center.
///
/// Consecutive centers satisfy `‖m_{t+1} − m_t‖ = r_{t+1}`: each center sits
/// on the next sphere, so every new ball cuts at least half of the previous one.
pub fn recursive_tighten(
    problem: &Problem,
    w_tilde: &FeatureVector,
    c: f64,
    steps: usize,
) -> Result<Vec<Ball>> {
    if steps == 0 {
        return Err(invalid("recursive_tighten needs at least one step"));
    }
    let mut balls = Vec::with_capacity(steps);
    let mut w = problem.coerce(w_tilde)?;
    for _ in 0..steps {
        let ball = ball_from_suboptimal(problem, &w, c)?;
        w = ball.center.clone();
        balls.push(ball);
    }
    Ok(balls)
}
