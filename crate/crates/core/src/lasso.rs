//! Dual-ball bounds for the Lasso and safe feature screening.
//!
//! The Lasso dual is the projection of `y/λ` onto `{α : ‖Xᵀα‖∞ ≤ 1}`, an
//! L2-regularized problem with a convex constraint. For a dual-feasible `α̃`
//! the optimum `α*_λ = (y − Xβ*_λ)/λ` lies in the ball with diameter
//! `[α̃, y/λ]`, which bounds residuals and certifies zero coefficients.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::Interval;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoDualBall {
    pub center: DVector<f64>,
    pub radius: f64,
    pub lambda: f64,
}

/// Center `½(α̃ + y/λ)`, radius `½‖α̃ − y/λ‖`.
pub fn lasso_dual_ball(
    alpha_tilde: &DVector<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<LassoDualBall> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if alpha_tilde.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: alpha_tilde.len(),
        });
    }
    let target = y / lambda;
    Ok(LassoDualBall {
        center: (alpha_tilde + &target) * 0.5,
        radius: 0.5 * (alpha_tilde - &target).norm(),
        lambda,
    })
}

impl LassoDualBall {
    /// Bounds on `θᵀα*_λ`.
    pub fn bound_inner(&self, theta: &DVector<f64>) -> Result<Interval> {
        if theta.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: theta.len(),
            });
        }
        let t = theta.dot(&self.center);
        let tn = theta.norm();
        Ok(Interval::new(t - tn * self.radius, t + tn * self.radius))
    }

    pub fn contains(&self, alpha: &DVector<f64>, slack: f64) -> bool {
        (alpha - &self.center).norm() <= self.radius + slack
    }
}

/// Bounds on the residual `yᵢ − xᵢᵀβ*_λ = λ (α*_λ)ᵢ`.
pub fn residual_bounds(ball: &LassoDualBall, i: usize) -> Result<Interval> {
    let m = *ball.center.get(i).ok_or_else(|| {
        invalid(format!(
            "instance {i} out of range (n = {})",
            ball.center.len()
        ))
    })?;
    Ok(Interval::new(m - ball.radius, m + ball.radius).scale(ball.lambda))
}

/// Features `j` (0-based) with `max{|z_jᵀm − ‖z_j‖r|, |z_jᵀm + ‖z_j‖r|} < 1`,
/// whose optimal coefficients are therefore zero.
pub fn safe_screen(x: &DMatrix<f64>, ball: &LassoDualBall) -> Result<Vec<usize>> {
    if x.nrows() != ball.center.len() {
        return Err(Error::DimensionMismatch {
            expected: ball.center.len(),
            got: x.nrows(),
        });
    }
    Ok(x.column_iter()
        .enumerate()
        .filter(|(_, z)| {
            let t = z.dot(&ball.center);
            let spread = z.norm() * ball.radius;
            (t - spread).abs().max((t + spread).abs()) < 1.0
        })
        .map(|(j, _)| j)
        .collect())
}

/// `λ_max = ‖Xᵀy‖∞`, the smallest penalty with an all-zero solution.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    x.tr_mul(y).amax()
}
