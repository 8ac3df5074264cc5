//! Convex margin losses and the training problem they define.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{cross_kernel, Dataset, KernelSpec, SparseVector};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Basis, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `log(1 + exp(−yz))`
    Logistic,
    /// `max{0, 1 − yz}`
    Hinge,
}

impl LossKind {
    pub fn value(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::Logistic => softplus(-y * z),
            LossKind::Hinge => (1.0 - y * z).max(0.0),
        }
    }

    /// `∂ℓ/∂z`; for the hinge the flat-side subgradient 0 is used at the kink `yz = 1`.
    pub fn derivative(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::Logistic => -y * sigmoid(-y * z),
            LossKind::Hinge => {
                if y * z < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }

    /// `∂²ℓ/∂z²` (logistic only; zero for the hinge away from its kink).
    pub fn second_derivative(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::Logistic => {
                let s = sigmoid(y * z);
                s * (1.0 - s)
            }
            LossKind::Hinge => 0.0,
        }
    }

    pub fn is_differentiable(self) -> bool {
        matches!(self, LossKind::Logistic)
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(invalid(format!("unknown loss {other:?}"))),
        }
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// A classification dataset, a kernel and a loss: everything that defines
/// `½‖w‖² + C Σᵢ ℓ(yᵢ, φᵢᵀw)` except `C`.
///
/// Linear-kernel problems work with dense primal vectors; kernel problems with
/// expansions over the training points.
#[derive(Debug, Clone)]
pub struct Problem {
    data: Dataset,
    kernel: KernelSpec,
    basis: Arc<Basis>,
    loss: LossKind,
}

impl Problem {
    pub fn new(data: Dataset, kernel: KernelSpec, loss: LossKind) -> Result<Self> {
        kernel.validate()?;
        data.check_classification()?;
        let basis = Basis::new(data.instances().to_vec(), kernel)?;
        Ok(Self {
            data,
            kernel,
            basis,
            loss,
        })
    }

    /// Same data and kernel (Gram shared), different loss.
    pub fn with_loss(&self, loss: LossKind) -> Problem {
        Problem {
            loss,
            ..self.clone()
        }
    }

    /// Problem with instance `j` removed.
    pub fn without(&self, j: usize) -> Problem {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != j).collect();
        Problem {
            data: self.data.subset(&keep),
            kernel: self.kernel,
            basis: self.basis.without(j),
            loss: self.loss,
        }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        self.data.labels()
    }

    pub fn is_primal(&self) -> bool {
        self.kernel.is_linear()
    }

    pub fn zero(&self) -> FeatureVector {
        if self.is_primal() {
            FeatureVector::primal(DVector::zeros(self.data.dim()))
        } else {
            self.combine(&DVector::zeros(self.len()))
        }
    }

    /// `Σᵢ coefᵢ φᵢ` in the problem's native representation.
    pub fn combine(&self, coef: &DVector<f64>) -> FeatureVector {
        assert_eq!(
            coef.len(),
            self.len(),
            "one coefficient per training instance"
        );
        if self.is_primal() {
            let mut w = DVector::zeros(self.data.dim());
            for (c, x) in coef.iter().zip(self.data.instances()) {
                if *c != 0.0 {
                    for (i, v) in x.iter() {
                        w[i - 1] += c * v;
                    }
                }
            }
            FeatureVector::primal(w)
        } else {
            FeatureVector::span(self.basis.clone(), coef.clone())
                .expect("coefficient length checked")
        }
    }

    /// Converts `w` to the native representation when that is possible.
    pub fn coerce(&self, w: &FeatureVector) -> Result<FeatureVector> {
        if self.is_primal() {
            return Ok(FeatureVector::primal(w.to_primal(self.data.dim())?));
        }
        match w.as_span() {
            Some(s) if Arc::ptr_eq(s.basis(), &self.basis) => Ok(w.clone()),
            Some(s) if s.basis().kernel() == &self.kernel => Ok(w.clone()),
            _ => Err(Error::Incompatible(
                "vector is not an expansion under the problem's kernel".into(),
            )),
        }
    }

    /// `φᵢᵀw` for every training instance.
    pub fn decision_values(&self, w: &FeatureVector) -> Result<DVector<f64>> {
        decision_values_on(self.data.instances(), &self.kernel, Some(&self.basis), w)
    }

    /// `dℓ(yᵢ, φᵢᵀw)` for every training instance.
    pub fn gradient_coefficients(&self, w: &FeatureVector) -> Result<DVector<f64>> {
        let z = self.decision_values(w)?;
        Ok(DVector::from_iterator(
            self.len(),
            z.iter()
                .zip(self.labels())
                .map(|(&z, &y)| self.loss.derivative(y, z)),
        ))
    }

    /// `Σᵢ ∇ℓᵢ(w) = Σᵢ dℓ(yᵢ, φᵢᵀw) φᵢ`
    pub fn loss_gradient_sum(&self, w: &FeatureVector) -> Result<FeatureVector> {
        Ok(self.combine(&self.gradient_coefficients(w)?))
    }

    pub fn loss_sum(&self, w: &FeatureVector) -> Result<f64> {
        let z = self.decision_values(w)?;
        Ok(z.iter()
            .zip(self.labels())
            .map(|(&z, &y)| self.loss.value(y, z))
            .sum())
    }

    /// `½‖w‖² + C Σᵢ ℓᵢ(w)`
    pub fn objective(&self, w: &FeatureVector, c: f64) -> Result<f64> {
        Ok(0.5 * w.sq_norm() + c * self.loss_sum(w)?)
    }

    /// `√K(xᵢ, xᵢ)` for every training instance.
    pub fn feature_norms(&self) -> DVector<f64> {
        self.basis.gram().diagonal().map(|k| k.max(0.0).sqrt())
    }
}

/// `φ(xᵢ)ᵀw` for a list of inputs; `basis` short-circuits to `G c` when `w` lives on it.
fn decision_values_on(
    points: &[SparseVector],
    kernel: &KernelSpec,
    basis: Option<&Arc<Basis>>,
    w: &FeatureVector,
) -> Result<DVector<f64>> {
    match w {
        FeatureVector::Primal(v) => {
            if !kernel.is_linear() {
                return Err(Error::Incompatible(
                    "dense weights under a non-linear kernel".into(),
                ));
            }
            Ok(DVector::from_iterator(
                points.len(),
                points.iter().map(|x| x.dot_dense(v)),
            ))
        }
        FeatureVector::Span(s) => {
            if s.basis().kernel() != kernel {
                return Err(Error::Incompatible(
                    "expansion uses a different kernel".into(),
                ));
            }
            if let Some(b) = basis {
                if Arc::ptr_eq(b, s.basis()) {
                    return Ok(b.gram() * s.coef());
                }
            }
            Ok(cross_kernel(points, s.basis().points(), kernel) * s.coef())
        }
    }
}

/// `φ(x)ᵀw` for each row of `ds`.
pub fn decision_values(
    ds: &Dataset,
    kernel: &KernelSpec,
    w: &FeatureVector,
) -> Result<DVector<f64>> {
    decision_values_on(ds.instances(), kernel, None, w)
}

/// `Σᵢ dℓ(yᵢ, φᵢᵀw) φᵢ`
pub fn loss_gradient_sum(
    ds: &Dataset,
    kernel: &KernelSpec,
    loss: LossKind,
    w: &FeatureVector,
) -> Result<FeatureVector> {
    let problem = Problem::new(ds.clone(), *kernel, loss)?;
    let w = problem.coerce(w)?;
    problem.loss_gradient_sum(&w)
}

/// Validation inputs prepared against a training problem, so decision values
/// and feature norms of many models can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct EvalSet {
    data: Dataset,
    kernel: KernelSpec,
    norms: DVector<f64>,
    /// Kernel values against the training basis (kernel problems only).
    cross: Option<(Arc<Basis>, DMatrix<f64>)>,
}

impl EvalSet {
    pub fn new(problem: &Problem, data: &Dataset) -> Result<Self> {
        let kernel = *problem.kernel();
        let norms = DVector::from_iterator(
            data.len(),
            data.instances()
                .iter()
                .map(|x| kernel.self_eval(x).max(0.0).sqrt()),
        );
        let cross = (!kernel.is_linear()).then(|| {
            let k = cross_kernel(data.instances(), problem.basis().points(), &kernel);
            (problem.basis().clone(), k)
        });
        Ok(Self {
            data: data.clone(),
            kernel,
            norms,
            cross,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        self.data.labels()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// `‖φ(x′ᵢ)‖`
    pub fn norms(&self) -> &DVector<f64> {
        &self.norms
    }

    pub fn decision_values(&self, w: &FeatureVector) -> Result<DVector<f64>> {
        if let (Some((basis, k)), FeatureVector::Span(s)) = (&self.cross, w) {
            if Arc::ptr_eq(basis, s.basis()) {
                return Ok(k * s.coef());
            }
        }
        decision_values_on(self.data.instances(), &self.kernel, None, w)
    }

    /// `φ(x′ᵢ)` as a feature vector.
    pub fn theta(&self, i: usize) -> Result<FeatureVector> {
        FeatureVector::feature_map(self.data.instance(i), &self.kernel)
    }
}

/// Misclassification rate with `sgn(0) = +1`.
pub fn validation_error(labels: &[f64], decision: &DVector<f64>) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = labels
        .iter()
        .zip(decision.iter())
        .filter(|(&y, &z)| if y > 0.0 { z < 0.0 } else { z >= 0.0 })
        .count();
    wrong as f64 / labels.len() as f64
}
