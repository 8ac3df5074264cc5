//! Datasets in LIBSVM sparse format, seeded splits and kernel matrices.

use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sparse vector with strictly ascending 1-based indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a sparse vector, rejecting zero, duplicate or unsorted indices.
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: values.len(),
            });
        }
        if indices.first() == Some(&0) {
            return Err(invalid("feature indices are 1-based"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("feature indices must be strictly ascending"));
        }
        Ok(Self { indices, values })
    }

    /// Sparse view of a dense slice; exact zeros are dropped.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (k, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                indices.push(k as u32 + 1);
                values.push(v);
            }
        }
        Self { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Largest index present, 0 when empty.
    pub fn max_index(&self) -> usize {
        self.indices.last().copied().unwrap_or(0) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector; coordinates beyond its length count as zero.
    pub fn dot_dense(&self, dense: &DVector<f64>) -> f64 {
        self.iter()
            .filter(|(i, _)| *i <= dense.len())
            .map(|(i, v)| v * dense[i - 1])
            .sum()
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn sq_distance(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() || b < other.indices.len() {
            let ia = self.indices.get(a).copied().unwrap_or(u32::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(u32::MAX);
            let diff = match ia.cmp(&ib) {
                std::cmp::Ordering::Less => {
                    a += 1;
                    self.values[a - 1]
                }
                std::cmp::Ordering::Greater => {
                    b += 1;
                    other.values[b - 1]
                }
                std::cmp::Ordering::Equal => {
                    a += 1;
                    b += 1;
                    self.values[a - 1] - other.values[b - 1]
                }
            };
            acc += diff * diff;
        }
        acc
    }

    /// Dense copy of length `dim` (indices above `dim` are dropped).
    pub fn to_dense(&self, dim: usize) -> DVector<f64> {
        let mut out = DVector::zeros(dim);
        for (i, v) in self.iter().filter(|(i, _)| *i <= dim) {
            out[i - 1] = v;
        }
        out
    }
}

/// How labels are validated while parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels must be exactly −1 or +1.
    Classification,
    /// Any finite real label.
    Regression,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    instances: Vec<SparseVector>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset; `dim` is raised to the largest index present.
    pub fn new(instances: Vec<SparseVector>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: instances.len(),
                got: labels.len(),
            });
        }
        let seen = instances
            .iter()
            .map(SparseVector::max_index)
            .max()
            .unwrap_or(0);
        Ok(Self {
            instances,
            labels,
            dim: dim.max(seen),
        })
    }

    /// Dense rows of `x` with labels `y`.
    pub fn from_dense(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        let instances = x
            .row_iter()
            .map(|row| SparseVector::from_dense(row.transpose().as_slice()))
            .collect();
        Self::new(instances, y.to_vec(), x.ncols())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn instances(&self) -> &[SparseVector] {
        &self.instances
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn instance(&self, i: usize) -> &SparseVector {
        &self.instances[i]
    }

    /// Widens the feature dimension (never shrinks it).
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = self.dim.max(dim);
        self
    }

    pub fn check_classification(&self) -> Result<()> {
        match self.labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            Some(i) => Err(invalid(format!(
                "instance {i} has label {} (expected ±1)",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    /// Instances at the given positions, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            instances: idx.iter().map(|&i| self.instances[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// Dense `n × dim` design matrix.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.len(), self.dim);
        for (r, inst) in self.instances.iter().enumerate() {
            for (i, v) in inst.iter() {
                x[(r, i - 1)] = v;
            }
        }
        x
    }

    pub fn label_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.labels)
    }

    /// LIBSVM text; floats use the shortest representation that parses back exactly.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (inst, y) in self.instances.iter().zip(&self.labels) {
            if *y == 1.0 {
                out.push_str("+1");
            } else {
                let _ = write!(out, "{y}");
            }
            for (i, v) in inst.iter() {
                let _ = write!(out, " {i}:{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Seeded shuffle, then the first `round(fraction·n)` instances form the first part.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid(format!("split fraction {fraction} not in (0, 1)")));
        }
        let n = self.len();
        if n < 2 {
            return Err(invalid(format!(
                "cannot split a dataset of {n} instance(s)"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let head = ((fraction * n as f64).round() as usize).clamp(0, n);
        Ok((self.subset(&order[..head]), self.subset(&order[head..])))
    }
}

pub fn parse_libsvm_str(text: &str, mode: LabelMode) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), mode)
}

/// Parses `<label> <idx>:<val> ...` lines. Blank lines and `#` comments are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, mode: LabelMode) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label {label_tok:?}")));
        }
        if mode == LabelMode::Classification && label != 1.0 && label != -1.0 {
            return Err(err(format!("label {label_tok} is not ±1")));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected <index>:<value>, got {tok:?}")))?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| err(format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value {val}")));
            }
            if let Some(&prev) = indices.last() {
                if idx == prev {
                    return Err(err(format!("duplicate index {idx}")));
                }
                if idx < prev {
                    return Err(err(format!("non-ascending index {idx} after {prev}")));
                }
            }
            indices.push(idx);
            values.push(val);
        }
        instances.push(SparseVector { indices, values });
        labels.push(label);
    }
    Dataset::new(instances, labels, 0)
}

/// Kernel function `K(x, x')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `exp(−γ‖x − x'‖²)`
    Rbf {
        gamma: f64,
    },
}

impl KernelSpec {
    /// Gaussian kernel with the customary `γ = 1/d`.
    pub fn rbf_default(dim: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(invalid(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    pub fn eval(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        match *self {
            KernelSpec::Linear => a.dot(b),
            KernelSpec::Rbf { gamma } => (-gamma * a.sq_distance(b)).exp(),
        }
    }

    /// `K(x, x)`
    pub fn self_eval(&self, a: &SparseVector) -> f64 {
        match self {
            KernelSpec::Linear => a.sq_norm(),
            KernelSpec::Rbf { .. } => 1.0,
        }
    }
}

/// Gram matrix of `points`; the upper triangle is computed once and mirrored.
pub fn gram_of(points: &[SparseVector], kernel: &KernelSpec) -> DMatrix<f64> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = kernel.self_eval(&points[i]);
        for j in (i + 1)..n {
            let k = kernel.eval(&points[i], &points[j]);
            g[(i, j)] = k;
            g[(j, i)] = k;
        }
    }
    g
}

pub fn gram(ds: &Dataset, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    Ok(gram_of(ds.instances(), kernel))
}

/// `rows.len() × cols.len()` matrix of kernel values.
pub fn cross_kernel(
    rows: &[SparseVector],
    cols: &[SparseVector],
    kernel: &KernelSpec,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        kernel.eval(&rows[i], &cols[j])
    })
}

/// Matrix as CSV rows (no header), 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
