//! Minimal dense array kernel: rank 1-4 row-major f64 tensors with the
//! handful of primitives the attention math needs (matrix-vector products,
//! axis reductions, temperature softmax).
//!
//! All reductions accumulate strictly left to right so results are
//! reproducible bit for bit across runs and platforms. Ties in `max` and
//! `argmax` go to the lowest index.

use crate::error::{Error, Result};

/// Dense row-major tensor of 64-bit floats, rank 1 to 4.
///
/// Every extent is at least 1 and every stored value is finite; both are
/// checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, validating rank, extents, length, and finiteness.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(Error::InvalidParameter {
                message: format!("tensor rank must be 1..=4, got {}", dims.len()),
            });
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter {
                message: format!("tensor extents must be >= 1, got {dims:?}"),
            });
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "Tensor::new",
                left: dims,
                right: vec![data.len()],
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                message: format!("tensor values must be finite, found {bad}"),
            });
        }
        Ok(Self { dims, data })
    }

    /// Rank-1 tensor from a slice.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    /// Internal constructor for values produced by crate ops, which preserve
    /// finiteness by construction.
    pub(crate) fn from_parts(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row `r` of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.dims[1];
        &self.data[r * cols..(r + 1) * cols]
    }
}

/// Softmax sharpness parameter; `Infinite` is the max-pooling limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Finite(f64),
    Infinite,
}

impl Temperature {
    /// Validates a finite temperature (must be strictly positive).
    pub fn finite(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Temperature::Finite(t))
        } else {
            Err(Error::InvalidParameter {
                message: format!("temperature must be positive and finite, got {t}"),
            })
        }
    }

    /// Interprets an IEEE value: `+inf` maps to `Infinite`, positive finite
    /// values to `Finite`.
    pub fn from_f64(t: f64) -> Result<Self> {
        if t == f64::INFINITY {
            Ok(Temperature::Infinite)
        } else {
            Self::finite(t)
        }
    }

    /// IEEE encoding used in model files (`+inf` for the max-pooling limit).
    pub fn as_f64(self) -> f64 {
        match self {
            Temperature::Finite(t) => t,
            Temperature::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Temperature::Infinite)
    }
}

impl std::fmt::Display for Temperature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Temperature::Finite(t) => write!(f, "{t}"),
            Temperature::Infinite => write!(f, "inf"),
        }
    }
}

/// Which index of a rank-2 tensor a reduction runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Reduce over the row index; output has one value per column.
    Rows,
    /// Reduce over the column index; output has one value per row.
    Cols,
}

/// Reduction kind for [`reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Mean,
    Max,
    /// Index of the maximum (lowest index on ties), stored as f64.
    Argmax,
}

/// Matrix-vector product `out[i] = sum_j m[i,j] * v[j]`.
///
/// Accumulation runs left to right over `j`, so the result matches a naive
/// double loop bit for bit.
pub fn matvec(m: &Tensor, v: &Tensor) -> Result<Tensor> {
    if m.rank() != 2 || v.rank() != 1 || m.dims()[1] != v.len() {
        return Err(Error::ShapeMismatch {
            op: "matvec",
            left: m.dims().to_vec(),
            right: v.dims().to_vec(),
        });
    }
    let rows = m.dims()[0];
    let out: Vec<f64> = (0..rows).map(|i| dot(m.row(i), v.data())).collect();
    Ok(Tensor::from_parts(vec![rows], out))
}

/// Left-to-right dot product of two equal-length slices.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Temperature softmax of a rank-1 tensor.
///
/// Finite `T` uses the max-shifted form `exp(T*(v[j]-max)) / sum`, which is
/// mathematically identical to the unshifted definition but cannot overflow.
/// `T = Infinite` yields a one-hot vector at the argmax, lowest index on ties.
pub fn softmax_t(v: &Tensor, t: Temperature) -> Result<Tensor> {
    if v.rank() != 1 {
        return Err(Error::ShapeMismatch {
            op: "softmax_t",
            left: v.dims().to_vec(),
            right: vec![],
        });
    }
    let mut out = vec![0.0; v.len()];
    softmax_slice(v.data(), t, &mut out);
    Ok(Tensor::from_parts(vec![v.len()], out))
}

/// Softmax on raw slices; shared by [`softmax_t`] and the attention ops.
pub(crate) fn softmax_slice(v: &[f64], t: Temperature, out: &mut [f64]) {
    debug_assert!(!v.is_empty());
    debug_assert_eq!(v.len(), out.len());
    match t {
        Temperature::Infinite => {
            let k = argmax_slice(v);
            out.fill(0.0);
            out[k] = 1.0;
        }
        Temperature::Finite(t) => {
            let vmax = max_slice(v);
            let mut sum = 0.0;
            for (o, &x) in out.iter_mut().zip(v) {
                let e = (t * (x - vmax)).exp();
                *o = e;
                sum += e;
            }
            for o in out.iter_mut() {
                *o /= sum;
            }
        }
    }
}

/// Maximum value, first occurrence wins.
pub(crate) fn max_slice(v: &[f64]) -> f64 {
    let mut best = v[0];
    for &x in &v[1..] {
        if x > best {
            best = x;
        }
    }
    best
}

/// Index of the maximum value, lowest index on ties.
pub(crate) fn argmax_slice(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Left-to-right sum followed by a single division.
pub(crate) fn mean_slice(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in v {
        acc += x;
    }
    acc / v.len() as f64
}

/// Axis reduction of a rank-2 tensor.
///
/// `Axis::Cols` reduces across the column index (one output per row);
/// `Axis::Rows` reduces across the row index (one output per column).
pub fn reduce(m: &Tensor, axis: Axis, kind: Reduce) -> Result<Tensor> {
    if m.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "reduce",
            left: m.dims().to_vec(),
            right: vec![],
        });
    }
    let (rows, cols) = (m.dims()[0], m.dims()[1]);
    let out = match axis {
        Axis::Cols => (0..rows)
            .map(|r| {
                let row = m.row(r);
                match kind {
                    Reduce::Mean => mean_slice(row),
                    Reduce::Max => max_slice(row),
                    Reduce::Argmax => argmax_slice(row) as f64,
                }
            })
            .collect::<Vec<_>>(),
        Axis::Rows => (0..cols)
            .map(|c| {
                // Column values in row order; accumulation stays left to right.
                match kind {
                    Reduce::Mean => {
                        let mut acc = 0.0;
                        for r in 0..rows {
                            acc += m.data()[r * cols + c];
                        }
                        acc / rows as f64
                    }
                    Reduce::Max => {
                        let mut best = m.data()[c];
                        for r in 1..rows {
                            let x = m.data()[r * cols + c];
                            if x > best {
                                best = x;
                            }
                        }
                        best
                    }
                    Reduce::Argmax => {
                        let mut best = 0;
                        for r in 1..rows {
                            if m.data()[r * cols + c] > m.data()[best * cols + c] {
                                best = r;
                            }
                        }
                        best as f64
                    }
                }
            })
            .collect::<Vec<_>>(),
    };
    let n = out.len();
    Ok(Tensor::from_parts(vec![n], out))
}
