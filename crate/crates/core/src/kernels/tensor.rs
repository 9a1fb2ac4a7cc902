//! Dense f32 tensor and boolean matrix used by every kernel.
//!
//! # Layout
//!
//! Row-major, C-contiguous. A `[T, C]` tensor stores frame `t`, channel `c`
//! at `data[t * C + c]`. Time is always the leading axis so that frame slices
//! are contiguous and streaming code can split/concatenate along time without
//! copies of the channel axis.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Build a `[rows, cols]` tensor element-wise.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Leading-axis length (frames for `[T, C]`, rows for matrices).
    pub fn dim0(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Trailing-axis length of a rank-2 tensor.
    pub fn dim1(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(0)
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    /// Same data under a new shape; element counts must agree.
    pub fn reshaped(self, shape: Vec<usize>) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.data.len(),
            "reshape must preserve element count"
        );
        Tensor { shape, data: self.data }
    }

    /// Contiguous row `r` of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f32] {
        let c = self.dim1();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        let c = self.dim1();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// Copy of rows `[lo, hi)` of a rank-2 tensor.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Tensor {
        debug_assert!(lo <= hi && hi <= self.dim0());
        let c = self.dim1();
        Tensor {
            shape: vec![hi - lo, c],
            data: self.data[lo * c..hi * c].to_vec(),
        }
    }

    /// Stack rank-2 tensors along time. All parts must share the column count;
    /// empty parts are skipped.
    pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor> {
        let cols = parts
            .iter()
            .find(|p| p.dim0() > 0)
            .map(|p| p.dim1())
            .unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.dim0() == 0 {
                continue;
            }
            if p.dim1() != cols {
                return Err(Error::Shape(format!(
                    "concat_rows: column mismatch {} vs {}",
                    p.dim1(),
                    cols
                )));
            }
            rows += p.dim0();
            data.extend_from_slice(p.data());
        }
        Ok(Tensor {
            shape: vec![rows, cols],
            data,
        })
    }

    /// Columns `[lo, hi)` of a rank-2 tensor as a new tensor.
    pub fn slice_cols(&self, lo: usize, hi: usize) -> Tensor {
        debug_assert!(lo <= hi && hi <= self.dim1());
        let rows = self.dim0();
        let mut data = Vec::with_capacity(rows * (hi - lo));
        for r in 0..rows {
            data.extend_from_slice(&self.row(r)[lo..hi]);
        }
        Tensor {
            shape: vec![rows, hi - lo],
            data,
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, &x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Dense boolean matrix; `true` means "allowed".
#[derive(Debug, Clone, PartialEq)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(rows: usize, cols: usize, value: bool) -> Self {
        BoolMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r * self.cols + c] = value;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}
