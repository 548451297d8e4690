//! Growable symmetric Gram storage.
//!
//! Streaming trackers border the support Gram by one row and column per
//! admitted sample and multiply it by the thin factor `A` on every step. The
//! matrix lives in a column-major buffer with spare capacity, so bordering
//! costs `O(s)` amortized and products run through the dense gemm kernel.

use nalgebra::{DMatrix, DMatrixView, DVector, Dyn, U1};

use crate::error::{Error, Result};
use crate::Real;

/// Symmetric matrix with room to grow in both dimensions.
///
/// Entry `(i, j)` sits at `j * cap + i`; both triangles are stored.
#[derive(Clone, Debug)]
pub struct SupportGram<T> {
    data: Vec<T>,
    cap: usize,
    len: usize,
}

impl<T: Real> Default for SupportGram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> PartialEq for SupportGram<T> {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.view() == other.view()
    }
}

impl<T: Real> SupportGram<T> {
    pub fn new() -> Self {
        SupportGram { data: Vec::new(), cap: 0, len: 0 }
    }

    pub fn from_matrix(m: &DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        let mut g = SupportGram { data: vec![T::zero(); n * n], cap: n, len: n };
        for j in 0..n {
            for i in 0..n {
                g.data[j * n + i] = m[(i.max(j), i.min(j))];
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.len && j < self.len, "gram index ({i}, {j}) out of range for {}", self.len);
        self.data[j * self.cap + i]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> T {
        self.get(i, i)
    }

    /// Read-only view of the live `len × len` block.
    pub fn view(&self) -> DMatrixView<'_, T, U1, Dyn> {
        let used = if self.len == 0 { 0 } else { (self.len - 1) * self.cap + self.len };
        DMatrixView::from_slice_with_strides_generic(
            &self.data[..used],
            Dyn(self.len),
            Dyn(self.len),
            U1,
            Dyn(self.cap),
        )
    }

    fn grow(&mut self, needed: usize) {
        if needed <= self.cap {
            return;
        }
        let cap = needed.max(self.cap + self.cap / 2).max(8);
        let mut data = vec![T::zero(); cap * cap];
        for j in 0..self.len {
            data[j * cap..j * cap + self.len].copy_from_slice(&self.data[j * self.cap..j * self.cap + self.len]);
        }
        self.data = data;
        self.cap = cap;
    }

    /// Borders the matrix with `cross` (the new off-diagonal column) and the
    /// new diagonal entry.
    pub fn push(&mut self, cross: &[T], diag: T) -> Result<()> {
        if cross.len() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, found: cross.len() });
        }
        let n = self.len;
        self.grow(n + 1);
        let cap = self.cap;
        self.data[n * cap..n * cap + n].copy_from_slice(cross);
        for (j, v) in cross.iter().enumerate() {
            self.data[j * cap + n] = *v;
        }
        self.data[n * cap + n] = diag;
        self.len += 1;
        Ok(())
    }

    /// Deletes row and column `idx`.
    pub fn remove(&mut self, idx: usize) -> Result<()> {
        if idx >= self.len {
            return Err(Error::IndexOutOfRange { index: idx, len: self.len });
        }
        let (n, cap) = (self.len, self.cap);
        for j in 0..n {
            let col = &mut self.data[j * cap..j * cap + n];
            col.copy_within(idx + 1..n, idx);
        }
        for j in idx + 1..n {
            self.data.copy_within(j * cap..j * cap + n - 1, (j - 1) * cap);
        }
        self.len -= 1;
        Ok(())
    }

    pub fn trace(&self) -> T {
        (0..self.len).fold(T::zero(), |acc, i| acc + self.diag(i))
    }

    /// Column `j` as a dense vector.
    pub fn column(&self, j: usize) -> DVector<T> {
        assert!(j < self.len, "gram column {j} out of range for {}", self.len);
        DVector::from_column_slice(&self.data[j * self.cap..j * self.cap + self.len])
    }

    pub fn to_matrix(&self) -> DMatrix<T> {
        self.view().into_owned()
    }

    /// `K · v`.
    pub fn mul_vec(&self, v: &[T]) -> Result<DVector<T>> {
        if v.len() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, found: v.len() });
        }
        Ok(self.view() * DVector::from_column_slice(v))
    }

    /// `K · M` for a dense `M` with `len` rows.
    pub fn mul_mat(&self, m: &DMatrix<T>) -> Result<DMatrix<T>> {
        if m.nrows() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, found: m.nrows() });
        }
        Ok(self.view() * m)
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(T::zero(), |s, (x, y)| s + *x * *y);
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
