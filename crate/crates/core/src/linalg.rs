//! Complex matrices on truncated Hilbert spaces.
//!
//! [`Operator`] is a compressed-row sparse matrix: ladder operators and the
//! Hamiltonians built from them are banded, so products against a dense
//! density matrix cost O(nnz·d) instead of O(d³). [`CMatrix`] is the dense
//! row-major companion used for states and for the small blocks handed to
//! nalgebra (eigenvalues, SVD, inversion).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

// ---------------------------------------------------------------------------
// Dense

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = re(1.0);
        }
        m
    }

    /// Wrap a row-major buffer of length `dim²`.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let row = other.row(k);
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Largest entrywise |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let e = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues of the Hermitian part ½(A + A†), ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |i, j| self[(i, j)]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// General inverse via LU; `None` when singular.
    pub fn inverse(&self) -> Option<CMatrix> {
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |i, j| self[(i, j)]);
        let inv = m.try_inverse()?;
        Some(CMatrix::from_fn(d, |i, j| inv[(i, j)]))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

// ---------------------------------------------------------------------------
// Sparse

/// Square complex operator in compressed-row storage.
///
/// Column indices inside a row are sorted and unique; exact zeros are not
/// stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![re(1.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Build from (row, col, value) triplets; duplicates are summed.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of range for dimension {dim}");
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows: Vec<usize> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v.is_zero() {
                continue;
            }
            row_ptr[r + 1] += 1;
            out_cols.push(c);
            out_vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, cols: out_cols, vals: out_vals }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let d = m.dim();
        Self::from_triplets(
            d,
            (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])),
        )
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries as (row, col, value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    #[inline]
    pub(crate) fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C64::zero(),
        }
    }

    pub fn dagger(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        if s.is_zero() {
            return Self::zeros(self.dim);
        }
        Self {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator product dimension mismatch");
        let d = self.dim;
        let mut acc = vec![C64::zero(); d];
        let mut touched = vec![false; d];
        let mut idx: Vec<usize> = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..d {
            for (k, a) in self.row_entries(r) {
                for (c, b) in rhs.row_entries(k) {
                    if !touched[c] {
                        touched[c] = true;
                        idx.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &idx {
                triplets.push((r, c, acc[c]));
                acc[c] = C64::zero();
                touched[c] = false;
            }
            idx.clear();
        }
        Operator::from_triplets(d, triplets)
    }

    /// Kronecker product `self ⊗ rhs` (self is the slow index).
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let d2 = rhs.dim;
        Operator::from_triplets(
            self.dim * d2,
            self.iter().flat_map(|(r1, c1, v1)| {
                rhs.iter().map(move |(r2, c2, v2)| (r1 * d2 + r2, c1 * d2 + c2, v1 * v2))
            }),
        )
    }

    pub fn commutator(&self, rhs: &Operator) -> Operator {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        (self - other).vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn is_finite(&self) -> bool {
        self.vals.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `A·v`
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|r| self.row_entries(r).map(|(c, a)| a * v[c]).sum()).collect()
    }

    /// Tr(A·ρ) for dense ρ.
    pub fn expectation(&self, rho: &CMatrix) -> C64 {
        assert_eq!(self.dim, rho.dim());
        // Tr(Aρ) = Σ_{r,c} A[r,c] ρ[c,r]
        self.iter().map(|(r, c, a)| a * rho[(c, r)]).sum()
    }

    /// `out += s · A·ρ`
    pub fn left_mul_acc(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for r in 0..d {
            let dst = &mut out[r * d..(r + 1) * d];
            for (k, a) in self.row_entries(r) {
                let coef = s * a;
                let src = &rho[k * d..(k + 1) * d];
                for (o, &x) in dst.iter_mut().zip(src) {
                    *o += coef * x;
                }
            }
        }
    }

    /// `out += s · ρ·A†`, i.e. out[i][j] += s Σ_k ρ[i][k] conj(A[j][k]).
    pub fn right_mul_dagger_acc(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for i in 0..d {
            let src = &rho[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (j, o) in dst.iter_mut().enumerate() {
                let mut acc = C64::zero();
                for (k, a) in self.row_entries(j) {
                    acc += src[k] * a.conj();
                }
                *o += s * acc;
            }
        }
    }

    /// Embed into a larger tensor-product space: `I_left ⊗ self ⊗ I_right`.
    pub fn embed(&self, left: usize, right: usize) -> Operator {
        Operator::identity(left).kron(self).kron(&Operator::identity(right))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator sum dimension mismatch");
        Operator::from_triplets(self.dim, self.iter().chain(rhs.iter()))
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator difference dimension mismatch");
        Operator::from_triplets(self.dim, self.iter().chain(rhs.iter().map(|(r, c, v)| (r, c, -v))))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize, seed: u64) -> Operator {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut t = Vec::new();
        for r in 0..dim {
            for col in 0..dim {
                if (r + 2 * col) % 3 == 0 {
                    t.push((r, col, c(next(), next())));
                }
            }
        }
        Operator::from_triplets(dim, t)
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = sample(5, 1);
        let b = sample(5, 2);
        let sparse = a.matmul(&b).to_dense();
        let dense = a.to_dense().matmul(&b.to_dense());
        assert!(sparse.max_abs_diff(&dense) < 1e-14);
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let op = Operator::from_triplets(2, [(0, 1, re(1.0)), (0, 1, re(2.0)), (1, 0, re(1.0)), (1, 0, re(-1.0))]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), re(3.0));
    }

    #[test]
    fn kron_layout_is_slow_index_first() {
        let a = Operator::from_triplets(2, [(0, 1, re(1.0))]);
        let b = Operator::from_triplets(3, [(2, 0, re(5.0))]);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k.get(2, 3), re(5.0));
        assert_eq!(k.nnz(), 1);
    }

    #[test]
    fn accumulating_products_match_dense() {
        let a = sample(4, 3);
        let rho = sample(4, 4).to_dense();
        let mut out = vec![C64::zero(); 16];
        a.left_mul_acc(rho.as_slice(), &mut out, re(1.0));
        let left = CMatrix::from_vec(4, out).unwrap();
        assert!(left.max_abs_diff(&a.to_dense().matmul(&rho)) < 1e-14);

        let mut out = vec![C64::zero(); 16];
        a.right_mul_dagger_acc(rho.as_slice(), &mut out, re(1.0));
        let right = CMatrix::from_vec(4, out).unwrap();
        assert!(right.max_abs_diff(&rho.matmul(&a.to_dense().dagger())) < 1e-14);
    }

    #[test]
    fn expectation_is_trace_of_product() {
        let a = sample(4, 5);
        let rho = sample(4, 6).to_dense();
        let direct = a.to_dense().matmul(&rho).trace();
        assert!((a.expectation(&rho) - direct).norm() < 1e-14);
    }

    #[test]
    fn inverse_and_spectra() {
        let m = CMatrix::from_fn(2, |i, j| if i == j { c(0.0, -(i as f64 + 1.0)) } else { re(0.0) });
        let inv = m.inverse().unwrap();
        assert!((inv[(0, 0)] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((inv[(1, 1)] - c(0.0, 0.5)).norm() < 1e-14);
        let sv = m.singular_values();
        assert!((sv[0] - 2.0).abs() < 1e-12 && (sv[1] - 1.0).abs() < 1e-12);
        let h = CMatrix::from_fn(2, |i, j| if i == j { re(i as f64) } else { c(0.0, if i < j { 1.0 } else { -1.0 }) });
        let ev = h.hermitian_eigenvalues();
        // eigenvalues of [[0, i], [-i, 1]]: (1 ± √5)/2
        assert!((ev[0] - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((ev[1] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }
}
