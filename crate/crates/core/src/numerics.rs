//! Dense complex linear algebra for small Hermitian positive-definite systems.
//!
//! Everything here is sized for user counts up to a few dozen, so storage is
//! dense and row-major. [`HermitianSplit`] keeps a Hermitian matrix as its real
//! diagonal plus the packed strictly-lower triangle, which is the form the
//! Gauss-Seidel sweeps and the Neumann-series inverse consume.
//!
//! Kernels that the complexity accounting cares about take a [`MulCounter`];
//! pass [`NoCount`] when nothing is being measured.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative pivot threshold used by [`cholesky_factor`].
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Sink for complex-valued multiplication counts.
pub trait MulCounter {
    fn add(&mut self, n: u64);
}

/// Counter that discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCount;

impl MulCounter for NoCount {
    #[inline]
    fn add(&mut self, _n: u64) {}
}

impl MulCounter for u64 {
    #[inline]
    fn add(&mut self, n: u64) {
        *self += n;
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), cols, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Computes `self^H v` without forming the adjoint.
    pub fn adjoint_matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_len(self.rows, v.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_len(self.cols, rhs.rows)?;
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// A Hermitian matrix stored as `D + L + L^H`.
///
/// `d` is the real diagonal and `lower` the strictly-lower triangle packed row
/// by row: row `i` holds the `i` entries `L[i][0..i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSplit {
    d: Vec<f64>,
    lower: Vec<C64>,
}

#[inline]
fn packed_offset(i: usize) -> usize {
    i * (i.saturating_sub(1)) / 2
}

impl HermitianSplit {
    pub fn new(d: Vec<f64>, lower: Vec<C64>) -> Result<Self> {
        let n = d.len();
        check_len(n * n.saturating_sub(1) / 2, lower.len())?;
        Ok(HermitianSplit { d, lower })
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let n = d.len();
        HermitianSplit {
            d,
            lower: vec![C64::new(0.0, 0.0); n * n.saturating_sub(1) / 2],
        }
    }

    /// Reads the diagonal and lower triangle of `m`; the upper triangle is
    /// assumed to be its mirror and is ignored.
    pub fn from_dense(m: &ComplexMatrix) -> Result<Self> {
        check_len(m.rows(), m.cols())?;
        let n = m.rows();
        let d = (0..n).map(|i| m[(i, i)].re).collect();
        let mut lower = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in 0..i {
                lower.push(m[(i, j)]);
            }
        }
        Ok(HermitianSplit { d, lower })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    #[inline]
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Row `i` of the strictly-lower triangle, i.e. `L[i][0..i]`.
    #[inline]
    pub fn lower_row(&self, i: usize) -> &[C64] {
        let off = packed_offset(i);
        &self.lower[off..off + i]
    }

    pub fn lower_packed(&self) -> &[C64] {
        &self.lower
    }

    /// `L[i][j]` for `i > j`.
    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i > j);
        self.lower[packed_offset(i) + j]
    }

    /// Entry `(i, j)` of the full Hermitian matrix.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => C64::new(self.d[i], 0.0),
            std::cmp::Ordering::Greater => self.lower(i, j),
            std::cmp::Ordering::Less => self.lower(j, i).conj(),
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.d.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^H v`, the strictly-upper part applied to `v`.
    pub fn upper_matvec(&self, v: &[C64], counter: &mut impl MulCounter) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 1..n {
            for (j, l) in self.lower_row(i).iter().enumerate() {
                out[j] += l.conj() * v[i];
            }
        }
        counter.add((n * n.saturating_sub(1) / 2) as u64);
        out
    }
}

/// Read access to a lower-triangular operator.
pub trait LowerTriangular {
    fn dim(&self) -> usize;
    fn diag(&self, i: usize) -> C64;
    /// Entry `(i, j)` for `i > j`.
    fn below(&self, i: usize, j: usize) -> C64;
}

impl LowerTriangular for ComplexMatrix {
    fn dim(&self) -> usize {
        self.rows
    }

    fn diag(&self, i: usize) -> C64 {
        self[(i, i)]
    }

    fn below(&self, i: usize, j: usize) -> C64 {
        self[(i, j)]
    }
}

/// `D + L` of a Hermitian split, the Gauss-Seidel splitting matrix.
impl LowerTriangular for HermitianSplit {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn diag(&self, i: usize) -> C64 {
        C64::new(self.d[i], 0.0)
    }

    fn below(&self, i: usize, j: usize) -> C64 {
        self.lower(i, j)
    }
}

/// Forward substitution on any lower-triangular operator.
///
/// Counts one multiplication per off-diagonal term and one per row for the
/// diagonal scaling.
pub fn forward_substitute<T: LowerTriangular + ?Sized>(
    t: &T,
    b: &[C64],
    counter: &mut impl MulCounter,
) -> Result<Vec<C64>> {
    let n = t.dim();
    check_len(n, b.len())?;
    let mut x: Vec<C64> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = b[i];
        for (j, xj) in x.iter().enumerate() {
            acc -= t.below(i, j) * xj;
        }
        let di = t.diag(i);
        if di == C64::new(0.0, 0.0) {
            return Err(Error::SingularTriangular { row: i });
        }
        x.push(acc / di);
    }
    counter.add((n * (n + 1) / 2) as u64);
    Ok(x)
}

/// Solves `C x = b` for square lower-triangular `C`.
pub fn solve_lower(c: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    check_len(c.rows(), c.cols())?;
    forward_substitute(c, b, &mut NoCount)
}

/// Solves `C^H x = b` for square lower-triangular `C` by back substitution.
pub fn solve_lower_adjoint(
    c: &ComplexMatrix,
    b: &[C64],
    counter: &mut impl MulCounter,
) -> Result<Vec<C64>> {
    check_len(c.rows(), c.cols())?;
    let n = c.rows();
    check_len(n, b.len())?;
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= c[(j, i)].conj() * x[j];
        }
        let di = c[(i, i)].conj();
        if di == C64::new(0.0, 0.0) {
            return Err(Error::SingularTriangular { row: i });
        }
        x[i] = acc / di;
    }
    counter.add((n * (n + 1) / 2) as u64);
    Ok(x)
}

/// Cholesky factor `C` (lower triangular, real positive diagonal) with
/// `C C^H = W`.
///
/// A pivot at or below `PIVOT_TOLERANCE * max(d)` is reported as not positive
/// definite.
pub fn cholesky_factor(w: &HermitianSplit) -> Result<ComplexMatrix> {
    cholesky_factor_counted(w, &mut NoCount)
}

pub fn cholesky_factor_counted(
    w: &HermitianSplit,
    counter: &mut impl MulCounter,
) -> Result<ComplexMatrix> {
    let n = w.dim();
    let tol = PIVOT_TOLERANCE * w.max_abs_diag();
    let mut c = ComplexMatrix::zeros(n, n);
    let mut mults = 0u64;
    for j in 0..n {
        let mut pivot = w.d()[j];
        for k in 0..j {
            pivot -= c[(j, k)].norm_sqr();
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { column: j, pivot });
        }
        let cjj = pivot.sqrt();
        c[(j, j)] = C64::new(cjj, 0.0);
        let inv = 1.0 / cjj;
        for i in j + 1..n {
            let mut acc = w.lower(i, j);
            for k in 0..j {
                acc -= c[(i, k)] * c[(j, k)].conj();
            }
            c[(i, j)] = acc * inv;
        }
        mults += (j + (n - j - 1) * (j + 1)) as u64;
    }
    counter.add(mults);
    Ok(c)
}

/// `(D + L + L^H) v`.
pub fn hermitian_matvec(w: &HermitianSplit, v: &[C64]) -> Result<Vec<C64>> {
    let n = w.dim();
    check_len(n, v.len())?;
    let mut out: Vec<C64> = w.d().iter().zip(v).map(|(d, x)| x * d).collect();
    for i in 1..n {
        for (j, l) in w.lower_row(i).iter().enumerate() {
            out[i] += l * v[j];
            out[j] += l.conj() * v[i];
        }
    }
    Ok(out)
}

pub fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn gram_plus(h: &ComplexMatrix, shift: f64) -> HermitianSplit {
        let mut g = h.adjoint().matmul(h).unwrap();
        for i in 0..g.rows() {
            g[(i, i)] += c(shift, 0.0);
        }
        HermitianSplit::from_dense(&g).unwrap()
    }

    #[test]
    fn cholesky_identity() {
        let w = HermitianSplit::diagonal(vec![1.0; 4]);
        let cf = cholesky_factor(&w).unwrap();
        assert_eq!(cf, ComplexMatrix::identity(4));
    }

    #[test]
    fn cholesky_diagonal() {
        let w = HermitianSplit::diagonal(vec![4.0, 9.0]);
        let cf = cholesky_factor(&w).unwrap();
        assert_eq!(cf, ComplexMatrix::diagonal(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = random_matrix(16, 4, &mut rng);
            let w = gram_plus(&h, 0.1);
            let cf = cholesky_factor(&w).unwrap();
            let back = cf.matmul(&cf.adjoint()).unwrap();
            assert!(back.max_abs_diff(&w.to_dense()) < 1e-10);
            for i in 0..4 {
                for j in i + 1..4 {
                    assert_eq!(cf[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let w = HermitianSplit::from_dense(&ComplexMatrix::from_real_rows(&[
            &[1.0, 2.0],
            &[2.0, 1.0],
        ]))
        .unwrap();
        assert!(matches!(
            cholesky_factor(&w),
            Err(Error::NotPositiveDefinite { column: 1, .. })
        ));
        let singular = HermitianSplit::from_dense(&ComplexMatrix::from_real_rows(&[
            &[1.0, 1.0],
            &[1.0, 1.0],
        ]))
        .unwrap();
        assert!(cholesky_factor(&singular).is_err());
    }

    #[test]
    fn solve_lower_identity_and_hand_case() {
        let b = vec![c(1.0, -2.0), c(0.5, 3.0), c(-4.0, 0.0)];
        assert_eq!(solve_lower(&ComplexMatrix::identity(3), &b).unwrap(), b);

        let cm = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[1.0, 1.0]]);
        let x = solve_lower(&cm, &[c(2.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn solve_lower_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut cm = random_matrix(8, 8, &mut rng);
            for i in 0..8 {
                for j in i + 1..8 {
                    cm[(i, j)] = c(0.0, 0.0);
                }
                cm[(i, i)] += c(2.0, 0.0);
            }
            let b: Vec<C64> = (0..8).map(|_| c(rng.random(), rng.random())).collect();
            let x = solve_lower(&cm, &b).unwrap();
            let r = sub(&cm.matvec(&x).unwrap(), &b);
            assert!(inf_norm(&r) < 1e-12);
        }
    }

    #[test]
    fn solve_lower_zero_diagonal() {
        let cm = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            solve_lower(&cm, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::SingularTriangular { row: 1 })
        ));
        assert!(matches!(
            solve_lower(&cm, &[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_solve_inverts_upper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_matrix(12, 5, &mut rng);
        let cf = cholesky_factor(&gram_plus(&h, 0.5)).unwrap();
        let b: Vec<C64> = (0..5).map(|_| c(rng.random(), rng.random())).collect();
        let x = solve_lower_adjoint(&cf, &b, &mut NoCount).unwrap();
        let r = sub(&cf.adjoint().matvec(&x).unwrap(), &b);
        assert!(inf_norm(&r) < 1e-12);
    }

    #[test]
    fn hermitian_matvec_cases() {
        let v = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let id = HermitianSplit::diagonal(vec![1.0; 3]);
        assert_eq!(hermitian_matvec(&id, &v).unwrap(), v);

        let d = HermitianSplit::diagonal(vec![2.0, 0.5, 3.0]);
        let out = hermitian_matvec(&d, &v).unwrap();
        assert_eq!(out, vec![v[0] * 2.0, v[1] * 0.5, v[2] * 3.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let h = random_matrix(10, 6, &mut rng);
            let w = gram_plus(&h, 0.3);
            let v: Vec<C64> = (0..6).map(|_| c(rng.random(), rng.random())).collect();
            let split = hermitian_matvec(&w, &v).unwrap();
            let dense = w.to_dense().matvec(&v).unwrap();
            assert!(inf_norm(&sub(&split, &dense)) < 1e-12);
        }
        assert!(hermitian_matvec(&id, &v[..2]).is_err());
    }

    #[test]
    fn split_round_trip_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = gram_plus(&random_matrix(6, 4, &mut rng), 0.0).to_dense();
        assert!(w.max_abs_diff(&w.adjoint()) == 0.0);
    }

    #[test]
    fn counted_kernels_report_triangle_sizes() {
        let w = HermitianSplit::diagonal(vec![1.0; 5]);
        let mut count = 0u64;
        forward_substitute(&w, &[c(1.0, 0.0); 5], &mut count).unwrap();
        assert_eq!(count, 15);
        w.upper_matvec(&[c(1.0, 0.0); 5], &mut count);
        assert_eq!(count, 25);
    }
}
