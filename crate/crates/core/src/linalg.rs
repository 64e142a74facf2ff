//! Dense real matrices, their singular spectrum, and the matrix norms built on it.
//!
//! Singular values always come from a full (non-randomized) decomposition so
//! that experiment ground truth carries no sampling noise of its own.

use std::fmt;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Singular values below `DEFAULT_RANK_TOL * σ₁` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SVD_MAX_ITER: usize = 10_000;

/// Real `rows × cols` matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(r)[..self.cols.min(8)])?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting bad shapes and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("shape", format!("{rows}x{cols} has a zero dimension")));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for data produced by finite arithmetic on valid inputs.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero dimension");
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(n, n, &vec![1.0; n])
    }

    /// `rows × cols` matrix with `diag` on the main diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        assert!(diag.len() <= rows.min(cols), "diagonal longer than min(rows, cols)");
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * cols + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    /// Single-unit-entry matrix `E_{row,col}`.
    pub fn unit(rows: usize, cols: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data[row * cols + col] = 1.0;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right", self.cols),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        gemm(
            self.rows,
            self.cols,
            rhs.cols,
            1.0,
            MatRef::row_major(&self.data, self.cols),
            MatRef::row_major(&rhs.data, rhs.cols),
            0.0,
            &mut out,
        );
        Ok(Self::from_raw(self.rows, rhs.cols, out))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Stable hash of the entries, used to identify matrices in diagnostics.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.rows.hash(&mut h);
        self.cols.hash(&mut h);
        for v in &self.data {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        Self::new(rows, cols, m.transpose().as_slice().to_vec())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }
}

/// Strided read-only view handed to the GEMM kernel.
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a> {
    pub data: &'a [f64],
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a> MatRef<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        Self {
            data,
            row_stride: cols as isize,
            col_stride: 1,
        }
    }

    /// Transposed view of a row-major matrix with `cols` columns.
    pub fn row_major_t(data: &'a [f64], cols: usize) -> Self {
        Self {
            data,
            row_stride: 1,
            col_stride: cols as isize,
        }
    }
}

/// `c ← alpha · a · b + beta · c` with `a: m×k`, `b: k×n` and row-major `c: m×n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: MatRef<'_>,
    b: MatRef<'_>,
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let span = |r: MatRef<'_>, rows: usize, cols: usize| {
        (rows as isize - 1) * r.row_stride + (cols as isize - 1) * r.col_stride + 1
    };
    assert!(span(a, m, k) as usize <= a.data.len());
    assert!(span(b, k, n) as usize <= b.data.len());
    // SAFETY: the asserts above bound every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Non-increasing singular values of a matrix, length `min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Wraps a spectrum, sorting it and clamping round-off negatives to zero.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Number of values above `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.largest();
        self.values.iter().filter(|&&v| v > cutoff && v > 0.0).count()
    }

    /// `Σ σᵢ^p` over the numerically nonzero values.
    pub fn schatten_power(&self, p: f64, rel_tol: f64) -> f64 {
        let r = self.rank(rel_tol);
        self.values[..r].iter().map(|v| v.powf(p)).sum()
    }

    pub fn schatten(&self, p: f64, rel_tol: f64) -> f64 {
        self.schatten_power(p, rel_tol).powf(1.0 / p)
    }

    pub fn kyfan(&self, s: usize) -> Result<f64> {
        if s == 0 || s > self.values.len() {
            return Err(invalid(
                "s",
                format!("Ky-Fan index {s} outside 1..={}", self.values.len()),
            ));
        }
        Ok(self.values[..s].iter().sum())
    }
}

/// Thin singular value decomposition `A = U · diag(σ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub spectrum: SingularSpectrum,
    pub v_t: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let vals = self.spectrum.values();
        let scaled = DenseMatrix::from_fn(self.u.rows(), vals.len(), |r, c| {
            self.u.get(r, c) * vals[c]
        });
        scaled.matmul(&self.v_t).expect("svd factor shapes agree")
    }
}

fn nalgebra_svd(a: &DenseMatrix, vectors: bool) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    nalgebra::SVD::try_new(a.to_nalgebra(), vectors, vectors, f64::EPSILON, SVD_MAX_ITER).ok_or(
        Error::SvdNonConvergence {
            rows: a.rows(),
            cols: a.cols(),
            fingerprint: a.fingerprint(),
        },
    )
}

/// Full singular spectrum of `a`.
pub fn singular_values(a: &DenseMatrix) -> Result<SingularSpectrum> {
    let svd = nalgebra_svd(a, false)?;
    Ok(SingularSpectrum::from_values(svd.singular_values.as_slice().to_vec()))
}

/// Singular value decomposition with factors, columns ordered by decreasing σ.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let mut svd = nalgebra_svd(a, true)?;
    svd.sort_by_singular_values();
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    Ok(Svd {
        u: DenseMatrix::from_nalgebra(u)?,
        spectrum: SingularSpectrum::from_values(svd.singular_values.as_slice().to_vec()),
        v_t: DenseMatrix::from_nalgebra(v_t)?,
    })
}

pub fn operator_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.largest())
}

/// Schatten p-norm with the default rank threshold.
pub fn schatten_norm(a: &DenseMatrix, p: f64) -> Result<f64> {
    schatten_norm_with_tol(a, p, DEFAULT_RANK_TOL)
}

pub fn schatten_norm_with_tol(a: &DenseMatrix, p: f64, rel_tol: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("Schatten exponent must be positive, got {p}")));
    }
    Ok(singular_values(a)?.schatten(p, rel_tol))
}

/// Sum of the `s` largest singular values.
pub fn kyfan_norm(a: &DenseMatrix, s: usize) -> Result<f64> {
    singular_values(a)?.kyfan(s)
}

/// Entrywise inner product `Σ A_ab B_ab = tr(AᵀB)`.
pub fn frobenius_inner(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_gaussian;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    /// Cyclic Jacobi eigenvalues of a symmetric matrix, independent of the SVD path.
    fn jacobi_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
        let n = a.rows();
        let mut m: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).to_vec()).collect();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i][j] * m[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for row in m.iter_mut() {
                        let (mkp, mkq) = (row[p], row[q]);
                        row[p] = c * mkp - s * mkq;
                        row[q] = s * mkp + c * mkq;
                    }
                    let (rp, rq) = (m[p].clone(), m[q].clone());
                    for k in 0..n {
                        m[p][k] = c * rp[k] - s * rq[k];
                        m[q][k] = s * rp[k] + c * rq[k];
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let a = DenseMatrix::from_diag(3, 3, &[3.0, 1.0, 2.0]);
        let s = singular_values(&a).unwrap();
        assert_eq!(s.values().len(), 3);
        for (got, want) in s.values().iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let s = singular_values(&DenseMatrix::zeros(4, 2)).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0]);
        assert_eq!(s.rank(DEFAULT_RANK_TOL), 0);
        assert_eq!(s.schatten_power(1.0, DEFAULT_RANK_TOL), 0.0);
    }

    #[test]
    fn squared_spectrum_matches_jacobi_eigenvalues() {
        let a = sample_gaussian(5, 5, RngStream::new(11, 0));
        let s = singular_values(&a).unwrap();
        let ata = a.transpose().matmul(&a).unwrap();
        let ev = jacobi_eigenvalues(&ata);
        for (sv, e) in s.values().iter().zip(&ev) {
            assert!(close(sv * sv, *e, 1e-8), "{} vs {}", sv * sv, e);
        }
    }

    #[test]
    fn reconstruction_residual_is_tiny() {
        for (m, n) in [(7, 3), (3, 7), (6, 6)] {
            let a = sample_gaussian(m, n, RngStream::new(3, (m * 10 + n) as u64));
            let d = svd(&a).unwrap();
            let resid = d.reconstruct().sub(&a).unwrap().frobenius_norm();
            assert!(resid <= 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn operator_norm_examples() {
        let a = DenseMatrix::from_diag(3, 3, &[3.0, 1.0, 2.0]);
        assert!((operator_norm(&a).unwrap() - 3.0).abs() < 1e-14);
        assert!((operator_norm(&DenseMatrix::identity(6)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn operator_norm_dominates_random_unit_vectors() {
        use crate::rng::GaussianStream;
        let a = sample_gaussian(4, 4, RngStream::new(5, 1));
        let op = operator_norm(&a).unwrap();
        let mut g = GaussianStream::new(RngStream::new(5, 2));
        let mut best = 0.0f64;
        let mut x = [0.0; 4];
        for _ in 0..1_000_000 {
            g.fill(&mut x);
            let nx = dot(&x, &x).sqrt();
            let ax: f64 = (0..4)
                .map(|r| dot(a.row(r), &x).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max(ax / nx);
        }
        assert!(best <= op * (1.0 + 1e-12));
        assert!(best >= op * (1.0 - 1e-3), "sup {best} vs op {op}");
    }

    #[test]
    fn schatten_examples() {
        let a = DenseMatrix::from_diag(2, 2, &[3.0, 4.0]);
        assert!((schatten_norm(&a, 2.0).unwrap() - 5.0).abs() < 1e-13);
        assert!((schatten_norm(&DenseMatrix::identity(3), 1.0).unwrap() - 3.0).abs() < 1e-13);
        assert!(schatten_norm(&a, 0.0).is_err());
        assert!(schatten_norm(&a, -1.0).is_err());
    }

    #[test]
    fn schatten_four_matches_trace_of_power() {
        let a = sample_gaussian(4, 4, RngStream::new(8, 0));
        let ata = a.transpose().matmul(&a).unwrap();
        let oracle = ata.matmul(&ata).unwrap().trace().powf(0.25);
        assert!(close(schatten_norm(&a, 4.0).unwrap(), oracle, 1e-12));
    }

    #[test]
    fn kyfan_examples_and_range() {
        let a = DenseMatrix::from_diag(3, 3, &[3.0, 2.0, 1.0]);
        assert!((kyfan_norm(&a, 2).unwrap() - 5.0).abs() < 1e-13);
        assert!(kyfan_norm(&a, 0).is_err());
        assert!(kyfan_norm(&a, 4).is_err());
        let g = sample_gaussian(5, 3, RngStream::new(1, 1));
        assert!(close(kyfan_norm(&g, 1).unwrap(), operator_norm(&g).unwrap(), 1e-14));
        assert!(close(kyfan_norm(&g, 3).unwrap(), schatten_norm(&g, 1.0).unwrap(), 1e-12));
    }

    #[test]
    fn kyfan_beyond_rank_is_trace_norm() {
        let u = sample_gaussian(6, 2, RngStream::new(4, 0));
        let v = sample_gaussian(2, 6, RngStream::new(4, 1));
        let a = u.matmul(&v).unwrap();
        let trace = schatten_norm(&a, 1.0).unwrap();
        for s in 2..=6 {
            assert!(close(kyfan_norm(&a, s).unwrap(), trace, 1e-10));
        }
    }

    #[test]
    fn frobenius_inner_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        let a = sample_gaussian(3, 4, RngStream::new(2, 0));
        assert_eq!(frobenius_inner(&a, &DenseMatrix::zeros(3, 4)).unwrap(), 0.0);
        let b = sample_gaussian(3, 4, RngStream::new(2, 1));
        let oracle = a.transpose().matmul(&b).unwrap().trace();
        assert!(close(frobenius_inner(&a, &b).unwrap(), oracle, 1e-12));
        assert!(frobenius_inner(&a, &DenseMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0; 3]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
    }

    fn random_matrix() -> impl Strategy<Value = DenseMatrix> {
        (1usize..7, 1usize..7, any::<u64>())
            .prop_map(|(m, n, seed)| sample_gaussian(m, n, RngStream::new(seed, 0)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn norm_sandwich(a in random_matrix()) {
            let s = singular_values(&a).unwrap();
            let op = s.largest();
            let fro = a.frobenius_norm();
            let rank = s.rank(DEFAULT_RANK_TOL) as f64;
            prop_assert!(op <= fro * (1.0 + 1e-12));
            prop_assert!(fro <= rank.sqrt() * op * (1.0 + 1e-12));
        }

        #[test]
        fn schatten_decreases_in_p(a in random_matrix()) {
            let s = singular_values(&a).unwrap();
            let norms: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|&p| s.schatten(p, DEFAULT_RANK_TOL)).collect();
            for w in norms.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            prop_assert!(close(norms[1], a.frobenius_norm(), 1e-12));
        }

        #[test]
        fn kyfan_monotone_and_concave(a in random_matrix()) {
            let s = singular_values(&a).unwrap();
            let n = s.values().len();
            let f: Vec<f64> = (1..=n).map(|k| s.kyfan(k).unwrap()).collect();
            for w in f.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            for w in f.windows(3) {
                prop_assert!(w[2] - w[1] <= w[1] - w[0] + 1e-12);
            }
        }

        #[test]
        fn spectrum_is_orthogonally_invariant(a in random_matrix(), seed in any::<u64>()) {
            use crate::ensembles::random_orthogonal;
            let q1 = random_orthogonal(a.rows(), RngStream::new(seed, 1));
            let q2 = random_orthogonal(a.cols(), RngStream::new(seed, 2));
            let rotated = q1.matmul(&a).unwrap().matmul(&q2).unwrap();
            let s0 = singular_values(&a).unwrap();
            let s1 = singular_values(&rotated).unwrap();
            let scale = s0.largest().max(1e-300);
            for (x, y) in s0.values().iter().zip(s1.values()) {
                prop_assert!((x - y).abs() <= 1e-8 * scale.max(*x));
            }
        }
    }
}
