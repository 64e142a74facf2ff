//! General linear sketches: `k` measurement matrices `Lⁱ ∈ ℝ^{m×n}`, output `yᵢ = tr((Lⁱ)ᵀA)`.
//!
//! A [`SketchOperator`] always holds a trace-orthonormal family. Measurements
//! are stored dense as the rows of a `k × mn` row-major buffer.
//!
//! Orthonormalization is Gram–Schmidt with one re-orthogonalization pass.
//! Rows are processed in blocks of [`BLOCK`]: each block is first projected
//! twice against all finished rows with matrix products, then modified
//! Gram–Schmidt (two sweeps) runs inside the block. For `k ≤ BLOCK` this is
//! plain twice-iterated MGS. After normalization each row is flipped so its
//! first nonzero coordinate in row-major order is positive.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, gemm, DenseMatrix, MatRef};
use crate::rng::RngStream;

/// Largest `k·m·n` accepted without an explicit override.
pub const MAX_DENSE_ENTRIES: u128 = 2_000_000_000;

/// Orthonormality tolerance on the Gram matrix.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A row is dependent when its residual falls below this fraction of its original norm.
pub const DEPENDENCE_TOL: f64 = 1e-10;

const BLOCK: usize = 64;
const SIGN_TOL: f64 = 1e-12;
const MAX_REDRAWS: u64 = 8;

/// Sketch output `S(A) ∈ ℝᵏ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOutput {
    pub values: Vec<f64>,
}

impl SketchOutput {
    pub fn norm_sq(&self) -> f64 {
        dot(&self.values, &self.values)
    }
}

/// Ordered family of `k` measurement matrices with no orthonormality requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFamily {
    k: usize,
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl MeasurementFamily {
    pub fn from_matrices(family: &[DenseMatrix]) -> Result<Self> {
        let first = family
            .first()
            .ok_or_else(|| invalid("family", "at least one measurement is required"))?;
        let (m, n) = first.shape();
        let mut data = Vec::with_capacity(family.len() * m * n);
        for (i, l) in family.iter().enumerate() {
            if l.shape() != (m, n) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{m}x{n}"),
                    found: format!("{}x{} at index {i}", l.rows(), l.cols()),
                });
            }
            data.extend_from_slice(l.as_slice());
        }
        Ok(Self { k: family.len(), m, n, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn measurement(&self, i: usize) -> DenseMatrix {
        let len = self.m * self.n;
        DenseMatrix::from_raw(self.m, self.n, self.data[i * len..(i + 1) * len].to_vec())
    }

    /// Row `i` flattened row-major.
    pub fn row(&self, i: usize) -> &[f64] {
        let len = self.m * self.n;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn apply(&self, a: &DenseMatrix) -> Result<SketchOutput> {
        if a.shape() != (self.m, self.n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.m, self.n),
                found: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        Ok(SketchOutput {
            values: (0..self.k).map(|i| dot(self.row(i), a.as_slice())).collect(),
        })
    }

    /// Applies the family to `t` flattened inputs stored as a `t × mn` row-major buffer.
    /// Returns a `t × k` row-major buffer.
    pub fn apply_batch(&self, inputs: &[f64], t: usize) -> Vec<f64> {
        let len = self.m * self.n;
        assert_eq!(inputs.len(), t * len, "batch buffer must hold t·m·n entries");
        let mut out = vec![0.0; t * self.k];
        gemm(
            t,
            len,
            self.k,
            1.0,
            MatRef::row_major(inputs, len),
            MatRef::row_major_t(&self.data, len),
            0.0,
            &mut out,
        );
        out
    }

    /// `Σᵢ yᵢ Lⁱ`.
    pub fn combine(&self, y: &[f64]) -> Result<DenseMatrix> {
        if y.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coefficients", self.k),
                found: format!("{}", y.len()),
            });
        }
        let len = self.m * self.n;
        let mut out = vec![0.0; len];
        gemm(1, self.k, len, 1.0, MatRef::row_major(y, self.k), MatRef::row_major(&self.data, len), 0.0, &mut out);
        Ok(DenseMatrix::from_raw(self.m, self.n, out))
    }

    /// `G_ij = tr((Lⁱ)ᵀLʲ)` as a `k × k` matrix.
    pub fn gram(&self) -> DenseMatrix {
        let len = self.m * self.n;
        let mut g = vec![0.0; self.k * self.k];
        gemm(
            self.k,
            len,
            self.k,
            1.0,
            MatRef::row_major(&self.data, len),
            MatRef::row_major_t(&self.data, len),
            0.0,
            &mut g,
        );
        DenseMatrix::from_raw(self.k, self.k, g)
    }
}

/// Trace-orthonormal family of `k` measurement matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator {
    family: MeasurementFamily,
}

impl SketchOperator {
    /// Wraps row data after checking `k ≤ mn` and orthonormality.
    pub fn from_rows(k: usize, m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || m == 0 || n == 0 {
            return Err(invalid("shape", format!("k={k}, m={m}, n={n} must be positive")));
        }
        if k > m * n {
            return Err(invalid("k", format!("{k} measurements exceed m·n = {}", m * n)));
        }
        if data.len() != k * m * n {
            return Err(Error::ShapeMismatch { rows: k, cols: m * n, len: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let op = Self { family: MeasurementFamily { k, m, n, data } };
        let resid = op.gram_residual();
        if resid > ORTHONORMAL_TOL {
            return Err(invalid("family", format!("not orthonormal: Gram residual {resid:e}")));
        }
        Ok(op)
    }

    pub fn k(&self) -> usize {
        self.family.k
    }

    pub fn shape(&self) -> (usize, usize) {
        self.family.shape()
    }

    pub fn family(&self) -> &MeasurementFamily {
        &self.family
    }

    pub fn measurement(&self, i: usize) -> DenseMatrix {
        self.family.measurement(i)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.family.row(i)
    }

    pub fn apply_batch(&self, inputs: &[f64], t: usize) -> Vec<f64> {
        self.family.apply_batch(inputs, t)
    }

    /// `maxᵢⱼ |tr((Lⁱ)ᵀLʲ) − δᵢⱼ|`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.family.gram();
        let k = self.k();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| (g.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Family `Q·L` for an orthogonal `k × k` matrix `Q`; spans the same space.
    pub fn recombined(&self, q: &DenseMatrix) -> Result<Self> {
        let k = self.k();
        if q.shape() != (k, k) {
            return Err(Error::DimensionMismatch {
                expected: format!("{k}x{k}"),
                found: format!("{}x{}", q.rows(), q.cols()),
            });
        }
        let (m, n) = self.shape();
        let len = m * n;
        let mut data = vec![0.0; k * len];
        gemm(k, k, len, 1.0, MatRef::row_major(q.as_slice(), k), MatRef::row_major(&self.family.data, len), 0.0, &mut data);
        Self::from_rows(k, m, n, data)
    }

    /// Writes the operator: `k, m, n` as u64 little-endian, then `k·m·n` f64 little-endian.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        let (m, n) = self.shape();
        for v in [self.k() as u64, m as u64, n as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.family.data.len() * 8);
        for v in &self.family.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 24];
        r.read_exact(&mut header)
            .map_err(|e| Error::Format(format!("short header: {e}")))?;
        let field = |i: usize| u64::from_le_bytes(header[i * 8..(i + 1) * 8].try_into().unwrap());
        let (k, m, n) = (field(0), field(1), field(2));
        let entries = k as u128 * m as u128 * n as u128;
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::MemoryGuard { entries, limit: MAX_DENSE_ENTRIES });
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u128 != entries * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes for {k}x{m}x{n}, found {}",
                entries * 8,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_rows(k as usize, m as usize, n as usize, data)
    }
}

/// Output of `S(A)` with `yᵢ = tr((Lⁱ)ᵀA)`.
pub fn apply_sketch(s: &SketchOperator, a: &DenseMatrix) -> Result<SketchOutput> {
    s.family.apply(a)
}

/// Refuses dense sketches larger than `limit` entries (default [`MAX_DENSE_ENTRIES`]).
pub fn check_memory(k: usize, m: usize, n: usize, limit: Option<u128>) -> Result<()> {
    let entries = k as u128 * m as u128 * n as u128;
    let limit = limit.unwrap_or(MAX_DENSE_ENTRIES);
    if entries > limit {
        return Err(Error::MemoryGuard { entries, limit });
    }
    Ok(())
}

/// Orthonormalizes a family of equally shaped matrices, preserving its span.
pub fn orthonormalize(family: &[DenseMatrix]) -> Result<SketchOperator> {
    orthonormalize_family(MeasurementFamily::from_matrices(family)?)
}

pub fn orthonormalize_family(mut family: MeasurementFamily) -> Result<SketchOperator> {
    let (k, m, n) = (family.k, family.m, family.n);
    if k > m * n {
        return Err(invalid("k", format!("{k} measurements exceed m·n = {}", m * n)));
    }
    orthonormalize_rows(&mut family.data, k, m * n)?;
    Ok(SketchOperator { family })
}

fn orthonormalize_rows(w: &mut [f64], k: usize, len: usize) -> Result<()> {
    let original: Vec<f64> = w.chunks_exact(len).map(|r| dot(r, r).sqrt()).collect();
    let mut coef = vec![0.0; BLOCK * k];
    for b0 in (0..k).step_by(BLOCK) {
        let b1 = (b0 + BLOCK).min(k);
        let nb = b1 - b0;
        let (done, rest) = w.split_at_mut(b0 * len);
        let block = &mut rest[..nb * len];
        if b0 > 0 {
            let c = &mut coef[..nb * b0];
            for _pass in 0..2 {
                gemm(nb, len, b0, 1.0, MatRef::row_major(block, len), MatRef::row_major_t(done, len), 0.0, c);
                gemm(nb, b0, len, -1.0, MatRef::row_major(c, b0), MatRef::row_major(done, len), 1.0, block);
            }
        }
        for j in 0..nb {
            let (prev, cur) = block.split_at_mut(j * len);
            let row = &mut cur[..len];
            for _pass in 0..2 {
                for q in prev.chunks_exact(len) {
                    let c = dot(q, row);
                    row.iter_mut().zip(q).for_each(|(x, qv)| *x -= c * qv);
                }
            }
            let norm = dot(row, row).sqrt();
            let index = b0 + j;
            let ratio = if original[index] > 0.0 { norm / original[index] } else { 0.0 };
            if ratio.is_nan() || ratio < DEPENDENCE_TOL {
                return Err(Error::LinearDependence { index, ratio });
            }
            let lead = row.iter().find(|v| v.abs() > SIGN_TOL * norm).copied().unwrap_or(1.0);
            let scale = lead.signum() / norm;
            row.iter_mut().for_each(|x| *x *= scale);
        }
    }
    Ok(())
}

/// `k` Gaussian measurement matrices orthonormalized in matrix space.
pub fn make_random_sketch(k: usize, m: usize, n: usize, rng: RngStream) -> Result<SketchOperator> {
    make_random_sketch_with_limit(k, m, n, rng, None)
}

pub fn make_random_sketch_with_limit(
    k: usize,
    m: usize,
    n: usize,
    rng: RngStream,
    limit: Option<u128>,
) -> Result<SketchOperator> {
    if k == 0 || m == 0 || n == 0 {
        return Err(invalid("shape", format!("k={k}, m={m}, n={n} must be positive")));
    }
    if k > m * n {
        return Err(invalid("k", format!("{k} measurements exceed m·n = {}", m * n)));
    }
    check_memory(k, m, n, limit)?;
    let len = m * n;
    let mut raw = rng.split(0).gaussians().vec(k * len);
    for attempt in 1..=MAX_REDRAWS {
        let mut work = raw.clone();
        match orthonormalize_rows(&mut work, k, len) {
            Ok(()) => {
                return Ok(SketchOperator {
                    family: MeasurementFamily { k, m, n, data: work },
                })
            }
            Err(Error::LinearDependence { index, .. }) => {
                rng.split2(attempt, index as u64)
                    .gaussians()
                    .fill(&mut raw[index * len..(index + 1) * len]);
            }
            Err(e) => return Err(e),
        }
    }
    Err(invalid("k", format!("orthonormalization failed after {MAX_REDRAWS} redraws")))
}

/// Measurements reproducing a bilinear sketch `S_bil · A` for `A ∈ ℝ^{m×n}`.
#[derive(Debug, Clone)]
pub struct BilinearEmbedding {
    /// Measurement `a·n + j` returns entry `(a, j)` of `S_bil · A`.
    pub raw: MeasurementFamily,
    pub sketch: SketchOperator,
}

/// Embeds a `k' × m` bilinear sketch as a general linear sketch with `k'·n` measurements.
pub fn embed_bilinear(s_bil: &DenseMatrix, n: usize) -> Result<BilinearEmbedding> {
    let (kp, m) = s_bil.shape();
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if kp > m {
        return Err(invalid("s_bil", format!("{kp} rows exceed m = {m}; k'·n > m·n")));
    }
    if let Some(a) = (0..kp).find(|&a| s_bil.row(a).iter().all(|v| *v == 0.0)) {
        return Err(invalid("s_bil", format!("row {a} is zero")));
    }
    let len = m * n;
    let mut data = vec![0.0; kp * n * len];
    data.par_chunks_mut(n * len).enumerate().for_each(|(a, rows)| {
        let srow = s_bil.row(a);
        for (j, meas) in rows.chunks_exact_mut(len).enumerate() {
            for (i, &sv) in srow.iter().enumerate() {
                meas[i * n + j] = sv;
            }
        }
    });
    let raw = MeasurementFamily { k: kp * n, m, n, data };
    let sketch = orthonormalize_family(raw.clone())?;
    Ok(BilinearEmbedding { raw, sketch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{random_orthogonal, sample_gaussian};
    use proptest::prelude::*;

    #[test]
    fn single_measurement_is_normalized_gaussian() {
        let rng = RngStream::new(5, 5);
        let s = make_random_sketch(1, 3, 4, rng).unwrap();
        let g = sample_gaussian(3, 4, rng.split(0));
        let expected = g.scale(1.0 / g.frobenius_norm());
        let sign = if expected.as_slice()[0] > 0.0 { 1.0 } else { -1.0 };
        for (a, b) in s.row(0).iter().zip(expected.as_slice()) {
            assert!((a - sign * b).abs() < 1e-14);
        }
    }

    #[test]
    fn full_family_reconstructs_any_matrix() {
        let (m, n) = (4, 5);
        let s = make_random_sketch(m * n, m, n, RngStream::new(8, 1)).unwrap();
        let a = sample_gaussian(m, n, RngStream::new(8, 2));
        let y = apply_sketch(&s, &a).unwrap();
        let back = s.family().combine(&y.values).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn large_family_stays_orthonormal() {
        // exercises the blocked path across several blocks
        let s = make_random_sketch(300, 20, 20, RngStream::new(1, 1)).unwrap();
        assert!(s.gram_residual() <= ORTHONORMAL_TOL);
    }

    #[test]
    fn unit_entry_reads_that_entry() {
        let s = orthonormalize(&[DenseMatrix::unit(3, 2, 0, 0)]).unwrap();
        let a = sample_gaussian(3, 2, RngStream::new(0, 9));
        assert_eq!(apply_sketch(&s, &a).unwrap().values, vec![a.get(0, 0)]);
    }

    #[test]
    fn sketch_is_linear() {
        let s = make_random_sketch(7, 3, 3, RngStream::new(2, 0)).unwrap();
        let a = sample_gaussian(3, 3, RngStream::new(2, 1));
        let b = sample_gaussian(3, 3, RngStream::new(2, 2));
        let ya = apply_sketch(&s, &a).unwrap().values;
        let yb = apply_sketch(&s, &b).unwrap().values;
        let yab = apply_sketch(&s, &a.add(&b).unwrap()).unwrap().values;
        for i in 0..7 {
            assert!((yab[i] - ya[i] - yb[i]).abs() < 1e-12);
        }
        assert!(apply_sketch(&s, &DenseMatrix::zeros(3, 4)).is_err());
    }

    #[test]
    fn batch_matches_single() {
        let s = make_random_sketch(5, 2, 3, RngStream::new(6, 0)).unwrap();
        let inputs: Vec<DenseMatrix> = (0..4).map(|t| sample_gaussian(2, 3, RngStream::new(6, t + 1))).collect();
        let flat: Vec<f64> = inputs.iter().flat_map(|a| a.as_slice().to_vec()).collect();
        let out = s.apply_batch(&flat, 4);
        for (t, a) in inputs.iter().enumerate() {
            let y = apply_sketch(&s, a).unwrap().values;
            for i in 0..5 {
                assert!((out[t * 5 + i] - y[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let fam = [DenseMatrix::unit(2, 2, 0, 1), DenseMatrix::unit(2, 2, 1, 0).scale(-1.0)];
        let s = orthonormalize(&fam).unwrap();
        assert_eq!(s.measurement(0), fam[0]);
        // sign convention flips the negative one
        assert_eq!(s.measurement(1), fam[1].scale(-1.0));
    }

    #[test]
    fn hand_gram_schmidt_example() {
        let e11 = DenseMatrix::unit(2, 2, 0, 0);
        let e22 = DenseMatrix::unit(2, 2, 1, 1);
        let s = orthonormalize(&[e11.clone(), e11.add(&e22).unwrap()]).unwrap();
        assert_eq!(s.measurement(0), e11);
        assert!(s.measurement(1).sub(&e22).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn duplicate_is_reported_at_second_occurrence() {
        let a = sample_gaussian(2, 3, RngStream::new(1, 0));
        let b = sample_gaussian(2, 3, RngStream::new(1, 1));
        let err = orthonormalize(&[a.clone(), b, a]).unwrap_err();
        assert!(matches!(err, Error::LinearDependence { index: 2, .. }), "{err:?}");
    }

    #[test]
    fn memory_guard_refuses_huge_sketch() {
        let err = make_random_sketch(50_000, 300, 300, RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::MemoryGuard { .. }));
        assert!(check_memory(50_000, 300, 300, Some(u128::MAX)).is_ok());
        assert!(make_random_sketch(10, 3, 3, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn bilinear_identity_selects_all_entries() {
        let emb = embed_bilinear(&DenseMatrix::identity(3), 2).unwrap();
        assert_eq!(emb.sketch.k(), 6);
        let a = sample_gaussian(3, 2, RngStream::new(4, 4));
        let y = apply_sketch(&emb.sketch, &a).unwrap().values;
        for (yv, av) in y.iter().zip(a.as_slice()) {
            assert!((yv - av).abs() < 1e-15);
        }
    }

    #[test]
    fn bilinear_single_row_reads_that_row() {
        let e = DenseMatrix::unit(1, 4, 0, 2);
        let emb = embed_bilinear(&e, 5).unwrap();
        assert_eq!(emb.sketch.k(), 5);
        let a = sample_gaussian(4, 5, RngStream::new(4, 5));
        let y = apply_sketch(&emb.sketch, &a).unwrap().values;
        assert_eq!(y, a.row(2).to_vec());
    }

    #[test]
    fn bilinear_raw_family_matches_product() {
        let s_bil = sample_gaussian(3, 8, RngStream::new(10, 0));
        let a = sample_gaussian(8, 4, RngStream::new(10, 1));
        let emb = embed_bilinear(&s_bil, 4).unwrap();
        let y = emb.raw.apply(&a).unwrap().values;
        let prod = s_bil.matmul(&a).unwrap();
        for (yv, pv) in y.iter().zip(prod.as_slice()) {
            assert!((yv - pv).abs() <= 1e-12 * (1.0 + pv.abs()));
        }
        assert!(emb.sketch.gram_residual() <= ORTHONORMAL_TOL);
        let dup = DenseMatrix::from_fn(2, 3, |_, c| c as f64 + 1.0);
        assert!(embed_bilinear(&dup, 2).is_err());
        assert!(embed_bilinear(&DenseMatrix::zeros(2, 3), 2).is_err());
    }

    #[test]
    fn dump_load_round_trip() {
        let s = make_random_sketch(6, 3, 4, RngStream::new(77, 0)).unwrap();
        let mut buf = Vec::new();
        s.dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 6 * 12 * 8);
        assert_eq!(&buf[..8], &6u64.to_le_bytes());
        assert_eq!(SketchOperator::load(buf.as_slice()).unwrap(), s);
        assert!(SketchOperator::load(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[24..32].copy_from_slice(&2.0f64.to_le_bytes());
        assert!(SketchOperator::load(bad.as_slice()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn constructors_yield_orthonormal_families(m in 1usize..6, n in 1usize..6, kf in 0.0f64..1.0, seed in any::<u64>()) {
            let k = 1 + ((m * n - 1) as f64 * kf) as usize;
            let s = make_random_sketch(k, m, n, RngStream::new(seed, 0)).unwrap();
            prop_assert!(s.gram_residual() <= ORTHONORMAL_TOL);
            for i in 0..k {
                let lead = s.row(i).iter().find(|v| v.abs() > 1e-12).unwrap();
                prop_assert!(*lead > 0.0);
            }
        }

        #[test]
        fn recombination_preserves_output_norm(k in 1usize..10, seed in any::<u64>()) {
            let s = make_random_sketch(k, 3, 4, RngStream::new(seed, 0)).unwrap();
            let q = random_orthogonal(k, RngStream::new(seed, 1));
            let s2 = s.recombined(&q).unwrap();
            let a = sample_gaussian(3, 4, RngStream::new(seed, 2));
            let n1 = apply_sketch(&s, &a).unwrap().norm_sq().sqrt();
            let n2 = apply_sketch(&s2, &a).unwrap().norm_sq().sqrt();
            prop_assert!((n1 - n2).abs() <= 1e-10 * n1.max(1.0));
        }
    }
}
