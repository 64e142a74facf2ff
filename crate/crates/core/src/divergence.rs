//! Closed forms and Monte Carlo checks behind the sketched-distribution bounds.
//!
//! * The bilinear Gaussian moment generating function
//!   `E e^{xᵀAy} = Π (1 − σᵢ²)^{−1/2} ≤ (1 − ‖A‖_F²)^{−1/2}`.
//! * The mean-shift vector `zᵢ = Σⱼ sⱼ (uʲ)ᵀ Lⁱ vʲ` of a sketched spiked draw,
//!   its squared norm `ξ` with `E ξ = k‖s‖₂²`, and the event `E = {‖s‖²ξ < 1/2}`.
//! * The conditioned estimate of `E e^{⟨z₁,z₂⟩} − 1` and the bounds
//!   `χ² ≤ k‖s‖⁴` and `d_TV ≤ √(k‖s‖⁴/(1−2c)) + 2c/(1−2c)`.
//!
//! Conditioning on `E` is realized by rejection: a draw of `z₁` outside the
//! event is discarded. Monte Carlo checks use 4-standard-error bands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_factors, SpikeFactors, SpikeParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, dot, DenseMatrix};
use crate::report::Record;
use crate::rng::RngStream;
use crate::sketch::{apply_sketch, SketchOperator};
use crate::stats::{mean_and_se, Proportion};

/// Largest Frobenius norm accepted by the Monte Carlo estimator; the variance
/// of `e^{xᵀAy}` blows up as `‖A‖_F → 1`.
pub const MC_FROBENIUS_CAP: f64 = 0.9;
pub const MIN_LEMMA_SAMPLES: usize = 1_000;
pub const MIN_CHI2_TRIALS: usize = 1_000;
/// Minimum acceptance rate of the conditioning event before the χ² estimate aborts.
pub const ACCEPTANCE_FLOOR: f64 = 1e-2;
/// Largest argument of `exp` that stays finite.
const EXP_LIMIT: f64 = 709.0;
const CHUNK: usize = 4096;
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearMgf {
    /// `Π (1 − σᵢ²)^{−1/2}`.
    pub exact: f64,
    /// `(1 − ‖A‖_F²)^{−1/2}`.
    pub bound: f64,
    pub frobenius: f64,
}

impl BilinearMgf {
    pub fn bound_holds(&self) -> bool {
        self.exact <= self.bound * (1.0 + 1e-12)
    }
}

/// Exact `E_{x,y} e^{xᵀAy}` for `‖A‖_F < 1`, with the Frobenius bound alongside.
pub fn lemma1_exact(a: &DenseMatrix) -> Result<BilinearMgf> {
    let frobenius = a.frobenius_norm();
    if frobenius >= 1.0 {
        return Err(Error::FrobeniusDomain { norm: frobenius, limit: 1.0 });
    }
    let spectrum = linalg::singular_values(a)?;
    let log_sum: f64 = spectrum.values().iter().map(|s| (-s * s).ln_1p()).sum();
    let out = BilinearMgf {
        exact: (-0.5 * log_sum).exp(),
        bound: 1.0 / (1.0 - frobenius * frobenius).sqrt(),
        frobenius,
    };
    debug_assert!(out.bound_holds(), "{out:?}");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// `|estimate − target| ≤ z · std_error`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.estimate - target).abs() <= z * self.std_error
    }
}

/// Sample mean of `e^{xᵀAy}` over independent `x ~ N(0, I_m)`, `y ~ N(0, I_n)`.
pub fn lemma1_monte_carlo(a: &DenseMatrix, samples: usize, rng: RngStream) -> Result<McEstimate> {
    let frobenius = a.frobenius_norm();
    if frobenius > MC_FROBENIUS_CAP * (1.0 + 1e-12) {
        return Err(Error::FrobeniusDomain { norm: frobenius, limit: MC_FROBENIUS_CAP });
    }
    if samples < MIN_LEMMA_SAMPLES {
        return Err(invalid(
            "samples",
            format!("{samples} is below the minimum of {MIN_LEMMA_SAMPLES}"),
        ));
    }
    let (m, n) = a.shape();
    let chunks = samples.div_ceil(CHUNK);
    let values = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut g = rng.split(c as u64).gaussians();
            let mut x = vec![0.0; m];
            let mut y = vec![0.0; n];
            let mut out = Vec::with_capacity(count);
            for i in 0..count {
                g.fill(&mut x);
                g.fill(&mut y);
                let exponent: f64 = (0..m).map(|r| x[r] * dot(a.row(r), &y)).sum();
                if exponent > EXP_LIMIT {
                    return Err(Error::ExpOverflow {
                        exponent,
                        sample: c * CHUNK + i,
                    });
                }
                out.push(exponent.exp());
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .concat();
    let (estimate, std_error) = mean_and_se(&values);
    Ok(McEstimate { estimate, std_error, samples })
}

/// Squared norm of the sketched mean shift for one draw of the spike factors.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSample {
    pub xi: f64,
    pub shift: Vec<f64>,
    /// Whether `‖s‖²·ξ < 1/2`.
    pub accepted: bool,
}

impl XiSample {
    fn from_shift(shift: Vec<f64>, spike: &SpikeParams) -> Self {
        let xi = dot(&shift, &shift);
        Self {
            xi,
            accepted: spike.norm_sq() * xi < 0.5,
            shift,
        }
    }
}

/// `zᵢ = Σⱼ sⱼ (uʲ)ᵀ Lⁱ vʲ` and `ξ = Σ zᵢ²`.
pub fn xi_statistic(s: &SketchOperator, spike: &SpikeParams, factors: &SpikeFactors) -> Result<XiSample> {
    let (m, n) = s.shape();
    if factors.u.cols() != m || factors.v.cols() != n || factors.rank() != spike.rank() || factors.v.rows() != spike.rank() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} factors in R^{m} and R^{n}", spike.rank()),
            found: format!(
                "{} in R^{} and {} in R^{}",
                factors.u.rows(),
                factors.u.cols(),
                factors.v.rows(),
                factors.v.cols()
            ),
        });
    }
    let shift = apply_sketch(s, &factors.low_rank(spike))?.values;
    Ok(XiSample::from_shift(shift, spike))
}

/// Shift vectors for trials `keys`, computed in batches. Returns a `t × k` buffer.
pub(crate) fn shift_batch(s: &SketchOperator, spike: &SpikeParams, keys: &[RngStream]) -> Vec<f64> {
    let (m, n) = s.shape();
    let len = m * n;
    keys.par_chunks(BATCH)
        .map(|chunk| {
            let mut buf = vec![0.0; chunk.len() * len];
            for (key, dst) in chunk.iter().zip(buf.chunks_exact_mut(len)) {
                sample_factors(m, n, spike.rank(), *key).accumulate_low_rank(spike, dst);
            }
            s.apply_batch(&buf, chunk.len())
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Empirical `E ξ` against `k‖s‖₂²`, and the failure rate of the event `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiMeanReport {
    pub k: usize,
    pub rank: usize,
    pub norm_sq: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `k‖s‖₂²`.
    pub expected: f64,
    /// Draws with `‖s‖²ξ ≥ 1/2`.
    pub event_failure: Proportion,
    /// Markov bound `2k‖s‖⁴` on the failure probability.
    pub markov_bound: f64,
}

impl XiMeanReport {
    pub fn mean_within(&self, z: f64) -> bool {
        (self.mean - self.expected).abs() <= z * self.std_error
    }

    /// Failure rate at most the Markov bound plus `z` binomial standard errors.
    pub fn markov_consistent(&self, z: f64) -> bool {
        let p = self.markov_bound.min(1.0);
        let se = (p * (1.0 - p) / self.event_failure.trials as f64).sqrt();
        self.event_failure.rate <= self.markov_bound + z * se
    }

    pub fn record(&self, z: f64) -> Record {
        Record::new()
            .with("k", self.k)
            .with("r", self.rank)
            .with("norm_sq", self.norm_sq)
            .with("mean_xi", self.mean)
            .with("std_error", self.std_error)
            .with("expected", self.expected)
            .with("event_failure_rate", self.event_failure.rate)
            .with("markov_bound", self.markov_bound)
            .with("pass", self.mean_within(z) && self.markov_consistent(z))
    }
}

pub fn xi_mean_check(s: &SketchOperator, spike: &SpikeParams, trials: usize, rng: RngStream) -> Result<XiMeanReport> {
    if trials < 2 {
        return Err(invalid("trials", "at least two trials are needed for a standard error"));
    }
    let (m, n) = s.shape();
    if spike.rank() > m.min(n) {
        return Err(invalid("r", format!("spike rank {} exceeds min({m}, {n})", spike.rank())));
    }
    let keys: Vec<RngStream> = (0..trials as u64).map(|t| rng.split(t)).collect();
    let shifts = shift_batch(s, spike, &keys);
    let xis: Vec<f64> = shifts.chunks_exact(s.k()).map(|z| dot(z, z)).collect();
    let (mean, std_error) = mean_and_se(&xis);
    let fails = xis.iter().filter(|&&x| spike.norm_sq() * x >= 0.5).count();
    Ok(XiMeanReport {
        k: s.k(),
        rank: spike.rank(),
        norm_sq: spike.norm_sq(),
        mean,
        std_error,
        expected: s.k() as f64 * spike.norm_sq(),
        event_failure: Proportion::new(fails as u64, trials as u64),
        markov_bound: 2.0 * s.k() as f64 * spike.norm4(),
    })
}

/// Conditioned estimate of `E_{z₁∼μ̃, z₂∼μ} e^{⟨z₁,z₂⟩} − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub acceptance: Proportion,
    /// `k‖s‖⁴`.
    pub bound: f64,
}

impl Chi2Estimate {
    /// Aggregates the accepted terms `e^{⟨z₁,z₂⟩}`; depends on the terms only as a multiset.
    pub fn from_terms(terms: &[f64], trials: usize, bound: f64) -> Self {
        let mut sorted = terms.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let (mean, std_error) = mean_and_se(&sorted);
        Self {
            estimate: mean - 1.0,
            std_error,
            acceptance: Proportion::new(terms.len() as u64, trials as u64),
            bound,
        }
    }

    pub fn below_bound(&self, z: f64) -> bool {
        self.estimate <= self.bound + z * self.std_error
    }

    pub fn record(&self, k: usize, spike: &SpikeParams, z: f64) -> Record {
        Record::new()
            .with("k", k)
            .with("r", spike.rank())
            .with("norm_sq", spike.norm_sq())
            .with("estimate", self.estimate)
            .with("std_error", self.std_error)
            .with("bound", self.bound)
            .with("acceptance_rate", self.acceptance.rate)
            .with("accepted", self.acceptance.successes)
            .with("trials", self.acceptance.trials)
            .with("pass", self.below_bound(z))
    }
}

/// Terms `e^{⟨z₁,z₂⟩}` for the trials whose `z₁` lies in the event `E`.
pub fn chi2_terms(s: &SketchOperator, spike: &SpikeParams, trials: usize, rng: RngStream) -> Result<Vec<f64>> {
    let k = s.k();
    let first: Vec<RngStream> = (0..trials as u64).map(|t| rng.split2(0, t)).collect();
    let second: Vec<RngStream> = (0..trials as u64).map(|t| rng.split2(1, t)).collect();
    let z1 = shift_batch(s, spike, &first);
    let z2 = shift_batch(s, spike, &second);
    let norm_sq = spike.norm_sq();
    let mut terms = Vec::with_capacity(trials);
    for (t, (a, b)) in z1.chunks_exact(k).zip(z2.chunks_exact(k)).enumerate() {
        if norm_sq * dot(a, a) >= 0.5 {
            continue;
        }
        let exponent = dot(a, b);
        if exponent > EXP_LIMIT {
            return Err(Error::ExpOverflow { exponent, sample: t });
        }
        terms.push(exponent.exp());
    }
    Ok(terms)
}

pub fn chi2_monte_carlo(s: &SketchOperator, spike: &SpikeParams, trials: usize, rng: RngStream) -> Result<Chi2Estimate> {
    if trials < MIN_CHI2_TRIALS {
        return Err(invalid("trials", format!("{trials} is below the minimum of {MIN_CHI2_TRIALS}")));
    }
    let terms = chi2_terms(s, spike, trials, rng)?;
    let rate = terms.len() as f64 / trials as f64;
    if rate < ACCEPTANCE_FLOOR {
        return Err(Error::AcceptanceFloor { rate, floor: ACCEPTANCE_FLOOR });
    }
    Ok(Chi2Estimate::from_terms(&terms, trials, s.k() as f64 * spike.norm4()))
}

/// Closed-form χ² and total variation bounds for given `k`, `s`, `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: usize,
    pub spike: SpikeParams,
    pub c: f64,
    /// `k‖s‖⁴`.
    pub chi2_bound: f64,
    /// `√(k‖s‖⁴/(1−2c)) + 2c/(1−2c)`.
    pub tv_bound: f64,
    /// Markov guarantee `Pr(E) ≥ 1 − 2c`.
    pub acceptance_rate: f64,
}

impl BoundReport {
    pub fn record(&self) -> Record {
        Record::new()
            .with("k", self.k)
            .with("r", self.spike.rank())
            .with("norm_sq", self.spike.norm_sq())
            .with("k_norm4", self.chi2_bound)
            .with("c", self.c)
            .with("chi2_bound", self.chi2_bound)
            .with("tv_bound", self.tv_bound)
            .with("acceptance_rate", self.acceptance_rate)
    }
}

pub fn tv_bound(k: usize, spike: &SpikeParams, c: f64) -> Result<BoundReport> {
    if !(c > 0.0 && c < 0.5) {
        return Err(invalid("c", format!("must lie in (0, 1/2), got {c}")));
    }
    let chi2_bound = k as f64 * spike.norm4();
    let denom = 1.0 - 2.0 * c;
    Ok(BoundReport {
        k,
        spike: spike.clone(),
        c,
        chi2_bound,
        tv_bound: (chi2_bound / denom).sqrt() + 2.0 * c / denom,
        acceptance_rate: denom,
    })
}

/// Total variation bound from a measured χ² term and acceptance rate:
/// `√((E e^{⟨z₁,z₂⟩} − 1)/Pr(E)) + 1/Pr(E) − 1`.
pub fn tv_bound_from_measured(chi2: f64, acceptance: f64) -> f64 {
    (chi2.max(0.0) / acceptance).sqrt() + 1.0 / acceptance - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{random_orthogonal, sample_gaussian};
    use crate::sketch::{make_random_sketch, orthonormalize};
    use proptest::prelude::*;

    #[test]
    fn exact_examples() {
        assert_eq!(lemma1_exact(&DenseMatrix::zeros(3, 2)).unwrap().exact, 1.0);
        let one = lemma1_exact(&DenseMatrix::new(1, 1, vec![0.6]).unwrap()).unwrap();
        assert!((one.exact - 1.25).abs() < 1e-14);
        assert!((one.bound - 1.25).abs() < 1e-14);
        let half = lemma1_exact(&DenseMatrix::from_diag(2, 2, &[0.5, 0.5])).unwrap();
        assert!((half.exact - 4.0 / 3.0).abs() < 1e-14);
        assert!((half.bound - 1.0 / 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            lemma1_exact(&DenseMatrix::new(1, 1, vec![1.0]).unwrap()),
            Err(Error::FrobeniusDomain { .. })
        ));
    }

    #[test]
    fn monte_carlo_zero_matrix_is_exact() {
        let est = lemma1_monte_carlo(&DenseMatrix::zeros(2, 3), 2000, RngStream::new(1, 0)).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_scalar_matches_closed_form() {
        let a = DenseMatrix::new(1, 1, vec![0.6]).unwrap();
        let est = lemma1_monte_carlo(&a, 100_000, RngStream::new(2, 0)).unwrap();
        assert!(est.within(1.25, 4.0), "{est:?}");
    }

    #[test]
    fn monte_carlo_random_contraction() {
        let g = sample_gaussian(4, 4, RngStream::new(3, 0));
        let a = g.scale(0.7 / g.frobenius_norm());
        let exact = lemma1_exact(&a).unwrap().exact;
        let est = lemma1_monte_carlo(&a, 100_000, RngStream::new(3, 1)).unwrap();
        assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn monte_carlo_guards() {
        let big = DenseMatrix::new(1, 1, vec![0.95]).unwrap();
        assert!(matches!(
            lemma1_monte_carlo(&big, 2000, RngStream::new(0, 0)),
            Err(Error::FrobeniusDomain { .. })
        ));
        let ok = DenseMatrix::new(1, 1, vec![0.5]).unwrap();
        assert!(lemma1_monte_carlo(&ok, 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn xi_hand_example() {
        // u, v unit vectors, L¹ = u vᵀ: z₁ = t·(uᵀL¹v) = t, ξ = t².
        let u = [0.6, 0.8];
        let v = [0.0, 1.0, 0.0];
        let l = DenseMatrix::from_fn(2, 3, |a, b| u[a] * v[b]);
        let s = orthonormalize(&[l]).unwrap();
        let t = 0.3;
        let spike = SpikeParams::new(vec![t]).unwrap();
        let factors = SpikeFactors {
            u: DenseMatrix::new(1, 2, u.to_vec()).unwrap(),
            v: DenseMatrix::new(1, 3, v.to_vec()).unwrap(),
        };
        let x = xi_statistic(&s, &spike, &factors).unwrap();
        assert!((x.xi - t * t).abs() < 1e-15);
        assert!(x.accepted);
        assert!((dot(&x.shift, &x.shift) - x.xi).abs() <= 1e-10 * x.xi);
    }

    #[test]
    fn xi_scales_quadratically() {
        let s = make_random_sketch(5, 4, 4, RngStream::new(1, 1)).unwrap();
        let spike = SpikeParams::new(vec![0.2, 0.1]).unwrap();
        let factors = sample_factors(4, 4, 2, RngStream::new(1, 2));
        let base = xi_statistic(&s, &spike, &factors).unwrap().xi;
        for lambda in [0.5, 2.0, 3.0] {
            let scaled = xi_statistic(&s, &spike.scaled(lambda).unwrap(), &factors).unwrap().xi;
            assert!((scaled - lambda * lambda * base).abs() <= 1e-12 * scaled);
        }
        let wrong = sample_factors(3, 4, 2, RngStream::new(1, 3));
        assert!(xi_statistic(&s, &spike, &wrong).is_err());
    }

    #[test]
    fn xi_mean_is_k_norm_sq() {
        let s = make_random_sketch(16, 8, 8, RngStream::new(4, 0)).unwrap();
        let spike = SpikeParams::uniform(2, 0.05).unwrap();
        let rep = xi_mean_check(&s, &spike, 10_000, RngStream::new(4, 1)).unwrap();
        assert!((rep.expected - 0.8).abs() < 1e-12);
        assert!(rep.mean_within(4.0), "{rep:?}");
        assert!(rep.markov_consistent(4.0));
    }

    #[test]
    fn xi_batch_matches_single_path() {
        let s = make_random_sketch(6, 3, 5, RngStream::new(5, 0)).unwrap();
        let spike = SpikeParams::new(vec![0.4, 0.3]).unwrap();
        let keys: Vec<RngStream> = (0..3).map(|t| RngStream::new(5, 1).split(t)).collect();
        let batch = shift_batch(&s, &spike, &keys);
        for (key, z) in keys.iter().zip(batch.chunks_exact(6)) {
            let single = xi_statistic(&s, &spike, &sample_factors(3, 5, 2, *key)).unwrap();
            for (a, b) in single.shift.iter().zip(z) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chi2_vanishes_for_tiny_spike() {
        let s = make_random_sketch(10, 6, 6, RngStream::new(6, 0)).unwrap();
        let spike = SpikeParams::new(vec![1e-4]).unwrap();
        let est = chi2_monte_carlo(&s, &spike, 2000, RngStream::new(6, 1)).unwrap();
        assert!(est.estimate.abs() < 1e-9 + 4.0 * est.std_error);
        assert!(est.estimate.abs() < 1e-6);
        assert_eq!(est.acceptance.rate, 1.0);
    }

    #[test]
    fn chi2_respects_bound() {
        let s = make_random_sketch(100, 16, 16, RngStream::new(7, 0)).unwrap();
        let spike = SpikeParams::new(vec![0.1]).unwrap();
        let est = chi2_monte_carlo(&s, &spike, 20_000, RngStream::new(7, 1)).unwrap();
        assert!((est.bound - 0.01).abs() < 1e-15);
        assert!(est.below_bound(4.0), "{est:?}");
    }

    #[test]
    fn chi2_guards() {
        let s = make_random_sketch(4, 4, 4, RngStream::new(8, 0)).unwrap();
        let spike = SpikeParams::new(vec![0.1]).unwrap();
        assert!(chi2_monte_carlo(&s, &spike, 10, RngStream::new(8, 1)).is_err());
        let huge = SpikeParams::new(vec![3.0]).unwrap();
        assert!(matches!(
            chi2_monte_carlo(&s, &huge, 1000, RngStream::new(8, 1)),
            Err(Error::AcceptanceFloor { .. })
        ));
    }

    #[test]
    fn chi2_aggregate_ignores_order() {
        let s = make_random_sketch(20, 6, 6, RngStream::new(9, 0)).unwrap();
        let spike = SpikeParams::new(vec![0.3]).unwrap();
        let mut terms = chi2_terms(&s, &spike, 3000, RngStream::new(9, 1)).unwrap();
        let a = Chi2Estimate::from_terms(&terms, 3000, 0.0);
        terms.reverse();
        terms.rotate_left(17);
        let b = Chi2Estimate::from_terms(&terms, 3000, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn tv_bound_examples() {
        let spike = SpikeParams::new(vec![0.1]).unwrap();
        let zero = tv_bound(0, &spike, 0.05).unwrap();
        assert_eq!(zero.chi2_bound, 0.0);
        assert!((zero.tv_bound - 0.1 / 0.9).abs() < 1e-15);

        // k‖s‖⁴ = c
        let c = 0.02;
        let k = 200;
        let s = SpikeParams::new(vec![(c / k as f64).powf(0.25)]).unwrap();
        let rep = tv_bound(k, &s, c).unwrap();
        let want = (c / (1.0 - 2.0 * c)).sqrt() + 2.0 * c / (1.0 - 2.0 * c);
        assert!((rep.tv_bound - want).abs() < 1e-12);

        let s = SpikeParams::new(vec![0.001f64.powf(0.25)]).unwrap();
        let rep = tv_bound(1, &s, 0.001).unwrap();
        assert!((rep.tv_bound - 0.0337).abs() < 5e-5, "{}", rep.tv_bound);
        assert!(rep.tv_bound <= 0.1);

        assert!(tv_bound(1, &s, 0.5).is_err());
        assert!(tv_bound(1, &s, 0.0).is_err());
    }

    fn contraction() -> impl Strategy<Value = DenseMatrix> {
        (1usize..6, 1usize..6, 0.0f64..0.999, any::<u64>()).prop_map(|(m, n, f, seed)| {
            let g = sample_gaussian(m, n, RngStream::new(seed, 0));
            g.scale(f / g.frobenius_norm())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_never_exceeds_frobenius_bound(a in contraction()) {
            let r = lemma1_exact(&a).unwrap();
            prop_assert!(r.exact >= 1.0);
            prop_assert!(r.bound_holds());
        }

        #[test]
        fn exact_is_rotation_invariant(a in contraction(), seed in any::<u64>()) {
            let q1 = random_orthogonal(a.rows(), RngStream::new(seed, 1));
            let q2 = random_orthogonal(a.cols(), RngStream::new(seed, 2));
            let rot = q1.matmul(&a).unwrap().matmul(&q2).unwrap();
            let e0 = lemma1_exact(&a).unwrap().exact;
            let e1 = lemma1_exact(&rot).unwrap().exact;
            prop_assert!((e0 - e1).abs() <= 1e-10 * e0);
        }
    }
}
