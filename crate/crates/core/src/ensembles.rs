//! Gaussian and spiked Gaussian ensembles, and the preset hard instances.
//!
//! The null ensemble `D₁` is `G(m, n)`, i.i.d. standard normal entries. The
//! spiked ensemble `D₂` adds a planted low-rank term `Σ sⱼ uʲ (vʲ)ᵀ` with
//! `uʲ ~ N(0, I_m)` and `vʲ ~ N(0, I_n)`. A spiked draw keyed by `rng` takes
//! its background from `rng.split(0)`, the left factors from `rng.split(1)`
//! and the right factors from `rng.split(2)`, so the background of a spiked
//! sample is exactly `sample_gaussian(m, n, rng.split(0))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, DenseMatrix, SingularSpectrum, DEFAULT_RANK_TOL};
use crate::report::Record;
use crate::rng::RngStream;
use crate::stats::{median, Proportion};

/// Spike magnitudes `s ∈ ℝʳ`, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeParams {
    s: Vec<f64>,
}

impl SpikeParams {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(invalid("spike", "spike rank must be at least 1"));
        }
        if let Some(bad) = s.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid("spike", format!("magnitudes must be positive and finite, got {bad}")));
        }
        Ok(Self { s })
    }

    /// `r` equal magnitudes with `‖s‖₂² = norm_sq`.
    pub fn uniform(r: usize, norm_sq: f64) -> Result<Self> {
        if r == 0 {
            return Err(invalid("r", "spike rank must be at least 1"));
        }
        Self::new(vec![(norm_sq / r as f64).sqrt(); r])
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.s
    }

    pub fn norm_sq(&self) -> f64 {
        self.s.iter().map(|v| v * v).sum()
    }

    pub fn norm4(&self) -> f64 {
        self.norm_sq().powi(2)
    }

    /// Same direction, magnitudes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.s.iter().map(|v| v * factor).collect())
    }
}

/// Latent factors of a spiked draw: row `j` of `u` is `uʲ`, row `j` of `v` is `vʲ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeFactors {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl SpikeFactors {
    pub fn rank(&self) -> usize {
        self.u.rows()
    }

    /// `Σⱼ sⱼ uʲ (vʲ)ᵀ` as an `m × n` matrix.
    pub fn low_rank(&self, spike: &SpikeParams) -> DenseMatrix {
        let (m, n) = (self.u.cols(), self.v.cols());
        let mut out = vec![0.0; m * n];
        self.accumulate_low_rank(spike, &mut out);
        DenseMatrix::from_raw(m, n, out)
    }

    /// Adds `Σⱼ sⱼ uʲ (vʲ)ᵀ` into a row-major `m × n` buffer.
    pub(crate) fn accumulate_low_rank(&self, spike: &SpikeParams, out: &mut [f64]) {
        let n = self.v.cols();
        for (j, &sj) in spike.magnitudes().iter().enumerate() {
            let u = self.u.row(j);
            let v = self.v.row(j);
            for (a, &ua) in u.iter().enumerate() {
                let coef = sj * ua;
                let row = &mut out[a * n..(a + 1) * n];
                for (o, &vb) in row.iter_mut().zip(v) {
                    *o += coef * vb;
                }
            }
        }
    }

    /// Unscaled sum `Σⱼ uʲ (vʲ)ᵀ`.
    pub fn unscaled_sum(&self) -> DenseMatrix {
        let ones = SpikeParams::new(vec![1.0; self.rank()]).expect("unit magnitudes");
        self.low_rank(&ones)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedSample {
    pub matrix: DenseMatrix,
    pub factors: SpikeFactors,
}

/// `m × n` matrix of independent standard normals.
pub fn sample_gaussian(m: usize, n: usize, rng: RngStream) -> DenseMatrix {
    assert!(m > 0 && n > 0, "dimensions must be positive");
    DenseMatrix::from_raw(m, n, rng.gaussians().vec(m * n))
}

pub fn background_stream(rng: RngStream) -> RngStream {
    rng.split(0)
}

/// Draws `r` left factors in `ℝᵐ` and `r` right factors in `ℝⁿ`.
pub fn sample_factors(m: usize, n: usize, r: usize, rng: RngStream) -> SpikeFactors {
    SpikeFactors {
        u: DenseMatrix::from_raw(r, m, rng.split(1).gaussians().vec(r * m)),
        v: DenseMatrix::from_raw(r, n, rng.split(2).gaussians().vec(r * n)),
    }
}

/// Draw from `D₂ = G(m, n) + Σ sⱼ uʲ (vʲ)ᵀ`, returning the latent factors too.
pub fn sample_spiked(m: usize, n: usize, spike: &SpikeParams, rng: RngStream) -> Result<SpikedSample> {
    if spike.rank() > m.min(n) {
        return Err(invalid(
            "r",
            format!("spike rank {} exceeds min({m}, {n})", spike.rank()),
        ));
    }
    let factors = sample_factors(m, n, spike.rank(), rng);
    let mut data = background_stream(rng).gaussians().vec(m * n);
    factors.accumulate_low_rank(spike, &mut data);
    Ok(SpikedSample {
        matrix: DenseMatrix::from_raw(m, n, data),
        factors,
    })
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign of `R`'s diagonal fixed).
pub fn random_orthogonal(n: usize, rng: RngStream) -> DenseMatrix {
    let g = sample_gaussian(n, n, rng).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    DenseMatrix::from_nalgebra(&q).expect("finite orthogonal factor")
}

/// Default constant in the operator-norm α-approximation instance.
pub const DEFAULT_ALPHA_CONSTANT: f64 = 5.0;

/// Smallest α for which the rectangular (1+ε) separation argument goes through.
pub fn default_rect_alpha() -> f64 {
    3.0 * 3.5f64.sqrt()
}

/// Largest Ky-Fan index (relative to √n) covered by the lower-bound argument.
pub const KYFAN_S_LIMIT: f64 = 0.0789;

/// Bound on `σ₁(G)/√n` for a square Gaussian matrix that holds with high probability.
pub const NULL_EDGE: f64 = 2.1;

/// Preset hard instances, one per norm-estimation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    /// α-approximation of the operator norm of an `n × n` matrix; `s₁ = C·α/√n`.
    AlphaOperator { n: usize, alpha: f64, constant: f64 },
    /// `(1+c)`-approximation of `‖X‖_p^p`, `p > 2`; `s₁ = 5/n^{1/2−1/p}`.
    SchattenP { n: usize, p: f64 },
    /// `(1+ε)`-approximation of the operator norm of a `(d/ε²) × d` matrix; `s₁ = α√(ε/d)`.
    EpsOperatorRect { d: usize, eps: f64, alpha: f64 },
    /// Ky-Fan `s`-norm; `r = s` spikes of magnitude `5/√n`.
    KyFan {
        n: usize,
        s: usize,
        allow_outside_regime: bool,
    },
}

impl InstanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceKind::AlphaOperator { .. } => "alpha-operator",
            InstanceKind::SchattenP { .. } => "schatten-p",
            InstanceKind::EpsOperatorRect { .. } => "eps-operator-rect",
            InstanceKind::KyFan { .. } => "kyfan",
        }
    }
}

/// Norm that separates the two ensembles for an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "kebab-case")]
pub enum GapStatistic {
    Operator,
    /// `‖X‖_p^p`.
    SchattenPower { p: f64 },
    KyFan { s: usize },
}

impl GapStatistic {
    pub fn evaluate(&self, spectrum: &SingularSpectrum) -> Result<f64> {
        match *self {
            GapStatistic::Operator => Ok(spectrum.largest()),
            GapStatistic::SchattenPower { p } => Ok(spectrum.schatten_power(p, DEFAULT_RANK_TOL)),
            GapStatistic::KyFan { s } => spectrum.kyfan(s),
        }
    }
}

/// Null ensemble satisfies `stat ≤ null_upper`, spiked satisfies `stat ≥ spiked_lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPredicate {
    pub statistic: GapStatistic,
    pub null_upper: f64,
    pub spiked_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetInstance {
    pub m: usize,
    pub n: usize,
    pub spike: SpikeParams,
    pub gap: GapPredicate,
}

/// Dimensions, spike parameters and norm-gap predicate of a preset instance.
pub fn preset_instance(kind: &InstanceKind) -> Result<PresetInstance> {
    match *kind {
        InstanceKind::AlphaOperator { n, alpha, constant } => {
            check_dim("n", n)?;
            if !(alpha > 1.0 && alpha.is_finite()) {
                return Err(invalid("alpha", format!("approximation factor must exceed 1, got {alpha}")));
            }
            if !(constant > 0.0 && constant.is_finite()) {
                return Err(invalid("constant", format!("must be positive, got {constant}")));
            }
            let rn = (n as f64).sqrt();
            Ok(PresetInstance {
                m: n,
                n,
                spike: SpikeParams::new(vec![constant * alpha / rn])?,
                gap: GapPredicate {
                    statistic: GapStatistic::Operator,
                    null_upper: NULL_EDGE * rn,
                    spiked_lower: alpha * NULL_EDGE * rn,
                },
            })
        }
        InstanceKind::SchattenP { n, p } => {
            check_dim("n", n)?;
            if !(p > 2.0 && p.is_finite()) {
                return Err(invalid("p", format!("Schatten exponent must exceed 2, got {p}")));
            }
            let nf = n as f64;
            let s1 = 5.0 / nf.powf(0.5 - 1.0 / p);
            Ok(PresetInstance {
                m: n,
                n,
                spike: SpikeParams::new(vec![s1])?,
                gap: GapPredicate {
                    statistic: GapStatistic::SchattenPower { p },
                    // every null singular value below the 2.1√n edge
                    null_upper: nf * (NULL_EDGE * nf.sqrt()).powf(p),
                    // planted singular value at least half its typical size s₁·n
                    spiked_lower: (0.5 * s1 * nf).powf(p),
                },
            })
        }
        InstanceKind::EpsOperatorRect { d, eps, alpha } => {
            check_dim("d", d)?;
            if !(eps > 0.0 && eps < 1.0 / 3.0) {
                return Err(invalid("eps", format!("must lie in (0, 1/3), got {eps}")));
            }
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(invalid("alpha", format!("must be positive, got {alpha}")));
            }
            let df = d as f64;
            let m = (df / (eps * eps)).round() as usize;
            let base = df.sqrt() / eps;
            Ok(PresetInstance {
                m,
                n: d,
                spike: SpikeParams::new(vec![alpha * (eps / df).sqrt()])?,
                gap: GapPredicate {
                    statistic: GapStatistic::Operator,
                    null_upper: (1.0 + 1.1 * eps) * base,
                    spiked_lower: (1.0 + 2.0 * eps) * base,
                },
            })
        }
        InstanceKind::KyFan {
            n,
            s,
            allow_outside_regime,
        } => {
            check_dim("n", n)?;
            if s == 0 || s > n {
                return Err(invalid("s", format!("Ky-Fan index must lie in 1..={n}, got {s}")));
            }
            let rn = (n as f64).sqrt();
            if !allow_outside_regime && s as f64 > KYFAN_S_LIMIT * rn {
                return Err(invalid(
                    "s",
                    format!(
                        "s = {s} exceeds {KYFAN_S_LIMIT}·√n = {:.4}; pass the override to explore",
                        KYFAN_S_LIMIT * rn
                    ),
                ));
            }
            let sf = s as f64;
            Ok(PresetInstance {
                m: n,
                n,
                spike: SpikeParams::new(vec![5.0 / rn; s])?,
                gap: GapPredicate {
                    statistic: GapStatistic::KyFan { s },
                    null_upper: NULL_EDGE * sf * rn,
                    spiked_lower: 2.4 * sf * rn,
                },
            })
        }
    }
}

fn check_dim(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(name, "dimension must be positive"));
    }
    Ok(())
}

/// Per-side outcome of a norm-gap experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub instance: PresetInstance,
    pub null: Proportion,
    pub spiked: Proportion,
    pub null_values: Vec<f64>,
    pub spiked_values: Vec<f64>,
    /// Median spiked statistic over median null statistic.
    pub median_ratio: f64,
    /// Ky-Fan only: how often `‖Σ uⁱ(vⁱ)ᵀ‖₁ ≥ 0.9·s·n`.
    pub trace_norm_claim: Option<Proportion>,
}

impl GapReport {
    pub fn null_max(&self) -> f64 {
        self.null_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spiked_min(&self) -> f64 {
        self.spiked_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn record(&self, kind: &InstanceKind) -> Record {
        let claim = self.trace_norm_claim;
        Record::new()
            .with("instance", kind.name())
            .with("m", self.instance.m)
            .with("n", self.instance.n)
            .with("null_upper", self.instance.gap.null_upper)
            .with("spiked_lower", self.instance.gap.spiked_lower)
            .with("trials", self.null.trials)
            .with("null_rate", self.null.rate)
            .with("null_ci_lo", self.null.lo)
            .with("null_ci_hi", self.null.hi)
            .with("spiked_rate", self.spiked.rate)
            .with("spiked_ci_lo", self.spiked.lo)
            .with("spiked_ci_hi", self.spiked.hi)
            .with("null_max", self.null_max())
            .with("spiked_min", self.spiked_min())
            .with("median_ratio", self.median_ratio)
            .with("trace_norm_rate", claim.map(|c| c.rate))
    }
}

/// Samples both ensembles of an instance and counts how often each side meets its threshold.
pub fn gap_check(kind: &InstanceKind, trials: usize, rng: RngStream) -> Result<GapReport> {
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    let inst = preset_instance(kind)?;
    let (m, n) = (inst.m, inst.n);
    let stat = inst.gap.statistic;

    let null_values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = sample_gaussian(m, n, rng.split2(0, t as u64));
            stat.evaluate(&linalg::singular_values(&g)?)
        })
        .collect::<Result<Vec<f64>>>()?;

    let want_claim = matches!(kind, InstanceKind::KyFan { .. });
    let spiked = (0..trials)
        .into_par_iter()
        .map(|t| {
            let x = sample_spiked(m, n, &inst.spike, rng.split2(1, t as u64))?;
            let value = stat.evaluate(&linalg::singular_values(&x.matrix)?)?;
            let claim = if want_claim {
                let s = inst.spike.rank() as f64;
                let trace = linalg::schatten_norm(&x.factors.unscaled_sum(), 1.0)?;
                Some(trace >= 0.9 * s * n as f64)
            } else {
                None
            };
            Ok((value, claim))
        })
        .collect::<Result<Vec<(f64, Option<bool>)>>>()?;
    let spiked_values: Vec<f64> = spiked.iter().map(|(v, _)| *v).collect();

    let count = |vals: &[f64], pred: &dyn Fn(f64) -> bool| vals.iter().filter(|&&v| pred(v)).count() as u64;
    let null_ok = count(&null_values, &|v| v <= inst.gap.null_upper);
    let spiked_ok = count(&spiked_values, &|v| v >= inst.gap.spiked_lower);
    let trace_norm_claim = want_claim.then(|| {
        let hits = spiked.iter().filter(|(_, c)| *c == Some(true)).count() as u64;
        Proportion::new(hits, trials as u64)
    });

    Ok(GapReport {
        median_ratio: median(&spiked_values) / median(&null_values),
        null: Proportion::new(null_ok, trials as u64),
        spiked: Proportion::new(spiked_ok, trials as u64),
        null_values,
        spiked_values,
        trace_norm_claim,
        instance: inst,
    })
}

/// Fraction of draws in which every left factor satisfies `0.99√n ≤ ‖uⁱ‖ ≤ 1.01√n`.
pub fn factor_norm_window_rate(n: usize, r: usize, trials: usize, rng: RngStream) -> Proportion {
    let rn = (n as f64).sqrt();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let f = sample_factors(n, n, r, rng.split(t as u64));
            (0..r).all(|j| {
                let norm = linalg::dot(f.u.row(j), f.u.row(j)).sqrt();
                (0.99 * rn..=1.01 * rn).contains(&norm)
            })
        })
        .count();
    Proportion::new(hits as u64, trials as u64)
}
