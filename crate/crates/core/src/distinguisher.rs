//! Detection experiments between the sketched null and spiked ensembles.
//!
//! For each sketching dimension `k` a sketch is drawn once, then trials are
//! sampled from both sides and fed to a concrete test. The difference of the
//! two acceptance rates is the test's advantage, which lower-bounds the total
//! variation distance between the sketched laws. No implementable test can
//! certify that distance from above, so the sub-critical evidence here is
//! one-sided.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{preset_instance, sample_factors, InstanceKind, SpikeParams};
use crate::error::{invalid, Result};
use crate::linalg::{self, dot, DenseMatrix};
use crate::report::Record;
use crate::rng::RngStream;
use crate::sketch::{check_memory, make_random_sketch_with_limit, SketchOperator, MAX_DENSE_ENTRIES};
use crate::stats::{ks_statistic_normal, mean_and_se, median, newcombe_difference, Proportion, KS_CRIT_1PCT};

pub const MIN_TRIALS_PER_K: usize = 50;
const BATCH: usize = 32;

/// Attached to curve output: a concrete test's advantage is only a lower bound on TV.
pub const ONE_SIDED_NOTE: &str =
    "advantage of a concrete test lower-bounds total variation; no upper certificate is computed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestStatistic {
    /// `‖y‖² > k + k‖s‖²/2`.
    NormSquaredThreshold,
    /// `⟨y, z⟩ > ‖z‖²/2` with `z` the realized sketched shift.
    MeanShiftProjection,
}

impl TestStatistic {
    pub fn name(&self) -> &'static str {
        match self {
            TestStatistic::NormSquaredThreshold => "norm-squared-threshold",
            TestStatistic::MeanShiftProjection => "mean-shift-projection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "norm-squared-threshold" | "norm-squared" => Ok(TestStatistic::NormSquaredThreshold),
            "mean-shift-projection" | "projection" => Ok(TestStatistic::MeanShiftProjection),
            other => Err(invalid("statistic", format!("unknown test statistic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub spike: SpikeParams,
    /// Preset the dimensions and spike came from, if any.
    pub instance: Option<InstanceKind>,
    pub k_grid: Vec<usize>,
    pub trials_per_k: usize,
    pub statistic: TestStatistic,
    pub seed: u64,
    /// Draw a new sketch for every trial instead of once per `k`.
    pub resample_per_trial: bool,
    pub memory_limit: Option<u128>,
}

impl ExperimentConfig {
    pub fn new(m: usize, n: usize, spike: SpikeParams, k_grid: Vec<usize>, trials_per_k: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            spike,
            instance: None,
            k_grid,
            trials_per_k,
            statistic: TestStatistic::NormSquaredThreshold,
            seed,
            resample_per_trial: false,
            memory_limit: None,
        }
    }

    pub fn from_instance(kind: InstanceKind, k_grid: Vec<usize>, trials_per_k: usize, seed: u64) -> Result<Self> {
        let inst = preset_instance(&kind)?;
        let mut cfg = Self::new(inst.m, inst.n, inst.spike, k_grid, trials_per_k, seed);
        cfg.instance = Some(kind);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(invalid("dims", "m and n must be positive"));
        }
        if self.k_grid.is_empty() {
            return Err(invalid("k-grid", "must contain at least one value"));
        }
        let mn = self.m * self.n;
        for &k in &self.k_grid {
            if k == 0 || k > mn {
                return Err(invalid("k-grid", format!("k = {k} must lie in [1, m·n = {mn}]")));
            }
        }
        if self.trials_per_k < MIN_TRIALS_PER_K {
            return Err(invalid(
                "trials",
                format!("{} trials per k is below the minimum of {MIN_TRIALS_PER_K}", self.trials_per_k),
            ));
        }
        if self.spike.rank() > self.m.min(self.n) {
            return Err(invalid("r", format!("spike rank {} exceeds min(m, n)", self.spike.rank())));
        }
        Ok(())
    }

    fn limit(&self) -> Option<u128> {
        Some(self.memory_limit.unwrap_or(MAX_DENSE_ENTRIES))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantagePoint {
    pub k: usize,
    /// Rate of "spiked" verdicts on null inputs.
    pub null: Proportion,
    /// Rate of "spiked" verdicts on spiked inputs.
    pub spiked: Proportion,
    pub advantage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `‖y‖²` cutoff for the norm test; the projection test uses the relative cutoff 1/2.
    pub threshold: f64,
}

impl AdvantagePoint {
    fn new(k: usize, null_hits: usize, spiked_hits: usize, trials: usize, threshold: f64) -> Self {
        let null = Proportion::new(null_hits as u64, trials as u64);
        let spiked = Proportion::new(spiked_hits as u64, trials as u64);
        let (lo, hi) = newcombe_difference(&spiked, &null);
        // interval for |difference|
        let (ci_lo, ci_hi) = if lo >= 0.0 {
            (lo, hi)
        } else if hi <= 0.0 {
            (-hi, -lo)
        } else {
            (0.0, hi.max(-lo))
        };
        Self {
            k,
            advantage: (spiked.rate - null.rate).abs(),
            null,
            spiked,
            ci_lo,
            ci_hi,
            threshold,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageCurve {
    pub statistic: TestStatistic,
    pub seed: u64,
    pub points: Vec<AdvantagePoint>,
}

pub const CURVE_COLUMNS: [&str; 8] = [
    "k",
    "side-null-rate",
    "side-spiked-rate",
    "advantage",
    "ci-lo",
    "ci-hi",
    "statistic",
    "seed",
];

impl AdvantageCurve {
    pub fn records(&self) -> Vec<Record> {
        self.points
            .iter()
            .map(|p| {
                Record::new()
                    .with("k", p.k)
                    .with("side-null-rate", p.null.rate)
                    .with("side-spiked-rate", p.spiked.rate)
                    .with("advantage", p.advantage)
                    .with("ci-lo", p.ci_lo)
                    .with("ci-hi", p.ci_hi)
                    .with("statistic", self.statistic.name())
                    .with("seed", self.seed)
                    .with("threshold", p.threshold)
            })
            .collect()
    }

    /// No later point's interval lies entirely below an earlier point's interval.
    pub fn monotone_within_ci(&self) -> bool {
        monotone_within_ci(&self.points)
    }
}

pub fn monotone_within_ci(points: &[AdvantagePoint]) -> bool {
    let mut sorted: Vec<&AdvantagePoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.k);
    sorted
        .iter()
        .enumerate()
        .all(|(i, a)| sorted[i + 1..].iter().all(|b| b.ci_hi >= a.ci_lo))
}

/// Per-trial verdicts of both tests on one side of one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Hits {
    norm: usize,
    projection: usize,
}

fn sketch_key(master: RngStream, k: usize) -> RngStream {
    master.split2(0, k as u64)
}

fn trial_key(master: RngStream, side: u64, k: usize, t: usize) -> RngStream {
    master.split2(1 + side, k as u64).split(t as u64)
}

/// Fills `data` with one draw (background plus spike when `spiked`) and
/// `shift` with the spike alone. Factors come from the same key on both
/// sides so the projection test has a direction under the null too.
fn draw_trial(m: usize, n: usize, spike: &SpikeParams, key: RngStream, spiked: bool, data: &mut [f64], shift: &mut [f64]) {
    key.split(0).gaussians().fill(data);
    shift.fill(0.0);
    sample_factors(m, n, spike.rank(), key).accumulate_low_rank(spike, shift);
    if spiked {
        data.iter_mut().zip(shift.iter()).for_each(|(d, s)| *d += s);
    }
}

fn count_hits(y: &[f64], z: &[f64], k: usize, threshold: f64) -> Hits {
    let mut hits = Hits::default();
    for (yt, zt) in y.chunks_exact(k).zip(z.chunks_exact(k)) {
        if dot(yt, yt) > threshold {
            hits.norm += 1;
        }
        let zz = dot(zt, zt);
        if zz > 0.0 && dot(yt, zt) > 0.5 * zz {
            hits.projection += 1;
        }
    }
    hits
}

fn run_side(cfg: &ExperimentConfig, master: RngStream, sketch: Option<&SketchOperator>, k: usize, spiked: bool, threshold: f64) -> Result<Hits> {
    let (m, n) = (cfg.m, cfg.n);
    let len = m * n;
    let side = spiked as u64;
    let trials: Vec<usize> = (0..cfg.trials_per_k).collect();
    let parts = trials
        .par_chunks(BATCH)
        .map(|chunk| -> Result<Hits> {
            let mut data = vec![0.0; chunk.len() * len];
            let mut shift = vec![0.0; chunk.len() * len];
            for ((&t, d), s) in chunk.iter().zip(data.chunks_exact_mut(len)).zip(shift.chunks_exact_mut(len)) {
                draw_trial(m, n, &cfg.spike, trial_key(master, side, k, t), spiked, d, s);
            }
            let (y, z) = match sketch {
                Some(op) => (op.apply_batch(&data, chunk.len()), op.apply_batch(&shift, chunk.len())),
                None => {
                    let mut y = Vec::with_capacity(chunk.len() * k);
                    let mut z = Vec::with_capacity(chunk.len() * k);
                    for ((&t, d), s) in chunk.iter().zip(data.chunks_exact(len)).zip(shift.chunks_exact(len)) {
                        let op = make_random_sketch_with_limit(k, m, n, sketch_key(master, k).split(t as u64 + 1), cfg.limit())?;
                        y.extend(op.apply_batch(d, 1));
                        z.extend(op.apply_batch(s, 1));
                    }
                    (y, z)
                }
            };
            Ok(count_hits(&y, &z, k, threshold))
        })
        .collect::<Result<Vec<Hits>>>()?;
    Ok(parts.into_iter().fold(Hits::default(), |a, b| Hits {
        norm: a.norm + b.norm,
        projection: a.projection + b.projection,
    }))
}

/// Both test statistics evaluated on identical data, one curve each.
pub fn run_detection_both(cfg: &ExperimentConfig) -> Result<(AdvantageCurve, AdvantageCurve)> {
    cfg.validate()?;
    let master = RngStream::new(cfg.seed, 0);
    let mut norm_points = Vec::with_capacity(cfg.k_grid.len());
    let mut proj_points = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        check_memory(k, cfg.m, cfg.n, cfg.limit())?;
        let sketch = if cfg.resample_per_trial {
            None
        } else {
            Some(make_random_sketch_with_limit(k, cfg.m, cfg.n, sketch_key(master, k), cfg.limit())?)
        };
        let threshold = k as f64 * (1.0 + 0.5 * cfg.spike.norm_sq());
        let null = run_side(cfg, master, sketch.as_ref(), k, false, threshold)?;
        let spiked = run_side(cfg, master, sketch.as_ref(), k, true, threshold)?;
        norm_points.push(AdvantagePoint::new(k, null.norm, spiked.norm, cfg.trials_per_k, threshold));
        proj_points.push(AdvantagePoint::new(k, null.projection, spiked.projection, cfg.trials_per_k, 0.5));
    }
    let curve = |statistic, points| AdvantageCurve {
        statistic,
        seed: cfg.seed,
        points,
    };
    Ok((
        curve(TestStatistic::NormSquaredThreshold, norm_points),
        curve(TestStatistic::MeanShiftProjection, proj_points),
    ))
}

pub fn run_detection(cfg: &ExperimentConfig) -> Result<AdvantageCurve> {
    let (norm, proj) = run_detection_both(cfg)?;
    Ok(match cfg.statistic {
        TestStatistic::NormSquaredThreshold => norm,
        TestStatistic::MeanShiftProjection => proj,
    })
}

/// `‖S·A‖_op` for `S` a `k' × m` matrix with i.i.d. `N(0, 1/k')` entries.
pub fn ose_opnorm_estimate(a: &DenseMatrix, k_prime: usize, rng: RngStream) -> Result<f64> {
    if k_prime == 0 {
        return Err(invalid("k'", "must be positive"));
    }
    let scale = 1.0 / (k_prime as f64).sqrt();
    let mut entries = rng.gaussians().vec(k_prime * a.rows());
    entries.iter_mut().for_each(|x| *x *= scale);
    let s = DenseMatrix::new(k_prime, a.rows(), entries)?;
    linalg::operator_norm(&s.matmul(a)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SubCritical,
    SuperCritical,
    Transitional,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::SubCritical => "sub-critical",
            Regime::SuperCritical => "super-critical",
            Regime::Transitional => "transitional",
        }
    }
}

/// Regime cut points on `k‖s‖⁴` and the advantage each regime must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePolicy {
    pub sub_level: f64,
    pub super_level: f64,
    pub sub_ceiling: f64,
    pub super_floor: f64,
}

impl Default for RegimePolicy {
    fn default() -> Self {
        Self {
            sub_level: 0.01,
            super_level: 100.0,
            sub_ceiling: 0.2,
            super_floor: 0.6,
        }
    }
}

impl RegimePolicy {
    pub fn classify(&self, kappa: f64) -> Regime {
        // relative slack so that e.g. 1 · 0.1² still counts as 0.01
        let slack = 1e-9;
        if kappa <= self.sub_level * (1.0 + slack) {
            Regime::SubCritical
        } else if kappa >= self.super_level * (1.0 - slack) {
            Regime::SuperCritical
        } else {
            Regime::Transitional
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub point: AdvantagePoint,
    /// `k‖s‖⁴`.
    pub kappa: f64,
    pub regime: Regime,
    /// `None` for transitional points, which carry no requirement.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub curve: AdvantageCurve,
    pub policy: RegimePolicy,
    pub points: Vec<SweepPoint>,
    /// Smallest `k` in the super-critical regime.
    pub super_k: f64,
    /// Whether `super_k ≤ m·n`.
    pub super_reachable: bool,
    /// Whether the grid covers two decades around `1/‖s‖⁴`.
    pub spans_two_decades: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOutcome {
    Pass,
    Fail,
    /// Every labelled point passed but the super-critical regime is out of reach.
    Unreachable,
}

impl SweepReport {
    pub fn outcome(&self) -> SweepOutcome {
        if self.points.iter().any(|p| p.pass == Some(false)) {
            SweepOutcome::Fail
        } else if !self.super_reachable {
            SweepOutcome::Unreachable
        } else {
            SweepOutcome::Pass
        }
    }

    pub fn records(&self) -> Vec<Record> {
        self.curve
            .records()
            .into_iter()
            .zip(&self.points)
            .map(|(r, p)| {
                r.with("kappa", p.kappa)
                    .with("regime", p.regime.name())
                    .with("pass", p.pass)
            })
            .collect()
    }
}

pub fn sweep_phase_transition(cfg: &ExperimentConfig, policy: RegimePolicy) -> Result<SweepReport> {
    let curve = run_detection(cfg)?;
    let norm4 = cfg.spike.norm4();
    let points = curve
        .points
        .iter()
        .map(|p| {
            let kappa = p.k as f64 * norm4;
            let regime = policy.classify(kappa);
            let pass = match regime {
                Regime::SubCritical => Some(p.advantage <= policy.sub_ceiling),
                Regime::SuperCritical => Some(p.advantage >= policy.super_floor),
                Regime::Transitional => None,
            };
            SweepPoint {
                point: p.clone(),
                kappa,
                regime,
                pass,
            }
        })
        .collect();
    let centre = 1.0 / norm4;
    let lo = *cfg.k_grid.iter().min().expect("validated grid") as f64;
    let hi = *cfg.k_grid.iter().max().expect("validated grid") as f64;
    let super_k = policy.super_level / norm4;
    Ok(SweepReport {
        curve,
        policy,
        points,
        super_k,
        super_reachable: super_k <= (cfg.m * cfg.n) as f64,
        spans_two_decades: hi / lo >= 100.0 && lo <= centre && centre <= hi,
    })
}

/// First `k` where the advantage crosses `level`, interpolated linearly in `log k`.
pub fn critical_k(points: &[AdvantagePoint], level: f64) -> Option<f64> {
    let mut sorted: Vec<&AdvantagePoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.k);
    if sorted.first()?.advantage >= level {
        return Some(sorted[0].k as f64);
    }
    sorted.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.advantage < level && b.advantage >= level {
            let t = (level - a.advantage) / (b.advantage - a.advantage);
            let (la, lb) = ((a.k as f64).ln(), (b.k as f64).ln());
            Some((la + t * (lb - la)).exp())
        } else {
            None
        }
    })
}

/// Per-coordinate checks of the sketched null output against `N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullLawReport {
    pub k: usize,
    pub trials: usize,
    pub gram_residual: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub ks: Vec<f64>,
    pub mean_pass: usize,
    pub variance_pass: usize,
    pub ks_pass: usize,
}

impl NullLawReport {
    pub fn moments_pass(&self) -> bool {
        self.mean_pass == self.k && self.variance_pass == self.k
    }

    pub fn ks_fraction(&self) -> f64 {
        self.ks_pass as f64 / self.k as f64
    }

    pub fn record(&self) -> Record {
        let worst = |xs: &[f64], centre: f64| xs.iter().map(|x| (x - centre).abs()).fold(0.0, f64::max);
        Record::new()
            .with("k", self.k)
            .with("trials", self.trials)
            .with("gram_residual", self.gram_residual)
            .with("max_abs_mean", worst(&self.means, 0.0))
            .with("max_abs_variance_dev", worst(&self.variances, 1.0))
            .with("max_ks", self.ks.iter().copied().fold(0.0, f64::max))
            .with("mean_pass", self.mean_pass)
            .with("variance_pass", self.variance_pass)
            .with("ks_pass", self.ks_pass)
    }
}

/// Sketches `trials` null draws and tests each output coordinate: mean and
/// variance within `z` standard errors of 0 and 1, KS below the 1% critical value.
pub fn null_sketch_law(s: &SketchOperator, trials: usize, z: f64, rng: RngStream) -> Result<NullLawReport> {
    if trials < 2 {
        return Err(invalid("trials", "at least two trials are needed"));
    }
    let (m, n) = s.shape();
    let len = m * n;
    let k = s.k();
    let idx: Vec<usize> = (0..trials).collect();
    let y: Vec<f64> = idx
        .par_chunks(BATCH * 4)
        .map(|chunk| {
            let mut data = vec![0.0; chunk.len() * len];
            for (&t, d) in chunk.iter().zip(data.chunks_exact_mut(len)) {
                rng.split(t as u64).gaussians().fill(d);
            }
            s.apply_batch(&data, chunk.len())
        })
        .collect::<Vec<_>>()
        .concat();
    let crit = KS_CRIT_1PCT / (trials as f64).sqrt();
    let var_se = (2.0 / (trials as f64 - 1.0)).sqrt();
    let mut report = NullLawReport {
        k,
        trials,
        gram_residual: s.gram_residual(),
        means: Vec::with_capacity(k),
        variances: Vec::with_capacity(k),
        ks: Vec::with_capacity(k),
        mean_pass: 0,
        variance_pass: 0,
        ks_pass: 0,
    };
    for i in 0..k {
        let col: Vec<f64> = y.iter().skip(i).step_by(k).copied().collect();
        let (mean, se) = mean_and_se(&col);
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let d = ks_statistic_normal(&col);
        report.mean_pass += usize::from(mean.abs() <= z * se);
        report.variance_pass += usize::from((var - 1.0).abs() <= z * var_se);
        report.ks_pass += usize::from(d < crit);
        report.means.push(mean);
        report.variances.push(var);
        report.ks.push(d);
    }
    Ok(report)
}

/// Median of `|‖S·A‖_op / ‖A‖_op − 1|` over `trials` draws.
pub fn ose_median_error(a: &DenseMatrix, k_prime: usize, trials: usize, rng: RngStream) -> Result<f64> {
    let exact = linalg::operator_norm(a)?;
    let errs = (0..trials as u64)
        .map(|t| ose_opnorm_estimate(a, k_prime, rng.split(t)).map(|e| (e / exact - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&errs))
}
