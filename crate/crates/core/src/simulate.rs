//! Seeded simulation harness: scenario generators, evaluation metrics, the
//! replication engine, sensitivity sweeps and the Monte Carlo validator for
//! the null laws.
//!
//! Every replication draws from its own ChaCha12 stream whose 256-bit seed is
//! expanded from `(seed, replication_index)` by SplitMix64. Within a
//! replication the training, validation and test sets are drawn in that
//! order, row by row: `p` standard normals, then the χ² mixing variable
//! (Student-t only), then the response noise.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laws::{
    limiting_cdf_w2, phase_transition_cdf, phase_transition_statistic, spearman_limit_cdf,
    spearman_statistic, LawThresholds, NormalizingConstants, Regime,
};
use crate::screening::{
    paired_set, screen, sis_screen, CorrelationMethod, ScreenConfig, ScreenMode,
    ScreenSets,
};
use crate::solver::{sigmoid, Family, FitModel};
use crate::stats::{ks_distance, midranks, r_squared_from_correlations, unit_columns, unit_vector, DataMatrix};
use crate::tuning::{tune, TuningPlan};

pub const SCHEMA_VERSION: u32 = 1;
/// Identity of the random number generator behind every report.
pub const GENERATOR: &str = "rand_chacha::ChaCha12Rng (rand_chacha 0.9), seed = SplitMix64(seed, replication)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Covariance {
    Identity,
    /// Unit variances, correlation `rho` within each half-open index range.
    Block { rho: f64, groups: Vec<(usize, usize)> },
    /// `σ_ij = rho^{|i-j|}`.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovariateLaw {
    Gaussian,
    StudentT { df: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseLaw {
    Linear,
    /// `Bernoulli(sigmoid(xᵀβ + σ))`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub example_id: u8,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub p: usize,
    pub sigma: f64,
    pub beta0: Vec<f64>,
    pub covariance: Covariance,
    pub covariate_law: CovariateLaw,
    pub response_law: ResponseLaw,
    pub replications: usize,
    pub seed: u64,
}

fn leading(p: usize, values: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; p];
    for (k, v) in values.iter().enumerate().take(p) {
        b[k] = *v;
    }
    b
}

impl SimScenario {
    /// The simulated examples at their published `(p, σ)`, 20 replications.
    pub fn example(id: u8) -> Result<Self> {
        let block2 = Covariance::Block {
            rho: 0.8,
            groups: vec![(0, 5), (5, 10)],
        };
        let ten_twos = [2.0; 10];
        let (p, sigma, beta, cov, law, resp) = match id {
            1 => (1000, 2.0, &ten_twos[..], block2, CovariateLaw::Gaussian, ResponseLaw::Linear),
            2 => (1000, 2.0, &[3.0, -1.5, 2.0][..], Covariance::Ar1 { rho: 0.5 }, CovariateLaw::Gaussian, ResponseLaw::Linear),
            3 => (
                5000,
                6.0,
                &ten_twos[..],
                Covariance::Block { rho: 0.8, groups: vec![(0, 5)] },
                CovariateLaw::Gaussian,
                ResponseLaw::Linear,
            ),
            4 => (5000, 6.0, &ten_twos[..], block2, CovariateLaw::Gaussian, ResponseLaw::Logistic),
            5 => (5000, 6.0, &ten_twos[..], block2, CovariateLaw::StudentT { df: 5.0 }, ResponseLaw::Linear),
            _ => return Err(domain(format!("unknown example {id}; expected 1..=5"))),
        };
        Ok(Self {
            example_id: id,
            n_train: 100,
            n_val: 100,
            n_test: 400,
            p,
            sigma,
            beta0: leading(p, beta),
            covariance: cov,
            covariate_law: law,
            response_law: resp,
            replications: 20,
            seed: 1,
        })
    }

    /// Changes `p`, padding or truncating `beta0` with zeros.
    pub fn with_p(mut self, p: usize) -> Self {
        self.beta0.resize(p, 0.0);
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta0.len() != self.p {
            return Err(Error::Dimension(format!("beta0 has length {} but p = {}", self.beta0.len(), self.p)));
        }
        if self.n_train < 4 || self.n_val == 0 || self.n_test == 0 {
            return Err(domain("need n_train >= 4 and nonempty validation/test sets"));
        }
        if !(self.sigma >= 0.0) {
            return Err(domain("sigma must be nonnegative"));
        }
        if let CovariateLaw::StudentT { df } = self.covariate_law {
            if !(df > 0.0) {
                return Err(domain("student-t degrees of freedom must be positive"));
            }
        }
        CholeskyFactor::new(&self.covariance, self.p).map(|_| ())
    }

    pub fn family(&self) -> Family {
        match self.response_law {
            ResponseLaw::Linear => Family::Gaussian,
            ResponseLaw::Logistic => Family::Binomial,
        }
    }
}

impl Covariance {
    /// Dense `p × p` matrix.
    pub fn matrix(&self, p: usize) -> Array2<f64> {
        match self {
            Covariance::Identity => Array2::eye(p),
            Covariance::Block { rho, groups } => {
                let mut m = Array2::eye(p);
                for &(a, b) in groups {
                    for i in a..b.min(p) {
                        for j in a..b.min(p) {
                            if i != j {
                                m[[i, j]] = *rho;
                            }
                        }
                    }
                }
                m
            }
            Covariance::Ar1 { rho } => Array2::from_shape_fn((p, p), |(i, j)| rho.powi((i as i32 - j as i32).abs())),
        }
    }

    fn name(&self) -> String {
        match self {
            Covariance::Identity => "identity".into(),
            Covariance::Block { rho, groups } => format!("block(rho={rho}, groups={groups:?})"),
            Covariance::Ar1 { rho } => format!("ar1(rho={rho})"),
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix; `None` unless
/// positive definite.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / djj;
        }
    }
    Some(l)
}

/// Structured Cholesky factor `L` with `Σ = L Lᵀ`, applied row by row.
#[derive(Debug, Clone)]
pub enum CholeskyFactor {
    Identity,
    Blocks(Vec<(usize, Array2<f64>)>),
    /// Closed form: `x_0 = g_0`, `x_j = ρ x_{j-1} + sqrt(1-ρ²) g_j`.
    Ar1 { rho: f64 },
}

impl CholeskyFactor {
    pub fn new(cov: &Covariance, p: usize) -> Result<Self> {
        let fail = || Error::NotPositiveDefinite { construction: cov.name() };
        match cov {
            Covariance::Identity => Ok(Self::Identity),
            Covariance::Ar1 { rho } => {
                if rho.abs() < 1.0 {
                    Ok(Self::Ar1 { rho: *rho })
                } else {
                    Err(fail())
                }
            }
            Covariance::Block { rho, groups } => {
                let mut sorted = groups.clone();
                sorted.sort_unstable();
                for w in sorted.windows(2) {
                    if w[1].0 < w[0].1 {
                        return Err(domain("covariance blocks overlap"));
                    }
                }
                let mut out = Vec::new();
                for &(a, b) in &sorted {
                    let b = b.min(p);
                    if b <= a {
                        continue;
                    }
                    let k = b - a;
                    let block = Array2::from_shape_fn((k, k), |(i, j)| if i == j { 1.0 } else { *rho });
                    out.push((a, cholesky(&block).ok_or_else(fail)?));
                }
                Ok(Self::Blocks(out))
            }
        }
    }

    /// Overwrites `g` (i.i.d. standard normals) with `L g`.
    pub fn apply(&self, mut g: ArrayViewMut1<'_, f64>) {
        match self {
            Self::Identity => {}
            Self::Ar1 { rho } => {
                let s = (1.0 - rho * rho).sqrt();
                for j in 1..g.len() {
                    g[j] = rho * g[j - 1] + s * g[j];
                }
            }
            Self::Blocks(blocks) => {
                for (start, l) in blocks {
                    let k = l.nrows();
                    let seg = g.slice(s![*start..*start + k]).to_owned();
                    g.slice_mut(s![*start..*start + k]).assign(&l.dot(&seg));
                }
            }
        }
    }

    /// Dense factor, for checking against [`cholesky`].
    pub fn dense(&self, p: usize) -> Array2<f64> {
        let mut out = Array2::zeros((p, p));
        for j in 0..p {
            let mut e = Array1::zeros(p);
            e[j] = 1.0;
            self.apply(e.view_mut());
            out.column_mut(j).assign(&e);
        }
        out
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for replication `index` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut state = seed ^ splitmix64(&mut index.wrapping_mul(0xD1B5_4A32_D192_ED03).clone());
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(bytes)
}

fn draw_set<R: Rng>(
    rng: &mut R,
    rows: usize,
    scenario: &SimScenario,
    factor: &CholeskyFactor,
    beta: &Array1<f64>,
) -> Result<DataMatrix> {
    let p = scenario.p;
    let mut x = Array2::<f64>::zeros((rows, p));
    let mut y = Array1::<f64>::zeros(rows);
    let chi = match scenario.covariate_law {
        CovariateLaw::StudentT { df } => Some((df, ChiSquared::new(df).map_err(|e| domain(e.to_string()))?)),
        CovariateLaw::Gaussian => None,
    };
    for i in 0..rows {
        let mut row = x.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        factor.apply(row.view_mut());
        if let Some((df, dist)) = &chi {
            let w: f64 = dist.sample(rng);
            let scale = (w / df).sqrt();
            row.mapv_inplace(|t| t / scale);
        }
        let signal = row.dot(beta);
        y[i] = match scenario.response_law {
            ResponseLaw::Linear => signal + scenario.sigma * rng.sample::<f64, _>(StandardNormal),
            ResponseLaw::Logistic => {
                let prob = sigmoid(signal + scenario.sigma);
                if rng.random::<f64>() < prob {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    DataMatrix::new(x, y)
}

/// Training, validation and test sets for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub train: DataMatrix,
    pub validation: DataMatrix,
    pub test: DataMatrix,
}

pub fn generate(scenario: &SimScenario, replication_index: usize) -> Result<SimData> {
    scenario.validate()?;
    let factor = CholeskyFactor::new(&scenario.covariance, scenario.p)?;
    let beta = Array1::from(scenario.beta0.clone());
    let mut rng = replication_rng(scenario.seed, replication_index as u64);
    let train = draw_set(&mut rng, scenario.n_train, scenario, &factor, &beta)?;
    let validation = draw_set(&mut rng, scenario.n_val, scenario, &factor, &beta)?;
    let test = draw_set(&mut rng, scenario.n_test, scenario, &factor, &beta)?;
    Ok(SimData { train, validation, test })
}

/// Selection and prediction metrics for one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "fn")]
    pub false_negatives: usize,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    pub l2_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification_error: Option<f64>,
    pub model_size: usize,
}

pub fn evaluate(model: &FitModel, truth: &[f64], test: &DataMatrix) -> Result<Metrics> {
    if truth.len() != model.p() || test.p() != model.p() {
        return Err(Error::Dimension("model, truth and test widths differ".into()));
    }
    let est = &model.beta_original;
    let mut fn_ = 0;
    let mut fp = 0;
    let mut l2 = 0.0;
    for (b, &t) in est.iter().zip(truth) {
        if *b == 0.0 && t != 0.0 {
            fn_ += 1;
        }
        if *b != 0.0 && t == 0.0 {
            fp += 1;
        }
        l2 += (b - t).powi(2);
    }
    let pred = model.predict(test.x())?;
    let (mse, ce) = match model.family {
        Family::Gaussian => {
            let m = pred.iter().zip(test.y().iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / test.n() as f64;
            (Some(m), None)
        }
        Family::Binomial => {
            let wrong = pred
                .iter()
                .zip(test.y().iter())
                .filter(|(&pr, &t)| (if pr >= 0.5 { 1.0 } else { 0.0 }) != t)
                .count();
            (None, Some(wrong as f64 / test.n() as f64))
        }
    };
    Ok(Metrics {
        false_negatives: fn_,
        false_positives: fp,
        l2_error: l2.sqrt(),
        mse,
        classification_error: ce,
        model_size: est.iter().filter(|b| **b != 0.0).count(),
    })
}

/// Which penalty structure the pipeline fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Pairwise screening with the mixed penalty (PCS, or PRCS with Spearman).
    #[default]
    Pcs,
    /// SIS subset, ℓ1 on every survivor.
    SisLasso,
    /// SIS subset, ℓ2 on every survivor.
    SisRidge,
    /// ℓ1 on all `p` covariates, no screening.
    Lasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub selector: Selector,
    pub screen: ScreenConfig,
    /// Tuning plan; the family is taken from the scenario.
    pub tuning: TuningPlan,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::pcs(CorrelationMethod::Pearson)
    }
}

impl PipelineConfig {
    pub fn pcs(method: CorrelationMethod) -> Self {
        Self {
            selector: Selector::Pcs,
            screen: ScreenConfig {
                method,
                ..Default::default()
            },
            tuning: TuningPlan::validation(Family::Gaussian),
        }
    }

    pub fn with_selector(mut self, selector: Selector) -> Self {
        self.selector = selector;
        self
    }
}

fn plain_sets(d: &DataMatrix, cfg: &ScreenConfig, m: Vec<usize>, g: Vec<(usize, usize)>, mode: ScreenMode) -> Result<ScreenSets> {
    let thresholds = LawThresholds::new(cfg.alpha, cfg.delta, d.n(), d.p().max(2))?;
    let c = paired_set(&g);
    Ok(ScreenSets {
        m,
        g,
        c,
        thresholds,
        method: cfg.method,
        mode,
        warnings: Vec::new(),
    })
}

/// Screening sets for a selector on training data.
pub fn selector_sets(train: &DataMatrix, pipeline: &PipelineConfig, family: Family) -> Result<ScreenSets> {
    let mode = match family {
        Family::Gaussian => ScreenMode::Linear,
        Family::Binomial => ScreenMode::Glm,
    };
    let cfg = ScreenConfig {
        mode,
        ..pipeline.screen.clone()
    };
    match pipeline.selector {
        Selector::Pcs => screen(train, &cfg),
        Selector::SisLasso => {
            let m = sis_screen(train, cfg.sis_size)?.m;
            plain_sets(train, &cfg, m, Vec::new(), mode)
        }
        Selector::SisRidge => {
            let m = sis_screen(train, cfg.sis_size)?.m;
            let mut sorted = m.clone();
            sorted.sort_unstable();
            let g = sorted
                .iter()
                .enumerate()
                .flat_map(|(a, &i)| sorted[a + 1..].iter().map(move |&j| (i, j)))
                .collect();
            plain_sets(train, &cfg, m, g, mode)
        }
        Selector::Lasso => plain_sets(train, &cfg, (0..train.p()).collect(), Vec::new(), mode),
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    pub m_size: usize,
    pub g_size: usize,
    pub c_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Fit for one replication: screening sets and the tuned model.
#[derive(Debug, Clone)]
pub struct ReplicationFit {
    pub data: SimData,
    pub sets: ScreenSets,
    pub lambda1: f64,
    pub lambda2: f64,
    pub model: FitModel,
}

/// generate → screen → tune on validation → (caller evaluates on test).
pub fn fit_replication(scenario: &SimScenario, pipeline: &PipelineConfig, index: usize) -> Result<ReplicationFit> {
    let data = generate(scenario, index)?;
    let family = scenario.family();
    let sets = selector_sets(&data.train, pipeline, family)?;
    let mut plan = pipeline.tuning.clone();
    if plan.family != family {
        plan = TuningPlan {
            family,
            metric: TuningPlan::validation(family).metric,
            ..plan
        };
    }
    let tuned = tune(&data.train, &sets, &plan, Some(&data.validation))?;
    Ok(ReplicationFit {
        data,
        sets,
        lambda1: tuned.lambda1,
        lambda2: tuned.lambda2,
        model: tuned.model,
    })
}

fn run_replication(scenario: &SimScenario, pipeline: &PipelineConfig, index: usize) -> ReplicationRecord {
    let mut rec = ReplicationRecord {
        replication: index,
        seed: scenario.seed,
        metrics: None,
        lambda1: None,
        lambda2: None,
        m_size: 0,
        g_size: 0,
        c_size: 0,
        error: None,
    };
    let outcome = fit_replication(scenario, pipeline, index).and_then(|fit| {
        let metrics = evaluate(&fit.model, &scenario.beta0, &fit.data.test)?;
        Ok((fit, metrics))
    });
    match outcome {
        Ok((fit, metrics)) => {
            rec.metrics = Some(metrics);
            rec.lambda1 = Some(fit.lambda1);
            rec.lambda2 = Some(fit.lambda2);
            rec.m_size = fit.sets.m.len();
            rec.g_size = fit.sets.g.len();
            rec.c_size = fit.sets.c.len();
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl Aggregate {
    /// Mean and standard error `sd / sqrt(count)` (sample sd, n - 1).
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let se = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub generator: String,
    pub scenario: SimScenario,
    pub pipeline: PipelineConfig,
    pub records: Vec<ReplicationRecord>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub failures: usize,
}

impl SimReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregates.get(metric).map(|a| a.mean)
    }

    /// Long-format rows `(replication, metric, value)`.
    pub fn long_rows(&self) -> Vec<(usize, &'static str, f64)> {
        let mut out = Vec::new();
        for r in &self.records {
            if let Some(m) = &r.metrics {
                for (name, v) in metric_pairs(m) {
                    out.push((r.replication, name, v));
                }
            }
        }
        out
    }
}

fn metric_pairs(m: &Metrics) -> Vec<(&'static str, f64)> {
    let mut v = vec![
        ("fn", m.false_negatives as f64),
        ("fp", m.false_positives as f64),
        ("l2_error", m.l2_error),
        ("model_size", m.model_size as f64),
    ];
    if let Some(x) = m.mse {
        v.push(("mse", x));
    }
    if let Some(x) = m.classification_error {
        v.push(("classification_error", x));
    }
    v
}

pub fn aggregate(records: &[ReplicationRecord]) -> BTreeMap<String, Aggregate> {
    let mut cols: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(m) = &r.metrics {
            for (name, v) in metric_pairs(m) {
                cols.entry(name.to_string()).or_default().push(v);
            }
        }
    }
    cols.into_iter().map(|(k, v)| (k, Aggregate::of(&v))).collect()
}

/// Runs every replication of a scenario. Individual failures are recorded,
/// not fatal.
pub fn run_scenario(scenario: &SimScenario, pipeline: &PipelineConfig) -> Result<SimReport> {
    scenario.validate()?;
    let records: Vec<ReplicationRecord> = (0..scenario.replications)
        .into_par_iter()
        .map(|i| run_replication(scenario, pipeline, i))
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        generator: GENERATOR.to_string(),
        scenario: scenario.clone(),
        pipeline: pipeline.clone(),
        aggregates: aggregate(&records),
        records,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub report: SimReport,
}

/// Cartesian sweep over training size, dimension and noise level. The
/// validation set follows the training size; the test set is unchanged.
pub fn sensitivity_sweep(
    base: &SimScenario,
    pipeline: &PipelineConfig,
    n_values: &[usize],
    p_values: &[usize],
    sigma_values: &[f64],
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &n in n_values {
        for &p in p_values {
            for &sigma in sigma_values {
                let mut sc = base.clone().with_p(p);
                sc.n_train = n;
                sc.n_val = n;
                sc.sigma = sigma;
                let report = run_scenario(&sc, pipeline)?;
                cells.push(SweepCell { n, p, sigma, report });
            }
        }
    }
    Ok(cells)
}

/// Long-format sweep table `(n, p, sigma, metric, mean, se)`.
pub fn sweep_rows(cells: &[SweepCell]) -> Vec<(usize, usize, f64, String, f64, f64)> {
    cells
        .iter()
        .flat_map(|c| {
            c.report
                .aggregates
                .iter()
                .map(move |(k, a)| (c.n, c.p, c.sigma, k.clone(), a.mean, a.se))
        })
        .collect()
}

/// Null maxima from one independent Gaussian design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullMaxima {
    pub w2: f64,
    pub s2: f64,
    pub r2: f64,
}

fn max_offdiag_sq(gram: &Array2<f64>) -> f64 {
    let p = gram.nrows();
    let mut best = 0.0_f64;
    for i in 0..p {
        for j in (i + 1)..p {
            best = best.max(gram[[i, j]] * gram[[i, j]]);
        }
    }
    best.min(1.0)
}

/// `max ρ²`, `max Spearman ρ²` and `max pairwise R²` over all pairs of an
/// `n × p` design with response `y`.
pub fn null_maxima(x: &Array2<f64>, y: ArrayView1<'_, f64>) -> Result<NullMaxima> {
    let u = unit_columns(x.view())?;
    let gram = u.t().dot(&u);
    let mut ranks = x.clone();
    for mut col in ranks.axis_iter_mut(Axis(1)) {
        let r = midranks(col.view());
        col.assign(&r);
    }
    let ur = unit_columns(ranks.view())?;
    let rgram = ur.t().dot(&ur);
    let yu = unit_vector(y).ok_or_else(|| Error::Degenerate {
        what: "response has zero variance".into(),
    })?;
    let cy = u.t().dot(&yu);
    let p = x.ncols();
    let mut r2 = 0.0_f64;
    for i in 0..p {
        for j in (i + 1)..p {
            if let Some(v) = r_squared_from_correlations(cy[i], cy[j], gram[[i, j]]) {
                r2 = r2.max(v);
            }
        }
    }
    Ok(NullMaxima {
        w2: max_offdiag_sq(&gram),
        s2: max_offdiag_sq(&rgram),
        r2,
    })
}

/// Draws `replicates` null designs in parallel (one stream per replicate).
///
/// The response is drawn first and the design column by column, so for a
/// fixed seed the design at a smaller `p` is the leading columns of the one
/// at a larger `p`.
pub fn sample_null_maxima(n: usize, p: usize, replicates: usize, seed: u64) -> Result<Vec<NullMaxima>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r as u64);
            let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
            let mut x = Array2::<f64>::zeros((n, p));
            for j in 0..p {
                for i in 0..n {
                    x[[i, j]] = rng.sample(StandardNormal);
                }
            }
            null_maxima(&x, y.view())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub schema_version: u32,
    pub generator: String,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub delta: f64,
    pub constants: NormalizingConstants,
    pub thresholds: LawThresholds,
    /// KS distance of `(W² - a) / b` from the limiting CDF.
    pub ks_w2: f64,
    /// KS distance of `(n-1) S² - 4 ln p + ln ln p` from its limiting CDF.
    pub ks_spearman: f64,
    /// KS distance of `n ln(1 - W²) + 4 ln p - ln ln p` from the
    /// sub-exponential limit.
    pub ks_sub_exponential: f64,
    pub exceedance_w2: f64,
    pub exceedance_spearman: Option<f64>,
    pub r2_tail_frequency: f64,
    /// `β = ln p / n`, when the exponential-case constant is defined.
    pub exponential_beta: Option<f64>,
    /// The exponential-case expression evaluated at the empirical median of
    /// its statistic; values outside [0, 1] show the published form is not
    /// a distribution function.
    pub exponential_case_at_median: Option<f64>,
    pub exponential_case_is_distribution: Option<bool>,
}

/// Monte Carlo check of the null laws at `(n, p)`.
pub fn validate_laws(n: usize, p: usize, replicates: usize, seed: u64, alpha: f64, delta: f64) -> Result<LawReport> {
    if replicates < 100 {
        return Err(domain("validate_laws needs at least 100 replicates"));
    }
    if n < 4 || p < 3 {
        return Err(domain("validate_laws needs n >= 4 and p >= 3"));
    }
    let constants = NormalizingConstants::new(n, p)?;
    let thresholds = LawThresholds::new(alpha, delta, n, p)?;
    let maxima = sample_null_maxima(n, p, replicates, seed)?;
    let reps = replicates as f64;

    let w_norm: Vec<f64> = maxima.iter().map(|m| constants.normalize(m.w2)).collect();
    let ks_w2 = ks_distance(&w_norm, |x| limiting_cdf_w2(x, n).unwrap_or(f64::NAN));
    let s_stat: Vec<f64> = maxima.iter().map(|m| spearman_statistic(m.s2, n, p)).collect();
    let ks_spearman = ks_distance(&s_stat, spearman_limit_cdf);
    let sub: Vec<f64> = maxima
        .iter()
        .map(|m| phase_transition_statistic(Regime::SubExponential, m.w2, n, p))
        .collect::<Result<_>>()?;
    let ks_sub_exponential = ks_distance(&sub, |x| {
        phase_transition_cdf(Regime::SubExponential, x, n, p).unwrap_or(f64::NAN)
    });

    let exceedance_w2 = maxima.iter().filter(|m| m.w2 >= thresholds.t_star).count() as f64 / reps;
    let exceedance_spearman = thresholds
        .s_star
        .map(|s| maxima.iter().filter(|m| m.s2 >= s).count() as f64 / reps);
    let r2_tail_frequency = maxima.iter().filter(|m| m.r2 >= thresholds.r0).count() as f64 / reps;

    let beta = (p as f64).ln() / n as f64;
    let (exponential_beta, exponential_case_at_median, exponential_case_is_distribution) =
        match crate::laws::exponential_case_k(beta) {
            Ok(_) => {
                let mut sorted = sub.clone();
                sorted.sort_by(|a, b| a.total_cmp(b));
                let median = sorted[sorted.len() / 2];
                let v = phase_transition_cdf(Regime::Exponential { beta }, median, n, p)?;
                (Some(beta), Some(v), Some((0.0..=1.0).contains(&v)))
            }
            Err(_) => (None, None, None),
        };

    Ok(LawReport {
        schema_version: SCHEMA_VERSION,
        generator: GENERATOR.to_string(),
        n,
        p,
        replicates,
        seed,
        alpha,
        delta,
        constants,
        thresholds,
        ks_w2,
        ks_spearman,
        ks_sub_exponential,
        exceedance_w2,
        exceedance_spearman,
        r2_tail_frequency,
        exponential_beta,
        exponential_case_at_median,
        exponential_case_is_distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_cov(x: &Array2<f64>) -> Array2<f64> {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).unwrap();
        let c = x - &mean;
        c.t().dot(&c) / n
    }

    #[test]
    fn identity_covariance_lln() {
        let sc = SimScenario {
            example_id: 0,
            n_train: 100_000,
            n_val: 1,
            n_test: 1,
            p: 3,
            sigma: 1.0,
            beta0: vec![0.0; 3],
            covariance: Covariance::Identity,
            covariate_law: CovariateLaw::Gaussian,
            response_law: ResponseLaw::Linear,
            replications: 1,
            seed: 3,
        };
        let d = generate(&sc, 0).unwrap();
        let cov = sample_cov(&d.train.x().to_owned());
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[[i, j]] - target).abs() < 0.02, "{i},{j}: {}", cov[[i, j]]);
            }
        }
    }

    #[test]
    fn example_one_block_correlations() {
        let mut sc = SimScenario::example(1).unwrap().with_p(12);
        sc.n_train = 100_000;
        let d = generate(&sc, 0).unwrap();
        let x = d.train.x();
        let r12 = crate::stats::pearson_corr(x.column(0), x.column(1)).unwrap();
        let r16 = crate::stats::pearson_corr(x.column(0), x.column(5)).unwrap();
        let r78 = crate::stats::pearson_corr(x.column(6), x.column(7)).unwrap();
        assert!((r12 - 0.8).abs() < 0.02);
        assert!((r78 - 0.8).abs() < 0.02);
        assert!(r16.abs() < 0.02);
    }

    #[test]
    fn structured_factors_match_dense_cholesky() {
        for cov in [
            Covariance::Ar1 { rho: 0.5 },
            Covariance::Block { rho: 0.8, groups: vec![(0, 5), (5, 10)] },
            Covariance::Block { rho: 0.8, groups: vec![(2, 6)] },
            Covariance::Identity,
        ] {
            let p = 12;
            let dense = cholesky(&cov.matrix(p)).unwrap();
            let structured = CholeskyFactor::new(&cov, p).unwrap().dense(p);
            for (a, b) in dense.iter().zip(structured.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn non_pd_covariance_is_named() {
        let cov = Covariance::Block { rho: -0.5, groups: vec![(0, 5)] };
        match CholeskyFactor::new(&cov, 10) {
            Err(Error::NotPositiveDefinite { construction }) => assert!(construction.contains("block")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(CholeskyFactor::new(&Covariance::Ar1 { rho: 1.0 }, 5).is_err());
        assert!(cholesky(&ndarray::array![[1.0, 2.0], [2.0, 1.0]]).is_none());
    }

    #[test]
    fn generation_is_deterministic() {
        let sc = SimScenario::example(2).unwrap().with_p(50);
        let a = generate(&sc, 4).unwrap();
        let b = generate(&sc, 4).unwrap();
        assert_eq!(a, b);
        let c = generate(&sc, 5).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn example_definitions() {
        let e1 = SimScenario::example(1).unwrap();
        assert_eq!(&e1.beta0[..11], &[2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0]);
        let e2 = SimScenario::example(2).unwrap();
        assert_eq!(&e2.beta0[..4], &[3.0, -1.5, 2.0, 0.0]);
        assert_eq!(SimScenario::example(4).unwrap().response_law, ResponseLaw::Logistic);
        assert!(matches!(SimScenario::example(5).unwrap().covariate_law, CovariateLaw::StudentT { df } if df == 5.0));
        assert!(SimScenario::example(6).is_err());
        for id in 1..=5 {
            SimScenario::example(id).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn logistic_and_student_generation() {
        let sc = SimScenario::example(4).unwrap().with_p(30);
        let d = generate(&sc, 0).unwrap();
        assert!(d.train.y().iter().all(|&v| v == 0.0 || v == 1.0));
        let sc = SimScenario::example(5).unwrap().with_p(30);
        let d = generate(&sc, 0).unwrap();
        assert!(d.test.x().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn evaluate_indicator_arithmetic() {
        let model = FitModel {
            family: Family::Gaussian,
            beta: ndarray::array![1.0, 0.0, 0.5],
            beta_original: ndarray::array![1.0, 0.0, 0.5],
            intercept: 0.0,
            active_set: vec![0, 2],
            penalty: crate::solver::PenaltySpec::new(3, 0.0, 0.0, vec![0, 1, 2], vec![]).unwrap(),
            objective_value: 0.0,
            iterations: 0,
            converged: true,
            column_means: Array1::zeros(3),
            column_scales: Array1::ones(3),
            warnings: vec![],
            trace: None,
        };
        let test = DataMatrix::new(Array2::eye(3), ndarray::array![1.0, 0.0, 0.5]).unwrap();
        let m = evaluate(&model, &[2.0, 2.0, 0.0], &test).unwrap();
        assert_eq!((m.false_negatives, m.false_positives, m.model_size), (1, 1, 2));
        assert_abs_diff_eq!(m.l2_error, (1.0f64 + 4.0 + 0.25).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.mse.unwrap(), 0.0, epsilon = 1e-15);

        let exact = FitModel {
            beta_original: ndarray::array![2.0, 2.0, 0.0],
            ..model
        };
        let test = DataMatrix::new(Array2::eye(3), ndarray::array![2.0, 2.0, 0.0]).unwrap();
        let m = evaluate(&exact, &[2.0, 2.0, 0.0], &test).unwrap();
        assert_eq!((m.false_negatives, m.false_positives), (0, 0));
        assert_eq!(m.l2_error, 0.0);
        assert_eq!(m.mse.unwrap(), 0.0);
    }

    #[test]
    fn aggregate_standard_error() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(a.mean, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.se, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        assert_eq!(Aggregate::of(&[7.0]).se, 0.0);
    }

    #[test]
    fn perfect_recovery_without_noise() {
        let sc = SimScenario {
            example_id: 0,
            n_train: 100,
            n_val: 100,
            n_test: 100,
            p: 50,
            sigma: 0.0,
            beta0: leading(50, &[3.0, -3.0, 3.0]),
            covariance: Covariance::Identity,
            covariate_law: CovariateLaw::Gaussian,
            response_law: ResponseLaw::Linear,
            replications: 3,
            seed: 9,
        };
        let report = run_scenario(&sc, &PipelineConfig::default()).unwrap();
        assert_eq!(report.failures, 0);
        for r in &report.records {
            let m = r.metrics.as_ref().unwrap();
            assert_eq!((m.false_negatives, m.false_positives), (0, 0), "{r:?}");
        }
    }

    #[test]
    fn single_cell_sweep_equals_run() {
        let mut sc = SimScenario::example(1).unwrap().with_p(60);
        sc.replications = 2;
        let pipe = PipelineConfig::default();
        let cells = sensitivity_sweep(&sc, &pipe, &[100], &[60], &[2.0]).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].report, run_scenario(&sc, &pipe).unwrap());
        let grid = sensitivity_sweep(&sc, &pipe, &[50, 60], &[40, 60], &[2.0]).unwrap();
        assert_eq!(grid.len(), 4);
        assert!(!sweep_rows(&grid).is_empty());
    }

    #[test]
    fn null_maxima_match_brute_force() {
        let mut rng = replication_rng(5, 0);
        let x = Array2::from_shape_fn((12, 6), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(12, |_| rng.sample::<f64, _>(StandardNormal));
        let got = null_maxima(&x, y.view()).unwrap();
        let d = DataMatrix::new(x.clone(), y.clone()).unwrap();
        let (mut w2, mut s2, mut r2) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..6 {
            for j in (i + 1)..6 {
                w2 = w2.max(crate::stats::pearson_corr(x.column(i), x.column(j)).unwrap().powi(2));
                s2 = s2.max(crate::stats::spearman_rho(x.column(i), x.column(j)).unwrap().powi(2));
                r2 = r2.max(crate::stats::pairwise_r_squared(&d, i, j).unwrap());
            }
        }
        assert_abs_diff_eq!(got.w2, w2, epsilon = 1e-12);
        assert_abs_diff_eq!(got.s2, s2, epsilon = 1e-12);
        assert_abs_diff_eq!(got.r2, r2, epsilon = 1e-12);
    }

    #[test]
    fn null_designs_nest_across_p() {
        let small = sample_null_maxima(10, 20, 50, 4).unwrap();
        let large = sample_null_maxima(10, 60, 50, 4).unwrap();
        for (a, b) in small.iter().zip(&large) {
            assert!(a.w2 <= b.w2 && a.s2 <= b.s2 && a.r2 <= b.r2);
        }
    }

    #[test]
    fn validate_laws_small_run() {
        let r = validate_laws(10, 20, 200, 1, 0.05, 1.0).unwrap();
        assert!(r.ks_w2 >= 0.0 && r.ks_w2 <= 1.0);
        assert!((0.0..=1.0).contains(&r.exceedance_w2));
        assert!(validate_laws(10, 20, 50, 1, 0.05, 1.0).is_err());
    }
}
