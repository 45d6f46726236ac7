//! Grid search over (λ₁, λ₂) by held-out validation or k-fold CV.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::screening::{screen, ScreenConfig, ScreenSets};
use crate::solver::{
    lambda1_grid, lambda1_max, Family, FitModel, LinearProblem, LogisticProblem, PenaltySpec,
    SolverOptions, DEFAULT_LAMBDA1_COUNT, DEFAULT_LAMBDA1_RATIO, DEFAULT_LAMBDA2_GRID,
};
use crate::stats::{standardize, DataMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum Strategy {
    ValidationSet,
    Kfold(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    Deviance,
    ClassificationError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPlan {
    pub strategy: Strategy,
    /// Descending λ₁ values; `None` uses the default log grid from λ₁,max.
    pub lambda1_grid: Option<Vec<f64>>,
    pub lambda2_grid: Vec<f64>,
    pub metric: Metric,
    pub family: Family,
    /// Seeds the fold assignment.
    pub seed: u64,
    /// Re-run screening inside each fold with this configuration.
    pub rescreen: Option<ScreenConfig>,
    pub solver: SolverOptions,
}

impl TuningPlan {
    pub fn validation(family: Family) -> Self {
        Self {
            strategy: Strategy::ValidationSet,
            lambda1_grid: None,
            lambda2_grid: DEFAULT_LAMBDA2_GRID.to_vec(),
            metric: match family {
                Family::Gaussian => Metric::Mse,
                Family::Binomial => Metric::ClassificationError,
            },
            family,
            seed: 0,
            rescreen: None,
            solver: SolverOptions::default(),
        }
    }

    pub fn kfold(family: Family, k: usize, seed: u64) -> Self {
        Self {
            strategy: Strategy::Kfold(k),
            seed,
            ..Self::validation(family)
        }
    }
}

/// One evaluated grid point on one fold (fold 0 is the validation set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub fold: usize,
    pub metric_value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub model: FitModel,
    pub scores: Vec<ScoreRow>,
}

/// Scores a model's predictions on held-out data.
pub fn score(model: &FitModel, data: &DataMatrix, metric: Metric) -> Result<f64> {
    let pred = model.predict(data.x())?;
    Ok(metric_value(pred.view(), data.y(), metric, model.family))
}

pub fn metric_value(pred: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, metric: Metric, family: Family) -> f64 {
    let n = y.len() as f64;
    match (metric, family) {
        (Metric::Mse, _) | (Metric::Deviance, Family::Gaussian) => {
            pred.iter().zip(y.iter()).map(|(p, t)| (t - p).powi(2)).sum::<f64>() / n
        }
        (Metric::Deviance, Family::Binomial) => {
            let eps = 1e-15;
            -2.0 * pred
                .iter()
                .zip(y.iter())
                .map(|(&mu, &t)| {
                    let mu = mu.clamp(eps, 1.0 - eps);
                    t * mu.ln() + (1.0 - t) * (1.0 - mu).ln()
                })
                .sum::<f64>()
                / n
        }
        (Metric::ClassificationError, _) => {
            pred.iter()
                .zip(y.iter())
                .filter(|(&p, &t)| (if p >= 0.5 { 1.0 } else { 0.0 }) != t)
                .count() as f64
                / n
        }
    }
}

/// Fold labels `0..k` from a seeded shuffle of the rows.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

/// Fits the λ₁ path for each λ₂ on `train`, returning models in
/// `(λ₂ index, λ₁ index)` order.
fn fit_grid(
    train: &DataMatrix,
    base: &PenaltySpec,
    l1: &[f64],
    l2: &[f64],
    plan: &TuningPlan,
) -> Result<Vec<Vec<FitModel>>> {
    let z = standardize(train)?;
    match plan.family {
        Family::Gaussian => {
            let prob = LinearProblem::new(&z);
            l2.iter()
                .map(|&lam2| prob.path(&base.with_lambdas(0.0, lam2)?, l1, &plan.solver))
                .collect()
        }
        Family::Binomial => {
            let prob = LogisticProblem::new(&z, train.y())?;
            l2.iter()
                .map(|&lam2| {
                    let mut out = Vec::with_capacity(l1.len());
                    let mut warm: Option<(Array1<f64>, f64)> = None;
                    for &lam1 in l1 {
                        let spec = base.with_lambdas(lam1, lam2)?;
                        let fit = prob.fit(&spec, &plan.solver, warm.as_ref().map(|(b, i)| (b, *i)))?;
                        warm = Some((fit.beta.clone(), prob.standardized_intercept(&fit)));
                        out.push(fit);
                    }
                    Ok(out)
                })
                .collect()
        }
    }
}

fn resolve_grids(train: &DataMatrix, base: &PenaltySpec, plan: &TuningPlan) -> Result<(Vec<f64>, Vec<f64>)> {
    let l1 = match &plan.lambda1_grid {
        Some(g) if !g.is_empty() => g.clone(),
        Some(_) => return Err(domain("lambda1 grid is empty")),
        None if base.l1_set.is_empty() => vec![0.0],
        None => {
            let z = standardize(train)?;
            lambda1_grid(lambda1_max(&z, &base.l1_set), DEFAULT_LAMBDA1_COUNT, DEFAULT_LAMBDA1_RATIO)
        }
    };
    if plan.lambda2_grid.is_empty() {
        return Err(domain("lambda2 grid is empty"));
    }
    let l2 = if base.l2_set.is_empty() {
        // λ₂ has no effect; keep the value the tie-break would pick
        vec![plan.lambda2_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max)]
    } else {
        plan.lambda2_grid.clone()
    };
    if l1.iter().chain(&l2).any(|v| !(*v >= 0.0)) {
        return Err(domain("penalty grids must be nonnegative"));
    }
    Ok((l1, l2))
}

/// Selects (λ₁, λ₂) and returns the model refit on the full training data.
///
/// Screening sets are taken as given unless `plan.rescreen` asks for
/// per-fold screening.
pub fn tune(
    train: &DataMatrix,
    sets: &ScreenSets,
    plan: &TuningPlan,
    validation: Option<&DataMatrix>,
) -> Result<TuneResult> {
    let p = train.p();
    let base = PenaltySpec::from_screen(p, sets, 0.0, 0.0)?;
    let (l1, l2) = resolve_grids(train, &base, plan)?;

    let mut scores: Vec<ScoreRow> = Vec::new();
    let mut validation_models: Option<Vec<Vec<FitModel>>> = None;
    match plan.strategy {
        Strategy::ValidationSet => {
            let val = validation.ok_or_else(|| domain("validation_set strategy needs validation data"))?;
            if val.p() != p {
                return Err(Error::Dimension("validation data has a different width".into()));
            }
            let models = fit_grid(train, &base, &l1, &l2, plan)?;
            for (b, row) in models.iter().enumerate() {
                for (a, fit) in row.iter().enumerate() {
                    scores.push(ScoreRow {
                        lambda1: l1[a],
                        lambda2: l2[b],
                        fold: 0,
                        metric_value: score(fit, val, plan.metric)?,
                        converged: fit.converged,
                    });
                }
            }
            validation_models = Some(models);
        }
        Strategy::Kfold(k) => {
            if validation.is_some() {
                log::warn!("validation data ignored under k-fold tuning");
            }
            if k < 2 || k > train.n() {
                return Err(domain(format!("k-fold needs 2 <= k <= n, got k = {k}")));
            }
            let folds = fold_assignment(train.n(), k, plan.seed);
            let per_fold: Vec<Result<Vec<ScoreRow>>> = (0..k)
                .into_par_iter()
                .map(|f| {
                    let tr: Vec<usize> = (0..train.n()).filter(|&i| folds[i] != f).collect();
                    let te: Vec<usize> = (0..train.n()).filter(|&i| folds[i] == f).collect();
                    let (dtr, dte) = (train.select_rows(&tr), train.select_rows(&te));
                    let fold_base = match &plan.rescreen {
                        Some(cfg) => PenaltySpec::from_screen(p, &screen(&dtr, cfg)?, 0.0, 0.0)?,
                        None => base.clone(),
                    };
                    let models = fit_grid(&dtr, &fold_base, &l1, &l2, plan)?;
                    let mut rows = Vec::new();
                    for (b, row) in models.iter().enumerate() {
                        for (a, fit) in row.iter().enumerate() {
                            rows.push(ScoreRow {
                                lambda1: l1[a],
                                lambda2: l2[b],
                                fold: f + 1,
                                metric_value: score(fit, &dte, plan.metric)?,
                                converged: fit.converged,
                            });
                        }
                    }
                    Ok(rows)
                })
                .collect();
            for r in per_fold {
                scores.extend(r?);
            }
        }
    }

    let (a, b) = select_winner(&scores, &l1, &l2).ok_or_else(|| Error::TuningFailed {
        fits: scores.len(),
        scores: scores.clone(),
    })?;
    let model = match validation_models {
        Some(mut models) => models.swap_remove(b).swap_remove(a),
        None => {
            let spec = base.with_lambdas(l1[a], l2[b])?;
            let z = standardize(train)?;
            match plan.family {
                Family::Gaussian => LinearProblem::new(&z).fit(&spec, &plan.solver, None)?,
                Family::Binomial => LogisticProblem::new(&z, train.y())?.fit(&spec, &plan.solver, None)?,
            }
        }
    };
    Ok(TuneResult {
        lambda1: l1[a],
        lambda2: l2[b],
        model,
        scores,
    })
}

/// Mean score per grid point over folds; grid points with any
/// non-converged fit are ineligible. Ties go to larger λ₁, then larger λ₂.
pub fn select_winner(scores: &[ScoreRow], l1: &[f64], l2: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (b, &lam2) in l2.iter().enumerate() {
        for (a, &lam1) in l1.iter().enumerate() {
            let rows: Vec<&ScoreRow> = scores
                .iter()
                .filter(|r| r.lambda1 == lam1 && r.lambda2 == lam2)
                .collect();
            if rows.is_empty() || rows.iter().any(|r| !r.converged) {
                continue;
            }
            let mean = rows.iter().map(|r| r.metric_value).sum::<f64>() / rows.len() as f64;
            let better = match best {
                None => true,
                Some((ba, bb, bv)) => {
                    mean < bv
                        || (mean == bv
                            && (lam1 > l1[ba] || (lam1 == l1[ba] && lam2 > l2[bb])))
                }
            };
            if better {
                best = Some((a, b, mean));
            }
        }
    }
    best.map(|(a, b, _)| (a, b))
}
