//! Coordinate descent for the screening-based mixed penalty.
//!
//! Coordinates in `l1_set` take the soft-threshold update, coordinates in
//! `l2_set` the ridge update divided by `(1 + λ₂)` (for unit-scaled columns),
//! and coordinates in `zero_set` stay at zero. The ridge update is the exact
//! coordinate minimizer of `(λ₂/2) β²`, so the objective reported here is
//!
//! ```text
//! (1/2n) ||y - Zβ||² + λ₁ Σ_{l1} |β_j| + (λ₂/2) Σ_{l2} β_j²
//! ```
//!
//! and the ℓ2 stationarity condition reads `(1/n) z_jᵀ r = λ₂ β_j`.
//!
//! Logistic fits wrap the same inner loop in IRLS: each outer step replaces
//! the mean negative log-likelihood by its weighted quadratic expansion.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::screening::ScreenSets;
use crate::stats::{standardize, DataMatrix, StandardizedDesign};

/// IRLS weights are floored here so the working response stays finite.
pub const IRLS_WEIGHT_FLOOR: f64 = 1e-5;
/// Linear predictors beyond this magnitude on every row signal separation.
pub const SEPARATION_ETA: f64 = 30.0;

/// `sign(z) (|z| - λ)₊`.
#[inline]
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Gaussian,
    Binomial,
}

/// Penalty weights and the partition of coordinates they apply to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub l1_set: Vec<usize>,
    pub l2_set: Vec<usize>,
    pub zero_set: Vec<usize>,
}

impl PenaltySpec {
    /// Builds the partition of `0..p`; every index outside `l1 ∪ l2` is held at zero.
    pub fn new(p: usize, lambda1: f64, lambda2: f64, l1_set: Vec<usize>, l2_set: Vec<usize>) -> Result<Self> {
        let mut role = vec![0u8; p];
        for (tag, set) in [(1u8, &l1_set), (2u8, &l2_set)] {
            for &j in set.iter() {
                if j >= p {
                    return Err(Error::Dimension(format!("index {j} out of range for p = {p}")));
                }
                if role[j] != 0 {
                    return Err(domain(format!("index {j} appears in more than one penalty set")));
                }
                role[j] = tag;
            }
        }
        let zero_set = (0..p).filter(|&j| role[j] == 0).collect();
        let mut spec = Self {
            lambda1,
            lambda2,
            l1_set,
            l2_set,
            zero_set,
        };
        spec.l1_set.sort_unstable();
        spec.l2_set.sort_unstable();
        spec.check_lambdas()?;
        Ok(spec)
    }

    /// ℓ1 on `C^c ∩ M`, ℓ2 on `C ∩ M`, zero off `M`.
    pub fn from_screen(p: usize, sets: &ScreenSets, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(p, lambda1, lambda2, sets.unpaired_in_m(), sets.paired_in_m())
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Result<Self> {
        let mut s = self.clone();
        s.lambda1 = lambda1;
        s.lambda2 = lambda2;
        s.check_lambdas()?;
        Ok(s)
    }

    fn check_lambdas(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return Err(domain(format!(
                "penalty weights must be nonnegative, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }

    /// Checks that the three sets partition `0..p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        let mut seen = vec![false; p];
        for &j in self.l1_set.iter().chain(&self.l2_set).chain(&self.zero_set) {
            if j >= p || seen[j] {
                return Err(domain(format!("penalty sets do not partition 0..{p} (index {j})")));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(domain(format!("penalty sets do not cover 0..{p}")));
        }
        self.check_lambdas()
    }

    pub fn penalty(&self, beta: ArrayView1<'_, f64>) -> f64 {
        let l1: f64 = self.l1_set.iter().map(|&j| beta[j].abs()).sum();
        let l2: f64 = self.l2_set.iter().map(|&j| beta[j] * beta[j]).sum();
        self.lambda1 * l1 + 0.5 * self.lambda2 * l2
    }

    fn roles(&self, p: usize) -> Vec<Role> {
        let mut r = vec![Role::Zero; p];
        for &j in &self.l1_set {
            r[j] = Role::L1;
        }
        for &j in &self.l2_set {
            r[j] = Role::L2;
        }
        r
    }

    fn free_coordinates(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.l1_set.iter().chain(&self.l2_set).copied().collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    L1,
    L2,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence when the largest coefficient change in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// A converged solution must also meet this KKT residual.
    pub kkt_tol: f64,
    pub max_irls: usize,
    /// Record the objective after every sweep.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 10_000,
            kkt_tol: 1e-7,
            max_irls: 100,
            record_trace: false,
        }
    }
}

/// A fitted model on both the standardized and the raw scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub family: Family,
    /// Coefficients on the standardized scale.
    pub beta: Array1<f64>,
    pub beta_original: Array1<f64>,
    /// Intercept on the raw scale.
    pub intercept: f64,
    pub active_set: Vec<usize>,
    pub penalty: PenaltySpec,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub column_means: Array1<f64>,
    pub column_scales: Array1<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

impl FitModel {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Linear predictor `intercept + x β` on the raw scale.
    pub fn linear_predictor(&self, x_new: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x_new.ncols() != self.p() {
            return Err(Error::Dimension(format!(
                "model has {} coefficients but input has {} columns",
                self.p(),
                x_new.ncols()
            )));
        }
        Ok(x_new.dot(&self.beta_original) + self.intercept)
    }

    /// Fitted mean: the linear predictor for Gaussian models, probabilities
    /// for binomial ones.
    pub fn predict(&self, x_new: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let eta = self.linear_predictor(x_new)?;
        Ok(match self.family {
            Family::Gaussian => eta,
            Family::Binomial => eta.mapv(sigmoid),
        })
    }

    /// 0/1 labels at probability 0.5.
    pub fn predict_labels(&self, x_new: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let prob = match self.family {
            Family::Binomial => self.predict(x_new)?,
            Family::Gaussian => return Err(domain("labels are only defined for binomial models")),
        };
        Ok(prob.mapv(|v| if v >= 0.5 { 1.0 } else { 0.0 }))
    }
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
#[inline]
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Columns of `z` as contiguous rows.
fn column_major(z: ArrayView2<'_, f64>) -> Array2<f64> {
    z.t().as_standard_layout().into_owned()
}

/// Weighted least-squares subproblem
/// `(1/2n) Σ w_i (target_i - b0 - z_iᵀβ)² + penalty`.
struct Subproblem<'a> {
    cols: &'a Array2<f64>,
    target: ArrayView1<'a, f64>,
    weights: Option<ArrayView1<'a, f64>>,
    fit_intercept: bool,
}

struct CdState {
    beta: Array1<f64>,
    intercept: f64,
    resid: Array1<f64>,
    sweeps: usize,
    converged: bool,
    trace: Option<Vec<f64>>,
}

impl<'a> Subproblem<'a> {
    fn n(&self) -> usize {
        self.target.len()
    }

    fn residual(&self, beta: &Array1<f64>, intercept: f64) -> Array1<f64> {
        let mut r = self.target.to_owned() - intercept;
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.scaled_add(-b, &self.cols.row(j));
            }
        }
        r
    }

    fn gradient(&self, j: usize, resid: &Array1<f64>) -> f64 {
        let col = self.cols.row(j);
        let s = match &self.weights {
            Some(w) => col.iter().zip(w.iter()).zip(resid.iter()).map(|((z, w), r)| z * w * r).sum::<f64>(),
            None => col.dot(resid),
        };
        s / self.n() as f64
    }

    fn curvature(&self, j: usize) -> f64 {
        let col = self.cols.row(j);
        let s = match &self.weights {
            Some(w) => col.iter().zip(w.iter()).map(|(z, w)| z * z * w).sum::<f64>(),
            None => col.dot(&col),
        };
        s / self.n() as f64
    }

    fn loss(&self, resid: &Array1<f64>) -> f64 {
        let s = match &self.weights {
            Some(w) => resid.iter().zip(w.iter()).map(|(r, w)| w * r * r).sum::<f64>(),
            None => resid.dot(resid),
        };
        s / (2.0 * self.n() as f64)
    }

    fn update_intercept(&self, state: &mut CdState) -> f64 {
        let (num, den) = match &self.weights {
            Some(w) => (state.resid.iter().zip(w.iter()).map(|(r, w)| r * w).sum::<f64>(), w.sum()),
            None => (state.resid.sum(), self.n() as f64),
        };
        let shift = num / den;
        if shift != 0.0 {
            state.resid -= shift;
            state.intercept += shift;
        }
        shift.abs()
    }

    fn kkt_residual(&self, spec: &PenaltySpec, roles: &[Role], beta: &Array1<f64>, resid: &Array1<f64>) -> f64 {
        let mut worst = 0.0_f64;
        for (j, role) in roles.iter().enumerate() {
            let g = match role {
                Role::Zero => continue,
                _ => self.gradient(j, resid),
            };
            worst = worst.max(kkt_violation(*role, g, beta[j], spec));
        }
        worst
    }

    /// Cyclic coordinate descent from `beta0`, alternating full sweeps with
    /// sweeps restricted to the current nonzero coordinates.
    fn solve(&self, spec: &PenaltySpec, beta0: Array1<f64>, intercept0: f64, opts: &SolverOptions) -> CdState {
        let p = self.cols.nrows();
        let roles = spec.roles(p);
        let free = spec.free_coordinates();
        let curv: Vec<f64> = (0..p)
            .map(|j| if roles[j] == Role::Zero { 0.0 } else { self.curvature(j) })
            .collect();
        let mut beta = beta0;
        for &j in &spec.zero_set {
            beta[j] = 0.0;
        }
        let resid = self.residual(&beta, intercept0);
        let mut state = CdState {
            beta,
            intercept: intercept0,
            resid,
            sweeps: 0,
            converged: false,
            trace: opts.record_trace.then(Vec::new),
        };
        if let Some(t) = state.trace.as_mut() {
            t.push(self.loss(&state.resid) + spec.penalty(state.beta.view()));
        }
        if self.fit_intercept {
            self.update_intercept(&mut state);
        }

        let mut full_sweep = true;
        while state.sweeps < opts.max_sweeps {
            let coords: Vec<usize> = if full_sweep {
                free.clone()
            } else {
                free.iter().copied().filter(|&j| state.beta[j] != 0.0).collect()
            };
            let mut max_change = 0.0_f64;
            for &j in &coords {
                let d = curv[j];
                if d <= 0.0 {
                    continue;
                }
                let old = state.beta[j];
                let u = self.gradient(j, &state.resid) + d * old;
                let new = match roles[j] {
                    Role::L1 => soft_threshold(u, spec.lambda1) / d,
                    Role::L2 => u / (d + spec.lambda2),
                    Role::Zero => 0.0,
                };
                if new != old {
                    state.resid.scaled_add(old - new, &self.cols.row(j));
                    state.beta[j] = new;
                    max_change = max_change.max((new - old).abs());
                }
            }
            if self.fit_intercept {
                max_change = max_change.max(self.update_intercept(&mut state));
            }
            state.sweeps += 1;
            if let Some(t) = state.trace.as_mut() {
                t.push(self.loss(&state.resid) + spec.penalty(state.beta.view()));
            }

            if max_change <= opts.tol {
                if full_sweep {
                    // resync the residual before the final optimality check
                    state.resid = self.residual(&state.beta, state.intercept);
                    if self.kkt_residual(spec, &roles, &state.beta, &state.resid) <= opts.kkt_tol {
                        state.converged = true;
                        break;
                    }
                }
                full_sweep = true;
            } else {
                full_sweep = false;
            }
        }
        state
    }
}

fn kkt_violation(role: Role, grad: f64, beta: f64, spec: &PenaltySpec) -> f64 {
    match role {
        Role::L1 if beta == 0.0 => (grad.abs() - spec.lambda1).max(0.0),
        Role::L1 => (grad - spec.lambda1 * beta.signum()).abs(),
        Role::L2 => (grad - spec.lambda2 * beta).abs(),
        Role::Zero => 0.0,
    }
}

/// Largest KKT violation of a linear fit on standardized data:
/// for ℓ1 coordinates `|g_j| ≤ λ₁` at zero and `g_j = λ₁ sign(β_j)` otherwise,
/// for ℓ2 coordinates `g_j = λ₂ β_j`, where `g_j = (1/n) z_jᵀ (y - Zβ)`.
pub fn linear_kkt_residual(z: &StandardizedDesign, spec: &PenaltySpec, beta: ArrayView1<'_, f64>) -> f64 {
    let n = z.n() as f64;
    let resid = &z.y_centered - &z.z.dot(&beta);
    let roles = spec.roles(z.p());
    let mut worst = 0.0_f64;
    for (j, role) in roles.iter().enumerate() {
        if *role == Role::Zero {
            continue;
        }
        let g = z.z.column(j).dot(&resid) / n;
        worst = worst.max(kkt_violation(*role, g, beta[j], spec));
    }
    worst
}

/// `(1/2n) ||y_c - Zβ||² + λ₁ Σ_{l1}|β| + (λ₂/2) Σ_{l2} β²`.
pub fn linear_objective(z: &StandardizedDesign, spec: &PenaltySpec, beta: ArrayView1<'_, f64>) -> f64 {
    let resid = &z.y_centered - &z.z.dot(&beta);
    resid.dot(&resid) / (2.0 * z.n() as f64) + spec.penalty(beta)
}

/// Mean negative log-likelihood plus penalty, on the standardized scale.
pub fn logistic_objective(
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    spec: &PenaltySpec,
    beta: ArrayView1<'_, f64>,
    intercept: f64,
) -> f64 {
    let eta = z.dot(&beta) + intercept;
    let nll: f64 = eta.iter().zip(y.iter()).map(|(&e, &t)| log1p_exp(e) - t * e).sum();
    nll / y.len() as f64 + spec.penalty(beta)
}

/// `max_{j ∈ l1_set} |(1/n) z_jᵀ y_c|`: the smallest λ₁ that zeroes the ℓ1 block.
pub fn lambda1_max(z: &StandardizedDesign, l1_set: &[usize]) -> f64 {
    let n = z.n() as f64;
    l1_set
        .iter()
        .map(|&j| (z.z.column(j).dot(&z.y_centered) / n).abs())
        .fold(0.0, f64::max)
}

/// `count` log-spaced values from `max` down to `ratio · max`.
pub fn lambda1_grid(max: f64, count: usize, ratio: f64) -> Vec<f64> {
    if count == 0 || max <= 0.0 {
        return vec![0.0];
    }
    if count == 1 {
        return vec![max];
    }
    let (hi, lo) = (max.ln(), (max * ratio).ln());
    (0..count)
        .map(|k| (hi + (lo - hi) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

pub const DEFAULT_LAMBDA1_COUNT: usize = 50;
pub const DEFAULT_LAMBDA1_RATIO: f64 = 1e-3;
pub const DEFAULT_LAMBDA2_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

fn check_spec(spec: &PenaltySpec, p: usize) -> Result<()> {
    spec.validate(p)
}

fn active(beta: &Array1<f64>) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

/// Precomputed column-major view of a standardized design, reused across a
/// regularization path.
pub struct LinearProblem<'a> {
    design: &'a StandardizedDesign,
    cols: Array2<f64>,
}

impl<'a> LinearProblem<'a> {
    pub fn new(design: &'a StandardizedDesign) -> Self {
        Self {
            cols: column_major(design.z.view()),
            design,
        }
    }

    pub fn fit(&self, spec: &PenaltySpec, opts: &SolverOptions, warm: Option<&Array1<f64>>) -> Result<FitModel> {
        let z = self.design;
        check_spec(spec, z.p())?;
        if let Some(w) = warm {
            if w.len() != z.p() {
                return Err(Error::Dimension("warm start length differs from p".into()));
            }
        }
        let sub = Subproblem {
            cols: &self.cols,
            target: z.y_centered.view(),
            weights: None,
            fit_intercept: false,
        };
        let beta0 = warm.cloned().unwrap_or_else(|| Array1::zeros(z.p()));
        let state = sub.solve(spec, beta0, 0.0, opts);
        let (beta_original, raw_intercept) = z.unstandardize(state.beta.view(), z.y_mean);
        let objective_value = linear_objective(z, spec, state.beta.view());
        let mut warnings = Vec::new();
        if !state.converged {
            warnings.push(format!("coordinate descent stopped after {} sweeps without converging", state.sweeps));
        }
        Ok(FitModel {
            family: Family::Gaussian,
            active_set: active(&state.beta),
            beta: state.beta,
            beta_original,
            intercept: raw_intercept,
            penalty: spec.clone(),
            objective_value,
            iterations: state.sweeps,
            converged: state.converged,
            column_means: z.column_means.clone(),
            column_scales: z.column_scales.clone(),
            warnings,
            trace: state.trace,
        })
    }

    /// Fits along a descending λ₁ grid with warm starts; λ₂ fixed by `spec`.
    pub fn path(&self, spec: &PenaltySpec, lambda1: &[f64], opts: &SolverOptions) -> Result<Vec<FitModel>> {
        let mut out = Vec::with_capacity(lambda1.len());
        let mut warm: Option<Array1<f64>> = None;
        for &l1 in lambda1 {
            let s = spec.with_lambdas(l1, spec.lambda2)?;
            let fit = self.fit(&s, opts, warm.as_ref())?;
            warm = Some(fit.beta.clone());
            out.push(fit);
        }
        Ok(out)
    }
}

/// Penalized least squares on a standardized design.
pub fn fit_linear(z: &StandardizedDesign, spec: &PenaltySpec, opts: &SolverOptions) -> Result<FitModel> {
    LinearProblem::new(z).fit(spec, opts, None)
}

fn check_binary(y: ArrayView1<'_, f64>) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(domain(format!("binomial response must be 0/1, found {v}")));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(domain("binomial response has a single class"));
    }
    Ok(())
}

/// Penalized logistic regression via IRLS around the coordinate-descent core.
pub struct LogisticProblem<'a> {
    design: &'a StandardizedDesign,
    y: Array1<f64>,
    cols: Array2<f64>,
}

impl<'a> LogisticProblem<'a> {
    /// `y` is the raw 0/1 response (not centered).
    pub fn new(design: &'a StandardizedDesign, y: ArrayView1<'_, f64>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::Dimension("response length differs from design rows".into()));
        }
        check_binary(y)?;
        Ok(Self {
            cols: column_major(design.z.view()),
            y: y.to_owned(),
            design,
        })
    }

    pub fn fit(
        &self,
        spec: &PenaltySpec,
        opts: &SolverOptions,
        warm: Option<(&Array1<f64>, f64)>,
    ) -> Result<FitModel> {
        let z = self.design;
        let p = z.p();
        check_spec(spec, p)?;
        let ybar = self.y.mean().unwrap_or(0.5);
        let (mut beta, mut b0) = match warm {
            Some((b, i)) if b.len() == p => (b.clone(), i),
            Some(_) => return Err(Error::Dimension("warm start length differs from p".into())),
            None => (Array1::zeros(p), (ybar / (1.0 - ybar)).ln()),
        };
        for &j in &spec.zero_set {
            beta[j] = 0.0;
        }
        let objective = |beta: &Array1<f64>, b0: f64| logistic_objective(z.z.view(), self.y.view(), spec, beta.view(), b0);
        let mut obj = objective(&beta, b0);
        let mut trace = opts.record_trace.then(|| vec![obj]);
        let mut warnings = Vec::new();
        let mut converged = false;
        let mut sweeps = 0;
        let mut outer = 0;

        while outer < opts.max_irls {
            outer += 1;
            let eta = z.z.dot(&beta) + b0;
            if eta.iter().all(|e| e.abs() > SEPARATION_ETA) {
                warnings.push("complete separation suspected: |eta| > 30 on every row".to_string());
                break;
            }
            let mut w = Array1::zeros(eta.len());
            let mut work = Array1::zeros(eta.len());
            for i in 0..eta.len() {
                let mu = sigmoid(eta[i]);
                let wi = (mu * (1.0 - mu)).max(IRLS_WEIGHT_FLOOR);
                w[i] = wi;
                work[i] = eta[i] + (self.y[i] - mu) / wi;
            }
            let sub = Subproblem {
                cols: &self.cols,
                target: work.view(),
                weights: Some(w.view()),
                fit_intercept: true,
            };
            let inner_opts = SolverOptions {
                record_trace: false,
                ..opts.clone()
            };
            let state = sub.solve(spec, beta.clone(), b0, &inner_opts);
            sweeps += state.sweeps;

            // step halving keeps the penalized objective nonincreasing
            let (mut cand_beta, mut cand_b0) = (state.beta, state.intercept);
            let mut cand_obj = objective(&cand_beta, cand_b0);
            let mut halvings = 0;
            while cand_obj > obj && halvings < 30 {
                cand_beta = (&cand_beta + &beta) * 0.5;
                cand_b0 = 0.5 * (cand_b0 + b0);
                cand_obj = objective(&cand_beta, cand_b0);
                halvings += 1;
            }
            if cand_obj > obj {
                warnings.push("IRLS step failed to decrease the objective".to_string());
                break;
            }
            let change = obj - cand_obj;
            let max_step = cand_beta
                .iter()
                .zip(beta.iter())
                .map(|(a, b)| (a - b).abs())
                .fold((cand_b0 - b0).abs(), f64::max);
            beta = cand_beta;
            b0 = cand_b0;
            obj = cand_obj;
            if let Some(t) = trace.as_mut() {
                t.push(obj);
            }
            if change <= opts.tol && max_step <= opts.tol.sqrt() {
                converged = state.converged;
                break;
            }
        }
        if !converged && warnings.is_empty() {
            warnings.push(format!("IRLS stopped after {outer} outer iterations without converging"));
        }

        let (beta_original, intercept) = z.unstandardize(beta.view(), b0);
        Ok(FitModel {
            family: Family::Binomial,
            active_set: active(&beta),
            beta,
            beta_original,
            intercept,
            penalty: spec.clone(),
            objective_value: obj,
            iterations: sweeps,
            converged,
            column_means: z.column_means.clone(),
            column_scales: z.column_scales.clone(),
            warnings,
            trace,
        })
    }

    /// Standardized-scale intercept of a fitted model, for warm starts.
    pub fn standardized_intercept(&self, model: &FitModel) -> f64 {
        model.intercept + model.beta_original.dot(&self.design.column_means)
    }
}

/// Penalized logistic regression on raw data (standardized internally).
pub fn fit_logistic(d: &DataMatrix, spec: &PenaltySpec, opts: &SolverOptions) -> Result<FitModel> {
    check_binary(d.y())?;
    let z = standardize(d)?;
    LogisticProblem::new(&z, d.y())?.fit(spec, opts, None)
}
