//! Marginal (SIS) screening followed by pairwise screening of the survivors.
//!
//! A pair `(i, j)` of SIS survivors enters `g` when its squared correlation
//! clears the extreme-value threshold and, for linear models, the R² of
//! `y ~ 1 + x_i + x_j` clears `r0`. Indices are 0-based throughout.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laws::LawThresholds;
use crate::stats::{
    marginal_correlations, midranks, r_squared_from_correlations, unit_vector, DataMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScreenMode {
    #[default]
    Linear,
    Glm,
}

/// Which dimension feeds the threshold computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdDimension {
    /// The full design width `p`.
    #[default]
    Ambient,
    /// The SIS subset size `|m|`.
    Subset,
}

/// Overrides the pair screen outright. Used for the SIS-LASSO / SIS-Ridge
/// reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcedPairs {
    Empty,
    AllWithinM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScreenWarning {
    SisClamped { requested: usize, p: usize },
    SpearmanDimension { log_p: f64, n_cbrt: f64 },
    SpearmanSaturated,
    DegenerateColumn { column: usize },
    CollinearPair { i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub alpha: f64,
    pub delta: f64,
    pub method: CorrelationMethod,
    pub mode: ScreenMode,
    /// SIS subset size; `None` means `floor(n / ln n)`.
    pub sis_size: Option<usize>,
    /// Screen all `p(p-1)/2` pairs rather than only pairs within `m`.
    pub full_pairs: bool,
    pub threshold_dimension: ThresholdDimension,
    /// Disable to screen on correlation alone in linear mode.
    pub r2_screen: bool,
    pub force: Option<ForcedPairs>,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            delta: 0.1,
            method: CorrelationMethod::Pearson,
            mode: ScreenMode::Linear,
            sis_size: None,
            full_pairs: false,
            threshold_dimension: ThresholdDimension::Ambient,
            r2_screen: true,
            force: None,
        }
    }
}

/// Result of the full screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSets {
    pub m: Vec<usize>,
    pub g: Vec<(usize, usize)>,
    pub c: Vec<usize>,
    pub thresholds: LawThresholds,
    pub method: CorrelationMethod,
    pub mode: ScreenMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ScreenWarning>,
}

impl ScreenSets {
    /// `C ∩ M`, ascending.
    pub fn paired_in_m(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.c.iter().copied().filter(|j| self.m.contains(j)).collect();
        out.sort_unstable();
        out
    }

    /// `C^c ∩ M`, ascending.
    pub fn unpaired_in_m(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.m.iter().copied().filter(|j| !self.c.contains(j)).collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SisSelection {
    /// Survivors ordered by decreasing |corr(x_j, y)|.
    pub m: Vec<usize>,
    pub warning: Option<ScreenWarning>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairScreen {
    pub g: Vec<(usize, usize)>,
    pub warnings: Vec<ScreenWarning>,
}

/// `floor(n / ln n)`, at least 1.
pub fn default_sis_size(n: usize) -> usize {
    if n < 3 {
        return n.max(1);
    }
    ((n as f64 / (n as f64).ln()).floor() as usize).max(1)
}

pub fn sis_screen(d: &DataMatrix, k: Option<usize>) -> Result<SisSelection> {
    let w = marginal_correlations(d)?;
    Ok(top_k(&w, k.unwrap_or_else(|| default_sis_size(d.n()))))
}

fn top_k(w: &Array1<f64>, k: usize) -> SisSelection {
    let p = w.len();
    let (k, warning) = if k > p {
        (p, Some(ScreenWarning::SisClamped { requested: k, p }))
    } else {
        (k, None)
    };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| w[j].total_cmp(&w[i]).then(i.cmp(&j)));
    order.truncate(k);
    SisSelection { m: order, warning }
}

/// Column transform feeding the pair statistic.
fn statistic_columns(
    d: &DataMatrix,
    idx: &[usize],
    method: CorrelationMethod,
) -> (Vec<Option<Array1<f64>>>, Vec<Option<Array1<f64>>>) {
    let pearson: Vec<Option<Array1<f64>>> = idx.iter().map(|&j| unit_vector(d.column(j))).collect();
    let stat = match method {
        CorrelationMethod::Pearson => pearson.clone(),
        CorrelationMethod::Spearman => idx
            .iter()
            .map(|&j| unit_vector(midranks(d.column(j)).view()))
            .collect(),
    };
    (pearson, stat)
}

fn stack(cols: &[Option<Array1<f64>>], n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, cols.len()));
    for (k, c) in cols.iter().enumerate() {
        if let Some(c) = c {
            out.column_mut(k).assign(c);
        }
    }
    out
}

fn screen_pairs(
    d: &DataMatrix,
    m: &[usize],
    thresholds: &LawThresholds,
    method: CorrelationMethod,
    use_r2: bool,
) -> Result<PairScreen> {
    if m.is_empty() {
        return Err(domain("pair screen needs a nonempty index set"));
    }
    if let Some(&bad) = m.iter().find(|&&j| j >= d.p()) {
        return Err(Error::Dimension(format!("index {bad} out of range for p = {}", d.p())));
    }
    let mut out = PairScreen::default();
    let cutoff = match method {
        CorrelationMethod::Pearson => thresholds.t_star,
        CorrelationMethod::Spearman => match thresholds.s_star {
            Some(s) => s,
            None => {
                out.warnings.push(ScreenWarning::SpearmanSaturated);
                return Ok(out);
            }
        },
    };
    if method == CorrelationMethod::Spearman {
        let log_p = (thresholds.p as f64).ln();
        let n_cbrt = (d.n() as f64).cbrt();
        if log_p > n_cbrt {
            out.warnings.push(ScreenWarning::SpearmanDimension { log_p, n_cbrt });
        }
    }

    let mut idx: Vec<usize> = m.to_vec();
    idx.sort_unstable();
    idx.dedup();
    let (pearson, stat) = statistic_columns(d, &idx, method);
    for (k, col) in pearson.iter().enumerate() {
        if col.is_none() {
            out.warnings.push(ScreenWarning::DegenerateColumn { column: idx[k] });
        }
    }
    let n = d.n();
    let stat_gram = {
        let s = stack(&stat, n);
        s.t().dot(&s)
    };
    let (pearson_gram, y_corr) = if use_r2 {
        let u = stack(&pearson, n);
        let y = unit_vector(d.y()).ok_or_else(|| Error::Degenerate {
            what: "response has zero variance".into(),
        })?;
        (Some(u.t().dot(&u)), Some(u.t().dot(&y)))
    } else {
        (None, None)
    };

    for a in 0..idx.len() {
        if pearson[a].is_none() || stat[a].is_none() {
            continue;
        }
        for b in (a + 1)..idx.len() {
            if pearson[b].is_none() || stat[b].is_none() {
                continue;
            }
            let r = stat_gram[[a, b]].clamp(-1.0, 1.0);
            if r * r < cutoff {
                continue;
            }
            if let (Some(pg), Some(yc)) = (&pearson_gram, &y_corr) {
                let r_ij = pg[[a, b]].clamp(-1.0, 1.0);
                let r2 = match r_squared_from_correlations(yc[a], yc[b], r_ij) {
                    Some(v) => v,
                    None => {
                        // rank-deficient pair: the fit reduces to one predictor
                        out.warnings.push(ScreenWarning::CollinearPair { i: idx[a], j: idx[b] });
                        yc[a].powi(2).max(yc[b].powi(2))
                    }
                };
                if r2 < thresholds.r0 {
                    continue;
                }
            }
            out.g.push((idx[a], idx[b]));
        }
    }
    out.g.sort_unstable();
    Ok(out)
}

/// Linear-model pair screen: correlation threshold and R² threshold.
pub fn pair_screen(
    d: &DataMatrix,
    m: &[usize],
    thresholds: &LawThresholds,
    method: CorrelationMethod,
) -> Result<PairScreen> {
    screen_pairs(d, m, thresholds, method, true)
}

/// GLM pair screen: correlation threshold only.
pub fn glm_pair_screen(
    d: &DataMatrix,
    m: &[usize],
    thresholds: &LawThresholds,
    method: CorrelationMethod,
) -> Result<PairScreen> {
    screen_pairs(d, m, thresholds, method, false)
}

/// Union of the pair members, ascending.
pub fn paired_set(g: &[(usize, usize)]) -> Vec<usize> {
    let mut c: Vec<usize> = g.iter().flat_map(|&(i, j)| [i, j]).collect();
    c.sort_unstable();
    c.dedup();
    c
}

fn all_pairs(idx: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut g = Vec::new();
    for a in 0..sorted.len() {
        for b in (a + 1)..sorted.len() {
            g.push((sorted[a], sorted[b]));
        }
    }
    g
}

/// SIS followed by the pair screen appropriate to `cfg.mode`.
pub fn screen(d: &DataMatrix, cfg: &ScreenConfig) -> Result<ScreenSets> {
    let sis = sis_screen(d, cfg.sis_size)?;
    let mut warnings: Vec<ScreenWarning> = sis.warning.into_iter().collect();
    let dim = match cfg.threshold_dimension {
        ThresholdDimension::Ambient => d.p(),
        ThresholdDimension::Subset => sis.m.len(),
    };
    let thresholds = LawThresholds::new(cfg.alpha, cfg.delta, d.n(), dim.max(2))?;
    let g = match cfg.force {
        Some(ForcedPairs::Empty) => Vec::new(),
        Some(ForcedPairs::AllWithinM) => all_pairs(&sis.m),
        None => {
            let candidates: Vec<usize> = if cfg.full_pairs {
                (0..d.p()).collect()
            } else {
                sis.m.clone()
            };
            let use_r2 = cfg.mode == ScreenMode::Linear && cfg.r2_screen;
            let ps = screen_pairs(d, &candidates, &thresholds, cfg.method, use_r2)?;
            warnings.extend(ps.warnings);
            ps.g
        }
    };
    let c = paired_set(&g);
    Ok(ScreenSets {
        m: sis.m,
        g,
        c,
        thresholds,
        method: cfg.method,
        mode: cfg.mode,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
    }

    #[test]
    fn default_subset_size() {
        assert_eq!(default_sis_size(100), 21);
        assert_eq!(default_sis_size(500), 80);
    }

    #[test]
    fn sis_picks_exact_response_column() {
        let x = gaussian(20, 3, 1);
        let y = x.column(2).to_owned();
        let d = DataMatrix::new(x, y).unwrap();
        let s = sis_screen(&d, Some(1)).unwrap();
        assert_eq!(s.m, vec![2]);
        assert!(s.warning.is_none());
    }

    #[test]
    fn sis_ties_go_to_lowest_index() {
        let s = top_k(&array![0.5, 0.5, 0.1], 1);
        assert_eq!(s.m, vec![0]);
        let s = top_k(&array![0.1, 0.5, 0.5, 0.7], 3);
        assert_eq!(s.m, vec![3, 1, 2]);
    }

    #[test]
    fn sis_clamps_with_warning() {
        let x = gaussian(20, 3, 2);
        let d = DataMatrix::new(x.clone(), x.column(0).to_owned()).unwrap();
        let s = sis_screen(&d, Some(10)).unwrap();
        assert_eq!(s.m.len(), 3);
        assert_eq!(s.warning, Some(ScreenWarning::SisClamped { requested: 10, p: 3 }));
    }

    #[test]
    fn paired_set_cases() {
        assert!(paired_set(&[]).is_empty());
        assert_eq!(paired_set(&[(1, 2), (2, 7)]), vec![1, 2, 7]);
        let g = [(0, 4), (3, 9), (4, 9)];
        assert!(paired_set(&g).len() <= 2 * g.len());
    }

    fn duplicate_design() -> DataMatrix {
        let mut x = gaussian(60, 8, 5);
        let dup = x.column(1).to_owned();
        x.column_mut(4).assign(&dup);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y = Array1::from_shape_fn(60, |i| x[[i, 1]] + 0.1 * rng.sample::<f64, _>(StandardNormal));
        DataMatrix::new(x, y).unwrap()
    }

    #[test]
    fn duplicate_columns_pair_up() {
        let d = duplicate_design();
        let t = LawThresholds::new(0.05, 0.1, d.n(), d.p()).unwrap();
        let m: Vec<usize> = (0..8).collect();
        let g = pair_screen(&d, &m, &t, CorrelationMethod::Pearson).unwrap();
        assert!(g.g.contains(&(1, 4)));
        assert!(g.warnings.contains(&ScreenWarning::CollinearPair { i: 1, j: 4 }));
        let g1 = glm_pair_screen(&d, &m, &t, CorrelationMethod::Pearson).unwrap();
        assert!(g1.g.contains(&(1, 4)));
        assert!(g.g.iter().all(|pair| g1.g.contains(pair)));
        let gs = pair_screen(&d, &m, &t, CorrelationMethod::Spearman).unwrap();
        assert!(gs.g.contains(&(1, 4)));
    }

    #[test]
    fn degenerate_column_is_reported_and_skipped() {
        let mut x = gaussian(40, 5, 8);
        x.column_mut(3).fill(2.0);
        let y = x.column(0).to_owned();
        let d = DataMatrix::new(x, y).unwrap();
        let t = LawThresholds::new(0.05, 0.1, 40, 5).unwrap();
        let g = glm_pair_screen(&d, &[0, 1, 2, 3, 4], &t, CorrelationMethod::Pearson).unwrap();
        assert!(g.warnings.contains(&ScreenWarning::DegenerateColumn { column: 3 }));
        assert!(g.g.iter().all(|&(i, j)| i != 3 && j != 3));
    }

    #[test]
    fn monotone_in_alpha_and_delta() {
        // correlated block so some pairs sit near the thresholds
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let p = 30;
        let f: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x = Array2::from_shape_fn((n, p), |(i, j)| {
            let load = 0.15 * (j % 6) as f64;
            load * f[i] + rng.sample::<f64, _>(StandardNormal)
        });
        let y = Array1::from_shape_fn(n, |i| f[i] + rng.sample::<f64, _>(StandardNormal));
        let d = DataMatrix::new(x, y).unwrap();
        let m: Vec<usize> = (0..p).collect();
        let mut last = 0;
        for alpha in [0.001, 0.05, 0.3, 0.9] {
            let t = LawThresholds::new(alpha, 0.1, n, p).unwrap();
            let g = glm_pair_screen(&d, &m, &t, CorrelationMethod::Pearson).unwrap().g;
            assert!(g.len() >= last);
            last = g.len();
        }
        let mut last = usize::MAX;
        for delta in [0.01, 0.1, 1.0, 5.0] {
            let t = LawThresholds::new(0.9, delta, n, p).unwrap();
            let g = pair_screen(&d, &m, &t, CorrelationMethod::Pearson).unwrap().g;
            assert!(g.len() <= last);
            last = g.len();
        }
    }

    #[test]
    fn forced_pairs_and_set_algebra() {
        let d = duplicate_design();
        let cfg = ScreenConfig {
            sis_size: Some(4),
            force: Some(ForcedPairs::AllWithinM),
            ..Default::default()
        };
        let s = screen(&d, &cfg).unwrap();
        assert_eq!(s.g.len(), 6);
        assert_eq!(s.paired_in_m().len(), 4);
        assert!(s.unpaired_in_m().is_empty());
        let cfg = ScreenConfig {
            sis_size: Some(4),
            force: Some(ForcedPairs::Empty),
            ..Default::default()
        };
        let s = screen(&d, &cfg).unwrap();
        assert!(s.g.is_empty() && s.c.is_empty());
        assert_eq!(s.unpaired_in_m().len(), 4);
    }

    #[test]
    fn screen_sets_invariants_and_json_shape() {
        let d = duplicate_design();
        let s = screen(&d, &ScreenConfig { sis_size: Some(5), ..Default::default() }).unwrap();
        for &(i, j) in &s.g {
            assert!(i < j && s.m.contains(&i) && s.m.contains(&j));
        }
        for j in &s.c {
            assert!(s.g.iter().any(|&(a, b)| a == *j || b == *j));
        }
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["method"], "pearson");
        assert!(v["g"][0].is_array());
        assert!(v["thresholds"]["t_star"].is_number());
    }

    #[test]
    fn spearman_dimension_warning() {
        let x = gaussian(30, 200, 12);
        let y = x.column(0).to_owned();
        let d = DataMatrix::new(x, y).unwrap();
        let cfg = ScreenConfig {
            method: CorrelationMethod::Spearman,
            ..Default::default()
        };
        let s = screen(&d, &cfg).unwrap();
        assert!(s
            .warnings
            .iter()
            .any(|w| matches!(w, ScreenWarning::SpearmanDimension { .. } | ScreenWarning::SpearmanSaturated)));
    }
}
