//! Correlation kernels, standardization and the two-predictor R².
//!
//! Everything here is a pure function of its inputs. Variances use the
//! population (1/n) convention, which only matters for [`standardize`]; the
//! correlation statistics are scale free.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs whose predictor correlation is this close to ±1 are treated as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Design matrix plus response.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    x: Array2<f64>,
    y: Array1<f64>,
    column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but response has length {}",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Degenerate {
                what: "non-finite value in design or response".into(),
            });
        }
        Ok(Self {
            x,
            y,
            column_names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Column label, falling back to `x{j+1}`.
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    /// Rows selected by index, keeping column names.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        DataMatrix {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            column_names: self.column_names.clone(),
        }
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>, Option<Vec<String>>) {
        (self.x, self.y, self.column_names)
    }
}

/// Column-standardized design with centered response.
///
/// Each column of `z` has mean zero and `(1/n) Σ z² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedDesign {
    pub z: Array2<f64>,
    pub column_means: Array1<f64>,
    pub column_scales: Array1<f64>,
    pub y_mean: f64,
    pub y_centered: Array1<f64>,
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    /// Maps standardized-scale coefficients back to the raw scale, returning
    /// `(beta_original, intercept)`.
    pub fn unstandardize(&self, beta: ArrayView1<'_, f64>, intercept: f64) -> (Array1<f64>, f64) {
        let beta_original = &beta / &self.column_scales;
        let shift = beta_original.dot(&self.column_means);
        (beta_original, intercept - shift)
    }

    /// Reconstructs the raw design `z * scale + mean`.
    pub fn reconstruct(&self) -> Array2<f64> {
        &self.z * &self.column_scales + &self.column_means
    }
}

fn centered(v: ArrayView1<'_, f64>) -> (Array1<f64>, f64) {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let c = v.mapv(|t| t - mean);
    let ss = c.dot(&c);
    (c, ss)
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("vectors of length {a} and {b}")));
    }
    if a < 2 {
        return Err(Error::Degenerate {
            what: format!("correlation needs at least 2 observations, got {a}"),
        });
    }
    Ok(())
}

/// Relative sum-of-squares floor below which a centered vector counts as constant.
fn is_constant(ss: f64, v: ArrayView1<'_, f64>) -> bool {
    let scale = v.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    ss <= (v.len() as f64) * (scale * 1e-14).powi(2) || ss == 0.0
}

/// Pearson sample correlation.
pub fn pearson_corr(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let (ca, ssa) = centered(a);
    let (cb, ssb) = centered(b);
    if is_constant(ssa, a) || is_constant(ssb, b) {
        return Err(Error::Degenerate {
            what: "zero-variance argument to pearson_corr".into(),
        });
    }
    Ok((ca.dot(&cb) / (ssa.sqrt() * ssb.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving the average of the positions they span.
pub fn midranks(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = Array1::zeros(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end are 0-based; ranks (start+1)..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of midranks.
pub fn spearman_rho(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let ra = midranks(a);
    let rb = midranks(b);
    pearson_corr(ra.view(), rb.view()).map_err(|_| Error::Degenerate {
        what: "all ranks tied in spearman_rho argument".into(),
    })
}

/// Absolute Pearson correlation of every column with the response.
pub fn marginal_correlations(d: &DataMatrix) -> Result<Array1<f64>> {
    let (yc, ssy) = centered(d.y());
    if is_constant(ssy, d.y()) {
        return Err(Error::Degenerate {
            what: "response has zero variance".into(),
        });
    }
    let ynorm = ssy.sqrt();
    let mut w = Array1::zeros(d.p());
    for (j, col) in d.x().axis_iter(Axis(1)).enumerate() {
        let (cx, ssx) = centered(col);
        if is_constant(ssx, col) {
            return Err(Error::ZeroVariance { column: j });
        }
        w[j] = (cx.dot(&yc) / (ssx.sqrt() * ynorm)).abs().min(1.0);
    }
    Ok(w)
}

/// Centers every column and scales it to unit Euclidean norm, so that the
/// Gram matrix of the result is the sample correlation matrix.
pub fn unit_columns(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut out = x.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / col.len() as f64;
        col.mapv_inplace(|t| t - mean);
        let ss = col.dot(&col);
        if is_constant(ss, x.column(j)) {
            return Err(Error::ZeroVariance { column: j });
        }
        let norm = ss.sqrt();
        col.mapv_inplace(|t| t / norm);
    }
    Ok(out)
}

/// Centered, unit-norm copy of a single vector; `None` when it is constant.
pub fn unit_vector(v: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let (c, ss) = centered(v);
    if is_constant(ss, v) {
        return None;
    }
    Some(c / ss.sqrt())
}

/// R² of `y ~ 1 + x_i + x_j` from the three pairwise correlations.
///
/// Returns `None` when the predictors are collinear.
pub fn r_squared_from_correlations(r_iy: f64, r_jy: f64, r_ij: f64) -> Option<f64> {
    let det = 1.0 - r_ij * r_ij;
    if r_ij.abs() >= 1.0 - COLLINEAR_TOL || det <= 0.0 {
        return None;
    }
    let r2 = (r_iy * r_iy + r_jy * r_jy - 2.0 * r_iy * r_jy * r_ij) / det;
    Some(r2.clamp(0.0, 1.0))
}

/// Coefficient of determination of the least-squares fit of y on
/// (1, x_i, x_j).
pub fn pairwise_r_squared(d: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(crate::error::domain("pairwise_r_squared needs i != j"));
    }
    if i >= d.p() || j >= d.p() {
        return Err(Error::Dimension(format!(
            "pair ({i}, {j}) out of range for p = {}",
            d.p()
        )));
    }
    if d.n() < 4 {
        return Err(Error::Degenerate {
            what: format!("pairwise R² needs n >= 4, got {}", d.n()),
        });
    }
    let xi = unit_vector(d.column(i)).ok_or(Error::ZeroVariance { column: i })?;
    let xj = unit_vector(d.column(j)).ok_or(Error::ZeroVariance { column: j })?;
    let y = unit_vector(d.y()).ok_or_else(|| Error::Degenerate {
        what: "response has zero variance".into(),
    })?;
    let r_ij = xi.dot(&xj).clamp(-1.0, 1.0);
    r_squared_from_correlations(xi.dot(&y), xj.dot(&y), r_ij).ok_or(Error::SingularPair { i, j })
}

/// Centers and scales every column to unit (1/n) variance; centers y.
pub fn standardize(d: &DataMatrix) -> Result<StandardizedDesign> {
    let n = d.n();
    if n == 0 {
        return Err(Error::Degenerate {
            what: "empty design".into(),
        });
    }
    let nf = n as f64;
    let p = d.p();
    let mut z = d.x().to_owned();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::zeros(p);
    for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / nf;
        col.mapv_inplace(|t| t - mean);
        let ss = col.dot(&col);
        if is_constant(ss, d.column(j)) {
            return Err(Error::ZeroVariance { column: j });
        }
        let scale = (ss / nf).sqrt();
        col.mapv_inplace(|t| t / scale);
        means[j] = mean;
        scales[j] = scale;
    }
    let y_mean = d.y().sum() / nf;
    let y_centered = d.y().mapv(|t| t - y_mean);
    Ok(StandardizedDesign {
        z,
        column_means: means,
        column_scales: scales,
        y_mean,
        y_centered,
    })
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and a
/// continuous reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            let above = (k + 1) as f64 / m - f;
            let below = f - k as f64 / m;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, aview1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn pearson_examples() {
        let a = aview1(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(pearson_corr(a, aview1(&[1.0, 2.0, 3.0])).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson_corr(a, aview1(&[3.0, 2.0, 1.0])).unwrap(), -1.0, epsilon = 1e-15);
        let r = pearson_corr(aview1(&[1.0, 2.0, 3.0, 4.0]), aview1(&[1.0, 3.0, 2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(r, 0.8, epsilon = 1e-14);
    }

    #[test]
    fn pearson_rejects_constant() {
        let err = pearson_corr(aview1(&[2.0, 2.0, 2.0]), aview1(&[1.0, 2.0, 3.0]));
        assert!(matches!(err, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn midranks_average_ties() {
        let r = midranks(aview1(&[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(r, array![1.0, 2.5, 2.5, 4.0]);
        let r = midranks(aview1(&[3.0, 1.0, 3.0, 3.0]));
        assert_eq!(r, array![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn spearman_examples() {
        let a = aview1(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(spearman_rho(a, aview1(&[3.0, 2.0, 1.0])).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            spearman_rho(aview1(&[10.0, 20.0, 30.0]), aview1(&[1.0, 4.0, 9.0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spearman_with_ties_matches_brute_force_ranking() {
        // brute-force: rank by counting smaller and equal elements
        fn rank_oracle(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|&x| {
                    let less = v.iter().filter(|&&t| t < x).count() as f64;
                    let eq = v.iter().filter(|&&t| t == x).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        }
        let a = [1.0, 2.0, 2.0, 4.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let ra = rank_oracle(&a);
        let rb = rank_oracle(&b);
        assert_eq!(ra, vec![1.0, 2.5, 2.5, 4.0]);
        let ma = ra.iter().sum::<f64>() / 4.0;
        let mb = rb.iter().sum::<f64>() / 4.0;
        let num: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let da: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
        let db: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
        let expected = num / (da * db).sqrt();
        // 4.5 / sqrt(4.5 * 5)
        assert_abs_diff_eq!(expected, 0.948_683_298_050_513_8, epsilon = 1e-15);
        let got = spearman_rho(aview1(&a), aview1(&b)).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-14);
    }

    #[test]
    fn spearman_rejects_all_ties() {
        assert!(spearman_rho(aview1(&[5.0, 5.0, 5.0]), aview1(&[1.0, 2.0, 3.0])).is_err());
    }

    fn seeded_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
    }

    #[test]
    fn marginal_correlations_cases() {
        let x = seeded_matrix(10, 4, 3);
        let y = x.column(2).to_owned();
        let d = DataMatrix::new(x.clone(), y).unwrap();
        let w = marginal_correlations(&d).unwrap();
        assert_abs_diff_eq!(w[2], 1.0, epsilon = 1e-14);

        let y = x.column(0).mapv(|t| t * 1.5 - 0.3) + x.column(3);
        let d = DataMatrix::new(x.clone(), y.clone()).unwrap();
        let w = marginal_correlations(&d).unwrap();
        for j in 0..4 {
            let r = pearson_corr(x.column(j), y.view()).unwrap().abs();
            assert_abs_diff_eq!(w[j], r, epsilon = 1e-14);
        }
    }

    #[test]
    fn marginal_correlation_zero_for_orthogonal_column() {
        let x = array![[1.0, 1.0], [-1.0, 2.0], [1.0, 3.0], [-1.0, 4.0]];
        // y orthogonal to centered column 0
        let y = array![1.0, 1.0, -1.0, -1.0];
        let d = DataMatrix::new(x, y).unwrap();
        assert_abs_diff_eq!(marginal_correlations(&d).unwrap()[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_correlations_name_bad_column() {
        let x = array![[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]];
        let d = DataMatrix::new(x, array![1.0, 0.0, 2.0]).unwrap();
        assert!(matches!(marginal_correlations(&d), Err(Error::ZeroVariance { column: 1 })));
    }

    #[test]
    fn r_squared_exact_and_orthogonal() {
        let x = seeded_matrix(12, 2, 9);
        let y = x.column(0).mapv(|t| 2.0 * t) - x.column(1) + 5.0;
        let d = DataMatrix::new(x, y).unwrap();
        assert_abs_diff_eq!(pairwise_r_squared(&d, 0, 1).unwrap(), 1.0, epsilon = 1e-12);

        let x = array![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]];
        let y = array![1.0, -1.0, -1.0, 1.0];
        let d = DataMatrix::new(x, y).unwrap();
        assert_abs_diff_eq!(pairwise_r_squared(&d, 0, 1).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn r_squared_matches_normal_equations_oracle() {
        // explicit 3x3 inversion of [1 xi xj]'[1 xi xj]
        fn inv3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            let mut out = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                    let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                    out[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
                }
            }
            out
        }
        let x = seeded_matrix(8, 2, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let y = Array1::from_shape_fn(8, |i| x[[i, 0]] - 0.4 * x[[i, 1]] + rng.sample::<f64, _>(StandardNormal));
        let rows: Vec<[f64; 3]> = (0..8).map(|i| [1.0, x[[i, 0]], x[[i, 1]]]).collect();
        let mut xtx = [[0.0; 3]; 3];
        let mut xty = [0.0; 3];
        for (row, &yi) in rows.iter().zip(y.iter()) {
            for a in 0..3 {
                xty[a] += row[a] * yi;
                for b in 0..3 {
                    xtx[a][b] += row[a] * row[b];
                }
            }
        }
        let inv = inv3(xtx);
        let coef: Vec<f64> = (0..3).map(|a| (0..3).map(|b| inv[a][b] * xty[b]).sum()).collect();
        let ybar = y.mean().unwrap();
        let sse: f64 = rows
            .iter()
            .zip(y.iter())
            .map(|(r, &yi)| (yi - (coef[0] + coef[1] * r[1] + coef[2] * r[2])).powi(2))
            .sum();
        let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
        let oracle = 1.0 - sse / sst;

        let d = DataMatrix::new(x, y).unwrap();
        assert_abs_diff_eq!(pairwise_r_squared(&d, 0, 1).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn r_squared_rejects_collinear_pair_and_small_n() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [5.0, 10.0]];
        let d = DataMatrix::new(x, array![1.0, 3.0, 2.0, 5.0]).unwrap();
        assert!(matches!(pairwise_r_squared(&d, 0, 1), Err(Error::SingularPair { i: 0, j: 1 })));

        let x = array![[1.0, 2.0], [2.0, 1.0], [3.0, 7.0]];
        let d = DataMatrix::new(x, array![1.0, 3.0, 2.0]).unwrap();
        assert!(pairwise_r_squared(&d, 0, 1).is_err());
    }

    #[test]
    fn standardize_invariants() {
        let mut x = seeded_matrix(30, 3, 5);
        // column with mean 10 and (1/n) sd 2
        let col: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 12.0 } else { 8.0 }).collect();
        x.column_mut(1).assign(&Array1::from(col));
        let d = DataMatrix::new(x.clone(), Array1::from_shape_fn(30, |i| i as f64)).unwrap();
        let s = standardize(&d).unwrap();
        assert_abs_diff_eq!(s.column_means[1], 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.column_scales[1], 2.0, epsilon = 1e-12);
        for j in 0..3 {
            let c = s.z.column(j);
            assert!(c.mean().unwrap().abs() <= 1e-10);
            assert!((c.dot(&c) / 30.0 - 1.0).abs() <= 1e-10);
        }
        let back = s.reconstruct();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        assert_abs_diff_eq!(s.y_mean, 14.5, epsilon = 1e-12);

        // already standardized input is a fixed point
        let d2 = DataMatrix::new(s.z.clone(), s.y_centered.clone()).unwrap();
        let s2 = standardize(&d2).unwrap();
        for (a, b) in s2.z.iter().zip(s.z.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for &sc in s2.column_scales.iter() {
            assert_abs_diff_eq!(sc, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = array![[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]];
        let d = DataMatrix::new(x, array![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(standardize(&d), Err(Error::ZeroVariance { column: 1 })));
    }

    #[test]
    fn ks_distance_of_uniform_grid() {
        let s: Vec<f64> = (0..10).map(|k| (k as f64 + 0.5) / 10.0).collect();
        assert_abs_diff_eq!(ks_distance(&s, |x| x.clamp(0.0, 1.0)), 0.05, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn correlations_symmetric_bounded_and_affine_invariant(
            a in prop::collection::vec(-100.0f64..100.0, 6),
            b in prop::collection::vec(-100.0f64..100.0, 6),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let (a, b) = (Array1::from(a), Array1::from(b));
            if let (Ok(r1), Ok(r2)) = (pearson_corr(a.view(), b.view()), pearson_corr(b.view(), a.view())) {
                prop_assert!((r1 - r2).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&r1));
                let moved = a.mapv(|t| scale * t + shift);
                let r3 = pearson_corr(moved.view(), b.view()).unwrap();
                prop_assert!((r1 - r3).abs() < 1e-9);
            }
            if let Ok(s1) = spearman_rho(a.view(), b.view()) {
                let s2 = spearman_rho(b.view(), a.view()).unwrap();
                prop_assert!((s1 - s2).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&s1));
                let cubed = a.mapv(|t| t.powi(3) + t);
                let s3 = spearman_rho(cubed.view(), b.view()).unwrap();
                prop_assert!((s1 - s3).abs() < 1e-12);
            }
        }

        #[test]
        fn pair_r_squared_symmetric_and_dominates_marginals(seed in 0u64..10_000) {
            let x = seeded_matrix(15, 2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let y = Array1::from_shape_fn(15, |i| 0.7 * x[[i, 0]] + rng.sample::<f64, _>(StandardNormal));
            let d = DataMatrix::new(x.clone(), y.clone()).unwrap();
            let r01 = pairwise_r_squared(&d, 0, 1).unwrap();
            let r10 = pairwise_r_squared(&d, 1, 0).unwrap();
            prop_assert!((r01 - r10).abs() < 1e-14);
            let c0 = pearson_corr(x.column(0), y.view()).unwrap();
            let c1 = pearson_corr(x.column(1), y.view()).unwrap();
            prop_assert!(r01 >= c0.powi(2).max(c1.powi(2)) - 1e-10);
        }
    }
}
