//! Reference implementations used to check the library. Each one takes a
//! different computational route from the code under test: dense matrices
//! instead of per-dimension sums, quadrature instead of closed forms, SVD
//! instead of a covariance eigendecomposition.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Square-root Mahalanobis distance through an explicit inverse of the dense
/// covariance matrix.
pub fn dense_mahalanobis(x: &[f64], mean: &[f64], variance: &[f64]) -> f64 {
    let cov = DMatrix::from_diagonal(&DVector::from_column_slice(variance));
    let inv = cov.try_inverse().expect("covariance is invertible");
    let d = DVector::from_column_slice(x) - DVector::from_column_slice(mean);
    (d.transpose() * inv * &d)[(0, 0)].sqrt()
}

/// Bhattacharyya distance from the matrix closed form with determinants and
/// a linear solve.
pub fn dense_bhattacharyya(ma: &[f64], va: &[f64], mb: &[f64], vb: &[f64]) -> f64 {
    let sa = DMatrix::from_diagonal(&DVector::from_column_slice(va));
    let sb = DMatrix::from_diagonal(&DVector::from_column_slice(vb));
    let avg = (&sa + &sb) * 0.5;
    let d = DVector::from_column_slice(ma) - DVector::from_column_slice(mb);
    let solved = avg
        .clone()
        .lu()
        .solve(&d)
        .expect("average covariance is invertible");
    let quad = d.dot(&solved);
    quad / 8.0 + 0.5 * (avg.determinant() / (sa.determinant() * sb.determinant()).sqrt()).ln()
}

fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// `-ln ∫ sqrt(p q)` by composite Simpson quadrature over a window that
/// holds all but a negligible tail of both densities.
pub fn integrated_bhattacharyya_1d(ma: f64, va: f64, mb: f64, vb: f64) -> f64 {
    let reach = 40.0 * va.sqrt().max(vb.sqrt());
    let lo = ma.min(mb) - reach;
    let hi = ma.max(mb) + reach;
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| (normal_pdf(x, ma, va) * normal_pdf(x, mb, vb)).sqrt();
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let x = lo + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    -(sum * h / 3.0).ln()
}

/// Principal axes from the SVD of the centred data matrix. Returns the mean,
/// the leading `k` right singular vectors with their largest-magnitude
/// entry made positive, and the variances `s^2 / (n - 1)`.
pub fn svd_pca(samples: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = samples.len();
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n as f64;
        }
    }
    let centred = DMatrix::from_fn(n, d, |i, j| samples[i][j] - mean[j]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut row: Vec<f64> = v_t.row(i).iter().copied().collect();
        let lead = row
            .iter()
            .copied()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        let s = svd.singular_values[i];
        variances.push(s * s / (n as f64 - 1.0));
    }
    (mean, components, variances)
}

/// Sample variance with the `n - 1` denominator, computed in two passes.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
