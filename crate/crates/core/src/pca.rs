//! Batch PCA used to shrink raw descriptors before they reach the mixture.
//!
//! Fitting diagonalizes the unbiased sample covariance. Components are
//! ordered by decreasing explained variance, and each one is sign-fixed so
//! that its largest-magnitude entry is positive. Output is not whitened.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One orthonormal row per output dimension, each of input length.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dimension(&self) -> usize {
        self.components.len()
    }

    /// Fits the top `d_out` principal directions of `samples`.
    ///
    /// Directions with (numerically) zero variance are still returned as an
    /// orthonormal completion, with zero explained variance and a warning.
    pub fn fit<S: AsRef<[f64]>>(samples: &[S], d_out: usize) -> Result<Self> {
        if d_out == 0 {
            return Err(Error::InvalidConfig {
                field: "dimension",
                reason: "output dimension must be at least 1".into(),
            });
        }
        if samples.len() < d_out.max(2) {
            return Err(Error::NotEnoughSamples {
                needed: d_out.max(2),
                found: samples.len(),
            });
        }
        let d_in = samples[0].as_ref().len();
        if d_in < d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                found: d_in,
            });
        }
        let n = samples.len();
        let mut data = DMatrix::<f64>::zeros(n, d_in);
        for (r, s) in samples.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != d_in {
                return Err(Error::BadRow {
                    row: r + 1,
                    message: format!("expected {d_in} values, found {}", s.len()),
                });
            }
            if let Some(index) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            data.row_mut(r).copy_from_slice(s);
        }

        let mean: Vec<f64> = data.column_iter().map(|c| c.mean()).collect();
        for (j, mut col) in data.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mean[j]);
        }
        let cov = (data.transpose() * &data) / (n as f64 - 1.0);
        let eigen = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d_in).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .total_cmp(&eigen.eigenvalues[a])
                .then(a.cmp(&b))
        });

        let top = eigen.eigenvalues[order[0]].max(0.0);
        let tolerance = top * (d_in.max(n) as f64) * f64::EPSILON;
        let mut components = Vec::with_capacity(d_out);
        let mut explained_variance = Vec::with_capacity(d_out);
        let mut degenerate = 0;
        for &k in order.iter().take(d_out) {
            let mut row: Vec<f64> = eigen.eigenvectors.column(k).iter().copied().collect();
            let pivot =
                row.iter()
                    .copied()
                    .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            let mut lambda = eigen.eigenvalues[k];
            if lambda <= tolerance {
                lambda = 0.0;
                degenerate += 1;
            }
            components.push(row);
            explained_variance.push(lambda);
        }
        if degenerate > 0 {
            warn!("data is rank deficient: {degenerate} of {d_out} components carry no variance");
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    /// Projects a raw descriptor onto the fitted components.
    pub fn transform(&self, f: &[f64]) -> Result<FeatureVector> {
        if f.len() != self.input_dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dimension(),
                found: f.len(),
            });
        }
        let centered: Vec<f64> = f.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        let out = self
            .components
            .iter()
            .map(|row| row.iter().zip(&centered).map(|(c, x)| c * x).sum())
            .collect();
        FeatureVector::new(out)
    }

    /// Maps reduced coordinates back into the input space.
    pub fn inverse_transform(&self, d: &[f64]) -> Result<Vec<f64>> {
        if d.len() != self.output_dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dimension(),
                found: d.len(),
            });
        }
        let mut out = self.mean.clone();
        for (row, coeff) in self.components.iter().zip(d) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += coeff * c;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn line_data_has_one_direction() {
        let samples: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let pca = PcaModel::fit(&samples, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pca.components[0][0] - s).abs() < 1e-12);
        assert!((pca.components[0][1] - s).abs() < 1e-12);
        assert!(pca.explained_variance[1].abs() < 1e-12);
        // completion is still orthonormal
        let dot: f64 = pca.components[0]
            .iter()
            .zip(&pca.components[1])
            .map(|(a, b)| a * b)
            .sum();
        assert!(dot.abs() < 1e-12);
        assert!((norm(&pca.components[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_data_recovers_axes_by_variance() {
        // x has spread 1, y spread 3, z spread 2
        let samples: Vec<Vec<f64>> = [-1.0, 1.0]
            .iter()
            .flat_map(|&a| {
                [
                    vec![a, 0.0, 0.0],
                    vec![0.0, 3.0 * a, 0.0],
                    vec![0.0, 0.0, 2.0 * a],
                ]
            })
            .collect();
        let pca = PcaModel::fit(&samples, 3).unwrap();
        let axes: Vec<usize> = pca
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .position(|v| (v.abs() - 1.0).abs() < 1e-12)
                    .unwrap()
            })
            .collect();
        assert_eq!(axes, vec![1, 2, 0]);
        assert!(pca.components.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn transform_edges() {
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64;
                vec![t.sin() * 3.0, t.cos(), (0.3 * t).sin() + 1.0]
            })
            .collect();
        let pca = PcaModel::fit(&samples, 2).unwrap();
        assert!(pca
            .transform(&pca.mean)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| v.abs() < 1e-12));
        let f: Vec<f64> = pca
            .mean
            .iter()
            .zip(&pca.components[0])
            .map(|(m, c)| m + c)
            .collect();
        let d = pca.transform(&f).unwrap();
        assert!((d.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!(d.as_slice()[1].abs() < 1e-12);
        assert!(matches!(
            pca.transform(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn fit_errors() {
        let few = vec![vec![1.0, 2.0, 3.0]; 2];
        assert!(matches!(
            PcaModel::fit(&few, 3),
            Err(Error::NotEnoughSamples {
                needed: 3,
                found: 2
            })
        ));
        let narrow = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(
            PcaModel::fit(&narrow, 3),
            Err(Error::DimensionMismatch { .. })
        ));
        let ragged = vec![vec![1.0, 2.0], vec![1.0], vec![0.0, 0.0]];
        assert!(matches!(
            PcaModel::fit(&ragged, 1),
            Err(Error::BadRow { row: 2, .. })
        ));
    }
}
