//! Bhattacharyya-gated merging of overlapping modes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Mixture, Mode, ModeId};

/// Record of one pairwise merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub absorbed_ids: (ModeId, ModeId),
    pub result_id: ModeId,
    pub distance: f64,
    /// `samples_seen` of the mixture when the merge happened.
    pub step: u64,
}

/// Bhattacharyya distance between two diagonal Gaussians.
///
/// Evaluated per dimension in log space so that products of many small or
/// large variances never form a determinant explicitly.
pub fn bhattacharyya_distance(a: &Mode, b: &Mode) -> Result<f64> {
    if a.dimension() != b.dimension() || a.variance.len() != b.variance.len() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let mut mahalanobis_term = 0.0;
    let mut log_det_term = 0.0;
    for j in 0..a.dimension() {
        let (va, vb) = (a.variance[j], b.variance[j]);
        let avg = 0.5 * (va + vb);
        let diff = a.mean[j] - b.mean[j];
        mahalanobis_term += diff * diff / avg;
        log_det_term += avg.ln() - 0.5 * (va.ln() + vb.ln());
    }
    Ok((0.125 * mahalanobis_term + 0.5 * log_det_term).max(0.0))
}

/// Combines two modes into one carrying their summed weight.
///
/// The mean is weight-averaged; the variance uses squared-weight
/// coefficients. The result carries `id` and is floored at `variance_floor`.
pub fn merge_modes(a: &Mode, b: &Mode, id: ModeId, variance_floor: f64) -> Result<Mode> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let weight = a.weight + b.weight;
    if weight <= 0.0 {
        return Err(Error::ZeroWeightMerge);
    }
    let (wa, wb) = (a.weight, b.weight);
    // Both combinations are written as `a + t (b - a)` so that equal
    // parameters come back bit-for-bit.
    let tm = wb / weight;
    let tv = wb * wb / (wa * wa + wb * wb);
    let mean = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(ma, mb)| ma + tm * (mb - ma))
        .collect();
    let variance = a
        .variance
        .iter()
        .zip(&b.variance)
        .map(|(va, vb)| va + tv * (vb - va))
        .collect();
    let mut merged = Mode {
        id,
        weight,
        mean,
        variance,
    };
    merged.floor_variance(variance_floor);
    Ok(merged)
}

/// Closest pair with at least one member marked in `dirty`, ties going to
/// the lowest id pair. Modes are sorted by id, so index order is id order.
fn closest_pair(modes: &[Mode], dirty: &[bool]) -> Result<Option<(usize, usize, f64)>> {
    let mut best: Option<(usize, usize, f64)> = None;
    for c in (0..modes.len()).filter(|&c| dirty[c]) {
        for (o, &o_dirty) in dirty.iter().enumerate() {
            // Pairs of two dirty modes are visited from their lower index.
            if o == c || (o_dirty && o < c) {
                continue;
            }
            let (i, j) = (c.min(o), c.max(o));
            let d = bhattacharyya_distance(&modes[i], &modes[j])?;
            let better = match best {
                None => true,
                Some((bi, bj, bd)) => d < bd || (d == bd && (i, j) < (bi, bj)),
            };
            if better {
                best = Some((i, j, d));
            }
        }
    }
    Ok(best)
}

/// Repeatedly merges the globally closest pair while its distance is below
/// `theta_bhat`. Each merged mode receives a fresh id.
pub fn merge_pass(
    mix: &mut Mixture,
    theta_bhat: f64,
    variance_floor: f64,
) -> Result<Vec<MergeEvent>> {
    let all: Vec<ModeId> = mix.modes.iter().map(|m| m.id).collect();
    merge_pass_touching(mix, &all, theta_bhat, variance_floor)
}

/// Same result as [`merge_pass`] when every pair of modes outside `changed`
/// is already at least `theta_bhat` apart, which holds after any completed
/// pass since the distance ignores weights. Only pairs involving a changed
/// or freshly merged mode are examined.
pub fn merge_pass_touching(
    mix: &mut Mixture,
    changed: &[ModeId],
    theta_bhat: f64,
    variance_floor: f64,
) -> Result<Vec<MergeEvent>> {
    let mut dirty: BTreeSet<ModeId> = changed.iter().copied().collect();
    let mut events = Vec::new();
    loop {
        let mask: Vec<bool> = mix.modes.iter().map(|m| dirty.contains(&m.id)).collect();
        let Some((i, j, distance)) = closest_pair(&mix.modes, &mask)? else {
            break;
        };
        if distance >= theta_bhat {
            break;
        }
        let id = mix.allocate_id();
        let merged = merge_modes(&mix.modes[i], &mix.modes[j], id, variance_floor)?;
        let absorbed_ids = (mix.modes[i].id, mix.modes[j].id);
        mix.modes.remove(j);
        mix.modes.remove(i);
        mix.push(merged);
        dirty.remove(&absorbed_ids.0);
        dirty.remove(&absorbed_ids.1);
        dirty.insert(id);
        events.push(MergeEvent {
            absorbed_ids,
            result_id: id,
            distance,
            step: mix.samples_seen,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(id: u64, weight: f64, mean: Vec<f64>, variance: Vec<f64>) -> Mode {
        Mode {
            id: ModeId(id),
            weight,
            mean,
            variance,
        }
    }

    fn mixture(modes: Vec<Mode>) -> Mixture {
        let next = modes.iter().map(|m| m.id.0 + 1).max().unwrap_or(0);
        Mixture::from_parts(modes, next, 0).unwrap()
    }

    #[test]
    fn identical_modes_have_zero_distance() {
        let a = mode(0, 0.5, vec![1.0, -2.0], vec![0.3, 4.0]);
        assert_eq!(bhattacharyya_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn shifted_unit_gaussians() {
        let a = mode(0, 0.5, vec![0.0], vec![1.0]);
        let b = mode(1, 0.5, vec![2.0], vec![1.0]);
        assert!((bhattacharyya_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn concentric_gaussians_with_different_spread() {
        let a = mode(0, 0.5, vec![0.0], vec![1.0]);
        let b = mode(1, 0.5, vec![0.0], vec![4.0]);
        // 0.5 * ln(2.5 / 2)
        let expected = 0.111_571_775_657_104_88;
        assert!((bhattacharyya_distance(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = mode(0, 0.5, vec![0.0], vec![1.0]);
        let b = mode(1, 0.5, vec![0.0, 1.0], vec![1.0, 1.0]);
        assert!(matches!(
            bhattacharyya_distance(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(merge_modes(&a, &b, ModeId(2), 1e-6).is_err());
    }

    #[test]
    fn merging_equal_modes_keeps_shape_and_doubles_weight() {
        let a = mode(0, 0.25, vec![1.5, -3.0], vec![0.7, 2.0]);
        let b = Mode {
            id: ModeId(1),
            ..a.clone()
        };
        let m = merge_modes(&a, &b, ModeId(2), 1e-6).unwrap();
        assert_eq!(m.mean, a.mean);
        assert_eq!(m.variance, a.variance);
        assert_eq!(m.weight, 0.5);
        assert_eq!(m.id, ModeId(2));
    }

    #[test]
    fn merged_mean_and_variance_arithmetic() {
        let a = mode(0, 0.9, vec![0.0], vec![1.0]);
        let b = mode(1, 0.1, vec![1.0], vec![4.0]);
        let m = merge_modes(&a, &b, ModeId(2), 1e-6).unwrap();
        assert!((m.mean[0] - 0.1).abs() < 1e-15);
        // 0.81/0.82 * 1 + 0.01/0.82 * 4
        assert!((m.variance[0] - 1.036_585_365_853_658_5).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_merge_is_an_error() {
        let a = mode(0, 0.0, vec![0.0], vec![1.0]);
        let b = mode(1, 0.0, vec![1.0], vec![1.0]);
        assert!(matches!(
            merge_modes(&a, &b, ModeId(2), 1e-6),
            Err(Error::ZeroWeightMerge)
        ));
    }

    #[test]
    fn merged_variance_respects_floor() {
        let a = mode(0, 0.5, vec![0.0], vec![1e-9]);
        let b = mode(1, 0.5, vec![0.0], vec![1e-9]);
        let m = merge_modes(&a, &b, ModeId(2), 1e-6).unwrap();
        assert_eq!(m.variance, vec![1e-6]);
    }

    #[test]
    fn far_apart_modes_are_left_alone() {
        let mut mix = mixture(vec![
            mode(0, 0.5, vec![0.0], vec![1.0]),
            mode(1, 0.5, vec![10.0], vec![1.0]),
        ]);
        let before = mix.clone();
        assert!(merge_pass(&mut mix, 0.95, 1e-6).unwrap().is_empty());
        assert_eq!(mix, before);
    }

    #[test]
    fn identical_pair_merges_once() {
        let mut mix = mixture(vec![
            mode(0, 0.3, vec![1.0, 1.0], vec![1.0, 1.0]),
            mode(1, 0.7, vec![1.0, 1.0], vec![1.0, 1.0]),
        ]);
        let events = merge_pass(&mut mix, 0.95, 1e-6).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].absorbed_ids, (ModeId(0), ModeId(1)));
        assert_eq!(events[0].result_id, ModeId(2));
        assert_eq!(mix.len(), 1);
        assert_eq!(mix.modes()[0].weight, 1.0);
        assert_eq!(mix.next_id(), 3);
    }

    #[test]
    fn ties_go_to_the_lowest_id_pair() {
        // 0-1 and 1-2 are both at distance 0.125 (unit shift, unit variance)
        let mut mix = mixture(vec![
            mode(0, 0.3, vec![0.0], vec![1.0]),
            mode(1, 0.3, vec![1.0], vec![1.0]),
            mode(2, 0.4, vec![2.0], vec![1.0]),
        ]);
        let events = merge_pass(&mut mix, 0.13, 1e-6).unwrap();
        assert_eq!(events[0].absorbed_ids, (ModeId(0), ModeId(1)));
    }
}
