//! Threshold calibration of a mined formula.

use serde::{Deserialize, Serialize};

use crate::data::{robustness_values, Dataset, RobustnessStats};
use crate::stl::{nnf, shift, Formula};
use crate::Result;

/// Outcome of [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Offset subtracted from the robustness of every trace.
    pub alpha: f64,
    #[serde(with = "crate::roge::formula_text")]
    pub formula: Formula,
    /// Training errors at the chosen offset.
    pub errors: usize,
}

/// Chooses the offset `alpha` for the verdict `ρ > alpha` from the robustness
/// values of each class.
///
/// Every `alpha` in a gap between consecutive distinct values gives the same
/// verdicts, so only the gaps are compared: fewest errors first, then the
/// widest gap, then the gap whose midpoint is closest to the midpoint of the
/// class means. The midpoint of the winning gap is returned. The open regions
/// below the smallest and above the largest value count as zero-width.
pub fn choose_offset(positives: &[f64], negatives: &[f64]) -> (f64, usize) {
    let mut values: Vec<f64> = positives.iter().chain(negatives).copied().filter(|v| v.is_finite()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let errors = |alpha: f64| {
        positives.iter().filter(|&&r| !(r > alpha)).count() + negatives.iter().filter(|&&r| r > alpha).count()
    };
    if values.is_empty() {
        return (0.0, errors(0.0));
    }
    let finite_mean = |v: &[f64]| {
        let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
        if f.is_empty() {
            None
        } else {
            Some(f.iter().sum::<f64>() / f.len() as f64)
        }
    };
    let centre = match (finite_mean(positives), finite_mean(negatives)) {
        (Some(p), Some(n)) => (p + n) / 2.0,
        (Some(m), None) | (None, Some(m)) => m,
        (None, None) => 0.0,
    };

    // (representative, width)
    let mut regions = Vec::with_capacity(values.len() + 1);
    regions.push((values[0] - 1.0, 0.0));
    for w in values.windows(2) {
        regions.push(((w[0] + w[1]) / 2.0, w[1] - w[0]));
    }
    regions.push((*values.last().unwrap(), 0.0));

    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (alpha, width) in regions {
        let e = errors(alpha);
        let dist = (alpha - centre).abs();
        let better = match best {
            None => true,
            Some((be, bw, bd, _)) => e < be || (e == be && (width > bw || (width == bw && dist < bd))),
        };
        if better {
            best = Some((e, width, dist, alpha));
        }
    }
    let (e, _, _, alpha) = best.expect("at least two regions");
    (alpha, e)
}

/// Translates the thresholds of `f` so that `ρ > 0` separates the classes of
/// `d` as well as any constant cut of the robustness can.
///
/// The result is `shift(nnf(f), alpha)`, whose robustness is `ρ_f - alpha` on
/// every trace.
pub fn calibrate(f: &Formula, d: &Dataset) -> Result<Calibration> {
    let pos = robustness_values(f, d.positives())?;
    let neg = robustness_values(f, d.negatives())?;
    let (alpha, errors) = choose_offset(&pos, &neg);
    Ok(Calibration { alpha, formula: shift(&nnf(f), alpha)?, errors })
}

/// Class statistics used when reporting a calibration.
pub fn class_stats(f: &Formula, d: &Dataset) -> Result<(RobustnessStats, RobustnessStats)> {
    Ok((
        RobustnessStats::from_values(&robustness_values(f, d.positives())?)?,
        RobustnessStats::from_values(&robustness_values(f, d.negatives())?)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_gap() {
        assert_eq!(choose_offset(&[2.0, 3.0], &[-3.0, -2.0]), (0.0, 0));
    }

    #[test]
    fn single_narrow_gap() {
        let (alpha, e) = choose_offset(&[1.0, 2.0], &[-1.0, 0.5]);
        assert_eq!(e, 0);
        assert!((alpha - 0.75).abs() < 1e-12);
    }

    #[test]
    fn overlapping_classes() {
        // Best cut misclassifies one trace.
        let (alpha, e) = choose_offset(&[1.0, 2.0, -0.5], &[-1.0, 0.0]);
        assert_eq!(e, 1);
        assert!(alpha > 0.0 && alpha < 1.0);
    }

    #[test]
    fn infinite_values() {
        let (alpha, e) = choose_offset(&[f64::INFINITY, 1.0], &[f64::NEG_INFINITY, -1.0]);
        assert_eq!((alpha, e), (0.0, 0));
        assert_eq!(choose_offset(&[f64::INFINITY], &[f64::INFINITY]).1, 1);
    }
}
