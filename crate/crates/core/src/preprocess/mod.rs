//! Z-score standardization and length alignment of curves.
//!
//! Alignment expands a curve onto the least common multiple of its length
//! and the expected length with a natural cubic spline, then keeps every
//! `lcm / expected`-th sample starting at the first one.

mod spline;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::spline::NaturalCubicSpline;
use crate::dataset::{Curve, CurveSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedCurve {
    pub id: String,
    pub values: Vec<f64>,
    /// Mean of the source values.
    pub mu: f64,
    /// Population standard deviation of the source values.
    pub sigma: f64,
}

impl StandardizedCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn zscore(curve: &Curve) -> Result<StandardizedCurve> {
    curve.validate()?;
    let n = curve.values.len() as f64;
    let mu = curve.values.iter().sum::<f64>() / n;
    let var = curve.values.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();

    let first = curve.values[0];
    let constant = curve.values.iter().all(|&x| x == first);
    let scale = curve.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if constant || sigma <= 1e-12 * scale {
        return Err(Error::DegenerateCurve {
            id: curve.id.clone(),
            reason: "standard deviation is zero".into(),
        });
    }

    Ok(StandardizedCurve {
        id: curve.id.clone(),
        values: curve.values.iter().map(|x| (x - mu) / sigma).collect(),
        mu,
        sigma,
    })
}

/// Sizes of the intermediate expansion used to align one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentPlan {
    pub actual: usize,
    pub expected: usize,
    /// `lcm(actual, expected)`: length of the expanded curve.
    pub lcm: u128,
    /// Downsampling stride, `lcm / expected`.
    pub step: u128,
}

pub fn alignment_plan(actual: usize, expected: usize) -> Result<AlignmentPlan> {
    if expected < 2 {
        return Err(Error::Config(format!(
            "expected length must be at least 2, got {expected}"
        )));
    }
    if actual == 0 {
        return Err(Error::Validation("cannot align an empty curve".into()));
    }
    let lcm = num_integer::lcm(actual as u128, expected as u128);
    Ok(AlignmentPlan {
        actual,
        expected,
        lcm,
        step: lcm / expected as u128,
    })
}

fn check_alignable(curve: &StandardizedCurve, expected: usize) -> Result<Option<AlignmentPlan>> {
    let plan = alignment_plan(curve.values.len(), expected)?;
    if curve.values.len() == expected {
        return Ok(None);
    }
    if curve.values.len() < 4 {
        return Err(Error::Validation(format!(
            "curve '{}' has {} points; alignment needs at least 4",
            curve.id,
            curve.values.len()
        )));
    }
    Ok(Some(plan))
}

/// Literal alignment: materializes all `lcm` interpolated samples, then
/// downsamples. Memory grows with the LCM; see [`resample_direct`].
pub fn align_length(curve: &StandardizedCurve, expected: usize) -> Result<StandardizedCurve> {
    let Some(plan) = check_alignable(curve, expected)? else {
        return Ok(curve.clone());
    };
    let lcm = usize::try_from(plan.lcm)
        .map_err(|_| Error::Config(format!("LCM {} does not fit in memory", plan.lcm)))?;
    let len = curve.values.len();
    let span = (lcm - 1) as f64;
    let knots = (0..len)
        .map(|i| i as f64 * span / (len - 1) as f64)
        .collect();
    let spline = NaturalCubicSpline::fit(knots, curve.values.clone());

    let expanded: Vec<f64> = (0..lcm).map(|x| spline.eval(x as f64)).collect();
    let values = expanded
        .into_iter()
        .step_by(plan.step as usize)
        .take(expected)
        .collect();

    Ok(StandardizedCurve {
        values,
        ..curve.clone()
    })
}

/// Same output as [`align_length`], evaluating the spline only at the
/// samples that downsampling keeps.
pub fn resample_direct(curve: &StandardizedCurve, expected: usize) -> Result<StandardizedCurve> {
    let Some(plan) = check_alignable(curve, expected)? else {
        return Ok(curve.clone());
    };
    let len = curve.values.len();
    let spline = NaturalCubicSpline::fit_uniform(curve.values.clone());
    let ratio = (len - 1) as f64 / (plan.lcm - 1) as f64;
    let values = (0..expected as u128)
        .map(|j| spline.eval((j * plan.step) as f64 * ratio))
        .collect();

    Ok(StandardizedCurve {
        values,
        ..curve.clone()
    })
}

/// Most common length in the set; ties go to the smaller length.
pub fn modal_length(set: &CurveSet) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for c in set.curves() {
        *counts.entry(c.len()).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then(lb.cmp(la)))
        .map(|(len, _)| len)
        .unwrap_or(0)
}

/// Z-scores every curve, then aligns them to the set's expected length
/// (falling back to [`modal_length`]) unless `align` is false.
pub fn standardize_set(set: &CurveSet, align: bool) -> Result<Vec<StandardizedCurve>> {
    let expected = set.expected_length().unwrap_or_else(|| modal_length(set));
    set.curves()
        .par_iter()
        .map(|c| {
            let z = zscore(c)?;
            if align {
                resample_direct(&z, expected)
            } else {
                Ok(z)
            }
        })
        .collect()
}
