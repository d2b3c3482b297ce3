//! Jackknife pseudo-observations over the mean-function estimators.
//!
//! The pseudo-value of subject i at time t is
//! μ̂_{n,i}(t) = n μ̂_n(t) − (n − 1) μ̂_n^{(i)}(t), with μ̂_n^{(i)} the same
//! estimator applied to the sample with subject i left out. For the plain
//! average the pseudo-values are exactly the raw outcomes N_i(t); for the
//! IPCW estimators they are the first-order jackknife surrogate outcomes
//! whose conditional mean given a baseline covariate tracks E(N(t) | Z)
//! when censoring is independent of (N, T, Z).
//!
//! Leave-one-out estimates are recomputed from scratch — O(n) full
//! estimator passes — which keeps the code identical to the estimator
//! being jackknifed at desk-scale n.
//!
//! [`conditional_unbiasedness_check`] turns the pseudo-values into the
//! group-mean diagnostic for that conditional-unbiasedness property: per
//! covariate group it reports the pseudo-value mean, its Monte Carlo
//! standard error, the model truth E(N(t) | Z = z), and the studentized
//! discrepancy.

use thiserror::Error;

use crate::estimators::{estimate_point, EstimateError, EstimatorKind, TruthSpec};
use crate::process::Sample;

#[derive(Debug, Error)]
pub enum PseudoError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("leave-one-out subsample without subject {id} is not estimable: {source}")]
    LeaveOneOut {
        id: u64,
        source: EstimateError,
    },
    #[error("subject {id} has no covariate value")]
    MissingCovariate { id: u64 },
    #[error("subject {id} has covariate {z}, expected 0 or 1")]
    NonBinaryCovariate { id: u64, z: f64 },
}

/// The jackknife pseudo-values μ̂_{n,i}(t) for one sample, time, and
/// estimator.
#[derive(Debug, Clone)]
pub struct PseudoSet {
    t: f64,
    kind: EstimatorKind,
    values: Vec<f64>,
    full_estimate: f64,
}

impl PseudoSet {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    /// One pseudo-value per subject, in subject order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// μ̂_n(t) on the full sample.
    pub fn full_estimate(&self) -> f64 {
        self.full_estimate
    }

    /// mean(values) − μ̂_n(t). Zero (to rounding) for the linear estimator;
    /// for the IPCW estimators this is a reported diagnostic, not an
    /// identity.
    pub fn mean_gap(&self) -> f64 {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        mean - self.full_estimate
    }
}

/// Computes μ̂_{n,i}(t) = n μ̂_n(t) − (n − 1) μ̂_n^{(i)}(t) for every subject
/// by naive leave-one-out recomputation.
pub fn pseudo_values(
    sample: &Sample,
    t: f64,
    kind: EstimatorKind,
) -> Result<PseudoSet, PseudoError> {
    let n = sample.n() as f64;
    let full_estimate = estimate_point(sample, kind, t, None)?;
    let mut values = Vec::with_capacity(sample.n());
    for (i, subject) in sample.subjects().iter().enumerate() {
        let loo = estimate_point(sample, kind, t, Some(i))
            .map_err(|source| PseudoError::LeaveOneOut { id: subject.id(), source })?;
        values.push(n * full_estimate - (n - 1.0) * loo);
    }
    Ok(PseudoSet { t, kind, values, full_estimate })
}

/// One covariate group's slice of the conditional-unbiasedness report.
#[derive(Debug, Clone, Copy)]
pub struct GroupCheck {
    /// Covariate value of the group (z = 1 or z = 0).
    pub z1: bool,
    /// Number of subjects in the group.
    pub count: usize,
    /// Mean of the group's pseudo-values.
    pub mean: f64,
    /// Monte Carlo standard error of that mean.
    pub std_error: f64,
    /// E(N(t) | Z = z) under the truth.
    pub truth: f64,
    /// (mean − truth)/std_error.
    pub studentized: f64,
}

/// The condition-(c) diagnostic: group means of pseudo-values against the
/// model truth.
#[derive(Debug, Clone)]
pub struct UnbiasednessReport {
    pub t: f64,
    pub kind: EstimatorKind,
    /// One entry per covariate group present in the sample, z = 0 first.
    pub groups: Vec<GroupCheck>,
    /// mean(pseudo-values) − μ̂_n(t), carried over from the pseudo-set.
    pub mean_gap: f64,
}

/// Groups the pseudo-values by the binary covariate and studentizes each
/// group mean against E(N(t) | Z = z) from the truth.
pub fn conditional_unbiasedness_check(
    sample: &Sample,
    t: f64,
    kind: EstimatorKind,
    truth: &TruthSpec,
) -> Result<UnbiasednessReport, PseudoError> {
    truth.validate().map_err(PseudoError::Estimate)?;
    for subject in sample.subjects() {
        match subject.z() {
            None => return Err(PseudoError::MissingCovariate { id: subject.id() }),
            Some(z) if z != 0.0 && z != 1.0 => {
                return Err(PseudoError::NonBinaryCovariate { id: subject.id(), z })
            }
            Some(_) => {}
        }
    }
    let pseudo = pseudo_values(sample, t, kind)?;
    let mut groups = Vec::with_capacity(2);
    for z1 in [false, true] {
        let z_val = if z1 { 1.0 } else { 0.0 };
        let group: Vec<f64> = sample
            .subjects()
            .iter()
            .zip(pseudo.values())
            .filter(|(s, _)| s.z() == Some(z_val))
            .map(|(_, &v)| v)
            .collect();
        if group.is_empty() {
            continue;
        }
        let m = group.len() as f64;
        let mean = group.iter().sum::<f64>() / m;
        let std_error = if group.len() > 1 {
            let ss: f64 = group.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (m - 1.0) / m).sqrt()
        } else {
            f64::NAN
        };
        let truth_mean = truth.conditional_mean(t, z1);
        groups.push(GroupCheck {
            z1,
            count: group.len(),
            mean,
            std_error,
            truth: truth_mean,
            studentized: (mean - truth_mean) / std_error,
        });
    }
    Ok(UnbiasednessReport { t, kind, groups, mean_gap: pseudo.mean_gap() })
}
