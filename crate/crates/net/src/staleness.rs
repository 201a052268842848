use lmrk_core::Version;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("update version {update} is behind sample version {sample}")]
pub struct StalenessError {
    pub sample: Version,
    pub update: Version,
}

/// Version gap between the policy that drew a sample and the policy produced
/// by the gradient step consuming it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StalenessRecord {
    pub sample_version: Version,
    pub update_version: Version,
    pub staleness: f64,
}

pub fn record_staleness(sample: Version, update: Version) -> Result<StalenessRecord, StalenessError> {
    if update < sample {
        return Err(StalenessError { sample, update });
    }
    Ok(StalenessRecord {
        sample_version: sample,
        update_version: update,
        staleness: (update.0 - sample.0) as f64,
    })
}

/// Mean staleness over a set of records (0 when empty).
pub fn mean_staleness(records: &[StalenessRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.staleness).sum::<f64>() / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synchronous_single_step_is_one() {
        let r = record_staleness(Version(4), Version(5)).unwrap();
        assert_eq!(r.staleness, 1.0);
    }

    #[test]
    fn two_steps_average_one_and_a_half() {
        let recs = [
            record_staleness(Version(4), Version(5)).unwrap(),
            record_staleness(Version(4), Version(6)).unwrap(),
        ];
        assert_eq!(mean_staleness(&recs), 1.5);
    }

    #[test]
    fn asynchronous_lag() {
        // drawn at 8, learner at 11 when consumed, the step completes at 12
        assert_eq!(record_staleness(Version(8), Version(12)).unwrap().staleness, 4.0);
    }

    #[test]
    fn regression_rejected() {
        assert!(record_staleness(Version(3), Version(2)).is_err());
        assert_eq!(mean_staleness(&[]), 0.0);
    }
}
