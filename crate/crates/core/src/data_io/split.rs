use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SampleSet;

pub const MIN_SPLIT_SAMPLES: usize = 10;

/// Fractions of a chronological train/validation/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(*f > 0.0)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("split fractions must be positive and sum to 1, got {fr:?}")));
        }
        Ok(())
    }

    /// Sample counts per block: each block gets `floor(frac · n)` and any
    /// remainder goes to the test block.
    pub fn counts(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        if n < MIN_SPLIT_SAMPLES {
            return Err(Error::Contract(format!(
                "chronological split needs at least {MIN_SPLIT_SAMPLES} samples, got {n}"
            )));
        }
        // The small slack keeps products like 0.7 · 100 = 70.00000000000001
        // and 0.15 · 100 = 14.999… on the intended integer.
        let floor = |f: f64| (f * n as f64 + 1e-9).floor() as usize;
        let train = floor(self.train_frac);
        let val = floor(self.val_frac);
        Ok((train, val, n - train - val))
    }
}

/// Contiguous train → validation → test blocks in the original order.
pub fn chronological_split(samples: &SampleSet, spec: &SplitSpec) -> Result<(SampleSet, SampleSet, SampleSet)> {
    let (train, val, _) = spec.counts(samples.len())?;
    Ok((
        samples.slice(0..train),
        samples.slice(train..train + val),
        samples.slice(train + val..samples.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        let s = SplitSpec::default();
        assert_eq!(s.counts(100).unwrap(), (70, 15, 15));
        assert_eq!(s.counts(10).unwrap(), (7, 1, 2));
        assert_eq!(s.counts(2000).unwrap(), (1400, 300, 300));
        assert!(matches!(s.counts(9), Err(Error::Contract(_))));
    }

    #[test]
    fn counts_match_floor_oracle() {
        let s = SplitSpec::default();
        for n in 10..500 {
            let (a, b, c) = s.counts(n).unwrap();
            assert_eq!(a + b + c, n);
            // Integer oracle: floor(70n/100), floor(15n/100).
            assert_eq!(a, 70 * n / 100);
            assert_eq!(b, 15 * n / 100);
        }
    }

    #[test]
    fn invalid_fractions() {
        let bad = SplitSpec {
            train_frac: 0.8,
            val_frac: 0.15,
            test_frac: 0.15,
        };
        assert!(bad.validate().is_err());
        let zero = SplitSpec {
            train_frac: 1.0,
            val_frac: 0.0,
            test_frac: 0.0,
        };
        assert!(zero.validate().is_err());
    }
}
