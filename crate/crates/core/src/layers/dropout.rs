use crate::error::{Error, Result};
use crate::tensor::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Inverted dropout: kept activations are scaled by `1 / (1 - p)` during
/// training so inference is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    p: f64,
}

/// Per-entry multipliers applied in the forward pass; `None` means identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(Option<Vec<f64>>);

impl DropoutSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Parameter(format!("dropout probability must be in [0, 1), got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn forward(&self, x: &[f64], rng: &mut SeededRng, mode: Mode) -> (Vec<f64>, DropoutMask) {
        if mode == Mode::Infer || self.p == 0.0 {
            return (x.to_vec(), DropoutMask(None));
        }
        let keep_scale = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = x
            .iter()
            .map(|_| if rng.bernoulli(self.p) { 0.0 } else { keep_scale })
            .collect();
        let y = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
        (y, DropoutMask(Some(mask)))
    }
}

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    pub fn backward(&self, dy: &[f64]) -> Result<Vec<f64>> {
        match &self.0 {
            None => Ok(dy.to_vec()),
            Some(m) if m.len() == dy.len() => Ok(dy.iter().zip(m).map(|(g, s)| g * s).collect()),
            Some(m) => Err(Error::dims(&[dy.len()], &[m.len()], "dropout mask")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_probability_is_identity_in_both_modes() {
        let spec = DropoutSpec::new(0.0).unwrap();
        let mut rng = SeededRng::new(1);
        let x = [1.0, -2.0, 3.5];
        for mode in [Mode::Train, Mode::Infer] {
            assert_eq!(spec.forward(&x, &mut rng, mode).0, x.to_vec());
        }
    }

    #[test]
    fn inference_is_bit_exact_identity() {
        let spec = DropoutSpec::new(0.7).unwrap();
        let mut rng = SeededRng::new(1);
        let x = [0.1, f64::MIN_POSITIVE, -3.3e200];
        let (y, mask) = spec.forward(&x, &mut rng, Mode::Infer);
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(mask, DropoutMask::identity());
    }

    #[test]
    fn expectation_is_preserved() {
        let spec = DropoutSpec::new(0.5).unwrap();
        let mut rng = SeededRng::new(77);
        let (y, _) = spec.forward(&vec![1.0; 100_000], &mut rng, Mode::Train);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn invalid_probability() {
        assert!(DropoutSpec::new(1.0).is_err());
        assert!(DropoutSpec::new(-0.1).is_err());
    }

    #[test]
    fn backward_applies_mask() {
        let spec = DropoutSpec::new(0.5).unwrap();
        let mut rng = SeededRng::new(4);
        let (y, mask) = spec.forward(&[1.0; 8], &mut rng, Mode::Train);
        assert_eq!(mask.backward(&[1.0; 8]).unwrap(), y);
        assert!(mask.backward(&[1.0; 3]).is_err());
    }
}
