use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::training::TrainConfig;

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Tensor,
    pub v: Tensor,
    pub t: u64,
}

impl AdamState {
    pub fn new(param: &Tensor) -> Self {
        let zeros = Tensor::zeros(param.shape()).expect("parameter shapes are valid");
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(state: &mut AdamState, param: &mut Tensor, grad: &Tensor, cfg: &TrainConfig) -> Result<()> {
    if param.shape() != grad.shape() || state.m.shape() != param.shape() {
        return Err(Error::Contract(format!(
            "adam: parameter {:?}, gradient {:?}, state {:?}",
            param.shape(),
            grad.shape(),
            state.m.shape()
        )));
    }
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for (((p, &g), m), v) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(vec![v]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let cfg = TrainConfig::default();
        let mut p = Tensor::from_vec(vec![0.3, -2.0]).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&p);
        adam_step(&mut s, &mut p, &Tensor::zeros(&[2]).unwrap(), &cfg).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_by_hand() {
        let cfg = TrainConfig::default();
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p);
        adam_step(&mut s, &mut p, &scalar(1.0), &cfg).unwrap();
        // m = 0.1, v = 0.001; both bias corrections give exactly 1.
        let m_hat = (0.1f64) / (1.0 - 0.9);
        let v_hat = (0.001f64) / (1.0 - 0.999);
        let expected = -1e-3 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p.data()[0] - expected).abs() < 1e-15);
        assert!((p.data()[0] - (-9.99999990e-4)).abs() < 1e-12);
    }

    #[test]
    fn constant_gradient_step_tends_to_learning_rate() {
        let cfg = TrainConfig::default();
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p.data()[0];
            adam_step(&mut s, &mut p, &scalar(-3.0), &cfg).unwrap();
            last = p.data()[0] - before;
        }
        assert!((last.abs() - cfg.learning_rate).abs() < 1e-8, "{last}");
    }

    #[test]
    fn flattening_commutes_with_the_update() {
        let cfg = TrainConfig::default();
        let grads = [0.5, -1.0, 2.0, 0.25, -0.75, 1.5];
        let mut matrix = Tensor::new(&[2, 3], vec![1.0; 6]).unwrap();
        let mut flat = Tensor::from_vec(vec![1.0; 6]).unwrap();
        let mut sm = AdamState::new(&matrix);
        let mut sf = AdamState::new(&flat);
        for k in 0..4 {
            let g: Vec<f64> = grads.iter().map(|g| g * (k as f64 + 1.0)).collect();
            adam_step(&mut sm, &mut matrix, &Tensor::new(&[2, 3], g.clone()).unwrap(), &cfg).unwrap();
            adam_step(&mut sf, &mut flat, &Tensor::from_vec(g).unwrap(), &cfg).unwrap();
        }
        assert_eq!(matrix.data(), flat.data());
        assert!(sm.v.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let cfg = TrainConfig::default();
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut s, &mut p, &Tensor::zeros(&[2]).unwrap(), &cfg).is_err());
    }
}
