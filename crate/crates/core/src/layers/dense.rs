use crate::error::{Error, Result};
use crate::tensor::{SeededRng, Tensor};

/// Affine map `y = W x + b` with `W` stored as `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Vec<f64>,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        match (weights.shape(), bias.shape()) {
            (&[out, _], &[b]) if out == b => Ok(Self { weights, bias }),
            (w, b) => Err(Error::dims(w, b, "dense weights [out, in] vs bias [out]")),
        }
    }

    pub fn init(rng: &mut SeededRng, inputs: usize, outputs: usize) -> Result<Self> {
        let weights = Tensor::fan_in_uniform(rng, &[outputs, inputs], inputs)?;
        let bias = Tensor::fan_in_uniform(rng, &[outputs], inputs)?;
        Self::new(weights, bias)
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::dims(&[x.len()], self.weights.shape(), "dense input"));
        }
        Ok((0..self.outputs())
            .map(|o| {
                let row = self.weights.row(o);
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias.data()[o]
            })
            .collect())
    }

    /// `x` is the input the forward pass saw.
    pub fn backward(&self, x: &[f64], dy: &[f64]) -> Result<DenseGrads> {
        if x.len() != self.inputs() || dy.len() != self.outputs() {
            return Err(Error::Contract(format!(
                "dense backward got input {} / upstream {} for a {}x{} layer",
                x.len(),
                dy.len(),
                self.outputs(),
                self.inputs()
            )));
        }
        let mut dx = vec![0.0; x.len()];
        let mut dw = Tensor::zeros(self.weights.shape())?;
        for (o, &g) in dy.iter().enumerate() {
            for ((dwi, &xi), (dxi, &wi)) in dw.row_mut(o).iter_mut().zip(x).zip(dx.iter_mut().zip(self.weights.row(o))) {
                *dwi = g * xi;
                *dxi += g * wi;
            }
        }
        Ok(DenseGrads {
            input: dx,
            weights: dw,
            bias: Tensor::from_vec(dy.to_vec())?,
        })
    }
}
