use crate::error::{Error, Result};
use crate::tensor::{SeededRng, Tensor};

/// 1-D cross-correlation along the time axis with valid padding.
///
/// `kernels` has shape `[C_out, k, C_in]`; inputs are `[T, C_in]` and outputs
/// `[T - k + 1, C_out]`:
///
/// `y[t, c] = bias[c] + Σ_{m<k} Σ_{n<C_in} x[t + m, n] · kernels[c, m, n]`
///
/// No kernel flip is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1DLayer {
    pub kernels: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct Conv1DCache {
    input: Tensor,
}

#[derive(Debug, Clone)]
pub struct Conv1DGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

impl Conv1DLayer {
    pub fn new(kernels: Tensor, bias: Tensor) -> Result<Self> {
        match (kernels.shape(), bias.shape()) {
            (&[c_out, _, _], &[b]) if b == c_out => Ok(Self { kernels, bias }),
            (k, b) => Err(Error::dims(k, b, "conv kernels [C_out, k, C_in] vs bias [C_out]")),
        }
    }

    pub fn init(rng: &mut SeededRng, c_in: usize, c_out: usize, width: usize) -> Result<Self> {
        let fan_in = width * c_in;
        let kernels = Tensor::fan_in_uniform(rng, &[c_out, width, c_in], fan_in)?;
        let bias = Tensor::fan_in_uniform(rng, &[c_out], fan_in)?;
        Self::new(kernels, bias)
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Conv1DCache)> {
        let (c_out, k, c_in) = (self.out_channels(), self.width(), self.in_channels());
        if x.shape().len() != 2 || x.cols() != c_in {
            return Err(Error::dims(x.shape(), &[0, c_in], "conv input [T, C_in]"));
        }
        let t_in = x.rows();
        if t_in < k {
            return Err(Error::Window { len: t_in, window: k });
        }
        let t_out = t_in - k + 1;
        let w = self.kernels.data();
        let xd = x.data();
        let mut y = vec![0.0; t_out * c_out];
        for t in 0..t_out {
            // The window rows t..t+k are contiguous in row-major order.
            let window = &xd[t * c_in..(t + k) * c_in];
            for c in 0..c_out {
                let kern = &w[c * k * c_in..(c + 1) * k * c_in];
                let dot: f64 = window.iter().zip(kern).map(|(a, b)| a * b).sum();
                y[t * c_out + c] = dot + self.bias.data()[c];
            }
        }
        Ok((Tensor::new(&[t_out, c_out], y)?, Conv1DCache { input: x.clone() }))
    }

    pub fn backward(&self, cache: &Conv1DCache, dy: &Tensor) -> Result<Conv1DGrads> {
        let (c_out, k, c_in) = (self.out_channels(), self.width(), self.in_channels());
        let x = &cache.input;
        if x.cols() != c_in || x.rows() < k {
            return Err(Error::Contract("conv cache does not belong to this layer".into()));
        }
        let t_out = x.rows() - k + 1;
        if dy.shape() != [t_out, c_out] {
            return Err(Error::dims(dy.shape(), &[t_out, c_out], "conv upstream gradient"));
        }
        let w = self.kernels.data();
        let xd = x.data();
        let mut dx = vec![0.0; x.len()];
        let mut dw = vec![0.0; self.kernels.len()];
        let mut db = vec![0.0; c_out];
        for t in 0..t_out {
            let span = t * c_in..(t + k) * c_in;
            for c in 0..c_out {
                let g = dy.data()[t * c_out + c];
                if g == 0.0 {
                    continue;
                }
                db[c] += g;
                let kern = c * k * c_in..(c + 1) * k * c_in;
                for ((dwi, &xi), (dxi, &wi)) in dw[kern.clone()]
                    .iter_mut()
                    .zip(&xd[span.clone()])
                    .zip(dx[span.clone()].iter_mut().zip(&w[kern]))
                {
                    *dwi += g * xi;
                    *dxi += g * wi;
                }
            }
        }
        Ok(Conv1DGrads {
            input: Tensor::new(x.shape(), dx)?,
            kernels: Tensor::new(self.kernels.shape(), dw)?,
            bias: Tensor::new(&[c_out], db)?,
        })
    }
}

/// Prepends `rows` zero rows to a `[T, C]` tensor.
pub fn left_pad(x: &Tensor, rows: usize) -> Result<Tensor> {
    let c = x.cols();
    let mut data = vec![0.0; rows * c];
    data.extend_from_slice(x.data());
    Tensor::new(&[x.rows() + rows, c], data)
}
