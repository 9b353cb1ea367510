//! Convolutional sentiment branch feeding an LSTM, with a dense head.
//!
//! Forward pipeline for one `[T, F_market + F_sentiment]` window:
//!
//! 1. the sentiment block is left-padded with `k - 1` zero days and passed
//!    through the conv layer and ReLU, giving `[T, C_out]` (one row per day);
//! 2. each day's market features are concatenated with that day's conv
//!    features and the LSTM runs over the `T` days from a zero state;
//! 3. dropout is applied to the final hidden state (training only);
//! 4. `[h_T, x_static]` goes through the dense head to a single unbounded score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SampleRef;
use crate::layers::{left_pad, Activation, Conv1DCache, Conv1DLayer, DenseLayer, DropoutMask, DropoutSpec, LstmCache, LstmCell, Mode};
use crate::models::Regressor;
use crate::tensor::{SeededRng, Tensor};

/// Input layout the model was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridDims {
    pub window: usize,
    pub market: usize,
    pub sentiment: usize,
    pub statics: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub conv_width: usize,
    pub conv_channels: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            conv_width: 3,
            conv_channels: 8,
            hidden: 32,
            dropout: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub dims: HybridDims,
    pub conv: Conv1DLayer,
    pub lstm: LstmCell,
    pub head: DenseLayer,
    pub dropout: DropoutSpec,
}

#[derive(Debug, Clone)]
pub struct HybridCache {
    conv: Conv1DCache,
    conv_pre: Tensor,
    lstm: LstmCache,
    mask: DropoutMask,
    head_input: Vec<f64>,
}

/// Gradients of one backward pass. Input gradients are split by path so the
/// conv branch's contribution can be inspected on its own.
#[derive(Debug, Clone)]
pub struct HybridGrads {
    pub params: Vec<Tensor>,
    pub seq_via_conv: Tensor,
    pub seq_via_lstm: Tensor,
    pub statics: Vec<f64>,
}

impl HybridModel {
    pub const PARAM_NAMES: [&'static str; 7] = [
        "conv.kernels",
        "conv.bias",
        "lstm.w_x",
        "lstm.w_h",
        "lstm.b",
        "head.weights",
        "head.bias",
    ];

    pub fn new(dims: HybridDims, cfg: &HybridConfig, rng: &mut SeededRng) -> Result<Self> {
        if dims.window == 0 || dims.market == 0 || dims.sentiment == 0 {
            return Err(Error::Parameter(format!("hybrid dims must be positive: {dims:?}")));
        }
        if cfg.conv_width == 0 || cfg.conv_channels == 0 || cfg.hidden == 0 {
            return Err(Error::Parameter(format!("hybrid layer sizes must be positive: {cfg:?}")));
        }
        let conv = Conv1DLayer::init(rng, dims.sentiment, cfg.conv_channels, cfg.conv_width)?;
        let lstm = LstmCell::init(rng, dims.market + cfg.conv_channels, cfg.hidden)?;
        let head = DenseLayer::init(rng, cfg.hidden + dims.statics, 1)?;
        Self::from_parts(dims, conv, lstm, head, DropoutSpec::new(cfg.dropout)?)
    }

    pub fn from_parts(
        dims: HybridDims,
        conv: Conv1DLayer,
        lstm: LstmCell,
        head: DenseLayer,
        dropout: DropoutSpec,
    ) -> Result<Self> {
        let bad = |what: &str| Err(Error::Contract(format!("inconsistent hybrid layers: {what}")));
        if conv.in_channels() != dims.sentiment {
            return bad("conv input channels differ from sentiment width");
        }
        if lstm.inputs() != dims.market + conv.out_channels() {
            return bad("LSTM input width must be market features + conv channels");
        }
        if head.inputs() != lstm.hidden() + dims.statics || head.outputs() != 1 {
            return bad("head must map hidden + static features to one output");
        }
        Ok(Self {
            dims,
            conv,
            lstm,
            head,
            dropout,
        })
    }

    pub fn config(&self) -> HybridConfig {
        HybridConfig {
            conv_width: self.conv.width(),
            conv_channels: self.conv.out_channels(),
            hidden: self.lstm.hidden(),
            dropout: self.dropout.p(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.len()).sum()
    }

    fn check_sample(&self, sample: &SampleRef<'_>) -> Result<()> {
        let d = &self.dims;
        let want = [d.window, d.market + d.sentiment];
        if sample.x_seq.shape() != want {
            return Err(Error::dims(sample.x_seq.shape(), &want, "hybrid sequence input"));
        }
        if sample.x_static.len() != d.statics {
            return Err(Error::dims(&[sample.x_static.len()], &[d.statics], "hybrid static input"));
        }
        Ok(())
    }

    pub fn forward_sample(&self, sample: SampleRef<'_>, mode: Mode, rng: &mut SeededRng) -> Result<(f64, HybridCache)> {
        self.check_sample(&sample)?;
        let HybridDims { window, market, sentiment, .. } = self.dims;
        let width = market + sentiment;
        let x = sample.x_seq.data();

        let mut sent = Vec::with_capacity(window * sentiment);
        for t in 0..window {
            sent.extend_from_slice(&x[t * width + market..(t + 1) * width]);
        }
        let padded = left_pad(&Tensor::new(&[window, sentiment], sent)?, self.conv.width() - 1)?;
        let (conv_pre, conv_cache) = self.conv.forward(&padded)?;
        let conv_feat = Activation::Relu.forward(&conv_pre);

        let c_out = self.conv.out_channels();
        let mut lstm_in = Vec::with_capacity(window * (market + c_out));
        for t in 0..window {
            lstm_in.extend_from_slice(&x[t * width..t * width + market]);
            lstm_in.extend_from_slice(conv_feat.row(t));
        }
        let lstm_in = Tensor::new(&[window, market + c_out], lstm_in)?;
        let h = self.lstm.hidden();
        let zeros = vec![0.0; h];
        let (hs, lstm_cache) = self.lstm.forward(&lstm_in, &zeros, &zeros)?;

        let (dropped, mask) = self.dropout.forward(hs.row(window - 1), rng, mode);
        let mut head_input = dropped;
        head_input.extend_from_slice(sample.x_static);
        let score = self.head.forward(&head_input)?[0];
        Ok((
            score,
            HybridCache {
                conv: conv_cache,
                conv_pre,
                lstm: lstm_cache,
                mask,
                head_input,
            },
        ))
    }

    pub fn backward_sample(&self, cache: &HybridCache, dscore: f64) -> Result<HybridGrads> {
        let HybridDims { window, market, sentiment, .. } = self.dims;
        let h = self.lstm.hidden();
        let c_out = self.conv.out_channels();
        if cache.head_input.len() != self.head.inputs() || cache.conv_pre.shape() != [window, c_out] {
            return Err(Error::Contract("hybrid cache does not belong to this model".into()));
        }

        let head = self.head.backward(&cache.head_input, &[dscore])?;
        let d_last = cache.mask.backward(&head.input[..h])?;
        let mut dhs = Tensor::zeros(&[window, h])?;
        dhs.row_mut(window - 1).copy_from_slice(&d_last);
        let lstm = self.lstm.backward(&cache.lstm, &dhs)?;

        let width = market + sentiment;
        let mut seq_via_lstm = Tensor::zeros(&[window, width])?;
        let mut d_conv_pre = Tensor::zeros(&[window, c_out])?;
        for t in 0..window {
            let row = lstm.inputs.row(t);
            seq_via_lstm.row_mut(t)[..market].copy_from_slice(&row[..market]);
            for (c, d) in d_conv_pre.row_mut(t).iter_mut().enumerate() {
                *d = row[market + c] * Activation::Relu.derivative(cache.conv_pre.get2(t, c));
            }
        }
        let conv = self.conv.backward(&cache.conv, &d_conv_pre)?;
        let pad = self.conv.width() - 1;
        let mut seq_via_conv = Tensor::zeros(&[window, width])?;
        for t in 0..window {
            seq_via_conv.row_mut(t)[market..].copy_from_slice(conv.input.row(t + pad));
        }

        Ok(HybridGrads {
            params: vec![conv.kernels, conv.bias, lstm.w_x, lstm.w_h, lstm.b, head.weights, head.bias],
            seq_via_conv,
            seq_via_lstm,
            statics: head.input[h..].to_vec(),
        })
    }
}

impl Regressor for HybridModel {
    type Cache = HybridCache;

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        let tensors = [
            &self.conv.kernels,
            &self.conv.bias,
            &self.lstm.w_x,
            &self.lstm.w_h,
            &self.lstm.b,
            &self.head.weights,
            &self.head.bias,
        ];
        Self::PARAM_NAMES.into_iter().zip(tensors).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.conv.kernels,
            &mut self.conv.bias,
            &mut self.lstm.w_x,
            &mut self.lstm.w_h,
            &mut self.lstm.b,
            &mut self.head.weights,
            &mut self.head.bias,
        ]
    }

    fn forward(&self, sample: SampleRef<'_>, mode: Mode, rng: &mut SeededRng) -> Result<(f64, HybridCache)> {
        self.forward_sample(sample, mode, rng)
    }

    fn backward(&self, cache: &HybridCache, dscore: f64) -> Result<Vec<Tensor>> {
        Ok(self.backward_sample(cache, dscore)?.params)
    }
}
