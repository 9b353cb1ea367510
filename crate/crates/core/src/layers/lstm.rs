//! LSTM cell unrolled over a sequence, with backpropagation through time.
//!
//! Gate rows are stacked in the order input `i`, forget `f`, cell `g`,
//! output `o`; each block is `H` rows of `w_x` (`[4H, F]`), `w_h`
//! (`[4H, H]`) and `b` (`[4H]`). Per step:
//!
//! ```text
//! a   = w_x x_t + w_h h_{t-1} + b
//! i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o);  g = tanh(a_g)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```

use crate::error::{Error, Result};
use crate::layers::activation::sigmoid;
use crate::tensor::{SeededRng, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    xs: Tensor,
    /// Activated gates per step, `[T, 4H]`.
    gates: Vec<f64>,
    /// `h_0 ..= h_T`, `(T + 1) * H`.
    hs: Vec<f64>,
    /// `c_0 ..= c_T`.
    cs: Vec<f64>,
    /// `tanh(c_t)` for `t = 1..=T`.
    tanh_cs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub inputs: Tensor,
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

impl LstmCell {
    pub fn new(w_x: Tensor, w_h: Tensor, b: Tensor) -> Result<Self> {
        let (wx, wh, bs) = (w_x.shape(), w_h.shape(), b.shape());
        let ok = matches!((wx, wh, bs), (&[g1, _], &[g2, h], &[g3]) if g1 == 4 * h && g2 == g1 && g3 == g1);
        if !ok {
            return Err(Error::dims(wx, wh, "lstm weights must be [4H, F] and [4H, H] with bias [4H]"));
        }
        Ok(Self { w_x, w_h, b })
    }

    pub fn init(rng: &mut SeededRng, inputs: usize, hidden: usize) -> Result<Self> {
        let fan_in = inputs + hidden;
        let w_x = Tensor::fan_in_uniform(rng, &[4 * hidden, inputs], fan_in)?;
        let w_h = Tensor::fan_in_uniform(rng, &[4 * hidden, hidden], fan_in)?;
        let b = Tensor::fan_in_uniform(rng, &[4 * hidden], fan_in)?;
        Self::new(w_x, w_h, b)
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape()[1]
    }

    pub fn inputs(&self) -> usize {
        self.w_x.shape()[1]
    }

    /// Runs the cell over `xs` (`[T, F]`) from the given initial state and
    /// returns every hidden state as `[T, H]`.
    pub fn forward(&self, xs: &Tensor, h0: &[f64], c0: &[f64]) -> Result<(Tensor, LstmCache)> {
        let (h, f) = (self.hidden(), self.inputs());
        if xs.shape().len() != 2 || xs.cols() != f {
            return Err(Error::dims(xs.shape(), &[0, f], "lstm input [T, F]"));
        }
        if h0.len() != h || c0.len() != h {
            return Err(Error::dims(&[h0.len(), c0.len()], &[h, h], "lstm initial state"));
        }
        let steps = xs.rows();
        let g4 = 4 * h;
        let mut gates = vec![0.0; steps * g4];
        let mut hs = Vec::with_capacity((steps + 1) * h);
        let mut cs = Vec::with_capacity((steps + 1) * h);
        let mut tanh_cs = Vec::with_capacity(steps * h);
        hs.extend_from_slice(h0);
        cs.extend_from_slice(c0);
        let (wx, wh, b) = (self.w_x.data(), self.w_h.data(), self.b.data());

        for t in 0..steps {
            let x = xs.row(t);
            let a = &mut gates[t * g4..(t + 1) * g4];
            let h_prev = &hs[t * h..(t + 1) * h];
            for r in 0..g4 {
                let mut s = b[r];
                s += wx[r * f..(r + 1) * f].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                s += wh[r * h..(r + 1) * h].iter().zip(h_prev).map(|(w, v)| w * v).sum::<f64>();
                a[r] = s;
            }
            for j in 0..h {
                a[j] = sigmoid(a[j]);
                a[h + j] = sigmoid(a[h + j]);
                a[2 * h + j] = a[2 * h + j].tanh();
                a[3 * h + j] = sigmoid(a[3 * h + j]);
            }
            for j in 0..h {
                let c = a[h + j] * cs[t * h + j] + a[j] * a[2 * h + j];
                let tc = c.tanh();
                cs.push(c);
                tanh_cs.push(tc);
                hs.push(a[3 * h + j] * tc);
            }
        }

        let out = Tensor::new(&[steps, h], hs[h..].to_vec())?;
        Ok((
            out,
            LstmCache {
                xs: xs.clone(),
                gates,
                hs,
                cs,
                tanh_cs,
            },
        ))
    }

    /// Backpropagation through time given `dL/dh_t` for every step.
    pub fn backward(&self, cache: &LstmCache, dhs: &Tensor) -> Result<LstmGrads> {
        let (h, f) = (self.hidden(), self.inputs());
        let steps = cache.xs.rows();
        if cache.xs.cols() != f || cache.hs.len() != (steps + 1) * h {
            return Err(Error::Contract("lstm cache does not belong to this cell".into()));
        }
        if dhs.shape() != [steps, h] {
            return Err(Error::dims(dhs.shape(), &[steps, h], "lstm upstream gradient"));
        }
        let g4 = 4 * h;
        let (wx, wh) = (self.w_x.data(), self.w_h.data());
        let mut dwx = vec![0.0; wx.len()];
        let mut dwh = vec![0.0; wh.len()];
        let mut db = vec![0.0; g4];
        let mut dxs = vec![0.0; steps * f];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; g4];

        for t in (0..steps).rev() {
            let gate = &cache.gates[t * g4..(t + 1) * g4];
            let c_prev = &cache.cs[t * h..(t + 1) * h];
            let tanh_c = &cache.tanh_cs[t * h..(t + 1) * h];
            let h_prev = &cache.hs[t * h..(t + 1) * h];
            let dh_out = dhs.row(t);
            for j in 0..h {
                let (i, fg, g, o) = (gate[j], gate[h + j], gate[2 * h + j], gate[3 * h + j]);
                let dh = dh_out[j] + dh_next[j];
                let dc = dc_next[j] + dh * o * (1.0 - tanh_c[j] * tanh_c[j]);
                da[j] = dc * g * i * (1.0 - i);
                da[h + j] = dc * c_prev[j] * fg * (1.0 - fg);
                da[2 * h + j] = dc * i * (1.0 - g * g);
                da[3 * h + j] = dh * tanh_c[j] * o * (1.0 - o);
                dc_next[j] = dc * fg;
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            let x = cache.xs.row(t);
            let dx = &mut dxs[t * f..(t + 1) * f];
            for r in 0..g4 {
                let g = da[r];
                db[r] += g;
                for ((dw, &xv), (dxv, &w)) in dwx[r * f..(r + 1) * f]
                    .iter_mut()
                    .zip(x)
                    .zip(dx.iter_mut().zip(&wx[r * f..(r + 1) * f]))
                {
                    *dw += g * xv;
                    *dxv += g * w;
                }
                for ((dw, &hv), (dhv, &w)) in dwh[r * h..(r + 1) * h]
                    .iter_mut()
                    .zip(h_prev)
                    .zip(dh_next.iter_mut().zip(&wh[r * h..(r + 1) * h]))
                {
                    *dw += g * hv;
                    *dhv += g * w;
                }
            }
        }

        Ok(LstmGrads {
            inputs: Tensor::new(cache.xs.shape(), dxs)?,
            w_x: Tensor::new(self.w_x.shape(), dwx)?,
            w_h: Tensor::new(self.w_h.shape(), dwh)?,
            b: Tensor::new(&[g4], db)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_grads_close, finite_difference, random_projection};

    #[test]
    fn zero_weights_give_zero_hidden_states() {
        let cell = LstmCell::new(
            Tensor::zeros(&[8, 3]).unwrap(),
            Tensor::zeros(&[8, 2]).unwrap(),
            Tensor::zeros(&[8]).unwrap(),
        )
        .unwrap();
        let xs = Tensor::new(&[4, 3], (0..12).map(|v| v as f64 - 5.0).collect()).unwrap();
        let (hs, _) = cell.forward(&xs, &[0.0; 2], &[0.0; 2]).unwrap();
        assert!(hs.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_step_matches_hand_evaluation() {
        // Gate order i, f, g, o.
        let wx = [0.5, -0.3, 0.8, 0.2];
        let wh = [0.1, 0.4, -0.6, 0.3];
        let b = [0.05, 0.1, -0.2, 0.0];
        let cell = LstmCell::new(
            Tensor::new(&[4, 1], wx.to_vec()).unwrap(),
            Tensor::new(&[4, 1], wh.to_vec()).unwrap(),
            Tensor::from_vec(b.to_vec()).unwrap(),
        )
        .unwrap();
        let x = 1.5;
        let (h0, c0) = (0.2, -0.4);
        let pre = |k: usize| wx[k] * x + wh[k] * h0 + b[k];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (i, f, g, o) = (sig(pre(0)), sig(pre(1)), pre(2).tanh(), sig(pre(3)));
        let c1 = f * c0 + i * g;
        let h1 = o * c1.tanh();
        let (hs, _) = cell.forward(&Tensor::new(&[1, 1], vec![x]).unwrap(), &[h0], &[c0]).unwrap();
        assert!((hs.data()[0] - h1).abs() < 1e-15);
    }

    #[test]
    fn output_depends_only_on_given_initial_state() {
        let mut rng = SeededRng::new(5);
        let cell = LstmCell::init(&mut rng, 2, 3).unwrap();
        let xs = Tensor::fan_in_uniform(&mut rng, &[5, 2], 1).unwrap();
        let zero = [0.0; 3];
        let (first, _) = cell.forward(&xs, &zero, &zero).unwrap();
        let _ = cell.forward(&xs, &[0.9; 3], &[2.0; 3]).unwrap();
        let (second, _) = cell.forward(&xs, &zero, &zero).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn hidden_states_are_bounded() {
        let mut rng = SeededRng::new(9);
        let cell = LstmCell::init(&mut rng, 3, 4).unwrap();
        let xs = Tensor::random(&mut rng, &[30, 3], crate::tensor::Distribution::Normal { mean: 0.0, std_dev: 10.0 }).unwrap();
        let (hs, _) = cell.forward(&xs, &[0.0; 4], &[0.0; 4]).unwrap();
        assert!(hs.data().iter().all(|v| v.abs() <= 1.0));
    }

    fn projected_loss(cell: &LstmCell, xs: &Tensor, proj: &[f64]) -> f64 {
        let h = cell.hidden();
        let (hs, _) = cell.forward(xs, &vec![0.0; h], &vec![0.0; h]).unwrap();
        hs.data().iter().zip(proj).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn bptt_matches_finite_differences() {
        let mut rng = SeededRng::new(31);
        let cell = LstmCell::init(&mut rng, 2, 2).unwrap();
        let xs = Tensor::random(&mut rng, &[3, 2], crate::tensor::Distribution::Normal { mean: 0.0, std_dev: 1.0 }).unwrap();
        let proj = random_projection(&mut rng, 6);
        let (_, cache) = cell.forward(&xs, &[0.0; 2], &[0.0; 2]).unwrap();
        let grads = cell.backward(&cache, &Tensor::new(&[3, 2], proj.clone()).unwrap()).unwrap();

        let check = |analytic: &Tensor, pick: fn(&mut LstmCell) -> &mut Tensor| {
            let mut probe = cell.clone();
            let base = pick(&mut probe).data().to_vec();
            let fd = finite_difference(1e-5, &base, |w| {
                let mut c = cell.clone();
                pick(&mut c).data_mut().copy_from_slice(w);
                projected_loss(&c, &xs, &proj)
            });
            assert_grads_close(analytic.data(), &fd, 1e-4);
        };
        check(&grads.w_x, |c| &mut c.w_x);
        check(&grads.w_h, |c| &mut c.w_h);
        check(&grads.b, |c| &mut c.b);
        let fd_x = finite_difference(1e-5, xs.data(), |v| {
            projected_loss(&cell, &Tensor::new(&[3, 2], v.to_vec()).unwrap(), &proj)
        });
        assert_grads_close(grads.inputs.data(), &fd_x, 1e-4);
    }

    #[test]
    fn later_inputs_do_not_affect_earlier_losses() {
        let mut rng = SeededRng::new(12);
        let cell = LstmCell::init(&mut rng, 2, 3).unwrap();
        let xs = Tensor::fan_in_uniform(&mut rng, &[4, 2], 1).unwrap();
        // Loss only on h_1.
        let mut proj = vec![0.0; 12];
        proj[..3].copy_from_slice(&[0.4, -1.1, 0.7]);
        let (_, cache) = cell.forward(&xs, &[0.0; 3], &[0.0; 3]).unwrap();
        let grads = cell.backward(&cache, &Tensor::new(&[4, 3], proj.clone()).unwrap()).unwrap();
        let fd = finite_difference(1e-5, xs.data(), |v| {
            projected_loss(&cell, &Tensor::new(&[4, 2], v.to_vec()).unwrap(), &proj)
        });
        for t in 1..4 {
            for j in 0..2 {
                assert_eq!(grads.inputs.get2(t, j), 0.0);
                assert_eq!(fd[t * 2 + j], 0.0);
            }
        }
        assert!(grads.inputs.row(0).iter().any(|&g| g != 0.0));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = SeededRng::new(2);
        let cell = LstmCell::init(&mut rng, 2, 2).unwrap();
        let xs = Tensor::fan_in_uniform(&mut rng, &[3, 2], 1).unwrap();
        let (_, cache) = cell.forward(&xs, &[0.0; 2], &[0.0; 2]).unwrap();
        let g = cell.backward(&cache, &Tensor::zeros(&[3, 2]).unwrap()).unwrap();
        for t in [&g.inputs, &g.w_x, &g.w_h, &g.b] {
            assert!(t.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn shape_errors() {
        let mut rng = SeededRng::new(2);
        let cell = LstmCell::init(&mut rng, 2, 2).unwrap();
        assert!(cell.forward(&Tensor::zeros(&[3, 3]).unwrap(), &[0.0; 2], &[0.0; 2]).is_err());
        assert!(cell.forward(&Tensor::zeros(&[3, 2]).unwrap(), &[0.0; 1], &[0.0; 2]).is_err());
        let (_, cache) = cell.forward(&Tensor::zeros(&[3, 2]).unwrap(), &[0.0; 2], &[0.0; 2]).unwrap();
        assert!(cell.backward(&cache, &Tensor::zeros(&[2, 2]).unwrap()).is_err());
        let other = LstmCell::init(&mut rng, 3, 2).unwrap();
        assert!(matches!(other.backward(&cache, &Tensor::zeros(&[3, 2]).unwrap()), Err(Error::Contract(_))));
    }
}
