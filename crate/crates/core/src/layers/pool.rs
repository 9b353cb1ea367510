use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Positions selected by a max-pool forward pass.
#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    argmax: Vec<usize>,
    input_shape: Vec<usize>,
}

/// Non-overlapping max pooling over the time axis of a `[T, C]` tensor.
/// Output is `[T / window, C]`; trailing rows that do not fill a window are
/// dropped. Ties go to the earliest row.
pub fn maxpool1d(x: &Tensor, window: usize) -> Result<(Tensor, MaxPoolCache)> {
    if window == 0 {
        return Err(Error::Parameter("pool window must be >= 1".into()));
    }
    let (t_in, c) = (x.rows(), x.cols());
    if t_in < window {
        return Err(Error::Window { len: t_in, window });
    }
    let t_out = t_in / window;
    let mut y = vec![0.0; t_out * c];
    let mut argmax = vec![0; t_out * c];
    for o in 0..t_out {
        for ch in 0..c {
            let mut best = o * window;
            for t in o * window + 1..(o + 1) * window {
                if x.get2(t, ch) > x.get2(best, ch) {
                    best = t;
                }
            }
            y[o * c + ch] = x.get2(best, ch);
            argmax[o * c + ch] = best;
        }
    }
    Ok((
        Tensor::new(&[t_out, c], y)?,
        MaxPoolCache {
            argmax,
            input_shape: x.shape().to_vec(),
        },
    ))
}

/// Routes each upstream gradient to the row that won its window.
pub fn maxpool1d_backward(cache: &MaxPoolCache, dy: &Tensor) -> Result<Tensor> {
    if dy.len() != cache.argmax.len() {
        return Err(Error::dims(dy.shape(), &[cache.argmax.len()], "maxpool upstream gradient"));
    }
    let c = dy.cols();
    let mut dx = Tensor::zeros(&cache.input_shape)?;
    for (i, (&row, &g)) in cache.argmax.iter().zip(dy.data()).enumerate() {
        dx.data_mut()[row * c + i % c] += g;
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Tensor {
        Tensor::new(&[values.len(), 1], values.to_vec()).unwrap()
    }

    #[test]
    fn pairs() {
        let (y, _) = maxpool1d(&column(&[1.0, 3.0, 2.0, 0.0]), 2).unwrap();
        let oracle: Vec<f64> = [1.0, 3.0, 2.0, 0.0]
            .chunks(2)
            .map(|w| w.iter().copied().fold(f64::MIN, f64::max))
            .collect();
        assert_eq!(y.data(), oracle.as_slice());
    }

    #[test]
    fn unit_window_is_identity() {
        let x = Tensor::new(&[3, 2], vec![1.0, -1.0, 2.0, 0.5, -3.0, 4.0]).unwrap();
        let (y, _) = maxpool1d(&x, 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn ties_route_to_first_element() {
        let x = column(&[2.0; 6]);
        let (y, cache) = maxpool1d(&x, 3).unwrap();
        let dx = maxpool1d_backward(&cache, &column(&vec![1.0; y.rows()])).unwrap();
        assert_eq!(dx.data(), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn window_errors() {
        assert!(matches!(maxpool1d(&column(&[1.0]), 2), Err(Error::Window { .. })));
        assert!(maxpool1d(&column(&[1.0]), 0).is_err());
    }

    #[test]
    fn backward_per_channel() {
        let x = Tensor::new(&[4, 2], vec![1.0, 9.0, 5.0, 2.0, 0.0, 3.0, 7.0, 3.5]).unwrap();
        let (y, cache) = maxpool1d(&x, 2).unwrap();
        assert_eq!(y.data(), &[5.0, 9.0, 7.0, 3.5]);
        let dx = maxpool1d_backward(&cache, &Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 3.0, 4.0]);
    }
}
