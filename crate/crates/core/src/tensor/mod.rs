//! Dense row-major `f64` tensors and the seeded generator used to fill them.

mod rng;

pub use rng::SeededRng;

use crate::error::{Error, Result};

/// Dense row-major array with an explicit shape. Zero-sized dimensions are
/// rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std_dev: f64 },
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::Parameter("tensor shape must have at least one dimension".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Parameter(format!("zero-sized dimension in shape {shape:?}")));
    }
    Ok(shape.iter().product())
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len = check_shape(shape)?;
        if data.len() != len {
            return Err(Error::dims(shape, &[data.len()], "data length vs shape"));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(&[n], data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dims(&[cols], &[bad.len()], "ragged rows"));
        }
        Self::new(&[rows.len(), cols], rows.concat())
    }

    /// `n × n` identity.
    pub fn eye(n: usize) -> Result<Self> {
        let mut t = Self::zeros(&[n, n])?;
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Width of a 2-D tensor; 1 for vectors.
    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            1
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn require_matrix(&self, context: &'static str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            other => Err(Error::dims(other, &[0, 0], context)),
        }
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.require_matrix("transpose requires a matrix")?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Self::new(&[c, r], out)
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Self> {
        let (m, k) = self.require_matrix("matmul lhs")?;
        let (k2, n) = other.require_matrix("matmul rhs")?;
        if k != k2 {
            return Err(Error::dims(&self.shape, &other.shape, "matmul inner dimensions"));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self::new(&[m, n], out)
    }

    pub fn elementwise(&self, op: ElementwiseOp, other: &Tensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dims(&self.shape, &other.shape, "elementwise"));
        }
        let f: fn(f64, f64) -> f64 = match op {
            ElementwiseOp::Add => |a, b| a + b,
            ElementwiseOp::Sub => |a, b| a - b,
            ElementwiseOp::Mul => |a, b| a * b,
        };
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.elementwise(ElementwiseOp::Add, other)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.elementwise(ElementwiseOp::Sub, other)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Self> {
        self.elementwise(ElementwiseOp::Mul, other)
    }

    /// In-place `self += other`.
    pub fn accumulate(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dims(&self.shape, &other.shape, "accumulate"));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn reduce(&self, op: Reduction) -> f64 {
        reduce(op, &self.data).expect("tensors are never empty")
    }

    pub fn random(rng: &mut SeededRng, shape: &[usize], dist: Distribution) -> Result<Self> {
        let len = check_shape(shape)?;
        match dist {
            Distribution::Uniform { lo, hi } if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(Error::Parameter(format!("uniform bounds must satisfy lo <= hi, got ({lo}, {hi})")))
            }
            Distribution::Normal { std_dev, .. } if !(std_dev >= 0.0) || !std_dev.is_finite() => {
                Err(Error::Parameter(format!("normal std_dev must be >= 0, got {std_dev}")))
            }
            Distribution::Uniform { lo, hi } => {
                let data = (0..len).map(|_| rng.uniform(lo, hi)).collect();
                Self::new(shape, data)
            }
            Distribution::Normal { mean, std_dev } => {
                let data = (0..len).map(|_| rng.normal(mean, std_dev)).collect();
                Self::new(shape, data)
            }
        }
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), used for every layer's weights.
    pub fn fan_in_uniform(rng: &mut SeededRng, shape: &[usize], fan_in: usize) -> Result<Self> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        Self::random(rng, shape, Distribution::Uniform { lo: -bound, hi: bound })
    }
}

/// Exact reduction of a nonempty slice.
pub fn reduce(op: Reduction, values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("reduction over an empty slice"));
    }
    Ok(match op {
        Reduction::Sum => values.iter().sum(),
        Reduction::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Reduction::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t2(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_matmul() {
        let b = t2(&[&[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(Tensor::eye(2).unwrap().matmul(&b).unwrap(), b);
    }

    #[test]
    fn row_times_column() {
        let a = t2(&[&[1.0, 2.0]]);
        let b = t2(&[&[3.0], &[4.0]]);
        let dot: f64 = [1.0 * 3.0, 2.0 * 4.0].iter().sum();
        assert_eq!(a.matmul(&b).unwrap().data(), &[dot]);
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(Tensor::zeros(&[1, 0]).is_err());
        assert!(Tensor::new(&[0, 1], vec![]).is_err());
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]).unwrap();
        let b = Tensor::zeros(&[2, 3]).unwrap();
        let msg = a.matmul(&b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn elementwise_examples() {
        let v = |x: &[f64]| Tensor::from_vec(x.to_vec()).unwrap();
        assert_eq!(v(&[1.0, 2.0]).add(&v(&[0.0, 0.0])).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(v(&[2.0, 3.0]).mul(&v(&[4.0, 5.0])).unwrap(), v(&[2.0 * 4.0, 3.0 * 5.0]));
        assert_eq!(v(&[1.0]).sub(&v(&[1.0])).unwrap(), v(&[0.0]));
        assert!(v(&[1.0]).add(&v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn reductions() {
        let mut acc = 0.0;
        for x in [1.0, 2.0, 3.0] {
            acc += x;
        }
        assert_eq!(reduce(Reduction::Sum, &[1.0, 2.0, 3.0]).unwrap(), acc);
        assert_eq!(reduce(Reduction::Mean, &[5.0; 4]).unwrap(), 5.0);
        let m = if -1.0 > -7.0 { -1.0 } else { -7.0 };
        assert_eq!(reduce(Reduction::Max, &[-1.0, -7.0]).unwrap(), m);
        assert!(matches!(reduce(Reduction::Sum, &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn degenerate_uniform_is_constant() {
        let mut rng = SeededRng::new(5);
        let t = Tensor::random(&mut rng, &[4, 3], Distribution::Uniform { lo: 0.0, hi: 0.0 }).unwrap();
        assert!(t.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn random_tensor_reproducible() {
        let draw = || {
            let mut rng = SeededRng::new(42);
            Tensor::random(&mut rng, &[3], Distribution::Uniform { lo: 0.0, hi: 1.0 }).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn normal_sample_mean_near_zero() {
        let mut rng = SeededRng::new(2024);
        let t = Tensor::random(&mut rng, &[10_000], Distribution::Normal { mean: 0.0, std_dev: 1.0 }).unwrap();
        let mean = t.reduce(Reduction::Mean);
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn invalid_distribution_params() {
        let mut rng = SeededRng::new(1);
        assert!(Tensor::random(&mut rng, &[2], Distribution::Uniform { lo: 1.0, hi: 0.0 }).is_err());
        assert!(Tensor::random(&mut rng, &[2], Distribution::Normal { mean: 0.0, std_dev: -1.0 }).is_err());
    }

    fn matrix(rng: &mut SeededRng, r: usize, c: usize) -> Tensor {
        Tensor::random(rng, &[r, c], Distribution::Uniform { lo: -1.0, hi: 1.0 }).unwrap()
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), m in 1usize..5, k in 1usize..5, n in 1usize..5, p in 1usize..5) {
            let mut rng = SeededRng::new(seed);
            let a = matrix(&mut rng, m, k);
            let b = matrix(&mut rng, k, n);
            let c = matrix(&mut rng, n, p);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn elementwise_commutes_with_transpose(seed in any::<u64>(), r in 1usize..6, c in 1usize..6) {
            let mut rng = SeededRng::new(seed);
            let a = matrix(&mut rng, r, c);
            let b = matrix(&mut rng, r, c);
            for op in [ElementwiseOp::Add, ElementwiseOp::Sub, ElementwiseOp::Mul] {
                let lhs = a.elementwise(op, &b).unwrap().transpose().unwrap();
                let rhs = a.transpose().unwrap().elementwise(op, &b.transpose().unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
