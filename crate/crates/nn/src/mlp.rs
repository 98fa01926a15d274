use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::{Grads, NnError, Result};

/// `y = W2 · relu(W1 · x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) w1: Array2<f64>,
    pub(crate) b1: Array1<f64>,
    pub(crate) w2: Array2<f64>,
    pub(crate) b2: Array1<f64>,
}

/// Activations retained by a forward pass, one row per input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Array2<f64>,
    hidden: Array2<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.input.nrows()
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.input
    }
}

impl Mlp {
    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
        };
        let w1 = uniform(hidden_dim, in_dim, in_dim);
        let b1 = uniform(1, hidden_dim, in_dim).remove_axis(Axis(0));
        let w2 = uniform(out_dim, hidden_dim, hidden_dim);
        let b2 = uniform(1, out_dim, hidden_dim).remove_axis(Axis(0));
        Self { w1, b1, w2, b2 }
    }

    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden_dim, in_dim)),
            b1: Array1::zeros(hidden_dim),
            w2: Array2::zeros((out_dim, hidden_dim)),
            b2: Array1::zeros(out_dim),
        }
    }

    pub fn from_parts(
        w1: Array2<f64>,
        b1: Array1<f64>,
        w2: Array2<f64>,
        b2: Array1<f64>,
    ) -> Result<Self> {
        let (hidden, _) = w1.dim();
        let (out, hidden2) = w2.dim();
        if b1.len() != hidden || hidden2 != hidden || b2.len() != out {
            return Err(NnError::Shape(format!(
                "inconsistent parts: w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                w1.dim(),
                b1.len(),
                w2.dim(),
                b2.len()
            )));
        }
        let mlp = Self { w1, b1, w2, b2 };
        mlp.check_finite()?;
        Ok(mlp)
    }

    pub fn in_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w2.nrows()
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn b1(&self) -> &Array1<f64> {
        &self.b1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn b2(&self) -> &Array1<f64> {
        &self.b2
    }

    pub fn b2_mut(&mut self) -> &mut Array1<f64> {
        &mut self.b2
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.w1.dim() == other.w1.dim() && self.w2.dim() == other.w2.dim()
    }

    pub(crate) fn blocks(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("w1", self.w1.as_slice().expect("standard layout")),
            ("b1", self.b1.as_slice().expect("standard layout")),
            ("w2", self.w2.as_slice().expect("standard layout")),
            ("b2", self.b2.as_slice().expect("standard layout")),
        ]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, block) in self.blocks() {
            if block.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite { block: name });
            }
        }
        Ok(())
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.in_dim() {
            return Err(NnError::Dimension {
                what: "input",
                expected: self.in_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    fn hidden_of(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.dot(&self.w1.t());
        h += &self.b1;
        h.mapv_inplace(|v| v.max(0.0));
        h
    }

    /// Batched forward pass without a cache. Rows of `x` are inputs.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let h = self.hidden_of(&x);
        let mut y = h.dot(&self.w2.t());
        y += &self.b2;
        Ok(y)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x.ncols())?;
        let hidden = self.hidden_of(&x);
        let mut y = hidden.dot(&self.w2.t());
        y += &self.b2;
        Ok((
            y,
            ForwardCache {
                input: x.to_owned(),
                hidden,
            },
        ))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let (y, cache) = self.forward_batch(view)?;
        Ok((y.into_raw_vec_and_offset().0, cache))
    }

    fn check_upstream(&self, cache: &ForwardCache, upstream: &ArrayView2<f64>) -> Result<()> {
        if upstream.ncols() != self.out_dim() {
            return Err(NnError::Dimension {
                what: "upstream gradient",
                expected: self.out_dim(),
                got: upstream.ncols(),
            });
        }
        if upstream.nrows() != cache.batch_size() {
            return Err(NnError::Dimension {
                what: "upstream batch",
                expected: cache.batch_size(),
                got: upstream.nrows(),
            });
        }
        if cache.hidden.ncols() != self.hidden_dim() || cache.input.ncols() != self.in_dim() {
            return Err(NnError::Shape("cache does not belong to this network".into()));
        }
        Ok(())
    }

    /// Gradient at the hidden pre-activation.
    fn hidden_delta(&self, cache: &ForwardCache, upstream: &ArrayView2<f64>) -> Array2<f64> {
        let mut dh = upstream.dot(&self.w2);
        Zip::from(&mut dh).and(&cache.hidden).for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0;
            }
        });
        dh
    }

    /// Adds `∂(Σ_rows upstreamᵀ y)/∂params` into `grads`.
    pub fn accumulate_grads(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
        grads: &mut Grads,
    ) -> Result<()> {
        self.check_upstream(cache, &upstream)?;
        grads.check_shape(self)?;
        let dh = self.hidden_delta(cache, &upstream);
        grads.w2 += &upstream.t().dot(&cache.hidden);
        grads.b2 += &upstream.sum_axis(Axis(0));
        grads.w1 += &dh.t().dot(&cache.input);
        grads.b1 += &dh.sum_axis(Axis(0));
        Ok(())
    }

    /// `∂(upstreamᵀ y)/∂x` per row, without touching parameter gradients.
    pub fn input_grad(&self, cache: &ForwardCache, upstream: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_upstream(cache, &upstream)?;
        Ok(self.hidden_delta(cache, &upstream).dot(&self.w1))
    }

    /// Parameter gradients summed over the batch, plus per-row input gradients.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
    ) -> Result<(Grads, Array2<f64>)> {
        self.check_upstream(cache, &upstream)?;
        let mut grads = Grads::zeros_like(self);
        let dh = self.hidden_delta(cache, &upstream);
        grads.w2 += &upstream.t().dot(&cache.hidden);
        grads.b2 += &upstream.sum_axis(Axis(0));
        grads.w1 += &dh.t().dot(&cache.input);
        grads.b1 += &dh.sum_axis(Axis(0));
        let dx = dh.dot(&self.w1);
        Ok((grads, dx))
    }

    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<(Grads, Vec<f64>)> {
        let view = ArrayView2::from_shape((1, upstream.len()), upstream).map_err(|_| {
            NnError::Shape("upstream gradient is not a row vector".into())
        })?;
        let (g, dx) = self.backward_batch(cache, view)?;
        Ok((g, dx.into_raw_vec_and_offset().0))
    }
}
