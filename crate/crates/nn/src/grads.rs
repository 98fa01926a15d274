use ndarray::{Array1, Array2};

use crate::{Mlp, NnError, Result};

/// Parameter gradients with the same block layout as [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Grads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            w1: Array2::zeros(mlp.w1.dim()),
            b1: Array1::zeros(mlp.b1.len()),
            w2: Array2::zeros(mlp.w2.dim()),
            b2: Array1::zeros(mlp.b2.len()),
        }
    }

    pub(crate) fn check_shape(&self, mlp: &Mlp) -> Result<()> {
        if self.w1.dim() != mlp.w1.dim()
            || self.b1.len() != mlp.b1.len()
            || self.w2.dim() != mlp.w2.dim()
            || self.b2.len() != mlp.b2.len()
        {
            return Err(NnError::Shape(format!(
                "gradient blocks {:?}/{:?} do not match parameters {:?}/{:?}",
                self.w1.dim(),
                self.w2.dim(),
                mlp.w1.dim(),
                mlp.w2.dim()
            )));
        }
        Ok(())
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

    pub fn scale(&mut self, k: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v *= k);
        }
    }

    /// Clamps every entry to `[-limit, limit]`.
    pub fn clip(&mut self, limit: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v = v.clamp(-limit, limit));
        }
    }

    pub fn add(&mut self, other: &Grads) {
        self.w1 += &other.w1;
        self.b1 += &other.b1;
        self.w2 += &other.w2;
        self.b2 += &other.b2;
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|(_, b)| b.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|(_, b)| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, block) in self.blocks() {
            if block.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite { block: name });
            }
        }
        Ok(())
    }
}
