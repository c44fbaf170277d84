//! The black-box query interface shared by every deployable model.
//!
//! The membership attack only ever sees a `&dyn Predictor`, so it cannot
//! reach into a defense's internals.

use crate::error::Result;
use crate::nn::{ConfidenceVector, MlpModel};

pub trait Predictor: Send + Sync {
    fn input_dim(&self) -> usize;
    fn class_count(&self) -> usize;
    /// Full confidence vector for one query.
    fn predict(&self, x: &[f64]) -> Result<ConfidenceVector>;
}

impl Predictor for MlpModel {
    fn input_dim(&self) -> usize {
        MlpModel::input_dim(self)
    }

    fn class_count(&self) -> usize {
        MlpModel::class_count(self)
    }

    fn predict(&self, x: &[f64]) -> Result<ConfidenceVector> {
        self.forward(x)
    }
}

/// Adapts a closure into a [`Predictor`].
pub struct FnPredictor<F> {
    input_dim: usize,
    class_count: usize,
    f: F,
}

impl<F> FnPredictor<F>
where
    F: Fn(&[f64]) -> Result<ConfidenceVector> + Send + Sync,
{
    pub fn new(input_dim: usize, class_count: usize, f: F) -> Self {
        Self {
            input_dim,
            class_count,
            f,
        }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&[f64]) -> Result<ConfidenceVector> + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn predict(&self, x: &[f64]) -> Result<ConfidenceVector> {
        (self.f)(x)
    }
}
