//! Dense neural-network substrate with hand-written backward passes.
//!
//! Forward functions return the output together with a cache value; the
//! matching backward function consumes that cache, so a backward pass
//! without its forward pass does not type-check.

mod adam;
mod check;
mod propagate;

pub use adam::{Adam, AdamState};
pub use check::{grad_check, GradCheckReport, DEFAULT_CHECK_COORDS, DEFAULT_CHECK_STEP};
pub use propagate::{BlockOperator, GcnOperator, Propagate};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{input_err, Result};
use crate::linalg::DenseMatrix;
use crate::math;

/// Lower/upper clamp applied to sigmoid outputs before they reach a log.
pub const SIGMOID_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
    /// Logistic sigmoid, clamped to `[SIGMOID_CLAMP, 1 − SIGMOID_CLAMP]`.
    Sigmoid,
    None,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => math::tanh(x),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + math::exp(-x));
                s.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
            }
            Activation::None => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                if y <= SIGMOID_CLAMP || y >= 1.0 - SIGMOID_CLAMP {
                    0.0
                } else {
                    y * (1.0 - y)
                }
            }
            Activation::None => 1.0,
        }
    }
}

/// Weights of one layer: `act(F W + b)` (dense) or `act(P F W + b)` (GCN).
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weight: DenseMatrix,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl LayerParams {
    /// Xavier-initialized weight, zero bias when `bias` is set.
    pub fn xavier(
        fan_in: usize,
        fan_out: usize,
        bias: bool,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            weight: xavier_init(fan_in, fan_out, rng),
            bias: bias.then(|| vec![0.0; fan_out]),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    fn check_input(&self, input: &DenseMatrix) -> Result<()> {
        if input.cols() != self.fan_in() {
            return Err(input_err!(
                "layer expects {} input columns, got {}",
                self.fan_in(),
                input.cols()
            ));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.fan_out() {
                return Err(input_err!("bias length {} != {}", b.len(), self.fan_out()));
            }
        }
        Ok(())
    }

    fn activate(&self, mut pre: DenseMatrix) -> DenseMatrix {
        if let Some(b) = &self.bias {
            for i in 0..pre.rows() {
                for (v, bj) in pre.row_mut(i).iter_mut().zip(b) {
                    *v += bj;
                }
            }
        }
        pre.map_inplace(|x| self.activation.apply(x));
        pre
    }

    /// `dL/d(pre-activation)` from the upstream gradient and cached output.
    fn pre_gradient(&self, output: &DenseMatrix, upstream: &DenseMatrix) -> DenseMatrix {
        output.zip_map(upstream, |y, g| g * self.activation.derivative(y))
    }

    fn bias_gradient(&self, dz: &DenseMatrix) -> Option<Vec<f64>> {
        self.bias.as_ref().map(|_| {
            let mut db = vec![0.0; dz.cols()];
            for i in 0..dz.rows() {
                for (acc, v) in db.iter_mut().zip(dz.row(i)) {
                    *acc += v;
                }
            }
            db
        })
    }
}

/// Uniform entries in `±√(6 / (rows + cols))`.
pub fn xavier_init(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let bound = math::sqrt(6.0 / (rows + cols) as f64);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Gradients of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weight: DenseMatrix,
    pub bias: Option<Vec<f64>>,
    pub input: DenseMatrix,
}

/// Saved by [`gcn_forward`] for [`gcn_backward`].
#[derive(Clone, Debug)]
pub struct GcnCache {
    propagated: DenseMatrix,
    output: DenseMatrix,
}

impl GcnCache {
    pub fn output(&self) -> &DenseMatrix {
        &self.output
    }
}

/// `act(P F W + b)`, propagating first so the sparse product runs on the
/// narrower input.
pub fn gcn_forward<P: Propagate + ?Sized>(
    prop: &P,
    input: &DenseMatrix,
    layer: &LayerParams,
) -> Result<(DenseMatrix, GcnCache)> {
    layer.check_input(input)?;
    if input.rows() != prop.dim() {
        return Err(input_err!(
            "operator has {} nodes but features have {} rows",
            prop.dim(),
            input.rows()
        ));
    }
    let propagated = prop.propagate(input);
    let output = layer.activate(propagated.matmul(&layer.weight));
    Ok((output.clone(), GcnCache { propagated, output }))
}

/// `dW = (P F)ᵀ dZ`, `dF = Pᵀ dZ Wᵀ` with `dZ = upstream ⊙ act′`.
pub fn gcn_backward<P: Propagate + ?Sized>(
    prop: &P,
    cache: &GcnCache,
    layer: &LayerParams,
    upstream: &DenseMatrix,
) -> Result<LayerGrads> {
    if upstream.shape() != cache.output.shape() {
        return Err(input_err!(
            "upstream gradient {:?} does not match layer output {:?}",
            upstream.shape(),
            cache.output.shape()
        ));
    }
    let dz = layer.pre_gradient(&cache.output, upstream);
    Ok(LayerGrads {
        weight: cache.propagated.t_matmul(&dz),
        bias: layer.bias_gradient(&dz),
        // P is symmetric
        input: prop.propagate(&dz.matmul_t(&layer.weight)),
    })
}

/// Saved by [`dense_forward`] for [`dense_backward`].
#[derive(Clone, Debug)]
pub struct DenseCache {
    input: DenseMatrix,
    output: DenseMatrix,
}

impl DenseCache {
    pub fn output(&self) -> &DenseMatrix {
        &self.output
    }
}

/// `act(F W + b)`.
pub fn dense_forward(
    input: &DenseMatrix,
    layer: &LayerParams,
) -> Result<(DenseMatrix, DenseCache)> {
    layer.check_input(input)?;
    let output = layer.activate(input.matmul(&layer.weight));
    Ok((
        output.clone(),
        DenseCache {
            input: input.clone(),
            output,
        },
    ))
}

pub fn dense_backward(
    cache: &DenseCache,
    layer: &LayerParams,
    upstream: &DenseMatrix,
) -> Result<LayerGrads> {
    if upstream.shape() != cache.output.shape() {
        return Err(input_err!(
            "upstream gradient {:?} does not match layer output {:?}",
            upstream.shape(),
            cache.output.shape()
        ));
    }
    let dz = layer.pre_gradient(&cache.output, upstream);
    Ok(LayerGrads {
        weight: cache.input.t_matmul(&dz),
        bias: layer.bias_gradient(&dz),
        input: dz.matmul_t(&layer.weight),
    })
}
