use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Output head applied after the final affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Head {
    Linear,
    /// `scale * tanh(z)`, keeping every component inside `[-scale, scale]`.
    Bounded {
        scale: f64,
    },
}

/// Fully connected network: rectified-linear hidden layers and a configurable
/// head. Parameters are stored flat, layer after layer, each layer being a
/// row-major `out x in` weight matrix followed by `out` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    layer_dims: Vec<usize>,
    head: Head,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Activations cached by a batched forward pass, consumed by the backward pass.
#[derive(Clone, Debug)]
pub struct BatchTrace {
    rows: usize,
    /// `activations[0]` is the input, `activations[l]` the post-activation of
    /// layer `l`; the last entry is the head output.
    activations: Vec<Vec<f64>>,
}

impl BatchTrace {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has at least the input")
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.activations.pop().expect("trace has at least the input")
    }
}

fn param_count(layer_dims: &[usize]) -> usize {
    layer_dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

fn layer_offsets(layer_dims: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(layer_dims.len());
    let mut acc = 0;
    offsets.push(0);
    for w in layer_dims.windows(2) {
        acc += (w[0] + 1) * w[1];
        offsets.push(acc);
    }
    offsets
}

/// `c = alpha * a * b + beta * c` over strided row-major views.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() > (m - 1) * rsc + (n - 1));
    // SAFETY: the asserts above bound every index dgemm touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

impl DenseNet {
    /// Seeded uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new<R: Rng + ?Sized>(layer_dims: Vec<usize>, head: Head, rng: &mut R) -> Result<Self> {
        validate_dims(&layer_dims)?;
        let mut params = Vec::with_capacity(param_count(&layer_dims));
        for w in layer_dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] + 1) * w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Self::from_params(layer_dims, head, params)
    }

    pub fn zeros(layer_dims: Vec<usize>, head: Head) -> Result<Self> {
        validate_dims(&layer_dims)?;
        let n = param_count(&layer_dims);
        Self::from_params(layer_dims, head, vec![0.0; n])
    }

    pub fn from_params(layer_dims: Vec<usize>, head: Head, params: Vec<f64>) -> Result<Self> {
        validate_dims(&layer_dims)?;
        if let Head::Bounded { scale } = head {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::Config(format!(
                    "bounded head scale must be positive, got {scale}"
                )));
            }
        }
        check_dim("DenseNet params", param_count(&layer_dims), params.len())?;
        let offsets = layer_offsets(&layer_dims);
        Ok(Self {
            layer_dims,
            head,
            params,
            offsets,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    /// Weights (row-major `out x in`) and biases of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
        let start = self.offsets[l];
        let w_end = start + fan_in * fan_out;
        (&self.params[start..w_end], &self.params[w_end..self.offsets[l + 1]])
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(x, 1)?.into_output())
    }

    /// Reverse-mode derivatives of `upstream . forward(x)` with respect to the
    /// parameters and the input.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let trace = self.forward_batch(x, 1)?;
        self.backward_batch(&trace, upstream)
    }

    /// Forward `rows` inputs stored row-major in `x`.
    pub fn forward_batch(&self, x: &[f64], rows: usize) -> Result<BatchTrace> {
        check_dim("DenseNet input", rows * self.input_dim(), x.len())?;
        let mut activations = Vec::with_capacity(self.layer_dims.len());
        activations.push(x.to_vec());
        let last = self.num_layers() - 1;
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let (w, b) = self.layer(l);
            let mut out = Vec::with_capacity(rows * fan_out);
            for _ in 0..rows {
                out.extend_from_slice(b);
            }
            let input = &activations[l];
            gemm(
                rows, fan_in, fan_out, input, fan_in, 1, w, 1, fan_in, 1.0, &mut out, fan_out,
            );
            if l < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            } else if let Head::Bounded { scale } = self.head {
                out.iter_mut().for_each(|v| *v = scale * v.tanh());
            }
            activations.push(out);
        }
        Ok(BatchTrace { rows, activations })
    }

    /// Gradient of `sum_rows upstream_row . output_row` with respect to the
    /// parameters (summed over rows) and to each input row.
    pub fn backward_batch(&self, trace: &BatchTrace, upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut param_grad = vec![0.0; self.params.len()];
        let input_grad = self.backprop(trace, upstream, Some(&mut param_grad))?;
        Ok((param_grad, input_grad))
    }

    /// Input gradient only; skips the parameter-gradient products.
    pub fn input_grad_batch(&self, trace: &BatchTrace, upstream: &[f64]) -> Result<Vec<f64>> {
        self.backprop(trace, upstream, None)
    }

    fn backprop(
        &self,
        trace: &BatchTrace,
        upstream: &[f64],
        mut param_grad: Option<&mut Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let rows = trace.rows;
        check_dim("DenseNet upstream", rows * self.output_dim(), upstream.len())?;
        let mut delta = upstream.to_vec();
        if let Head::Bounded { scale } = self.head {
            for (d, y) in delta.iter_mut().zip(trace.output()) {
                let t = y / scale;
                *d *= scale * (1.0 - t * t);
            }
        }
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let input = &trace.activations[l];
            if let Some(grad) = param_grad.as_deref_mut() {
                let start = self.offsets[l];
                let w_end = start + fan_in * fan_out;
                gemm(
                    fan_out,
                    rows,
                    fan_in,
                    &delta,
                    1,
                    fan_out,
                    input,
                    fan_in,
                    1,
                    0.0,
                    &mut grad[start..w_end],
                    fan_in,
                );
                let gb = &mut grad[w_end..self.offsets[l + 1]];
                for row in delta.chunks_exact(fan_out) {
                    gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
                }
            }
            let (w, _) = self.layer(l);
            let mut next = vec![0.0; rows * fan_in];
            gemm(
                rows, fan_out, fan_in, &delta, fan_out, 1, w, fan_in, 1, 0.0, &mut next, fan_in,
            );
            if l > 0 {
                for (d, a) in next.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// `self <- retain * self + (1 - retain) * source`.
    pub fn soft_update_from(&mut self, source: &DenseNet, retain: f64) {
        assert_eq!(
            self.layer_dims, source.layer_dims,
            "soft update between mismatched nets"
        );
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = retain * *t + (1.0 - retain) * s;
        }
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer_dims must be >= 2 positive entries, got {layer_dims:?}"
        )));
    }
    Ok(())
}
