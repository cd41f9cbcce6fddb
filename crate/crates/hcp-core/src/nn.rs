//! Dense networks with reverse-mode gradients and Adam.
//!
//! Parameters live in one flat vector per network alongside the gradient
//! buffer and Adam moments, so checkpointing and soft target updates are
//! plain slice operations. Forward passes cache per-layer inputs and
//! pre-activations; backward returns the gradient with respect to the
//! network input (and the injected vector, when a layer has one), which
//! is how embedding rows receive their updates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::fmath;
use crate::rng::Rng;

/// Self-normalizing ELU constants (published closed-form values).
pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Activation {
    Selu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (fmath::exp(x) - 1.0)
                }
            }
            Activation::Tanh => fmath::tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation value.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * fmath::exp(x)
                }
            }
            Activation::Tanh => {
                let t = fmath::tanh(x);
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Network shape: `layer_sizes[0]` is the input width; every following
/// entry is a dense layer with its activation. `inject` concatenates an
/// extra vector to the input of the given weight layer (the critic feeds
/// actions into its second hidden layer this way).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub inject: Option<InjectSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InjectSpec {
    /// Weight-layer index whose input gets the extra vector appended.
    pub layer: usize,
    pub dim: usize,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Self {
        MlpSpec {
            layer_sizes,
            activations,
            inject: None,
        }
    }

    pub fn with_injection(mut self, layer: usize, dim: usize) -> Self {
        self.inject = Some(InjectSpec { layer, dim });
        self
    }

    pub fn validate(&self) -> CoreResult<()> {
        if self.layer_sizes.len() < 2 {
            return Err(CoreError::Config(format!(
                "need at least one layer, got sizes {:?}",
                self.layer_sizes
            )));
        }
        if self.activations.len() != self.layer_sizes.len() - 1 {
            return Err(CoreError::Config(format!(
                "{} layers but {} activations",
                self.layer_sizes.len() - 1,
                self.activations.len()
            )));
        }
        if let Some(inj) = self.inject {
            if inj.layer >= self.layer_sizes.len() - 1 {
                return Err(CoreError::Config(format!(
                    "injection layer {} out of range",
                    inj.layer
                )));
            }
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn layer_input_dim(&self, l: usize) -> usize {
        let base = self.layer_sizes[l];
        match self.inject {
            Some(inj) if inj.layer == l => base + inj.dim,
            _ => base,
        }
    }

    pub fn param_count(&self) -> usize {
        (0..self.n_layers())
            .map(|l| self.layer_sizes[l + 1] * (self.layer_input_dim(l) + 1))
            .sum()
    }
}

/// Flat parameter vector with gradient buffer and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl NetParams {
    pub fn zeros(len: usize) -> Self {
        NetParams {
            values: vec![0.0; len],
            grads: vec![0.0; len],
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }
}

/// One Adam step with bias correction and decoupled weight decay;
/// gradients are zeroed afterwards.
pub fn adam_step(params: &mut NetParams, cfg: &AdamConfig) {
    params.step += 1;
    let t = params.step as i32;
    let bc1 = 1.0 - fmath::powi(cfg.beta1, t);
    let bc2 = 1.0 - fmath::powi(cfg.beta2, t);
    for i in 0..params.values.len() {
        let g = params.grads[i];
        params.m[i] = cfg.beta1 * params.m[i] + (1.0 - cfg.beta1) * g;
        params.v[i] = cfg.beta2 * params.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = params.m[i] / bc1;
        let v_hat = params.v[i] / bc2;
        params.values[i] -=
            cfg.lr * (m_hat / (fmath::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params.values[i]);
        params.grads[i] = 0.0;
    }
}

/// target ← (1−τ)·target + τ·source, on parameter values only.
pub fn soft_update(target: &mut NetParams, source: &NetParams, tau: f64) -> CoreResult<()> {
    if target.len() != source.len() {
        return Err(CoreError::Dimension(format!(
            "soft update shape mismatch: {} vs {}",
            target.len(),
            source.len()
        )));
    }
    for (t, s) in target.values.iter_mut().zip(&source.values) {
        *t = (1.0 - tau) * *t + tau * *s;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    w_off: usize,
    b_off: usize,
    rows: usize,
    cols: usize,
}

/// Reusable forward cache: per-layer (possibly injection-extended)
/// inputs and pre-activations.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    inputs: Vec<Vec<f64>>,
    preact: Vec<Vec<f64>>,
    valid: bool,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: NetParams,
    layout: Vec<LayerLayout>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = s0 + s1 + s2 + s3;
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

impl Mlp {
    /// LeCun-normal initialization (std = 1/√fan_in), zero biases.
    pub fn new(spec: MlpSpec, seed: u64) -> CoreResult<Mlp> {
        spec.validate()?;
        let mut layout = Vec::with_capacity(spec.n_layers());
        let mut off = 0;
        for l in 0..spec.n_layers() {
            let rows = spec.layer_sizes[l + 1];
            let cols = spec.layer_input_dim(l);
            layout.push(LayerLayout {
                w_off: off,
                b_off: off + rows * cols,
                rows,
                cols,
            });
            off += rows * (cols + 1);
        }
        let mut params = NetParams::zeros(off);
        let mut rng = Rng::derive(seed, &[0x6e6e]);
        for ll in &layout {
            let std = 1.0 / fmath::sqrt(ll.cols as f64);
            for w in &mut params.values[ll.w_off..ll.w_off + ll.rows * ll.cols] {
                *w = std * rng.normal();
            }
        }
        Ok(Mlp {
            spec,
            params,
            layout,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.layer_sizes.last().unwrap()
    }

    /// Forward pass; `inject` must be given exactly when the spec has an
    /// injection layer. Returns the output and fills `cache` for a
    /// subsequent [`Mlp::backward`].
    pub fn forward(
        &self,
        input: &[f64],
        inject: Option<&[f64]>,
        cache: &mut Cache,
    ) -> CoreResult<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(CoreError::Dimension(format!(
                "input dim {} != {}",
                input.len(),
                self.input_dim()
            )));
        }
        match (self.spec.inject, inject) {
            (Some(inj), Some(v)) if v.len() != inj.dim => {
                return Err(CoreError::Dimension(format!(
                    "inject dim {} != {}",
                    v.len(),
                    inj.dim
                )));
            }
            (Some(_), None) => {
                return Err(CoreError::Dimension(
                    "network expects an injected vector".into(),
                ));
            }
            (None, Some(_)) => {
                return Err(CoreError::Dimension(
                    "network has no injection layer".into(),
                ));
            }
            _ => {}
        }

        let nl = self.spec.n_layers();
        cache.inputs.resize(nl, Vec::new());
        cache.preact.resize(nl, Vec::new());

        let mut act: Vec<f64> = input.to_vec();
        for l in 0..nl {
            let ll = self.layout[l];
            if let Some(inj) = self.spec.inject {
                if inj.layer == l {
                    act.extend_from_slice(inject.unwrap());
                }
            }
            debug_assert_eq!(act.len(), ll.cols);
            let w = &self.params.values[ll.w_off..ll.w_off + ll.rows * ll.cols];
            let b = &self.params.values[ll.b_off..ll.b_off + ll.rows];
            let mut z = vec![0.0; ll.rows];
            for r in 0..ll.rows {
                z[r] = dot(&w[r * ll.cols..(r + 1) * ll.cols], &act) + b[r];
            }
            cache.inputs[l].clear();
            cache.inputs[l].extend_from_slice(&act);
            cache.preact[l].clear();
            cache.preact[l].extend_from_slice(&z);
            let a = self.spec.activations[l];
            act = z;
            for x in &mut act {
                *x = a.apply(*x);
            }
        }
        cache.valid = true;
        Ok(act)
    }

    /// Reverse pass from an output gradient. Accumulates parameter
    /// gradients into `self.params.grads` and returns the input gradient
    /// plus the injected-vector gradient (when applicable).
    pub fn backward(
        &mut self,
        cache: &Cache,
        output_grad: &[f64],
    ) -> CoreResult<(Vec<f64>, Option<Vec<f64>>)> {
        if !cache.valid {
            return Err(CoreError::State("backward called before forward".into()));
        }
        if output_grad.len() != self.output_dim() {
            return Err(CoreError::Dimension(format!(
                "output grad dim {} != {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        let nl = self.spec.n_layers();
        let mut dz: Vec<f64> = output_grad.to_vec();
        let mut inject_grad = None;
        for l in (0..nl).rev() {
            let ll = self.layout[l];
            let a = self.spec.activations[l];
            let pre = &cache.preact[l];
            for (g, p) in dz.iter_mut().zip(pre) {
                *g *= a.derivative(*p);
            }
            let x = &cache.inputs[l];
            let mut dx = vec![0.0; ll.cols];
            {
                let w = &self.params.values[ll.w_off..ll.w_off + ll.rows * ll.cols];
                let gw = &mut self.params.grads[ll.w_off..ll.w_off + ll.rows * ll.cols];
                for r in 0..ll.rows
                {
                    let g = dz[r];
                    let row = &w[r * ll.cols..(r + 1) * ll.cols];
                    let grow = &mut gw[r * ll.cols..(r + 1) * ll.cols];
                    for c in 0..ll.cols {
                        grow[c] += g * x[c];
                        dx[c] += g * row[c];
                    }
                }
            }
            let gb = &mut self.params.grads[ll.b_off..ll.b_off + ll.rows];
            for (g, d) in gb.iter_mut().zip(&dz) {
                *g += *d;
            }
            // Split off the injected part of the input gradient.
            if let Some(inj) = self.spec.inject {
                if inj.layer == l {
                    inject_grad = Some(dx.split_off(self.spec.layer_sizes[l]));
                }
            }
            dz = dx;
        }
        Ok((dz, inject_grad))
    }
}
