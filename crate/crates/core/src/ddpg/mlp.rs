//! Fully connected network with hand-written reverse mode.
//!
//! Parameters live in one flat vector, layer by layer: the `out x in`
//! weight matrix row-major, then the `out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
    #[serde(skip)]
    version: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes
            && self.hidden == other.hidden
            && self.output == other.output
            && self.params == other.params
    }
}

/// Activations recorded by [`Mlp::forward`] for the matching backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    /// Input of each layer, then the network output.
    activations: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least the input")
    }
}

/// Gradients of one backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All parameters zero.
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params: vec![0.0; param_count(sizes)],
            version: 0,
        })
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(in), 1/sqrt(in))`, with the
    /// last layer drawn from `U(-final_scale, final_scale)`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden, output)?;
        let layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let bound = if l + 1 == layers { final_scale } else { 1.0 / (i as f64).sqrt() };
            for p in &mut net.params[off..off + i * o + o] {
                *p = rng.random_range(-bound..=bound);
            }
            off += i * o + o;
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::dim("network parameters", self.params.len(), params.len()));
        }
        self.params_mut().copy_from_slice(params);
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        let mut pre = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + i * o];
            let b = &self.params[off + i * o..off + i * o + o];
            let input = &activations[l];
            let z: Vec<f64> = (0..o)
                .map(|r| {
                    let row = &w[r * i..(r + 1) * i];
                    row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b[r]
                })
                .collect();
            let act = self.activation(l);
            activations.push(z.iter().map(|&v| act.apply(v)).collect());
            pre.push(z);
            off += i * o + o;
        }
        Ok(ForwardCache {
            version: self.version,
            activations,
            pre,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward(x)?;
        Ok(cache.activations.pop().expect("output"))
    }

    /// Gradients of `upstream . output` with respect to parameters and input.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.params.len()];
        let input = self.backward_accumulate(cache, upstream, &mut params)?;
        Ok(Gradients { params, input })
    }

    /// Adds the parameter gradient into `grads` and returns the input gradient.
    pub fn backward_accumulate(&self, cache: &ForwardCache, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if grads.len() != self.params.len() {
            return Err(Error::dim("gradient buffer", self.params.len(), grads.len()));
        }
        if cache.version != self.version || cache.pre.len() + 1 != self.sizes.len() {
            return Err(Error::StaleCache);
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::dim("upstream gradient", self.output_dim(), upstream.len()));
        }
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta_out: Vec<f64> = upstream.to_vec();
        for l in (0..layers).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.activation(l);
            let delta: Vec<f64> = (0..o)
                .map(|r| delta_out[r] * act.derivative(cache.pre[l][r], cache.activations[l + 1][r]))
                .collect();
            let input = &cache.activations[l];
            let base = offsets[l];
            for r in 0..o {
                let d = delta[r];
                if d != 0.0 {
                    let g = &mut grads[base + r * i..base + (r + 1) * i];
                    for (g, x) in g.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                grads[base + i * o + r] += d;
            }
            let w = &self.params[base..base + i * o];
            let mut delta_in = vec![0.0; i];
            for r in 0..o {
                let d = delta[r];
                if d != 0.0 {
                    for (acc, w) in delta_in.iter_mut().zip(&w[r * i..(r + 1) * i]) {
                        *acc += d * w;
                    }
                }
            }
            delta_out = delta_in;
        }
        Ok(delta_out)
    }

    /// `target <- tau * self + (1 - tau) * target`.
    pub fn soft_update_into(&self, target: &mut Mlp, tau: f64) -> Result<()> {
        if target.sizes != self.sizes {
            return Err(Error::Config("soft update between differently shaped networks".into()));
        }
        for (t, e) in target.params_mut().iter_mut().zip(&self.params) {
            *t = tau * e + (1.0 - tau) * *t;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    /// Straightforward re-evaluation with explicit per-layer loops.
    fn reference_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let sizes = net.sizes();
        let p = net.params();
        let mut a = x.to_vec();
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let mut next = vec![0.0; o];
            for r in 0..o {
                let mut z = p[off + i * o + r];
                for c in 0..i {
                    z += p[off + r * i + c] * a[c];
                }
                next[r] = if l + 2 == sizes.len() {
                    match net.output {
                        Activation::Tanh => z.tanh(),
                        Activation::Relu => z.max(0.0),
                        Activation::Identity => z,
                    }
                } else {
                    z.max(0.0)
                };
            }
            a = next;
            off += i * o + o;
        }
        a
    }

    fn random_net(output: Activation, seed: u64) -> Mlp {
        Mlp::init(&[4, 8, 4, 2], Activation::Relu, output, 0.5, &mut rng_for(seed, &[])).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    pub(crate) fn finite_difference_check(net: &Mlp, x: &[f64], upstream: &[f64]) -> f64 {
        let cache = net.forward(x).unwrap();
        let g = net.backward(&cache, upstream).unwrap();
        let f = |n: &Mlp| -> f64 {
            n.predict(x).unwrap().iter().zip(upstream).map(|(y, u)| y * u).sum()
        };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            if fd.abs() < 1e-7 && g.params[i].abs() < 1e-7 {
                continue;
            }
            worst = worst.max(rel_err(fd, g.params[i]));
        }
        worst
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2], Activation::Relu, Activation::Identity).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn tanh_head_is_bounded() {
        let mut net = random_net(Activation::Tanh, 3);
        for p in net.params_mut() {
            *p *= 50.0;
        }
        for y in net.predict(&[10.0, -10.0, 5.0, 7.0]).unwrap() {
            assert!(y.abs() <= 1.0);
        }
    }

    #[test]
    fn forward_matches_reference_evaluation() {
        for seed in 0..20 {
            for out in [Activation::Tanh, Activation::Identity] {
                let net = random_net(out, seed);
                let x: Vec<f64> = (0..4).map(|i| ((seed * 7 + i) as f64).sin()).collect();
                let a = net.predict(&x).unwrap();
                let b = reference_forward(&net, &x);
                for (a, b) in a.iter().zip(&b) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            for out in [Activation::Tanh, Activation::Identity] {
                let net = random_net(out, seed);
                let x = [0.3, -0.7, 1.1, 0.05 * seed as f64];
                let worst = finite_difference_check(&net, &x, &[0.7, -1.3]);
                assert!(worst < 1e-4, "seed {seed}: {worst}");
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let net = random_net(Activation::Identity, 9);
        let x = [0.2, -0.4, 0.9, 0.6];
        let up = [1.0, 0.5];
        let g = net.backward(&net.forward(&x).unwrap(), &up).unwrap();
        let h = 1e-5;
        for i in 0..4 {
            let f = |d: f64| {
                let mut xx = x;
                xx[i] += d;
                net.predict(&xx).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum::<f64>()
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            assert!(rel_err(fd, g.input[i]) < 1e-4);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = random_net(Activation::Tanh, 1);
        let g = net.backward(&net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), &[0.0, 0.0]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_bias_gradient_is_upstream() {
        let net = Mlp::init(&[3, 2], Activation::Relu, Activation::Identity, 1.0, &mut rng_for(2, &[])).unwrap();
        let g = net.backward(&net.forward(&[0.1, 0.2, 0.3]).unwrap(), &[0.25, -4.0]).unwrap();
        assert_eq!(&g.params[6..], &[0.25, -4.0]);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = random_net(Activation::Tanh, 1);
        let cache = net.forward(&[0.0; 4]).unwrap();
        net.params_mut()[0] += 1.0;
        assert!(matches!(net.backward(&cache, &[1.0, 1.0]), Err(Error::StaleCache)));
    }

    #[test]
    fn soft_update_examples() {
        let e = Mlp::init(&[2, 2], Activation::Relu, Activation::Identity, 1.0, &mut rng_for(1, &[])).unwrap();
        let mut t = Mlp::zeros(&[2, 2], Activation::Relu, Activation::Identity).unwrap();
        let before = t.clone();
        e.soft_update_into(&mut t, 0.0).unwrap();
        assert_eq!(t.params(), before.params());
        e.soft_update_into(&mut t, 1.0).unwrap();
        assert_eq!(t.params(), e.params());

        let mut e2 = Mlp::zeros(&[2, 2], Activation::Relu, Activation::Identity).unwrap();
        e2.params_mut().fill(2.0);
        let mut t2 = Mlp::zeros(&[2, 2], Activation::Relu, Activation::Identity).unwrap();
        e2.soft_update_into(&mut t2, 0.5).unwrap();
        assert!(t2.params().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn soft_update_contracts_toward_eval() {
        let e = random_net(Activation::Tanh, 4);
        let mut t = random_net(Activation::Tanh, 5);
        let before: Vec<f64> = t.params().iter().zip(e.params()).map(|(a, b)| a - b).collect();
        e.soft_update_into(&mut t, 0.3).unwrap();
        for ((a, b), d) in t.params().iter().zip(e.params()).zip(before) {
            assert!(((a - b) - 0.7 * d).abs() < 1e-12);
        }
    }
}
