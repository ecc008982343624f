use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;

use crate::seed::Rng;

/// Fully connected layer. `w` is stored `in x out` so a batch `x` (rows are
/// samples) maps to `x·w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Multilayer perceptron with ReLU hidden layers and a linear output.
///
/// The same type doubles as a gradient buffer (see [`Mlp::backward`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs saved by [`Mlp::forward`]; `acts[i]` feeds layer `i`.
#[derive(Debug, Clone)]
pub struct MlpCache {
    acts: Vec<Array2<f64>>,
}

impl MlpCache {
    /// ReLU on/off pattern of every hidden unit.
    pub fn pattern(&self) -> Vec<bool> {
        self.acts[1..]
            .iter()
            .flat_map(|a| a.iter().map(|&v| v > 0.0))
            .collect()
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|s| {
                let bound = 1.0 / (s[0] as f64).sqrt();
                Dense {
                    w: Array2::from_shape_simple_fn((s[0], s[1]), || {
                        rng.random_range(-bound..bound)
                    }),
                    b: Array1::from_shape_simple_fn(s[1], || rng.random_range(-bound..bound)),
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            layers: sizes
                .windows(2)
                .map(|s| Dense {
                    w: Array2::zeros((s[0], s[1])),
                    b: Array1::zeros(s[1]),
                })
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp::zeros(&self.sizes())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.nrows()];
        s.extend(self.layers.iter().map(|l| l.w.ncols()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, MlpCache) {
        assert_eq!(x.ncols(), self.input_dim(), "input width");
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w);
            z += &l.b;
            if i < last {
                z.mapv_inplace(relu);
            }
            acts.push(h);
            h = z;
        }
        (h, MlpCache { acts })
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward(x).0
    }

    /// Gradients of `Σ grad_out ⊙ output` with respect to every parameter.
    pub fn backward(&self, cache: &MlpCache, grad_out: ArrayView2<'_, f64>) -> Mlp {
        let mut g = grad_out.to_owned();
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &cache.acts[i];
            let dw = input.t().dot(&g).as_standard_layout().into_owned();
            let db = g.sum_axis(Axis(0));
            if i > 0 {
                let mut gi = g.dot(&l.w.t());
                Zip::from(&mut gi).and(input).for_each(|gv, &a| {
                    if a <= 0.0 {
                        *gv = 0.0;
                    }
                });
                g = gi;
            }
            grads.push(Dense { w: dw, b: db });
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    /// `self += s · other`
    pub fn add_scaled(&mut self, s: f64, other: &Mlp) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w.scaled_add(s, &b.w);
            a.b.scaled_add(s, &b.b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w *= s;
            l.b *= s;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.params().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use ndarray::array;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2]);
        let out = net.predict(array![[1.0, -2.0, 3.0]].view());
        assert_eq!(out, array![[0.0, 0.0]]);
    }

    #[test]
    fn identity_layer() {
        let net = Mlp {
            layers: vec![Dense {
                w: Array2::eye(3),
                b: Array1::zeros(3),
            }],
        };
        let x = array![[1.5, -2.0, 0.25]];
        assert_eq!(net.predict(x.view()), x);
    }

    #[test]
    fn hidden_relu_clamps() {
        // identity hidden layer, identity output: relu(-1, 2) = (0, 2)
        let eye = Dense {
            w: Array2::eye(2),
            b: Array1::zeros(2),
        };
        let net = Mlp {
            layers: vec![eye.clone(), eye],
        };
        assert_eq!(net.predict(array![[-1.0, 2.0]].view()), array![[0.0, 2.0]]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let net = Mlp::new(&[4, 8, 3], &mut rng_from(1));
        let x = array![[0.1, 0.2, 0.3, 0.4]];
        let (_, cache) = net.forward(x.view());
        let g = net.backward(&cache, Array2::zeros((1, 3)).view());
        assert_eq!(g.norm_sq(), 0.0);
    }

    #[test]
    fn linear_squared_error_closed_form() {
        let net = Mlp::new(&[3, 1], &mut rng_from(2));
        let x = array![[0.5, -1.0, 2.0]];
        let target = 0.3;
        let (pred, cache) = net.forward(x.view());
        let e = pred[[0, 0]] - target;
        let g = net.backward(&cache, array![[2.0 * e]].view());
        for j in 0..3 {
            assert!((g.layers[0].w[[j, 0]] - 2.0 * e * x[[0, j]]).abs() < 1e-15);
        }
        assert!((g.layers[0].b[0] - 2.0 * e).abs() < 1e-15);
    }

    #[test]
    fn add_scaled_and_norm() {
        let mut a = Mlp::zeros(&[2, 2]);
        let mut b = Mlp::zeros(&[2, 2]);
        b.params_mut().for_each(|p| *p = 1.0);
        a.add_scaled(0.5, &b);
        assert!((a.norm_sq() - 6.0 * 0.25).abs() < 1e-15);
        assert_eq!(a.num_params(), 6);
    }
}
