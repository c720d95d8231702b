//! Residual MLP Q-network with hand-written backpropagation.
//!
//! Layout: two dense ReLU layers, then two residual blocks of two dense
//! layers each, then a linear head. A block computes
//! `relu(x + W_b relu(W_a x + b_a) + b_b)`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

/// Dense layers in forward order.
pub const LAYER_NAMES: [&str; 7] = ["dense1", "dense2", "block1_a", "block1_b", "block2_a", "block2_b", "head"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub output_dim: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            input_dim: crate::env::STATE_DIM,
            hidden: 128,
            output_dim: crate::env::ACTION_COUNT,
        }
    }
}

impl Architecture {
    /// `(rows, cols)` = `(out, in)` of every dense layer.
    pub fn layer_shapes(&self) -> [(usize, usize); 7] {
        let h = self.hidden;
        [
            (h, self.input_dim),
            (h, h),
            (h, h),
            (h, h),
            (h, h),
            (h, h),
            (self.output_dim, h),
        ]
    }

    pub fn param_count(&self) -> usize {
        let (i, h, o) = (self.input_dim, self.hidden, self.output_dim);
        (i * h + h) + 5 * (h * h + h) + (h * o + o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`, row-major.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(rows: usize, cols: usize) -> Self {
        Dense { weight: Array2::zeros((rows, cols)), bias: Array1::zeros(rows) }
    }

    fn affine(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }

    /// Accumulate parameter gradients for upstream gradient `dz` and layer
    /// input `x`; return the gradient w.r.t. `x`.
    fn backward(&self, x: &Array2<f64>, dz: &Array2<f64>, grad: &mut Dense) -> Array2<f64> {
        grad.weight += &dz.t().dot(x);
        grad.bias += &dz.sum_axis(Axis(0));
        dz.dot(&self.weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    arch: Architecture,
    layers: Vec<Dense>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each dense layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of the six hidden layers (after the shortcut add for
    /// block outputs).
    pub pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn relu_grad(dz: &mut Array2<f64>, z: &Array2<f64>) {
    Zip::from(dz).and(z).for_each(|d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
}

impl QNetwork {
    pub fn zeros(arch: Architecture) -> Self {
        let layers = arch.layer_shapes().iter().map(|&(r, c)| Dense::zeros(r, c)).collect();
        QNetwork { arch, layers }
    }

    /// Uniform fan-in init: weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut net = Self::zeros(arch);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.weight.ncols() as f64).sqrt();
            layer.weight.mapv_inplace(|_| rng.gen_range(-bound..bound));
        }
        net
    }

    pub(crate) fn from_layers(arch: Architecture, layers: Vec<Dense>) -> Result<Self, AgentError> {
        let shapes = arch.layer_shapes();
        if layers.len() != shapes.len() {
            return Err(AgentError::ArchitectureMismatch(format!("expected {} layers, got {}", shapes.len(), layers.len())));
        }
        for (i, (l, &(r, c))) in layers.iter().zip(&shapes).enumerate() {
            if l.weight.dim() != (r, c) || l.bias.len() != r {
                return Err(AgentError::ArchitectureMismatch(format!(
                    "layer {} has shape {:?}/{}, expected ({r}, {c})/{r}",
                    LAYER_NAMES[i],
                    l.weight.dim(),
                    l.bias.len()
                )));
            }
        }
        Ok(QNetwork { arch, layers })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Flat views of every parameter tensor (weight then bias, layer order).
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice().expect("standard layout"), l.bias.as_slice().expect("contiguous")])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let Dense { weight, bias } = l;
                [weight.as_slice_mut().expect("standard layout"), bias.as_slice_mut().expect("contiguous")]
            })
            .collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }

    fn check_input(&self, cols: usize) -> Result<(), AgentError> {
        if cols != self.arch.input_dim {
            return Err(AgentError::DimensionMismatch { expected: self.arch.input_dim, got: cols });
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache, AgentError> {
        self.check_input(x.ncols())?;
        let l = &self.layers;
        let mut inputs = Vec::with_capacity(7);
        let mut pre = Vec::with_capacity(6);

        let z1 = l[0].affine(&x);
        let h1 = relu(&z1);
        let z2 = l[1].affine(&h1.view());
        let h2 = relu(&z2);

        let z3 = l[2].affine(&h2.view());
        let u = relu(&z3);
        let z4 = &h2 + &l[3].affine(&u.view());
        let h3 = relu(&z4);

        let z5 = l[4].affine(&h3.view());
        let v = relu(&z5);
        let z6 = &h3 + &l[5].affine(&v.view());
        let h4 = relu(&z6);

        let output = l[6].affine(&h4.view());

        inputs.extend([x.to_owned(), h1, h2, u, h3, v, h4]);
        pre.extend([z1, z2, z3, z4, z5, z6]);
        Ok(ForwardCache { inputs, pre, output })
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, AgentError> {
        Ok(self.forward_cached(x)?.output)
    }

    /// Q-values for a single encoded state.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        let x = ArrayView2::from_shape((1, state.len()), state).expect("row view");
        Ok(self.forward_batch(x)?.row(0).to_vec())
    }

    /// Parameter gradient for upstream gradient `d_out` on the outputs.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array2<f64>) -> QNetwork {
        let mut g = QNetwork::zeros(self.arch);
        let l = &self.layers;
        let (inp, pre) = (&cache.inputs, &cache.pre);

        let mut dz6 = l[6].backward(&inp[6], d_out, &mut g.layers[6]);
        relu_grad(&mut dz6, &pre[5]);
        let mut dz5 = l[5].backward(&inp[5], &dz6, &mut g.layers[5]);
        relu_grad(&mut dz5, &pre[4]);
        let mut dh3 = dz6;
        dh3 += &l[4].backward(&inp[4], &dz5, &mut g.layers[4]);

        let mut dz4 = dh3;
        relu_grad(&mut dz4, &pre[3]);
        let mut dz3 = l[3].backward(&inp[3], &dz4, &mut g.layers[3]);
        relu_grad(&mut dz3, &pre[2]);
        let mut dh2 = dz4;
        dh2 += &l[2].backward(&inp[2], &dz3, &mut g.layers[2]);

        let mut dz2 = dh2;
        relu_grad(&mut dz2, &pre[1]);
        let mut dz1 = l[1].backward(&inp[1], &dz2, &mut g.layers[1]);
        relu_grad(&mut dz1, &pre[0]);
        l[0].backward(&inp[0], &dz1, &mut g.layers[0]);
        g
    }

    /// Copy every parameter from `other`.
    pub fn copy_from(&mut self, other: &QNetwork) -> Result<(), AgentError> {
        if self.arch != other.arch {
            return Err(AgentError::ArchitectureMismatch(format!("{:?} vs {:?}", self.arch, other.arch)));
        }
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.weight.assign(&src.weight);
            dst.bias.assign(&src.bias);
        }
        Ok(())
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Architecture {
        Architecture { input_dim: 5, hidden: 7, output_dim: 3 }
    }

    #[test]
    fn shapes_and_param_count() {
        let arch = Architecture::default();
        let net = QNetwork::init(arch, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(net.param_count(), arch.param_count());
        assert_eq!(arch.param_count(), 87_826);
        assert_eq!(net.layers().len(), 7);
        let hidden = net.layers()[..6].iter().filter(|l| l.weight.nrows() == 128).count();
        assert_eq!(hidden, 6);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = QNetwork::zeros(small());
        net.layers_mut()[6].bias.assign(&ndarray::arr1(&[0.5, -1.0, 2.0]));
        let q = net.forward(&[3.0, -2.0, 1.0, 0.0, 9.0]).unwrap();
        assert_eq!(q, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn zero_block_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = QNetwork::init(small(), &mut rng);
        for i in 2..6 {
            net.layers_mut()[i].weight.fill(0.0);
            net.layers_mut()[i].bias.fill(0.0);
        }
        let x = ndarray::arr2(&[[0.3, -0.1, 0.8, 1.2, -0.7]]);
        let c = net.forward_cached(x.view()).unwrap();
        // Block outputs equal the block input h2.
        assert_eq!(c.inputs[4], c.inputs[2]);
        assert_eq!(c.inputs[6], c.inputs[2]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = QNetwork::zeros(small());
        assert!(matches!(net.forward(&[1.0; 4]), Err(AgentError::DimensionMismatch { expected: 5, got: 4 })));
    }

    #[test]
    fn first_layer_pre_activation_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = QNetwork::init(Architecture::default(), &mut rng);
        let x: Vec<f64> = (0..22).map(|i| (i as f64 * 0.37).sin()).collect();
        let xv = ArrayView2::from_shape((1, 22), &x).unwrap();
        let base = net.forward_cached(xv).unwrap().pre[0].clone();
        let mut scaled = net.clone();
        scaled.layers_mut()[0].weight *= 3.5;
        scaled.layers_mut()[0].bias *= 3.5;
        let z = scaled.forward_cached(xv).unwrap().pre[0].clone();
        for (a, b) in base.iter().zip(z.iter()) {
            assert!((a * 3.5 - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn copy_makes_independent_equal_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = QNetwork::init(small(), &mut rng);
        let mut b = QNetwork::zeros(small());
        b.copy_from(&a).unwrap();
        assert_eq!(a, b);
        a.layers_mut()[0].weight[[0, 0]] += 1.0;
        assert_ne!(a, b);
        assert!(b.copy_from(&QNetwork::zeros(Architecture::default())).is_err());
    }

    #[test]
    fn argmax_takes_lowest_tie() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 18]), 0);
    }
}
