use super::network::{Architecture, QNetwork};

/// RMSprop: `v = decay*v + (1-decay)*g^2`, `w -= lr * g / (sqrt(v) + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub eps: f64,
    mean_square: QNetwork,
}

impl RmsProp {
    pub fn new(arch: Architecture, learning_rate: f64, decay: f64, eps: f64) -> Self {
        RmsProp { learning_rate, decay, eps, mean_square: QNetwork::zeros(arch) }
    }

    pub fn step(&mut self, params: &mut QNetwork, grad: &QNetwork) {
        let (lr, decay, eps) = (self.learning_rate, self.decay, self.eps);
        let grads = grad.tensors();
        for ((w, v), g) in params.tensors_mut().into_iter().zip(self.mean_square.tensors_mut()).zip(grads) {
            for ((w, v), &g) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = decay * *v + (1.0 - decay) * g * g;
                *w -= lr * g / (v.sqrt() + eps);
            }
        }
    }
}

/// Scale `grad` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grad: &mut QNetwork, max_norm: f64) -> f64 {
    let norm = grad.squared_norm().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let k = max_norm / norm;
        for t in grad.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= k);
        }
    }
    norm
}
