use super::net::Weights;
use super::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment buffers shaped like the parameters, plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Weights<T>,
    pub v: Weights<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(zeros: &Weights<T>) -> Self {
        AdamState { m: zeros.clone(), v: zeros.clone(), step: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut Weights<T>,
    state: &mut AdamState<T>,
    grads: &Weights<T>,
    lr: f64,
    cfg: AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let (nb1, nb2) = (T::of(1.0 - cfg.beta1), T::of(1.0 - cfg.beta2));
    let (inv_c1, inv_c2) = (T::of(1.0 / c1), T::of(1.0 / c2));
    let (lr, eps) = (T::of(lr), T::of(cfg.eps));

    let ps = params.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    let gs = grads.tensors();
    for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(gs) {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + nb1 * g[i];
            v[i] = b2 * v[i] + nb2 * g[i] * g[i];
            let mhat = m[i] * inv_c1;
            let vhat = v[i] * inv_c2;
            p[i] = p[i] - lr * mhat / (vhat.sqrt() + eps);
        }
    }
}
