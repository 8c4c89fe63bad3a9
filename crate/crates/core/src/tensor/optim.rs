use super::{Scalar, Tensor, TensorError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), TensorError> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(TensorError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Param<T: Scalar = f32> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
    pub adam_m: Tensor<T>,
    pub adam_v: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let shape = value.shape().to_vec();
        Param {
            name: name.into(),
            value,
            grad: None,
            adam_m: Tensor::zeros(&shape),
            adam_v: Tensor::zeros(&shape),
        }
    }
}

/// Named trainable tensors with their Adam moments.
#[derive(Debug, Clone, Default)]
pub struct ParamSet<T: Scalar = f32> {
    pub params: Vec<Param<T>>,
    pub step: u64,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet { params: Vec::new(), step: 0 }
    }

    /// Appends a parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, value: Tensor<T>) -> usize {
        self.params.push(Param::new(name, value));
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn value(&self, i: usize) -> &Tensor<T> {
        &self.params[i].value
    }

    pub fn set_grad(&mut self, i: usize, grad: Tensor<T>) -> Result<(), TensorError> {
        let p = &mut self.params[i];
        if grad.shape() != p.value.shape() {
            return Err(TensorError::ShapeMismatch(format!(
                "gradient {:?} for parameter {} of shape {:?}",
                grad.shape(),
                p.name,
                p.value.shape()
            )));
        }
        p.grad = Some(grad);
        Ok(())
    }

    pub fn clear_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// One bias-corrected Adam update over every parameter. Gradients are
    /// consumed. Nothing is modified if any gradient is missing.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<(), TensorError> {
        cfg.validate()?;
        if let Some(p) = self.params.iter().find(|p| p.grad.is_none()) {
            return Err(TensorError::MissingGradient(p.name.clone()));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(cfg.beta1), T::from_f64(cfg.beta2));
        let (one_b1, one_b2) = (T::from_f64(1.0 - cfg.beta1), T::from_f64(1.0 - cfg.beta2));
        let corr1 = T::from_f64(1.0 / (1.0 - cfg.beta1.powi(t)));
        let corr2 = T::from_f64(1.0 / (1.0 - cfg.beta2.powi(t)));
        let lr = T::from_f64(cfg.learning_rate);
        let eps = T::from_f64(cfg.epsilon);
        for p in &mut self.params {
            let grad = p.grad.take().expect("checked above");
            let g = grad.data();
            let m = p.adam_m.data_mut();
            let v = p.adam_v.data_mut();
            let theta = p.value.data_mut();
            for i in 0..g.len() {
                m[i] = b1 * m[i] + one_b1 * g[i];
                v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
                let m_hat = m[i] * corr1;
                let v_hat = v[i] * corr2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            if !p.value.all_finite() {
                return Err(TensorError::NonFinite(p.name.clone()));
            }
        }
        Ok(())
    }
}

/// Gaussian with std `sqrt(2 / fan_in)`, where fan_in is the product of all
/// dimensions but the last (3x3xC for kernels, D for dense weights).
pub fn he_init<T: Scalar>(shape: &[usize], seed: u64) -> Tensor<T> {
    let fan_in: usize = shape[..shape.len().saturating_sub(1)].iter().product::<usize>().max(1);
    let std = (2.0 / fan_in as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64(rng.normal() * std)).collect();
    Tensor::new(shape.to_vec(), data).expect("length matches shape")
}
