use std::collections::BTreeMap;

use super::ParamStore;

/// Adam with an L2 penalty folded into the gradient before the moment updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub(crate) steps: u64,
    pub(crate) m: BTreeMap<String, Vec<Vec<f64>>>,
    pub(crate) v: BTreeMap<String, Vec<Vec<f64>>>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }
}

impl Adam {
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut ParamStore, lr: f64, l2: f64) {
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (layer, tensors) in params.iter_mut() {
            let ms = self.m.entry(layer.to_owned()).or_default();
            let vs = self.v.entry(layer.to_owned()).or_default();
            if ms.len() != tensors.len() {
                *ms = tensors.iter().map(|t| vec![0.0; t.numel()]).collect();
                *vs = ms.clone();
            }
            for ((tensor, m), v) in tensors.iter_mut().zip(ms.iter_mut()).zip(vs.iter_mut()) {
                let (w, g) = tensor.data_and_grad_mut();
                for i in 0..w.len() {
                    let gi = g[i] + l2 * w[i];
                    m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                    v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    w[i] -= lr * mh / (vh.sqrt() + self.eps);
                }
            }
        }
    }
}
