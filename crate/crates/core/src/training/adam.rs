use crate::diffcore::ParamSet;

/// Adaptive-moment gradient descent with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: ParamSet,
    v: ParamSet,
}

impl Adam {
    pub fn new(params: &ParamSet, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, params: &mut ParamSet, grads: &ParamSet) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for slot in 0..params.len() {
            let g = &grads.get(slot).data;
            let m = &mut self.m.get_mut(slot).data;
            let v = &mut self.v.get_mut(slot).data;
            let theta = &mut params.get_mut(slot).data;
            for k in 0..theta.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                theta[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor;

    #[test]
    fn first_step_moves_by_lr_against_the_sign() {
        let mut p = ParamSet::default();
        p.push("w", Tensor::vector(vec![1.0, -2.0, 0.5]));
        let mut g = p.zeros_like();
        g.get_mut(0).data = vec![0.3, -4.0, 0.0];
        let mut opt = Adam::new(&p, 0.01, 0.9, 0.999, 1e-8);
        opt.update(&mut p, &g);
        let w = &p.get(0).data;
        assert!((w[0] - (1.0 - 0.01)).abs() < 1e-9);
        assert!((w[1] - (-2.0 + 0.01)).abs() < 1e-9);
        assert_eq!(w[2], 0.5);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = ParamSet::default();
        p.push("w", Tensor::vector(vec![3.0, -1.0]));
        let mut opt = Adam::new(&p, 0.05, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            let mut g = p.zeros_like();
            g.get_mut(0).data = p.get(0).data.iter().map(|x| 2.0 * (x - 0.5)).collect();
            opt.update(&mut p, &g);
        }
        for &x in &p.get(0).data {
            assert!((x - 0.5).abs() < 1e-3);
        }
    }
}
