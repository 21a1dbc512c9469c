use super::net::Mlp;

/// Adam with bias correction, state laid out in `Mlp::params` order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    pub fn for_mlp(net: &Mlp, lr: f64) -> Self {
        Self::new(net.param_count(), lr)
    }

    pub fn step(&mut self, net: &mut Mlp, grad: &Mlp) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in net
            .params_mut()
            .zip(grad.params())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::net::Dense;

    #[test]
    fn first_step_moves_by_lr() {
        let mut net = Mlp {
            layers: vec![Dense {
                inputs: 1,
                outputs: 1,
                weights: vec![1.0],
                bias: vec![0.0],
            }],
        };
        let grad = Mlp {
            layers: vec![Dense {
                inputs: 1,
                outputs: 1,
                weights: vec![4.0],
                bias: vec![-0.5],
            }],
        };
        let mut adam = Adam::for_mlp(&net, 0.1);
        adam.step(&mut net, &grad);
        assert!((net.layers[0].weights[0] - 0.9).abs() < 1e-6);
        assert!((net.layers[0].bias[0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut net = Mlp {
            layers: vec![Dense {
                inputs: 1,
                outputs: 1,
                weights: vec![5.0],
                bias: vec![-3.0],
            }],
        };
        let mut adam = Adam::for_mlp(&net, 0.05);
        for _ in 0..2000 {
            let mut g = net.clone();
            // ∇ of ½‖θ − (1, 2)‖²
            g.layers[0].weights[0] -= 1.0;
            g.layers[0].bias[0] -= 2.0;
            adam.step(&mut net, &g);
        }
        assert!((net.layers[0].weights[0] - 1.0).abs() < 1e-3);
        assert!((net.layers[0].bias[0] - 2.0).abs() < 1e-3);
    }
}
