use serde::{Deserialize, Serialize};

use super::param::ParamSet;

/// Plain gradient descent: `values -= learning_rate * gradient`, then gradients are zeroed.
pub fn sgd_step(params: &mut ParamSet, learning_rate: f64) {
    for p in params.iter_mut() {
        for (v, g) in p.values.iter_mut().zip(&p.gradient) {
            *v -= learning_rate * g;
        }
        p.zero_gradient();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    /// Gradient descent with an optional heavy-ball momentum term (0 disables it).
    Sgd { momentum: f64 },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Stateful optimizer over a fixed [`ParamSet`] layout.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, params: &ParamSet) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.len()]).collect();
        Optimizer {
            kind,
            first: zeros(),
            second: match kind {
                OptimizerKind::Adam { .. } => zeros(),
                OptimizerKind::Sgd { .. } => Vec::new(),
            },
            steps: 0,
        }
    }

    /// Applies one update from the accumulated gradients and zeroes them.
    pub fn step(&mut self, params: &mut ParamSet, learning_rate: f64) {
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd { momentum: 0.0 } => sgd_step(params, learning_rate),
            OptimizerKind::Sgd { momentum } => {
                for (p, vel) in params.iter_mut().zip(&mut self.first) {
                    for ((v, g), m) in p.values.iter_mut().zip(&p.gradient).zip(vel.iter_mut()) {
                        *m = momentum * *m + g;
                        *v -= learning_rate * *m;
                    }
                    p.zero_gradient();
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(self.steps as i32);
                let c2 = 1.0 - beta2.powi(self.steps as i32);
                for ((p, m1), m2) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    for (((v, g), a), b) in p
                        .values
                        .iter_mut()
                        .zip(&p.gradient)
                        .zip(m1.iter_mut())
                        .zip(m2.iter_mut())
                    {
                        *a = beta1 * *a + (1.0 - beta1) * g;
                        *b = beta2 * *b + (1.0 - beta2) * g * g;
                        *v -= learning_rate * (*a / c1) / ((*b / c2).sqrt() + epsilon);
                    }
                    p.zero_gradient();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamTensor;

    fn single(value: f64, grad: f64) -> ParamSet {
        let mut set = ParamSet::new();
        let id = set.add(ParamTensor::new("x", vec![1], vec![value]).unwrap());
        set.get_mut(id).gradient[0] = grad;
        set
    }

    #[test]
    fn sgd_arithmetic() {
        let mut set = single(1.0, 2.0);
        sgd_step(&mut set, 0.1);
        let p = set.iter().next().unwrap();
        assert!((p.values[0] - 0.8).abs() < 1e-15);
        assert_eq!(p.gradient[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_values() {
        let mut set = single(3.25, 0.0);
        sgd_step(&mut set, 0.5);
        assert_eq!(set.iter().next().unwrap().values[0], 3.25);
    }

    #[test]
    fn quadratic_descends_monotonically() {
        // f(x) = (x - 3)^2, f'(x) = 2(x - 3)
        let f = |x: f64| (x - 3.0) * (x - 3.0);
        let mut set = single(-4.0, 0.0);
        let mut prev = f(-4.0);
        for _ in 0..50 {
            let x = set.iter().next().unwrap().values[0];
            set.iter_mut().next().unwrap().gradient[0] = 2.0 * (x - 3.0);
            sgd_step(&mut set, 0.05);
            let now = f(set.iter().next().unwrap().values[0]);
            assert!(now < prev, "{now} >= {prev}");
            prev = now;
        }
    }

    #[test]
    fn momentum_converges_on_quadratic() {
        let mut set = single(-4.0, 0.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd { momentum: 0.9 }, &set);
        for _ in 0..300 {
            let x = set.iter().next().unwrap().values[0];
            set.iter_mut().next().unwrap().gradient[0] = 2.0 * (x - 3.0);
            opt.step(&mut set, 0.05);
        }
        assert!((set.iter().next().unwrap().values[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut set = single(1.0, 5.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(), &set);
        opt.step(&mut set, 0.01);
        let v = set.iter().next().unwrap().values[0];
        assert!((v - 0.99).abs() < 1e-6);
    }
}
