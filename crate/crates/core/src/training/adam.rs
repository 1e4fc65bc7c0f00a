use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::policynet::{ParamGrads, PolicyParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for a list of flat tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn for_params(config: AdamConfig, params: &PolicyParams) -> Self {
        let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self::new(config, &sizes)
    }

    /// One bias-corrected Adam update. Nothing is modified when a gradient
    /// entry is not finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), TrainError> {
        assert_eq!(params.len(), self.m.len(), "tensor count mismatch");
        assert_eq!(grads.len(), self.m.len(), "tensor count mismatch");
        for (k, g) in grads.iter().enumerate() {
            assert_eq!(g.len(), self.m[k].len(), "tensor {k} size mismatch");
            assert_eq!(params[k].len(), self.m[k].len(), "tensor {k} size mismatch");
            if let Some(i) = g.iter().position(|x| !x.is_finite()) {
                return Err(TrainError::NonFiniteGradient { tensor: k, index: i });
            }
        }
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        self.t += 1;
        let c1 = 1.0 - b1.powf(self.t as f64);
        let c2 = 1.0 - b2.powf(self.t as f64);
        for (k, g) in grads.iter().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (i, &gi) in g.iter().enumerate() {
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[k][i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Adam update of all policy tensors.
pub fn adam_step(params: &mut PolicyParams, grads: &ParamGrads, state: &mut AdamState) -> Result<(), TrainError> {
    let g = grads.tensors();
    let mut p = params.tensors_mut();
    state.step(&mut p, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = PolicyParams::init(8, &mut rng_from_seed(1));
        let before = p.clone();
        let mut s = AdamState::for_params(AdamConfig::default(), &p);
        let zero = p.zeros_like();
        adam_step(&mut p, &zero, &mut s).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.7, -0.02, 1e-3] {
            let mut x = [1.0];
            let mut s = AdamState::new(AdamConfig::default(), &[1]);
            s.step(&mut [&mut x], &[&[g]]).unwrap();
            let expected = 1.0 - 1e-4 * f64::signum(g);
            assert!((x[0] - expected).abs() < 1e-4 * 1e-4, "{g}: {}", x[0]);
        }
    }

    #[test]
    fn minimises_a_parabola() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let mut x = [1.0];
        let mut s = AdamState::new(cfg, &[1]);
        for _ in 0..1000 {
            let g = 2.0 * x[0];
            s.step(&mut [&mut x], &[&[g]]).unwrap();
        }
        assert!(x[0].abs() < 0.01, "x = {}", x[0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut x = [1.0, 2.0];
        let mut s = AdamState::new(AdamConfig::default(), &[2]);
        let r = s.step(&mut [&mut x], &[&[0.0, f64::NAN]]);
        assert_eq!(r, Err(TrainError::NonFiniteGradient { tensor: 0, index: 1 }));
        assert_eq!(x, [1.0, 2.0]);
        assert_eq!(s.t, 0);
    }

    #[test]
    fn second_moment_stays_non_negative() {
        let mut x = [0.5, -0.5, 2.0];
        let mut s = AdamState::new(AdamConfig::default(), &[3]);
        for i in 0..50 {
            let g = [(i as f64).sin(), -(i as f64).cos(), 0.3];
            s.step(&mut [&mut x], &[&g]).unwrap();
            assert!(s.v[0].iter().all(|&v| v >= 0.0));
        }
    }
}
