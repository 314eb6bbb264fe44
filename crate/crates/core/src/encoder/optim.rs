//! Adam with decoupled weight decay, plus the linear warmup/decay schedule.
//!
//! Only the parameter ranges handed to [`AdamW::step`] are touched, which is
//! how freeze policies are enforced: frozen tensors are simply never listed.
//! Decay applies to weights and embeddings, not to biases or layer norms.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const WEIGHT_DECAY: f64 = 0.01;

pub(crate) struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamW {
    pub fn new(total_params: usize) -> AdamW {
        AdamW {
            m: vec![0.0; total_params],
            v: vec![0.0; total_params],
            step: 0,
        }
    }

    /// One update over the trainable ranges. `ranges` pairs each range with
    /// its decay eligibility.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, ranges: &[(Range<usize>, bool)]) {
        self.step += 1;
        let bias1 = 1.0 - libm::pow(BETA1, self.step as f64);
        let bias2 = 1.0 - libm::pow(BETA2, self.step as f64);
        for (range, decay) in ranges {
            for index in range.clone() {
                let g = grads[index];
                let m = &mut self.m[index];
                let v = &mut self.v[index];
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                let mut update = m_hat / (libm::sqrt(v_hat) + EPS);
                if *decay {
                    update += WEIGHT_DECAY * params[index];
                }
                params[index] -= lr * update;
            }
        }
    }
}

/// Linear warmup over the first tenth of the steps, then linear decay to
/// zero. `step` is 1-based.
pub(crate) fn lr_at(step: u64, total_steps: u64, peak: f64) -> f64 {
    if total_steps <= 1 {
        return peak;
    }
    let warmup = libm::ceil(total_steps as f64 * 0.1).max(1.0) as u64;
    if step <= warmup {
        peak * step as f64 / warmup as f64
    } else if total_steps == warmup {
        peak
    } else {
        peak * (total_steps - step) as f64 / (total_steps - warmup) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_warms_up_and_decays() {
        let total = 100;
        assert!(lr_at(1, total, 1.0) > 0.0);
        assert_eq!(lr_at(10, total, 1.0), 1.0); // warmup = 10 steps
        assert!(lr_at(50, total, 1.0) < 1.0);
        assert_eq!(lr_at(100, total, 1.0), 0.0);
        // Monotone up, then monotone down.
        for s in 1..10 {
            assert!(lr_at(s, total, 1.0) < lr_at(s + 1, total, 1.0));
        }
        for s in 10..99 {
            assert!(lr_at(s, total, 1.0) > lr_at(s + 1, total, 1.0));
        }
    }

    #[test]
    fn untouched_ranges_stay_frozen() {
        let mut params = vec![1.0f64; 10];
        let grads = vec![0.5f64; 10];
        let mut opt = AdamW::new(10);
        opt.step(&mut params, &grads, 0.1, &[(0..5, true)]);
        assert!(params[..5].iter().all(|&p| p != 1.0));
        assert!(params[5..].iter().all(|&p| p == 1.0));
    }

    #[test]
    fn descends_a_quadratic() {
        // Minimize (x - 3)^2 to verify the update direction and convergence.
        let mut params = vec![0.0f64];
        let mut opt = AdamW::new(1);
        for _ in 0..800 {
            let g = 2.0 * (params[0] - 3.0);
            opt.step(&mut params, &[g], 0.05, &[(0..1, false)]);
        }
        assert!((params[0] - 3.0).abs() < 0.05, "got {}", params[0]);
    }
}
