//! Adam over a flat parameter vector split into learning-rate groups.

use std::ops::Range;

#[derive(Clone, Debug)]
pub struct ParamGroup {
    pub range: Range<usize>,
    pub lr: f64,
}

/// Parameters outside every group are never touched, which is how frozen
/// tables stay bit-identical.
#[derive(Clone, Debug)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    groups: Vec<ParamGroup>,
}

impl Adam {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64, groups: Vec<ParamGroup>) -> Self {
        for g in &groups {
            assert!(g.range.end <= len, "parameter group out of bounds");
        }
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            groups,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for g in &self.groups {
            let step = g.lr / bc1;
            for i in g.range.clone() {
                let gi = grads[i];
                let m = b1 * self.m[i] + (1.0 - b1) * gi;
                let v = b2 * self.v[i] + (1.0 - b2) * gi * gi;
                self.m[i] = m;
                self.v[i] = v;
                params[i] -= step * m / ((v / bc2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_the_gradient_sign() {
        let mut p = vec![1.0, 1.0, 1.0];
        let mut opt = Adam::new(3, 0.9, 0.999, 1e-8, vec![ParamGroup { range: 0..2, lr: 0.1 }]);
        opt.step(&mut p, &[2.0, -0.5, 7.0]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
        // outside every group
        assert_eq!(p[2], 1.0);
    }

    // Scalar reimplementation of the textbook update.
    #[test]
    fn matches_reference_recurrence() {
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.01);
        let grads = [0.3, -1.2, 0.05, 2.0, -0.7];
        let mut p = vec![0.5];
        let mut opt = Adam::new(1, b1, b2, eps, vec![ParamGroup { range: 0..1, lr }]);
        let (mut x, mut m, mut v) = (0.5f64, 0.0f64, 0.0f64);
        for (k, g) in grads.iter().enumerate() {
            opt.step(&mut p, &[*g]);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(k as i32 + 1));
            let vh = v / (1.0 - b2.powi(k as i32 + 1));
            x -= lr * mh / (vh.sqrt() + eps);
            assert!((p[0] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.9, 0.999, 1e-8, vec![ParamGroup { range: 0..2, lr: 0.05 }]);
        for _ in 0..2000 {
            let g = [2.0 * p[0], 2.0 * p[1]];
            opt.step(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-2 && p[1].abs() < 1e-2);
    }
}
