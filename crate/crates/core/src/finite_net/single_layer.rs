//! Directly coded single-hidden-layer mean-field network
//! `g(x) = (1/N) Σ_j W²_j σ(W¹_j · x)`, trained with
//! `W²_j += (α₂/N) r σ(W¹_j·x)` and `W¹_j += (α₁/N) r W²_j σ'(W¹_j·x) x`.
//!
//! The two-layer network with `N₂ = 1`, `C ≡ 1` frozen and an identity outer
//! activation must reproduce this trajectory bit for bit.

use rand::Rng;

use crate::activation::Activation;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

use super::forward::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleLayerParams {
    pub n: usize,
    pub d: usize,
    /// `N × d`.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl SingleLayerParams {
    pub fn output(&self, act: &Activation, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            acc += self.w2[j] * act.value(dot(&self.w1[j * self.d..(j + 1) * self.d], x));
        }
        acc / self.n as f64
    }

    /// One SGD step with rates `(α₁, α₂)`; returns the residual.
    pub fn sgd_step(&mut self, act: &Activation, x: &[f64], y: f64, alpha1: f64, alpha2: f64) -> f64 {
        let (n, d) = (self.n, self.d);
        let mut h = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for j in 0..n {
            let a = dot(&self.w1[j * d..(j + 1) * d], x);
            h.push(act.value(a));
            s.push(act.slope(a));
        }
        let g = dot(&self.w2, &h) / n as f64;
        let r = y - g;
        let p1 = alpha1 / n as f64;
        let p2 = alpha2 / n as f64;
        let old_w2 = self.w2.clone();
        let coef2 = p2 * r;
        for (w, hj) in self.w2.iter_mut().zip(&h) {
            *w += coef2 * hj;
        }
        let pr1 = p1 * r;
        for j in 0..n {
            let coef = pr1 * old_w2[j] * s[j];
            for k in 0..d {
                self.w1[j * d + k] += coef * x[k];
            }
        }
        r
    }

    /// Runs `⌊N T⌋` steps drawing samples uniformly from `data` using the `Sgd`
    /// stream `(seed, replicate)`; returns the parameters after each step count
    /// in `checkpoints`.
    #[allow(clippy::too_many_arguments)]
    pub fn train(
        &mut self,
        act: &Activation,
        data: &Dataset,
        alpha1: f64,
        alpha2: f64,
        horizon: f64,
        seed: u64,
        replicate: u64,
    ) -> Result<Vec<SingleLayerParams>> {
        let steps = (self.n as f64 * horizon).floor() as usize;
        let mut rng = rng::stream(seed, Purpose::Sgd, replicate);
        let mut path = Vec::with_capacity(steps + 1);
        path.push(self.clone());
        for k in 0..steps {
            let s = rng.random_range(0..data.len());
            self.sgd_step(act, data.input(s), data.target(s), alpha1, alpha2);
            if self.w1.iter().chain(&self.w2).any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step: k + 1, time: (k + 1) as f64 / self.n as f64, group: "single-layer" });
            }
            path.push(self.clone());
        }
        Ok(path)
    }
}
