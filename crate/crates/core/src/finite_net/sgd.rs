//! One-sample SGD updates. Every increment is computed from the pre-step
//! parameters; each group's update equals `−α_group` times the gradient of
//! `½ (y − g(x))²` with respect to that group.

use crate::activation::Activation;
use crate::error::Result;

use super::forward::{forward_three_layer, forward_two_layer};
use super::params::{ThreeLayerParams, TwoLayerParams};
use super::schedule::LearningRates;

/// Applies one SGD step at `(x, y)` and returns the pre-step residual `y − g(x)`.
///
/// Prefactors are `α_C/N₂` for `C`, `α_{W,1}/N₁` for `W¹` and `α_{W,2}/(N₁N₂)` for `W²`.
pub fn sgd_step_two_layer(
    p: &mut TwoLayerParams,
    act: &Activation,
    x: &[f64],
    y: f64,
    rates: &LearningRates,
) -> Result<f64> {
    let f = forward_two_layer(p, act, x)?;
    let (n1, n2, d) = (p.n1, p.n2, p.d);
    let r = y - f.g;
    let pc = rates.c / n2 as f64;
    let p1 = rates.w1 / n1 as f64;
    let p2 = rates.w2 / (n1 as f64 * n2 as f64);

    // (1/N₂) Σ_i C_i σ'(Z_i) W²_{ij}, from the old C and W².
    let mut back = vec![0.0; n1];
    for i in 0..n2 {
        let a = p.c[i] * f.s2[i];
        let row = &p.w2[i * n1..(i + 1) * n1];
        for (b, w) in back.iter_mut().zip(row) {
            *b += a * w;
        }
    }
    for b in &mut back {
        *b /= n2 as f64;
    }

    for i in 0..n2 {
        let coef = p2 * r * p.c[i] * f.s2[i];
        let row = &mut p.w2[i * n1..(i + 1) * n1];
        for (w, h) in row.iter_mut().zip(&f.h1) {
            *w += coef * h;
        }
    }
    let pr1 = p1 * r;
    for j in 0..n1 {
        let coef = pr1 * back[j] * f.s1[j];
        for k in 0..d {
            p.w1[j * d + k] += coef * x[k];
        }
    }
    let prc = pc * r;
    for (c, h) in p.c.iter_mut().zip(&f.h2) {
        *c += prc * h;
    }
    Ok(r)
}

/// Three-layer step with prefactors `α_C/N₃`, `α_{W,1}/N₁`, `α_{W,3}/(N₂N₃)`, `α_{W,2}/(N₁N₂)`.
pub fn sgd_step_three_layer(
    p: &mut ThreeLayerParams,
    act: &Activation,
    x: &[f64],
    y: f64,
    rates: &LearningRates,
) -> Result<f64> {
    let f = forward_three_layer(p, act, x)?;
    let (n1, n2, n3, d) = (p.n1, p.n2, p.n3, p.d);
    let r = y - f.g;
    let pc = rates.c / n3 as f64;
    let p1 = rates.w1 / n1 as f64;
    let p3 = rates.w3 / (n2 as f64 * n3 as f64);
    let p2 = rates.w2 / (n1 as f64 * n2 as f64);

    // L_j = (1/N₃) Σ_i C_i σ'(Z³_i) W³_{ij}
    let mut l = vec![0.0; n2];
    for i in 0..n3 {
        let a = p.c[i] * f.s3[i];
        for (lj, w) in l.iter_mut().zip(&p.w3[i * n2..(i + 1) * n2]) {
            *lj += a * w;
        }
    }
    for lj in &mut l {
        *lj /= n3 as f64;
    }
    // back_ν = (1/N₂) Σ_j L_j σ'(Z²_j) W²_{jν}
    let mut back = vec![0.0; n1];
    for j in 0..n2 {
        let a = l[j] * f.s2[j];
        for (b, w) in back.iter_mut().zip(&p.w2[j * n1..(j + 1) * n1]) {
            *b += a * w;
        }
    }
    for b in &mut back {
        *b /= n2 as f64;
    }

    for i in 0..n3 {
        let coef = p3 * r * p.c[i] * f.s3[i];
        for (w, h) in p.w3[i * n2..(i + 1) * n2].iter_mut().zip(&f.h2) {
            *w += coef * h;
        }
    }
    for j in 0..n2 {
        let coef = p2 * r * l[j] * f.s2[j];
        for (w, h) in p.w2[j * n1..(j + 1) * n1].iter_mut().zip(&f.h1) {
            *w += coef * h;
        }
    }
    let pr1 = p1 * r;
    for nu in 0..n1 {
        let coef = pr1 * back[nu] * f.s1[nu];
        for k in 0..d {
            p.w1[nu * d + k] += coef * x[k];
        }
    }
    let prc = pc * r;
    for (c, h) in p.c.iter_mut().zip(&f.h3) {
        *c += prc * h;
    }
    Ok(r)
}
