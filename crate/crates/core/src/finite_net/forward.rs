use crate::activation::Activation;
use crate::error::{Error, Result};

use super::params::{ThreeLayerParams, TwoLayerParams};

/// Intermediate quantities of a two-layer forward pass at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `σ(W¹_j · x)`.
    pub h1: Vec<f64>,
    /// `σ'(W¹_j · x)`.
    pub s1: Vec<f64>,
    /// `(1/N₁) Σ_j W²_{ij} H¹_j`.
    pub z2: Vec<f64>,
    pub h2: Vec<f64>,
    /// Outer-activation slope at `Z²_i`.
    pub s2: Vec<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache3 {
    pub h1: Vec<f64>,
    pub s1: Vec<f64>,
    pub z2: Vec<f64>,
    pub h2: Vec<f64>,
    pub s2: Vec<f64>,
    pub z3: Vec<f64>,
    pub h3: Vec<f64>,
    pub s3: Vec<f64>,
    pub g: f64,
}

pub(crate) use crate::reduce::dot;

fn check_input(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::contract(format!("input of length {} for d = {d}", x.len())));
    }
    Ok(())
}

/// `g(x) = (1/N₂) Σ_i C_i σ((1/N₁) Σ_j W²_{ij} σ(W¹_j · x))`.
pub fn forward_two_layer(p: &TwoLayerParams, act: &Activation, x: &[f64]) -> Result<ForwardCache> {
    check_input(p.d, x)?;
    let (n1, n2) = (p.n1, p.n2);
    let mut h1 = Vec::with_capacity(n1);
    let mut s1 = Vec::with_capacity(n1);
    for j in 0..n1 {
        let a = dot(p.w1_row(j), x);
        h1.push(act.value(a));
        s1.push(act.slope(a));
    }
    let mut z2 = Vec::with_capacity(n2);
    let mut h2 = Vec::with_capacity(n2);
    let mut s2 = Vec::with_capacity(n2);
    for i in 0..n2 {
        let z = dot(&p.w2[i * n1..(i + 1) * n1], &h1) / n1 as f64;
        z2.push(z);
        h2.push(p.outer.value(act, z));
        s2.push(p.outer.slope(act, z));
    }
    let g = dot(&p.c, &h2) / n2 as f64;
    Ok(ForwardCache { h1, s1, z2, h2, s2, g })
}

/// Three-layer forward pass with normalizations `1/N₁`, `1/N₂`, `1/N₃`.
pub fn forward_three_layer(p: &ThreeLayerParams, act: &Activation, x: &[f64]) -> Result<ForwardCache3> {
    check_input(p.d, x)?;
    let (n1, n2, n3, d) = (p.n1, p.n2, p.n3, p.d);
    let mut h1 = Vec::with_capacity(n1);
    let mut s1 = Vec::with_capacity(n1);
    for nu in 0..n1 {
        let a = dot(&p.w1[nu * d..(nu + 1) * d], x);
        h1.push(act.value(a));
        s1.push(act.slope(a));
    }
    let mut z2 = Vec::with_capacity(n2);
    let mut h2 = Vec::with_capacity(n2);
    let mut s2 = Vec::with_capacity(n2);
    for j in 0..n2 {
        let z = dot(&p.w2[j * n1..(j + 1) * n1], &h1) / n1 as f64;
        z2.push(z);
        h2.push(act.value(z));
        s2.push(act.slope(z));
    }
    let mut z3 = Vec::with_capacity(n3);
    let mut h3 = Vec::with_capacity(n3);
    let mut s3 = Vec::with_capacity(n3);
    for i in 0..n3 {
        let z = dot(&p.w3[i * n2..(i + 1) * n2], &h2) / n2 as f64;
        z3.push(z);
        h3.push(act.value(z));
        s3.push(act.slope(z));
    }
    let g = dot(&p.c, &h3) / n3 as f64;
    Ok(ForwardCache3 { h1, s1, z2, h2, s2, z3, h3, s3, g })
}
