use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::OuterActivation;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Closed interval for uniform initialization; `lo == hi` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitBox {
    pub lo: f64,
    pub hi: f64,
}

impl InitBox {
    pub const fn new(lo: f64, hi: f64) -> Self {
        InitBox { lo, hi }
    }

    pub fn validate(&self, group: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::config(format!(
                "degenerate init box for {group}: [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    /// `max |v|` over the box.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Per-group uniform initialization laws `μ_c`, `μ_{W¹}` (per coordinate), `μ_{W²}`, `μ_{W³}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitDistribution {
    pub c: InitBox,
    pub w1: InitBox,
    pub w2: InitBox,
    pub w3: InitBox,
}

/// Wide `C` and `W¹` boxes keep the early, near-saddle phase of sigmoid
/// training short; `W²` must stay centred.
impl Default for InitDistribution {
    fn default() -> Self {
        InitDistribution {
            c: InitBox::new(-5.0, 5.0),
            w1: InitBox::new(-4.0, 4.0),
            w2: InitBox::new(-1.0, 1.0),
            w3: InitBox::new(-1.0, 1.0),
        }
    }
}

impl InitDistribution {
    pub fn validate(&self) -> Result<()> {
        self.c.validate("c")?;
        self.w1.validate("w1")?;
        self.w2.validate("w2")?;
        self.w3.validate("w3")
    }

    pub fn zeros() -> Self {
        let z = InitBox::new(0.0, 0.0);
        InitDistribution { c: z, w1: z, w2: z, w3: z }
    }
}

/// Parameters `θ = (C, W¹, W²)` of the two-layer network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerParams {
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
    /// `C[i]`, length `N₂`.
    pub c: Vec<f64>,
    /// `W¹[j][k]`, row-major `N₁ × d`.
    pub w1: Vec<f64>,
    /// `W²[i][j]`, row-major `N₂ × N₁`.
    pub w2: Vec<f64>,
    #[serde(default)]
    pub outer: OuterActivation,
}

impl TwoLayerParams {
    pub fn zeros(n1: usize, n2: usize, d: usize) -> Self {
        TwoLayerParams {
            n1,
            n2,
            d,
            c: vec![0.0; n2],
            w1: vec![0.0; n1 * d],
            w2: vec![0.0; n2 * n1],
            outer: OuterActivation::Hidden,
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.d == 0 {
            return Err(Error::contract("widths and input dimension must be positive"));
        }
        if self.c.len() != self.n2 || self.w1.len() != self.n1 * self.d || self.w2.len() != self.n2 * self.n1 {
            return Err(Error::contract("two-layer parameter arrays inconsistent with widths"));
        }
        Ok(())
    }

    pub fn w1_row(&self, j: usize) -> &[f64] {
        &self.w1[j * self.d..(j + 1) * self.d]
    }
}

/// Parameters `θ = (C, W¹, W², W³)` of the three-layer network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerParams {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub d: usize,
    /// `C[i]`, length `N₃`.
    pub c: Vec<f64>,
    /// `W¹[ν][k]`, `N₁ × d`.
    pub w1: Vec<f64>,
    /// `W²[j][ν]`, `N₂ × N₁`.
    pub w2: Vec<f64>,
    /// `W³[i][j]`, `N₃ × N₂`.
    pub w3: Vec<f64>,
}

impl ThreeLayerParams {
    pub fn zeros(n1: usize, n2: usize, n3: usize, d: usize) -> Self {
        ThreeLayerParams {
            n1,
            n2,
            n3,
            d,
            c: vec![0.0; n3],
            w1: vec![0.0; n1 * d],
            w2: vec![0.0; n2 * n1],
            w3: vec![0.0; n3 * n2],
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.n3 == 0 || self.d == 0 {
            return Err(Error::contract("widths and input dimension must be positive"));
        }
        if self.c.len() != self.n3
            || self.w1.len() != self.n1 * self.d
            || self.w2.len() != self.n2 * self.n1
            || self.w3.len() != self.n3 * self.n2
        {
            return Err(Error::contract("three-layer parameter arrays inconsistent with widths"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "depth")]
pub enum Params {
    #[serde(rename = "2")]
    Two(TwoLayerParams),
    #[serde(rename = "3")]
    Three(ThreeLayerParams),
}

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.contains(&0) {
        return Err(Error::config(format!("widths must be ≥ 1, got {widths:?}")));
    }
    Ok(())
}

/// I.i.d. uniform draws per group from the `NetInit` stream `(seed, replicate)`;
/// order of draws is C, then W¹, then W².
pub fn init_two_layer(
    dist: &InitDistribution,
    n1: usize,
    n2: usize,
    d: usize,
    seed: u64,
    replicate: u64,
) -> Result<TwoLayerParams> {
    dist.validate()?;
    check_widths(&[n1, n2, d])?;
    let mut rng = rng::stream(seed, Purpose::NetInit, replicate);
    let c = (0..n2).map(|_| dist.c.sample(&mut rng)).collect();
    let w1 = (0..n1 * d).map(|_| dist.w1.sample(&mut rng)).collect();
    let w2 = (0..n2 * n1).map(|_| dist.w2.sample(&mut rng)).collect();
    Ok(TwoLayerParams {
        n1,
        n2,
        d,
        c,
        w1,
        w2,
        outer: OuterActivation::Hidden,
    })
}

/// Three-layer analogue of [`init_two_layer`]; draw order C, W¹, W², W³.
pub fn init_three_layer(
    dist: &InitDistribution,
    n1: usize,
    n2: usize,
    n3: usize,
    d: usize,
    seed: u64,
    replicate: u64,
) -> Result<ThreeLayerParams> {
    dist.validate()?;
    check_widths(&[n1, n2, n3, d])?;
    let mut rng = rng::stream(seed, Purpose::NetInit, replicate);
    let c = (0..n3).map(|_| dist.c.sample(&mut rng)).collect();
    let w1 = (0..n1 * d).map(|_| dist.w1.sample(&mut rng)).collect();
    let w2 = (0..n2 * n1).map(|_| dist.w2.sample(&mut rng)).collect();
    let w3 = (0..n3 * n2).map(|_| dist.w3.sample(&mut rng)).collect();
    Ok(ThreeLayerParams { n1, n2, n3, d, c, w1, w2, w3 })
}

/// Initializes a network whose depth is the number of widths (2 or 3).
pub fn init_params(dist: &InitDistribution, widths: &[usize], d: usize, seed: u64, replicate: u64) -> Result<Params> {
    match *widths {
        [n1, n2] => init_two_layer(dist, n1, n2, d, seed, replicate).map(Params::Two),
        [n1, n2, n3] => init_three_layer(dist, n1, n2, n3, d, seed, replicate).map(Params::Three),
        _ => Err(Error::config(format!("expected 2 or 3 widths, got {widths:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_boxes_give_zero_parameters() {
        let p = init_two_layer(&InitDistribution::zeros(), 5, 3, 2, 1, 0).unwrap();
        assert!(p.c.iter().chain(&p.w1).chain(&p.w2).all(|&v| v == 0.0));
        let q = init_three_layer(&InitDistribution::zeros(), 5, 3, 2, 2, 1, 0).unwrap();
        assert!(q.c.iter().chain(&q.w1).chain(&q.w2).chain(&q.w3).all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_parameters() {
        let dist = InitDistribution::default();
        let a = init_params(&dist, &[7, 4], 2, 5, 0).unwrap();
        assert_eq!(a, init_params(&dist, &[7, 4], 2, 5, 0).unwrap());
        assert_ne!(a, init_params(&dist, &[7, 4], 2, 5, 1).unwrap());
    }

    #[test]
    fn draws_stay_in_boxes_and_shapes_are_consistent() {
        let dist = InitDistribution::default();
        let p = init_two_layer(&dist, 9, 4, 3, 1, 0).unwrap();
        p.check_shapes().unwrap();
        assert!(p.c.iter().all(|&v| dist.c.contains(v)));
        assert!(p.w1.iter().all(|&v| dist.w1.contains(v)));
        assert!(p.w2.iter().all(|&v| dist.w2.contains(v)));
        let q = init_three_layer(&dist, 9, 4, 2, 3, 1, 0).unwrap();
        q.check_shapes().unwrap();
        assert!(q.w3.iter().all(|&v| dist.w3.contains(v)));
    }

    #[test]
    fn sample_mean_of_c_is_near_zero() {
        let dist = InitDistribution { c: InitBox::new(-1.0, 1.0), ..InitDistribution::default() };
        let p = init_two_layer(&dist, 1, 10_000, 1, 3, 0).unwrap();
        let mean = p.c.iter().sum::<f64>() / p.c.len() as f64;
        assert!(mean.abs() < 0.05, "{mean}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let bad = InitDistribution { c: InitBox::new(1.0, -1.0), ..InitDistribution::default() };
        assert!(matches!(init_two_layer(&bad, 2, 2, 1, 0, 0), Err(Error::Config(_))));
        let nan = InitDistribution { w2: InitBox::new(f64::NAN, 1.0), ..InitDistribution::default() };
        assert!(init_two_layer(&nan, 2, 2, 1, 0, 0).is_err());
        assert!(init_two_layer(&InitDistribution::default(), 0, 2, 1, 0, 0).is_err());
        assert!(init_params(&InitDistribution::default(), &[3], 1, 0, 0).is_err());
    }
}
