use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_net::InitDistribution;
use crate::rng::{self, Purpose};

/// I.i.d. draws discretizing `μ_c`, `μ_{W¹}` and `μ_{W²}`.
///
/// `u` holds `M_u` independent draws for every `(c, w)` pair, row-major in
/// `(c, w, u)`. Pools drawn from the same `(seed, replicate)` are nested in the
/// c-axis: the pool with `M_c = n` is the first `n` c-rows of any larger pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticlePools {
    pub d: usize,
    pub m_c: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub c: Vec<f64>,
    /// `M_w × d`.
    pub w: Vec<f64>,
    /// `M_c × M_w × M_u`.
    pub u: Vec<f64>,
}

fn check_counts(counts: &[(&str, usize)]) -> Result<()> {
    if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
        return Err(Error::config(format!("particle count {name} must be ≥ 1")));
    }
    Ok(())
}

impl ParticlePools {
    pub fn draw(dist: &InitDistribution, d: usize, m_c: usize, m_w: usize, m_u: usize, seed: u64, replicate: u64) -> Result<Self> {
        dist.validate()?;
        check_counts(&[("d", d), ("M_c", m_c), ("M_w", m_w), ("M_u", m_u)])?;
        let mut rc = rng::stream(seed, Purpose::PoolC, replicate);
        let mut rw = rng::stream(seed, Purpose::PoolW1, replicate);
        let mut ru = rng::stream(seed, Purpose::PoolW2, replicate);
        let c = (0..m_c).map(|_| dist.c.sample(&mut rc)).collect();
        let w = (0..m_w * d).map(|_| dist.w1.sample(&mut rw)).collect();
        let u = (0..m_c * m_w * m_u).map(|_| dist.w2.sample(&mut ru)).collect();
        Ok(ParticlePools { d, m_c, m_w, m_u, c, w, u })
    }

    /// The first `n` c-particles with their u-rows; w-pool unchanged.
    pub fn nested(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.m_c {
            return Err(Error::contract(format!("cannot take {n} of {} c-particles", self.m_c)));
        }
        let row = self.m_w * self.m_u;
        Ok(ParticlePools {
            m_c: n,
            c: self.c[..n].to_vec(),
            u: self.u[..n * row].to_vec(),
            ..self.clone()
        })
    }

    /// Replaces the c-pool by `c_draws`, keeping the w-pool and the first
    /// `c_draws.len()` u-rows.
    pub fn with_c(&self, c_draws: &[f64]) -> Result<Self> {
        let mut p = self.nested(c_draws.len())?;
        p.c.copy_from_slice(c_draws);
        Ok(p)
    }

    /// Applies `perm` to the c-axis (both `c` and the u-rows).
    pub fn permute_c(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m_c {
            return Err(Error::contract("permutation length must equal M_c"));
        }
        let row = self.m_w * self.m_u;
        let mut out = self.clone();
        for (dst, &src) in perm.iter().enumerate() {
            out.c[dst] = self.c[src];
            out.u[dst * row..(dst + 1) * row].copy_from_slice(&self.u[src * row..(src + 1) * row]);
        }
        Ok(out)
    }

    /// Whether the w-pools agree and `self`'s c-axis is a prefix of `other`'s.
    pub fn is_nested_in(&self, other: &ParticlePools) -> bool {
        self.d == other.d
            && self.m_w == other.m_w
            && self.m_u == other.m_u
            && self.m_c <= other.m_c
            && self.w == other.w
            && self.c[..] == other.c[..self.m_c]
            && self.u[..] == other.u[..self.m_c * self.m_w * self.m_u]
    }
}

/// Pools for the three-layer system: `c ~ μ_c`, `v ~ μ_{W³}`, `w ~ μ_{W¹}`,
/// and `u ~ μ_{W²}` with `M_u` draws per `(v, w)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerPools {
    pub d: usize,
    pub m_c: usize,
    pub m_v: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    /// `M_w × d`.
    pub w: Vec<f64>,
    /// `M_v × M_w × M_u`.
    pub u: Vec<f64>,
}

impl ThreeLayerPools {
    #[allow(clippy::too_many_arguments)]
    pub fn draw(
        dist: &InitDistribution,
        d: usize,
        m_c: usize,
        m_v: usize,
        m_w: usize,
        m_u: usize,
        seed: u64,
        replicate: u64,
    ) -> Result<Self> {
        dist.validate()?;
        check_counts(&[("d", d), ("M_c", m_c), ("M_v", m_v), ("M_w", m_w), ("M_u", m_u)])?;
        let mut rc = rng::stream(seed, Purpose::PoolC, replicate);
        let mut rv = rng::stream(seed, Purpose::PoolW3, replicate);
        let mut rw = rng::stream(seed, Purpose::PoolW1, replicate);
        let mut ru = rng::stream(seed, Purpose::PoolW2, replicate);
        Ok(ThreeLayerPools {
            d,
            m_c,
            m_v,
            m_w,
            m_u,
            c: (0..m_c).map(|_| dist.c.sample(&mut rc)).collect(),
            v: (0..m_v).map(|_| dist.w3.sample(&mut rv)).collect(),
            w: (0..m_w * d).map(|_| dist.w1.sample(&mut rw)).collect(),
            u: (0..m_v * m_w * m_u).map(|_| dist.w2.sample(&mut ru)).collect(),
        })
    }
}
