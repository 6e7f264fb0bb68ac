use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::finite_net::ParamNorms;
use crate::reduce::{axpy, dot, dot4, first_non_finite, pairwise_mean_by, pairwise_sum_by, sup_abs, sup_row_norm};

use super::integrate::{integrate, IntegrateConfig, LimitSystem, LimitTrajectory};
use super::pools::ParticlePools;

/// Particle state of the two-layer limit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitState {
    pub t: f64,
    pub d: usize,
    pub m_c: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub c: Vec<f64>,
    /// `M_w × d`.
    pub w1: Vec<f64>,
    /// `M_c × M_w × M_u`.
    pub w2: Vec<f64>,
}

impl LimitState {
    pub fn from_pools(p: &ParticlePools) -> Self {
        LimitState {
            t: 0.0,
            d: p.d,
            m_c: p.m_c,
            m_w: p.m_w,
            m_u: p.m_u,
            c: p.c.clone(),
            w1: p.w.clone(),
            w2: p.u.clone(),
        }
    }

    pub fn w1_row(&self, j: usize) -> &[f64] {
        &self.w1[j * self.d..(j + 1) * self.d]
    }

    /// `(1/M_u) Σ_k W̃²_{ijk}`, shape `M_c × M_w`.
    pub fn w2_bar(&self) -> Vec<f64> {
        let mu = self.m_u as f64;
        self.w2.chunks_exact(self.m_u).map(|r| r.iter().sum::<f64>() / mu).collect()
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.c.len() != self.m_c || self.w1.len() != self.m_w * self.d || self.w2.len() != self.m_c * self.m_w * self.m_u {
            return Err(Error::contract("limit state arrays do not match (M_c, M_w, M_u, d)"));
        }
        Ok(())
    }

    pub fn norms(&self) -> ParamNorms {
        ParamNorms { c: sup_abs(&self.c), w1: sup_row_norm(&self.w1, self.d), w2: sup_abs(&self.w2), w3: None }
    }

    pub fn non_finite_group(&self) -> Option<&'static str> {
        first_non_finite(&[("C", &self.c[..]), ("W1", &self.w1[..]), ("W2", &self.w2[..])])
    }
}

/// Auxiliary fields of the limit system at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFields {
    /// `σ(W̃¹_j · x)`
    pub h1: Vec<f64>,
    /// `σ'(W̃¹_j · x)`
    pub s1: Vec<f64>,
    pub z: Vec<f64>,
    /// `σ(Z̃_i)`
    pub h2: Vec<f64>,
    /// `σ'(Z̃_i)`
    pub s2: Vec<f64>,
    pub v: Vec<f64>,
    pub g: f64,
}

fn fields_with(st: &LimitState, w2bar: &[f64], act: &Activation, x: &[f64]) -> LimitFields {
    let (mc, mw) = (st.m_c, st.m_w);
    let (h1, s1): (Vec<f64>, Vec<f64>) = (0..mw).map(|j| act.value_and_slope(dot(st.w1_row(j), x))).unzip();
    let z: Vec<f64> = (0..mc).map(|i| dot4(&w2bar[i * mw..(i + 1) * mw], &h1) / mw as f64).collect();
    let (h2, s2): (Vec<f64>, Vec<f64>) = z.iter().map(|&zi| act.value_and_slope(zi)).unzip();
    let mut v = vec![0.0; mw];
    for i in 0..mc {
        axpy(&mut v, st.c[i] * s2[i], &w2bar[i * mw..(i + 1) * mw]);
    }
    for vj in &mut v {
        *vj /= mc as f64;
    }
    let g = dot(&st.c, &h2) / mc as f64;
    LimitFields { h1, s1, z, h2, s2, v, g }
}

fn check_point(st: &LimitState, x: &[f64]) -> Result<()> {
    if x.len() != st.d {
        return Err(Error::contract(format!("input has dimension {}, state expects {}", x.len(), st.d)));
    }
    if let Some(&bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(bad));
    }
    Ok(())
}

/// Fields `H̃¹, Z̃, H̃², V, g` at `x` with all measure integrals replaced by
/// particle averages.
pub fn compute_fields(state: &LimitState, act: &Activation, x: &[f64]) -> Result<LimitFields> {
    state.check_shapes()?;
    check_point(state, x)?;
    Ok(fields_with(state, &state.w2_bar(), act, x))
}

/// [`compute_fields`] at every `d`-long row of `points`.
pub fn compute_fields_batch(state: &LimitState, act: &Activation, points: &[f64], exec: Exec) -> Result<Vec<LimitFields>> {
    state.check_shapes()?;
    let n = points.len() / state.d;
    for k in 0..n {
        check_point(state, &points[k * state.d..(k + 1) * state.d])?;
    }
    let w2bar = state.w2_bar();
    Ok(exec.map(n, |k| fields_with(state, &w2bar, act, &points[k * state.d..(k + 1) * state.d])))
}

/// Limit output `g_t` at every row of `points`.
pub fn limit_outputs(state: &LimitState, act: &Activation, points: &[f64], exec: Exec) -> Result<Vec<f64>> {
    Ok(compute_fields_batch(state, act, points, exec)?.into_iter().map(|f| f.g).collect())
}

/// Time derivatives of the two-layer limit state.
///
/// `w2` has shape `M_c × M_w`: the drift of `W̃²_{ijk}` does not depend on `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub c: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Drift {
    /// `mean_i dC̃_i² + mean_j ‖dW̃¹_j‖² + mean_{ij} dW̃²_{ij}²`.
    pub fn energy(&self, m_w: usize) -> f64 {
        let sq = |v: &[f64]| pairwise_sum_by(v.len(), |k| v[k] * v[k]);
        sq(&self.c) / self.c.len() as f64 + sq(&self.w1) / m_w as f64 + sq(&self.w2) / self.w2.len() as f64
    }

    pub fn sup(&self) -> f64 {
        sup_abs(&self.c).max(sup_abs(&self.w1)).max(sup_abs(&self.w2))
    }
}

fn check_data(state: &LimitState, data: &Dataset) -> Result<()> {
    state.check_shapes()?;
    if data.dim() != state.d {
        return Err(Error::contract(format!("dataset dimension {} vs state dimension {}", data.dim(), state.d)));
    }
    Ok(())
}

fn rhs_and_loss(state: &LimitState, data: &Dataset, act: &Activation, exec: Exec) -> Result<(Drift, f64)> {
    check_data(state, data)?;
    let (mc, mw, d) = (state.m_c, state.m_w, state.d);
    let ns = data.len();
    let w2bar = state.w2_bar();
    let f = exec.map(ns, |s| fields_with(state, &w2bar, act, data.input(s)));
    let h: Vec<f64> = (0..ns).map(|s| data.target(s) - f[s].g).collect();
    let loss = 0.5 * pairwise_mean_by(ns, |s| h[s] * h[s]);
    let c = exec.map(mc, |i| pairwise_mean_by(ns, |s| h[s] * f[s].h2[i]));
    let w1 = exec.map(mw * d, |jl| {
        let (j, l) = (jl / d, jl % d);
        pairwise_mean_by(ns, |s| h[s] * f[s].v[j] * f[s].s1[j] * data.input(s)[l])
    });
    // Row sums over samples run in sample order; each row is owned by one task.
    let rows = exec.map(mc, |i| {
        let mut acc = vec![0.0; mw];
        for (s, fs) in f.iter().enumerate() {
            axpy(&mut acc, h[s] * state.c[i] * fs.s2[i], &fs.h1);
        }
        acc.iter_mut().for_each(|a| *a /= ns as f64);
        acc
    });
    Ok((Drift { c, w1, w2: rows.concat() }, loss))
}

/// Dataset-averaged drifts `dC̃`, `dW̃¹`, `dW̃²` with residual `y − g_t(x)`.
pub fn limit_rhs(state: &LimitState, data: &Dataset, act: &Activation, exec: Exec) -> Result<Drift> {
    Ok(rhs_and_loss(state, data, act, exec)?.0)
}

/// `L̄ = (1/2) · mean_s (y_s − g_t(x_s))²`.
pub fn limit_loss(state: &LimitState, data: &Dataset, act: &Activation, exec: Exec) -> Result<f64> {
    check_data(state, data)?;
    let g = limit_outputs(state, act, data.inputs(), exec)?;
    Ok(0.5 * pairwise_mean_by(data.len(), |s| {
        let r = data.target(s) - g[s];
        r * r
    }))
}

/// `s + h · k` with the `W̃²` drift broadcast over `u`.
pub fn advance(state: &LimitState, h: f64, k: &Drift) -> LimitState {
    let mut out = state.clone();
    for (x, dx) in out.c.iter_mut().zip(&k.c) {
        *x += h * dx;
    }
    for (x, dx) in out.w1.iter_mut().zip(&k.w1) {
        *x += h * dx;
    }
    for (row, dx) in out.w2.chunks_exact_mut(state.m_u).zip(&k.w2) {
        let inc = h * dx;
        for x in row {
            *x += inc;
        }
    }
    out
}

/// The two-layer system on a dataset, observed on a test grid.
#[derive(Debug, Clone, Copy)]
pub struct TwoLayerLimit<'a> {
    pub data: &'a Dataset,
    pub act: Activation,
    pub grid: &'a TestGrid,
    pub exec: Exec,
}

impl LimitSystem for TwoLayerLimit<'_> {
    type State = LimitState;
    type Drift = Drift;

    fn time(&self, s: &LimitState) -> f64 {
        s.t
    }

    fn set_time(&self, s: &mut LimitState, t: f64) {
        s.t = t;
    }

    fn drift_and_loss(&self, s: &LimitState) -> Result<(Drift, f64)> {
        rhs_and_loss(s, self.data, &self.act, self.exec)
    }

    fn loss(&self, s: &LimitState) -> Result<f64> {
        limit_loss(s, self.data, &self.act, self.exec)
    }

    fn advance(&self, s: &LimitState, h: f64, k: &Drift) -> LimitState {
        advance(s, h, k)
    }

    fn outputs_on_grid(&self, s: &LimitState) -> Result<Vec<f64>> {
        if self.grid.d != s.d {
            return Err(Error::contract("test grid dimension does not match the state"));
        }
        limit_outputs(s, &self.act, &self.grid.points, self.exec)
    }

    fn norms(&self, s: &LimitState) -> ParamNorms {
        s.norms()
    }

    fn non_finite_group(&self, s: &LimitState) -> Option<&'static str> {
        s.non_finite_group()
    }
}

/// Integrates the two-layer limit system started from `pools`.
pub fn integrate_limit(
    pools: &ParticlePools,
    data: &Dataset,
    act: &Activation,
    cfg: &IntegrateConfig,
    grid: &TestGrid,
    exec: Exec,
) -> Result<LimitTrajectory<LimitState>> {
    let sys = TwoLayerLimit { data, act: *act, grid, exec };
    integrate(&sys, &LimitState::from_pools(pools), cfg, None)
}

/// The finite-`N₂` system: `N₂ = c_draws.len()` fixed c-particles sharing the
/// w-pool and the first `N₂` u-rows of `pools`. Its output is `g^{N₂}_t`.
pub fn intermediate_system(
    c_draws: &[f64],
    pools: &ParticlePools,
    data: &Dataset,
    act: &Activation,
    cfg: &IntegrateConfig,
    grid: &TestGrid,
    exec: Exec,
) -> Result<LimitTrajectory<LimitState>> {
    if c_draws.is_empty() {
        return Err(Error::config("the intermediate system needs N₂ ≥ 1 c-draws"));
    }
    integrate_limit(&pools.with_c(c_draws)?, data, act, cfg, grid, exec)
}
