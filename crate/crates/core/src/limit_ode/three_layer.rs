use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, TestGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::finite_net::ParamNorms;
use crate::reduce::{axpy, dot, dot4, first_non_finite, pairwise_mean_by, sup_abs, sup_row_norm};

use super::integrate::{integrate, IntegrateConfig, LimitSystem, LimitTrajectory};
use super::pools::ThreeLayerPools;

/// Particle state of the three-layer limit system.
///
/// `W̃³_{cv}` starts at the v-draw `v` for every `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerLimitState {
    pub t: f64,
    pub d: usize,
    pub m_c: usize,
    pub m_v: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub c: Vec<f64>,
    /// `M_c × M_v`.
    pub w3: Vec<f64>,
    /// `M_v × M_w × M_u`.
    pub w2: Vec<f64>,
    /// `M_w × d`.
    pub w1: Vec<f64>,
}

impl ThreeLayerLimitState {
    pub fn from_pools(p: &ThreeLayerPools) -> Self {
        ThreeLayerLimitState {
            t: 0.0,
            d: p.d,
            m_c: p.m_c,
            m_v: p.m_v,
            m_w: p.m_w,
            m_u: p.m_u,
            c: p.c.clone(),
            w3: (0..p.m_c).flat_map(|_| p.v.iter().copied()).collect(),
            w2: p.u.clone(),
            w1: p.w.clone(),
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.c.len() != self.m_c
            || self.w3.len() != self.m_c * self.m_v
            || self.w2.len() != self.m_v * self.m_w * self.m_u
            || self.w1.len() != self.m_w * self.d
        {
            return Err(Error::contract("three-layer state arrays do not match (M_c, M_v, M_w, M_u, d)"));
        }
        Ok(())
    }

    /// `(1/M_u) Σ_k W̃²_{vjk}`, shape `M_v × M_w`.
    pub fn w2_bar(&self) -> Vec<f64> {
        let mu = self.m_u as f64;
        self.w2.chunks_exact(self.m_u).map(|r| r.iter().sum::<f64>() / mu).collect()
    }

    pub fn norms(&self) -> ParamNorms {
        ParamNorms {
            c: sup_abs(&self.c),
            w1: sup_row_norm(&self.w1, self.d),
            w2: sup_abs(&self.w2),
            w3: Some(sup_abs(&self.w3)),
        }
    }

    pub fn non_finite_group(&self) -> Option<&'static str> {
        first_non_finite(&[("C", &self.c[..]), ("W1", &self.w1[..]), ("W2", &self.w2[..]), ("W3", &self.w3[..])])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerFields {
    pub h1: Vec<f64>,
    pub s1: Vec<f64>,
    pub z2: Vec<f64>,
    pub h2: Vec<f64>,
    pub s2: Vec<f64>,
    pub z3: Vec<f64>,
    pub h3: Vec<f64>,
    pub s3: Vec<f64>,
    /// `L_v = mean_c C̃_c σ'(Z̃³_c) W̃³_{cv}`
    pub l: Vec<f64>,
    /// `V_j = mean_v L_v σ'(Z̃²_v) W̄²_{vj}`
    pub v: Vec<f64>,
    pub g: f64,
}

fn fields_with(st: &ThreeLayerLimitState, w2bar: &[f64], act: &Activation, x: &[f64]) -> ThreeLayerFields {
    let (mc, mv, mw) = (st.m_c, st.m_v, st.m_w);
    let d = st.d;
    let (h1, s1): (Vec<f64>, Vec<f64>) = (0..mw).map(|j| act.value_and_slope(dot(&st.w1[j * d..(j + 1) * d], x))).unzip();
    let z2: Vec<f64> = (0..mv).map(|v| dot4(&w2bar[v * mw..(v + 1) * mw], &h1) / mw as f64).collect();
    let (h2, s2): (Vec<f64>, Vec<f64>) = z2.iter().map(|&z| act.value_and_slope(z)).unzip();
    let z3: Vec<f64> = (0..mc).map(|c| dot4(&st.w3[c * mv..(c + 1) * mv], &h2) / mv as f64).collect();
    let (h3, s3): (Vec<f64>, Vec<f64>) = z3.iter().map(|&z| act.value_and_slope(z)).unzip();
    let g = dot(&st.c, &h3) / mc as f64;
    let mut l = vec![0.0; mv];
    for c in 0..mc {
        axpy(&mut l, st.c[c] * s3[c], &st.w3[c * mv..(c + 1) * mv]);
    }
    l.iter_mut().for_each(|lv| *lv /= mc as f64);
    let mut v = vec![0.0; mw];
    for q in 0..mv {
        axpy(&mut v, l[q] * s2[q], &w2bar[q * mw..(q + 1) * mw]);
    }
    v.iter_mut().for_each(|vj| *vj /= mv as f64);
    ThreeLayerFields { h1, s1, z2, h2, s2, z3, h3, s3, l, v, g }
}

fn check_point(st: &ThreeLayerLimitState, x: &[f64]) -> Result<()> {
    if x.len() != st.d {
        return Err(Error::contract(format!("input has dimension {}, state expects {}", x.len(), st.d)));
    }
    if let Some(&bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(bad));
    }
    Ok(())
}

pub fn compute_fields_three_layer(state: &ThreeLayerLimitState, act: &Activation, x: &[f64]) -> Result<ThreeLayerFields> {
    state.check_shapes()?;
    check_point(state, x)?;
    Ok(fields_with(state, &state.w2_bar(), act, x))
}

fn outputs(state: &ThreeLayerLimitState, act: &Activation, points: &[f64], exec: Exec) -> Result<Vec<f64>> {
    state.check_shapes()?;
    let d = state.d;
    let n = points.len() / d;
    for k in 0..n {
        check_point(state, &points[k * d..(k + 1) * d])?;
    }
    let w2bar = state.w2_bar();
    Ok(exec.map(n, |k| fields_with(state, &w2bar, act, &points[k * d..(k + 1) * d]).g))
}

/// Drifts of the three-layer state; `w2` is `M_v × M_w` (shared over `u`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerDrift {
    pub c: Vec<f64>,
    pub w3: Vec<f64>,
    pub w2: Vec<f64>,
    pub w1: Vec<f64>,
}

fn rhs_and_loss(state: &ThreeLayerLimitState, data: &Dataset, act: &Activation, exec: Exec) -> Result<(ThreeLayerDrift, f64)> {
    state.check_shapes()?;
    if data.dim() != state.d {
        return Err(Error::contract(format!("dataset dimension {} vs state dimension {}", data.dim(), state.d)));
    }
    let (mc, mv, mw, d) = (state.m_c, state.m_v, state.m_w, state.d);
    let ns = data.len();
    let w2bar = state.w2_bar();
    let f = exec.map(ns, |s| fields_with(state, &w2bar, act, data.input(s)));
    let h: Vec<f64> = (0..ns).map(|s| data.target(s) - f[s].g).collect();
    let loss = 0.5 * pairwise_mean_by(ns, |s| h[s] * h[s]);
    let c = exec.map(mc, |i| pairwise_mean_by(ns, |s| h[s] * f[s].h3[i]));
    let w3 = exec
        .map(mc, |i| {
            let mut acc = vec![0.0; mv];
            for (s, fs) in f.iter().enumerate() {
                axpy(&mut acc, h[s] * state.c[i] * fs.s3[i], &fs.h2);
            }
            acc.iter_mut().for_each(|a| *a /= ns as f64);
            acc
        })
        .concat();
    let w2 = exec
        .map(mv, |q| {
            let mut acc = vec![0.0; mw];
            for (s, fs) in f.iter().enumerate() {
                axpy(&mut acc, h[s] * fs.l[q] * fs.s2[q], &fs.h1);
            }
            acc.iter_mut().for_each(|a| *a /= ns as f64);
            acc
        })
        .concat();
    let w1 = exec.map(mw * d, |jl| {
        let (j, l) = (jl / d, jl % d);
        pairwise_mean_by(ns, |s| h[s] * f[s].v[j] * f[s].s1[j] * data.input(s)[l])
    });
    Ok((ThreeLayerDrift { c, w3, w2, w1 }, loss))
}

pub fn limit_rhs_three_layer(state: &ThreeLayerLimitState, data: &Dataset, act: &Activation, exec: Exec) -> Result<ThreeLayerDrift> {
    Ok(rhs_and_loss(state, data, act, exec)?.0)
}

fn add(dst: &mut [f64], h: f64, k: &[f64]) {
    for (x, dx) in dst.iter_mut().zip(k) {
        *x += h * dx;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThreeLayerLimit<'a> {
    pub data: &'a Dataset,
    pub act: Activation,
    pub grid: &'a TestGrid,
    pub exec: Exec,
}

impl LimitSystem for ThreeLayerLimit<'_> {
    type State = ThreeLayerLimitState;
    type Drift = ThreeLayerDrift;

    fn time(&self, s: &ThreeLayerLimitState) -> f64 {
        s.t
    }

    fn set_time(&self, s: &mut ThreeLayerLimitState, t: f64) {
        s.t = t;
    }

    fn drift_and_loss(&self, s: &ThreeLayerLimitState) -> Result<(ThreeLayerDrift, f64)> {
        rhs_and_loss(s, self.data, &self.act, self.exec)
    }

    fn loss(&self, s: &ThreeLayerLimitState) -> Result<f64> {
        let g = outputs(s, &self.act, self.data.inputs(), self.exec)?;
        Ok(0.5 * pairwise_mean_by(g.len(), |k| {
            let r = self.data.target(k) - g[k];
            r * r
        }))
    }

    fn advance(&self, s: &ThreeLayerLimitState, h: f64, k: &ThreeLayerDrift) -> ThreeLayerLimitState {
        let mut out = s.clone();
        add(&mut out.c, h, &k.c);
        add(&mut out.w3, h, &k.w3);
        add(&mut out.w1, h, &k.w1);
        for (row, dx) in out.w2.chunks_exact_mut(s.m_u).zip(&k.w2) {
            let inc = h * dx;
            row.iter_mut().for_each(|x| *x += inc);
        }
        out
    }

    fn outputs_on_grid(&self, s: &ThreeLayerLimitState) -> Result<Vec<f64>> {
        if self.grid.d != s.d {
            return Err(Error::contract("test grid dimension does not match the state"));
        }
        outputs(s, &self.act, &self.grid.points, self.exec)
    }

    fn norms(&self, s: &ThreeLayerLimitState) -> ParamNorms {
        s.norms()
    }

    fn non_finite_group(&self, s: &ThreeLayerLimitState) -> Option<&'static str> {
        s.non_finite_group()
    }
}

pub fn integrate_limit_three_layer(
    pools: &ThreeLayerPools,
    data: &Dataset,
    act: &Activation,
    cfg: &IntegrateConfig,
    grid: &TestGrid,
    exec: Exec,
) -> Result<LimitTrajectory<ThreeLayerLimitState>> {
    let sys = ThreeLayerLimit { data, act: *act, grid, exec };
    integrate(&sys, &ThreeLayerLimitState::from_pools(pools), cfg, None)
}
