use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::TestGrid;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::limit_ode::{compute_fields_batch, LimitState, LimitTrajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSeries {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
}

impl CouplingSeries {
    pub fn last(&self) -> f64 {
        *self.q.last().expect("series is never empty")
    }
}

/// `Q_t = sup_{i,j,k,x} (ΔW²_{ijk}² + ‖ΔW¹_j‖² + ΔV_j(x)² + ΔZ_i(x)² + ΔC_i² + Δg(x)²)`
/// between two runs started from the same pools, at every common snapshot.
pub fn coupling_distance(
    a: &LimitTrajectory<LimitState>,
    b: &LimitTrajectory<LimitState>,
    act: &Activation,
    grid: &TestGrid,
) -> Result<CouplingSeries> {
    let mut t = Vec::new();
    let mut q = Vec::new();
    let mut j = 0;
    for sa in &a.snapshots {
        // Snapshots are matched by time since the step sizes may differ.
        while j < b.snapshots.len() && b.snapshots[j].t < sa.t - 1e-12 {
            j += 1;
        }
        let Some(sb) = b.snapshots.get(j).filter(|s| (s.t - sa.t).abs() <= 1e-12) else {
            continue;
        };
        let (x, y) = match (&sa.state, &sb.state) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::contract("coupling distance needs stored states")),
        };
        t.push(sa.t);
        q.push(pair_distance(x, y, act, grid)?);
    }
    if t.is_empty() || a.initial().state.as_ref().map(pools_of) != b.initial().state.as_ref().map(pools_of) {
        return Err(Error::contract("trajectories do not share their initial pools"));
    }
    Ok(CouplingSeries { t, q })
}

fn pools_of(s: &LimitState) -> (&[f64], &[f64], &[f64]) {
    (&s.c, &s.w1, &s.w2)
}

fn pair_distance(a: &LimitState, b: &LimitState, act: &Activation, grid: &TestGrid) -> Result<f64> {
    if (a.d, a.m_c, a.m_w, a.m_u) != (b.d, b.m_c, b.m_w, b.m_u) {
        return Err(Error::contract("states have different particle counts"));
    }
    let (mc, mw, mu, d) = (a.m_c, a.m_w, a.m_u, a.d);
    let sq = |x: f64| x * x;
    let dc: Vec<f64> = (0..mc).map(|i| sq(a.c[i] - b.c[i])).collect();
    let dw1: Vec<f64> = (0..mw).map(|j| (0..d).map(|l| sq(a.w1[j * d + l] - b.w1[j * d + l])).sum()).collect();
    // Only the largest k-term can attain the sup.
    let dw2: Vec<f64> = (0..mc * mw)
        .map(|ij| (0..mu).map(|k| sq(a.w2[ij * mu + k] - b.w2[ij * mu + k])).fold(0.0, f64::max))
        .collect();
    let fa = compute_fields_batch(a, act, &grid.points, Exec::Sequential)?;
    let fb = compute_fields_batch(b, act, &grid.points, Exec::Sequential)?;
    let mut q = 0.0f64;
    for (x, y) in fa.iter().zip(&fb) {
        let dg = sq(x.g - y.g);
        for i in 0..mc {
            let zi = sq(x.z[i] - y.z[i]) + dc[i];
            for j in 0..mw {
                q = q.max(dw2[i * mw + j] + dw1[j] + sq(x.v[j] - y.v[j]) + zi + dg);
            }
        }
    }
    Ok(q)
}
