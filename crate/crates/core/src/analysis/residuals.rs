use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::limit_ode::{compute_fields_batch, LimitState, LimitTrajectory};

/// Per-particle projections of the loss gradient at a limit state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `R₁(c_i)`, length `M_c`.
    pub r1: Vec<f64>,
    /// `R₂(w_j)`, `M_w × d`.
    pub r2: Vec<f64>,
    /// `R₃(c_i, w_j)`, `M_c × M_w`.
    pub r3: Vec<f64>,
    /// `mean R₁² + mean ‖R₂‖² + mean R₃²`.
    pub s: f64,
}

/// Residuals with `h = y − g_t(x)`, accumulated sample by sample.
///
/// With particle averages these are exactly the drifts of the limit system,
/// and `dL̄/dt = −S` along its flow.
pub fn stationarity_residuals(state: &LimitState, data: &Dataset, act: &Activation) -> Result<ResidualReport> {
    if data.dim() != state.d {
        return Err(Error::contract("dataset dimension does not match the state"));
    }
    let (mc, mw, d) = (state.m_c, state.m_w, state.d);
    let fields = compute_fields_batch(state, act, data.inputs(), Exec::Sequential)?;
    let mut r1 = vec![0.0; mc];
    let mut r2 = vec![0.0; mw * d];
    let mut r3 = vec![0.0; mc * mw];
    for (s, f) in fields.iter().enumerate() {
        let x = data.input(s);
        let h = data.target(s) - f.g;
        for i in 0..mc {
            r1[i] += h * f.h2[i];
            let a = h * state.c[i] * f.s2[i];
            for j in 0..mw {
                r3[i * mw + j] += a * f.h1[j];
            }
        }
        for j in 0..mw {
            let b = h * f.v[j] * f.s1[j];
            for l in 0..d {
                r2[j * d + l] += b * x[l];
            }
        }
    }
    let n = data.len() as f64;
    for r in r1.iter_mut().chain(r2.iter_mut()).chain(r3.iter_mut()) {
        *r /= n;
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let s = sq(&r1) / mc as f64 + sq(&r2) / mw as f64 + sq(&r3) / (mc * mw) as f64;
    Ok(ResidualReport { r1, r2, r3, s })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPoint {
    pub t: f64,
    pub loss: f64,
    /// Central difference of `L̄`; absent at the two end points.
    pub numeric_deriv: Option<f64>,
    pub minus_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub dt: f64,
    pub points: Vec<LyapunovPoint>,
    /// `max |numeric dL̄/dt + S|` over interior points.
    pub max_identity_error: f64,
    /// `max_j (L̄(t_{j+1}) − L̄(t_j))`; non-positive for a monotone run.
    pub max_increase: f64,
}

impl LyapunovSeries {
    /// Steps where `L̄` rises by more than `tol`.
    pub fn increases_above(&self, tol: f64) -> usize {
        self.points.windows(2).filter(|w| w[1].loss - w[0].loss > tol).count()
    }
}

/// Compares the numeric loss derivative with `−S` along a trajectory.
///
/// `S` is taken from each snapshot's annotation when present, otherwise
/// recomputed from the stored state. Snapshots must be uniformly spaced.
pub fn lyapunov_check(traj: &LimitTrajectory<LimitState>, data: &Dataset, act: &Activation) -> Result<LyapunovSeries> {
    let snaps = &traj.snapshots;
    let spacing = if snaps.len() > 1 { snaps[1].t - snaps[0].t } else { traj.dt };
    let stride = if snaps.len() > 1 { snaps[1].step - snaps[0].step } else { 1 };
    if snaps.windows(2).any(|w| w[1].step - w[0].step != stride) {
        return Err(Error::contract("lyapunov check needs uniformly spaced snapshots"));
    }
    let s_values = snaps
        .iter()
        .map(|s| match (s.annotation, &s.state) {
            (Some(v), _) => Ok(v),
            (None, Some(st)) => Ok(stationarity_residuals(st, data, act)?.s),
            (None, None) => Err(Error::contract("snapshot carries neither residual energy nor state")),
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = snaps.len();
    let mut points = Vec::with_capacity(n);
    let mut max_err = 0.0f64;
    for j in 0..n {
        let numeric_deriv = (j > 0 && j + 1 < n).then(|| (snaps[j + 1].loss - snaps[j - 1].loss) / (2.0 * spacing));
        if let Some(dl) = numeric_deriv {
            max_err = max_err.max((dl + s_values[j]).abs());
        }
        points.push(LyapunovPoint { t: snaps[j].t, loss: snaps[j].loss, numeric_deriv, minus_s: -s_values[j] });
    }
    let max_increase = snaps.windows(2).map(|w| w[1].loss - w[0].loss).fold(f64::NEG_INFINITY, f64::max);
    Ok(LyapunovSeries { dt: spacing, points, max_identity_error: max_err, max_increase })
}
