use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_net::ParamNorms;

/// Explicit time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Forward Euler, first order.
    #[default]
    Euler,
    /// Explicit trapezoid (Heun), second order.
    Heun,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Euler => 1,
            Scheme::Heun => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "heun" => Ok(Scheme::Heun),
            other => Err(Error::config(format!("unknown scheme `{other}` (expected euler or heun)"))),
        }
    }
}

/// Which steps are recorded. Step `0` and the final step always are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotPlan {
    /// Times that must fall on the `Δt` grid.
    Times(Vec<f64>),
    /// Every `k`-th step.
    Every(usize),
}

impl Default for SnapshotPlan {
    fn default() -> Self {
        SnapshotPlan::Times(vec![])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrateConfig {
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub snapshots: SnapshotPlan,
    pub max_horizon: f64,
    /// Store the full state in each snapshot.
    pub keep_states: bool,
}

impl IntegrateConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        IntegrateConfig {
            dt,
            horizon,
            scheme: Scheme::Euler,
            snapshots: SnapshotPlan::default(),
            max_horizon: 1.0e3,
            keep_states: false,
        }
    }

    /// Number of whole `Δt` steps reaching `t`, or an error when `t` is off the grid.
    pub fn steps_to(&self, t: f64) -> Result<usize> {
        let n = (t / self.dt).round();
        if !(n >= 0.0) || (n * self.dt - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::config(format!("time {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(n as usize)
    }

    fn marks(&self) -> Result<Vec<usize>> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon <= self.max_horizon) {
            return Err(Error::config(format!("horizon {} outside [0, {}]", self.horizon, self.max_horizon)));
        }
        let total = self.steps_to(self.horizon)?;
        let mut marks = vec![0, total];
        match &self.snapshots {
            SnapshotPlan::Times(ts) => {
                for &t in ts {
                    if !(t >= 0.0 && t <= self.horizon) {
                        return Err(Error::config(format!("snapshot time {t} outside [0, {}]", self.horizon)));
                    }
                    marks.push(self.steps_to(t)?);
                }
            }
            SnapshotPlan::Every(k) => {
                if *k == 0 {
                    return Err(Error::config("snapshot stride must be ≥ 1"));
                }
                marks.extend((0..total).step_by(*k));
            }
        }
        marks.sort_unstable();
        marks.dedup();
        Ok(marks)
    }
}

/// A particle system that can be stepped by [`integrate`].
pub trait LimitSystem: Sync {
    type State: Clone + Send + Sync;
    type Drift;

    fn time(&self, s: &Self::State) -> f64;
    fn set_time(&self, s: &mut Self::State, t: f64);
    /// Drift at `s` together with the loss at `s`, which falls out of the same pass.
    fn drift_and_loss(&self, s: &Self::State) -> Result<(Self::Drift, f64)>;
    fn loss(&self, s: &Self::State) -> Result<f64>;
    /// `s + h · k`, leaving the time untouched.
    fn advance(&self, s: &Self::State, h: f64, k: &Self::Drift) -> Self::State;
    fn outputs_on_grid(&self, s: &Self::State) -> Result<Vec<f64>>;
    fn norms(&self, s: &Self::State) -> ParamNorms;
    fn non_finite_group(&self, s: &Self::State) -> Option<&'static str>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSnapshot<S> {
    pub t: f64,
    pub step: usize,
    pub loss: f64,
    pub g_on_grid: Vec<f64>,
    pub norms: ParamNorms,
    /// Value of the optional annotation hook, e.g. the residual energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTrajectory<S> {
    pub dt: f64,
    pub scheme: Scheme,
    pub snapshots: Vec<LimitSnapshot<S>>,
}

impl<S> LimitTrajectory<S> {
    pub fn initial(&self) -> &LimitSnapshot<S> {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &LimitSnapshot<S> {
        self.snapshots.last().expect("trajectory always has an initial snapshot")
    }

    /// The snapshot recorded at step `step`, if any.
    pub fn at_step(&self, step: usize) -> Option<&LimitSnapshot<S>> {
        self.snapshots.binary_search_by_key(&step, |s| s.step).ok().map(|i| &self.snapshots[i])
    }

    pub fn max_norm_total(&self) -> f64 {
        self.snapshots.iter().map(|s| s.norms.total()).fold(0.0, f64::max)
    }
}

/// Hook evaluated on the state at every snapshot.
pub type Annotate<'a, S> = &'a (dyn Fn(&S) -> Result<f64> + Sync);

/// Integrates `sys` from `s0` over `[0, T]` with a fixed step.
///
/// Times are `step · Δt`, never accumulated. A non-finite state aborts with
/// [`Error::Divergence`].
pub fn integrate<Sys: LimitSystem>(
    sys: &Sys,
    s0: &Sys::State,
    cfg: &IntegrateConfig,
    annotate: Option<Annotate<'_, Sys::State>>,
) -> Result<LimitTrajectory<Sys::State>> {
    let marks = cfg.marks()?;
    let total = *marks.last().expect("marks contain 0");
    let dt = cfg.dt;
    let mut state = s0.clone();
    sys.set_time(&mut state, 0.0);
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut next = 0;
    let record = |state: &Sys::State, step: usize, loss: f64| -> Result<LimitSnapshot<Sys::State>> {
        Ok(LimitSnapshot {
            t: step as f64 * dt,
            step,
            loss,
            g_on_grid: sys.outputs_on_grid(state)?,
            norms: sys.norms(state),
            annotation: annotate.map(|f| f(state)).transpose()?,
            state: cfg.keep_states.then(|| state.clone()),
        })
    };
    for k in 0..total {
        let (k1, loss) = sys.drift_and_loss(&state)?;
        if next < marks.len() && marks[next] == k {
            snapshots.push(record(&state, k, loss)?);
            next += 1;
        }
        state = match cfg.scheme {
            Scheme::Euler => sys.advance(&state, dt, &k1),
            Scheme::Heun => {
                let pred = sys.advance(&state, dt, &k1);
                let (k2, _) = sys.drift_and_loss(&pred)?;
                let half = sys.advance(&state, 0.5 * dt, &k1);
                sys.advance(&half, 0.5 * dt, &k2)
            }
        };
        sys.set_time(&mut state, (k + 1) as f64 * dt);
        if let Some(group) = sys.non_finite_group(&state) {
            return Err(Error::Divergence { step: k + 1, time: (k + 1) as f64 * dt, group });
        }
    }
    let loss = sys.loss(&state)?;
    snapshots.push(record(&state, total, loss)?);
    Ok(LimitTrajectory { dt, scheme: cfg.scheme, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `x' = −x`, one coordinate.
    struct Decay;

    impl LimitSystem for Decay {
        type State = (f64, f64);
        type Drift = f64;
        fn time(&self, s: &(f64, f64)) -> f64 {
            s.0
        }
        fn set_time(&self, s: &mut (f64, f64), t: f64) {
            s.0 = t;
        }
        fn drift_and_loss(&self, s: &(f64, f64)) -> Result<(f64, f64)> {
            Ok((-s.1, self.loss(s)?))
        }
        fn loss(&self, s: &(f64, f64)) -> Result<f64> {
            Ok(0.5 * s.1 * s.1)
        }
        fn advance(&self, s: &(f64, f64), h: f64, k: &f64) -> (f64, f64) {
            (s.0, s.1 + h * k)
        }
        fn outputs_on_grid(&self, s: &(f64, f64)) -> Result<Vec<f64>> {
            Ok(vec![s.1])
        }
        fn norms(&self, s: &(f64, f64)) -> ParamNorms {
            ParamNorms { c: s.1.abs(), ..Default::default() }
        }
        fn non_finite_group(&self, s: &(f64, f64)) -> Option<&'static str> {
            (!s.1.is_finite()).then_some("x")
        }
    }

    fn final_value(dt: f64, scheme: Scheme) -> f64 {
        let mut cfg = IntegrateConfig::new(dt, 1.0);
        cfg.scheme = scheme;
        integrate(&Decay, &(0.0, 1.0), &cfg, None).unwrap().last().g_on_grid[0]
    }

    #[test]
    fn euler_and_heun_match_closed_forms() {
        assert!((final_value(0.1, Scheme::Euler) - 0.9f64.powi(10)).abs() < 1e-14);
        assert!((final_value(0.1, Scheme::Heun) - 0.905f64.powi(10)).abs() < 1e-14);
    }

    #[test]
    fn observed_orders() {
        let exact = (-1.0f64).exp();
        for (scheme, p) in [(Scheme::Euler, 1.0), (Scheme::Heun, 2.0)] {
            let e1 = (final_value(0.01, scheme) - exact).abs();
            let e2 = (final_value(0.005, scheme) - exact).abs();
            let order = (e1 / e2).log2();
            assert!((order - p).abs() < 0.05, "{scheme:?}: {order}");
        }
    }

    #[test]
    fn snapshot_plans() {
        let mut cfg = IntegrateConfig::new(0.25, 1.0);
        cfg.snapshots = SnapshotPlan::Times(vec![0.5]);
        let traj = integrate(&Decay, &(0.0, 1.0), &cfg, None).unwrap();
        assert_eq!(traj.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(traj.at_step(2).unwrap().t, 0.5);
        cfg.snapshots = SnapshotPlan::Every(1);
        cfg.keep_states = true;
        let traj = integrate(&Decay, &(0.0, 1.0), &cfg, Some(&|s: &(f64, f64)| Ok(s.1 * s.1))).unwrap();
        assert_eq!(traj.snapshots.len(), 5);
        assert_eq!(traj.snapshots[1].annotation, Some(0.75f64 * 0.75));
        assert_eq!(traj.snapshots[1].state, Some((0.25, 0.75)));
        cfg.snapshots = SnapshotPlan::Times(vec![0.3]);
        assert!(integrate(&Decay, &(0.0, 1.0), &cfg, None).is_err());
        cfg.snapshots = SnapshotPlan::Every(0);
        assert!(integrate(&Decay, &(0.0, 1.0), &cfg, None).is_err());
        assert!(integrate(&Decay, &(0.0, 1.0), &IntegrateConfig::new(0.0, 1.0), None).is_err());
        assert!(integrate(&Decay, &(0.0, 1.0), &IntegrateConfig::new(0.1, 2e3), None).is_err());
    }

    #[test]
    fn zero_horizon() {
        let traj = integrate(&Decay, &(0.0, 1.0), &IntegrateConfig::new(0.1, 0.0), None).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.last().loss, 0.5);
    }
}
